//! Domain records shared by every stage of the placer.
//!
//! Coordinates are component centers. The length unit is abstract: the
//! floorplanning benchmarks are unitless and board cases use mils.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Top,
    Bottom,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layer::Top => f.write_str("top"),
            Layer::Bottom => f.write_str("bottom"),
        }
    }
}

/// Discrete orientation: `k` quarter turns counter-clockwise, `k` in `0..4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Orientation(u8);

impl Orientation {
    pub const ALL: [Orientation; 4] = [Orientation(0), Orientation(1), Orientation(2), Orientation(3)];

    pub fn new(quarter_turns: u8) -> Option<Self> {
        (quarter_turns < 4).then_some(Orientation(quarter_turns))
    }

    /// Wraps any integer onto `0..4`.
    pub fn wrapping(quarter_turns: usize) -> Self {
        Orientation((quarter_turns % 4) as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn rotated(self, quarter_turns: usize) -> Self {
        Self::wrapping(self.index() + quarter_turns)
    }

    /// True for 90 and 270 degrees, where width and height trade places.
    pub fn is_transposed(self) -> bool {
        self.0 % 2 == 1
    }
}

impl TryFrom<u8> for Orientation {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, Self::Error> {
        Orientation::new(value).ok_or_else(|| format!("orientation {value} is outside 0..=3"))
    }
}

impl From<Orientation> for u8 {
    fn from(o: Orientation) -> u8 {
        o.0
    }
}

/// Footprint of a `w` x `h` rectangle after applying orientation `r`.
pub fn effective_dims(width: f64, height: f64, r: Orientation) -> (f64, f64) {
    if r.is_transposed() {
        (height, width)
    } else {
        (width, height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub id: String,
    pub width: f64,
    pub height: f64,
    pub x: f64,
    pub y: f64,
    pub orientation: Orientation,
    pub layer: Layer,
    /// IC pin this component must sit next to, if it belongs to a close-to-pin net.
    pub close_to_pin_target: Option<String>,
    pub cluster: Option<usize>,
    /// Set for components pinned onto a noise pin during bottom initialization.
    pub excluded_from_global: bool,
}

impl Component {
    pub fn new(id: impl Into<String>, width: f64, height: f64, layer: Layer) -> Self {
        Component {
            id: id.into(),
            width,
            height,
            x: 0.0,
            y: 0.0,
            orientation: Orientation::default(),
            layer,
            close_to_pin_target: None,
            cluster: None,
            excluded_from_global: false,
        }
    }

    pub fn effective_dims(&self) -> (f64, f64) {
        effective_dims(self.width, self.height, self.orientation)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Net {
    pub id: String,
    /// Component ids or IC pin ids.
    pub members: Vec<String>,
    #[serde(default, rename = "closetopin")]
    pub close_to_pin: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcPin {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub layer: Layer,
}

/// Width and height of a region anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outline {
    pub width: f64,
    pub height: f64,
}

impl Outline {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::Model(format!(
                "outline must have positive finite size, got {width} x {height}"
            )));
        }
        Ok(Outline { width, height })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn rect(&self) -> Rect {
        Rect::new(0.0, 0.0, self.width, self.height)
    }
}

/// Axis-aligned rectangle given by its lower-left and upper-right corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn centered(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Rect::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    /// Strict interior test; boundary points are outside.
    pub fn strictly_contains_point(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.x1 <= self.x1 && other.y0 >= self.y0 && other.y1 <= self.y1
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let w = self.x1.min(other.x1) - self.x0.max(other.x0);
        let h = self.y1.min(other.y1) - self.y0.max(other.y0);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }
}

/// A minimum-gap override between two components. Each side is either an
/// exact component id or a class pattern ending in `*` (`"C*"` matches every
/// id starting with `C`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRule {
    pub a: String,
    pub b: String,
    pub gap: f64,
}

impl PairRule {
    fn side_matches(pattern: &str, id: &str) -> bool {
        match pattern.strip_suffix('*') {
            Some(prefix) => id.starts_with(prefix),
            None => pattern == id,
        }
    }

    pub fn matches(&self, a: &str, b: &str) -> bool {
        (Self::side_matches(&self.a, a) && Self::side_matches(&self.b, b))
            || (Self::side_matches(&self.a, b) && Self::side_matches(&self.b, a))
    }

    fn specificity(&self) -> usize {
        [&self.a, &self.b].iter().filter(|p| !p.ends_with('*')).count()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacingRules {
    #[serde(default)]
    pub default_gap: f64,
    #[serde(default, rename = "pairs")]
    pub pair_overrides: Vec<PairRule>,
}

impl SpacingRules {
    pub fn uniform(gap: f64) -> Self {
        SpacingRules {
            default_gap: gap,
            pair_overrides: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.default_gap >= 0.0 && self.default_gap.is_finite()) {
            return Err(Error::schema("spacing.default_gap", "must be a finite value >= 0"));
        }
        for (i, rule) in self.pair_overrides.iter().enumerate() {
            if !(rule.gap >= 0.0 && rule.gap.is_finite()) {
                return Err(Error::schema(
                    format!("spacing.pairs[{i}].gap"),
                    "must be a finite value >= 0",
                ));
            }
        }
        Ok(())
    }

    /// Minimum edge gap between components `a` and `b`. Exact id pairs win
    /// over class patterns; among equally specific matches the largest gap
    /// applies.
    pub fn gap(&self, a: &str, b: &str) -> f64 {
        let mut best: Option<(usize, f64)> = None;
        for rule in self.pair_overrides.iter().filter(|r| r.matches(a, b)) {
            let key = (rule.specificity(), rule.gap);
            best = match best {
                Some(cur) if cur.0 > key.0 || (cur.0 == key.0 && cur.1 >= key.1) => Some(cur),
                _ => Some(key),
            };
        }
        best.map_or(self.default_gap, |(_, g)| g)
    }

    pub fn max_gap(&self) -> f64 {
        self.pair_overrides
            .iter()
            .map(|r| r.gap)
            .fold(self.default_gap, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerMode {
    TopOnly,
    BottomOnly,
    TwoLayer,
}

/// A resolved net endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Component(usize),
    Pin(usize),
}

#[derive(Debug, Clone)]
pub struct PlacementProblem {
    components: Vec<Component>,
    nets: Vec<Net>,
    ic_pins: Vec<IcPin>,
    ic_outline: Outline,
    board_outline: Option<Outline>,
    spacing_rules: SpacingRules,
    layer_mode: LayerMode,
    resolved: Vec<Vec<Endpoint>>,
    component_index: HashMap<String, usize>,
    pin_index: HashMap<String, usize>,
}

impl PlacementProblem {
    /// Validates the records, resolves every net member and infers the layer
    /// mode from the component layers. Close-to-pin targets are filled in from
    /// the close-to-pin nets.
    pub fn new(
        mut components: Vec<Component>,
        nets: Vec<Net>,
        ic_pins: Vec<IcPin>,
        ic_outline: Outline,
        board_outline: Option<Outline>,
        spacing_rules: SpacingRules,
    ) -> Result<Self> {
        Outline::new(ic_outline.width, ic_outline.height)?;
        spacing_rules.validate()?;

        let mut component_index = HashMap::with_capacity(components.len());
        for (i, c) in components.iter().enumerate() {
            if !(c.width > 0.0 && c.height > 0.0 && c.width.is_finite() && c.height.is_finite()) {
                return Err(Error::schema(
                    format!("components[{i}] ({})", c.id),
                    "width and height must be positive",
                ));
            }
            if component_index.insert(c.id.clone(), i).is_some() {
                return Err(Error::schema(
                    format!("components[{i}].id"),
                    format!("duplicate id `{}`", c.id),
                ));
            }
        }
        let mut pin_index = HashMap::with_capacity(ic_pins.len());
        let ic_rect = ic_outline.rect();
        for (i, p) in ic_pins.iter().enumerate() {
            if component_index.contains_key(&p.id) || pin_index.insert(p.id.clone(), i).is_some() {
                return Err(Error::schema(
                    format!("ic.pins[{i}].id"),
                    format!("duplicate id `{}`", p.id),
                ));
            }
            if !ic_rect.contains_point(p.x, p.y) {
                return Err(Error::schema(
                    format!("ic.pins[{i}] ({})", p.id),
                    "pin lies outside the IC outline",
                ));
            }
        }

        let mut resolved = Vec::with_capacity(nets.len());
        for (ni, net) in nets.iter().enumerate() {
            if net.members.is_empty() {
                return Err(Error::schema(format!("nets[{ni}].members"), "net has no members"));
            }
            let mut eps = Vec::with_capacity(net.members.len());
            for m in &net.members {
                if let Some(&ci) = component_index.get(m) {
                    eps.push(Endpoint::Component(ci));
                } else if let Some(&pi) = pin_index.get(m) {
                    eps.push(Endpoint::Pin(pi));
                } else {
                    return Err(Error::Reference {
                        name: m.clone(),
                        context: format!("nets[{ni}] ({})", net.id),
                    });
                }
            }
            if net.close_to_pin {
                let pins: Vec<usize> = eps
                    .iter()
                    .filter_map(|e| match e {
                        Endpoint::Pin(p) => Some(*p),
                        _ => None,
                    })
                    .collect();
                if pins.len() != 1 {
                    return Err(Error::schema(
                        format!("nets[{ni}] ({})", net.id),
                        format!("close-to-pin net must contain exactly one IC pin, found {}", pins.len()),
                    ));
                }
                for e in &eps {
                    if let Endpoint::Component(ci) = e {
                        components[*ci].close_to_pin_target = Some(ic_pins[pins[0]].id.clone());
                    }
                }
            }
            resolved.push(eps);
        }

        let has_top = components.iter().any(|c| c.layer == Layer::Top);
        let has_bottom = components.iter().any(|c| c.layer == Layer::Bottom);
        let layer_mode = match (has_top, has_bottom) {
            (true, true) => LayerMode::TwoLayer,
            (true, false) => LayerMode::TopOnly,
            _ => LayerMode::BottomOnly,
        };

        Ok(PlacementProblem {
            components,
            nets,
            ic_pins,
            ic_outline,
            board_outline,
            spacing_rules,
            layer_mode,
            resolved,
            component_index,
            pin_index,
        })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn ic_pins(&self) -> &[IcPin] {
        &self.ic_pins
    }

    pub fn ic_outline(&self) -> Outline {
        self.ic_outline
    }

    pub fn board_outline(&self) -> Option<Outline> {
        self.board_outline
    }

    pub fn spacing_rules(&self) -> &SpacingRules {
        &self.spacing_rules
    }

    pub fn layer_mode(&self) -> LayerMode {
        self.layer_mode
    }

    /// Net members resolved to component and pin indices, parallel to `nets()`.
    pub fn resolved_nets(&self) -> &[Vec<Endpoint>] {
        &self.resolved
    }

    pub fn component_index(&self, id: &str) -> Option<usize> {
        self.component_index.get(id).copied()
    }

    pub fn pin_index(&self, id: &str) -> Option<usize> {
        self.pin_index.get(id).copied()
    }

    pub fn layer_components(&self, layer: Layer) -> Vec<usize> {
        (0..self.components.len())
            .filter(|&i| self.components[i].layer == layer)
            .collect()
    }

    pub fn has_layer(&self, layer: Layer) -> bool {
        self.components.iter().any(|c| c.layer == layer)
    }

    /// Nets touching component `ci`, by index.
    pub fn nets_of(&self, ci: usize) -> Vec<usize> {
        self.resolved
            .iter()
            .enumerate()
            .filter(|(_, eps)| eps.contains(&Endpoint::Component(ci)))
            .map(|(ni, _)| ni)
            .collect()
    }

    /// For each component, the nets it belongs to.
    pub fn component_nets(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.components.len()];
        for (ni, eps) in self.resolved.iter().enumerate() {
            for e in eps {
                if let Endpoint::Component(ci) = e {
                    if out[*ci].last() != Some(&ni) {
                        out[*ci].push(ni);
                    }
                }
            }
        }
        out
    }

    /// Copy of the problem with a new component state (positions, flags).
    /// Ids, sizes and layers must be unchanged.
    pub fn with_components(&self, components: Vec<Component>) -> Self {
        debug_assert_eq!(components.len(), self.components.len());
        PlacementProblem {
            components,
            ..self.clone()
        }
    }

    pub fn positions(&self) -> (Vec<f64>, Vec<f64>, Vec<Orientation>) {
        (
            self.components.iter().map(|c| c.x).collect(),
            self.components.iter().map(|c| c.y).collect(),
            self.components.iter().map(|c| c.orientation).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub wirelength: f64,
    pub overlap: f64,
    pub boundary: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LegalityReport {
    pub total_overlap_area: f64,
    pub out_of_bounds_length: f64,
    pub spacing_violations: usize,
    pub close_to_pin_violations: usize,
    /// Components the out-of-bounds repair could not fit anywhere.
    #[serde(default)]
    pub unplaceable: Vec<String>,
    /// Close-to-pin components left beyond their threshold.
    #[serde(default)]
    pub close_to_pin_failed: Vec<String>,
}

impl LegalityReport {
    pub fn is_legal(&self) -> bool {
        self.total_overlap_area == 0.0
            && self.out_of_bounds_length == 0.0
            && self.spacing_violations == 0
            && self.close_to_pin_violations == 0
    }
}

/// Coordinates and orientations for every component of a problem, in
/// problem order, with the objective and legality of the layer it came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlacementSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub r: Vec<Orientation>,
    pub objective: ObjectiveValue,
    pub legality: LegalityReport,
}

impl PlacementSolution {
    pub fn from_problem(problem: &PlacementProblem) -> Self {
        let (x, y, r) = problem.positions();
        PlacementSolution {
            x,
            y,
            r,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Writes the coordinates back into a copy of the problem's components.
    pub fn apply(&self, problem: &PlacementProblem) -> Vec<Component> {
        let mut comps = problem.components().to_vec();
        for (i, c) in comps.iter_mut().enumerate() {
            c.x = self.x[i];
            c.y = self.y[i];
            c.orientation = self.r[i];
        }
        comps
    }
}
