//! Initial coordinates for global placement.
//!
//! Top layer: components start next to the IC pin they connect to, pushed
//! out of the IC body across its nearest edge, inside an artificial contour
//! around the IC. Bottom layer: components attach to pins of their nets and
//! inherit the pins' DBSCAN cluster; components caught on noise pins are
//! fixed there and excluded from global placement.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::cluster::{cluster_count, dbscan, DbscanParams, Label};
use crate::model::{Endpoint, Layer, PlacementProblem, Rect};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArtificialContour {
    pub width: f64,
    pub height: f64,
    /// The contour placed concentric with the IC, in IC coordinates.
    pub rect: Rect,
}

impl ArtificialContour {
    /// Contour of area `k_c * cells_area + ic_area` with the IC's aspect ratio.
    pub fn around_ic(ic_width: f64, ic_height: f64, cells_area: f64, k_c: f64) -> Self {
        let total = k_c * cells_area + ic_width * ic_height;
        let aspect = ic_width / ic_height;
        let width = (total * aspect).sqrt();
        let height = (total / aspect).sqrt();
        let (cx, cy) = (ic_width / 2.0, ic_height / 2.0);
        ArtificialContour {
            width,
            height,
            rect: Rect::centered(cx, cy, width, height),
        }
    }

    /// Grows the contour, keeping its aspect ratio, until the ring between
    /// it and the IC is at least `margin` wide on every side.
    pub fn with_min_margin(self, ic_width: f64, ic_height: f64, margin: f64) -> Self {
        let scale = 1.0 + 2.0 * margin / ic_width.min(ic_height);
        if self.width >= scale * ic_width && self.height >= scale * ic_height {
            return self;
        }
        let (width, height) = (scale * ic_width, scale * ic_height);
        ArtificialContour {
            width,
            height,
            rect: Rect::centered(ic_width / 2.0, ic_height / 2.0, width, height),
        }
    }
}

/// Side of the IC, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
    Top,
    Bottom,
}

impl Side {
    pub const ORDER: [Side; 4] = [Side::Right, Side::Left, Side::Top, Side::Bottom];

    fn index(self) -> usize {
        self as usize
    }
}

/// Distances from `(x, y)` to the right, left, top and bottom IC edges.
pub fn edge_distances(ic: &Rect, x: f64, y: f64) -> [f64; 4] {
    [ic.x1 - x, x - ic.x0, ic.y1 - y, y - ic.y0]
}

/// Nearest IC edge to `(x, y)`; ties break right, left, top, bottom.
pub fn nearest_side(ic: &Rect, x: f64, y: f64) -> Side {
    let d = edge_distances(ic, x, y);
    let mut best = Side::Right;
    for s in Side::ORDER {
        if d[s.index()] < d[best.index()] {
            best = s;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct TopInit {
    /// Coordinates for every component in problem order; only top-layer
    /// entries are changed.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub contour: ArtificialContour,
}

/// The artificial contour for the top-layer components of `problem`. The
/// ring around the IC is kept wide enough for the largest component plus
/// the widest spacing rule, so a thin ring around a large IC stays usable.
pub fn top_contour(problem: &PlacementProblem, k_c: f64) -> ArtificialContour {
    let comps = problem.components();
    let ic = problem.ic_outline();
    let top = problem.layer_components(Layer::Top);
    let cells_area: f64 = top.iter().map(|&c| comps[c].area()).sum();
    let largest = top.iter().map(|&c| comps[c].width.max(comps[c].height)).fold(0.0, f64::max);
    let margin = if top.is_empty() { 0.0 } else { largest + problem.spacing_rules().max_gap() };
    ArtificialContour::around_ic(ic.width, ic.height, cells_area, k_c).with_min_margin(ic.width, ic.height, margin)
}

pub fn top_initialize(problem: &PlacementProblem, k_c: f64) -> TopInit {
    let comps = problem.components();
    let pins = problem.ic_pins();
    let ic = problem.ic_outline().rect();
    let top = problem.layer_components(Layer::Top);
    let contour = top_contour(problem, k_c);

    let (mut x, mut y, _) = problem.positions();
    let comp_nets = problem.component_nets();
    let mut side_load = [0usize; 4];
    let mut unpinned = Vec::new();

    for &ci in &top {
        let mut chosen: Option<usize> = None;
        let mut min_dis = f64::INFINITY;
        for &ni in &comp_nets[ci] {
            let eps = &problem.resolved_nets()[ni];
            let net_pins = eps.iter().filter_map(|e| match *e {
                Endpoint::Pin(p) => Some(p),
                _ => None,
            });
            if problem.nets()[ni].close_to_pin {
                chosen = net_pins.clone().next();
                break;
            }
            for p in net_pins {
                let dis = edge_distances(&ic, pins[p].x, pins[p].y)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                if dis <= min_dis {
                    min_dis = dis;
                    chosen = Some(p);
                }
            }
        }
        let Some(p) = chosen else {
            unpinned.push(ci);
            continue;
        };
        let (px, py) = (pins[p].x, pins[p].y);
        let (w, h) = comps[ci].effective_dims();
        let side = nearest_side(&ic, px, py);
        side_load[side.index()] += 1;
        let (nx, ny) = push_outside(&ic, side, px, py, w, h);
        x[ci] = nx;
        y[ci] = ny;
    }

    for ci in unpinned {
        let mut side = Side::Right;
        for s in Side::ORDER {
            if side_load[s.index()] < side_load[side.index()] {
                side = s;
            }
        }
        side_load[side.index()] += 1;
        let c = &contour.rect;
        let (cx, cy) = ic.center();
        let (nx, ny) = match side {
            Side::Right => ((ic.x1 + c.x1) / 2.0, cy),
            Side::Left => ((ic.x0 + c.x0) / 2.0, cy),
            Side::Top => (cx, (ic.y1 + c.y1) / 2.0),
            Side::Bottom => (cx, (ic.y0 + c.y0) / 2.0),
        };
        x[ci] = nx;
        y[ci] = ny;
    }

    TopInit { x, y, contour }
}

/// Center for a `w` x `h` component touching `side` of the IC from outside,
/// aligned with `(px, py)` along that side.
pub fn push_outside(ic: &Rect, side: Side, px: f64, py: f64, w: f64, h: f64) -> (f64, f64) {
    match side {
        Side::Right => (ic.x1 + w / 2.0, py),
        Side::Left => (ic.x0 - w / 2.0, py),
        Side::Top => (px, ic.y1 + h / 2.0),
        Side::Bottom => (px, ic.y0 - h / 2.0),
    }
}

#[derive(Debug, Clone)]
pub struct ClusterAssignment {
    /// Label of every IC pin in problem order; pins not used by the bottom
    /// layer are noise.
    pub pin_labels: Vec<Label>,
    /// Cluster of every component in problem order; `None` for top-layer and
    /// excluded components.
    pub component_cluster: Vec<Option<usize>>,
    pub k: usize,
}

impl ClusterAssignment {
    /// Component indices of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (ci, c) in self.component_cluster.iter().enumerate() {
            if let Some(c) = c {
                out[*c].push(ci);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BottomInit {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub assignment: ClusterAssignment,
    pub excluded: Vec<bool>,
    /// Pin each bottom component is attached to.
    pub attachment: Vec<Option<usize>>,
}

/// Pins that appear in a net touching any bottom-layer component, ascending.
pub fn bottom_pins(problem: &PlacementProblem) -> Vec<usize> {
    let mut out = BTreeSet::new();
    for eps in problem.resolved_nets() {
        let touches_bottom = eps
            .iter()
            .any(|e| matches!(e, Endpoint::Component(c) if problem.components()[*c].layer == Layer::Bottom));
        if touches_bottom {
            out.extend(eps.iter().filter_map(|e| match *e {
                Endpoint::Pin(p) => Some(p),
                _ => None,
            }));
        }
    }
    out.into_iter().collect()
}

pub fn bottom_initialize<R: Rng + ?Sized>(
    problem: &PlacementProblem,
    params: Option<DbscanParams>,
    rng: &mut R,
) -> BottomInit {
    let comps = problem.components();
    let pins = problem.ic_pins();
    let nets = problem.resolved_nets();
    let comp_nets = problem.component_nets();
    let bottom = problem.layer_components(Layer::Bottom);

    let ps = bottom_pins(problem);
    let pts: Vec<(f64, f64)> = ps.iter().map(|&p| (pins[p].x, pins[p].y)).collect();
    let params = params.unwrap_or_else(|| DbscanParams::heuristic(&pts));
    let labels = if pts.is_empty() { Vec::new() } else { dbscan(&pts, &params) };
    let mut pin_labels = vec![Label::Noise; pins.len()];
    for (k, &p) in ps.iter().enumerate() {
        pin_labels[p] = labels[k];
    }
    let mut k = cluster_count(&labels);

    let pins_of = |ci: usize| -> Vec<usize> {
        let set: BTreeSet<usize> = comp_nets[ci]
            .iter()
            .flat_map(|&ni| nets[ni].iter())
            .filter_map(|e| match *e {
                Endpoint::Pin(p) => Some(p),
                _ => None,
            })
            .collect();
        set.into_iter().collect()
    };

    // Phase 1: attach each component to a random pin of its nets.
    let mut attachment: Vec<Option<usize>> = vec![None; comps.len()];
    for &ci in &bottom {
        let candidates = pins_of(ci);
        attachment[ci] = candidates.choose(rng).copied();
    }

    // Phase 2: unselected noise pins grab a component from their nets.
    let mut serving_noise = vec![false; comps.len()];
    for &ci in &bottom {
        if let Some(p) = attachment[ci] {
            if pin_labels[p] == Label::Noise {
                serving_noise[ci] = true;
            }
        }
    }
    let mut selected: Vec<usize> = vec![0; pins.len()];
    for a in attachment.iter().flatten() {
        selected[*a] += 1;
    }
    for &p in &ps {
        if pin_labels[p] != Label::Noise || selected[p] > 0 {
            continue;
        }
        let candidates: Vec<usize> = nets
            .iter()
            .filter(|eps| eps.contains(&Endpoint::Pin(p)))
            .flat_map(|eps| eps.iter())
            .filter_map(|e| match *e {
                Endpoint::Component(c) if comps[c].layer == Layer::Bottom && !serving_noise[c] => Some(c),
                _ => None,
            })
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if let Some(&c) = candidates.choose(rng) {
            if let Some(old) = attachment[c] {
                selected[old] -= 1;
            }
            attachment[c] = Some(p);
            selected[p] += 1;
            serving_noise[c] = true;
        }
    }

    // Phase 3: close-to-pin components take their pin when it is free.
    for (ni, net) in problem.nets().iter().enumerate() {
        if !net.close_to_pin {
            continue;
        }
        let Some(p) = nets[ni].iter().find_map(|e| match *e {
            Endpoint::Pin(p) => Some(p),
            _ => None,
        }) else {
            continue;
        };
        for e in &nets[ni] {
            let Endpoint::Component(c) = *e else { continue };
            if comps[c].layer != Layer::Bottom {
                continue;
            }
            let taken_by_other = selected[p] > usize::from(attachment[c] == Some(p));
            if !taken_by_other && attachment[c] != Some(p) {
                if let Some(old) = attachment[c] {
                    selected[old] -= 1;
                }
                attachment[c] = Some(p);
                selected[p] += 1;
            }
        }
    }

    let (mut x, mut y, _) = problem.positions();
    let mut excluded = vec![false; comps.len()];
    let mut component_cluster = vec![None; comps.len()];
    let ic = problem.ic_outline().rect();
    let mut orphans = Vec::new();
    for &ci in &bottom {
        match attachment[ci] {
            Some(p) => {
                x[ci] = pins[p].x;
                y[ci] = pins[p].y;
                match pin_labels[p] {
                    Label::Noise => excluded[ci] = true,
                    Label::Cluster(c) => component_cluster[ci] = Some(c),
                }
            }
            None => orphans.push(ci),
        }
    }
    if !orphans.is_empty() {
        // Components with no pin at all start at the IC center, in the
        // cluster whose pins' centroid is closest to it.
        let (cx, cy) = ic.center();
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for &p in &ps {
            if let Label::Cluster(c) = pin_labels[p] {
                sums[c].0 += pins[p].x;
                sums[c].1 += pins[p].y;
                sums[c].2 += 1;
            }
        }
        let nearest = (0..k).min_by(|&a, &b| {
            let d = |c: usize| {
                let (sx, sy, n) = sums[c];
                (sx / n as f64 - cx).hypot(sy / n as f64 - cy)
            };
            d(a).total_cmp(&d(b))
        });
        let cluster = nearest.unwrap_or_else(|| {
            k = 1;
            0
        });
        for ci in orphans {
            x[ci] = cx;
            y[ci] = cy;
            component_cluster[ci] = Some(cluster);
        }
    }

    BottomInit {
        x,
        y,
        assignment: ClusterAssignment {
            pin_labels,
            component_cluster,
            k,
        },
        excluded,
        attachment,
    }
}

/// Uniformly random centers keeping every component of `layer` inside
/// `region` (used when no pins guide the start, e.g. floorplan benchmarks).
pub fn random_initialize<R: Rng + ?Sized>(
    problem: &PlacementProblem,
    layer: Layer,
    region: &Rect,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let (mut x, mut y, r) = problem.positions();
    for ci in problem.layer_components(layer) {
        let (w, h) = crate::model::effective_dims(problem.components()[ci].width, problem.components()[ci].height, r[ci]);
        let sample = |rng: &mut R, lo: f64, hi: f64, d: f64| {
            let (a, b) = (lo + d / 2.0, hi - d / 2.0);
            if a < b {
                rng.random_range(a..b)
            } else {
                (lo + hi) / 2.0
            }
        };
        x[ci] = sample(rng, region.x0, region.x1, w);
        y[ci] = sample(rng, region.y0, region.y1, h);
    }
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Component, IcPin, Net, Outline, SpacingRules};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pin(id: &str, x: f64, y: f64, layer: Layer) -> IcPin {
        IcPin {
            id: id.into(),
            x,
            y,
            layer,
        }
    }

    fn net(id: &str, members: &[&str], ctp: bool) -> Net {
        Net {
            id: id.into(),
            members: members.iter().map(|s| s.to_string()).collect(),
            close_to_pin: ctp,
        }
    }

    #[test]
    fn contour_margin_floor() {
        let c = ArtificialContour::around_ic(100.0, 50.0, 10.0, 1.5);
        let g = c.with_min_margin(100.0, 50.0, 5.0);
        assert!((g.width / g.height - 2.0).abs() < 1e-12);
        assert!((g.height - 60.0).abs() < 1e-12 && (g.width - 120.0).abs() < 1e-12);
        let wide = ArtificialContour::around_ic(100.0, 50.0, 1e5, 1.5);
        assert_eq!(wide.with_min_margin(100.0, 50.0, 5.0), wide);
    }

    #[test]
    fn contour_keeps_ic_aspect_and_area() {
        let c = ArtificialContour::around_ic(20.0, 10.0, 40.0, 1.5);
        assert!((c.width / c.height - 2.0).abs() < 1e-9);
        assert!((c.width * c.height - 260.0).abs() < 1e-9);
        assert_eq!(c.rect.center(), (10.0, 5.0));
    }

    #[test]
    fn nearest_side_picks_right_for_pin_near_right_edge() {
        let ic = Rect::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(nearest_side(&ic, 9.0, 5.0), Side::Right);
        // exact ties break right, left, top, bottom
        assert_eq!(nearest_side(&ic, 5.0, 5.0), Side::Right);
        assert_eq!(nearest_side(&ic, 0.0, 10.0), Side::Left);
    }

    #[test]
    fn top_close_to_pin_starts_at_its_pin() {
        let p = PlacementProblem::new(
            vec![Component::new("C1", 2.0, 2.0, Layer::Top)],
            vec![net("N1", &["C1", "P1"], true), net("N2", &["C1", "P2"], false)],
            vec![pin("P1", 5.0, 5.0, Layer::Top), pin("P2", 9.5, 1.0, Layer::Top)],
            Outline::new(10.0, 10.0).unwrap(),
            None,
            SpacingRules::default(),
        )
        .unwrap();
        // N1 comes first, so the close-to-pin pin (5,5) wins and is pushed right.
        let init = top_initialize(&p, 1.5);
        assert_eq!((init.x[0], init.y[0]), (11.0, 5.0));
    }

    #[test]
    fn components_start_on_opposite_sides() {
        let p = PlacementProblem::new(
            vec![Component::new("A", 2.0, 1.0, Layer::Top), Component::new("B", 2.0, 1.0, Layer::Top)],
            vec![
                net("N1", &["A", "P1", "P2"], false),
                net("N2", &["B", "P3", "P4"], false),
            ],
            vec![
                pin("P1", 9.0, 5.0, Layer::Top),
                pin("P2", 5.0, 6.0, Layer::Top),
                pin("P3", 0.5, 3.0, Layer::Top),
                pin("P4", 4.0, 4.0, Layer::Top),
            ],
            Outline::new(10.0, 10.0).unwrap(),
            None,
            SpacingRules::default(),
        )
        .unwrap();
        let init = top_initialize(&p, 1.5);
        assert_eq!((init.x[0], init.y[0]), (11.0, 5.0));
        assert_eq!((init.x[1], init.y[1]), (-1.0, 3.0));
    }

    #[test]
    fn noise_pin_captures_its_component() {
        // Three clustered pins used by C1..C3 and one far-away noise pin shared
        // with C4 only.
        let p = PlacementProblem::new(
            (1..=4).map(|i| Component::new(format!("C{i}"), 1.0, 1.0, Layer::Bottom)).collect(),
            vec![
                net("N1", &["C1", "P1"], false),
                net("N2", &["C2", "P2"], false),
                net("N3", &["C3", "P3"], false),
                net("N4", &["C4", "P4"], false),
            ],
            vec![
                pin("P1", 1.0, 1.0, Layer::Bottom),
                pin("P2", 1.5, 1.0, Layer::Bottom),
                pin("P3", 1.0, 1.5, Layer::Bottom),
                pin("P4", 40.0, 40.0, Layer::Bottom),
            ],
            Outline::new(50.0, 50.0).unwrap(),
            None,
            SpacingRules::default(),
        )
        .unwrap();
        let init = bottom_initialize(&p, Some(DbscanParams::new(2.0, 3).unwrap()), &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(init.assignment.k, 1);
        assert!(init.excluded[3]);
        assert_eq!((init.x[3], init.y[3]), (40.0, 40.0));
        assert_eq!(init.assignment.component_cluster[3], None);
        for ci in 0..3 {
            assert_eq!(init.assignment.component_cluster[ci], Some(0));
        }
    }
}
