//! Wirelength, overlap and boundary terms of the placement objective, and
//! the subgradient consumed by the conjugate subgradient optimizer.
//!
//! The composite is `f = alpha * W + beta * sqrt(D) (+ gamma * B)` where `W`
//! is total HPWL, `D` the overlap measure and `B` the total length by which
//! components stick out of their region.

use serde::{Deserialize, Serialize};

use crate::model::{Component, Endpoint, ObjectiveValue, Orientation, PlacementProblem, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveWeights {
    pub alpha: f64,
    pub beta: f64,
    /// Weight of the boundary term; ignored when no region is constrained.
    pub gamma: f64,
}

impl ObjectiveWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        debug_assert!(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0);
        ObjectiveWeights { alpha, beta, gamma }
    }
}

/// How pairwise overlaps are combined into `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapModel {
    /// `sum_{i<j} Ox(i,j) * Oy(i,j)`: the geometric total intersection area.
    #[default]
    PairwiseArea,
    /// `(sum_{i<j} Ox(i,j)) * (sum_{i<j} Oy(i,j))`, the product of global sums.
    ProductOfSums,
}

/// Above this many rectangles the pairwise pass only visits grid neighbors.
pub const GRID_FILTER_THRESHOLD: usize = 200;

/// Overlap length of two centered spans of widths `wi`, `wj` whose centers are
/// `delta` apart. Three cases: containment, partial overlap, disjoint.
pub fn overlap_len(wi: f64, wj: f64, delta: f64) -> f64 {
    let d = delta.abs();
    if d <= (wi - wj).abs() / 2.0 {
        wi.min(wj)
    } else if d < (wi + wj) / 2.0 {
        (wi - 2.0 * d + wj) / 2.0
    } else {
        0.0
    }
}

/// Derivative of `overlap_len` with respect to the signed offset `delta`
/// (`x_i - x_j`). Zero at the kinks.
fn overlap_len_slope(wi: f64, wj: f64, delta: f64) -> f64 {
    let d = delta.abs();
    if d > (wi - wj).abs() / 2.0 && d < (wi + wj) / 2.0 {
        -delta.signum()
    } else {
        0.0
    }
}

pub fn overlap_x(ci: &Component, cj: &Component) -> f64 {
    overlap_len(ci.effective_dims().0, cj.effective_dims().0, ci.x - cj.x)
}

pub fn overlap_y(ci: &Component, cj: &Component) -> f64 {
    overlap_len(ci.effective_dims().1, cj.effective_dims().1, ci.y - cj.y)
}

/// Total pairwise intersection area of the components' footprints.
pub fn total_overlap(components: &[Component]) -> f64 {
    let rects: Vec<Rect> = components.iter().map(footprint).collect();
    let mut sum = 0.0;
    for_each_candidate_pair(&rects, |i, j| {
        sum += overlap_x(&components[i], &components[j]) * overlap_y(&components[i], &components[j]);
    });
    sum
}

pub fn total_overlap_rects(rects: &[Rect]) -> f64 {
    let mut sum = 0.0;
    for_each_candidate_pair(rects, |i, j| {
        let (a, b) = (&rects[i], &rects[j]);
        let (ax, ay) = a.center();
        let (bx, by) = b.center();
        sum += overlap_len(a.width(), b.width(), ax - bx) * overlap_len(a.height(), b.height(), ay - by);
    });
    sum
}

pub fn footprint(c: &Component) -> Rect {
    let (w, h) = c.effective_dims();
    Rect::centered(c.x, c.y, w, h)
}

/// Sum of the four hinge terms of every component against `region`.
pub fn boundary_penalty(components: &[Component], region: &Rect) -> f64 {
    components
        .iter()
        .map(|c| {
            let (w, h) = c.effective_dims();
            hinge_sum(c.x, c.y, w, h, region)
        })
        .sum()
}

fn hinge_sum(x: f64, y: f64, w: f64, h: f64, region: &Rect) -> f64 {
    (region.x0 + w / 2.0 - x).max(0.0)
        + (x + w / 2.0 - region.x1).max(0.0)
        + (region.y0 + h / 2.0 - y).max(0.0)
        + (y + h / 2.0 - region.y1).max(0.0)
}

/// Total HPWL of the given resolved nets, with components at `(x, y)` and
/// pins at their fixed coordinates.
pub fn hpwl(problem: &PlacementProblem, nets: &[usize], x: &[f64], y: &[f64]) -> f64 {
    let pins = problem.ic_pins();
    nets.iter()
        .map(|&ni| {
            let pts = problem.resolved_nets()[ni].iter().map(|e| match *e {
                Endpoint::Component(c) => (x[c], y[c]),
                Endpoint::Pin(p) => (pins[p].x, pins[p].y),
            });
            net_hpwl(pts)
        })
        .sum()
}

/// Half-perimeter of the bounding box of a point set.
pub fn net_hpwl(points: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let mut it = points.into_iter();
    let Some((x, y)) = it.next() else { return 0.0 };
    let (mut x0, mut x1, mut y0, mut y1) = (x, x, y, y);
    for (x, y) in it {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    (x1 - x0) + (y1 - y0)
}

/// Calls `f(i, j)` with `i < j` for every pair of rectangles that might
/// overlap. Exhaustive below `GRID_FILTER_THRESHOLD`, grid-filtered above.
/// Visit order is a deterministic function of the input.
pub(crate) fn for_each_candidate_pair(rects: &[Rect], mut f: impl FnMut(usize, usize)) {
    let n = rects.len();
    if n < 2 {
        return;
    }
    if n <= GRID_FILTER_THRESHOLD {
        for i in 0..n {
            for j in i + 1..n {
                f(i, j);
            }
        }
        return;
    }
    let mut x0 = f64::INFINITY;
    let mut y0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    let mut mean_dim = 0.0;
    for r in rects {
        x0 = x0.min(r.x0);
        y0 = y0.min(r.y0);
        x1 = x1.max(r.x1);
        y1 = y1.max(r.y1);
        mean_dim += r.width().max(r.height());
    }
    mean_dim /= n as f64;
    let cells_per_axis = ((n as f64).sqrt().ceil() as usize).clamp(1, 512);
    let cell = ((x1 - x0).max(y1 - y0) / cells_per_axis as f64).max(mean_dim).max(1e-12);
    let nx = (((x1 - x0) / cell).floor() as usize + 1).min(4096);
    let ny = (((y1 - y0) / cell).floor() as usize + 1).min(4096);
    let cell_of = |v: f64, lo: f64, count: usize| (((v - lo) / cell).floor().max(0.0) as usize).min(count - 1);
    // Widened spans keep pairs whose rectangles meet within rounding error.
    let slack = cell * 1e-9;

    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
    let mut spans = Vec::with_capacity(n);
    for (i, r) in rects.iter().enumerate() {
        let (cx0, cx1) = (cell_of(r.x0 - slack, x0, nx), cell_of(r.x1 + slack, x0, nx));
        let (cy0, cy1) = (cell_of(r.y0 - slack, y0, ny), cell_of(r.y1 + slack, y0, ny));
        spans.push((cx0, cx1, cy0, cy1));
        for cy in cy0..=cy1 {
            for cx in cx0..=cx1 {
                buckets[cy * nx + cx].push(i);
            }
        }
    }
    // A pair sharing several cells is reported only from the first cell of
    // the intersection of their cell spans.
    for i in 0..n {
        let (ax0, ax1, ay0, ay1) = spans[i];
        let mut seen: Vec<usize> = Vec::new();
        for cy in ay0..=ay1 {
            for cx in ax0..=ax1 {
                for &j in &buckets[cy * nx + cx] {
                    if j <= i {
                        continue;
                    }
                    let (bx0, _, by0, _) = spans[j];
                    if cx == ax0.max(bx0) && cy == ay0.max(by0) {
                        seen.push(j);
                    }
                }
            }
        }
        seen.sort_unstable();
        for j in seen {
            f(i, j);
        }
    }
}

/// A net endpoint as seen by a coordinate optimization: either a variable
/// component or a fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pt {
    Var(usize),
    Fixed(f64, f64),
}

/// The objective restricted to a set of movable components with fixed
/// orientations. Other components become fixed net endpoints, and any
/// listed obstacles (fixed rectangles) still count toward overlap.
///
/// The decision vector is `[x_0..x_{n-1}, y_0..y_{n-1}]`.
#[derive(Debug, Clone)]
pub struct SubObjective {
    dims: Vec<(f64, f64)>,
    obstacles: Vec<Rect>,
    nets: Vec<Vec<Pt>>,
    region: Option<Rect>,
    weights: ObjectiveWeights,
    model: OverlapModel,
}

impl SubObjective {
    pub fn new(
        dims: Vec<(f64, f64)>,
        obstacles: Vec<Rect>,
        nets: Vec<Vec<Pt>>,
        region: Option<Rect>,
        weights: ObjectiveWeights,
        model: OverlapModel,
    ) -> Self {
        SubObjective {
            dims,
            obstacles,
            nets,
            region,
            weights,
            model,
        }
    }

    /// Builds the objective for `movable` (component indices) of `problem`.
    /// Positions of every other component come from `x`, `y`, `r`. Nets
    /// without a movable member are constant and dropped.
    #[allow(clippy::too_many_arguments)]
    pub fn for_components(
        problem: &PlacementProblem,
        movable: &[usize],
        nets: &[usize],
        x: &[f64],
        y: &[f64],
        r: &[Orientation],
        obstacles: Vec<Rect>,
        region: Option<Rect>,
        weights: ObjectiveWeights,
        model: OverlapModel,
    ) -> Self {
        let comps = problem.components();
        let mut var_of = vec![usize::MAX; comps.len()];
        for (v, &ci) in movable.iter().enumerate() {
            var_of[ci] = v;
        }
        let dims = movable
            .iter()
            .map(|&ci| crate::model::effective_dims(comps[ci].width, comps[ci].height, r[ci]))
            .collect();
        let pins = problem.ic_pins();
        let sub_nets = nets
            .iter()
            .filter_map(|&ni| {
                let eps = &problem.resolved_nets()[ni];
                let pts: Vec<Pt> = eps
                    .iter()
                    .map(|e| match *e {
                        Endpoint::Component(c) if var_of[c] != usize::MAX => Pt::Var(var_of[c]),
                        Endpoint::Component(c) => Pt::Fixed(x[c], y[c]),
                        Endpoint::Pin(p) => Pt::Fixed(pins[p].x, pins[p].y),
                    })
                    .collect();
                pts.iter().any(|p| matches!(p, Pt::Var(_))).then_some(pts)
            })
            .collect();
        SubObjective::new(dims, obstacles, sub_nets, region, weights, model)
    }

    /// Grows every movable footprint by `margin` in width and height.
    pub fn inflated(mut self, margin: f64) -> Self {
        for d in &mut self.dims {
            d.0 += margin;
            d.1 += margin;
        }
        self
    }

    pub fn num_vars(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[(f64, f64)] {
        &self.dims
    }

    pub fn weights(&self) -> ObjectiveWeights {
        self.weights
    }

    fn rects(&self, u: &[f64]) -> Vec<Rect> {
        let n = self.num_vars();
        let mut rects: Vec<Rect> = (0..n)
            .map(|i| Rect::centered(u[i], u[n + i], self.dims[i].0, self.dims[i].1))
            .collect();
        rects.extend_from_slice(&self.obstacles);
        rects
    }

    pub fn evaluate(&self, u: &[f64]) -> ObjectiveValue {
        self.evaluate_inner(u, None)
    }

    /// Objective value at `u`, writing one subgradient into `grad`.
    pub fn value_and_subgradient(&self, u: &[f64], grad: &mut [f64]) -> ObjectiveValue {
        self.evaluate_inner(u, Some(grad))
    }

    fn evaluate_inner(&self, u: &[f64], mut grad: Option<&mut [f64]>) -> ObjectiveValue {
        let n = self.num_vars();
        debug_assert_eq!(u.len(), 2 * n);
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        let w = self.weights;

        let wirelength = self.wirelength_term(u, grad.as_deref_mut(), w.alpha);
        let overlap = self.overlap_term(u, grad.as_deref_mut(), w.beta);
        let boundary = match self.region {
            Some(region) => self.boundary_term(u, &region, grad, w.gamma),
            None => 0.0,
        };
        let mut f = w.alpha * wirelength + w.beta * overlap.sqrt();
        if self.region.is_some() {
            f += w.gamma * boundary;
        }
        ObjectiveValue {
            wirelength,
            overlap,
            boundary,
            f,
        }
    }

    fn wirelength_term(&self, u: &[f64], mut grad: Option<&mut [f64]>, alpha: f64) -> f64 {
        let n = self.num_vars();
        let mut total = 0.0;
        for net in &self.nets {
            for axis in 0..2 {
                let coord = |p: &Pt| match *p {
                    Pt::Var(v) => u[axis * n + v],
                    Pt::Fixed(x, y) => {
                        if axis == 0 {
                            x
                        } else {
                            y
                        }
                    }
                };
                let (mut lo, mut hi) = (0usize, 0usize);
                let (mut lo_v, mut hi_v) = (coord(&net[0]), coord(&net[0]));
                for (k, p) in net.iter().enumerate().skip(1) {
                    let c = coord(p);
                    if c < lo_v {
                        lo_v = c;
                        lo = k;
                    }
                    if c > hi_v {
                        hi_v = c;
                        hi = k;
                    }
                }
                total += hi_v - lo_v;
                if hi_v > lo_v {
                    if let Some(g) = grad.as_deref_mut() {
                        if let Pt::Var(v) = net[hi] {
                            g[axis * n + v] += alpha;
                        }
                        if let Pt::Var(v) = net[lo] {
                            g[axis * n + v] -= alpha;
                        }
                    }
                }
            }
        }
        total
    }

    fn overlap_term(&self, u: &[f64], grad: Option<&mut [f64]>, beta: f64) -> f64 {
        let n = self.num_vars();
        let rects = self.rects(u);
        let centers: Vec<(f64, f64)> = rects.iter().map(Rect::center).collect();
        let want_grad = grad.is_some() && beta > 0.0;
        let mut dx = if want_grad { vec![0.0; n] } else { Vec::new() };
        let mut dy = if want_grad { vec![0.0; n] } else { Vec::new() };

        let d = match self.model {
            OverlapModel::PairwiseArea => {
                let mut sum = 0.0;
                let mut visit = |i: usize, j: usize| {
                    if i >= n && j >= n {
                        return;
                    }
                    let (a, b) = (&rects[i], &rects[j]);
                    let ddx = centers[i].0 - centers[j].0;
                    let ddy = centers[i].1 - centers[j].1;
                    let ox = overlap_len(a.width(), b.width(), ddx);
                    if ox == 0.0 {
                        return;
                    }
                    let oy = overlap_len(a.height(), b.height(), ddy);
                    if oy == 0.0 {
                        return;
                    }
                    sum += ox * oy;
                    if want_grad {
                        let sx = overlap_len_slope(a.width(), b.width(), ddx) * oy;
                        let sy = overlap_len_slope(a.height(), b.height(), ddy) * ox;
                        if i < n {
                            dx[i] += sx;
                            dy[i] += sy;
                        }
                        if j < n {
                            dx[j] -= sx;
                            dy[j] -= sy;
                        }
                    }
                };
                for_each_candidate_pair(&rects, &mut visit);
                sum
            }
            OverlapModel::ProductOfSums => {
                let (mut sx, mut sy) = (0.0, 0.0);
                let mut gx = if want_grad { vec![0.0; n] } else { Vec::new() };
                let mut gy = if want_grad { vec![0.0; n] } else { Vec::new() };
                for i in 0..rects.len() {
                    for j in i + 1..rects.len() {
                        if i >= n && j >= n {
                            continue;
                        }
                        let (a, b) = (&rects[i], &rects[j]);
                        let ddx = centers[i].0 - centers[j].0;
                        let ddy = centers[i].1 - centers[j].1;
                        sx += overlap_len(a.width(), b.width(), ddx);
                        sy += overlap_len(a.height(), b.height(), ddy);
                        if want_grad {
                            let px = overlap_len_slope(a.width(), b.width(), ddx);
                            let py = overlap_len_slope(a.height(), b.height(), ddy);
                            if i < n {
                                gx[i] += px;
                                gy[i] += py;
                            }
                            if j < n {
                                gx[j] -= px;
                                gy[j] -= py;
                            }
                        }
                    }
                }
                if want_grad {
                    for v in 0..n {
                        dx[v] = gx[v] * sy;
                        dy[v] = gy[v] * sx;
                    }
                }
                sx * sy
            }
        };

        if let Some(g) = grad {
            if want_grad && d > 0.0 {
                let scale = beta / (2.0 * d.sqrt());
                for v in 0..n {
                    g[v] += scale * dx[v];
                    g[n + v] += scale * dy[v];
                }
            }
        }
        d
    }

    fn boundary_term(&self, u: &[f64], region: &Rect, mut grad: Option<&mut [f64]>, gamma: f64) -> f64 {
        let n = self.num_vars();
        let mut total = 0.0;
        for v in 0..n {
            let (w, h) = self.dims[v];
            let (x, y) = (u[v], u[n + v]);
            let terms = [
                (region.x0 + w / 2.0 - x, v, -1.0),
                (x + w / 2.0 - region.x1, v, 1.0),
                (region.y0 + h / 2.0 - y, n + v, -1.0),
                (y + h / 2.0 - region.y1, n + v, 1.0),
            ];
            for (val, idx, sign) in terms {
                if val > 0.0 {
                    total += val;
                    if let Some(g) = grad.as_deref_mut() {
                        g[idx] += sign * gamma;
                    }
                }
            }
        }
        total
    }
}

/// Layer-level view: which components move, what else blocks them, and the
/// region the boundary term constrains.
#[derive(Debug, Clone, Default)]
pub struct LayerGeometry {
    pub region: Option<Rect>,
    pub obstacles: Vec<Rect>,
}

/// Nets with at least one member among `components`.
pub fn nets_touching(problem: &PlacementProblem, components: &[usize]) -> Vec<usize> {
    let mut member = vec![false; problem.components().len()];
    for &c in components {
        member[c] = true;
    }
    problem
        .resolved_nets()
        .iter()
        .enumerate()
        .filter(|(_, eps)| eps.iter().any(|e| matches!(e, Endpoint::Component(c) if member[*c])))
        .map(|(ni, _)| ni)
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn layer_objective(
    problem: &PlacementProblem,
    weights: ObjectiveWeights,
    x: &[f64],
    y: &[f64],
    r: &[Orientation],
    layer: crate::model::Layer,
    geometry: &LayerGeometry,
    model: OverlapModel,
) -> (SubObjective, Vec<f64>) {
    let movable = problem.layer_components(layer);
    let nets = nets_touching(problem, &movable);
    let obj = SubObjective::for_components(
        problem,
        &movable,
        &nets,
        x,
        y,
        r,
        geometry.obstacles.clone(),
        geometry.region,
        weights,
        model,
    );
    let mut u: Vec<f64> = movable.iter().map(|&c| x[c]).collect();
    u.extend(movable.iter().map(|&c| y[c]));
    (obj, u)
}

/// Composite objective of one layer. `B` enters only when `geometry.region`
/// is set (the top layer and outline-constrained floorplans).
#[allow(clippy::too_many_arguments)]
pub fn composite(
    problem: &PlacementProblem,
    weights: ObjectiveWeights,
    x: &[f64],
    y: &[f64],
    r: &[Orientation],
    layer: crate::model::Layer,
    geometry: &LayerGeometry,
    model: OverlapModel,
) -> ObjectiveValue {
    let (obj, u) = layer_objective(problem, weights, x, y, r, layer, geometry, model);
    obj.evaluate(&u)
}

/// Subgradient of `composite` with respect to the x and y coordinates of
/// every component, in problem order. Components of the other layer get 0.
#[allow(clippy::too_many_arguments)]
pub fn subgradient(
    problem: &PlacementProblem,
    weights: ObjectiveWeights,
    x: &[f64],
    y: &[f64],
    r: &[Orientation],
    layer: crate::model::Layer,
    geometry: &LayerGeometry,
    model: OverlapModel,
) -> (Vec<f64>, Vec<f64>) {
    let (obj, u) = layer_objective(problem, weights, x, y, r, layer, geometry, model);
    let mut g = vec![0.0; u.len()];
    obj.value_and_subgradient(&u, &mut g);
    let movable = problem.layer_components(layer);
    let n = movable.len();
    let mut gx = vec![0.0; x.len()];
    let mut gy = vec![0.0; y.len()];
    for (v, &c) in movable.iter().enumerate() {
        gx[c] = g[v];
        gy[c] = g[n + v];
    }
    (gx, gy)
}
