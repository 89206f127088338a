//! Turns a global placement into a legal layout: directional sweeps remove
//! overlap and then spacing violations, out-of-bounds components move into
//! the largest free rectangle, and close-to-pin components are resampled
//! around their pin.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::driver::PlacementMode;
use crate::error::{Error, Result};
use crate::init::{nearest_side, top_contour, Side};
use crate::model::{effective_dims, LegalityReport, PlacementProblem, PlacementSolution, Rect};
use crate::objective::{for_each_candidate_pair, overlap_len};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LegalizeConfig {
    /// Length of one sweep shift.
    pub quantum: f64,
    /// Draws per standard deviation when resampling close-to-pin components.
    pub retry_budget: usize,
    pub sigma: f64,
    /// Factor applied to `sigma` once the first budget is spent.
    pub widen_factor: f64,
    /// Cells along the longer region side for free-space search.
    pub grid_resolution: usize,
    /// Contour control used to rebuild the top-layer region.
    pub contour_k: f64,
    /// Try the free spot nearest an out-of-bounds component before the
    /// corner rectangles.
    pub oob_nearest_first: bool,
}

impl Default for LegalizeConfig {
    fn default() -> Self {
        LegalizeConfig {
            quantum: 1.0,
            retry_budget: 64,
            sigma: 2.0,
            widen_factor: 2.0,
            grid_resolution: 256,
            contour_k: 1.5,
            oob_nearest_first: true,
        }
    }
}

impl LegalizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.quantum > 0.0 && self.quantum.is_finite()) {
            return Err(Error::Config("legalize.quantum must be > 0".into()));
        }
        if !(self.sigma > 0.0) || !(self.widen_factor >= 1.0) {
            return Err(Error::Config("legalize.sigma must be > 0 and widen_factor >= 1".into()));
        }
        if self.grid_resolution < 2 {
            return Err(Error::Config("legalize.grid_resolution must be >= 2".into()));
        }
        Ok(())
    }
}

/// Center and effective size of a rectangle being legalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placed {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Placed {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Placed { x, y, w, h }
    }

    pub fn from_rect(r: &Rect) -> Self {
        let (x, y) = r.center();
        Placed::new(x, y, r.width(), r.height())
    }

    pub fn rect(&self) -> Rect {
        Rect::centered(self.x, self.y, self.w, self.h)
    }
}

/// True when `a` and `b` are closer than `gap` along both axes. With a zero
/// gap this is exactly "positive overlap area".
pub fn conflicts(a: &Placed, b: &Placed, gap: f64) -> bool {
    (a.x - b.x).abs() < (a.w + b.w) / 2.0 + gap && (a.y - b.y).abs() < (a.h + b.h) / 2.0 + gap
}

fn overlap_area(a: &Placed, b: &Placed) -> f64 {
    overlap_len(a.w, b.w, a.x - b.x) * overlap_len(a.h, b.h, a.y - b.y)
}

fn hinge(p: &Placed, region: &Rect) -> f64 {
    (region.x0 + p.w / 2.0 - p.x).max(0.0)
        + (p.x + p.w / 2.0 - region.x1).max(0.0)
        + (region.y0 + p.h / 2.0 - p.y).max(0.0)
        + (p.y + p.h / 2.0 - region.y1).max(0.0)
}

pub fn inside(p: &Placed, region: &Rect) -> bool {
    hinge(p, region) == 0.0
}

/// Clamps a center so that a span of length `w` lies in `[lo, hi]` under the
/// same arithmetic as the boundary check.
fn clamp_axis(c: f64, w: f64, lo: f64, hi: f64) -> f64 {
    let mut c = c.min(hi - w / 2.0).max(lo + w / 2.0);
    for _ in 0..8 {
        if c + w / 2.0 - hi > 0.0 {
            c = c.next_down();
        } else if lo + w / 2.0 - c > 0.0 {
            c = c.next_up();
        } else {
            break;
        }
    }
    c
}

/// Pairwise minimum gaps of the components being legalized.
#[derive(Debug, Clone)]
pub struct Gaps {
    n: usize,
    g: Vec<f64>,
}

impl Gaps {
    pub fn uniform(n: usize, gap: f64) -> Self {
        Gaps { n, g: vec![gap; n * n] }
    }

    pub fn from_problem(problem: &PlacementProblem, members: &[usize]) -> Self {
        let comps = problem.components();
        let rules = problem.spacing_rules();
        let n = members.len();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = rules.gap(&comps[members[i]].id, &comps[members[j]].id);
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        Gaps { n, g }
    }

    pub fn zero(n: usize) -> Self {
        Gaps::uniform(n, 0.0)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.g[i * self.n + j]
        }
    }

    fn max(&self) -> f64 {
        self.g.iter().copied().fold(0.0, f64::max)
    }
}

/// How a component moves during a sweep: straight along an axis, or
/// diagonally by alternating x and y steps (x first).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Motion {
    Axis(f64, f64),
    Diagonal(f64, f64),
}

impl Motion {
    fn at(self, x: f64, y: f64, n: u64, q: f64) -> (f64, f64) {
        match self {
            Motion::Axis(sx, sy) => (x + n as f64 * q * sx, y + n as f64 * q * sy),
            Motion::Diagonal(sx, sy) => (x + n.div_ceil(2) as f64 * q * sx, y + (n / 2) as f64 * q * sy),
        }
    }
}

/// Smallest step count above `n_from` at which `base`, moved by `m`, is
/// clear of `o`.
fn steps_to_clear(base: &Placed, m: Motion, o: &Placed, gap: f64, q: f64, n_from: u64) -> u64 {
    let need = |s: f64, bc: f64, oc: f64, a: f64, b: f64| s * (oc - bc) + (a + b) / 2.0 + gap;
    let steps = |need: f64| if need <= 0.0 { 0 } else { (need / q).ceil() as u64 };
    let mut n = match m {
        Motion::Axis(sx, 0.0) => steps(need(sx, base.x, o.x, base.w, o.w)),
        Motion::Axis(_, sy) => steps(need(sy, base.y, o.y, base.h, o.h)),
        Motion::Diagonal(sx, sy) => {
            let kx = steps(need(sx, base.x, o.x, base.w, o.w));
            let ky = steps(need(sy, base.y, o.y, base.h, o.h));
            let nx = if kx == 0 { 0 } else { 2 * kx - 1 };
            nx.min(2 * ky)
        }
    }
    .max(n_from + 1);
    loop {
        let (x, y) = m.at(base.x, base.y, n, q);
        if !conflicts(&Placed { x, y, ..*base }, o, gap) {
            return n;
        }
        n += 1;
    }
}

/// Position of component `i` moved along `m` until clear of `obstacles` and
/// of the components in `done`.
fn slide(items: &[Placed], i: usize, m: Motion, done: &[usize], gaps: &Gaps, obstacles: &[Placed], q: f64) -> Placed {
    let base = items[i];
    let mut n = 0u64;
    let mut cur = base;
    loop {
        let hit = obstacles
            .iter()
            .map(|o| (*o, 0.0))
            .chain(done.iter().map(|&j| (items[j], gaps.get(i, j))))
            .find(|(o, g)| conflicts(&cur, o, *g));
        let Some((o, g)) = hit else {
            return cur;
        };
        n = steps_to_clear(&base, m, &o, g, q, n);
        (cur.x, cur.y) = m.at(base.x, base.y, n, q);
    }
}

/// Moves the components in `order`, each along its motion, until clear of
/// `obstacles` and of every component moved before it.
fn sweep(items: &mut [Placed], order: &[usize], motions: &[Motion], gaps: &Gaps, obstacles: &[Placed], q: f64) {
    let mut done: Vec<usize> = Vec::with_capacity(order.len());
    for &i in order {
        items[i] = slide(items, i, motions[i], &done, gaps, obstacles, q);
        done.push(i);
    }
}

/// The middle component (center nearest the region centroid, lowest index
/// on ties), then the rest by priority class and distance from it, with a
/// direction given by the dominant axis of each offset.
fn outward_plan(items: &[Placed], region: &Rect, priority: &[bool]) -> (Vec<usize>, Vec<Motion>) {
    let n = items.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let (cx, cy) = region.center();
    let dist = |p: &Placed, x: f64, y: f64| (p.x - x).hypot(p.y - y);
    let mut mid = 0;
    for i in 1..n {
        if dist(&items[i], cx, cy) < dist(&items[mid], cx, cy) {
            mid = i;
        }
    }
    let m = items[mid];
    let motions = items
        .iter()
        .map(|p| {
            let (dx, dy) = (p.x - m.x, p.y - m.y);
            if dx != 0.0 && dx.abs() >= dy.abs() {
                Motion::Axis(dx.signum(), 0.0)
            } else if dy != 0.0 {
                Motion::Axis(0.0, dy.signum())
            } else {
                Motion::Axis(0.0, -1.0)
            }
        })
        .collect();
    let mut rest: Vec<usize> = (0..n).filter(|&i| i != mid).collect();
    rest.sort_by(|&a, &b| {
        priority[b]
            .cmp(&priority[a])
            .then(dist(&items[a], m.x, m.y).total_cmp(&dist(&items[b], m.x, m.y)))
            .then(a.cmp(&b))
    });
    let mut order = vec![mid];
    order.extend(rest);
    (order, motions)
}

fn sweep_outward(items: &mut [Placed], region: &Rect, gaps: &Gaps, priority: &[bool], q: f64) {
    let (order, motions) = outward_plan(items, region, priority);
    sweep(items, &order, &motions, gaps, &[], q);
}

/// Removes all pairwise overlap by sweeping outward from the middle
/// component in shifts of `quantum`.
pub fn eliminate_overlap_bottom(items: &mut [Placed], region: &Rect, quantum: f64) {
    let n = items.len();
    sweep_outward(items, region, &Gaps::zero(n), &vec![false; n], quantum);
}

/// The outward sweep with gap-inclusive clearance.
pub fn enforce_spacing(items: &mut [Placed], region: &Rect, gaps: &Gaps, quantum: f64) {
    let n = items.len();
    sweep_outward(items, region, gaps, &vec![false; n], quantum);
}

/// The eight zones around the IC cut by extending its edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Partition {
    Right,
    TopRight,
    Top,
    TopLeft,
    Left,
    BottomLeft,
    Bottom,
    BottomRight,
}

impl Partition {
    pub const ALL: [Partition; 8] = [
        Partition::Right,
        Partition::TopRight,
        Partition::Top,
        Partition::TopLeft,
        Partition::Left,
        Partition::BottomLeft,
        Partition::Bottom,
        Partition::BottomRight,
    ];

    /// Push direction away from the IC as signs per axis.
    pub fn direction(self) -> (f64, f64) {
        match self {
            Partition::Right => (1.0, 0.0),
            Partition::TopRight => (1.0, 1.0),
            Partition::Top => (0.0, 1.0),
            Partition::TopLeft => (-1.0, 1.0),
            Partition::Left => (-1.0, 0.0),
            Partition::BottomLeft => (-1.0, -1.0),
            Partition::Bottom => (0.0, -1.0),
            Partition::BottomRight => (1.0, -1.0),
        }
    }

    pub fn is_corner(self) -> bool {
        let (sx, sy) = self.direction();
        sx != 0.0 && sy != 0.0
    }

    pub fn motion(self) -> Motion {
        let (sx, sy) = self.direction();
        if self.is_corner() {
            Motion::Diagonal(sx, sy)
        } else {
            Motion::Axis(sx, sy)
        }
    }
}

/// Zone of a center point. Points over the IC body belong to the edge zone
/// of the nearest IC edge.
pub fn partition_of(ic: &Rect, x: f64, y: f64) -> Partition {
    let col = if x < ic.x0 {
        -1
    } else if x > ic.x1 {
        1
    } else {
        0
    };
    let row = if y < ic.y0 {
        -1
    } else if y > ic.y1 {
        1
    } else {
        0
    };
    match (col, row) {
        (1, 0) => Partition::Right,
        (1, 1) => Partition::TopRight,
        (0, 1) => Partition::Top,
        (-1, 1) => Partition::TopLeft,
        (-1, 0) => Partition::Left,
        (-1, -1) => Partition::BottomLeft,
        (0, -1) => Partition::Bottom,
        (1, -1) => Partition::BottomRight,
        _ => match nearest_side(ic, x, y) {
            Side::Right => Partition::Right,
            Side::Left => Partition::Left,
            Side::Top => Partition::Top,
            Side::Bottom => Partition::Bottom,
        },
    }
}

fn rect_distance(r: &Rect, x: f64, y: f64) -> f64 {
    let dx = (r.x0 - x).max(0.0).max(x - r.x1);
    let dy = (r.y0 - y).max(0.0).max(y - r.y1);
    dx.hypot(dy)
}

/// Partition sweep: components nearest the IC go first and every component
/// is pushed along its zone's direction until clear of the IC body and of
/// the components already placed.
pub fn sweep_partitions(items: &mut [Placed], ic: &Rect, gaps: &Gaps, priority: &[bool], quantum: f64) {
    let motions: Vec<Motion> = items.iter().map(|p| partition_of(ic, p.x, p.y).motion()).collect();
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        priority[b]
            .cmp(&priority[a])
            .then(rect_distance(ic, items[a].x, items[a].y).total_cmp(&rect_distance(ic, items[b].x, items[b].y)))
            .then(a.cmp(&b))
    });
    sweep(items, &order, &motions, gaps, &[Placed::from_rect(ic)], quantum);
}

/// A bar-chart rectangle: `width` bars starting at `start`, all at least
/// `height` tall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HistogramRect {
    pub start: usize,
    pub width: usize,
    pub height: usize,
}

impl HistogramRect {
    pub fn area(&self) -> usize {
        self.width * self.height
    }
}

/// Calls `f` with every rectangle that cannot be widened, using the
/// monotone stack.
fn histogram_rects(heights: &[usize], mut f: impl FnMut(HistogramRect)) {
    let mut stack: Vec<usize> = Vec::with_capacity(heights.len());
    for i in 0..=heights.len() {
        let h = heights.get(i).copied().unwrap_or(0);
        while let Some(&t) = stack.last() {
            if heights[t] < h {
                break;
            }
            stack.pop();
            let start = stack.last().map_or(0, |&s| s + 1);
            if heights[t] > h {
                f(HistogramRect {
                    start,
                    width: i - start,
                    height: heights[t],
                });
            }
        }
        stack.push(i);
    }
}

pub fn largest_rectangle_in_histogram(heights: &[usize]) -> HistogramRect {
    let mut best = HistogramRect::default();
    histogram_rects(heights, |r| {
        if r.area() > best.area() {
            best = r;
        }
    });
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Corner {
    LowerLeft,
    LowerRight,
    UpperLeft,
    UpperRight,
}

/// The largest empty rectangle of one corner quadrant that fits a given
/// component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerFreeRect {
    pub corner: Corner,
    pub rect: Rect,
}

/// Occupancy of a region on a uniform cell grid. A cell is occupied when
/// any marked rectangle touches it, so free cells are truly empty.
#[derive(Debug, Clone)]
pub struct Occupancy {
    region: Rect,
    cw: f64,
    ch: f64,
    nx: usize,
    ny: usize,
    occ: Vec<bool>,
}

impl Occupancy {
    pub fn new(region: &Rect, resolution: usize) -> Self {
        let (w, h) = (region.width(), region.height());
        let (nx, ny) = if w >= h {
            (resolution, ((resolution as f64 * h / w).round() as usize).max(1))
        } else {
            (((resolution as f64 * w / h).round() as usize).max(1), resolution)
        };
        Occupancy {
            region: *region,
            cw: w / nx as f64,
            ch: h / ny as f64,
            nx,
            ny,
            occ: vec![false; nx * ny],
        }
    }

    /// Marks `p` grown by `gap` on every side.
    pub fn mark(&mut self, p: &Placed, gap: f64) {
        let eps = 1e-6 * self.cw.min(self.ch);
        let x0 = p.x - p.w / 2.0 - gap - eps;
        let x1 = p.x + p.w / 2.0 + gap + eps;
        let y0 = p.y - p.h / 2.0 - gap - eps;
        let y1 = p.y + p.h / 2.0 + gap + eps;
        if x1 <= self.region.x0 || x0 >= self.region.x1 || y1 <= self.region.y0 || y0 >= self.region.y1 {
            return;
        }
        let col = |v: f64| (((v - self.region.x0) / self.cw).floor().max(0.0) as usize).min(self.nx - 1);
        let row = |v: f64| (((v - self.region.y0) / self.ch).floor().max(0.0) as usize).min(self.ny - 1);
        let (c0, c1, r0, r1) = (col(x0), col(x1), row(y0), row(y1));
        for r in r0..=r1 {
            for c in c0..=c1 {
                self.occ[r * self.nx + c] = true;
            }
        }
    }

    fn cell_rect(&self, c0: usize, r0: usize, cols: usize, rows: usize) -> Rect {
        let x0 = self.region.x0 + c0 as f64 * self.cw;
        let y0 = self.region.y0 + r0 as f64 * self.ch;
        let x1 = if c0 + cols == self.nx { self.region.x1 } else { x0 + cols as f64 * self.cw };
        let y1 = if r0 + rows == self.ny { self.region.y1 } else { y0 + rows as f64 * self.ch };
        Rect::new(x0, y0, x1, y1)
    }

    /// Largest free rectangle within the cell window that fits `w` x `h`.
    pub fn best_fit(&self, cols: std::ops::Range<usize>, rows: std::ops::Range<usize>, w: f64, h: f64) -> Option<Rect> {
        let mut heights = vec![0usize; cols.len()];
        let mut best: Option<(usize, Rect)> = None;
        for r in rows.clone() {
            for (k, c) in cols.clone().enumerate() {
                heights[k] = if self.occ[r * self.nx + c] { 0 } else { heights[k] + 1 };
            }
            histogram_rects(&heights, |hr| {
                let rect = self.cell_rect(cols.start + hr.start, r + 1 - hr.height, hr.width, hr.height);
                if rect.width() >= w && rect.height() >= h && best.as_ref().is_none_or(|(a, _)| hr.area() > *a) {
                    best = Some((hr.area(), rect));
                }
            });
        }
        best.map(|(_, r)| r)
    }

    /// Free cell window of at least `w` x `h` whose center is nearest
    /// `(x, y)`.
    pub fn nearest_fit(&self, w: f64, h: f64, x: f64, y: f64) -> Option<Rect> {
        let kw = ((w / self.cw) - 1e-9).ceil().max(1.0) as usize;
        let kh = ((h / self.ch) - 1e-9).ceil().max(1.0) as usize;
        if kw > self.nx || kh > self.ny {
            return None;
        }
        // Prefix sums of occupied cells.
        let stride = self.nx + 1;
        let mut sum = vec![0u32; stride * (self.ny + 1)];
        for r in 0..self.ny {
            for c in 0..self.nx {
                sum[(r + 1) * stride + c + 1] =
                    u32::from(self.occ[r * self.nx + c]) + sum[r * stride + c + 1] + sum[(r + 1) * stride + c] - sum[r * stride + c];
            }
        }
        let mut best: Option<(f64, Rect)> = None;
        for r in 0..=self.ny - kh {
            for c in 0..=self.nx - kw {
                let busy = sum[(r + kh) * stride + c + kw] + sum[r * stride + c] - sum[r * stride + c + kw] - sum[(r + kh) * stride + c];
                if busy > 0 {
                    continue;
                }
                let rect = self.cell_rect(c, r, kw, kh);
                if rect.width() < w || rect.height() < h {
                    continue;
                }
                let (cx, cy) = (x.min(rect.x1 - w / 2.0).max(rect.x0 + w / 2.0), y.min(rect.y1 - h / 2.0).max(rect.y0 + h / 2.0));
                let d = (cx - x).hypot(cy - y);
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((d, rect));
                }
            }
        }
        best.map(|(_, r)| r)
    }

    /// The best-fitting free rectangle of each corner quadrant, largest
    /// first.
    pub fn corner_free_rects(&self, w: f64, h: f64) -> Vec<CornerFreeRect> {
        let (mx, my) = (self.nx / 2, self.ny / 2);
        let quads = [
            (Corner::LowerLeft, 0..mx, 0..my),
            (Corner::LowerRight, mx..self.nx, 0..my),
            (Corner::UpperLeft, 0..mx, my..self.ny),
            (Corner::UpperRight, mx..self.nx, my..self.ny),
        ];
        let mut out: Vec<CornerFreeRect> = quads
            .into_iter()
            .filter_map(|(corner, cols, rows)| self.best_fit(cols, rows, w, h).map(|rect| CornerFreeRect { corner, rect }))
            .collect();
        out.sort_by(|a, b| b.rect.area().total_cmp(&a.rect.area()));
        out
    }
}

/// Moves every component that leaves `region` into the largest free corner
/// rectangle that fits it, then into the largest free rectangle anywhere in
/// the region. With `nearest_first` the free spot closest to the component
/// is tried before the corners. Returns the indices that fit nowhere.
pub fn repair_out_of_bounds(
    items: &mut [Placed],
    region: &Rect,
    obstacles: &[Placed],
    gaps: &Gaps,
    resolution: usize,
    nearest_first: bool,
) -> Vec<usize> {
    let n = items.len();
    let mut offenders: Vec<usize> = (0..n).filter(|&i| !inside(&items[i], region)).collect();
    offenders.sort_by(|&a, &b| (items[b].w * items[b].h).total_cmp(&(items[a].w * items[a].h)).then(a.cmp(&b)));
    let mut settled: Vec<bool> = (0..n).map(|i| inside(&items[i], region)).collect();
    let mut unplaceable = Vec::new();

    for i in offenders {
        let p = items[i];
        let mut occ = Occupancy::new(region, resolution);
        for o in obstacles {
            occ.mark(o, 0.0);
        }
        for j in (0..n).filter(|&j| settled[j]) {
            occ.mark(&items[j], gaps.get(i, j));
        }
        let mut candidates: Vec<Rect> = Vec::new();
        if nearest_first {
            candidates.extend(occ.nearest_fit(p.w, p.h, p.x, p.y));
        }
        candidates.extend(occ.corner_free_rects(p.w, p.h).into_iter().map(|c| c.rect));
        candidates.extend(occ.best_fit(0..occ.nx, 0..occ.ny, p.w, p.h));

        let fits = |q: &Placed| {
            inside(q, region)
                && obstacles.iter().all(|o| !conflicts(q, o, 0.0))
                && (0..n).filter(|&j| settled[j]).all(|j| !conflicts(q, &items[j], gaps.get(i, j)))
        };
        let placed = candidates.iter().find_map(|r| {
            let x = clamp_axis(p.x.min(r.x1 - p.w / 2.0).max(r.x0 + p.w / 2.0), p.w, region.x0, region.x1);
            let y = clamp_axis(p.y.min(r.y1 - p.h / 2.0).max(r.y0 + p.h / 2.0), p.h, region.y0, region.y1);
            let q = Placed { x, y, ..p };
            fits(&q).then_some(q)
        });
        match placed {
            Some(q) => {
                items[i] = q;
                settled[i] = true;
            }
            None => unplaceable.push(i),
        }
    }
    unplaceable
}

/// Pin location and acceptance radius of a close-to-pin component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinTarget {
    pub x: f64,
    pub y: f64,
    pub threshold: f64,
}

/// Default acceptance radius: half the longer side plus the default gap.
pub fn close_to_pin_threshold(w: f64, h: f64, default_gap: f64) -> f64 {
    w.max(h) / 2.0 + default_gap
}

fn within(p: &Placed, t: &PinTarget) -> bool {
    (p.x - t.x).hypot(p.y - t.y) <= t.threshold
}

/// Resamples every close-to-pin component that is farther than its
/// threshold from its pin, drawing centers from a normal around the pin
/// until one is in bounds, clear of everything and within the threshold.
/// Returns the indices that exhausted the retry budget.
#[allow(clippy::too_many_arguments)]
pub fn enforce_close_to_pin<R: Rng + ?Sized>(
    items: &mut [Placed],
    targets: &[Option<PinTarget>],
    region: &Rect,
    obstacles: &[Placed],
    gaps: &Gaps,
    config: &LegalizeConfig,
    rng: &mut R,
) -> Vec<usize> {
    let n = items.len();
    let mut failed = Vec::new();
    for i in 0..n {
        let Some(t) = targets[i] else {
            continue;
        };
        if within(&items[i], &t) {
            continue;
        }
        let p = items[i];
        let mut accepted = None;
        for attempt in 0..2 * config.retry_budget {
            let sigma = if attempt < config.retry_budget {
                config.sigma
            } else {
                config.sigma * config.widen_factor
            };
            let dx: f64 = StandardNormal.sample(rng);
            let dy: f64 = StandardNormal.sample(rng);
            let q = Placed {
                x: t.x + sigma * dx,
                y: t.y + sigma * dy,
                ..p
            };
            if within(&q, &t)
                && inside(&q, region)
                && obstacles.iter().all(|o| !conflicts(&q, o, 0.0))
                && (0..n).filter(|&j| j != i).all(|j| !conflicts(&q, &items[j], gaps.get(i, j)))
            {
                accepted = Some(q);
                break;
            }
        }
        match accepted {
            Some(q) => items[i] = q,
            None => failed.push(i),
        }
    }
    failed
}

/// Legality of a set of rectangles against a region, obstacles, gaps and
/// close-to-pin targets.
pub fn audit(
    items: &[Placed],
    region: &Rect,
    obstacles: &[Placed],
    gaps: &Gaps,
    targets: &[Option<PinTarget>],
) -> LegalityReport {
    let grow = gaps.max() / 2.0;
    let rects: Vec<Rect> = items
        .iter()
        .map(|p| Rect::centered(p.x, p.y, p.w + 2.0 * grow, p.h + 2.0 * grow))
        .collect();
    let mut report = LegalityReport::default();
    for_each_candidate_pair(&rects, |i, j| {
        report.total_overlap_area += overlap_area(&items[i], &items[j]);
        let g = gaps.get(i, j);
        if g > 0.0 && conflicts(&items[i], &items[j], g) {
            report.spacing_violations += 1;
        }
    });
    for p in items {
        for o in obstacles {
            report.total_overlap_area += overlap_area(p, o);
        }
        report.out_of_bounds_length += hinge(p, region);
    }
    report.close_to_pin_violations = items
        .iter()
        .zip(targets)
        .filter(|(p, t)| t.is_some_and(|t| !within(p, &t)))
        .count();
    report
}

/// One layer of a problem prepared for legalization.
#[derive(Debug, Clone)]
pub struct LayerState {
    /// Problem indices of the layer's components.
    pub members: Vec<usize>,
    pub items: Vec<Placed>,
    pub gaps: Gaps,
    pub region: Rect,
    pub obstacles: Vec<Placed>,
    pub targets: Vec<Option<PinTarget>>,
}

impl LayerState {
    pub fn new(problem: &PlacementProblem, mode: PlacementMode, sol: &PlacementSolution, config: &LegalizeConfig) -> Self {
        let comps = problem.components();
        let members = problem.layer_components(mode.layer());
        let ic = problem.ic_outline().rect();
        let (region, obstacles) = match mode {
            PlacementMode::Top => (top_contour(problem, config.contour_k).rect, vec![Placed::from_rect(&ic)]),
            PlacementMode::Bottom | PlacementMode::FixedOutline => (ic, Vec::new()),
        };
        let default_gap = problem.spacing_rules().default_gap;
        let mut items = Vec::with_capacity(members.len());
        let mut targets = Vec::with_capacity(members.len());
        for &ci in &members {
            let c = &comps[ci];
            let (w, h) = effective_dims(c.width, c.height, sol.r[ci]);
            items.push(Placed::new(sol.x[ci], sol.y[ci], w, h));
            targets.push(c.close_to_pin_target.as_ref().and_then(|pid| {
                let pin = &problem.ic_pins()[problem.pin_index(pid)?];
                Some(PinTarget {
                    x: pin.x,
                    y: pin.y,
                    threshold: close_to_pin_threshold(w, h, default_gap),
                })
            }));
        }
        LayerState {
            gaps: Gaps::from_problem(problem, &members),
            members,
            items,
            region,
            obstacles,
            targets,
        }
    }

    pub fn audit(&self) -> LegalityReport {
        audit(&self.items, &self.region, &self.obstacles, &self.gaps, &self.targets)
    }

    fn write_back(&self, sol: &mut PlacementSolution) {
        for (p, &ci) in self.items.iter().zip(&self.members) {
            sol.x[ci] = p.x;
            sol.y[ci] = p.y;
        }
    }
}

/// Legality of the layer of `mode` in `sol`.
pub fn check(problem: &PlacementProblem, mode: PlacementMode, sol: &PlacementSolution, config: &LegalizeConfig) -> LegalityReport {
    LayerState::new(problem, mode, sol, config).audit()
}

/// Overlap sweep, spacing sweep, out-of-bounds repair and close-to-pin
/// resampling on the layer of `mode`. Other layers are copied unchanged.
pub fn legalize<R: Rng + ?Sized>(
    problem: &PlacementProblem,
    mode: PlacementMode,
    sol: &PlacementSolution,
    config: &LegalizeConfig,
    rng: &mut R,
) -> (PlacementSolution, LegalityReport) {
    let mut st = LayerState::new(problem, mode, sol, config);
    let n = st.items.len();
    let priority: Vec<bool> = st.targets.iter().map(Option::is_some).collect();
    let zero = Gaps::zero(n);
    let q = config.quantum;

    match mode {
        PlacementMode::Top => {
            let ic = problem.ic_outline().rect();
            sweep_partitions(&mut st.items, &ic, &zero, &priority, q);
            sweep_partitions(&mut st.items, &ic, &st.gaps, &priority, q);
        }
        PlacementMode::Bottom | PlacementMode::FixedOutline => {
            sweep_outward(&mut st.items, &st.region, &zero, &priority, q);
            sweep_outward(&mut st.items, &st.region, &st.gaps.clone(), &priority, q);
        }
    }
    let unplaceable = repair_out_of_bounds(&mut st.items, &st.region, &st.obstacles, &st.gaps, config.grid_resolution, config.oob_nearest_first);

    let failed = enforce_close_to_pin(&mut st.items, &st.targets, &st.region, &st.obstacles, &st.gaps, config, rng);

    let mut out = sol.clone();
    st.write_back(&mut out);
    let comps = problem.components();
    let mut report = st.audit();
    report.unplaceable = unplaceable.iter().map(|&i| comps[st.members[i]].id.clone()).collect();
    report.close_to_pin_failed = failed.iter().map(|&i| comps[st.members[i]].id.clone()).collect();
    out.legality = report.clone();
    (out, report)
}
