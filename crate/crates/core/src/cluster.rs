//! Density-based clustering of IC pin locations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    pub epsilon: f64,
    /// Neighborhood size, counting the point itself, that makes a core point.
    pub minpts: usize,
}

impl DbscanParams {
    pub fn new(epsilon: f64, minpts: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config("dbscan.epsilon must be > 0".into()));
        }
        if minpts < 1 {
            return Err(Error::Config("dbscan.minpts must be >= 1".into()));
        }
        Ok(DbscanParams { epsilon, minpts })
    }

    /// `minpts = 3`, `epsilon` twice the median nearest-neighbor distance.
    pub fn heuristic(points: &[(f64, f64)]) -> Self {
        let epsilon = match median_nearest_neighbor(points) {
            Some(d) if d > 0.0 => 2.0 * d,
            _ => 1.0,
        };
        DbscanParams { epsilon, minpts: 3 }
    }
}

fn median_nearest_neighbor(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let mut nn: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, a)| {
            points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| (a.0 - b.0).hypot(a.1 - b.1))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    let m = nn.len() / 2;
    Some(if nn.len().is_multiple_of(2) { (nn[m - 1] + nn[m]) / 2.0 } else { nn[m] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Noise,
    Cluster(usize),
}

impl Label {
    pub fn cluster(self) -> Option<usize> {
        match self {
            Label::Cluster(c) => Some(c),
            Label::Noise => None,
        }
    }
}

/// Classic DBSCAN. Clusters are numbered in order of discovery while
/// scanning the input; a border point reachable from several clusters
/// joins the first one that reaches it.
pub fn dbscan(points: &[(f64, f64)], params: &DbscanParams) -> Vec<Label> {
    let n = points.len();
    let index = NeighborGrid::new(points, params.epsilon);
    let mut labels: Vec<Option<Label>> = vec![None; n];
    let mut next_cluster = 0;
    let mut neighbors = Vec::new();
    let mut frontier = Vec::new();

    for i in 0..n {
        if labels[i].is_some() {
            continue;
        }
        index.neighbors(points, i, &mut neighbors);
        if neighbors.len() < params.minpts {
            labels[i] = Some(Label::Noise);
            continue;
        }
        let c = Label::Cluster(next_cluster);
        next_cluster += 1;
        labels[i] = Some(c);
        frontier.clear();
        frontier.extend(neighbors.iter().copied().filter(|&j| j != i));
        while let Some(j) = frontier.pop() {
            match labels[j] {
                Some(Label::Noise) => labels[j] = Some(c),
                None => {
                    labels[j] = Some(c);
                    index.neighbors(points, j, &mut neighbors);
                    if neighbors.len() >= params.minpts {
                        frontier.extend(neighbors.iter().copied().filter(|&k| !matches!(labels[k], Some(Label::Cluster(_)))));
                    }
                }
                Some(Label::Cluster(_)) => {}
            }
        }
    }
    labels.into_iter().map(|l| l.unwrap_or(Label::Noise)).collect()
}

pub fn cluster_count(labels: &[Label]) -> usize {
    labels
        .iter()
        .filter_map(|l| l.cluster())
        .max()
        .map_or(0, |m| m + 1)
}

/// Uniform grid with cell size `epsilon` for fixed-radius neighbor queries.
struct NeighborGrid {
    eps: f64,
    x0: f64,
    y0: f64,
    nx: usize,
    cells: std::collections::HashMap<(usize, usize), Vec<usize>>,
}

impl NeighborGrid {
    fn new(points: &[(f64, f64)], eps: f64) -> Self {
        let x0 = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let y0 = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let mut grid = NeighborGrid {
            eps,
            x0: if x0.is_finite() { x0 } else { 0.0 },
            y0: if y0.is_finite() { y0 } else { 0.0 },
            nx: 0,
            cells: Default::default(),
        };
        for (i, p) in points.iter().enumerate() {
            let key = grid.cell(p);
            grid.nx = grid.nx.max(key.0 + 1);
            grid.cells.entry(key).or_default().push(i);
        }
        grid
    }

    fn cell(&self, p: &(f64, f64)) -> (usize, usize) {
        (
            ((p.0 - self.x0) / self.eps).floor() as usize,
            ((p.1 - self.y0) / self.eps).floor() as usize,
        )
    }

    /// Indices within `eps` of point `i` (itself included), ascending.
    fn neighbors(&self, points: &[(f64, f64)], i: usize, out: &mut Vec<usize>) {
        out.clear();
        let p = points[i];
        let (cx, cy) = self.cell(&p);
        for gy in cy.saturating_sub(1)..=cy + 1 {
            for gx in cx.saturating_sub(1)..=cx + 1 {
                if let Some(bucket) = self.cells.get(&(gx, gy)) {
                    for &j in bucket {
                        let q = points[j];
                        if (p.0 - q.0).hypot(p.1 - q.1) <= self.eps {
                            out.push(j);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
    }
}
