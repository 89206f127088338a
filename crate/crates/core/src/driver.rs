//! Global placement: restart rounds of (re-initialize, evolve orientations
//! with per-cluster coordinate refinement), keeping the best round.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::DbscanParams;
use crate::csa::{csa_minimize_from, CsaConfig};
use crate::error::{Error, Result};
use crate::evolution::{evolve, init_population, EvolutionConfig, PopulationRefiner, SolutionIndividual};
use crate::init::{bottom_initialize, nearest_side, push_outside, random_initialize, top_initialize, ArtificialContour, ClusterAssignment};
use crate::model::{Layer, ObjectiveValue, Orientation, PlacementProblem, PlacementSolution, Rect};
use crate::objective::{
    boundary_penalty, footprint, hpwl, nets_touching, total_overlap_rects, LayerGeometry, ObjectiveWeights, OverlapModel,
    SubObjective,
};

/// Which sub-problem a layer is solved as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementMode {
    /// Centralized placement around the IC inside an artificial contour.
    Top,
    /// Pin-oriented placement under the IC, clustered by pin density.
    Bottom,
    /// Hard-block floorplanning inside a fixed outline (the IC outline).
    FixedOutline,
}

impl PlacementMode {
    pub fn layer(self) -> Layer {
        match self {
            PlacementMode::Top => Layer::Top,
            PlacementMode::Bottom | PlacementMode::FixedOutline => Layer::Bottom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriverConfig {
    pub i_max: usize,
    pub csa: CsaConfig,
    pub evolution: EvolutionConfig,
    pub top_weights: ObjectiveWeights,
    /// Boundary weight used for fixed-outline floorplans.
    pub outline_gamma: f64,
    /// Contour control: contour area = k_c * component area + IC area.
    pub contour_k: f64,
    /// Explicit DBSCAN parameters; the k-distance heuristic when absent.
    pub dbscan: Option<DbscanParams>,
    pub overlap_model: OverlapModel,
    /// Extra layer-wide CSA passes on the best round, each multiplying the
    /// overlap weight by `spread_factor`; 0 disables them.
    pub spread_rounds: usize,
    pub spread_factor: f64,
    /// Starting step control of each spreading pass.
    pub spread_step: f64,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            i_max: 10,
            csa: CsaConfig::default(),
            evolution: EvolutionConfig::default(),
            top_weights: ObjectiveWeights::new(1.0, 20.0, 100.0),
            outline_gamma: 100.0,
            contour_k: 1.5,
            dbscan: None,
            overlap_model: OverlapModel::PairwiseArea,
            spread_rounds: 6,
            spread_factor: 2.0,
            spread_step: 50.0,
        }
    }
}

impl DriverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.i_max < 1 {
            return Err(Error::Config("driver.i_max must be >= 1".into()));
        }
        if !(self.contour_k > 0.0) {
            return Err(Error::Config("driver.contour_k must be > 0".into()));
        }
        if !(self.spread_factor >= 1.0) {
            return Err(Error::Config("driver.spread_factor must be >= 1".into()));
        }
        if !(self.spread_step > 0.0) {
            return Err(Error::Config("driver.spread_step must be > 0".into()));
        }
        self.csa.validate()?;
        self.evolution.validate()
    }
}

/// Overlap weight of a bottom cluster: `(size - 10) / 10`, floored at 1.
pub fn cluster_beta(size: usize) -> f64 {
    ((size as f64 - 10.0) / 10.0).max(1.0)
}

#[derive(Debug, Clone)]
pub struct ClusterSpec {
    pub members: Vec<usize>,
    /// Nets with at least one member in the cluster.
    pub nets: Vec<usize>,
    pub weights: ObjectiveWeights,
}

/// Everything one round starts from.
#[derive(Debug, Clone)]
pub struct RoundSetup {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub clusters: Vec<ClusterSpec>,
    pub excluded: Vec<bool>,
    pub geometry: LayerGeometry,
    pub assignment: Option<ClusterAssignment>,
    pub contour: Option<ArtificialContour>,
    pub step: f64,
}

pub fn layer_geometry(problem: &PlacementProblem, mode: PlacementMode, contour: Option<&ArtificialContour>) -> LayerGeometry {
    let ic = problem.ic_outline().rect();
    match mode {
        PlacementMode::Top => LayerGeometry {
            region: contour.map(|c| c.rect),
            obstacles: vec![ic],
        },
        PlacementMode::Bottom => LayerGeometry {
            region: None,
            obstacles: Vec::new(),
        },
        PlacementMode::FixedOutline => LayerGeometry {
            region: Some(ic),
            obstacles: Vec::new(),
        },
    }
}

/// Fresh starting coordinates, clusters and weights for one round.
pub fn reset_xy<R: Rng + ?Sized>(
    problem: &PlacementProblem,
    mode: PlacementMode,
    config: &DriverConfig,
    rng: &mut R,
) -> RoundSetup {
    let layer = mode.layer();
    let step = config.csa.s0;
    match mode {
        PlacementMode::Top => {
            let init = top_initialize(problem, config.contour_k);
            let members = problem.layer_components(layer);
            let nets = nets_touching(problem, &members);
            RoundSetup {
                x: init.x,
                y: init.y,
                clusters: vec![ClusterSpec {
                    members,
                    nets,
                    weights: config.top_weights,
                }],
                excluded: vec![false; problem.components().len()],
                geometry: layer_geometry(problem, mode, Some(&init.contour)),
                assignment: None,
                contour: Some(init.contour),
                step,
            }
        }
        PlacementMode::Bottom => {
            let init = bottom_initialize(problem, config.dbscan, rng);
            let clusters = init
                .assignment
                .members()
                .into_iter()
                .map(|members| {
                    let nets = nets_touching(problem, &members);
                    let beta = cluster_beta(members.len());
                    ClusterSpec {
                        members,
                        nets,
                        weights: ObjectiveWeights::new(1.0, beta, 0.0),
                    }
                })
                .collect();
            RoundSetup {
                x: init.x,
                y: init.y,
                clusters,
                excluded: init.excluded,
                geometry: layer_geometry(problem, mode, None),
                assignment: Some(init.assignment),
                contour: None,
                step,
            }
        }
        PlacementMode::FixedOutline => {
            let region = problem.ic_outline().rect();
            let (x, y) = random_initialize(problem, layer, &region, rng);
            let members = problem.layer_components(layer);
            let nets = nets_touching(problem, &members);
            let beta = cluster_beta(members.len());
            RoundSetup {
                x,
                y,
                clusters: vec![ClusterSpec {
                    members,
                    nets,
                    weights: ObjectiveWeights::new(1.0, beta, config.outline_gamma),
                }],
                excluded: vec![false; problem.components().len()],
                geometry: layer_geometry(problem, mode, None),
                assignment: None,
                contour: None,
                step,
            }
        }
    }
}

/// Per-cluster coordinate refinement of a population, keeping the best
/// solution seen for every cluster.
pub struct ClusterRefiner<'a> {
    problem: &'a PlacementProblem,
    setup: &'a RoundSetup,
    /// Layer components in the order of the individuals' vectors.
    layer: Vec<usize>,
    csa: CsaConfig,
    model: OverlapModel,
    base_r: Vec<Orientation>,
    cluster_best: Vec<Option<ClusterBest>>,
}

#[derive(Debug, Clone)]
struct ClusterBest {
    f: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    r: Vec<Orientation>,
}

impl<'a> ClusterRefiner<'a> {
    pub fn new(problem: &'a PlacementProblem, setup: &'a RoundSetup, layer: Vec<usize>, csa: CsaConfig, model: OverlapModel) -> Self {
        ClusterRefiner {
            problem,
            setup,
            layer,
            csa,
            model,
            base_r: problem.components().iter().map(|c| c.orientation).collect(),
            cluster_best: vec![None; setup.clusters.len()],
        }
    }

    /// Problem-order coordinate and orientation arrays for an individual.
    fn expand(&self, ind: &SolutionIndividual) -> (Vec<f64>, Vec<f64>, Vec<Orientation>) {
        let mut x = self.setup.x.clone();
        let mut y = self.setup.y.clone();
        let mut r = self.base_r.clone();
        for (k, &ci) in self.layer.iter().enumerate() {
            x[ci] = ind.x[k];
            y[ci] = ind.y[k];
            if !self.setup.excluded[ci] {
                r[ci] = ind.r[k];
            }
        }
        (x, y, r)
    }

    fn obstacles(&self, x: &[f64], y: &[f64], r: &[Orientation]) -> Vec<Rect> {
        let comps = self.problem.components();
        let mut obs = self.setup.geometry.obstacles.clone();
        for &ci in &self.layer {
            if self.setup.excluded[ci] {
                let (w, h) = crate::model::effective_dims(comps[ci].width, comps[ci].height, r[ci]);
                obs.push(Rect::centered(x[ci], y[ci], w, h));
            }
        }
        obs
    }

    fn cluster_objective(&self, cluster: &ClusterSpec, x: &[f64], y: &[f64], r: &[Orientation]) -> (SubObjective, Vec<f64>) {
        let obj = SubObjective::for_components(
            self.problem,
            &cluster.members,
            &cluster.nets,
            x,
            y,
            r,
            self.obstacles(x, y, r),
            self.setup.geometry.region,
            cluster.weights,
            self.model,
        );
        let mut u: Vec<f64> = cluster.members.iter().map(|&c| x[c]).collect();
        u.extend(cluster.members.iter().map(|&c| y[c]));
        (obj, u)
    }

    /// Per-cluster objective of a full problem-order state.
    pub fn cluster_values(&self, x: &[f64], y: &[f64], r: &[Orientation]) -> Vec<ObjectiveValue> {
        self.setup
            .clusters
            .iter()
            .map(|c| {
                let (obj, u) = self.cluster_objective(c, x, y, r);
                obj.evaluate(&u)
            })
            .collect()
    }

    fn refine_one(&self, ind: &mut SolutionIndividual) -> Vec<f64> {
        let (mut x, mut y, r) = self.expand(ind);
        let start_step = ind.step;
        let results: Vec<(Vec<f64>, f64, f64)> = self
            .setup
            .clusters
            .par_iter()
            .map(|cluster| {
                if cluster.members.is_empty() {
                    return (Vec::new(), 0.0, start_step);
                }
                let (obj, u0) = self.cluster_objective(cluster, &x, &y, &r);
                let res = csa_minimize_from(&obj, &u0, &self.csa, start_step);
                (res.u_best, res.f_best, res.step)
            })
            .collect();
        let mut step = start_step;
        let mut fs = Vec::with_capacity(results.len());
        for (cluster, (u, f, s)) in self.setup.clusters.iter().zip(results) {
            let n = cluster.members.len();
            for (v, &ci) in cluster.members.iter().enumerate() {
                x[ci] = u[v];
                y[ci] = u[n + v];
            }
            if n > 0 {
                step = step.min(s);
            }
            fs.push(f);
        }
        for (k, &ci) in self.layer.iter().enumerate() {
            ind.x[k] = x[ci];
            ind.y[k] = y[ci];
        }
        ind.step = step;
        ind.fitness = fs.iter().sum();
        fs
    }

    /// The concatenation of per-cluster bests with its summed fitness.
    pub fn integrated(&self) -> Option<SolutionIndividual> {
        if self.cluster_best.iter().any(Option::is_none) {
            return None;
        }
        let mut x: Vec<f64> = self.layer.iter().map(|&c| self.setup.x[c]).collect();
        let mut y: Vec<f64> = self.layer.iter().map(|&c| self.setup.y[c]).collect();
        let mut r: Vec<Orientation> = self.layer.iter().map(|&c| self.base_r[c]).collect();
        let pos: std::collections::HashMap<usize, usize> = self.layer.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        let mut f = 0.0;
        for (cluster, best) in self.setup.clusters.iter().zip(&self.cluster_best) {
            let best = best.as_ref()?;
            f += best.f;
            for (v, &ci) in cluster.members.iter().enumerate() {
                let k = pos[&ci];
                x[k] = best.x[v];
                y[k] = best.y[v];
                r[k] = best.r[v];
            }
        }
        Some(SolutionIndividual {
            r,
            x,
            y,
            fitness: f,
            step: 0.0,
        })
    }
}

impl PopulationRefiner for ClusterRefiner<'_> {
    fn update(&mut self, population: &mut [SolutionIndividual]) {
        let this = &*self;
        let per_ind: Vec<Vec<f64>> = population.par_iter_mut().map(|ind| this.refine_one(ind)).collect();
        for (ind, fs) in population.iter().zip(per_ind) {
            let (x, y, r) = self.expand(ind);
            for (ci, (cluster, f)) in self.setup.clusters.iter().zip(fs).enumerate() {
                let better = self.cluster_best[ci].as_ref().is_none_or(|b| f < b.f);
                if better {
                    self.cluster_best[ci] = Some(ClusterBest {
                        f,
                        x: cluster.members.iter().map(|&c| x[c]).collect(),
                        y: cluster.members.iter().map(|&c| y[c]).collect(),
                        r: cluster.members.iter().map(|&c| r[c]).collect(),
                    });
                }
            }
        }
    }

    fn best(&self) -> Option<SolutionIndividual> {
        self.integrated()
    }
}

#[derive(Debug, Clone)]
pub struct GlobalPlacement {
    /// Coordinates for every component; other layers are untouched.
    pub solution: PlacementSolution,
    pub mode: PlacementMode,
    /// Objective of the best solution of each round.
    pub round_f: Vec<f64>,
    /// Objective of the starting coordinates of each round, before any
    /// refinement and with all orientations at their input value.
    pub initial_f: Vec<f64>,
    pub assignment: Option<ClusterAssignment>,
    pub contour: Option<ArtificialContour>,
    pub excluded: Vec<bool>,
    pub geometry: LayerGeometry,
}

/// Layer objective with the round's cluster weights: per-cluster composites
/// summed, with layer-wide wirelength, overlap and boundary totals.
pub fn evaluate_layer(
    problem: &PlacementProblem,
    mode: PlacementMode,
    setup: &RoundSetup,
    model: OverlapModel,
    x: &[f64],
    y: &[f64],
    r: &[Orientation],
) -> ObjectiveValue {
    let layer = problem.layer_components(mode.layer());
    let refiner = ClusterRefiner::new(problem, setup, layer.clone(), CsaConfig::default(), model);
    let f = refiner.cluster_values(x, y, r).iter().map(|v| v.f).sum();
    let mut comps: Vec<_> = layer.iter().map(|&c| problem.components()[c].clone()).collect();
    for (c, &ci) in comps.iter_mut().zip(&layer) {
        c.x = x[ci];
        c.y = y[ci];
        c.orientation = r[ci];
    }
    let mut overlap_rects: Vec<Rect> = comps.iter().map(footprint).collect();
    overlap_rects.extend(setup.geometry.obstacles.iter().copied());
    let overlap = total_overlap_rects(&overlap_rects)
        - total_overlap_rects(&setup.geometry.obstacles);
    ObjectiveValue {
        wirelength: hpwl(problem, &nets_touching(problem, &layer), x, y),
        overlap: if comps.is_empty() { 0.0 } else { overlap.max(0.0) },
        boundary: setup.geometry.region.map_or(0.0, |reg| boundary_penalty(&comps, &reg)),
        f,
    }
}

/// Layer-wide CSA passes with a growing overlap weight, pulling the final
/// global placement toward zero overlap before legalization.
fn spread(problem: &PlacementProblem, mode: PlacementMode, setup: &RoundSetup, config: &DriverConfig, sol: &mut PlacementSolution) {
    let comps = problem.components();
    let layer = problem.layer_components(mode.layer());
    // Bottom close-to-pin components sit on their pins, pulled just inside
    // the IC when a pin is near its edge, and stay there.
    let mut fixed = setup.excluded.clone();
    if mode != PlacementMode::Top {
        let ic = problem.ic_outline().rect();
        for &ci in &layer {
            let pin = comps[ci].close_to_pin_target.as_deref().and_then(|id| problem.pin_index(id));
            if let (Some(p), false) = (pin, fixed[ci]) {
                let (w, h) = crate::model::effective_dims(comps[ci].width, comps[ci].height, sol.r[ci]);
                let pin = &problem.ic_pins()[p];
                sol.x[ci] = pin.x.min(ic.x1 - w / 2.0).max(ic.x0 + w / 2.0);
                sol.y[ci] = pin.y.min(ic.y1 - h / 2.0).max(ic.y0 + h / 2.0);
                fixed[ci] = true;
            }
        }
    }
    let movable: Vec<usize> = layer.iter().copied().filter(|&c| !fixed[c]).collect();
    if movable.is_empty() {
        return;
    }
    // Overlap with the IC has no gradient once a component is buried in it,
    // so buried top components restart just outside the nearest edge.
    if mode == PlacementMode::Top {
        let ic = problem.ic_outline().rect();
        for &ci in &movable {
            if ic.strictly_contains_point(sol.x[ci], sol.y[ci]) {
                let (w, h) = crate::model::effective_dims(comps[ci].width, comps[ci].height, sol.r[ci]);
                let side = nearest_side(&ic, sol.x[ci], sol.y[ci]);
                (sol.x[ci], sol.y[ci]) = push_outside(&ic, side, sol.x[ci], sol.y[ci], w, h);
            }
        }
    }
    let nets = nets_touching(problem, &movable);
    let (region, mut weights) = match mode {
        PlacementMode::Top => (setup.geometry.region, config.top_weights),
        PlacementMode::Bottom | PlacementMode::FixedOutline => (
            Some(problem.ic_outline().rect()),
            ObjectiveWeights::new(1.0, cluster_beta(movable.len()), config.outline_gamma),
        ),
    };
    // Footprints carry the default gap so the result also tends to meet the
    // spacing rules.
    let margin = problem.spacing_rules().default_gap;
    let mut obstacles = setup.geometry.obstacles.clone();
    for &ci in &layer {
        if fixed[ci] {
            let (w, h) = crate::model::effective_dims(comps[ci].width, comps[ci].height, sol.r[ci]);
            obstacles.push(Rect::centered(sol.x[ci], sol.y[ci], w + margin, h + margin));
        }
    }
    for _ in 0..config.spread_rounds {
        weights.beta *= config.spread_factor;
        weights.gamma *= config.spread_factor;
        let obj = SubObjective::for_components(
            problem,
            &movable,
            &nets,
            &sol.x,
            &sol.y,
            &sol.r,
            obstacles.clone(),
            region,
            weights,
            config.overlap_model,
        )
        .inflated(margin);
        let mut u: Vec<f64> = movable.iter().map(|&c| sol.x[c]).collect();
        u.extend(movable.iter().map(|&c| sol.y[c]));
        let res = csa_minimize_from(&obj, &u, &config.csa, config.spread_step);
        let n = movable.len();
        for (v, &ci) in movable.iter().enumerate() {
            sol.x[ci] = res.u_best[v];
            sol.y[ci] = res.u_best[n + v];
        }
    }
}

/// Runs `i_max` restart rounds on the layer of `mode` and returns the round
/// with the lowest objective.
pub fn global_place<R: Rng + ?Sized>(
    problem: &PlacementProblem,
    mode: PlacementMode,
    config: &DriverConfig,
    rng: &mut R,
) -> GlobalPlacement {
    let layer = problem.layer_components(mode.layer());
    let mut best: Option<(ObjectiveValue, PlacementSolution, RoundSetup)> = None;
    let mut round_f = Vec::with_capacity(config.i_max);
    let mut initial_f = Vec::with_capacity(config.i_max);

    for _ in 0..config.i_max {
        let setup = reset_xy(problem, mode, config, rng);
        let base_r: Vec<Orientation> = problem.components().iter().map(|c| c.orientation).collect();
        initial_f.push(evaluate_layer(problem, mode, &setup, config.overlap_model, &setup.x, &setup.y, &base_r).f);

        let lx: Vec<f64> = layer.iter().map(|&c| setup.x[c]).collect();
        let ly: Vec<f64> = layer.iter().map(|&c| setup.y[c]).collect();
        let (q, p) = init_population(&lx, &ly, config.evolution.npop, setup.step, rng);
        let mut refiner = ClusterRefiner::new(problem, &setup, layer.clone(), config.csa, config.overlap_model);
        let outcome = if layer.is_empty() {
            None
        } else {
            Some(evolve(q, p, &mut refiner, &config.evolution, rng))
        };

        let mut sol = PlacementSolution::from_problem(problem);
        sol.x.clone_from(&setup.x);
        sol.y.clone_from(&setup.y);
        if let Some(out) = &outcome {
            for (k, &ci) in layer.iter().enumerate() {
                sol.x[ci] = out.best.x[k];
                sol.y[ci] = out.best.y[k];
                if !setup.excluded[ci] {
                    sol.r[ci] = out.best.r[k];
                }
            }
        }
        let value = evaluate_layer(problem, mode, &setup, config.overlap_model, &sol.x, &sol.y, &sol.r);
        sol.objective = value;
        round_f.push(value.f);
        let better = best.as_ref().is_none_or(|(b, _, _)| value.f < b.f);
        if better {
            best = Some((value, sol, setup));
        }
    }

    let (_, mut solution, setup) = best.expect("i_max >= 1");
    if config.spread_rounds > 0 && !layer.is_empty() {
        spread(problem, mode, &setup, config, &mut solution);
        solution.objective = evaluate_layer(problem, mode, &setup, config.overlap_model, &solution.x, &solution.y, &solution.r);
    }
    GlobalPlacement {
        solution,
        mode,
        round_f,
        initial_f,
        assignment: setup.assignment,
        contour: setup.contour,
        excluded: setup.excluded,
        geometry: setup.geometry,
    }
}
