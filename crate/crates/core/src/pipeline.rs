//! End-to-end placement of a case: per layer, global placement followed by
//! legalization. The bottom layer goes first so the top layer sees its
//! final positions.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::driver::{global_place, DriverConfig, PlacementMode};
use crate::io::solution::{LayerSummary, SolutionFile};
use crate::legalize::{legalize, LegalizeConfig};
use crate::model::{Layer, LegalityReport, ObjectiveValue, PlacementProblem, PlacementSolution, Rect};
use crate::objective::{hpwl, nets_touching};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSelection {
    pub top: bool,
    pub bottom: bool,
}

impl Default for LayerSelection {
    fn default() -> Self {
        LayerSelection { top: true, bottom: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub driver: DriverConfig,
    pub legalize: LegalizeConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerOutcome {
    pub layer: Layer,
    pub mode: PlacementMode,
    /// Objective of the best global placement.
    pub global: ObjectiveValue,
    pub round_f: Vec<f64>,
    pub hpwl_global: f64,
    pub hpwl: f64,
    pub legality: LegalityReport,
    pub seconds: f64,
}

impl LayerOutcome {
    pub fn is_legal(&self) -> bool {
        self.legality.is_legal() && self.legality.unplaceable.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub solution: PlacementSolution,
    pub layers: Vec<LayerOutcome>,
    pub contour: Option<Rect>,
    pub seconds: f64,
}

impl CaseOutcome {
    pub fn is_legal(&self) -> bool {
        self.layers.iter().all(LayerOutcome::is_legal)
    }

    pub fn layer(&self, layer: Layer) -> Option<&LayerOutcome> {
        self.layers.iter().find(|l| l.layer == layer)
    }

    pub fn solution_file(&self, problem: &PlacementProblem, seed: u64) -> SolutionFile {
        let summaries = self
            .layers
            .iter()
            .map(|l| LayerSummary {
                layer: l.layer,
                objective: ObjectiveValue {
                    wirelength: l.hpwl,
                    ..l.global
                },
                legality: l.legality.clone(),
            })
            .collect();
        let mut f = SolutionFile::new(problem, &self.solution, summaries);
        f.seed = Some(seed);
        f
    }
}

/// HPWL of every net touching a component of `layer`.
pub fn layer_hpwl(problem: &PlacementProblem, layer: Layer, sol: &PlacementSolution) -> f64 {
    let nets = nets_touching(problem, &problem.layer_components(layer));
    hpwl(problem, &nets, &sol.x, &sol.y)
}

/// Global placement and legalization of one layer of `problem`, starting
/// from the positions in `sol`.
pub fn place_layer(
    problem: &PlacementProblem,
    mode: PlacementMode,
    config: &PipelineConfig,
    rng: &mut ChaCha8Rng,
) -> (PlacementSolution, LayerOutcome, Option<Rect>) {
    let start = Instant::now();
    let layer = mode.layer();
    let global = global_place(problem, mode, &config.driver, rng);
    let hpwl_global = layer_hpwl(problem, layer, &global.solution);
    let mut legal_cfg = config.legalize;
    legal_cfg.contour_k = config.driver.contour_k;
    let (sol, report) = legalize(problem, mode, &global.solution, &legal_cfg, rng);
    let outcome = LayerOutcome {
        layer,
        mode,
        global: global.solution.objective,
        round_f: global.round_f.clone(),
        hpwl_global,
        hpwl: layer_hpwl(problem, layer, &sol),
        legality: report,
        seconds: start.elapsed().as_secs_f64(),
    };
    (sol, outcome, global.contour.map(|c| c.rect))
}

/// Places the selected layers of a case with one seeded random stream.
pub fn place_case(problem: &PlacementProblem, layers: LayerSelection, config: &PipelineConfig, seed: u64) -> CaseOutcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = problem.clone();
    let mut solution = PlacementSolution::from_problem(problem);
    let mut outcomes = Vec::new();
    let mut contour = None;

    let plan = [
        (layers.bottom, Layer::Bottom, PlacementMode::Bottom),
        (layers.top, Layer::Top, PlacementMode::Top),
    ];
    for (wanted, layer, mode) in plan {
        if !wanted || !problem.has_layer(layer) {
            continue;
        }
        let (sol, outcome, c) = place_layer(&current, mode, config, &mut rng);
        for ci in problem.layer_components(layer) {
            solution.x[ci] = sol.x[ci];
            solution.y[ci] = sol.y[ci];
            solution.r[ci] = sol.r[ci];
        }
        current = current.with_components(solution.apply(problem));
        contour = contour.or(c);
        outcomes.push(outcome);
    }
    if let Some(last) = outcomes.last() {
        solution.objective = last.global;
        solution.legality = last.legality.clone();
    }
    CaseOutcome {
        solution,
        layers: outcomes,
        contour,
        seconds: start.elapsed().as_secs_f64(),
    }
}
