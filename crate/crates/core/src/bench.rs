//! Fixed-outline floorplanning benchmarks: outline construction, seeded
//! independent runs and run statistics.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{global_place, PlacementMode};
use crate::error::{Error, Result};
use crate::io::bookshelf::BookshelfCircuit;
use crate::legalize::legalize;
use crate::model::{Layer, Outline, PlacementSolution};
use crate::pipeline::{layer_hpwl, PipelineConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchProtocol {
    /// Whitespace fraction added to the total block area.
    pub gamma: f64,
    /// Outline height over width.
    pub aspect_ratios: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
}

impl Default for BenchProtocol {
    fn default() -> Self {
        BenchProtocol {
            gamma: 0.15,
            aspect_ratios: vec![1.0, 1.5, 2.0],
            runs: 30,
            seed: 0,
        }
    }
}

impl BenchProtocol {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) {
            return Err(Error::Config("bench.gamma must be >= 0".into()));
        }
        if self.runs < 1 {
            return Err(Error::Config("bench.runs must be >= 1".into()));
        }
        if self.aspect_ratios.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("bench.aspect_ratios must be > 0".into()));
        }
        Ok(())
    }
}

/// Outline of area `(1 + gamma) * area` with height / width = `aspect`.
pub fn build_outline(total_block_area: f64, gamma: f64, aspect: f64) -> Outline {
    let width = (total_block_area * (1.0 + gamma) / aspect).sqrt();
    Outline {
        width,
        height: aspect * width,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub circuit: String,
    pub aspect: f64,
    pub run: usize,
    pub seed: u64,
    pub success: bool,
    pub hpwl: f64,
    pub overlap: f64,
    pub out_of_bounds: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub hpwl_mean: f64,
    pub hpwl_std: f64,
    pub time_mean: f64,
    pub time_std: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

impl RunStats {
    /// Statistics over all runs; HPWL is averaged over every run.
    pub fn from_records(records: &[RunRecord]) -> Self {
        let successes = records.iter().filter(|r| r.success).count();
        let hp: Vec<f64> = records.iter().map(|r| r.hpwl).collect();
        let t: Vec<f64> = records.iter().map(|r| r.seconds).collect();
        let (hpwl_mean, hpwl_std) = mean_std(&hp);
        let (time_mean, time_std) = mean_std(&t);
        RunStats {
            runs: records.len(),
            successes,
            success_rate: if records.is_empty() { 0.0 } else { successes as f64 / records.len() as f64 },
            hpwl_mean,
            hpwl_std,
            time_mean,
            time_std,
        }
    }
}

/// One fixed-outline run: global placement with the boundary term, then
/// legalization inside the outline.
pub fn run_once(
    circuit: &BookshelfCircuit,
    outline: Outline,
    config: &PipelineConfig,
    seed: u64,
) -> Result<(RunRecord, PlacementSolution)> {
    let problem = circuit.to_problem(outline)?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let global = global_place(&problem, PlacementMode::FixedOutline, &config.driver, &mut rng);
    let (sol, report) = legalize(&problem, PlacementMode::FixedOutline, &global.solution, &config.legalize, &mut rng);
    let seconds = start.elapsed().as_secs_f64();
    let record = RunRecord {
        circuit: String::new(),
        aspect: outline.height / outline.width,
        run: 0,
        seed,
        success: report.is_legal() && report.unplaceable.is_empty(),
        hpwl: layer_hpwl(&problem, Layer::Bottom, &sol),
        overlap: report.total_overlap_area,
        out_of_bounds: report.out_of_bounds_length,
        seconds,
    };
    Ok((record, sol))
}

/// `protocol.runs` independent runs at one aspect ratio. Run `k` uses seed
/// `protocol.seed + k`; records come back in run order.
pub fn run_benchmark(
    name: &str,
    circuit: &BookshelfCircuit,
    aspect: f64,
    protocol: &BenchProtocol,
    config: &PipelineConfig,
) -> Result<(RunStats, Vec<RunRecord>)> {
    protocol.validate()?;
    let outline = build_outline(circuit.total_block_area(), protocol.gamma, aspect);
    let records: Vec<RunRecord> = (0..protocol.runs)
        .into_par_iter()
        .map(|k| {
            let seed = protocol.seed + k as u64;
            run_once(circuit, outline, config, seed).map(|(mut r, _)| {
                r.circuit = name.to_string();
                r.aspect = aspect;
                r.run = k;
                r
            })
        })
        .collect::<Result<_>>()?;
    Ok((RunStats::from_records(&records), records))
}

/// A published row: success rate, mean HPWL and seconds per run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub circuit: &'static str,
    pub aspect: f64,
    pub parquet: (f64, f64, f64),
    pub iarfp: (f64, f64, f64),
    pub reference: (f64, f64, f64),
}

const fn row(circuit: &'static str, aspect: f64, parquet: (f64, f64, f64), iarfp: (f64, f64, f64), reference: (f64, f64, f64)) -> ReferenceRow {
    ReferenceRow {
        circuit,
        aspect,
        parquet,
        iarfp,
        reference,
    }
}

/// Published results with 15% whitespace, for annotating reports.
pub const REFERENCE_ROWS: [ReferenceRow; 15] = [
    row("ami33", 1.0, (0.18, 88689.0, 2.19), (0.90, 90640.0, 2.72), (0.70, 117746.0, 0.58)),
    row("ami33", 1.5, (0.36, 99106.0, 2.18), (0.98, 93263.0, 4.18), (0.70, 121308.0, 0.53)),
    row("ami33", 2.0, (0.10, 99092.0, 2.17), (0.70, 93590.0, 4.19), (0.45, 127489.0, 0.76)),
    row("ami49", 1.0, (0.50, 1205430.0, 5.39), (0.86, 1065665.0, 5.31), (1.00, 870427.0, 0.31)),
    row("ami49", 1.5, (0.54, 1227390.0, 5.37), (0.90, 1050709.0, 5.32), (1.00, 872344.0, 0.41)),
    row("ami49", 2.0, (0.50, 1264920.0, 5.42), (0.84, 1109924.0, 5.36), (1.00, 892254.0, 0.65)),
    row("n100", 1.0, (0.64, 343496.0, 20.56), (1.00, 312400.0, 7.07), (1.00, 292339.0, 0.83)),
    row("n100", 1.5, (0.42, 337230.0, 20.59), (1.00, 313305.0, 7.34), (1.00, 300342.0, 0.97)),
    row("n100", 2.0, (0.40, 346051.0, 20.38), (1.00, 310485.0, 7.48), (1.00, 308472.0, 1.06)),
    row("n200", 1.0, (0.60, 653990.0, 88.97), (1.00, 561799.0, 20.75), (1.00, 521598.0, 2.31)),
    row("n200", 1.5, (0.30, 648938.0, 91.46), (1.00, 571687.0, 21.11), (1.00, 529829.0, 2.52)),
    row("n200", 2.0, (0.30, 678282.0, 88.59), (1.00, 559333.0, 22.37), (1.00, 540140.0, 2.64)),
    row("n300", 1.0, (0.80, 798571.0, 189.97), (1.00, 667628.0, 34.29), (1.00, 587840.0, 3.96)),
    row("n300", 1.5, (0.10, 847515.0, 194.27), (1.00, 658637.0, 36.63), (1.00, 606776.0, 3.94)),
    row("n300", 2.0, (0.10, 915228.0, 191.06), (1.00, 658410.0, 36.50), (1.00, 627223.0, 4.26)),
];

pub fn reference_row(circuit: &str, aspect: f64) -> Option<&'static ReferenceRow> {
    REFERENCE_ROWS.iter().find(|r| r.circuit == circuit && (r.aspect - aspect).abs() < 1e-9)
}
