//! Acceptance checks. Each criterion prints one PASS or FAIL line; the
//! process exits non-zero when any of them fails.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use pcbplace::bench::{run_benchmark, BenchProtocol};
use pcbplace::cluster::{dbscan, DbscanParams, Label};
use pcbplace::csa::{csa_minimize, CsaConfig, Subdifferentiable};
use pcbplace::evolution::{evolve, init_population, EvolutionConfig, PopulationRefiner, SolutionIndividual};
use pcbplace::gen::{generate_case, CaseSpec};
use pcbplace::io::bookshelf::{parse_bookshelf, BookshelfPaths};
use pcbplace::model::{effective_dims, Component, Layer, Orientation, PlacementProblem, PlacementSolution, Rect};
use pcbplace::objective::{hpwl, overlap_x, overlap_y, total_overlap, ObjectiveWeights, OverlapModel, Pt, SubObjective};
use pcbplace::pipeline::{place_case, LayerSelection, PipelineConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

const GEOMETRY_TOL: f64 = 1e-9;
const GEOMETRY_PAIRS: usize = 100_000;
const GEOMETRY_SECONDS: f64 = 5.0;

const GRAD_SAMPLES: usize = 1_000;
const GRAD_STEP: f64 = 1e-6;
const GRAD_REL_TOL: f64 = 1e-4;
/// Samples closer than this to any kink of the composite are redrawn.
const KINK_MARGIN: f64 = 1e-3;

const CSA_TARGET: f64 = 1e-3;

const EVOLUTION_RUNS: usize = 50;
const EVOLUTION_TOL: f64 = 1e-9;
const EVOLUTION_MIN_RATE: f64 = 0.9;

const TABLE_HPWL_TOL: f64 = 0.15;
const TABLE_TIME_FACTOR: f64 = 10.0;
const TABLE_RUNS: usize = 30;
const TABLE_GAMMA: f64 = 0.15;

const LEGALIZE_CASES: usize = 100;

const PROXY_RUNS: u64 = 10;
const PROXY_SECONDS: f64 = 60.0;
const PROXY_REL_STD: f64 = 0.10;

const DBSCAN_FIXTURES: usize = 20;

type Check = fn() -> (bool, String);

fn main() {
    let checks: [(&str, Check); 9] = [
        ("1 geometry oracle", geometry_oracle),
        ("2 subgradient vs finite differences", subgradient_fd),
        ("3 csa on a quadratic", csa_quadratic),
        ("4 orientation evolution vs enumeration", evolution_oracle),
        ("5 fixed-outline benchmark table", benchmark_table),
        ("6 legalization postconditions", legalization_postconditions),
        ("7 industrial-case proxy", industrial_proxy),
        ("8 dbscan vs brute force", dbscan_oracle),
        ("9 cli determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------- 1 ----------

fn random_component<R: Rng>(rng: &mut R, id: usize) -> Component {
    let mut c = Component::new(format!("c{id}"), rng.random_range(0.5..60.0), rng.random_range(0.5..60.0), Layer::Bottom);
    c.x = rng.random_range(-80.0..80.0);
    c.y = rng.random_range(-80.0..80.0);
    c.orientation = Orientation::wrapping(rng.random_range(0..4));
    c
}

/// Edges of the footprint, rotating by swapping the sides on odd quarter turns.
fn edges(c: &Component) -> (f64, f64, f64, f64) {
    let (w, h) = if c.orientation.index() % 2 == 1 { (c.height, c.width) } else { (c.width, c.height) };
    (c.x - w / 2.0, c.x + w / 2.0, c.y - h / 2.0, c.y + h / 2.0)
}

fn interval_intersection(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

fn oracle_overlap(a: &Component, b: &Component) -> (f64, f64) {
    let (ax0, ax1, ay0, ay1) = edges(a);
    let (bx0, bx1, by0, by1) = edges(b);
    (interval_intersection(ax0, ax1, bx0, bx1), interval_intersection(ay0, ay1, by0, by1))
}

fn geometry_oracle() -> (bool, String) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_axis: f64 = 0.0;
    let mut touching = 0;
    for k in 0..GEOMETRY_PAIRS {
        let a = random_component(&mut rng, 0);
        let mut b = random_component(&mut rng, 1);
        // every tenth pair touches along a vertical edge
        if k % 10 == 0 {
            let (aw, _) = a.effective_dims();
            let (bw, _) = b.effective_dims();
            b.x = a.x + (aw + bw) / 2.0 * if k % 20 == 0 { 1.0 } else { -1.0 };
            touching += 1;
        }
        let (ox, oy) = oracle_overlap(&a, &b);
        worst_axis = worst_axis.max((overlap_x(&a, &b) - ox).abs()).max((overlap_y(&a, &b) - oy).abs());
    }
    let mut worst_total: f64 = 0.0;
    for &(sets, size) in &[(400usize, 30usize), (20, 400)] {
        for _ in 0..sets {
            let comps: Vec<Component> = (0..size).map(|i| random_component(&mut rng, i)).collect();
            let mut expect = 0.0;
            for i in 0..size {
                for j in i + 1..size {
                    let (ox, oy) = oracle_overlap(&comps[i], &comps[j]);
                    expect += ox * oy;
                }
            }
            let got = total_overlap(&comps);
            worst_total = worst_total.max((got - expect).abs() / expect.max(1.0));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst_axis <= GEOMETRY_TOL && worst_total <= GEOMETRY_TOL && secs < GEOMETRY_SECONDS;
    (
        ok,
        format!(
            "{GEOMETRY_PAIRS} pairs ({touching} touching), max axis error {worst_axis:.2e}, max relative total error {worst_total:.2e}, {secs:.2}s of {GEOMETRY_SECONDS}s"
        ),
    )
}

// ---------- 2 ----------

struct GradFixture {
    dims: Vec<(f64, f64)>,
    nets: Vec<Vec<Pt>>,
    region: Rect,
    u: Vec<f64>,
}

fn kink_distance(fx: &GradFixture) -> f64 {
    let n = fx.dims.len();
    let u = &fx.u;
    let mut m = f64::INFINITY;
    for axis in 0..2 {
        for net in &fx.nets {
            let mut vals: Vec<f64> = net
                .iter()
                .map(|p| match *p {
                    Pt::Var(v) => u[axis * n + v],
                    Pt::Fixed(x, y) => [x, y][axis],
                })
                .collect();
            vals.sort_by(f64::total_cmp);
            let k = vals.len();
            m = m.min(vals[1] - vals[0]).min(vals[k - 1] - vals[k - 2]);
        }
        for i in 0..n {
            let wi = if axis == 0 { fx.dims[i].0 } else { fx.dims[i].1 };
            for j in i + 1..n {
                let wj = if axis == 0 { fx.dims[j].0 } else { fx.dims[j].1 };
                let d = (u[axis * n + i] - u[axis * n + j]).abs();
                m = m.min(d).min((d - (wi - wj).abs() / 2.0).abs()).min((d - (wi + wj) / 2.0).abs());
            }
            let (lo, hi) = if axis == 0 { (fx.region.x0, fx.region.x1) } else { (fx.region.y0, fx.region.y1) };
            let c = u[axis * n + i];
            m = m.min((lo + wi / 2.0 - c).abs()).min((c + wi / 2.0 - hi).abs());
        }
    }
    m
}

fn oracle_overlap_area(fx: &GradFixture) -> f64 {
    let n = fx.dims.len();
    let mut d = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let ox = interval_intersection(
                fx.u[i] - fx.dims[i].0 / 2.0,
                fx.u[i] + fx.dims[i].0 / 2.0,
                fx.u[j] - fx.dims[j].0 / 2.0,
                fx.u[j] + fx.dims[j].0 / 2.0,
            );
            let oy = interval_intersection(
                fx.u[n + i] - fx.dims[i].1 / 2.0,
                fx.u[n + i] + fx.dims[i].1 / 2.0,
                fx.u[n + j] - fx.dims[j].1 / 2.0,
                fx.u[n + j] + fx.dims[j].1 / 2.0,
            );
            d += ox * oy;
        }
    }
    d
}

fn grad_fixture<R: Rng>(rng: &mut R) -> GradFixture {
    let n = 10;
    let dims = (0..n).map(|_| (rng.random_range(20.0..80.0), rng.random_range(20.0..80.0))).collect();
    let nets = (0..5)
        .map(|_| {
            let degree = rng.random_range(2..=4);
            let mut net: Vec<Pt> = (0..degree).map(|_| Pt::Var(rng.random_range(0..n))).collect();
            if rng.random_bool(0.5) {
                net.push(Pt::Fixed(rng.random_range(0.0..300.0), rng.random_range(0.0..300.0)));
            }
            net
        })
        .collect();
    let u = (0..2 * n).map(|_| rng.random_range(0.0..300.0)).collect();
    GradFixture {
        dims,
        nets,
        region: Rect::new(20.0, 20.0, 280.0, 280.0),
        u,
    }
}

fn subgradient_fd() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let weights = ObjectiveWeights::new(1.0, 2.0, 3.0);
    let mut accepted = 0;
    let mut rejected = 0;
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    while accepted < GRAD_SAMPLES {
        let fx = grad_fixture(&mut rng);
        // a net with a repeated member has a tie at any position
        let repeated = fx.nets.iter().any(|net| {
            let mut vs: Vec<usize> = net.iter().filter_map(|p| if let Pt::Var(v) = p { Some(*v) } else { None }).collect();
            let k = vs.len();
            vs.sort_unstable();
            vs.dedup();
            vs.len() != k
        });
        if repeated || kink_distance(&fx) <= KINK_MARGIN || oracle_overlap_area(&fx) <= KINK_MARGIN {
            rejected += 1;
            continue;
        }
        accepted += 1;
        let obj = SubObjective::new(fx.dims.clone(), Vec::new(), fx.nets.clone(), Some(fx.region), weights, OverlapModel::PairwiseArea);
        let mut g = vec![0.0; fx.u.len()];
        obj.value_and_subgradient(&fx.u, &mut g);
        let mut sample_bad = false;
        for k in 0..fx.u.len() {
            let mut up = fx.u.clone();
            let mut dn = fx.u.clone();
            up[k] += GRAD_STEP;
            dn[k] -= GRAD_STEP;
            let fd = (obj.evaluate(&up).f - obj.evaluate(&dn).f) / (2.0 * GRAD_STEP);
            let rel = (g[k] - fd).abs() / g[k].abs().max(fd.abs()).max(1.0);
            worst = worst.max(rel);
            sample_bad |= rel >= GRAD_REL_TOL;
        }
        bad += sample_bad as usize;
    }
    (
        bad == 0,
        format!(
            "{accepted} samples ({rejected} redrawn near kinks), max relative error {worst:.2e} (limit {GRAD_REL_TOL:e}), {bad} failing samples"
        ),
    )
}

// ---------- 3 ----------

struct Quadratic;

impl Subdifferentiable for Quadratic {
    fn dim(&self) -> usize {
        2
    }

    fn value_and_subgradient(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        grad[0] = 2.0 * u[0];
        grad[1] = 2.0 * u[1];
        u[0] * u[0] + u[1] * u[1]
    }
}

fn csa_quadratic() -> (bool, String) {
    let cfg = CsaConfig {
        k_max: 500,
        s0: 100.0,
        q: 0.97,
        ..Default::default()
    };
    let res = csa_minimize(&Quadratic, &[10.0, 10.0], &cfg);
    let monotone = res.trace.windows(2).all(|w| w[1].best_f <= w[0].best_f);
    let ok = res.f_best < CSA_TARGET && monotone;
    (
        ok,
        format!(
            "f_best {:.3e} (limit {CSA_TARGET:e}), {} iterations, best trace monotone: {monotone}",
            res.f_best,
            res.trace.len()
        ),
    )
}

// ---------- 4 ----------

struct OrientFixture {
    w: Vec<(f64, f64)>,
    x: Vec<f64>,
    y: Vec<f64>,
    nets: Vec<Vec<Pt>>,
    region: Rect,
}

impl OrientFixture {
    fn fitness(&self, r: &[Orientation]) -> f64 {
        let dims = self.w.iter().zip(r).map(|(&(w, h), &o)| effective_dims(w, h, o)).collect();
        let obj = SubObjective::new(
            dims,
            Vec::new(),
            self.nets.clone(),
            Some(self.region),
            ObjectiveWeights::new(1.0, 4.0, 6.0),
            OverlapModel::PairwiseArea,
        );
        let mut u = self.x.clone();
        u.extend_from_slice(&self.y);
        obj.evaluate(&u).f
    }

    fn enumerate(&self) -> f64 {
        let n = self.w.len();
        let mut best = f64::INFINITY;
        for code in 0..4usize.pow(n as u32) {
            let r: Vec<Orientation> = (0..n).map(|i| Orientation::wrapping(code / 4usize.pow(i as u32) % 4)).collect();
            best = best.min(self.fitness(&r));
        }
        best
    }
}

struct FixedCoords<'a>(&'a OrientFixture);

impl PopulationRefiner for FixedCoords<'_> {
    fn update(&mut self, population: &mut [SolutionIndividual]) {
        for s in population {
            s.fitness = self.0.fitness(&s.r);
        }
    }
}

fn orient_fixture<R: Rng>(rng: &mut R, n: usize) -> OrientFixture {
    let w = (0..n)
        .map(|_| {
            let long = rng.random_range(30.0..90.0);
            (long, long * rng.random_range(0.2..0.7))
        })
        .collect();
    let x = (0..n).map(|_| rng.random_range(20.0..100.0)).collect();
    let y = (0..n).map(|_| rng.random_range(20.0..100.0)).collect();
    let nets = (0..n).map(|i| vec![Pt::Var(i), Pt::Fixed(60.0, 60.0)]).collect();
    OrientFixture {
        w,
        x,
        y,
        nets,
        region: Rect::new(0.0, 0.0, 120.0, 90.0),
    }
}

fn evolution_oracle() -> (bool, String) {
    let cfg = EvolutionConfig::default();
    let mut hits = 0;
    for run in 0..EVOLUTION_RUNS {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + run as u64);
        let n = 1 + run % 4;
        let fx = orient_fixture(&mut rng, n);
        let (q, p) = init_population(&fx.x, &fx.y, cfg.npop, 1.0, &mut rng);
        let out = evolve(q, p, &mut FixedCoords(&fx), &cfg, &mut rng);
        if (out.best.fitness - fx.enumerate()).abs() <= EVOLUTION_TOL {
            hits += 1;
        }
    }
    let rate = hits as f64 / EVOLUTION_RUNS as f64;
    (
        rate >= EVOLUTION_MIN_RATE,
        format!("{hits}/{EVOLUTION_RUNS} runs matched the enumerated optimum (need {:.0}%)", EVOLUTION_MIN_RATE * 100.0),
    )
}

// ---------- 5 ----------

struct TableTarget {
    circuit: &'static str,
    min_success: f64,
    hpwl: Option<f64>,
    seconds: Option<f64>,
}

const TABLE_TARGETS: [TableTarget; 4] = [
    TableTarget {
        circuit: "ami49",
        min_success: 0.9,
        hpwl: Some(870427.0),
        seconds: Some(0.31),
    },
    TableTarget {
        circuit: "n100",
        min_success: 1.0,
        hpwl: Some(292339.0),
        seconds: Some(0.83),
    },
    TableTarget {
        circuit: "n300",
        min_success: 1.0,
        hpwl: Some(587840.0),
        seconds: Some(3.96),
    },
    TableTarget {
        circuit: "ami33",
        min_success: 0.3,
        hpwl: None,
        seconds: None,
    },
];

fn benchmark_table() -> (bool, String) {
    let Some(dir) = std::env::var_os("PCBPLACE_BENCH_DIR").map(PathBuf::from) else {
        return (false, "PCBPLACE_BENCH_DIR is not set; the MCNC/GSRC circuit files are required".into());
    };
    let protocol = BenchProtocol {
        gamma: TABLE_GAMMA,
        aspect_ratios: vec![1.0],
        runs: TABLE_RUNS,
        seed: 0,
    };
    let config = PipelineConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for t in &TABLE_TARGETS {
        let circuit = match parse_bookshelf(&BookshelfPaths::from_stem(&dir, t.circuit)) {
            Ok(c) => c,
            Err(e) => {
                ok = false;
                parts.push(format!("{}: {e}", t.circuit));
                continue;
            }
        };
        let (stats, _) = match run_benchmark(t.circuit, &circuit, 1.0, &protocol, &config) {
            Ok(r) => r,
            Err(e) => {
                ok = false;
                parts.push(format!("{}: {e}", t.circuit));
                continue;
            }
        };
        let mut row_ok = stats.success_rate >= t.min_success;
        if let Some(h) = t.hpwl {
            row_ok &= (stats.hpwl_mean - h).abs() <= TABLE_HPWL_TOL * h;
        }
        if let Some(s) = t.seconds {
            row_ok &= stats.time_mean <= TABLE_TIME_FACTOR * s;
        }
        ok &= row_ok;
        parts.push(format!(
            "{} success {:.2} hpwl {:.0} time {:.2}s{}",
            t.circuit,
            stats.success_rate,
            stats.hpwl_mean,
            stats.time_mean,
            if row_ok { "" } else { " (miss)" }
        ));
    }
    (ok, parts.join("; "))
}

// ---------- 6 ----------

/// Independent legality check of the bottom layer. Returns hard violations
/// and the close-to-pin components beyond their threshold.
fn bottom_violations(problem: &PlacementProblem, sol: &PlacementSolution) -> (Vec<String>, Vec<String>) {
    let comps = problem.components();
    let ic = problem.ic_outline();
    let rules = problem.spacing_rules();
    let members = problem.layer_components(Layer::Bottom);
    let rect = |i: usize| {
        let (w, h) = effective_dims(comps[i].width, comps[i].height, sol.r[i]);
        (sol.x[i] - w / 2.0, sol.x[i] + w / 2.0, sol.y[i] - h / 2.0, sol.y[i] + h / 2.0)
    };
    let mut hard = Vec::new();
    for &i in &members {
        let (x0, x1, y0, y1) = rect(i);
        if x0 < 0.0 || y0 < 0.0 || x1 > ic.width || y1 > ic.height {
            hard.push(format!("{} outside", comps[i].id));
        }
    }
    for (a, &i) in members.iter().enumerate() {
        let (ax0, ax1, ay0, ay1) = rect(i);
        for &j in &members[a + 1..] {
            let (bx0, bx1, by0, by1) = rect(j);
            let area = interval_intersection(ax0, ax1, bx0, bx1) * interval_intersection(ay0, ay1, by0, by1);
            if area > 0.0 {
                hard.push(format!("{}/{} overlap", comps[i].id, comps[j].id));
                continue;
            }
            let clearance = (bx0 - ax1).max(ax0 - bx1).max(by0 - ay1).max(ay0 - by1);
            if clearance < rules.gap(&comps[i].id, &comps[j].id) {
                hard.push(format!("{}/{} spacing", comps[i].id, comps[j].id));
            }
        }
    }
    let mut far = Vec::new();
    for &i in &members {
        let Some(pid) = &comps[i].close_to_pin_target else {
            continue;
        };
        let pin = problem.ic_pins().iter().find(|p| &p.id == pid).expect("target pin exists");
        let (w, h) = effective_dims(comps[i].width, comps[i].height, sol.r[i]);
        let threshold = w.max(h) / 2.0 + rules.default_gap;
        if (sol.x[i] - pin.x).hypot(sol.y[i] - pin.y) > threshold {
            far.push(comps[i].id.clone());
        }
    }
    (hard, far)
}

fn legalization_postconditions() -> (bool, String) {
    let results: Vec<(usize, usize, usize, usize, usize)> = (0..LEGALIZE_CASES)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(600 + k as u64);
            let n = rng.random_range(20..=150);
            let spec = CaseSpec::new(&format!("syn{k}"), 0, n, 13 * n, 7 * n / 2, 600 + k as u64);
            let problem = generate_case(&spec).to_problem().expect("generated case is valid");
            let bottom = LayerSelection { top: false, bottom: true };
            let outcome = place_case(&problem, bottom, &PipelineConfig::default(), k as u64);
            let report = &outcome.layers[0].legality;
            let (hard, far) = bottom_violations(&problem, &outcome.solution);
            let silent = far.iter().filter(|id| !report.close_to_pin_failed.contains(id)).count();
            let c2p = problem.components().iter().filter(|c| c.close_to_pin_target.is_some()).count();
            (hard.len(), far.len(), silent, report.unplaceable.len(), c2p)
        })
        .collect();
    let hard: usize = results.iter().map(|r| r.0).sum();
    let reported: usize = results.iter().map(|r| r.1).sum();
    let silent: usize = results.iter().map(|r| r.2).sum();
    let unplaceable: usize = results.iter().map(|r| r.3).sum();
    let c2p: usize = results.iter().map(|r| r.4).sum();
    let ok = hard == 0 && silent == 0 && unplaceable == 0;
    (
        ok,
        format!(
            "{LEGALIZE_CASES} cases: {hard} overlap/outline/spacing violations, {unplaceable} unplaceable, {reported} of {c2p} close-to-pin components reported beyond threshold, {silent} unreported"
        ),
    )
}

// ---------- 7 ----------

fn industrial_proxy() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for spec in [CaseSpec::case1(1), CaseSpec::case3(3)] {
        let problem = generate_case(&spec).to_problem().expect("generated case is valid");
        let all_nets: Vec<usize> = (0..problem.nets().len()).collect();
        let mut values = Vec::new();
        let mut legal = 0;
        let mut slowest: f64 = 0.0;
        for seed in 0..PROXY_RUNS {
            let start = Instant::now();
            let outcome = place_case(&problem, LayerSelection::default(), &PipelineConfig::default(), seed);
            slowest = slowest.max(start.elapsed().as_secs_f64());
            legal += outcome.is_legal() as usize;
            values.push(hpwl(&problem, &all_nets, &outcome.solution.x, &outcome.solution.y));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let rel = std / mean;
        let case_ok = legal == PROXY_RUNS as usize && slowest < PROXY_SECONDS && rel < PROXY_REL_STD;
        ok &= case_ok;
        parts.push(format!(
            "{} legal {legal}/{PROXY_RUNS}, slowest {slowest:.2}s, hpwl {mean:.0} relstd {:.2}%",
            spec.name,
            rel * 100.0
        ));
    }
    (ok, parts.join("; "))
}

// ---------- 8 ----------

/// Core points from the full distance matrix, clusters as connected
/// components of the core graph in order of their lowest core index, and
/// each border point in the earliest such cluster among its core neighbors.
fn brute_force_dbscan(points: &[(f64, f64)], eps: f64, minpts: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let near = |i: usize, j: usize| (points[i].0 - points[j].0).hypot(points[i].1 - points[j].1) <= eps;
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= minpts).collect();
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for s in 0..n {
        if !core[s] || comp[s] != usize::MAX {
            continue;
        }
        comp[s] = count;
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if core[j] && comp[j] == usize::MAX && near(i, j) {
                    comp[j] = count;
                    stack.push(j);
                }
            }
        }
        count += 1;
    }
    (0..n)
        .map(|i| {
            if core[i] {
                Some(comp[i])
            } else {
                (0..n).filter(|&j| core[j] && near(i, j)).map(|j| comp[j]).min()
            }
        })
        .collect()
}

/// Relabels clusters in order of first appearance.
fn canonical(labels: &[Option<usize>]) -> Vec<Option<usize>> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            l.map(|c| {
                let next = map.len();
                *map.entry(c).or_insert(next)
            })
        })
        .collect()
}

fn dbscan_fixture(k: usize) -> (Vec<(f64, f64)>, f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(800 + k as u64);
    let mut pts = Vec::new();
    let kind = k % 4;
    if kind == 0 || kind == 3 {
        for _ in 0..rng.random_range(2..6) {
            let (cx, cy) = (rng.random_range(0.0..500.0), rng.random_range(0.0..500.0));
            let s = rng.random_range(5.0..25.0);
            let nx = Normal::new(cx, s).unwrap();
            let ny = Normal::new(cy, s).unwrap();
            for _ in 0..rng.random_range(15..60) {
                pts.push((nx.sample(&mut rng), ny.sample(&mut rng)));
            }
        }
    }
    if kind == 1 || kind == 3 {
        for _ in 0..rng.random_range(1..4) {
            let (cx, cy) = (rng.random_range(100.0..400.0), rng.random_range(100.0..400.0));
            let r = rng.random_range(30.0..90.0);
            for _ in 0..rng.random_range(40..120) {
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                let rr = r + rng.random_range(-3.0..3.0);
                pts.push((cx + rr * t.cos(), cy + rr * t.sin()));
            }
        }
    }
    let noise = if kind == 2 { 150 } else { rng.random_range(0..30) };
    for _ in 0..noise {
        pts.push((rng.random_range(0.0..500.0), rng.random_range(0.0..500.0)));
    }
    // integer lattice points put some pairs at exactly epsilon
    if k.is_multiple_of(5) {
        for i in 0..6 {
            pts.push((600.0 + 10.0 * i as f64, 600.0));
        }
    }
    let eps = [10.0, 15.0, 20.0, 30.0][k % 4];
    let minpts = 2 + k % 5;
    (pts, eps, minpts)
}

fn dbscan_oracle() -> (bool, String) {
    let mut matched = 0;
    let mut clusters = 0;
    let mut points = 0;
    for k in 0..DBSCAN_FIXTURES {
        let (pts, eps, minpts) = dbscan_fixture(k);
        points += pts.len();
        let got: Vec<Option<usize>> = dbscan(&pts, &DbscanParams::new(eps, minpts).unwrap())
            .into_iter()
            .map(Label::cluster)
            .collect();
        let want = brute_force_dbscan(&pts, eps, minpts);
        clusters += want.iter().flatten().max().map_or(0, |m| m + 1);
        if canonical(&got) == canonical(&want) {
            matched += 1;
        }
    }
    (
        matched == DBSCAN_FIXTURES,
        format!("{matched}/{DBSCAN_FIXTURES} fixtures identical ({points} points, {clusters} clusters)"),
    )
}

// ---------- 9 ----------

fn run_cli(args: &[&str], threads: &str) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pcbplace"))
        .args(args)
        .env("PCBPLACE_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn cli_determinism() -> (bool, String) {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let case = path("case3.json");
    let gen = run_cli(&["--seed", "5", "gen", "case", "--preset", "case3", "-o", &case], "1");
    if !gen.status.success() {
        return (false, format!("gen failed: {}", String::from_utf8_lossy(&gen.stderr)));
    }
    let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
    for threads in ["1", "4", "1", "4"] {
        let out = path(&format!("sol{}.json", outputs.len()));
        let run = run_cli(&["--seed", "11", "place", &case, "-o", &out], threads);
        if run.status.code() != Some(0) && run.status.code() != Some(1) {
            return (false, format!("place failed: {}", String::from_utf8_lossy(&run.stderr)));
        }
        outputs.push((threads.to_string(), std::fs::read(Path::new(&out)).expect("solution written")));
    }
    let circuit_dirs = [path("c0"), path("c1")];
    let mut circuits = Vec::new();
    for d in &circuit_dirs {
        std::fs::create_dir_all(d).unwrap();
        run_cli(&["--seed", "2", "gen", "circuit", "--name", "s", "--blocks", "30", "--terminals", "40", "--nets", "60", "--dir", d], "1");
        circuits.push(std::fs::read(Path::new(d).join("s.blocks")).unwrap_or_default());
    }
    let same = outputs.iter().all(|(_, b)| *b == outputs[0].1) && !circuits[0].is_empty() && circuits[0] == circuits[1];
    (
        same,
        format!(
            "{} placements across thread counts {:?}: identical {}; generated circuits identical {}",
            outputs.len(),
            outputs.iter().map(|o| o.0.as_str()).collect::<Vec<_>>(),
            outputs.iter().all(|(_, b)| *b == outputs[0].1),
            circuits[0] == circuits[1]
        ),
    )
}
