//! Distribution evolution over discrete orientations.
//!
//! Every solution individual is paired with a distribution individual: one
//! probability vector over the four orientations per component. Each
//! generation perturbs a share of the rows (orthogonal exploration), samples
//! new orientation vectors, refines coordinates for them, and pulls the
//! distributions toward the best orientations found.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Orientation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub npop: usize,
    pub t_max: usize,
    /// Share of rows perturbed by orthogonal exploration.
    pub exploration: f64,
    /// Learning rate of the distribution update.
    pub learning_rate: f64,
    /// Angle (radians) by which an explored row is rotated on the unit sphere
    /// of square-root probabilities.
    pub rotation_angle: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            npop: 6,
            t_max: 20,
            exploration: 0.2,
            learning_rate: 0.3,
            rotation_angle: std::f64::consts::FRAC_PI_6,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.npop < 2 {
            return Err(Error::Config("evolution.npop must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.exploration) {
            return Err(Error::Config("evolution.exploration must lie in [0, 1]".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config("evolution.learning_rate must lie in (0, 1]".into()));
        }
        if !self.rotation_angle.is_finite() {
            return Err(Error::Config("evolution.rotation_angle must be finite".into()));
        }
        Ok(())
    }
}

pub type Row = [f64; 4];

pub const UNIFORM_ROW: Row = [0.25; 4];

fn one_hot(k: usize) -> Row {
    let mut row = [0.0; 4];
    row[k] = 1.0;
    row
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionIndividual {
    pub rows: Vec<Row>,
}

impl DistributionIndividual {
    pub fn uniform(n: usize) -> Self {
        DistributionIndividual {
            rows: vec![UNIFORM_ROW; n],
        }
    }

    pub fn is_valid(&self) -> bool {
        self.rows.iter().all(|row| {
            row.iter().all(|&p| (0.0..=1.0).contains(&p)) && (row.iter().sum::<f64>() - 1.0).abs() <= 1e-9
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Orientation> {
        self.rows.iter().map(|row| sample_row(row, rng)).collect()
    }
}

pub fn sample_row<R: Rng + ?Sized>(row: &Row, rng: &mut R) -> Orientation {
    let u: f64 = rng.random::<f64>() * row.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (k, &p) in row.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = k;
            acc += p;
            if u < acc {
                return Orientation::wrapping(k);
            }
        }
    }
    Orientation::wrapping(last_nonzero)
}

/// An orientation vector with the coordinates refined for it.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionIndividual {
    pub r: Vec<Orientation>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Composite objective after refinement; `INFINITY` until refined.
    pub fitness: f64,
    /// Step control carried between coordinate refinements.
    pub step: f64,
}

/// Refines the coordinates of a whole population for its current
/// orientations and fills in fitness.
pub trait PopulationRefiner {
    fn update(&mut self, population: &mut [SolutionIndividual]);

    /// A solution assembled by the refiner from partial results of several
    /// individuals, if it keeps one.
    fn best(&self) -> Option<SolutionIndividual> {
        None
    }
}

/// Uniform distributions and their row-wise samples, coordinates taken
/// from `(x, y)` and step control set to `step`.
pub fn init_population<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    npop: usize,
    step: f64,
    rng: &mut R,
) -> (Vec<DistributionIndividual>, Vec<SolutionIndividual>) {
    let n = x.len();
    let dists: Vec<_> = (0..npop).map(|_| DistributionIndividual::uniform(n)).collect();
    let sols = dists
        .iter()
        .map(|d| SolutionIndividual {
            r: d.sample(rng),
            x: x.to_vec(),
            y: y.to_vec(),
            fitness: f64::INFINITY,
            step,
        })
        .collect();
    (dists, sols)
}

/// Orthogonal exploration. For every distribution a random subset of rows
/// (the configured share) is rotated on the sphere of square-root
/// probabilities toward a random orientation other than the one its paired
/// solution currently uses. The rotation keeps the L2 norm of the
/// square-root vector at 1, so rows stay stochastic.
pub fn orth_exp_q<R: Rng + ?Sized>(
    q: &[DistributionIndividual],
    p: &[SolutionIndividual],
    config: &EvolutionConfig,
    rng: &mut R,
) -> Vec<DistributionIndividual> {
    let out: Vec<_> = q
        .iter()
        .zip(p)
        .map(|(dist, sol)| {
            let mut next = dist.clone();
            let n = next.rows.len();
            if n == 0 || config.exploration <= 0.0 {
                return next;
            }
            let count = ((config.exploration * n as f64).round() as usize).clamp(1, n);
            for i in rand::seq::index::sample(rng, n, count) {
                let current = sol.r.get(i).map_or(0, |o| o.index());
                let target = (current + rng.random_range(1..4)) % 4;
                next.rows[i] = rotate_toward(&next.rows[i], target, config.rotation_angle);
            }
            next
        })
        .collect();
    debug_assert!(out.iter().all(DistributionIndividual::is_valid));
    out
}

/// Rotates the square-root vector of `row` by `angle` in the plane spanned
/// by itself and the axis of orientation `target`.
pub fn rotate_toward(row: &Row, target: usize, angle: f64) -> Row {
    let s: [f64; 4] = row.map(|p| p.max(0.0).sqrt());
    let along = s[target];
    let mut v = [0.0; 4];
    for k in 0..4 {
        v[k] = if k == target { 1.0 } else { 0.0 } - along * s[k];
    }
    let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if vn < 1e-12 {
        return *row;
    }
    let (sin, cos) = angle.sin_cos();
    let mut out = [0.0; 4];
    for k in 0..4 {
        let t = cos * s[k] + sin * v[k] / vn;
        out[k] = t * t;
    }
    let sum: f64 = out.iter().sum();
    out.map(|p| (p / sum).clamp(0.0, 1.0))
}

/// Draws a fresh orientation vector for each solution from its paired
/// distribution. Coordinates and step control are inherited.
pub fn sample_solutions<R: Rng + ?Sized>(
    q: &[DistributionIndividual],
    p_prev: &[SolutionIndividual],
    rng: &mut R,
) -> Vec<SolutionIndividual> {
    q.iter()
        .zip(p_prev)
        .map(|(dist, prev)| SolutionIndividual {
            r: dist.sample(rng),
            x: prev.x.clone(),
            y: prev.y.clone(),
            fitness: f64::INFINITY,
            step: prev.step,
        })
        .collect()
}

/// Moves every row toward the orientation used by the better of the paired
/// solution and the global best: `q <- (1 - lr) q + lr * onehot(r_i)`.
pub fn refine_q(
    p: &[SolutionIndividual],
    q_prime: &[DistributionIndividual],
    best: &SolutionIndividual,
    config: &EvolutionConfig,
) -> Vec<DistributionIndividual> {
    let lr = config.learning_rate;
    let out: Vec<_> = q_prime
        .iter()
        .zip(p)
        .map(|(dist, sol)| {
            let guide = if sol.fitness <= best.fitness { sol } else { best };
            DistributionIndividual {
                rows: dist
                    .rows
                    .iter()
                    .zip(&guide.r)
                    .map(|(row, o)| learn_row(row, o.index(), lr))
                    .collect(),
            }
        })
        .collect();
    debug_assert!(out.iter().all(DistributionIndividual::is_valid));
    out
}

pub fn learn_row(row: &Row, target: usize, lr: f64) -> Row {
    let hot = one_hot(target);
    let mut out = [0.0; 4];
    for k in 0..4 {
        out[k] = (1.0 - lr) * row[k] + lr * hot[k];
    }
    out
}

#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    pub best: SolutionIndividual,
    /// Running best fitness after initialization and after every generation.
    pub history: Vec<f64>,
    pub final_population: Vec<SolutionIndividual>,
}

fn argmin(pop: &[SolutionIndividual]) -> &SolutionIndividual {
    let mut best = &pop[0];
    for s in &pop[1..] {
        if s.fitness < best.fitness {
            best = s;
        }
    }
    best
}

/// Runs `t_max` generations starting from an initialized population.
/// Each paired solution is replaced only when its refined offspring is at
/// least as good.
pub fn evolve<R: Rng + ?Sized, F: PopulationRefiner + ?Sized>(
    mut q: Vec<DistributionIndividual>,
    mut p: Vec<SolutionIndividual>,
    refiner: &mut F,
    config: &EvolutionConfig,
    rng: &mut R,
) -> EvolutionOutcome {
    assert!(!p.is_empty() && p.len() == q.len());
    refiner.update(&mut p);
    let mut best = argmin(&p).clone();
    absorb(&mut best, refiner.best());
    let mut history = vec![best.fitness];

    for _ in 0..config.t_max {
        let q_prime = orth_exp_q(&q, &p, config, rng);
        let mut offspring = sample_solutions(&q_prime, &p, rng);
        refiner.update(&mut offspring);
        for (cur, off) in p.iter_mut().zip(offspring) {
            if off.fitness <= cur.fitness {
                *cur = off;
            }
        }
        let gen_best = argmin(&p);
        if gen_best.fitness < best.fitness {
            best = gen_best.clone();
        }
        absorb(&mut best, refiner.best());
        q = refine_q(&p, &q_prime, &best, config);
        history.push(best.fitness);
    }

    EvolutionOutcome {
        best,
        history,
        final_population: p,
    }
}

fn absorb(best: &mut SolutionIndividual, candidate: Option<SolutionIndividual>) {
    if let Some(c) = candidate {
        if c.fitness < best.fitness {
            *best = c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn entropy(row: &Row) -> f64 {
        row.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
    }

    #[test]
    fn init_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (q, p) = init_population(&[0.0], &[0.0], 2, 100.0, &mut rng);
        assert_eq!(q.len(), 2);
        assert!(q.iter().all(|d| d.rows == vec![UNIFORM_ROW]));
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn one_hot_row_samples_deterministically() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(sample_row(&one_hot(0), &mut rng).index(), 0);
            assert_eq!(sample_row(&one_hot(3), &mut rng).index(), 3);
        }
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dist = DistributionIndividual::uniform(50);
        let mut counts = [0usize; 4];
        let draws = 10_000;
        for _ in 0..draws / 50 {
            for o in dist.sample(&mut rng) {
                counts[o.index()] += 1;
            }
        }
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.25).abs() < 0.02, "{counts:?}");
        }
    }

    fn sol(r: &[usize], fitness: f64) -> SolutionIndividual {
        SolutionIndividual {
            r: r.iter().map(|&k| Orientation::wrapping(k)).collect(),
            x: vec![0.0; r.len()],
            y: vec![0.0; r.len()],
            fitness,
            step: 1.0,
        }
    }

    #[test]
    fn zero_exploration_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = vec![DistributionIndividual { rows: vec![[0.1, 0.2, 0.3, 0.4]; 5] }];
        let cfg = EvolutionConfig {
            exploration: 0.0,
            ..Default::default()
        };
        assert_eq!(orth_exp_q(&q, &[sol(&[0; 5], 1.0)], &cfg, &mut rng), q);
    }

    #[test]
    fn full_exploration_unhots_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = vec![DistributionIndividual { rows: vec![one_hot(1); 4] }];
        let cfg = EvolutionConfig {
            exploration: 1.0,
            ..Default::default()
        };
        let out = orth_exp_q(&q, &[sol(&[1; 4], 1.0)], &cfg, &mut rng);
        for row in &out[0].rows {
            assert!(row[1] < 1.0);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exploration_raises_entropy_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cfg = EvolutionConfig::default();
        let n = 30;
        let mut q = vec![DistributionIndividual { rows: vec![[0.97, 0.01, 0.01, 0.01]; n] }];
        let p = vec![sol(&vec![0; n], 1.0)];
        let mean = |d: &DistributionIndividual| d.rows.iter().map(entropy).sum::<f64>() / n as f64;
        let start = mean(&q[0]);
        for _ in 0..100 {
            q = orth_exp_q(&q, &p, &cfg, &mut rng);
            assert!(q[0].is_valid());
        }
        assert!(mean(&q[0]) > start + 0.3, "{} -> {}", start, mean(&q[0]));
    }

    #[test]
    fn one_hot_pins_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = vec![DistributionIndividual { rows: vec![one_hot(2), one_hot(1)] }];
        let out = sample_solutions(&q, &[sol(&[0, 0], 1.0)], &mut rng);
        assert_eq!(out[0].r, vec![Orientation::wrapping(2), Orientation::wrapping(1)]);
    }

    #[test]
    fn single_uniform_row_covers_all_orientations() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dist = DistributionIndividual::uniform(1);
        let mut seen = [false; 4];
        for _ in 0..200 {
            seen[dist.sample(&mut rng)[0].index()] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let q = vec![DistributionIndividual::uniform(20); 3];
        let p = vec![sol(&[0; 20], 1.0); 3];
        let a = sample_solutions(&q, &p, &mut ChaCha8Rng::seed_from_u64(42));
        let b = sample_solutions(&q, &p, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn refine_q_convex_combination() {
        let q = vec![DistributionIndividual::uniform(1)];
        let guide = sol(&[2], 0.0);
        let half = EvolutionConfig {
            learning_rate: 0.5,
            ..Default::default()
        };
        let out = refine_q(std::slice::from_ref(&guide), &q, &guide, &half);
        assert_eq!(out[0].rows[0], [0.125, 0.125, 0.625, 0.125]);
        let full = EvolutionConfig {
            learning_rate: 1.0,
            ..Default::default()
        };
        assert_eq!(refine_q(std::slice::from_ref(&guide), &q, &guide, &full)[0].rows[0], one_hot(2));
        // the global best wins when it is strictly better
        let worse = sol(&[0], 5.0);
        assert_eq!(refine_q(&[worse], &q, &guide, &full)[0].rows[0], one_hot(2));
    }

    #[test]
    fn learning_rate_zero_keeps_rows() {
        // learning_rate = 0 is outside the validated range but the update is
        // still the identity.
        let row = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(learn_row(&row, 3, 0.0), row);
    }

    struct Counting;
    impl PopulationRefiner for Counting {
        fn update(&mut self, pop: &mut [SolutionIndividual]) {
            for s in pop {
                s.fitness = s.r.iter().map(|o| o.index() as f64).sum();
            }
        }
    }

    #[test]
    fn zero_generations_returns_best_initial() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (q, p) = init_population(&[0.0; 6], &[0.0; 6], 6, 1.0, &mut rng);
        let cfg = EvolutionConfig {
            t_max: 0,
            ..Default::default()
        };
        let mut refiner = Counting;
        let mut initial = p.clone();
        refiner.update(&mut initial);
        let min = initial.iter().map(|s| s.fitness).fold(f64::INFINITY, f64::min);
        let out = evolve(q, p, &mut refiner, &cfg, &mut rng);
        assert_eq!(out.best.fitness, min);
        assert_eq!(out.history.len(), 1);
    }

    #[test]
    fn running_best_is_monotone_and_finds_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (q, p) = init_population(&[0.0; 3], &[0.0; 3], 6, 1.0, &mut rng);
        let out = evolve(q, p, &mut Counting, &EvolutionConfig::default(), &mut rng);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(out.best.fitness, 0.0);
    }
}
