//! Conjugate subgradient descent with Polak-Ribiere directions and a
//! geometrically decaying step control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsaConfig {
    pub k_max: usize,
    /// Initial step control: the Euclidean length of the first move.
    pub s0: f64,
    /// Step control decay per iteration.
    pub q: f64,
    /// Stop once the step control falls below this.
    pub stop_step: f64,
}

impl Default for CsaConfig {
    fn default() -> Self {
        CsaConfig {
            k_max: 300,
            s0: 100.0,
            q: 0.97,
            stop_step: 1e-3,
        }
    }
}

impl CsaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(Error::Config("csa.k_max must be >= 1".into()));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::Config("csa.q must lie in (0, 1)".into()));
        }
        if !(self.s0 > 0.0) {
            return Err(Error::Config("csa.s0 must be > 0".into()));
        }
        if !(self.stop_step >= 0.0) {
            return Err(Error::Config("csa.stop_step must be >= 0".into()));
        }
        Ok(())
    }
}

/// Something CSA can minimize: a value and one subgradient at a point.
pub trait Subdifferentiable {
    fn dim(&self) -> usize;
    fn value_and_subgradient(&self, u: &[f64], grad: &mut [f64]) -> f64;
}

impl Subdifferentiable for crate::objective::SubObjective {
    fn dim(&self) -> usize {
        2 * self.num_vars()
    }

    fn value_and_subgradient(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        crate::objective::SubObjective::value_and_subgradient(self, u, grad).f
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub k: usize,
    pub f: f64,
    pub best_f: f64,
    /// Step control used for this iteration's move.
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MaxIterations,
    StepBelowThreshold,
    Stationary,
}

#[derive(Debug, Clone)]
pub struct CsaResult {
    pub u_best: Vec<f64>,
    pub f_best: f64,
    /// Step control after the last iteration, for callers that resume.
    pub step: f64,
    pub trace: Vec<TraceEntry>,
    pub termination: Termination,
}

/// Runs CSA from `u0` with the step control starting at `config.s0`.
pub fn csa_minimize<F: Subdifferentiable + ?Sized>(f: &F, u0: &[f64], config: &CsaConfig) -> CsaResult {
    csa_minimize_from(f, u0, config, config.s0)
}

/// Runs CSA from `u0` with an explicit starting step control, so that a
/// caller can carry the decayed step across calls.
pub fn csa_minimize_from<F: Subdifferentiable + ?Sized>(
    f: &F,
    u0: &[f64],
    config: &CsaConfig,
    s_start: f64,
) -> CsaResult {
    let n = u0.len();
    debug_assert_eq!(n, f.dim());
    let mut u = u0.to_vec();
    let mut g_prev = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut d = vec![0.0; n];

    let f0 = f.value_and_subgradient(&u, &mut g_prev);
    let mut best_u = u.clone();
    let mut best_f = f0;
    let mut s = s_start;
    let mut trace = Vec::new();

    if norm_sq(&g_prev) == 0.0 {
        return CsaResult {
            u_best: best_u,
            f_best: best_f,
            step: s,
            trace,
            termination: Termination::Stationary,
        };
    }

    // g_k is the subgradient at u_{k-1}; the first one equals g_0.
    g.copy_from_slice(&g_prev);
    let mut termination = Termination::MaxIterations;
    for k in 1..=config.k_max {
        if s < config.stop_step {
            termination = Termination::StepBelowThreshold;
            break;
        }
        let gp2 = norm_sq(&g_prev);
        if gp2 == 0.0 {
            termination = Termination::Stationary;
            break;
        }
        let eta = g.iter().zip(&g_prev).map(|(a, b)| a * (a - b)).sum::<f64>() / gp2;
        for i in 0..n {
            d[i] = -g[i] + eta * d[i];
        }
        let mut dn = norm_sq(&d).sqrt();
        if dn == 0.0 || !dn.is_finite() {
            for i in 0..n {
                d[i] = -g[i];
            }
            dn = norm_sq(&d).sqrt();
            if dn == 0.0 {
                termination = Termination::Stationary;
                break;
            }
        }
        let a = s / dn;
        for i in 0..n {
            u[i] += a * d[i];
        }
        std::mem::swap(&mut g_prev, &mut g);
        let fk = f.value_and_subgradient(&u, &mut g);
        if fk < best_f {
            best_f = fk;
            best_u.copy_from_slice(&u);
        }
        trace.push(TraceEntry {
            k,
            f: fk,
            best_f,
            step: s,
        });
        s *= config.q;
    }

    CsaResult {
        u_best: best_u,
        f_best: best_f,
        step: s,
        trace,
        termination,
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}
