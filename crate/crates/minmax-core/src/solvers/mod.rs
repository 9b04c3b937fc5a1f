//! Solver drivers: the clairvoyant extra-gradient outer loop, its inner
//! contraction, and the extra-gradient / optimistic GDA / proximal-point
//! baselines. All solvers share one trace format and one gradient-call
//! accounting convention.

mod baselines;
mod ceg;

pub use baselines::{eg_run, ogda_run, pp_run};
pub(crate) use ceg::pp_oracle_impl;
pub use ceg::{ceg_inner, ceg_run, pp_oracle, select_k_bounded, select_k_unbounded};

use crate::point::Point;
use crate::problem::SaddleProblem;
use crate::vecmath::{self, dot, norm};
use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// How the inner iteration count `k` is chosen for each outer step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KRule {
    Fixed(u32),
    /// `k = ⌈log₂(5·max(L,1)·max(‖F(z₀)‖,1)·|D|²·T)⌉`; needs a bounded set.
    AutoBounded,
    /// `k = ⌈4·log₂(max(T,2)) + log₂(max(L,1)) + log₂(max(‖F(z₀)‖,1))⌉ + 1`,
    /// which guarantees `T⁴/2ᵏ ≤ 1/2`.
    AutoUnbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Step size; `None` selects `1/(2L)`.
    pub gamma: Option<f64>,
    /// Number of outer iterations `T`.
    pub t_horizon: usize,
    pub k_rule: KRule,
    /// Relative early-exit base for the inner loop: a step stops once
    /// consecutive inner iterates are within `inner_early_exit·(1 + ‖z_t‖)`.
    pub inner_early_exit: f64,
    /// Keep one recorded iterate every `record_every` outer steps (scalar
    /// series are always kept for every step).
    pub record_every: usize,
}

impl SolverConfig {
    pub fn new(t_horizon: usize) -> Self {
        SolverConfig {
            gamma: None,
            t_horizon,
            k_rule: KRule::AutoBounded,
            inner_early_exit: 1e-14,
            record_every: 1,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_k_rule(mut self, rule: KRule) -> Self {
        self.k_rule = rule;
        self
    }

    pub fn with_inner_early_exit(mut self, delta: f64) -> Self {
        self.inner_early_exit = delta;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.t_horizon < 1 {
            return Err(Error::InvalidConfig("T must be at least 1".into()));
        }
        if self.record_every < 1 {
            return Err(Error::InvalidConfig(
                "record_every must be at least 1".into(),
            ));
        }
        if !self.inner_early_exit.is_finite() || self.inner_early_exit < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "inner_early_exit must be finite and nonnegative, got {}",
                self.inner_early_exit
            )));
        }
        if let KRule::Fixed(k) = self.k_rule {
            if k < 1 {
                return Err(Error::InvalidConfig("fixed k must be at least 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Ceg,
    Eg,
    Ogda,
    Pp,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::Ceg,
        SolverKind::Eg,
        SolverKind::Ogda,
        SolverKind::Pp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Ceg => "ceg",
            SolverKind::Eg => "eg",
            SolverKind::Ogda => "ogda",
            SolverKind::Pp => "pp",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ceg" => Ok(SolverKind::Ceg),
            "eg" => Ok(SolverKind::Eg),
            "ogda" => Ok(SolverKind::Ogda),
            "pp" => Ok(SolverKind::Pp),
            other => Err(Error::InvalidConfig(format!(
                "unknown solver {other:?}; available: ceg, eg, ogda, pp"
            ))),
        }
    }
}

/// Per-run record of the iterate sequence and its accounting.
///
/// Scalar series (`step_norms`, `inner_iters`, `grad_calls`, `resid_norms`)
/// cover every outer step; iterate vectors are decimated by `record_every`.
/// Quantities that need every iterate (the iterate sum for time averages and
/// the regret accumulators) are accumulated online during the run.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub solver: SolverKind,
    pub problem_name: String,
    pub config: SolverConfig,
    /// Step size actually used.
    pub gamma: f64,
    /// Inner iteration budget per outer step (CEG only).
    pub k: Option<u32>,
    /// Outer horizon `T`.
    pub horizon: usize,
    /// Decimated `(t, z_t)` records; always contains `t = 0` and `t = T`.
    pub iterates: Vec<(usize, Point)>,
    /// `‖z_{t+1} − z_t‖` for `t = 0..T`.
    pub step_norms: Vec<f64>,
    /// Inner iterations consumed by step `t` (2 for EG, 1 for OGDA).
    pub inner_iters: Vec<u32>,
    /// Cumulative gradient calls after producing `z_t`, for `t = 0..=T`.
    pub grad_calls: Vec<u64>,
    /// `‖F(z_t)‖` for `t = 0..T`, reused from each step's first evaluation.
    pub resid_norms: Vec<f64>,
    /// `Σ_{t=1..T} z_t`, accumulated online.
    pub iterate_sum: Vec<f64>,
    /// `Σ_t ⟨F̃(z_{t+1}), z_{t+1}⟩` where `F̃` is the step's last operator
    /// evaluation (reused, not recomputed).
    pub regret_dot: f64,
    /// `Σ_t F̃(z_{t+1})`.
    pub regret_f_sum: Vec<f64>,
    /// `‖F(z₀)‖` when the run evaluated it (CEG).
    pub f0_norm: Option<f64>,
    pub start: Point,
    pub final_iterate: Point,
    pub warnings: Vec<String>,
    /// Set when the run stopped early on a numeric failure; the trace holds
    /// everything produced up to that step.
    pub aborted: Option<String>,
}

impl RunTrace {
    /// Total gradient calls consumed by the run.
    pub fn total_grad_calls(&self) -> u64 {
        *self.grad_calls.last().unwrap_or(&0)
    }

    /// Steps actually completed (equals `horizon` unless aborted).
    pub fn steps_completed(&self) -> usize {
        self.step_norms.len()
    }

    pub fn iterate_at(&self, t: usize) -> Option<&Point> {
        self.iterates.iter().find(|(s, _)| *s == t).map(|(_, p)| p)
    }

    /// True when every iterate was recorded (`record_every == 1`, no abort).
    pub fn is_complete(&self) -> bool {
        self.aborted.is_none() && self.iterates.len() == self.horizon + 1
    }
}

/// Step hook: observes `(t, z_t)` for every iterate of a run in order,
/// starting at `t = 0`.
pub type StepHook<'a> = &'a mut dyn FnMut(usize, &[f64]);

/// Runs `kind` on `problem`.
pub fn run(problem: &SaddleProblem, kind: SolverKind, config: &SolverConfig) -> Result<RunTrace> {
    run_with_hook(problem, kind, config, &mut |_, _| {})
}

/// Runs `kind`, reporting every iterate to `hook` as it is produced.
pub fn run_with_hook(
    problem: &SaddleProblem,
    kind: SolverKind,
    config: &SolverConfig,
    hook: StepHook,
) -> Result<RunTrace> {
    match kind {
        SolverKind::Ceg => ceg::ceg_run_hooked(problem, config, hook),
        SolverKind::Eg => baselines::eg_run_hooked(problem, config, hook),
        SolverKind::Ogda => baselines::ogda_run_hooked(problem, config, hook),
        SolverKind::Pp => baselines::pp_run_hooked(problem, config, None, hook),
    }
}

/// Resolved step size plus any warnings; rejects `γ·L ≥ 1`.
pub(crate) fn resolve_gamma(
    problem: &SaddleProblem,
    config: &SolverConfig,
) -> Result<(f64, Vec<String>)> {
    let l = problem.lipschitz();
    let mut warnings = Vec::new();
    let gamma = match config.gamma {
        Some(g) => {
            if !g.is_finite() || g <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "step size must be positive and finite, got {g}"
                )));
            }
            if g * l >= 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "step size {g} gives γ·L = {} >= 1; the inner map is no longer a contraction",
                    g * l
                )));
            }
            if g * l >= 0.5 {
                warnings.push(format!(
                    "γ·L = {} is in [1/2, 1): contraction holds but is slower than the default γ = 1/(2L)",
                    g * l
                ));
            }
            g
        }
        None => {
            if l > 0.0 {
                1.0 / (2.0 * l)
            } else {
                1.0
            }
        }
    };
    Ok((gamma, warnings))
}

/// Shared per-run bookkeeping.
pub(crate) struct TraceBuilder {
    solver: SolverKind,
    problem_name: String,
    config: SolverConfig,
    gamma: f64,
    k: Option<u32>,
    horizon: usize,
    iterates: Vec<(usize, Point)>,
    step_norms: Vec<f64>,
    inner_iters: Vec<u32>,
    grad_calls: Vec<u64>,
    resid_norms: Vec<f64>,
    iterate_sum: Vec<f64>,
    regret_dot: f64,
    regret_f_sum: Vec<f64>,
    f0_norm: Option<f64>,
    start: Point,
    warnings: Vec<String>,
    split: (usize, usize),
}

impl TraceBuilder {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        problem: &SaddleProblem,
        solver: SolverKind,
        config: &SolverConfig,
        gamma: f64,
        k: Option<u32>,
        warnings: Vec<String>,
        calls_at_start: u64,
        f0_norm: Option<f64>,
    ) -> Self {
        let dim = problem.dim();
        let t = config.t_horizon;
        let start = problem.start().clone();
        TraceBuilder {
            solver,
            problem_name: problem.name().to_string(),
            config: config.clone(),
            gamma,
            k,
            horizon: t,
            iterates: vec![(0, start.clone())],
            step_norms: Vec::with_capacity(t),
            inner_iters: Vec::with_capacity(t),
            grad_calls: vec![calls_at_start],
            resid_norms: Vec::with_capacity(t),
            iterate_sum: vec![0.0; dim],
            regret_dot: 0.0,
            regret_f_sum: vec![0.0; dim],
            f0_norm,
            split: problem.split(),
            start,
            warnings,
        }
    }

    /// Records the outcome of outer step `t` (which produced `z_{t+1}`).
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn record_step(
        &mut self,
        t: usize,
        z_next: &[f64],
        z_prev: &[f64],
        inner: u32,
        resid_t: f64,
        f_for_regret: &[f64],
        calls: u64,
    ) {
        self.step_norms.push(vecmath::dist(z_next, z_prev));
        self.inner_iters.push(inner);
        self.resid_norms.push(resid_t);
        self.grad_calls.push(calls);
        vecmath::add_assign(&mut self.iterate_sum, z_next);
        self.regret_dot += dot(f_for_regret, z_next);
        vecmath::add_assign(&mut self.regret_f_sum, f_for_regret);
        let t_next = t + 1;
        if t_next.is_multiple_of(self.config.record_every) || t_next == self.horizon {
            let (n, m) = self.split;
            if let Ok(p) = Point::new(z_next.to_vec(), n, m) {
                self.iterates.push((t_next, p));
            }
        }
    }

    pub(crate) fn finish(mut self, z_final: &[f64], aborted: Option<String>) -> RunTrace {
        let (n, m) = self.split;
        let final_iterate = Point::new(z_final.to_vec(), n, m).unwrap_or_else(|_| {
            // a non-finite final iterate only happens on abort; fall back to
            // the last recorded point
            self.iterates
                .last()
                .map(|(_, p)| p.clone())
                .unwrap_or_else(|| self.start.clone())
        });
        if aborted.is_some() {
            self.horizon = self.step_norms.len();
        }
        RunTrace {
            solver: self.solver,
            problem_name: self.problem_name,
            config: self.config,
            gamma: self.gamma,
            k: self.k,
            horizon: self.horizon,
            iterates: self.iterates,
            step_norms: self.step_norms,
            inner_iters: self.inner_iters,
            grad_calls: self.grad_calls,
            resid_norms: self.resid_norms,
            iterate_sum: self.iterate_sum,
            regret_dot: self.regret_dot,
            regret_f_sum: self.regret_f_sum,
            f0_norm: self.f0_norm,
            start: self.start,
            final_iterate,
            warnings: self.warnings,
            aborted,
        }
    }
}

/// `‖F(z₀)‖`, evaluated once at run start and counted.
pub(crate) fn eval_f0_norm(problem: &SaddleProblem, z0: &[f64], calls: &mut u64) -> Result<f64> {
    Ok(norm(&problem.eval_operator(z0, calls)?))
}
