//! Clairvoyant extra-gradient: the inner contraction loop that approximates a
//! proximal-point step, the k-selection rules, and the outer driver.

use super::{eval_f0_norm, resolve_gamma, SolverConfig, SolverKind, StepHook, TraceBuilder};
use crate::point::Point;
use crate::problem::SaddleProblem;
use crate::vecmath::{dist, gamma_step, norm};
use crate::{Error, Result, RunTrace};

/// Everything one inner loop produces. `f_last` is the operator value from
/// the final inner evaluation; the regret accumulator reuses it instead of
/// spending an extra gradient call on `F(z_{t+1})`.
pub(crate) struct InnerOutcome {
    pub w: Vec<f64>,
    pub iters: u32,
    pub f_first_norm: f64,
    pub f_last: Vec<f64>,
}

/// `w₀ = z; w_m = [z − γF(w_{m−1})]_D` for `m = 1..=k`, stopping early once
/// consecutive iterates are within `delta` of each other.
pub(crate) fn ceg_inner_impl(
    problem: &SaddleProblem,
    z: &[f64],
    gamma: f64,
    k: u32,
    delta: f64,
    calls: &mut u64,
) -> Result<InnerOutcome> {
    let mut w = z.to_vec();
    let mut buf = vec![0.0; z.len()];
    let mut f_first_norm = 0.0;
    let mut f_last = Vec::new();
    let mut iters = 0;
    for m in 1..=k {
        let f = problem
            .eval_operator(&w, calls)
            .map_err(|e| tag_inner(e, m))?;
        if m == 1 {
            f_first_norm = norm(&f);
        }
        gamma_step(z, gamma, &f, &mut buf);
        let w_next = problem.set().project(&buf)?;
        let moved = dist(&w_next, &w);
        if !moved.is_finite() {
            return Err(tag_inner(
                Error::NonFinite {
                    context: "inner iterate".into(),
                    index: None,
                },
                m,
            ));
        }
        w = w_next;
        f_last = f;
        iters = m;
        if moved <= delta {
            break;
        }
    }
    Ok(InnerOutcome {
        w,
        iters,
        f_first_norm,
        f_last,
    })
}

fn tag_inner(e: Error, m: u32) -> Error {
    match e {
        Error::NonFinite { context, index } => Error::NonFinite {
            context: format!("{context} (inner iteration {m})"),
            index,
        },
        other => other,
    }
}

fn check_contraction(problem: &SaddleProblem, gamma: f64) -> Result<()> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "step size must be positive and finite, got {gamma}"
        )));
    }
    let gl = gamma * problem.lipschitz();
    if gl >= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "γ·L = {gl} >= 1: the fixed-point map is not a contraction"
        )));
    }
    Ok(())
}

/// Runs the inner contraction for `k` iterations from `z` and returns the
/// final iterate together with the number of iterations actually used.
pub fn ceg_inner(
    problem: &SaddleProblem,
    z: &Point,
    gamma: f64,
    k: u32,
    delta_inner: f64,
    calls: &mut u64,
) -> Result<(Point, u32)> {
    check_contraction(problem, gamma)?;
    if k < 1 {
        return Err(Error::InvalidConfig(
            "inner iteration count must be >= 1".into(),
        ));
    }
    let (n, m) = problem.split();
    let out = ceg_inner_impl(problem, z.coords(), gamma, k, delta_inner, calls)?;
    Ok((Point::new(out.w, n, m)?, out.iters))
}

const PP_ITERATION_CAP: u32 = 200;

/// Solves the proximal-point fixed point `p = [z − γF(p)]_D` to residual
/// `tol` by iterating the contraction until consecutive iterates are within
/// `tol/2`. Needs `γ·L < 1`; errors after 200 iterations.
pub(crate) fn pp_oracle_impl(
    problem: &SaddleProblem,
    z: &[f64],
    gamma: f64,
    tol: f64,
    calls: &mut u64,
) -> Result<(Vec<f64>, u32, f64, Vec<f64>)> {
    let mut w = z.to_vec();
    let mut buf = vec![0.0; z.len()];
    let mut f_first_norm = 0.0;
    for m in 1..=PP_ITERATION_CAP {
        let f = problem.eval_operator(&w, calls)?;
        if m == 1 {
            f_first_norm = norm(&f);
        }
        gamma_step(z, gamma, &f, &mut buf);
        let w_next = problem.set().project(&buf)?;
        let moved = dist(&w_next, &w);
        w = w_next;
        if moved <= tol / 2.0 {
            return Ok((w, m, f_first_norm, f));
        }
    }
    Err(Error::NoConvergence {
        context: "proximal-point fixed-point iteration",
        iterations: PP_ITERATION_CAP as usize,
    })
}

/// Default proximal-point tolerance at `z`.
pub fn pp_default_tol(z: &[f64]) -> f64 {
    1e-13 * (1.0 + norm(z))
}

/// The exact proximal-point step from `z` (up to `tol`).
pub fn pp_oracle(
    problem: &SaddleProblem,
    z: &Point,
    gamma: f64,
    tol: Option<f64>,
    calls: &mut u64,
) -> Result<Point> {
    check_contraction(problem, gamma)?;
    let tol = tol.unwrap_or_else(|| pp_default_tol(z.coords()));
    let (n, m) = problem.split();
    let (p, _, _, _) = pp_oracle_impl(problem, z.coords(), gamma, tol, calls)?;
    Point::new(p, n, m)
}

/// Inner iteration count for bounded feasible sets:
/// `⌈log₂(5·max(L,1)·max(‖F(z₀)‖,1)·|D|²·T)⌉`, at least 1.
pub fn select_k_bounded(l: f64, f0_norm: f64, diam: f64, t: usize) -> Result<u32> {
    if !diam.is_finite() || diam <= 0.0 {
        return Err(Error::Unsupported(format!(
            "k selection for bounded sets needs a finite positive diameter, got {diam}"
        )));
    }
    let arg = 5.0 * l.max(1.0) * f0_norm.max(1.0) * diam * diam * t as f64;
    let k = arg.log2().ceil();
    Ok(if k < 1.0 { 1 } else { k as u32 })
}

/// Inner iteration count for unbounded feasible sets:
/// `⌈4·log₂(max(T,2)) + log₂(max(L,1)) + log₂(max(‖F(z₀)‖,1))⌉ + 1`.
/// This satisfies `T⁴/2ᵏ ≤ 1/2`, which the unbounded-set analysis requires.
pub fn select_k_unbounded(l: f64, f0_norm: f64, t: usize) -> u32 {
    let t_eff = (t.max(2)) as f64;
    let raw = 4.0 * t_eff.log2() + l.max(1.0).log2() + f0_norm.max(1.0).log2();
    raw.ceil() as u32 + 1
}

pub(crate) fn resolve_k(
    problem: &SaddleProblem,
    config: &SolverConfig,
    f0_norm: f64,
) -> Result<u32> {
    match config.k_rule {
        super::KRule::Fixed(k) => Ok(k),
        super::KRule::AutoBounded => select_k_bounded(
            problem.lipschitz(),
            f0_norm,
            problem.set().diameter(),
            config.t_horizon,
        ),
        super::KRule::AutoUnbounded => Ok(select_k_unbounded(
            problem.lipschitz(),
            f0_norm,
            config.t_horizon,
        )),
    }
}

/// Outer clairvoyant extra-gradient loop: `z_{t+1}` is the output of the
/// inner contraction started at `z_t`.
pub fn ceg_run(problem: &SaddleProblem, config: &SolverConfig) -> Result<RunTrace> {
    ceg_run_hooked(problem, config, &mut |_, _| {})
}

pub(crate) fn ceg_run_hooked(
    problem: &SaddleProblem,
    config: &SolverConfig,
    hook: StepHook,
) -> Result<RunTrace> {
    config.validate()?;
    let (gamma, warnings) = resolve_gamma(problem, config)?;
    let mut calls = 0u64;
    let z0 = problem.start().coords().to_vec();
    // one counted startup evaluation feeds the k rules
    let f0_norm = eval_f0_norm(problem, &z0, &mut calls)?;
    let k = resolve_k(problem, config, f0_norm)?;
    if k < 1 {
        return Err(Error::InvalidConfig("resolved k must be >= 1".into()));
    }

    let mut builder = TraceBuilder::new(
        problem,
        SolverKind::Ceg,
        config,
        gamma,
        Some(k),
        warnings,
        calls,
        Some(f0_norm),
    );
    hook(0, &z0);
    let mut z = z0;
    let mut aborted = None;
    for t in 0..config.t_horizon {
        let delta = config.inner_early_exit * (1.0 + norm(&z));
        match ceg_inner_impl(problem, &z, gamma, k, delta, &mut calls) {
            Ok(out) => {
                builder.record_step(
                    t,
                    &out.w,
                    &z,
                    out.iters,
                    out.f_first_norm,
                    &out.f_last,
                    calls,
                );
                hook(t + 1, &out.w);
                z = out.w;
            }
            Err(Error::NonFinite { context, index }) => {
                aborted = Some(format!(
                    "numeric failure at outer step {t}: {context}{}",
                    index
                        .map(|i| format!(" (coordinate {i})"))
                        .unwrap_or_default()
                ));
                break;
            }
            Err(other) => return Err(other),
        }
    }
    Ok(builder.finish(&z, aborted))
}
