//! Baseline methods: extra-gradient, optimistic gradient descent/ascent and
//! the exact proximal-point reference trajectory.

use super::{pp_oracle_impl, resolve_gamma, SolverConfig, SolverKind, StepHook, TraceBuilder};
use crate::problem::SaddleProblem;
use crate::vecmath::{gamma_step, norm};
use crate::{Error, Result, RunTrace};

/// Extra-gradient: a half step with `F(z_t)` followed by a full step with
/// `F` at the half point. Two gradient calls per iteration.
pub fn eg_run(problem: &SaddleProblem, config: &SolverConfig) -> Result<RunTrace> {
    eg_run_hooked(problem, config, &mut |_, _| {})
}

pub(crate) fn eg_run_hooked(
    problem: &SaddleProblem,
    config: &SolverConfig,
    hook: StepHook,
) -> Result<RunTrace> {
    config.validate()?;
    let (gamma, warnings) = resolve_gamma(problem, config)?;
    let mut calls = 0u64;
    let mut builder = TraceBuilder::new(
        problem,
        SolverKind::Eg,
        config,
        gamma,
        None,
        warnings,
        calls,
        None,
    );
    let mut z = problem.start().coords().to_vec();
    let mut buf = vec![0.0; z.len()];
    hook(0, &z);
    let mut aborted = None;
    for t in 0..config.t_horizon {
        let step = (|| -> Result<(Vec<f64>, f64, Vec<f64>)> {
            let f_z = problem.eval_operator(&z, &mut calls)?;
            let resid = norm(&f_z);
            gamma_step(&z, gamma, &f_z, &mut buf);
            let half = problem.set().project(&buf)?;
            let f_half = problem.eval_operator(&half, &mut calls)?;
            gamma_step(&z, gamma, &f_half, &mut buf);
            let next = problem.set().project(&buf)?;
            Ok((next, resid, f_half))
        })();
        match step {
            Ok((next, resid, f_half)) => {
                builder.record_step(t, &next, &z, 2, resid, &f_half, calls);
                hook(t + 1, &next);
                z = next;
            }
            Err(Error::NonFinite { context, .. }) => {
                aborted = Some(format!("numeric failure at outer step {t}: {context}"));
                break;
            }
            Err(other) => return Err(other),
        }
    }
    Ok(builder.finish(&z, aborted))
}

/// Optimistic gradient descent/ascent with the past-gradient update
/// `z_{t+1} = [z_t − 2γF(z_t) + γF(z_{t−1})]_D` and `F(z_{−1}) := F(z₀)`.
/// One gradient call per iteration plus one for the initialization.
pub fn ogda_run(problem: &SaddleProblem, config: &SolverConfig) -> Result<RunTrace> {
    ogda_run_hooked(problem, config, &mut |_, _| {})
}

pub(crate) fn ogda_run_hooked(
    problem: &SaddleProblem,
    config: &SolverConfig,
    hook: StepHook,
) -> Result<RunTrace> {
    config.validate()?;
    let (gamma, warnings) = resolve_gamma(problem, config)?;
    let mut calls = 0u64;
    let mut z = problem.start().coords().to_vec();
    let mut f_prev = problem.eval_operator(&z, &mut calls)?;
    let mut builder = TraceBuilder::new(
        problem,
        SolverKind::Ogda,
        config,
        gamma,
        None,
        warnings,
        calls,
        None,
    );
    let mut buf = vec![0.0; z.len()];
    hook(0, &z);
    let mut aborted = None;
    for t in 0..config.t_horizon {
        let step = (|| -> Result<(Vec<f64>, f64, Vec<f64>)> {
            let f_t = problem.eval_operator(&z, &mut calls)?;
            let resid = norm(&f_t);
            for i in 0..z.len() {
                buf[i] = z[i] - 2.0 * gamma * f_t[i] + gamma * f_prev[i];
            }
            let next = problem.set().project(&buf)?;
            Ok((next, resid, f_t))
        })();
        match step {
            Ok((next, resid, f_t)) => {
                builder.record_step(t, &next, &z, 1, resid, &f_t, calls);
                hook(t + 1, &next);
                z = next;
                f_prev = f_t;
            }
            Err(Error::NonFinite { context, .. }) => {
                aborted = Some(format!("numeric failure at outer step {t}: {context}"));
                break;
            }
            Err(other) => return Err(other),
        }
    }
    Ok(builder.finish(&z, aborted))
}

/// Exact proximal point: every step solves the implicit update with
/// `pp_oracle`. Used as the reference trajectory in tests.
pub fn pp_run(
    problem: &SaddleProblem,
    config: &SolverConfig,
    tol: Option<f64>,
) -> Result<RunTrace> {
    pp_run_hooked(problem, config, tol, &mut |_, _| {})
}

pub(crate) fn pp_run_hooked(
    problem: &SaddleProblem,
    config: &SolverConfig,
    tol: Option<f64>,
    hook: StepHook,
) -> Result<RunTrace> {
    config.validate()?;
    let (gamma, warnings) = resolve_gamma(problem, config)?;
    let mut calls = 0u64;
    let mut builder = TraceBuilder::new(
        problem,
        SolverKind::Pp,
        config,
        gamma,
        None,
        warnings,
        calls,
        None,
    );
    let mut z = problem.start().coords().to_vec();
    hook(0, &z);
    let mut aborted = None;
    for t in 0..config.t_horizon {
        let step_tol = tol.unwrap_or_else(|| super::ceg::pp_default_tol(&z));
        match pp_oracle_impl(problem, &z, gamma, step_tol, &mut calls) {
            Ok((p, iters, resid, f_last)) => {
                builder.record_step(t, &p, &z, iters, resid, &f_last, calls);
                hook(t + 1, &p);
                z = p;
            }
            Err(Error::NonFinite { context, .. }) => {
                aborted = Some(format!("numeric failure at outer step {t}: {context}"));
                break;
            }
            Err(Error::NoConvergence {
                context,
                iterations,
            }) => {
                return Err(Error::NoConvergence {
                    context,
                    iterations,
                });
            }
            Err(other) => return Err(other),
        }
    }
    Ok(builder.finish(&z, aborted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{ceg_run, KRule};
    use crate::zoo::builtin;

    #[test]
    fn eg_one_step_hand_computation() {
        // half = z − γF(z) = (1, 0.5); z₁ = z − γF(half) = (0.75, 0.5)
        let p = builtin("BILIN1").unwrap();
        let config = SolverConfig::new(1).with_gamma(0.5);
        let trace = eg_run(&p, &config).unwrap();
        assert_eq!(trace.final_iterate.coords(), &[0.75, 0.5]);
        assert_eq!(trace.total_grad_calls(), 2);
    }

    #[test]
    fn eg_stationary_at_saddle() {
        let spec = crate::zoo::builtin_spec("BILIN1")
            .unwrap()
            .with_start(vec![0.0, 0.0]);
        let p = spec.build().unwrap();
        let trace = eg_run(&p, &SolverConfig::new(10)).unwrap();
        assert_eq!(trace.final_iterate.coords(), &[0.0, 0.0]);
    }

    #[test]
    fn eg_equals_ceg_with_two_inner_iterations() {
        for name in crate::zoo::ZOO_NAMES {
            let p = builtin(name).unwrap();
            let config = SolverConfig::new(25).with_inner_early_exit(0.0);
            let eg = eg_run(&p, &config).unwrap();
            let ceg = ceg_run(&p, &config.clone().with_k_rule(KRule::Fixed(2))).unwrap();
            for ((t1, a), (t2, b)) in eg.iterates.iter().zip(&ceg.iterates) {
                assert_eq!(t1, t2);
                assert_eq!(a.coords(), b.coords(), "{name}: trace diverges at t={t1}");
            }
            assert_eq!(eg.total_grad_calls(), 2 * 25);
        }
    }

    #[test]
    fn ogda_first_step_uses_past_equals_current_gradient() {
        let p = builtin("BILIN1").unwrap();
        let config = SolverConfig::new(1).with_gamma(0.25);
        let trace = ogda_run(&p, &config).unwrap();
        assert_eq!(trace.final_iterate.coords(), &[1.0, 0.25]);
        assert_eq!(trace.total_grad_calls(), 2); // init + one per iteration
    }

    #[test]
    fn ogda_stationary_at_saddle_and_call_count() {
        let spec = crate::zoo::builtin_spec("QUAD1")
            .unwrap()
            .with_start(vec![0.0, 0.0]);
        let p = spec.build().unwrap();
        let trace = ogda_run(&p, &SolverConfig::new(50)).unwrap();
        assert_eq!(trace.final_iterate.coords(), &[0.0, 0.0]);
        assert_eq!(trace.total_grad_calls(), 51);
    }

    #[test]
    fn pp_single_step_closed_form() {
        let p = builtin("BILIN1").unwrap();
        let config = SolverConfig::new(1).with_gamma(0.5);
        let trace = pp_run(&p, &config, None).unwrap();
        assert!((trace.final_iterate.coords()[0] - 0.8).abs() < 1e-12);
        assert!((trace.final_iterate.coords()[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn pp_step_norms_nonincreasing() {
        let p = builtin("BILIN1").unwrap();
        let trace = pp_run(&p, &SolverConfig::new(200).with_gamma(0.5), None).unwrap();
        for w in trace.step_norms.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-10,
                "step norms increased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn pp_stationary_at_saddle() {
        let spec = crate::zoo::builtin_spec("BILIN1")
            .unwrap()
            .with_start(vec![0.0, 0.0]);
        let p = spec.build().unwrap();
        let trace = pp_run(&p, &SolverConfig::new(5), None).unwrap();
        assert!(norm(trace.final_iterate.coords()) <= 1e-12);
    }

    #[test]
    fn traces_stay_feasible_and_calls_nondecreasing() {
        for name in crate::zoo::ZOO_NAMES {
            let p = builtin(name).unwrap();
            let config = SolverConfig::new(40).with_k_rule(if p.set().is_bounded() {
                KRule::AutoBounded
            } else {
                KRule::AutoUnbounded
            });
            for kind in SolverKind::ALL {
                let trace = crate::solvers::run(&p, kind, &config).unwrap();
                assert!(trace.aborted.is_none());
                for (t, point) in &trace.iterates {
                    let r = p.set().residual(point.coords()).unwrap();
                    assert!(r <= 1e-12, "{name}/{kind}: infeasible iterate at t={t}");
                }
                for w in trace.grad_calls.windows(2) {
                    assert!(w[1] >= w[0]);
                }
                if kind == SolverKind::Ceg {
                    let inner_sum: u64 = trace.inner_iters.iter().map(|&v| v as u64).sum();
                    assert_eq!(trace.total_grad_calls(), 1 + inner_sum);
                    assert!(inner_sum <= 40 * u64::from(trace.k.unwrap()));
                }
            }
        }
    }
}
