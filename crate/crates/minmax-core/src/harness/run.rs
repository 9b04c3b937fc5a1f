//! Experiment execution: one cell per (problem, solver), optionally in
//! parallel, each emitting a trace table; the orchestrator writes plot data
//! and the summary last. Identical config and seed give byte-identical files
//! regardless of thread count.

use super::bounds::{verify_bounds, BoundReport};
use super::config::{ExperimentConfig, MetricName, OutputFormat};
use super::output::{
    emit_plot_data, write_summary_json, write_trace_csv, write_trace_json, CellSummary, TraceRow,
};
use crate::metrics::{self, MetricSeries};
use crate::point::Point;
use crate::sets::FeasibleSet;
use crate::solvers::{run_with_hook, KRule, RunTrace, SolverConfig, SolverKind};
use crate::vecmath::{add_assign, dist};
use crate::zoo::Family;
use crate::{Result, SaddleProblem};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Debug)]
pub struct CellResult {
    pub problem_name: String,
    pub solver: SolverKind,
    pub trace: RunTrace,
    pub rows: Vec<TraceRow>,
    pub report: Option<BoundReport>,
    /// `(series, slope, r²)` log-log fits for the configured metrics.
    pub rate_fits: Vec<(String, f64, f64)>,
    pub trace_path: PathBuf,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub cells: Vec<CellResult>,
    pub summary_path: PathBuf,
    /// Present when at least one series had data.
    pub plot_path: Option<PathBuf>,
    /// True iff every executed bound check passed (vacuously true without
    /// `verify`).
    pub all_bounds_passed: bool,
}

/// How the per-iteration gap column is computed for a problem. Only exact
/// routes are used inside the loop; sampled estimates stay out of the trace.
enum GapColumn {
    /// Gap oracle or support functions over the whole feasible set.
    Exact,
    /// Exact restricted gap at a canonical comparator radius around `z₀`.
    Restricted(f64),
    Unavailable,
}

fn gap_column_mode(problem: &SaddleProblem) -> GapColumn {
    if problem.gap_oracle().is_some() {
        return GapColumn::Exact;
    }
    let bilinear = matches!(problem.family(), Some(Family::Bilinear { .. }));
    if bilinear && problem.set().is_bounded() && problem.set().split_at(problem.split().0).is_some()
    {
        return GapColumn::Exact;
    }
    let bilinear_base = matches!(
        problem.family().map(Family::base),
        Some(Family::Bilinear { .. })
    );
    if bilinear_base && matches!(problem.set(), FeasibleSet::Unconstrained { .. }) {
        if let Some(z_star) = problem.saddle() {
            let d0 = dist(problem.start().coords(), z_star.coords());
            return GapColumn::Restricted((2.0 * d0).max(1.0));
        }
    }
    GapColumn::Unavailable
}

fn gap_at(problem: &SaddleProblem, mode: &GapColumn, z: &Point, seed: u64) -> f64 {
    match mode {
        GapColumn::Exact => metrics::duality_gap(problem, z, seed)
            .map(|r| r.gap)
            .unwrap_or(f64::NAN),
        GapColumn::Restricted(rho) => metrics::restricted_gap(problem, z, *rho, seed)
            .map(|r| r.gap)
            .unwrap_or(f64::NAN),
        GapColumn::Unavailable => f64::NAN,
    }
}

fn solver_config(config: &ExperimentConfig, problem: &SaddleProblem) -> SolverConfig {
    let k_rule = match config.k {
        Some(k) => KRule::Fixed(k),
        None => {
            if problem.set().is_bounded() {
                KRule::AutoBounded
            } else {
                KRule::AutoUnbounded
            }
        }
    };
    let mut sc = SolverConfig::new(config.t_horizon)
        .with_k_rule(k_rule)
        .with_record_every((config.t_horizon / 1000).max(1));
    sc.gamma = config.gamma;
    sc
}

fn run_cell(
    problem: &SaddleProblem,
    solver: SolverKind,
    config: &ExperimentConfig,
    verify: bool,
) -> Result<CellResult> {
    let sc = solver_config(config, problem);
    let t_horizon = config.t_horizon;
    let gap_mode = gap_column_mode(problem);
    let (n, m) = problem.split();

    // the gap column tracks the running time average, so it is accumulated
    // online while the solver produces iterates
    let mut gaps: Vec<f64> = Vec::with_capacity(t_horizon + 1);
    let mut running_sum = vec![0.0; problem.dim()];
    let mut hook = |t: usize, z: &[f64]| {
        let gap_point = if t == 0 {
            Point::new(z.to_vec(), n, m).ok()
        } else {
            add_assign(&mut running_sum, z);
            let avg: Vec<f64> = running_sum.iter().map(|v| v / t as f64).collect();
            Point::new(avg, n, m).ok()
        };
        let gap = gap_point
            .map(|p| gap_at(problem, &gap_mode, &p, config.seed))
            .unwrap_or(f64::NAN);
        gaps.push(gap);
    };
    let trace = run_with_hook(problem, solver, &sc, &mut hook)?;

    let steps = trace.steps_completed();
    let final_resid = metrics::operator_residual(problem, &trace.final_iterate).unwrap_or(f64::NAN);
    let mut rows = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        rows.push(TraceRow {
            t,
            gap: gaps.get(t).copied().unwrap_or(f64::NAN),
            grad_norm_residual: if t < steps {
                trace.resid_norms[t]
            } else {
                final_resid
            },
            step_norm: if t == 0 { 0.0 } else { trace.step_norms[t - 1] },
            inner_iters: if t == 0 { 0 } else { trace.inner_iters[t - 1] },
            grad_calls_cumulative: trace.grad_calls[t],
        });
    }

    let file_name = format!(
        "{}_{}.{}",
        sanitize(&config.problem_name()),
        solver.name(),
        config.format.extension()
    );
    let trace_path = config.output.join(file_name);
    match config.format {
        OutputFormat::Csv => write_trace_csv(&trace_path, &rows)?,
        OutputFormat::Json => {
            write_trace_json(&trace_path, &config.problem_name(), solver.name(), &rows)?
        }
    }

    let report = if verify {
        Some(verify_bounds(&trace, problem, config.seed)?)
    } else {
        None
    };

    let mut rate_fits = Vec::new();
    let t_min = (t_horizon / 10).max(1);
    for metric in &config.metrics {
        let values: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| r.t >= 1)
            .map(|r| {
                (
                    r.t,
                    match metric {
                        MetricName::Gap => r.gap,
                        MetricName::Residual => r.grad_norm_residual,
                        MetricName::StepNorm => r.step_norm,
                    },
                )
            })
            .filter(|(_, v)| v.is_finite() && *v > 0.0)
            .collect();
        if let Ok(series) = MetricSeries::new(metric.name(), values) {
            if let Ok((slope, r2)) = metrics::rate_fit(&series, t_min) {
                rate_fits.push((metric.name().to_string(), slope, r2));
            }
        }
    }

    Ok(CellResult {
        problem_name: config.problem_name(),
        solver,
        trace,
        rows,
        report,
        rate_fits,
        trace_path,
    })
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn thread_cap() -> usize {
    if let Ok(v) = std::env::var("MINMAX_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Runs every (problem, solver) cell, writes one trace file per cell, then
/// plot data and the summary. Returns the per-cell results in config order.
pub fn run_experiment(config: &ExperimentConfig, verify: bool) -> Result<ExperimentOutcome> {
    std::fs::create_dir_all(&config.output)?;
    let problem = config.resolve_problem()?;

    let cells: Vec<SolverKind> = config.solvers.clone();
    let threads = thread_cap().min(cells.len());
    let mut results: Vec<Option<Result<CellResult>>> = Vec::new();
    results.resize_with(cells.len(), || None);

    if threads <= 1 {
        for (i, solver) in cells.iter().enumerate() {
            results[i] = Some(run_cell(&problem, *solver, config, verify));
        }
    } else {
        let next = AtomicUsize::new(0);
        let slots = Mutex::new(&mut results);
        std::thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= cells.len() {
                        break;
                    }
                    let out = run_cell(&problem, cells[i], config, verify);
                    slots.lock().unwrap()[i] = Some(out);
                });
            }
        });
    }

    let mut done = Vec::with_capacity(cells.len());
    for slot in results {
        done.push(slot.expect("every cell was scheduled")?);
    }

    // plot-ready long format across all cells
    let mut series = Vec::new();
    for cell in &done {
        for metric in &config.metrics {
            let pts: Vec<(usize, f64)> = cell
                .rows
                .iter()
                .map(|r| {
                    (
                        r.t,
                        match metric {
                            MetricName::Gap => r.gap,
                            MetricName::Residual => r.grad_norm_residual,
                            MetricName::StepNorm => r.step_norm,
                        },
                    )
                })
                .filter(|(_, v)| v.is_finite())
                .collect();
            if pts.is_empty() {
                continue;
            }
            let name = format!("{}/{}/{}", cell.problem_name, cell.solver, metric.name());
            series.push(MetricSeries::new(name, pts)?);
        }
    }
    let plot_path = if series.is_empty() {
        None
    } else {
        let path = config.output.join("plot.csv");
        emit_plot_data(&series, &path)?;
        Some(path)
    };

    let all_bounds_passed = done
        .iter()
        .filter_map(|c| c.report.as_ref())
        .all(|r| r.all_passed());

    // the summary is written last, in config order
    let summaries: Vec<CellSummary> = done
        .iter()
        .map(|c| CellSummary {
            problem: &c.problem_name,
            solver: c.solver.name(),
            t_horizon: c.trace.horizon,
            gamma: c.trace.gamma,
            k: c.trace.k,
            grad_calls: c.trace.total_grad_calls(),
            final_gap: c.rows.last().map(|r| r.gap).unwrap_or(f64::NAN),
            final_residual: c
                .rows
                .last()
                .map(|r| r.grad_norm_residual)
                .unwrap_or(f64::NAN),
            report: c.report.as_ref(),
            rate_fits: &c.rate_fits,
            warnings: &c.trace.warnings,
        })
        .collect();
    let summary_path = config.output.join("summary.json");
    write_summary_json(&summary_path, &summaries, all_bounds_passed)?;

    Ok(ExperimentOutcome {
        cells: done,
        summary_path,
        plot_path,
        all_bounds_passed,
    })
}
