//! `minmax` — run min-max solvers on benchmark saddle-point problems, emit
//! per-iteration traces, and verify the solver's convergence bounds.

use minmax_core::harness::{build_config, parse_entries, ExperimentOutcome};
use minmax_core::zoo;
use std::fmt::Write as _;
use std::process::ExitCode;

const USAGE: &str = "\
usage: minmax [CONFIG_FILE] [OPTIONS]

Runs the configured solvers on a saddle-point problem and writes one trace
table per solver plus a summary. Flags mirror config-file keys and override
them.

options:
  --problem NAME      problem name (see --list-problems) or a config file
                      can define one inline
  --solver LIST       comma-separated solvers: ceg, eg, ogda, pp
  --T N               outer iteration count
  --gamma X|auto      step size (auto = 1/(2L))
  --k N|auto          inner iterations per step (auto = bounded/unbounded rule)
  --seed N            seed for comparator sampling and power iteration
  --out DIR           output directory (default: out)
  --format csv|json   trace file format (default: csv)
  --verify            evaluate convergence-bound checks; exit 1 if any fails
  --list-problems     list built-in problems and exit
  --help              show this help

environment:
  MINMAX_THREADS      caps cell parallelism (default: available cores)

exit status: 0 on success with all executed bound checks passing,
1 when a bound check fails, 2 on usage or validation errors.
";

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run() -> minmax_core::Result<ExitCode> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut config_file: Option<String> = None;
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut solver_list: Vec<String> = Vec::new();
    let mut verify = false;

    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let mut take = |name: &str| -> minmax_core::Result<String> {
            it.next()
                .ok_or_else(|| minmax_core::Error::InvalidConfig(format!("{name} expects a value")))
        };
        match arg.as_str() {
            "--help" | "-h" => {
                print!("{USAGE}");
                return Ok(ExitCode::SUCCESS);
            }
            "--list-problems" => {
                for name in zoo::ZOO_NAMES {
                    let p = zoo::builtin(name)?;
                    let (n, m) = p.split();
                    println!(
                        "{name:<12} n={n} m={m} L={:#.4} set={}",
                        p.lipschitz(),
                        describe_set(p.set())
                    );
                }
                return Ok(ExitCode::SUCCESS);
            }
            "--verify" => verify = true,
            "--problem" => overrides.push(("problem".into(), take("--problem")?)),
            "--solver" => solver_list.push(take("--solver")?),
            "--T" => overrides.push(("T".into(), take("--T")?)),
            "--gamma" => overrides.push(("gamma".into(), take("--gamma")?)),
            "--k" => overrides.push(("k".into(), take("--k")?)),
            "--seed" => overrides.push(("seed".into(), take("--seed")?)),
            "--out" => overrides.push(("output".into(), take("--out")?)),
            "--format" => overrides.push(("format".into(), take("--format")?)),
            other if other.starts_with('-') => {
                return Err(minmax_core::Error::InvalidConfig(format!(
                    "unknown option {other}; see --help"
                )));
            }
            other => {
                if config_file.replace(other.to_string()).is_some() {
                    return Err(minmax_core::Error::InvalidConfig(
                        "more than one config file given".into(),
                    ));
                }
            }
        }
    }
    if !solver_list.is_empty() {
        overrides.push(("solvers".into(), solver_list.join(",")));
    }

    let mut entries = match &config_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            parse_entries(&text)?
        }
        None => Vec::new(),
    };
    for (key, value) in overrides {
        entries.retain(|(k, _)| *k != key);
        entries.push((key, value));
    }
    if entries.is_empty() {
        print!("{USAGE}");
        return Ok(ExitCode::from(2));
    }
    let config = build_config(&entries)?;

    let outcome = minmax_core::harness::run_experiment(&config, verify)?;
    print_summary(&outcome, verify);

    if verify && !outcome.all_bounds_passed {
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn describe_set(set: &minmax_core::FeasibleSet) -> String {
    use minmax_core::FeasibleSet::*;
    match set {
        Unconstrained { dim } => format!("unconstrained({dim})"),
        Ball { center, radius } => format!("ball(dim {}, r={radius})", center.len()),
        Box { lower, .. } => format!("box(dim {})", lower.len()),
        Simplex { dim } => format!("simplex({dim})"),
        Product(parts) => {
            let inner: Vec<String> = parts.iter().map(describe_set).collect();
            format!("product({})", inner.join(", "))
        }
    }
}

fn print_summary(outcome: &ExperimentOutcome, verify: bool) {
    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:<12} {:<5} {:>8} {:>4} {:>10} {:>12} {:>12} bounds",
        "problem", "solver", "T", "k", "grad_calls", "final_gap", "final_resid"
    );
    for cell in &outcome.cells {
        let last = cell.rows.last();
        let bounds = match &cell.report {
            Some(r) => {
                let failed = r.checks.iter().filter(|c| !c.passed).count();
                if failed == 0 {
                    format!("{} ok, {} skipped", r.checks.len(), r.skips.len())
                } else {
                    format!("{failed}/{} FAILED", r.checks.len())
                }
            }
            None => "-".into(),
        };
        let _ = writeln!(
            table,
            "{:<12} {:<5} {:>8} {:>4} {:>10} {:>12} {:>12} {}",
            cell.problem_name,
            cell.solver.name(),
            cell.trace.horizon,
            cell.trace
                .k
                .map(|k| k.to_string())
                .unwrap_or_else(|| "-".into()),
            cell.trace.total_grad_calls(),
            last.map(|r| format!("{:.3e}", r.gap)).unwrap_or_default(),
            last.map(|r| format!("{:.3e}", r.grad_norm_residual))
                .unwrap_or_default(),
            bounds
        );
        for warning in &cell.trace.warnings {
            eprintln!("warning [{}/{}]: {warning}", cell.problem_name, cell.solver);
        }
        if let Some(abort) = &cell.trace.aborted {
            eprintln!("aborted [{}/{}]: {abort}", cell.problem_name, cell.solver);
        }
    }
    print!("{table}");
    if verify {
        for cell in &outcome.cells {
            if let Some(report) = &cell.report {
                for check in &report.checks {
                    if !check.passed {
                        println!(
                            "FAILED {}/{} {}: lhs={:.6e} > rhs={:.6e} (slack {})",
                            cell.problem_name,
                            cell.solver,
                            check.bound_name,
                            check.lhs,
                            check.rhs,
                            check.slack
                        );
                    }
                }
            }
        }
    }
    println!("summary: {}", outcome.summary_path.display());
    if let Some(plot) = &outcome.plot_path {
        println!("plot data: {}", plot.display());
    }
}
