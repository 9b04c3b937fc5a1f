//! Flat-file emission: per-run trace tables (CSV or JSON mirror), long-format
//! plot data and the summary JSON.

use super::bounds::BoundReport;
use crate::metrics::MetricSeries;
use crate::{Error, Result};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Column order is part of the output contract.
pub const TRACE_HEADER: &str =
    "t,gap,grad_norm_residual,step_norm,inner_iters,grad_calls_cumulative";

/// One row of the per-iteration table.
#[derive(Clone, Copy, Debug)]
pub struct TraceRow {
    pub t: usize,
    pub gap: f64,
    pub grad_norm_residual: f64,
    pub step_norm: f64,
    pub inner_iters: u32,
    pub grad_calls_cumulative: u64,
}

/// Floats carry 17 significant digits so emitted values round-trip exactly.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// JSON value for a float: non-finite values become `null`.
fn json_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut text = String::with_capacity(rows.len() * 64);
    text.push_str(TRACE_HEADER);
    text.push('\n');
    for r in rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            r.t,
            fmt_float(r.gap),
            fmt_float(r.grad_norm_residual),
            fmt_float(r.step_norm),
            r.inner_iters,
            r.grad_calls_cumulative
        );
    }
    fs::write(path, text)?;
    Ok(())
}

/// JSON mirror of the CSV schema.
pub fn write_trace_json(path: &Path, problem: &str, solver: &str, rows: &[TraceRow]) -> Result<()> {
    let mut text = String::with_capacity(rows.len() * 128);
    let _ = write!(
        text,
        "{{\n  \"problem\": \"{}\",\n  \"solver\": \"{}\",\n  \"rows\": [",
        json_escape(problem),
        json_escape(solver)
    );
    for (i, r) in rows.iter().enumerate() {
        if i > 0 {
            text.push(',');
        }
        let _ = write!(
            text,
            "\n    {{\"t\": {}, \"gap\": {}, \"grad_norm_residual\": {}, \"step_norm\": {}, \"inner_iters\": {}, \"grad_calls_cumulative\": {}}}",
            r.t,
            json_float(r.gap),
            json_float(r.grad_norm_residual),
            json_float(r.step_norm),
            r.inner_iters,
            r.grad_calls_cumulative
        );
    }
    text.push_str("\n  ]\n}\n");
    fs::write(path, text)?;
    Ok(())
}

/// Long-format CSV (`series_name,t,value`) sorted by `(series_name, t)`,
/// ready for any plotting tool.
pub fn emit_plot_data(series: &[MetricSeries], path: &Path) -> Result<()> {
    if series.is_empty() {
        return Err(Error::InvalidConfig("no series to emit".into()));
    }
    let mut order: Vec<&MetricSeries> = series.iter().collect();
    order.sort_by(|a, b| a.name().cmp(b.name()));
    let mut text = String::new();
    text.push_str("series_name,t,value\n");
    for s in order {
        for (t, v) in s.points() {
            let _ = writeln!(text, "{},{},{}", s.name(), t, fmt_float(*v));
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Per-cell summary entry.
pub struct CellSummary<'a> {
    pub problem: &'a str,
    pub solver: &'a str,
    pub t_horizon: usize,
    pub gamma: f64,
    pub k: Option<u32>,
    pub grad_calls: u64,
    pub final_gap: f64,
    pub final_residual: f64,
    pub report: Option<&'a BoundReport>,
    pub rate_fits: &'a [(String, f64, f64)],
    pub warnings: &'a [String],
}

pub fn write_summary_json(path: &Path, cells: &[CellSummary], all_passed: bool) -> Result<()> {
    let mut text = String::new();
    text.push_str("{\n");
    let _ = writeln!(text, "  \"all_passed\": {all_passed},");
    text.push_str("  \"cells\": [");
    for (i, c) in cells.iter().enumerate() {
        if i > 0 {
            text.push(',');
        }
        text.push_str("\n    {\n");
        let _ = writeln!(text, "      \"problem\": \"{}\",", json_escape(c.problem));
        let _ = writeln!(text, "      \"solver\": \"{}\",", json_escape(c.solver));
        let _ = writeln!(text, "      \"T\": {},", c.t_horizon);
        let _ = writeln!(text, "      \"gamma\": {},", json_float(c.gamma));
        match c.k {
            Some(k) => {
                let _ = writeln!(text, "      \"k\": {k},");
            }
            None => {
                let _ = writeln!(text, "      \"k\": null,");
            }
        }
        let _ = writeln!(text, "      \"grad_calls\": {},", c.grad_calls);
        let _ = writeln!(text, "      \"final_gap\": {},", json_float(c.final_gap));
        let _ = writeln!(
            text,
            "      \"final_residual\": {},",
            json_float(c.final_residual)
        );
        text.push_str("      \"checks\": [");
        if let Some(report) = c.report {
            for (j, check) in report.checks.iter().enumerate() {
                if j > 0 {
                    text.push(',');
                }
                let _ = write!(
                    text,
                    "\n        {{\"bound_name\": \"{}\", \"lhs\": {}, \"rhs\": {}, \"slack\": {}, \"passed\": {}}}",
                    json_escape(&check.bound_name),
                    json_float(check.lhs),
                    json_float(check.rhs),
                    json_float(check.slack),
                    check.passed
                );
            }
            if !report.checks.is_empty() {
                text.push_str("\n      ");
            }
        }
        text.push_str("],\n");
        text.push_str("      \"skips\": [");
        if let Some(report) = c.report {
            for (j, skip) in report.skips.iter().enumerate() {
                if j > 0 {
                    text.push(',');
                }
                let _ = write!(
                    text,
                    "\n        {{\"bound_name\": \"{}\", \"reason\": \"{}\"}}",
                    json_escape(&skip.bound_name),
                    json_escape(&skip.reason)
                );
            }
            if !report.skips.is_empty() {
                text.push_str("\n      ");
            }
        }
        text.push_str("],\n");
        text.push_str("      \"rate_fits\": [");
        for (j, (series, slope, r2)) in c.rate_fits.iter().enumerate() {
            if j > 0 {
                text.push(',');
            }
            let _ = write!(
                text,
                "\n        {{\"series\": \"{}\", \"slope\": {}, \"r2\": {}}}",
                json_escape(series),
                json_float(*slope),
                json_float(*r2)
            );
        }
        if !c.rate_fits.is_empty() {
            text.push_str("\n      ");
        }
        text.push_str("],\n");
        text.push_str("      \"warnings\": [");
        for (j, w) in c.warnings.iter().enumerate() {
            if j > 0 {
                text.push_str(", ");
            }
            let _ = write!(text, "\"{}\"", json_escape(w));
        }
        text.push_str("]\n    }");
    }
    text.push_str("\n  ]\n}\n");
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for v in [1.0, -0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 9.0 / 1000.0] {
            let s = fmt_float(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v, back, "{s}");
        }
        assert_eq!(fmt_float(f64::NAN), "NaN");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert_eq!(json_float(f64::NAN), "null");
    }

    #[test]
    fn json_escaping() {
        assert_eq!(json_escape("a\"b\\c\nd"), "a\\\"b\\\\c\\nd");
    }
}
