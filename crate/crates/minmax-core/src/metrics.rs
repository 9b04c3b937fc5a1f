//! Convergence measurements: duality gaps, operator residuals, telescoping
//! regret sums and log-log rate fits.

use crate::point::Point;
use crate::problem::SaddleProblem;
use crate::sets::FeasibleSet;
use crate::solvers::RunTrace;
use crate::vecmath::{dist, dot, norm, sub};
use crate::zoo::Family;
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A named `(t, value)` series with strictly increasing `t` and finite values.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSeries {
    name: String,
    points: Vec<(usize, f64)>,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>, points: Vec<(usize, f64)>) -> Result<Self> {
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidConfig(format!(
                    "series t values must strictly increase, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some((t, v)) = points.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("metric series point at t={t} ({v})"),
                index: None,
            });
        }
        Ok(MetricSeries {
            name: name.into(),
            points,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[(usize, f64)] {
        &self.points
    }
}

/// How a duality gap was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapMethod {
    /// Exact: support functions, a closed-form best response, or a problem
    /// gap oracle.
    ExactSupport,
    /// Lower bound from sampled comparators.
    GridRestricted,
}

impl GapMethod {
    pub fn name(&self) -> &'static str {
        match self {
            GapMethod::ExactSupport => "exact_support",
            GapMethod::GridRestricted => "grid_restricted",
        }
    }
}

/// A duality-gap measurement. `comparator_radius` is the radius of the
/// comparator restriction around the run's start point; infinite when the
/// comparators ranged over the whole feasible set.
#[derive(Clone, Copy, Debug)]
pub struct GapReport {
    pub gap: f64,
    pub comparator_radius: f64,
    pub method: GapMethod,
}

/// Arithmetic mean of the iterates `z_1..z_T` (the start point is excluded,
/// matching the index range of the time-average guarantees). Uses the online
/// iterate sum, so it is exact even for decimated traces.
pub fn time_average(trace: &RunTrace) -> Result<Point> {
    let t = trace.steps_completed();
    if t == 0 {
        return Err(Error::InvalidConfig(
            "time average of an empty trace".into(),
        ));
    }
    let mean: Vec<f64> = trace.iterate_sum.iter().map(|v| v / t as f64).collect();
    let (n, m) = trace.start.split();
    Point::new(mean, n, m)
}

const GRID_SAMPLES: usize = 10_000;

/// Duality gap `max_y f(x̂, y) − min_x f(x, ŷ)`.
///
/// Exact (via a gap oracle or support functions) whenever possible; bounded
/// problems without an exact route fall back to a sampled lower bound over
/// `10⁴` comparators drawn from `seed`. Unbounded problems without a gap
/// oracle are unsupported — use [`restricted_gap`].
pub fn duality_gap(problem: &SaddleProblem, z_hat: &Point, seed: u64) -> Result<GapReport> {
    check_point(problem, z_hat)?;
    if let Some(oracle) = problem.gap_oracle() {
        let gap = oracle(z_hat.x(), z_hat.y());
        return Ok(GapReport {
            gap,
            comparator_radius: f64::INFINITY,
            method: GapMethod::ExactSupport,
        });
    }
    if let Some(gap) = bilinear_support_gap(problem, z_hat)? {
        return Ok(GapReport {
            gap,
            comparator_radius: f64::INFINITY,
            method: GapMethod::ExactSupport,
        });
    }
    if problem.set().is_bounded() && problem.has_value_oracle() {
        return sampled_gap(problem, z_hat, None, seed);
    }
    Err(Error::Unsupported(format!(
        "no duality gap available for {} (unbounded set without gap oracle)",
        problem.name()
    )))
}

/// Duality gap with comparators restricted to the ball of `radius` around
/// the problem's start point; the meaningful gap notion on unbounded sets.
pub fn restricted_gap(
    problem: &SaddleProblem,
    z_hat: &Point,
    radius: f64,
    seed: u64,
) -> Result<GapReport> {
    check_point(problem, z_hat)?;
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "comparator radius must be positive and finite, got {radius}"
        )));
    }
    // For bilinear families on unconstrained sets the comparator objective
    // g(z) = f(x̂, y) − f(x, ŷ) is affine in z with gradient −F(ẑ) and
    // g(ẑ) = 0, so the exact maximum over the ball B(z₀, ρ) is
    // ⟨F(ẑ), ẑ − z₀⟩ + ρ‖F(ẑ)‖.
    let bilinear_base = matches!(
        problem.family().map(Family::base),
        Some(Family::Bilinear { .. })
    );
    if bilinear_base && matches!(problem.set(), FeasibleSet::Unconstrained { .. }) {
        let mut scratch = 0u64;
        let f_hat = problem.eval_operator(z_hat.coords(), &mut scratch)?;
        let centered = sub(z_hat.coords(), problem.start().coords());
        let gap = dot(&f_hat, &centered) + radius * norm(&f_hat);
        return Ok(GapReport {
            gap,
            comparator_radius: radius,
            method: GapMethod::ExactSupport,
        });
    }
    if problem.has_value_oracle() {
        return sampled_gap(problem, z_hat, Some(radius), seed);
    }
    Err(Error::Unsupported(format!(
        "no restricted gap available for {} (no value oracle)",
        problem.name()
    )))
}

/// Exact support-function gap for bilinear problems on bounded sets that
/// factor at the x/y boundary.
fn bilinear_support_gap(problem: &SaddleProblem, z_hat: &Point) -> Result<Option<f64>> {
    let Some(Family::Bilinear { a }) = problem.family() else {
        return Ok(None);
    };
    if !problem.set().is_bounded() {
        return Ok(None);
    }
    let (n, _) = problem.split();
    let Some((sx, sy)) = problem.set().split_at(n) else {
        return Ok(None);
    };
    let best_response_y = sy.linear_max(&a.t_matvec(z_hat.x()))?;
    let worst_response_x = sx.linear_min(&a.matvec(z_hat.y()))?;
    Ok(Some(best_response_y - worst_response_x))
}

/// The comparator attaining the support-function gap, when computable.
pub fn gap_achieving_comparator(problem: &SaddleProblem, z_hat: &Point) -> Result<Point> {
    let Some(Family::Bilinear { a }) = problem.family() else {
        return Err(Error::Unsupported(
            "gap-achieving comparator needs a bilinear family".into(),
        ));
    };
    let (n, m) = problem.split();
    let (sx, sy) = problem
        .set()
        .split_at(n)
        .ok_or_else(|| Error::Unsupported("set does not factor at the x/y boundary".into()))?;
    let y_best = sy.linear_argmax(&a.t_matvec(z_hat.x()))?;
    let neg_ay: Vec<f64> = a.matvec(z_hat.y()).iter().map(|v| -v).collect();
    let x_worst = sx.linear_argmax(&neg_ay)?;
    let mut coords = x_worst;
    coords.extend(y_best);
    Point::new(coords, n, m)
}

fn sampled_gap(
    problem: &SaddleProblem,
    z_hat: &Point,
    radius: Option<f64>,
    seed: u64,
) -> Result<GapReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z0 = problem.start().coords();
    let (n, _) = problem.split();
    let mut best_y = f64::NEG_INFINITY;
    let mut best_x = f64::INFINITY;
    let mut max_radius = 0.0f64;
    let ball = radius.map(|r| FeasibleSet::Ball {
        center: z0.to_vec(),
        radius: r,
    });
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    while accepted < GRID_SAMPLES && attempts < GRID_SAMPLES * 20 {
        attempts += 1;
        let z = match &ball {
            Some(b) if !problem.set().is_bounded() => b.sample(&mut rng),
            _ => problem.set().sample(&mut rng),
        };
        if let Some(r) = radius {
            if dist(&z, z0) > r {
                continue;
            }
        }
        accepted += 1;
        max_radius = max_radius.max(dist(&z, z0));
        let mut trial = z_hat.coords().to_vec();
        trial[n..].copy_from_slice(&z[n..]);
        best_y = best_y.max(problem.value(&trial)?);
        trial.copy_from_slice(&z);
        trial[n..].copy_from_slice(z_hat.y());
        best_x = best_x.min(problem.value(&trial)?);
    }
    if accepted == 0 {
        return Err(Error::Unsupported(
            "no feasible comparators found within the requested radius".into(),
        ));
    }
    Ok(GapReport {
        gap: best_y - best_x,
        comparator_radius: radius.unwrap_or(max_radius),
        method: GapMethod::GridRestricted,
    })
}

/// `‖F(z)‖`; evaluated with a throwaway counter so run accounting stays
/// untouched.
pub fn operator_residual(problem: &SaddleProblem, z: &Point) -> Result<f64> {
    check_point(problem, z)?;
    let mut scratch = 0u64;
    Ok(norm(&problem.eval_operator(z.coords(), &mut scratch)?))
}

/// `Σ_{t<T} ⟨F̃(z_{t+1}), z_{t+1} − comparator⟩` from the trace's online
/// accumulators; the operator values are the ones each step already
/// evaluated, so the sum costs no extra gradient calls.
pub fn regret_sum(trace: &RunTrace, problem: &SaddleProblem, comparator: &Point) -> Result<f64> {
    check_comparator(problem, comparator)?;
    Ok(trace.regret_dot - dot(&trace.regret_f_sum, comparator.coords()))
}

/// Recompute mode for testing: evaluates `F(z_{t+1})` fresh at every recorded
/// iterate. Needs a complete trace (`record_every == 1`).
pub fn regret_sum_recomputed(
    trace: &RunTrace,
    problem: &SaddleProblem,
    comparator: &Point,
) -> Result<f64> {
    check_comparator(problem, comparator)?;
    if !trace.is_complete() {
        return Err(Error::Unsupported(
            "recomputed regret needs a complete trace (record_every = 1)".into(),
        ));
    }
    let mut scratch = 0u64;
    let mut total = 0.0;
    for (t, z) in &trace.iterates {
        if *t == 0 {
            continue;
        }
        let f = problem.eval_operator(z.coords(), &mut scratch)?;
        total += dot(&f, &sub(z.coords(), comparator.coords()));
    }
    Ok(total)
}

fn check_comparator(problem: &SaddleProblem, comparator: &Point) -> Result<()> {
    check_point(problem, comparator)?;
    let r = problem.set().residual(comparator.coords())?;
    if r > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "comparator is infeasible (set residual {r:.3e})"
        )));
    }
    Ok(())
}

fn check_point(problem: &SaddleProblem, z: &Point) -> Result<()> {
    if z.split() != problem.split() {
        return Err(Error::DimensionMismatch {
            context: "metric input point",
            expected: problem.dim(),
            got: z.dim(),
        });
    }
    Ok(())
}

/// Least-squares slope of `log(value)` against `log(t)` over the points with
/// `t ≥ t_min`, plus the fit's `r²`. Needs at least 10 positive points.
pub fn rate_fit(series: &MetricSeries, t_min: usize) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = series
        .points()
        .iter()
        .filter(|(t, _)| *t >= t_min.max(1))
        .map(|(t, v)| (*t as f64, *v))
        .collect();
    if pts.len() < 10 {
        return Err(Error::Unsupported(format!(
            "rate fit needs at least 10 points past t_min, got {}",
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| *v <= 0.0) {
        return Err(Error::Unsupported(format!(
            "rate fit needs positive values, got {v} at t={t}"
        )));
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|(t, v)| (t.ln(), v.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in &logs {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok((slope, r2))
}
