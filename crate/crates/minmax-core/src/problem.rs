//! The saddle-problem abstraction: first-order oracles for
//! `min_x max_y f(x, y)` plus the joint operator `F(z) = (∇ₓf, −∇ᵧf)`.

use crate::point::Point;
use crate::sets::FeasibleSet;
use crate::vecmath::{self, dot, norm, sub};
use crate::zoo::Family;
use crate::{Error, Result};
use std::sync::Arc;

/// Gradient oracle: `(x, y) → ∇f` with respect to one block.
pub type GradOracle = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
/// Function-value oracle, used only for finite-difference validation.
pub type ValueOracle = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
/// Exact duality-gap oracle `(x, y) → gap`, available for some problems.
pub type GapOracle = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// A smooth convex-concave min-max problem with black-box gradient access.
///
/// Everything is immutable after construction; gradient-call accounting is
/// kept in a per-run counter owned by the caller, so one problem can back
/// several concurrent runs.
#[derive(Clone)]
pub struct SaddleProblem {
    name: String,
    n: usize,
    m: usize,
    grad_x: GradOracle,
    grad_y: GradOracle,
    value: Option<ValueOracle>,
    lipschitz: f64,
    set: FeasibleSet,
    saddle: Option<Point>,
    gap_oracle: Option<GapOracle>,
    start: Point,
    family: Option<Family>,
}

pub struct SaddleProblemBuilder {
    name: String,
    n: usize,
    m: usize,
    grad_x: GradOracle,
    grad_y: GradOracle,
    value: Option<ValueOracle>,
    lipschitz: f64,
    set: FeasibleSet,
    saddle: Option<Point>,
    gap_oracle: Option<GapOracle>,
    start: Option<Point>,
    family: Option<Family>,
}

impl SaddleProblemBuilder {
    pub fn value(mut self, oracle: ValueOracle) -> Self {
        self.value = Some(oracle);
        self
    }

    pub fn saddle(mut self, z_star: Point) -> Self {
        self.saddle = Some(z_star);
        self
    }

    pub fn gap_oracle(mut self, oracle: GapOracle) -> Self {
        self.gap_oracle = Some(oracle);
        self
    }

    pub fn start(mut self, z0: Point) -> Self {
        self.start = Some(z0);
        self
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn family(mut self, family: Family) -> Self {
        self.family = Some(family);
        self
    }

    pub fn build(self) -> Result<SaddleProblem> {
        if !self.lipschitz.is_finite() || self.lipschitz < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "smoothness constant must be finite and nonnegative, got {}",
                self.lipschitz
            )));
        }
        if self.set.dim() != self.n + self.m {
            return Err(Error::DimensionMismatch {
                context: "feasible set",
                expected: self.n + self.m,
                got: self.set.dim(),
            });
        }
        // default start: projection of the origin
        let start = match self.start {
            Some(p) => {
                check_split(&p, self.n, self.m, "start point")?;
                let projected = self.set.project(p.coords())?;
                Point::new(projected, self.n, self.m)?
            }
            None => Point::new(
                self.set.project(&vec![0.0; self.n + self.m])?,
                self.n,
                self.m,
            )?,
        };
        let problem = SaddleProblem {
            name: self.name,
            n: self.n,
            m: self.m,
            grad_x: self.grad_x,
            grad_y: self.grad_y,
            value: self.value,
            lipschitz: self.lipschitz,
            set: self.set,
            saddle: None,
            gap_oracle: self.gap_oracle,
            start,
            family: self.family,
        };
        let problem = match self.saddle {
            None => problem,
            Some(z_star) => {
                check_split(&z_star, problem.n, problem.m, "saddle point")?;
                if matches!(problem.set, FeasibleSet::Unconstrained { .. }) {
                    let mut scratch = 0u64;
                    let f_star = problem.eval_operator(z_star.coords(), &mut scratch)?;
                    let f_start = problem.eval_operator(problem.start.coords(), &mut scratch)?;
                    let tol = 1e-9 * norm(&f_start).max(1.0);
                    let res = norm(&f_star);
                    if res > tol {
                        return Err(Error::InvalidConfig(format!(
                            "claimed saddle has operator norm {res:.3e} > {tol:.3e}"
                        )));
                    }
                } else if problem.set.residual(z_star.coords())? > 1e-12 {
                    return Err(Error::InvalidConfig(
                        "claimed saddle is not feasible".into(),
                    ));
                }
                SaddleProblem {
                    saddle: Some(z_star),
                    ..problem
                }
            }
        };
        Ok(problem)
    }
}

impl std::fmt::Debug for SaddleProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleProblem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("lipschitz", &self.lipschitz)
            .field("set", &self.set)
            .field("saddle", &self.saddle)
            .field("start", &self.start)
            .finish_non_exhaustive()
    }
}

impl SaddleProblem {
    pub fn builder(
        n: usize,
        m: usize,
        grad_x: GradOracle,
        grad_y: GradOracle,
        lipschitz: f64,
        set: FeasibleSet,
    ) -> SaddleProblemBuilder {
        SaddleProblemBuilder {
            name: "anonymous".into(),
            n,
            m,
            grad_x,
            grad_y,
            value: None,
            lipschitz,
            set,
            saddle: None,
            gap_oracle: None,
            start: None,
            family: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn split(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn saddle(&self) -> Option<&Point> {
        self.saddle.as_ref()
    }

    pub fn start(&self) -> &Point {
        &self.start
    }

    pub fn family(&self) -> Option<&Family> {
        self.family.as_ref()
    }

    pub fn has_value_oracle(&self) -> bool {
        self.value.is_some()
    }

    pub fn gap_oracle(&self) -> Option<&GapOracle> {
        self.gap_oracle.as_ref()
    }

    /// `f(x, y)` when the problem carries a value oracle. Solvers never use
    /// this; it exists for finite-difference validation and gap sampling.
    pub fn value(&self, z: &[f64]) -> Result<f64> {
        let oracle = self
            .value
            .as_ref()
            .ok_or_else(|| Error::Unsupported("problem has no value oracle".into()))?;
        self.check_dim(z)?;
        Ok(oracle(&z[..self.n], &z[self.n..]))
    }

    fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "operator input",
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    /// Evaluates the joint operator `F(z) = (∇ₓf(x,y), −∇ᵧf(x,y))` and
    /// increments `calls` by exactly one.
    pub fn eval_operator(&self, z: &[f64], calls: &mut u64) -> Result<Vec<f64>> {
        self.check_dim(z)?;
        let (x, y) = z.split_at(self.n);
        let gx = (self.grad_x)(x, y);
        let gy = (self.grad_y)(x, y);
        if gx.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "grad_x output",
                expected: self.n,
                got: gx.len(),
            });
        }
        if gy.len() != self.m {
            return Err(Error::DimensionMismatch {
                context: "grad_y output",
                expected: self.m,
                got: gy.len(),
            });
        }
        *calls += 1;
        let mut out = gx;
        out.extend(gy.iter().map(|v| -v));
        if let Some(i) = vecmath::first_non_finite(&out) {
            return Err(Error::NonFinite {
                context: format!("operator value at {}", self.name),
                index: Some(i),
            });
        }
        Ok(out)
    }
}

/// The joint operator at a typed point; one gradient call per evaluation.
pub fn operator_eval(problem: &SaddleProblem, z: &Point, calls: &mut u64) -> Result<Vec<f64>> {
    check_split(z, problem.n, problem.m, "operator input")?;
    problem.eval_operator(z.coords(), calls)
}

/// `⟨F(z) − F(z2), z − z2⟩`; nonnegative (up to rounding) for convex-concave
/// problems since the operator is monotone.
pub fn monotonicity_gap(problem: &SaddleProblem, z: &Point, z2: &Point) -> Result<f64> {
    check_split(z, problem.n, problem.m, "monotonicity input")?;
    check_split(z2, problem.n, problem.m, "monotonicity input")?;
    let mut scratch = 0u64;
    let fz = problem.eval_operator(z.coords(), &mut scratch)?;
    let fz2 = problem.eval_operator(z2.coords(), &mut scratch)?;
    Ok(dot(&sub(&fz, &fz2), &sub(z.coords(), z2.coords())))
}

/// Max relative error between central finite differences of `f` and the
/// gradient oracles at `z`. Requires a value oracle and `h > 0`.
pub fn gradient_check(problem: &SaddleProblem, z: &Point, h: f64) -> Result<f64> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    if problem.value.is_none() {
        return Err(Error::Unsupported(
            "gradient check needs a value oracle".into(),
        ));
    }
    check_split(z, problem.n, problem.m, "gradient check input")?;
    let coords = z.coords();
    let (x, y) = coords.split_at(problem.n);
    let gx = (problem.grad_x)(x, y);
    let gy = (problem.grad_y)(x, y);
    let grad: Vec<f64> = gx.into_iter().chain(gy).collect();

    let mut worst = 0.0f64;
    let mut probe = coords.to_vec();
    for i in 0..problem.dim() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = problem.value(&probe)?;
        probe[i] = orig - h;
        let minus = problem.value(&probe)?;
        probe[i] = orig;
        let fd = (plus - minus) / (2.0 * h);
        let rel = (fd - grad[i]).abs() / grad[i].abs().max(1.0);
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn check_split(p: &Point, n: usize, m: usize, context: &'static str) -> Result<()> {
    if p.split() != (n, m) {
        return Err(Error::DimensionMismatch {
            context,
            expected: n + m,
            got: p.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f(x, y) = x·y on scalar blocks.
    fn scalar_bilinear(set: FeasibleSet) -> SaddleProblem {
        SaddleProblem::builder(
            1,
            1,
            Arc::new(|_x: &[f64], y: &[f64]| vec![y[0]]),
            Arc::new(|x: &[f64], _y: &[f64]| vec![x[0]]),
            1.0,
            set,
        )
        .value(Arc::new(|x: &[f64], y: &[f64]| x[0] * y[0]))
        .saddle(Point::new(vec![0.0, 0.0], 1, 1).unwrap())
        .start(Point::new(vec![1.0, 0.0], 1, 1).unwrap())
        .build()
        .unwrap()
    }

    #[test]
    fn operator_on_scalar_bilinear() {
        let p = scalar_bilinear(FeasibleSet::unconstrained(2));
        let mut calls = 0u64;
        let z = Point::new(vec![1.0, 2.0], 1, 1).unwrap();
        let f = operator_eval(&p, &z, &mut calls).unwrap();
        assert_eq!(f, vec![2.0, -1.0]);
        let origin = Point::new(vec![0.0, 0.0], 1, 1).unwrap();
        let f0 = operator_eval(&p, &origin, &mut calls).unwrap();
        assert_eq!(f0, vec![0.0, 0.0]);
        assert_eq!(calls, 2, "exactly one call per evaluation");
    }

    #[test]
    fn operator_matrix_case_matches_finite_differences() {
        // f(x, y) = xᵀAy with A = [[1,-1],[-1,1]], z = ((1,0),(0,1))
        let a = crate::Mat::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let a1 = a.clone();
        let a2 = a.clone();
        let a3 = a.clone();
        let p = SaddleProblem::builder(
            2,
            2,
            Arc::new(move |_x: &[f64], y: &[f64]| a1.matvec(y)),
            Arc::new(move |x: &[f64], _y: &[f64]| a2.t_matvec(x)),
            2.0,
            FeasibleSet::unconstrained(4),
        )
        .value(Arc::new(move |x: &[f64], y: &[f64]| dot(x, &a3.matvec(y))))
        .build()
        .unwrap();

        let z = Point::new(vec![1.0, 0.0, 0.0, 1.0], 2, 2).unwrap();
        let mut calls = 0u64;
        let f = operator_eval(&p, &z, &mut calls).unwrap();
        assert_eq!(f, vec![-1.0, 1.0, -1.0, 1.0]);

        // independent finite-difference oracle on f
        let h = 1e-6;
        let coords = z.coords();
        for i in 0..4 {
            let mut zp = coords.to_vec();
            let mut zm = coords.to_vec();
            zp[i] += h;
            zm[i] -= h;
            let fd = (p.value(&zp).unwrap() - p.value(&zm).unwrap()) / (2.0 * h);
            let expected = if i < 2 { f[i] } else { -f[i] };
            assert!((fd - expected).abs() < 1e-8, "coordinate {i}");
        }
    }

    #[test]
    fn operator_rejects_dimension_mismatch() {
        let p = scalar_bilinear(FeasibleSet::unconstrained(2));
        let z = Point::new(vec![1.0, 2.0, 3.0], 2, 1).unwrap();
        let mut calls = 0u64;
        assert!(matches!(
            operator_eval(&p, &z, &mut calls),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(calls, 0);
    }

    #[test]
    fn operator_names_non_finite_coordinate() {
        let p = SaddleProblem::builder(
            1,
            1,
            Arc::new(|_x: &[f64], _y: &[f64]| vec![f64::NAN]),
            Arc::new(|_x: &[f64], _y: &[f64]| vec![0.0]),
            1.0,
            FeasibleSet::unconstrained(2),
        )
        .build()
        .unwrap();
        let z = Point::new(vec![0.0, 0.0], 1, 1).unwrap();
        let mut calls = 0u64;
        match p.eval_operator(z.coords(), &mut calls) {
            Err(Error::NonFinite { index: Some(0), .. }) => {}
            other => panic!("expected NonFinite at coordinate 0, got {other:?}"),
        }
    }

    #[test]
    fn monotonicity_gap_examples() {
        let p = scalar_bilinear(FeasibleSet::unconstrained(2));
        // skew-symmetric operator: exactly zero for any pair
        let z = Point::new(vec![0.7, -1.3], 1, 1).unwrap();
        let z2 = Point::new(vec![-2.0, 0.4], 1, 1).unwrap();
        assert_eq!(monotonicity_gap(&p, &z, &z2).unwrap(), 0.0);
        assert_eq!(monotonicity_gap(&p, &z, &z).unwrap(), 0.0);

        // f = x²/2 − y²/2 has F(z) = (x, y)
        let q = SaddleProblem::builder(
            1,
            1,
            Arc::new(|x: &[f64], _y: &[f64]| vec![x[0]]),
            Arc::new(|_x: &[f64], y: &[f64]| vec![-y[0]]),
            1.0,
            FeasibleSet::unconstrained(2),
        )
        .build()
        .unwrap();
        let a = Point::new(vec![1.0, 1.0], 1, 1).unwrap();
        let b = Point::new(vec![0.0, 0.0], 1, 1).unwrap();
        assert_eq!(monotonicity_gap(&q, &a, &b).unwrap(), 2.0);
    }

    #[test]
    fn gradient_check_bilinear_is_exact() {
        let p = scalar_bilinear(FeasibleSet::unconstrained(2));
        let z = Point::new(vec![1.0, 2.0], 1, 1).unwrap();
        let h = 1e-6 * (1.0 + norm(z.coords()));
        let err = gradient_check(&p, &z, h).unwrap();
        assert!(
            err <= 1e-10,
            "central difference of a bilinear is exact, got {err:.3e}"
        );
    }

    #[test]
    fn gradient_check_requires_value_oracle() {
        let p = SaddleProblem::builder(
            1,
            1,
            Arc::new(|_x: &[f64], y: &[f64]| vec![y[0]]),
            Arc::new(|x: &[f64], _y: &[f64]| vec![x[0]]),
            1.0,
            FeasibleSet::unconstrained(2),
        )
        .build()
        .unwrap();
        let z = Point::new(vec![0.0, 0.0], 1, 1).unwrap();
        assert!(matches!(
            gradient_check(&p, &z, 1e-6),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn builder_rejects_fake_saddle() {
        let bad = SaddleProblem::builder(
            1,
            1,
            Arc::new(|_x: &[f64], y: &[f64]| vec![y[0]]),
            Arc::new(|x: &[f64], _y: &[f64]| vec![x[0]]),
            1.0,
            FeasibleSet::unconstrained(2),
        )
        .saddle(Point::new(vec![1.0, 1.0], 1, 1).unwrap())
        .start(Point::new(vec![1.0, 0.0], 1, 1).unwrap())
        .build();
        assert!(bad.is_err());
    }
}
