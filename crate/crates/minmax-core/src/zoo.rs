//! Test-problem zoo: bilinear and quadratic saddle families with exact
//! gradients, spectral smoothness constants and known saddle points.

use crate::matrix::{spectral_norm, Mat};
use crate::point::Point;
use crate::problem::SaddleProblem;
use crate::sets::FeasibleSet;
use crate::vecmath::dot;
use crate::{Error, Result};
use std::sync::Arc;

/// Fixed start vector seed for the power iteration; problem constants must
/// not drift across experiment seeds.
pub const POWER_SEED: u64 = 7;
const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITER: usize = 10_000;

/// The analytic form of a zoo problem.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `f(x, y) = xᵀAy`
    Bilinear { a: Mat },
    /// `f(x, y) = ½xᵀPx + xᵀAy − ½yᵀQy` with `P, Q` symmetric PSD
    Quadratic { p: Mat, a: Mat, q: Mat },
    /// `f̃(z) = f(z − shift)`
    Translated { base: Box<Family>, shift: Vec<f64> },
}

impl Family {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Family::Bilinear { a } => (a.rows(), a.cols()),
            Family::Quadratic { a, .. } => (a.rows(), a.cols()),
            Family::Translated { base, .. } => base.dims(),
        }
    }

    /// Total shift relative to the innermost base family.
    pub fn total_shift(&self) -> Vec<f64> {
        match self {
            Family::Translated { base, shift } => {
                let mut inner = base.total_shift();
                for (a, b) in inner.iter_mut().zip(shift) {
                    *a += b;
                }
                inner
            }
            _ => {
                let (n, m) = self.dims();
                vec![0.0; n + m]
            }
        }
    }

    pub fn base(&self) -> &Family {
        match self {
            Family::Translated { base, .. } => base.base(),
            other => other,
        }
    }

    /// The (constant) Jacobian of the joint operator `F`.
    pub fn operator_jacobian(&self) -> Mat {
        let (n, m) = self.dims();
        let d = n + m;
        let mut j = Mat::zeros(d, d);
        match self.base() {
            Family::Bilinear { a } => {
                for i in 0..n {
                    for k in 0..m {
                        j.set(i, n + k, a.get(i, k));
                        j.set(n + k, i, -a.get(i, k));
                    }
                }
            }
            Family::Quadratic { p, a, q } => {
                for i in 0..n {
                    for k in 0..n {
                        j.set(i, k, p.get(i, k));
                    }
                    for k in 0..m {
                        j.set(i, n + k, a.get(i, k));
                        j.set(n + k, i, -a.get(i, k));
                    }
                }
                for i in 0..m {
                    for k in 0..m {
                        j.set(n + i, n + k, q.get(i, k));
                    }
                }
            }
            Family::Translated { .. } => unreachable!("base() peels translations"),
        }
        j
    }
}

/// A named, buildable problem description.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub family: Family,
    pub set: FeasibleSet,
    /// Initial iterate; defaults to the projection of the origin.
    pub start: Option<Vec<f64>>,
}

impl ProblemSpec {
    pub fn new(name: impl Into<String>, family: Family, set: FeasibleSet) -> Self {
        ProblemSpec {
            name: name.into(),
            family,
            set,
            start: None,
        }
    }

    pub fn with_start(mut self, start: Vec<f64>) -> Self {
        self.start = Some(start);
        self
    }

    pub fn build(&self) -> Result<SaddleProblem> {
        self.build_seeded(POWER_SEED)
    }

    pub fn build_seeded(&self, seed: u64) -> Result<SaddleProblem> {
        let (n, m) = self.family.dims();
        if self.set.dim() != n + m {
            return Err(Error::DimensionMismatch {
                context: "problem feasible set",
                expected: n + m,
                got: self.set.dim(),
            });
        }
        validate_family(&self.family)?;
        let lipschitz = smoothness_constant(&self.family, seed)?;
        let (grad_x, grad_y, value) = oracles(&self.family);
        let mut builder = SaddleProblem::builder(n, m, grad_x, grad_y, lipschitz, self.set.clone())
            .name(self.name.clone())
            .family(self.family.clone())
            .value(value);
        if let Some(start) = &self.start {
            builder = builder.start(Point::new(start.clone(), n, m)?);
        }
        if let Some(z_star) = known_saddle(&self.family, &self.set) {
            builder = builder.saddle(Point::new(z_star, n, m)?);
        }
        // the closed-form best responses behind the gap oracle assume an
        // unconstrained domain
        if matches!(self.set, FeasibleSet::Unconstrained { .. }) {
            if let Some(gap) = quadratic_gap_oracle(&self.family) {
                builder = builder.gap_oracle(gap);
            }
        }
        builder.build()
    }
}

/// `f(x, y) = xᵀAy` on the given set.
pub fn make_bilinear(a: Mat, set: FeasibleSet) -> Result<SaddleProblem> {
    ProblemSpec::new("bilinear", Family::Bilinear { a }, set).build()
}

/// `f = ½xᵀPx + xᵀAy − ½yᵀQy`; `P` and `Q` must be symmetric PSD.
pub fn make_quadratic_saddle(p: Mat, a: Mat, q: Mat, set: FeasibleSet) -> Result<SaddleProblem> {
    ProblemSpec::new("quadratic", Family::Quadratic { p, a, q }, set).build()
}

/// Shifts an unconstrained problem so its saddle moves by `shift`.
pub fn translate(spec: &ProblemSpec, shift: &[f64]) -> Result<SaddleProblem> {
    translate_spec(spec, shift)?.build()
}

pub fn translate_spec(spec: &ProblemSpec, shift: &[f64]) -> Result<ProblemSpec> {
    if !matches!(spec.set, FeasibleSet::Unconstrained { .. }) {
        return Err(Error::Unsupported(
            "translation is only defined for unconstrained problems".into(),
        ));
    }
    let (n, m) = spec.family.dims();
    if shift.len() != n + m {
        return Err(Error::DimensionMismatch {
            context: "translation shift",
            expected: n + m,
            got: shift.len(),
        });
    }
    Ok(ProblemSpec {
        name: format!("{}-shifted", spec.name),
        family: Family::Translated {
            base: Box::new(spec.family.clone()),
            shift: shift.to_vec(),
        },
        set: spec.set.clone(),
        start: spec.start.clone(),
    })
}

/// Spectral norm of the Jacobian of `F` by seeded power iteration
/// (relative tolerance 1e-8, at most 10⁴ iterations).
pub fn smoothness_constant(family: &Family, seed: u64) -> Result<f64> {
    spectral_norm(&family.operator_jacobian(), seed, POWER_TOL, POWER_MAX_ITER)
}

fn validate_family(family: &Family) -> Result<()> {
    match family {
        Family::Bilinear { .. } => Ok(()),
        Family::Quadratic { p, a, q } => {
            let (n, m) = (a.rows(), a.cols());
            if p.rows() != n || p.cols() != n {
                return Err(Error::DimensionMismatch {
                    context: "quadratic block P",
                    expected: n,
                    got: p.rows(),
                });
            }
            if q.rows() != m || q.cols() != m {
                return Err(Error::DimensionMismatch {
                    context: "quadratic block Q",
                    expected: m,
                    got: q.rows(),
                });
            }
            for (label, block) in [("P", p), ("Q", q)] {
                if !block.is_symmetric(1e-12) {
                    return Err(Error::InvalidConfig(format!(
                        "quadratic block {label} is not symmetric"
                    )));
                }
                let min_eig = block.symmetric_min_eigenvalue()?;
                if min_eig < -1e-10 {
                    return Err(Error::InvalidConfig(format!(
                        "quadratic block {label} has negative eigenvalue {min_eig:.3e}"
                    )));
                }
            }
            Ok(())
        }
        Family::Translated { base, .. } => validate_family(base),
    }
}

type Oracles = (
    crate::problem::GradOracle,
    crate::problem::GradOracle,
    crate::problem::ValueOracle,
);

fn oracles(family: &Family) -> Oracles {
    match family {
        Family::Bilinear { a } => {
            let (a1, a2, a3) = (a.clone(), a.clone(), a.clone());
            (
                Arc::new(move |_x: &[f64], y: &[f64]| a1.matvec(y)),
                Arc::new(move |x: &[f64], _y: &[f64]| a2.t_matvec(x)),
                Arc::new(move |x: &[f64], y: &[f64]| dot(x, &a3.matvec(y))),
            )
        }
        Family::Quadratic { p, a, q } => {
            let (p1, a1) = (p.clone(), a.clone());
            let (a2, q1) = (a.clone(), q.clone());
            let (p2, a3, q2) = (p.clone(), a.clone(), q.clone());
            (
                Arc::new(move |x: &[f64], y: &[f64]| {
                    let mut g = p1.matvec(x);
                    for (gi, v) in g.iter_mut().zip(a1.matvec(y)) {
                        *gi += v;
                    }
                    g
                }),
                Arc::new(move |x: &[f64], y: &[f64]| {
                    let mut g = a2.t_matvec(x);
                    for (gi, v) in g.iter_mut().zip(q1.matvec(y)) {
                        *gi -= v;
                    }
                    g
                }),
                Arc::new(move |x: &[f64], y: &[f64]| {
                    0.5 * dot(x, &p2.matvec(x)) + dot(x, &a3.matvec(y))
                        - 0.5 * dot(y, &q2.matvec(y))
                }),
            )
        }
        Family::Translated { base, shift } => {
            let (n, _) = base.dims();
            let (bgx, bgy, bval) = oracles(base);
            let (s1, s2, s3) = (shift.clone(), shift.clone(), shift.clone());
            (
                Arc::new(move |x: &[f64], y: &[f64]| {
                    let xs: Vec<f64> = x.iter().zip(&s1[..n]).map(|(v, s)| v - s).collect();
                    let ys: Vec<f64> = y.iter().zip(&s1[n..]).map(|(v, s)| v - s).collect();
                    bgx(&xs, &ys)
                }),
                Arc::new(move |x: &[f64], y: &[f64]| {
                    let xs: Vec<f64> = x.iter().zip(&s2[..n]).map(|(v, s)| v - s).collect();
                    let ys: Vec<f64> = y.iter().zip(&s2[n..]).map(|(v, s)| v - s).collect();
                    bgy(&xs, &ys)
                }),
                Arc::new(move |x: &[f64], y: &[f64]| {
                    let xs: Vec<f64> = x.iter().zip(&s3[..n]).map(|(v, s)| v - s).collect();
                    let ys: Vec<f64> = y.iter().zip(&s3[n..]).map(|(v, s)| v - s).collect();
                    bval(&xs, &ys)
                }),
            )
        }
    }
}

/// Saddle points are recorded only when analytically certain: the origin for
/// the homogeneous unconstrained families (where `F(0) = 0` exactly, shifted
/// along with translations) and the uniform point for simplex games whose
/// uniform strategies have constant payoffs.
fn known_saddle(family: &Family, set: &FeasibleSet) -> Option<Vec<f64>> {
    let (n, m) = family.dims();
    if matches!(set, FeasibleSet::Unconstrained { .. }) {
        return Some(family.total_shift());
    }
    if let Family::Bilinear { a } = family {
        if let FeasibleSet::Product(parts) = set {
            if parts.len() == 2
                && parts[0] == (FeasibleSet::Simplex { dim: n })
                && parts[1] == (FeasibleSet::Simplex { dim: m })
            {
                let ux = vec![1.0 / n as f64; n];
                let uy = vec![1.0 / m as f64; m];
                let col = a.matvec(&uy);
                let row = a.t_matvec(&ux);
                if constant_vector(&col) && constant_vector(&row) {
                    let mut z = ux;
                    z.extend(uy);
                    return Some(z);
                }
            }
        }
    }
    // the origin is also a saddle for interior-feasible homogeneous problems
    // on balls/boxes centered so that 0 is strictly inside
    if set.residual(&vec![0.0; n + m]).ok()? <= 0.0 {
        match family {
            Family::Bilinear { .. } | Family::Quadratic { .. } => Some(vec![0.0; n + m]),
            Family::Translated { .. } => None,
        }
    } else {
        None
    }
}

fn constant_vector(v: &[f64]) -> bool {
    let scale = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    v.iter().all(|x| (x - v[0]).abs() <= 1e-12 * (1.0 + scale))
}

/// Closed-form best-response gap for quadratic saddles with positive
/// definite blocks: `½x̂ᵀPx̂ + ½ŷᵀQŷ + ½(Aᵀx̂)ᵀQ⁻¹(Aᵀx̂) + ½(Aŷ)ᵀP⁻¹(Aŷ)`.
fn quadratic_gap_oracle(family: &Family) -> Option<crate::problem::GapOracle> {
    if let Family::Quadratic { p, a, q } = family {
        let lp = p.cholesky().ok()?;
        let lq = q.cholesky().ok()?;
        let (p1, a1, q1) = (p.clone(), a.clone(), q.clone());
        Some(Arc::new(move |x: &[f64], y: &[f64]| {
            let atx = a1.t_matvec(x);
            let ay = a1.matvec(y);
            let qi_atx = Mat::cholesky_solve(&lq, &atx);
            let pi_ay = Mat::cholesky_solve(&lp, &ay);
            0.5 * dot(x, &p1.matvec(x))
                + 0.5 * dot(y, &q1.matvec(y))
                + 0.5 * dot(&atx, &qi_atx)
                + 0.5 * dot(&ay, &pi_ay)
        }))
    } else {
        None
    }
}

/// Names of the built-in instances used throughout the test suites.
pub const ZOO_NAMES: [&str; 5] = ["BILIN1", "BILIN-BALL", "MP", "QUAD1", "BILIN-SHIFT"];

/// Specs for the built-in instances.
pub fn builtin_spec(name: &str) -> Result<ProblemSpec> {
    let scalar = || Mat::from_rows(&[vec![1.0]]).unwrap();
    match name {
        // f = xy, unconstrained, z* = (0,0), z0 = (1,0)
        "BILIN1" => Ok(ProblemSpec::new(
            "BILIN1",
            Family::Bilinear { a: scalar() },
            FeasibleSet::unconstrained(2),
        )
        .with_start(vec![1.0, 0.0])),
        // f = xy on the product of unit balls
        "BILIN-BALL" => Ok(ProblemSpec::new(
            "BILIN-BALL",
            Family::Bilinear { a: scalar() },
            FeasibleSet::product(vec![
                FeasibleSet::ball(vec![0.0], 1.0)?,
                FeasibleSet::ball(vec![0.0], 1.0)?,
            ])?,
        )
        .with_start(vec![1.0, 0.0])),
        // matching-pennies-style game on simplices, z* uniform
        "MP" => Ok(ProblemSpec::new(
            "MP",
            Family::Bilinear {
                a: Mat::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap(),
            },
            FeasibleSet::product(vec![FeasibleSet::simplex(2)?, FeasibleSet::simplex(2)?])?,
        )
        .with_start(vec![1.0, 0.0, 1.0, 0.0])),
        // f = ½x² + xy − ½y², strongly convex-concave
        "QUAD1" => Ok(ProblemSpec::new(
            "QUAD1",
            Family::Quadratic {
                p: Mat::identity(1),
                a: scalar(),
                q: Mat::identity(1),
            },
            FeasibleSet::unconstrained(2),
        )
        .with_start(vec![1.0, 1.0])),
        // BILIN1 translated by (10, 10); start at the origin so that
        // ‖z0 − z*‖ = √200
        "BILIN-SHIFT" => {
            let base = builtin_spec("BILIN1")?;
            let mut spec = translate_spec(&base, &[10.0, 10.0])?;
            spec.name = "BILIN-SHIFT".into();
            spec.start = Some(vec![0.0, 0.0]);
            Ok(spec)
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown problem {other:?}; available: {}",
            ZOO_NAMES.join(", ")
        ))),
    }
}

/// Builds a built-in instance by name.
pub fn builtin(name: &str) -> Result<SaddleProblem> {
    builtin_spec(name)?.build()
}

/// All built-in instances, in declaration order.
pub fn all_builtin() -> Vec<SaddleProblem> {
    ZOO_NAMES.iter().map(|n| builtin(n).unwrap()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::Point;
    use crate::problem::{gradient_check, operator_eval};
    use crate::vecmath::norm;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bilinear_scalar_constants() {
        let p = builtin("BILIN1").unwrap();
        assert_eq!(p.lipschitz(), 1.0);
        assert_eq!(p.saddle().unwrap().coords(), &[0.0, 0.0]);
        assert_eq!(p.start().coords(), &[1.0, 0.0]);
    }

    #[test]
    fn mp_uniform_saddle_and_lipschitz() {
        let p = builtin("MP").unwrap();
        // σ_max of [[1,-1],[-1,1]] is 2: AᵀA eigenvalues are {4, 0}
        assert!((p.lipschitz() - 2.0).abs() < 1e-10);
        assert_eq!(p.saddle().unwrap().coords(), &[0.5, 0.5, 0.5, 0.5]);
        // the uniform point has zero gap, via support functions
        let a = Mat::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let (sx, sy) = p.set().split_at(2).unwrap();
        let best_y = sy.linear_max(&a.t_matvec(&[0.5, 0.5])).unwrap();
        let worst_x = sx.linear_min(&a.matvec(&[0.5, 0.5])).unwrap();
        assert!((best_y - worst_x).abs() <= 1e-15);
    }

    #[test]
    fn quadratic_constants() {
        // P = Q = I(1), A = 0: decoupled quadratic, L = 1
        let p = make_quadratic_saddle(
            Mat::identity(1),
            Mat::from_rows(&[vec![0.0]]).unwrap(),
            Mat::identity(1),
            FeasibleSet::unconstrained(2),
        )
        .unwrap();
        assert!((p.lipschitz() - 1.0).abs() < 1e-8);
        assert_eq!(p.saddle().unwrap().coords(), &[0.0, 0.0]);

        // P = Q = I(1), A = [1]: block [[1,1],[-1,1]], σ_max = √2 from the
        // characteristic polynomial of MᵀM = 2I
        let q = builtin("QUAD1").unwrap();
        assert!((q.lipschitz() - 2.0f64.sqrt()).abs() < 1e-10);

        // P = Q = 0 degenerates to the bilinear case
        let zero = Mat::zeros(1, 1);
        let r = make_quadratic_saddle(
            zero.clone(),
            Mat::from_rows(&[vec![1.0]]).unwrap(),
            zero,
            FeasibleSet::unconstrained(2),
        )
        .unwrap();
        assert!((r.lipschitz() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_non_psd_blocks() {
        let neg = Mat::from_rows(&[vec![-1.0]]).unwrap();
        let err = make_quadratic_saddle(
            neg,
            Mat::from_rows(&[vec![1.0]]).unwrap(),
            Mat::identity(1),
            FeasibleSet::unconstrained(2),
        );
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn smoothness_constant_examples() {
        let one = Family::Bilinear {
            a: Mat::from_rows(&[vec![1.0]]).unwrap(),
        };
        assert_eq!(smoothness_constant(&one, POWER_SEED).unwrap(), 1.0);

        let two_i3 = Family::Bilinear {
            a: Mat::from_rows(&[
                vec![2.0, 0.0, 0.0],
                vec![0.0, 2.0, 0.0],
                vec![0.0, 0.0, 2.0],
            ])
            .unwrap(),
        };
        assert!((smoothness_constant(&two_i3, POWER_SEED).unwrap() - 2.0).abs() < 1e-8);

        let mp = Family::Bilinear {
            a: Mat::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap(),
        };
        assert!((smoothness_constant(&mp, POWER_SEED).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn translation_moves_saddle_and_keeps_constants() {
        let base = builtin_spec("BILIN1").unwrap();

        let same = translate(&base, &[0.0, 0.0]).unwrap();
        assert_eq!(same.lipschitz(), 1.0);
        assert_eq!(same.saddle().unwrap().coords(), &[0.0, 0.0]);
        let mut calls = 0;
        let z = Point::new(vec![0.3, -0.7], 1, 1).unwrap();
        let f_same = operator_eval(&same, &z, &mut calls).unwrap();
        let f_base = operator_eval(&base.build().unwrap(), &z, &mut calls).unwrap();
        assert_eq!(f_same, f_base);

        let shifted = translate(&base, &[1.0, 1.0]).unwrap();
        assert_eq!(shifted.saddle().unwrap().coords(), &[1.0, 1.0]);
        assert_eq!(shifted.lipschitz(), 1.0);
    }

    #[test]
    fn translated_gradients_pass_finite_difference_check() {
        let spec = builtin_spec("BILIN-SHIFT").unwrap();
        let p = spec.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let z = Point::new((0..2).map(|_| rng.gen_range(-5.0..5.0)).collect(), 1, 1).unwrap();
            let h = 1e-6 * (1.0 + norm(z.coords()));
            let err = gradient_check(&p, &z, h).unwrap();
            assert!(err <= 1e-5, "relative error {err:.3e} at {:?}", z.coords());
        }
    }

    #[test]
    fn translation_rejects_constrained_base() {
        let spec = builtin_spec("MP").unwrap();
        assert!(matches!(
            translate(&spec, &[1.0; 4]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn saddle_points_satisfy_stationarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for p in all_builtin() {
            let Some(z_star) = p.saddle() else { continue };
            let mut calls = 0;
            let f_star = p.eval_operator(z_star.coords(), &mut calls).unwrap();
            if matches!(p.set(), FeasibleSet::Unconstrained { .. }) {
                assert!(
                    norm(&f_star) <= 1e-10,
                    "{}: ‖F(z*)‖ = {:.3e}",
                    p.name(),
                    norm(&f_star)
                );
            } else {
                // ⟨F(z*), z* − z⟩ ≤ 0 over feasible comparators
                for _ in 0..1000 {
                    let z = p.set().sample(&mut rng);
                    let d = crate::vecmath::sub(z_star.coords(), &z);
                    assert!(
                        dot(&f_star, &d) <= 1e-9,
                        "{}: saddle optimality violated",
                        p.name()
                    );
                }
            }
        }
    }

    #[test]
    fn lipschitz_constant_bounds_operator_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for p in all_builtin() {
            let l = p.lipschitz();
            let mut calls = 0;
            for _ in 0..1000 {
                let a: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let b: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let fa = p.eval_operator(&a, &mut calls).unwrap();
                let fb = p.eval_operator(&b, &mut calls).unwrap();
                let lhs = norm(&crate::vecmath::sub(&fa, &fb));
                let rhs = l * norm(&crate::vecmath::sub(&a, &b));
                assert!(
                    lhs <= rhs * (1.0 + 1e-9),
                    "{}: ‖F(a)−F(b)‖ = {lhs:.6e} > L·‖a−b‖ = {rhs:.6e}",
                    p.name()
                );
            }
        }
    }

    #[test]
    fn gradient_check_quadratic_at_origin_is_exact() {
        let p = builtin("QUAD1").unwrap();
        let origin = Point::new(vec![0.0, 0.0], 1, 1).unwrap();
        let err = gradient_check(&p, &origin, 1e-6).unwrap();
        assert!(
            err <= 1e-10,
            "central difference of a quadratic is exact, got {err:.3e}"
        );
    }

    #[test]
    fn unknown_name_lists_available() {
        let err = builtin("NOPE").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("BILIN1") && msg.contains("MP"));
    }
}
