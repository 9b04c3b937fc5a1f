//! Convex feasible sets with exact Euclidean projection, diameter reporting
//! and support functions.

use crate::vecmath::{dist, dot, norm};
use crate::{Error, Result};
use rand::Rng;

/// A projection-capable convex set. Unbounded sets report an infinite
/// diameter so callers can branch on boundedness.
#[derive(Clone, Debug, PartialEq)]
pub enum FeasibleSet {
    Unconstrained { dim: usize },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Simplex { dim: usize },
    Product(Vec<FeasibleSet>),
}

impl FeasibleSet {
    pub fn unconstrained(dim: usize) -> Self {
        FeasibleSet::Unconstrained { dim }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        if let Some(i) = crate::vecmath::first_non_finite(&center) {
            return Err(Error::NonFinite {
                context: "ball center".into(),
                index: Some(i),
            });
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                context: "box bounds",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::NonFinite {
                    context: "box bounds".into(),
                    index: Some(i),
                });
            }
            if l > u {
                return Err(Error::InvalidConfig(format!(
                    "box lower bound exceeds upper bound at coordinate {i}: {l} > {u}"
                )));
            }
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidConfig(
                "simplex dimension must be >= 1".into(),
            ));
        }
        Ok(FeasibleSet::Simplex { dim })
    }

    pub fn product(parts: Vec<FeasibleSet>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidConfig("product of zero sets".into()));
        }
        Ok(FeasibleSet::Product(parts))
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Unconstrained { dim } => *dim,
            FeasibleSet::Ball { center, .. } => center.len(),
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::Simplex { dim } => *dim,
            FeasibleSet::Product(parts) => parts.iter().map(|p| p.dim()).sum(),
        }
    }

    fn check_dim(&self, z: &[f64], context: &'static str) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    /// Euclidean projection of `z` onto the set.
    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(z, "projection input")?;
        Ok(self.project_unchecked(z))
    }

    fn project_unchecked(&self, z: &[f64]) -> Vec<f64> {
        match self {
            FeasibleSet::Unconstrained { .. } => z.to_vec(),
            FeasibleSet::Ball { center, radius } => {
                let d: Vec<f64> = z.iter().zip(center).map(|(a, c)| a - c).collect();
                let len = norm(&d);
                if len <= *radius {
                    z.to_vec()
                } else {
                    let scale = radius / len;
                    center.iter().zip(&d).map(|(c, v)| c + scale * v).collect()
                }
            }
            FeasibleSet::Box { lower, upper } => z
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| v.clamp(*l, *u))
                .collect(),
            FeasibleSet::Simplex { .. } => project_simplex(z),
            FeasibleSet::Product(parts) => {
                let mut out = Vec::with_capacity(z.len());
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    out.extend(part.project_unchecked(&z[offset..offset + d]));
                    offset += d;
                }
                out
            }
        }
    }

    /// Distance from `z` to the set.
    pub fn residual(&self, z: &[f64]) -> Result<f64> {
        let p = self.project(z)?;
        Ok(dist(z, &p))
    }

    /// `max ‖z − z'‖` over the set; infinite when unbounded.
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Unconstrained { .. } => f64::INFINITY,
            FeasibleSet::Ball { radius, .. } => 2.0 * radius,
            FeasibleSet::Box { lower, upper } => dist(upper, lower),
            FeasibleSet::Simplex { dim } => {
                if *dim == 1 {
                    0.0
                } else {
                    2.0_f64.sqrt()
                }
            }
            FeasibleSet::Product(parts) => {
                let mut sq = 0.0;
                for part in parts {
                    let d = part.diameter();
                    if d.is_infinite() {
                        return f64::INFINITY;
                    }
                    sq += d * d;
                }
                sq.sqrt()
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.diameter().is_finite()
    }

    /// Support function `max ⟨c, z⟩` over the set. Errors on unbounded sets.
    pub fn linear_max(&self, c: &[f64]) -> Result<f64> {
        self.check_dim(c, "support function input")?;
        match self {
            FeasibleSet::Unconstrained { .. } => Err(Error::Unsupported(
                "support function of an unbounded set".into(),
            )),
            FeasibleSet::Ball { center, radius } => Ok(dot(c, center) + radius * norm(c)),
            FeasibleSet::Box { lower, upper } => Ok(c
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(ci, (l, u))| if *ci >= 0.0 { ci * u } else { ci * l })
                .sum()),
            FeasibleSet::Simplex { .. } => Ok(c.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
            FeasibleSet::Product(parts) => {
                let mut total = 0.0;
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    total += part.linear_max(&c[offset..offset + d])?;
                    offset += d;
                }
                Ok(total)
            }
        }
    }

    /// A maximizer of `⟨c, z⟩` over the set.
    pub fn linear_argmax(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(c, "support function input")?;
        match self {
            FeasibleSet::Unconstrained { .. } => Err(Error::Unsupported(
                "support function of an unbounded set".into(),
            )),
            FeasibleSet::Ball { center, radius } => {
                let len = norm(c);
                if len == 0.0 {
                    Ok(center.clone())
                } else {
                    Ok(center
                        .iter()
                        .zip(c)
                        .map(|(ct, ci)| ct + radius * ci / len)
                        .collect())
                }
            }
            FeasibleSet::Box { lower, upper } => Ok(c
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(ci, (l, u))| if *ci >= 0.0 { *u } else { *l })
                .collect()),
            FeasibleSet::Simplex { dim } => {
                let mut best = 0;
                for (i, v) in c.iter().enumerate() {
                    if *v > c[best] {
                        best = i;
                    }
                }
                let mut vertex = vec![0.0; *dim];
                vertex[best] = 1.0;
                Ok(vertex)
            }
            FeasibleSet::Product(parts) => {
                let mut out = Vec::with_capacity(c.len());
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    out.extend(part.linear_argmax(&c[offset..offset + d])?);
                    offset += d;
                }
                Ok(out)
            }
        }
    }

    /// `min ⟨c, z⟩` over the set.
    pub fn linear_min(&self, c: &[f64]) -> Result<f64> {
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        Ok(-self.linear_max(&neg)?)
    }

    /// Splits the set into the first `at` coordinates and the rest, when the
    /// set factors cleanly at that boundary.
    pub fn split_at(&self, at: usize) -> Option<(FeasibleSet, FeasibleSet)> {
        if at == 0 || at >= self.dim() {
            return None;
        }
        match self {
            FeasibleSet::Unconstrained { dim } => Some((
                FeasibleSet::Unconstrained { dim: at },
                FeasibleSet::Unconstrained { dim: dim - at },
            )),
            FeasibleSet::Box { lower, upper } => Some((
                FeasibleSet::Box {
                    lower: lower[..at].to_vec(),
                    upper: upper[..at].to_vec(),
                },
                FeasibleSet::Box {
                    lower: lower[at..].to_vec(),
                    upper: upper[at..].to_vec(),
                },
            )),
            FeasibleSet::Ball { .. } | FeasibleSet::Simplex { .. } => None,
            FeasibleSet::Product(parts) => {
                let mut offset = 0;
                for (i, part) in parts.iter().enumerate() {
                    if offset == at {
                        let left = collapse(parts[..i].to_vec());
                        let right = collapse(parts[i..].to_vec());
                        return Some((left, right));
                    }
                    if offset > at {
                        break;
                    }
                    offset += part.dim();
                }
                // the boundary falls inside a component; split that component
                let mut offset = 0;
                for (i, part) in parts.iter().enumerate() {
                    let d = part.dim();
                    if at > offset && at < offset + d {
                        let (a, b) = part.split_at(at - offset)?;
                        let mut left = parts[..i].to_vec();
                        left.push(a);
                        let mut right = vec![b];
                        right.extend(parts[i + 1..].to_vec());
                        return Some((collapse(left), collapse(right)));
                    }
                    offset += d;
                }
                None
            }
        }
    }

    /// Draws a feasible point. Bounded kinds are sampled over the whole set;
    /// for unconstrained coordinates a standard normal is used.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            FeasibleSet::Unconstrained { dim } => (0..*dim).map(|_| normal_sample(rng)).collect(),
            FeasibleSet::Ball { center, radius } => {
                let dim = center.len();
                let dir: Vec<f64> = (0..dim).map(|_| normal_sample(rng)).collect();
                let len = norm(&dir);
                let r = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
                if len == 0.0 {
                    center.clone()
                } else {
                    center
                        .iter()
                        .zip(&dir)
                        .map(|(c, d)| c + r * d / len)
                        .collect()
                }
            }
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| rng.gen_range(*l..=*u))
                .collect(),
            FeasibleSet::Simplex { dim } => {
                let draws: Vec<f64> = (0..*dim).map(|_| -rng.gen::<f64>().ln()).collect();
                let total: f64 = draws.iter().sum();
                draws.iter().map(|v| v / total).collect()
            }
            FeasibleSet::Product(parts) => {
                let mut out = Vec::with_capacity(self.dim());
                for part in parts {
                    out.extend(part.sample(rng));
                }
                out
            }
        }
    }
}

fn collapse(mut parts: Vec<FeasibleSet>) -> FeasibleSet {
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        FeasibleSet::Product(parts)
    }
}

fn normal_sample<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; one draw per call keeps the stream simple and reproducible.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Projection onto the probability simplex by sort-and-threshold, O(d log d).
fn project_simplex(z: &[f64]) -> Vec<f64> {
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        }
    }
    z.iter().map(|v| (v - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ball_projection_scales_radially() {
        let set = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let p = set.project(&[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn simplex_projection_symmetric_case() {
        let set = FeasibleSet::simplex(2).unwrap();
        let p = set.project(&[1.0, 1.0]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    /// Brute-force oracle: minimize ‖z − p‖ over a 1e-3 grid of the 3-simplex.
    fn simplex3_grid_oracle(z: &[f64]) -> Vec<f64> {
        let steps = 1000usize;
        let mut best = vec![1.0, 0.0, 0.0];
        let mut best_d = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let a = i as f64 / steps as f64;
                let b = j as f64 / steps as f64;
                let c = 1.0 - a - b;
                let d = (z[0] - a).powi(2) + (z[1] - b).powi(2) + (z[2] - c).powi(2);
                if d < best_d {
                    best_d = d;
                    best = vec![a, b, c];
                }
            }
        }
        best
    }

    #[test]
    fn simplex_projection_matches_grid_oracle() {
        let set = FeasibleSet::simplex(3).unwrap();
        let z = [0.9, 0.3, -0.2];
        let p = set.project(&z).unwrap();
        let oracle = simplex3_grid_oracle(&z);
        assert!(
            dist(&p, &oracle) <= 2e-3,
            "sort-threshold {p:?} vs grid oracle {oracle:?}"
        );
        // hand-checked threshold for this input
        assert!(dist(&p, &[0.8, 0.2, 0.0]) < 1e-12);
    }

    #[test]
    fn diameters() {
        assert_eq!(
            FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap().diameter(),
            2.0
        );
        assert_eq!(FeasibleSet::simplex(2).unwrap().diameter(), 2.0_f64.sqrt());
        let prod = FeasibleSet::product(vec![
            FeasibleSet::simplex(2).unwrap(),
            FeasibleSet::simplex(2).unwrap(),
        ])
        .unwrap();
        // sqrt(2 + 2), cross-checked by enumerating vertex pairs
        assert!((prod.diameter() - 2.0).abs() < 1e-15);
        assert_eq!(FeasibleSet::unconstrained(3).diameter(), f64::INFINITY);
        let mixed = FeasibleSet::product(vec![
            FeasibleSet::unconstrained(1),
            FeasibleSet::simplex(2).unwrap(),
        ])
        .unwrap();
        assert_eq!(mixed.diameter(), f64::INFINITY);
    }

    #[test]
    fn product_diameter_dominates_components() {
        let parts = vec![
            FeasibleSet::ball(vec![0.0], 0.5).unwrap(),
            FeasibleSet::simplex(3).unwrap(),
            FeasibleSet::boxed(vec![-1.0, -1.0], vec![1.0, 2.0]).unwrap(),
        ];
        let prod = FeasibleSet::product(parts.clone()).unwrap();
        for part in &parts {
            assert!(prod.diameter() >= part.diameter());
        }
    }

    #[test]
    fn support_functions() {
        let simplex = FeasibleSet::simplex(2).unwrap();
        assert_eq!(simplex.linear_max(&[1.0, -1.0]).unwrap(), 1.0);

        let ball = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(ball.linear_max(&[3.0, 4.0]).unwrap(), 5.0);

        let boxed = FeasibleSet::boxed(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let c = [2.0, -3.0];
        assert_eq!(boxed.linear_max(&c).unwrap(), 5.0);
        // vertex-enumeration oracle
        let mut best = f64::NEG_INFINITY;
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                best = best.max(c[0] * sx + c[1] * sy);
            }
        }
        assert_eq!(boxed.linear_max(&c).unwrap(), best);

        assert!(matches!(
            FeasibleSet::unconstrained(2).linear_max(&[1.0, 0.0]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn argmax_attains_support_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sets = [
            FeasibleSet::simplex(3).unwrap(),
            FeasibleSet::ball(vec![0.5, -0.5], 2.0).unwrap(),
            FeasibleSet::boxed(vec![-1.0, 0.0], vec![2.0, 3.0]).unwrap(),
        ];
        for set in &sets {
            for _ in 0..50 {
                let c: Vec<f64> = (0..set.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let arg = set.linear_argmax(&c).unwrap();
                let val = set.linear_max(&c).unwrap();
                assert!((dot(&arg, &c) - val).abs() <= 1e-12 * (1.0 + val.abs()));
                assert!(set.residual(&arg).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sets = [
            FeasibleSet::ball(vec![0.3, -0.2, 0.0], 1.5).unwrap(),
            FeasibleSet::simplex(4).unwrap(),
            FeasibleSet::boxed(vec![-1.0, -2.0], vec![0.5, 2.0]).unwrap(),
            FeasibleSet::product(vec![
                FeasibleSet::simplex(2).unwrap(),
                FeasibleSet::ball(vec![0.0], 1.0).unwrap(),
            ])
            .unwrap(),
        ];
        for set in &sets {
            for _ in 0..200 {
                let a: Vec<f64> = (0..set.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let b: Vec<f64> = (0..set.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let pa = set.project(&a).unwrap();
                let pb = set.project(&b).unwrap();
                assert!(dist(&pa, &pb) <= dist(&a, &b) * (1.0 + 1e-12));
                let ppa = set.project(&pa).unwrap();
                assert!(dist(&pa, &ppa) <= 1e-12);
            }
        }
    }

    #[test]
    fn projection_variational_inequality() {
        // ⟨z − Π(z), w − Π(z)⟩ ≤ 0 for all feasible w
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let sets = [
            FeasibleSet::simplex(3).unwrap(),
            FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap(),
            FeasibleSet::boxed(vec![-1.0], vec![1.0]).unwrap(),
        ];
        for set in &sets {
            for _ in 0..20 {
                let z: Vec<f64> = (0..set.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let p = set.project(&z).unwrap();
                let zp = crate::vecmath::sub(&z, &p);
                for _ in 0..100 {
                    let w = set.sample(&mut rng);
                    let wp = crate::vecmath::sub(&w, &p);
                    assert!(dot(&zp, &wp) <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn split_at_products() {
        let prod = FeasibleSet::product(vec![
            FeasibleSet::simplex(2).unwrap(),
            FeasibleSet::simplex(3).unwrap(),
        ])
        .unwrap();
        let (a, b) = prod.split_at(2).unwrap();
        assert_eq!(a.dim(), 2);
        assert_eq!(b.dim(), 3);
        assert!(prod.split_at(1).is_none());

        let unc = FeasibleSet::unconstrained(4);
        let (a, b) = unc.split_at(1).unwrap();
        assert_eq!((a.dim(), b.dim()), (1, 3));
    }

    #[test]
    fn samples_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let sets = [
            FeasibleSet::simplex(4).unwrap(),
            FeasibleSet::ball(vec![1.0, 1.0], 0.5).unwrap(),
            FeasibleSet::boxed(vec![-1.0, 0.0], vec![1.0, 0.5]).unwrap(),
        ];
        for set in &sets {
            for _ in 0..100 {
                let s = set.sample(&mut rng);
                assert!(set.residual(&s).unwrap() <= 1e-9);
            }
        }
    }
}
