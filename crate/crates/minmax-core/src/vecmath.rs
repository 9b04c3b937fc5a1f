//! Small dense-vector helpers shared by the solvers and metrics.

/// Inner product of two equally sized slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance between two points.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Writes `base − gamma·f` into `out`.
///
/// Every solver update goes through this one expression so that update rules
/// built from the same compositions (e.g. extra-gradient vs. a two-iteration
/// inner loop) produce bitwise-identical floating point results.
pub fn gamma_step(base: &[f64], gamma: f64, f: &[f64], out: &mut [f64]) {
    debug_assert_eq!(base.len(), f.len());
    debug_assert_eq!(base.len(), out.len());
    for i in 0..base.len() {
        out[i] = base[i] - gamma * f[i];
    }
}

/// `acc += x`.
pub fn add_assign(acc: &mut [f64], x: &[f64]) {
    debug_assert_eq!(acc.len(), x.len());
    for (a, v) in acc.iter_mut().zip(x) {
        *a += v;
    }
}

/// Returns `a − b` as a new vector.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Index of the first non-finite entry, if any.
pub fn first_non_finite(a: &[f64]) -> Option<usize> {
    a.iter().position(|v| !v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_and_norm() {
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(dist(&[1.0, 0.0], &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn gamma_step_basic() {
        let mut out = [0.0; 2];
        gamma_step(&[1.0, 0.0], 0.5, &[0.0, -1.0], &mut out);
        assert_eq!(out, [1.0, 0.5]);
    }

    #[test]
    fn non_finite_detection() {
        assert_eq!(first_non_finite(&[1.0, f64::NAN]), Some(1));
        assert_eq!(first_non_finite(&[1.0, 2.0]), None);
    }
}
