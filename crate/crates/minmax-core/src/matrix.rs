//! Dense row-major matrices and the few decompositions the problem zoo needs.

use crate::vecmath::{dot, norm};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data",
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(i) = crate::vecmath::first_non_finite(&data) {
            return Err(Error::NonFinite {
                context: "matrix entries".into(),
                index: Some(i),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::InvalidConfig(format!(
                    "matrix row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
        }
        Mat::new(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| dot(&self.data[i * self.cols..(i + 1) * self.cols], x))
            .collect()
    }

    /// `Aᵀ x`.
    pub fn t_matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.data[i * self.cols + j] * xi;
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest eigenvalue of a symmetric matrix via Jacobi rotations.
    /// Used only for PSD validation of small blocks.
    pub fn symmetric_min_eigenvalue(&self) -> Result<f64> {
        if self.rows != self.cols {
            return Err(Error::InvalidConfig(
                "eigenvalues of a non-square matrix".into(),
            ));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(0.0);
        }
        let mut a = self.clone();
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a.get(i, j).abs();
                }
            }
            if off < 1e-14 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                }
            }
        }
        let mut min = f64::INFINITY;
        for i in 0..n {
            min = min.min(a.get(i, i));
        }
        Ok(min)
    }

    /// Cholesky factor `L` with `L Lᵀ = A`; errors when the matrix is not
    /// positive definite.
    pub fn cholesky(&self) -> Result<Mat> {
        if self.rows != self.cols {
            return Err(Error::InvalidConfig("cholesky of non-square matrix".into()));
        }
        let n = self.rows;
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::Unsupported("matrix is not positive definite".into()));
                    }
                    l.set(i, j, sum.sqrt());
                } else {
                    l.set(i, j, sum / l.get(j, j));
                }
            }
        }
        Ok(l)
    }

    /// Solves `A x = b` given the Cholesky factor of `A`.
    #[allow(clippy::needless_range_loop)]
    pub fn cholesky_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
        let n = l.rows;
        debug_assert_eq!(b.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= l.get(i, k) * y[k];
            }
            y[i] = sum / l.get(i, i);
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in (i + 1)..n {
                sum -= l.get(k, i) * x[k];
            }
            x[i] = sum / l.get(i, i);
        }
        x
    }
}

/// Largest singular value of `a` by power iteration on `AᵀA`.
///
/// The start vector is drawn from `seed`, so results are reproducible.
/// Converges to `rel_tol` relative accuracy or errors with the iteration count.
pub fn spectral_norm(a: &Mat, seed: u64, rel_tol: f64, max_iter: usize) -> Result<f64> {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let len = norm(&v);
    if len == 0.0 {
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|x| *x /= len);
    }
    let mut sigma_prev = f64::NAN;
    for it in 1..=max_iter {
        let w = a.t_matvec(&a.matvec(&v)); // AᵀA v
        let rayleigh = dot(&w, &v);
        let wlen = norm(&w);
        if wlen == 0.0 {
            return Ok(0.0); // v is in the null space of A
        }
        v = w.iter().map(|x| x / wlen).collect();
        let sigma = rayleigh.max(0.0).sqrt();
        if sigma_prev.is_finite() && (sigma - sigma_prev).abs() <= rel_tol * sigma.max(1e-300) {
            return Ok(sigma);
        }
        if it == max_iter {
            return Err(Error::NoConvergence {
                context: "power iteration",
                iterations: max_iter,
            });
        }
        sigma_prev = sigma;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose() {
        let a = Mat::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert_eq!(a.matvec(&[0.0, 1.0]), vec![-1.0, 1.0]);
        assert_eq!(a.t_matvec(&[1.0, 0.0]), vec![1.0, -1.0]);
    }

    #[test]
    fn spectral_norm_scalar_and_scaled_identity() {
        let a = Mat::from_rows(&[vec![1.0]]).unwrap();
        assert_eq!(spectral_norm(&a, 0, 1e-8, 10_000).unwrap(), 1.0);
        let two_i = Mat::from_rows(&[
            vec![2.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        let s = spectral_norm(&two_i, 0, 1e-8, 10_000).unwrap();
        assert!((s - 2.0).abs() < 1e-8);
    }

    #[test]
    fn spectral_norm_rank_one_symmetric() {
        // AᵀA has eigenvalues {4, 0}; σ_max = 2
        let a = Mat::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let s = spectral_norm(&a, 0, 1e-8, 10_000).unwrap();
        assert!((s - 2.0).abs() < 1e-10);
    }

    #[test]
    fn spectral_norm_zero_matrix() {
        let a = Mat::zeros(2, 2);
        assert_eq!(spectral_norm(&a, 0, 1e-8, 10_000).unwrap(), 0.0);
    }

    #[test]
    fn spectral_norm_reports_iteration_cap() {
        // a zero tolerance can never be met while the estimate still moves
        let a = Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        match spectral_norm(&a, 3, 0.0, 5) {
            Err(Error::NoConvergence { iterations, .. }) => assert_eq!(iterations, 5),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_solves_pd_system() {
        let a = Mat::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let l = a.cholesky().unwrap();
        let x = Mat::cholesky_solve(&l, &[8.0, 7.0]);
        let back = a.matvec(&x);
        assert!((back[0] - 8.0).abs() < 1e-12 && (back[1] - 7.0).abs() < 1e-12);

        let not_pd = Mat::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(not_pd.cholesky().is_err());
    }

    #[test]
    fn min_eigenvalue_psd_check() {
        let psd = Mat::from_rows(&[vec![2.0, -2.0], vec![-2.0, 2.0]]).unwrap();
        let min = psd.symmetric_min_eigenvalue().unwrap();
        assert!(min.abs() < 1e-12, "eigenvalues are {{4, 0}}, got min {min}");
        let indef = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(indef.symmetric_min_eigenvalue().unwrap() < -0.9);
    }
}
