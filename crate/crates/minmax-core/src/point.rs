//! The joint decision variable `z = (x, y)`.

use crate::{Error, Result};

/// A point of the product space: `x` of dimension `n` followed by `y` of
/// dimension `m`. Coordinates are always finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
    n: usize,
    m: usize,
}

impl Point {
    pub fn new(coords: Vec<f64>, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidConfig(format!(
                "point split must be positive, got n={n}, m={m}"
            )));
        }
        if coords.len() != n + m {
            return Err(Error::DimensionMismatch {
                context: "point coordinates",
                expected: n + m,
                got: coords.len(),
            });
        }
        if let Some(i) = crate::vecmath::first_non_finite(&coords) {
            return Err(Error::NonFinite {
                context: "point coordinates".into(),
                index: Some(i),
            });
        }
        Ok(Point { coords, n, m })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn split(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    /// The `x` block.
    pub fn x(&self) -> &[f64] {
        &self.coords[..self.n]
    }

    /// The `y` block.
    pub fn y(&self) -> &[f64] {
        &self.coords[self.n..]
    }
}
