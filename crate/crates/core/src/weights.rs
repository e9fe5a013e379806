//! Numerical reconstruction of the optimal daily estimator.
//!
//! Among linear combinations `w . Z` of the nine cross products that are
//! unbiased at correlation -1, 0 and 1, find the one with the smallest
//! variance when the assets are independent. At `rho = 0` the two paths are
//! independent, so every second moment of `Z` factors into single-path
//! moments of a standard Brownian motion:
//!
//! ```text
//! E0[(A1 B2)(C1 D2)] = E[A C] * E[B D],   A, B, C, D in {H, L, S}
//! ```
//!
//! The constraints reduce to `w . m = 1` (the `rho = 1` means) and
//! `w . y = 0` where `y = (1, -1, -1, 1, 0, 0, 0, 0, 0)`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};

use crate::error::{Error, Result};
use crate::estimator::CrossProducts;
use crate::special::{b_const, range_weight};

pub type Matrix9 = SMatrix<f64, 9, 9>;
pub type Vector9 = SVector<f64, 9>;

/// Path quantity of a single asset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    High = 0,
    Low = 1,
    Close = 2,
}

use Extreme::{Close, High, Low};

/// `(asset 1, asset 2)` factors of each cross product, in `CrossProducts` order.
pub const TERMS: [(Extreme, Extreme); 9] = [
    (High, High),
    (High, Low),
    (Low, High),
    (Low, Low),
    (High, Close),
    (Low, Close),
    (Close, High),
    (Close, Low),
    (Close, Close),
];

/// Means of the cross products at `rho = -1, 0, 1`, derived from the
/// moments of a single standard Brownian motion on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    /// `E[A C]` for one path, indexed by [`Extreme`].
    pub second: [[f64; 3]; 3],
    /// `E[A]` for one path.
    pub first: [f64; 3],
}

impl Default for MomentTable {
    fn default() -> Self {
        Self::new()
    }
}

impl MomentTable {
    pub fn new() -> Self {
        let b = b_const();
        let mean_high = (2.0 / PI).sqrt();
        Self {
            second: [[1.0, -b, 0.5], [-b, 1.0, 0.5], [0.5, 0.5, 1.0]],
            first: [mean_high, -mean_high, 0.0],
        }
    }

    fn moment(&self, a: Extreme, c: Extreme) -> f64 {
        self.second[a as usize][c as usize]
    }

    /// `E[Z]` at `rho = 1`: both assets follow the same path.
    pub fn mean_at_plus_one(&self) -> Vector9 {
        Vector9::from_fn(|k, _| {
            let (a, b) = TERMS[k];
            self.moment(a, b)
        })
    }

    /// `E[Z]` at `rho = 0`: independent paths.
    pub fn mean_at_zero(&self) -> Vector9 {
        Vector9::from_fn(|k, _| {
            let (a, b) = TERMS[k];
            self.first[a as usize] * self.first[b as usize]
        })
    }

    /// `E[Z]` at `rho = -1`: asset 2 is the reflected path, so
    /// `H2 = -L1`, `L2 = -H1`, `S2 = -S1`.
    pub fn mean_at_minus_one(&self) -> Vector9 {
        let mirror = |e: Extreme| match e {
            High => Low,
            Low => High,
            Close => Close,
        };
        Vector9::from_fn(|k, _| {
            let (a, b) = TERMS[k];
            -self.moment(a, mirror(b))
        })
    }

    /// `E0[Z Z^T]`, the second-moment matrix of `Z` at `rho = 0`.
    pub fn second_moment_matrix(&self) -> Matrix9 {
        Matrix9::from_fn(|i, j| {
            let (a, b) = TERMS[i];
            let (c, d) = TERMS[j];
            self.moment(a, c) * self.moment(b, d)
        })
    }
}

/// Weights over the nine cross products in `CrossProducts` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector {
    pub w: [f64; 9],
}

impl WeightVector {
    pub fn from_vector(v: &Vector9) -> Self {
        let mut w = [0.0; 9];
        w.copy_from_slice(v.as_slice());
        Self { w }
    }

    pub fn as_vector(&self) -> Vector9 {
        Vector9::from_column_slice(&self.w)
    }

    /// `w . Z`.
    pub fn apply(&self, z: &CrossProducts) -> f64 {
        self.w.iter().zip(z.z.iter()).map(|(a, b)| a * b).sum()
    }

    /// Max-norm distance to another weight vector.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.w
            .iter()
            .zip(other.w.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `V = E0[Z Z^T]`. At `rho = 0` the feasible estimators have mean zero, so
/// `w . V w` is their variance.
pub fn build_covariance_matrix() -> Matrix9 {
    MomentTable::new().second_moment_matrix()
}

/// `(m, y)`: the `rho = 1` mean vector and the direction along which the
/// `rho = 0` means point.
pub fn constraint_vectors() -> (Vector9, Vector9) {
    let m = MomentTable::new().mean_at_plus_one();
    let y = Vector9::from_column_slice(&[1.0, -1.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    (m, y)
}

/// Minimizes `w . V w` subject to `w . m = 1`, `w . y = 0`.
///
/// The minimizer is `w = a V^-1 m + c V^-1 y` where `(a, c)` solves the 2x2
/// Gram system; `V` is factored once by Cholesky.
pub fn solve_weights(v: &Matrix9, m: &Vector9, y: &Vector9) -> Result<WeightVector> {
    let chol = v.cholesky().ok_or(Error::SingularSystem)?;
    let vm = chol.solve(m);
    let vy = chol.solve(y);
    let gram = Matrix2::new(m.dot(&vm), m.dot(&vy), y.dot(&vm), y.dot(&vy));
    let coeffs = gram
        .lu()
        .solve(&Vector2::new(1.0, 0.0))
        .ok_or(Error::SingularSystem)?;
    let w = vm * coeffs[0] + vy * coeffs[1];
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(WeightVector::from_vector(&w))
}

/// The optimal weights written out: `(c, c, c, c, -c, -c, -c, -c, 1/2 + c)`
/// with `c = 1 / (2(1 - 2b))`.
pub fn closed_form_weights() -> WeightVector {
    let c = range_weight();
    WeightVector {
        w: [c, c, c, c, -c, -c, -c, -c, 0.5 + c],
    }
}

/// `w . V w`.
pub fn estimator_variance(w: &WeightVector, v: &Matrix9) -> f64 {
    let x = w.as_vector();
    x.dot(&(v * x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn named_entries() {
        let b = b_const();
        let v = build_covariance_matrix();
        // (HH, SL)
        assert!((v[(0, 7)] + b / 2.0).abs() < 1e-15);
        assert_eq!(v[(0, 0)], 1.0);
        assert_eq!(v[(8, 8)], 1.0);
        assert!((v[(0, 3)] - b * b).abs() < 1e-15);
    }

    #[test]
    fn table_columns() {
        let b = b_const();
        let t = MomentTable::new();
        let d = 2.0 / PI;
        let minus = [b, -1.0, -1.0, b, -0.5, -0.5, -0.5, -0.5, -1.0];
        let zero = [d, -d, -d, d, 0.0, 0.0, 0.0, 0.0, 0.0];
        let plus = [1.0, -b, -b, 1.0, 0.5, 0.5, 0.5, 0.5, 1.0];
        for k in 0..9 {
            assert!((t.mean_at_minus_one()[k] - minus[k]).abs() < 1e-15);
            assert!((t.mean_at_zero()[k] - zero[k]).abs() < 1e-15);
            assert!((t.mean_at_plus_one()[k] - plus[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn table_symmetric_under_high_low_swap() {
        // Reflecting one path maps (H, L, S) to (-L, -H, -S); the single-path
        // moment table must be invariant.
        let t = MomentTable::new();
        let swap = [1usize, 0, 2];
        for a in 0..3 {
            for c in 0..3 {
                assert_eq!(t.second[a][c], t.second[swap[a]][swap[c]]);
            }
            assert_eq!(t.first[a], -t.first[swap[a]]);
        }
    }

    #[test]
    fn constraint_vector_values() {
        let b = b_const();
        let (m, y) = constraint_vectors();
        assert_eq!(m[0], 1.0);
        assert_eq!(m[1], -b);
        assert!(y.iter().skip(4).all(|&v| v == 0.0));
    }

    #[test]
    fn solver_recovers_closed_form() {
        let v = build_covariance_matrix();
        let (m, y) = constraint_vectors();
        let w = solve_weights(&v, &m, &y).unwrap();
        assert!((w.as_vector().dot(&m) - 1.0).abs() < 1e-12);
        assert!(w.as_vector().dot(&y).abs() < 1e-12);
        assert!(w.max_abs_diff(&closed_form_weights()) < 1e-10);
        assert!((estimator_variance(&w, &v) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn closed_form_values() {
        let w = closed_form_weights();
        assert!((w.w[0] - 2.198_66).abs() < 1e-5);
        assert!((w.w[8] - 2.698_66).abs() < 1e-5);
        assert_eq!(w.w[0] - w.w[1] - w.w[2] + w.w[3], 0.0);
    }

    #[test]
    fn simple_estimator_variance() {
        let mut w = [0.0; 9];
        w[8] = 1.0;
        let v = build_covariance_matrix();
        assert!((estimator_variance(&WeightVector { w }, &v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_rejected() {
        let (m, y) = constraint_vectors();
        assert_eq!(solve_weights(&Matrix9::zeros(), &m, &y), Err(Error::SingularSystem));
    }

    #[test]
    fn optimal_against_feasible_perturbations() {
        let v = build_covariance_matrix();
        let (m, y) = constraint_vectors();
        let best = closed_form_weights();
        let best_var = estimator_variance(&best, &v);
        // Projector onto the null space of the constraint rows.
        let c = SMatrix::<f64, 2, 9>::from_rows(&[m.transpose(), y.transpose()]);
        let cct_inv = (c * c.transpose()).try_inverse().unwrap();
        let proj = Matrix9::identity() - c.transpose() * cct_inv * c;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let raw = Vector9::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let w = best.as_vector() + proj * raw;
            assert!((w.dot(&m) - 1.0).abs() < 1e-12);
            let var = estimator_variance(&WeightVector::from_vector(&w), &v);
            assert!(var >= best_var - 1e-12);
        }
    }

    #[test]
    fn exchange_symmetry_and_definiteness() {
        let v = build_covariance_matrix();
        let perm = [0usize, 2, 1, 3, 6, 7, 4, 5, 8];
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(v[(i, j)], v[(perm[i], perm[j])]);
                assert_eq!(v[(i, j)], v[(j, i)]);
            }
        }
        let ev = v.symmetric_eigenvalues();
        assert!(ev.min() > 0.0);
    }
}
