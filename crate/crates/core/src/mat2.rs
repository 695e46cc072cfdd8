//! Small fixed-size matrices.
//!
//! [`Mat2`] is the workhorse: every cell gradient is stored as a `Mat2`,
//! padded with zeros when the field or the domain is one-dimensional.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A real 2×2 matrix `[[a11, a12], [a21, a22]]`, rows indexed by the field
/// component and columns by the spatial direction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub const fn diag(d1: f64, d2: f64) -> Self {
        Mat2::new(d1, 0.0, 0.0, d2)
    }

    /// Builds the matrix from its two rows.
    pub const fn from_rows(r1: [f64; 2], r2: [f64; 2]) -> Self {
        Mat2::new(r1[0], r1[1], r2[0], r2[1])
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Mat2::new(a[0], a[1], a[2], a[3])
    }

    /// Entries in row-major order.
    pub fn to_array(self) -> [f64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn row1(self) -> [f64; 2] {
        [self.a11, self.a12]
    }

    pub fn row2(self) -> [f64; 2] {
        [self.a21, self.a22]
    }

    pub fn det(self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    /// Cofactor matrix, laid out so that `ξ : cof ξ = 2 det ξ`.
    pub fn cof(self) -> Mat2 {
        Mat2::new(self.a22, -self.a21, -self.a12, self.a11)
    }

    /// Frobenius inner product `ξ : η = tr(ξᵀη)`.
    pub fn inner(self, other: Mat2) -> f64 {
        self.a11 * other.a11 + self.a12 * other.a12 + self.a21 * other.a21 + self.a22 * other.a22
    }

    pub fn norm_sq(self) -> f64 {
        self.inner(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn transpose(self) -> Mat2 {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    /// Exchanges the two rows, i.e. the gradient of `(u², u¹)` given that of `(u¹, u²)`.
    pub fn swap_rows(self) -> Mat2 {
        Mat2::new(self.a21, self.a22, self.a11, self.a12)
    }

    pub fn conformal_split(self) -> ConformalSplit {
        let c = self.cof();
        ConformalSplit {
            plus: (self + c) * 0.5,
            minus: (self - c) * 0.5,
        }
    }

    pub fn max_abs(self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Free-function forms, matching the usual notation.
pub fn det2(xi: Mat2) -> f64 {
    xi.det()
}

pub fn cof2(xi: Mat2) -> Mat2 {
    xi.cof()
}

pub fn inner(xi: Mat2, eta: Mat2) -> f64 {
    xi.inner(eta)
}

pub fn conformal_split(xi: Mat2) -> ConformalSplit {
    xi.conformal_split()
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self * -1.0
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }
}

impl Mul<Mat2> for f64 {
    type Output = Mat2;
    fn mul(self, m: Mat2) -> Mat2 {
        m * self
    }
}

/// The decomposition `ξ = ξ⁺ + ξ⁻` with `ξ± = ½(ξ ± cof ξ)`.
///
/// `ξ⁺` is conformal (a multiple of a rotation) and `ξ⁻` anti-conformal, so
/// `|ξ|² = |ξ⁺|² + |ξ⁻|²` and `det ξ = ½(|ξ⁺|² − |ξ⁻|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalSplit {
    pub plus: Mat2,
    pub minus: Mat2,
}

impl ConformalSplit {
    pub fn reconstruct(&self) -> Mat2 {
        self.plus + self.minus
    }
}

/// A 3×3 matrix with only entrywise access and the Frobenius product.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3 {
    entries: [[f64; 3]; 3],
}

impl Mat3 {
    pub fn from_rows(entries: [[f64; 3]; 3]) -> Self {
        Mat3 { entries }
    }

    /// The rank-one matrix `a ⊗ b` with entries `a_i b_j`.
    pub fn outer(a: [f64; 3], b: [f64; 3]) -> Self {
        let mut entries = [[0.0; 3]; 3];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = a[i] * b[j];
            }
        }
        Mat3 { entries }
    }

    /// Entry `ξ_ij` with one-based indices, as written in the literature.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i - 1][j - 1]
    }

    pub fn inner(&self, other: &Mat3) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: Mat2 = Mat2::new(1.0, 2.0, 3.0, 4.0);

    #[test]
    fn determinant_examples() {
        assert_eq!(det2(Mat2::IDENTITY), 1.0);
        assert_eq!(det2(A), -2.0);
        assert_eq!(det2(Mat2::diag(1.0, -1.0)), -1.0);
    }

    #[test]
    fn cofactor_examples() {
        assert_eq!(cof2(Mat2::IDENTITY), Mat2::IDENTITY);
        assert_eq!(cof2(A), Mat2::new(4.0, -3.0, -2.0, 1.0));
        assert_eq!(A.inner(A.cof()), -4.0);
        assert_eq!(A.inner(A.cof()), 2.0 * A.det());
    }

    #[test]
    fn inner_examples() {
        assert_eq!(inner(Mat2::IDENTITY, Mat2::IDENTITY), 2.0);
        assert_eq!(inner(Mat2::diag(1.0, 0.0), Mat2::diag(0.0, 1.0)), 0.0);
        assert_eq!(inner(A, Mat2::new(4.0, -3.0, -2.0, 1.0)), -4.0);
    }

    #[test]
    fn conformal_split_examples() {
        let s = conformal_split(Mat2::IDENTITY);
        assert_eq!(s.plus, Mat2::IDENTITY);
        assert_eq!(s.minus, Mat2::ZERO);

        let s = conformal_split(Mat2::diag(1.0, -1.0));
        assert_eq!(s.plus, Mat2::ZERO);
        assert_eq!(s.minus, Mat2::diag(1.0, -1.0));

        let s = conformal_split(A);
        assert_eq!(s.plus, Mat2::new(2.5, -0.5, 0.5, 2.5));
        assert_eq!(s.minus, Mat2::new(-1.5, 2.5, 2.5, 1.5));
        assert_eq!(s.plus.norm_sq(), 13.0);
        assert_eq!(s.minus.norm_sq(), 17.0);
        assert_eq!(s.plus.norm_sq() + s.minus.norm_sq(), A.norm_sq());
        assert_eq!(0.5 * (s.plus.norm_sq() - s.minus.norm_sq()), A.det());
        assert_eq!(s.reconstruct(), A);
    }

    #[test]
    fn det_norm_equality_at_identity() {
        let e = Mat2::IDENTITY;
        assert_eq!(e.norm_sq(), 2.0 * e.det().abs());
    }

    #[test]
    fn norm_is_zero_only_for_zero() {
        assert_eq!(Mat2::ZERO.norm_sq(), 0.0);
        assert!(Mat2::new(0.0, 1e-3, 0.0, 0.0).norm_sq() > 0.0);
    }

    #[test]
    fn mat3_access() {
        let m = Mat3::outer([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert_eq!(m.at(1, 1), 1.0);
        assert_eq!(m.norm_sq(), 1.0);
        let r = Mat3::from_rows([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]);
        assert_eq!(r.at(3, 2), 8.0);
        assert_eq!(r.inner(&m), 1.0);
    }
}
