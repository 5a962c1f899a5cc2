//! Planar 2x2 matrix type and closed-form singular value machinery.

use std::ops::{Add, Mul, Neg, Sub};

/// A real 2x2 matrix, stored row-major. Used for deformation gradients,
/// incompatible field values and rank-one perturbations alike.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

/// Ordered singular values of a 2x2 matrix, `lambda_max >= lambda_min >= 0`.
///
/// `signed_min` carries `sign(det F) * lambda_min`, needed by energies
/// defined on all of R^{2x2} (Dacorogna-Marcellini, Ball).
#[derive(Debug, Clone, Copy)]
pub struct SingularPair {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub signed_min: f64,
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

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    /// Rank-one matrix `xi ⊗ eta` (column times row).
    pub fn outer(xi: [f64; 2], eta: [f64; 2]) -> Self {
        Mat2::new(xi[0] * eta[0], xi[0] * eta[1], xi[1] * eta[0], xi[1] * eta[1])
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    /// Planar cofactor matrix; satisfies `Cof(X+Y) = Cof X + Cof Y` and
    /// `Cof(Cof X) = X` exactly.
    pub fn cof(&self) -> Mat2 {
        Mat2::new(self.a22, -self.a21, -self.a12, self.a11)
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    /// Inverse; caller must ensure `det != 0`.
    pub fn inverse(&self) -> Mat2 {
        let d = self.det();
        Mat2::new(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d)
    }

    pub fn inv_transpose(&self) -> Mat2 {
        self.inverse().transpose()
    }

    pub fn norm_sq(&self) -> f64 {
        self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Mat2) -> f64 {
        self.a11 * other.a11 + self.a12 * other.a12 + self.a21 * other.a21 + self.a22 * other.a22
    }

    pub fn max_abs(&self) -> f64 {
        self.a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs())
            .max(self.a22.abs())
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a21 * v[0] + self.a22 * v[1],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }

    /// Operator norm = largest singular value.
    pub fn op_norm(&self) -> f64 {
        self.singular_values().lambda_max
    }

    /// Closed-form singular values from the invariants `‖F‖²` and `det F`.
    ///
    /// With `s = ‖F‖²` and `d = |det F|`, the ordered singular values are
    /// `(√(s+2d) ± √(s−2d)) / 2`, which is exact for diagonal input.
    pub fn singular_values(&self) -> SingularPair {
        let s = self.norm_sq();
        let det = self.det();
        let d = det.abs();
        let p = (s + 2.0 * d).max(0.0).sqrt();
        let q = (s - 2.0 * d).max(0.0).sqrt();
        let lambda_max = 0.5 * (p + q);
        let lambda_min = 0.5 * (p - q);
        SingularPair {
            lambda_max,
            lambda_min,
            signed_min: det.signum() * lambda_min,
        }
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn from_entries(e: [f64; 4]) -> Mat2 {
        Mat2::new(e[0], e[1], e[2], e[3])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}
