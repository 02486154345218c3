//! Real 2×2 matrices, the workhorse of the SL(2,R) model.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Row-major 2×2 real matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);
    /// The rotation by π/2, `[[0, 1], [-1, 0]]`; default base point of the SL(2,R) model.
    pub const J: Mat2 = Mat2::new(0.0, 1.0, -1.0, 0.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn from_row_major(m: [f64; 4]) -> Self {
        Mat2::new(m[0], m[1], m[2], m[3])
    }

    pub fn to_row_major(self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn diag(x: f64, y: f64) -> Self {
        Mat2::new(x, 0.0, 0.0, y)
    }

    /// `[[cosh t, sinh t], [sinh t, cosh t]]`.
    pub fn boost(t: f64) -> Self {
        Mat2::new(t.cosh(), t.sinh(), t.sinh(), t.cosh())
    }

    pub fn rotation(theta: f64) -> Self {
        Mat2::new(theta.cos(), theta.sin(), -theta.sin(), theta.cos())
    }

    /// Outer product `u vᵀ`.
    pub fn outer(u: [f64; 2], v: [f64; 2]) -> Self {
        Mat2::new(u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1])
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Adjugate; equals the inverse on SL(2,R).
    pub fn adj(&self) -> Self {
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// Entrywise (Frobenius) inner product, `Tr(Aᵀ B)`.
    pub fn frobenius_dot(&self, other: &Mat2) -> f64 {
        self.a * other.a + self.b * other.b + self.c * other.c + self.d * other.d
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// ∞-norm distance between entries.
    pub fn dist_inf(&self, other: &Mat2) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Rescales so that `det = 1`. Matrices with non-positive determinant are returned unchanged.
    pub fn sl2_normalized(&self) -> Self {
        let det = self.det();
        if det > 0.0 {
            self.scale(1.0 / det.sqrt())
        } else {
            *self
        }
    }

    /// Residual to ±Id in the ∞-norm (projective sign).
    pub fn residual_to_pm_identity(&self) -> f64 {
        self.dist_inf(&Mat2::IDENTITY)
            .min(self.dist_inf(&(-Mat2::IDENTITY)))
    }

    /// Real eigenvalues `(small, large)` by modulus, if the discriminant is positive.
    pub fn real_eigenvalues(&self) -> Option<(f64, f64)> {
        let tr = self.trace();
        let disc = tr * tr - 4.0 * self.det();
        if disc <= 0.0 {
            return None;
        }
        let root = disc.sqrt();
        // cancellation-free pair
        let big = 0.5 * (tr + tr.signum() * root);
        if big == 0.0 {
            return None;
        }
        let small = self.det() / big;
        Some((small, big))
    }

    /// Unit eigenvector for the eigenvalue `lambda`, first nonzero coordinate positive.
    pub fn eigenvector(&self, lambda: f64) -> [f64; 2] {
        let v1 = [self.b, lambda - self.a];
        let v2 = [lambda - self.d, self.c];
        let n1 = v1[0].hypot(v1[1]);
        let n2 = v2[0].hypot(v2[1]);
        let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
        let mut u = if n > 0.0 { [v[0] / n, v[1] / n] } else { [1.0, 0.0] };
        let lead = if u[0] != 0.0 { u[0] } else { u[1] };
        if lead < 0.0 {
            u = [-u[0], -u[1]];
        }
        u
    }

    /// Integer power by repeated squaring; negative exponents use the adjugate.
    pub fn powi(&self, n: i64) -> Self {
        let mut base = if n < 0 { self.adj() } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = Mat2::IDENTITY;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}
