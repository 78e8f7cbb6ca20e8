//! Small fixed-size linear algebra for 2D Gaussians.
//!
//! Everything here is closed-form: symmetric eigendecomposition, Cholesky
//! factorization and the principal real power of a 2×2 matrix.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// A 2-vector in pixel (or normalized) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    /// Unit vector in the same direction, or `None` for a zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Row-major 2×2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

/// Eigendecomposition of a symmetric 2×2 matrix, `major ≥ minor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen {
    pub major: f64,
    pub minor: f64,
    /// Unit eigenvector of the major eigenvalue.
    pub axis: Vec2,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub const fn from_rows(m: [[f64; 2]; 2]) -> Self {
        Self { m }
    }

    pub const fn diag(a: f64, d: f64) -> Self {
        Self::new(a, 0.0, 0.0, d)
    }

    pub fn scalar(s: f64) -> Self {
        Self::diag(s, s)
    }

    /// Counter-clockwise rotation in a y-down raster frame turns x toward +y.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, -s, s, c)
    }

    /// Rotation whose first column is the unit vector `dir`.
    pub fn rotation_from_direction(dir: Vec2) -> Self {
        let d = dir.normalized().unwrap_or(Vec2::new(1.0, 0.0));
        Self::new(d.x, -d.y, d.y, d.x)
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let inv = 1.0 / det;
        Some(Mat2::new(
            self.m[1][1] * inv,
            -self.m[0][1] * inv,
            -self.m[1][0] * inv,
            self.m[0][0] * inv,
        ))
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    /// `A · self · Aᵀ`, the transform law of a second-moment matrix.
    pub fn congruence(&self, a: &Mat2) -> Mat2 {
        *a * *self * a.transpose()
    }

    pub fn frobenius(&self) -> f64 {
        self.m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    pub fn asymmetry(&self) -> f64 {
        (self.m[0][1] - self.m[1][0]).abs()
    }

    pub fn symmetrized(&self) -> Mat2 {
        let off = 0.5 * (self.m[0][1] + self.m[1][0]);
        Mat2::new(self.m[0][0], off, off, self.m[1][1])
    }

    /// Eigenvalues and major axis of the symmetric part.
    pub fn sym_eigen(&self) -> SymEigen {
        let s = self.symmetrized();
        let (a, b, c) = (s.m[0][0], s.m[0][1], s.m[1][1]);
        let mean = 0.5 * (a + c);
        let radius = (0.5 * (a - c)).hypot(b);
        let theta = 0.5 * (2.0 * b).atan2(a - c);
        let (sin, cos) = theta.sin_cos();
        SymEigen {
            major: mean + radius,
            minor: mean - radius,
            axis: Vec2::new(cos, sin),
        }
    }

    /// Rebuild from eigenvalues and unit major axis.
    pub fn from_sym_eigen(e: &SymEigen) -> Mat2 {
        let r = Mat2::rotation_from_direction(e.axis);
        Mat2::diag(e.major, e.minor).congruence(&r)
    }

    /// Clamp the eigenvalues of the symmetric part from below.
    pub fn psd_projected(&self, floor: f64) -> Mat2 {
        let mut e = self.sym_eigen();
        if e.minor >= floor {
            return self.symmetrized();
        }
        e.major = e.major.max(floor);
        e.minor = floor;
        Mat2::from_sym_eigen(&e).symmetrized()
    }

    /// Lower-triangular `L` with `L Lᵀ = self`; `None` unless positive definite.
    pub fn cholesky(&self) -> Option<Mat2> {
        let a = self.m[0][0];
        if !(a > 0.0) {
            return None;
        }
        let l00 = a.sqrt();
        let l10 = self.m[1][0] / l00;
        let rem = self.m[1][1] - l10 * l10;
        if !(rem > 0.0) {
            return None;
        }
        Some(Mat2::new(l00, 0.0, l10, rem.sqrt()))
    }

    /// Principal real power `self^t`.
    ///
    /// Uses the two-point interpolation form `W^t = a₀ I + a₁ W` that holds
    /// for every 2×2 matrix (Cayley–Hamilton), with `a₀, a₁` fixed by the
    /// eigenvalues. Triangular inputs such as `L_i L̄⁻¹` are handled by the
    /// same path since their eigenvalues sit on the diagonal. Returns `None`
    /// when an eigenvalue lies on the closed negative real axis, where no
    /// principal real power exists.
    pub fn powf(&self, t: f64) -> Option<Mat2> {
        if t == 1.0 {
            return Some(*self);
        }
        if t == 0.0 {
            return Some(Mat2::IDENTITY);
        }
        let half_tr = 0.5 * self.trace();
        let disc = half_tr * half_tr - self.det();
        let (a0, a1) = if disc >= 0.0 {
            let root = disc.sqrt();
            let l1 = half_tr + root;
            let l2 = half_tr - root;
            if !(l2 > 0.0) {
                return None;
            }
            let scale = l1.abs().max(l2.abs());
            if l1 - l2 <= 1e-12 * scale {
                // Repeated eigenvalue: (W - λI)² = 0.
                let lam = 0.5 * (l1 + l2);
                let a1 = t * lam.powf(t - 1.0);
                (lam.powf(t) - a1 * lam, a1)
            } else {
                let log_ratio = (l1 / l2).ln();
                let a1 = l2.powf(t - 1.0) * (t * log_ratio).exp_m1() / log_ratio.exp_m1();
                (l1.powf(t) - a1 * l1, a1)
            }
        } else {
            let lam = Complex64::new(half_tr, (-disc).sqrt());
            let f = lam.powf(t);
            let a1 = f.im / lam.im;
            (f.re - a1 * lam.re, a1)
        };
        Some(Mat2::scalar(a0) + self.scale(a1))
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] - o.m[0][0],
            self.m[0][1] - o.m[0][1],
            self.m[1][0] - o.m[1][0],
            self.m[1][1] - o.m[1][1],
        )
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        (*a - *b).frobenius() <= tol
    }

    #[test]
    fn eigen_of_indefinite_matrix() {
        let e = Mat2::new(1.0, 2.0, 2.0, 1.0).sym_eigen();
        assert!((e.major - 3.0).abs() < 1e-12);
        assert!((e.minor + 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_round_trip() {
        let m = Mat2::new(5.0, -1.5, -1.5, 2.0);
        assert!(close(&Mat2::from_sym_eigen(&m.sym_eigen()), &m, 1e-12));
    }

    #[test]
    fn cholesky_reconstructs() {
        let m = Mat2::new(4.0, 2.0, 2.0, 3.0);
        let l = m.cholesky().unwrap();
        assert_eq!(l.m[0][1], 0.0);
        assert!(close(&(l * l.transpose()), &m, 1e-12));
        assert!(Mat2::new(1.0, 2.0, 2.0, 1.0).cholesky().is_none());
        assert!(Mat2::diag(0.0, 1.0).cholesky().is_none());
    }

    #[test]
    fn power_of_diagonal() {
        let p = Mat2::diag(2.0, 1.0).powf(0.5).unwrap();
        assert!(close(&p, &Mat2::diag(2f64.sqrt(), 1.0), 1e-12));
    }

    #[test]
    fn power_of_repeated_eigenvalue() {
        // Jordan block [[2,0],[1,2]]^t = [[2^t,0],[t 2^(t-1), 2^t]].
        let p = Mat2::new(2.0, 0.0, 1.0, 2.0).powf(0.5).unwrap();
        let s = 2f64.sqrt();
        assert!(close(&p, &Mat2::new(s, 0.0, 0.5 / s, s), 1e-12));
    }

    #[test]
    fn square_root_squares_back() {
        for m in [
            Mat2::new(3.0, 0.0, 1.7, 0.5),
            Mat2::new(2.0, 1.0, 0.3, 4.0),
            Mat2::rotation(0.7).scale(2.0),
            Mat2::new(1.0, 0.0, 5.0, 1.000000001),
        ] {
            let r = m.powf(0.5).unwrap();
            assert!(close(&(r * r), &m, 1e-9), "{m:?}");
            let c = m.powf(1.0 / 3.0).unwrap();
            assert!(close(&(c * c * c), &m, 1e-9), "{m:?}");
        }
    }

    #[test]
    fn power_rejects_negative_eigenvalue() {
        assert!(Mat2::diag(-1.0, 2.0).powf(0.5).is_none());
    }

    #[test]
    fn psd_projection_clamps() {
        let p = Mat2::new(1.0, 2.0, 2.0, 1.0).psd_projected(1e-9);
        let e = p.sym_eigen();
        assert!(e.minor >= 1e-9 - 1e-15);
        assert!((e.major - 3.0).abs() < 1e-12);
    }
}
