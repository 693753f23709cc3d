//! Exact 2x2 complex matrix kernel: algebra, the constant matrices
//! `LAMBDA3`, `LAMBDA_PLUS`, `LAMBDA_MINUS`, the traceless matrix
//! exponential, and the matrix sign function.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Relative trace tolerance accepted by [`C2::exp_traceless`].
pub const TRACELESS_TOL: f64 = 1e-12;

/// Below this |sigma| the hyperbolic functions switch to their Taylor series.
const SIGMA_SERIES_THRESHOLD: f64 = 1e-4;

/// Eigenvalue separation (relative to the matrix scale) below which the
/// matrix sign function is declared ill-conditioned.
const SIGN_SEPARATION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum Mat2Error {
    #[error("matrix is not traceless: |tr| = {trace_mag:.3e} with max entry {max_entry:.3e}")]
    NonTraceless { trace_mag: f64, max_entry: f64 },
    #[error("matrix sign undefined: {reason}")]
    DefectiveMatrix { reason: &'static str },
}

/// A 2x2 complex matrix stored by value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct C2 {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

/// diag(1, -1).
pub const LAMBDA3: C2 = C2::diag_re(1.0, -1.0);
/// Raising matrix [[0, 1], [0, 0]].
pub const LAMBDA_PLUS: C2 = C2 {
    m11: Complex64::ZERO,
    m12: Complex64::new(1.0, 0.0),
    m21: Complex64::ZERO,
    m22: Complex64::ZERO,
};
/// Lowering matrix [[0, 0], [1, 0]].
pub const LAMBDA_MINUS: C2 = C2 {
    m11: Complex64::ZERO,
    m12: Complex64::ZERO,
    m21: Complex64::new(1.0, 0.0),
    m22: Complex64::ZERO,
};

impl C2 {
    pub const fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub const fn diag_re(a: f64, d: f64) -> Self {
        Self {
            m11: Complex64::new(a, 0.0),
            m12: Complex64::ZERO,
            m21: Complex64::ZERO,
            m22: Complex64::new(d, 0.0),
        }
    }

    pub const fn zero() -> Self {
        Self::diag_re(0.0, 0.0)
    }

    pub const fn identity() -> Self {
        Self::diag_re(1.0, 1.0)
    }

    pub fn trace(&self) -> Complex64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn commutator(&self, other: &C2) -> C2 {
        *self * *other - *other * *self
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.m11
            .norm()
            .max(self.m12.norm())
            .max(self.m21.norm())
            .max(self.m22.norm())
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &C2) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m21.is_finite() && self.m22.is_finite()
    }

    pub fn mul_vec(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }

    /// Inverse by adjugate; `None` when the determinant underflows.
    pub fn inverse(&self) -> Option<C2> {
        let det = self.det();
        if det.norm() < 1e-300 || !det.is_finite() {
            return None;
        }
        Some(C2::new(self.m22 / det, -self.m12 / det, -self.m21 / det, self.m11 / det))
    }

    /// For a traceless matrix, sigma^2 = m11^2 + m12 m21 = -det.
    pub fn sigma_sq(&self) -> Complex64 {
        self.m11 * self.m11 + self.m12 * self.m21
    }

    /// exp(A) = cosh(sigma) I + sinh(sigma)/sigma A for traceless A, with
    /// sigma = sqrt(A11^2 + A12 A21). The sigma -> 0 limit is handled by a
    /// series branch; both sign choices of the square root give the same
    /// result since cosh and sinh(s)/s are even.
    pub fn exp_traceless(&self) -> Result<C2, Mat2Error> {
        let trace_mag = self.trace().norm();
        let max_entry = self.max_abs();
        if trace_mag > TRACELESS_TOL * max_entry {
            return Err(Mat2Error::NonTraceless { trace_mag, max_entry });
        }
        let (cosh, sinhc) = cosh_sinhc(self.sigma_sq());
        Ok(C2::identity() * cosh + *self * sinhc)
    }

    /// Matrix sign via the spectral decomposition of a 2x2 matrix,
    /// sign(A) = s2 I + (s1 - s2) (A - l2 I) / (l1 - l2),
    /// where l1, l2 are the eigenvalues and s = sign(Re l).
    pub fn msign(&self) -> Result<C2, Mat2Error> {
        let tr = self.trace();
        let half_tr = tr * 0.5;
        let disc = (half_tr * half_tr - self.det()).sqrt();
        let l1 = half_tr + disc;
        let l2 = half_tr - disc;
        let s1 = re_sign(l1)?;
        let s2 = re_sign(l2)?;
        if s1 == s2 {
            return Ok(C2::identity() * Complex64::new(s1, 0.0));
        }
        let sep = (l1 - l2).norm();
        if sep <= SIGN_SEPARATION_TOL * self.max_abs() {
            return Err(Mat2Error::DefectiveMatrix {
                reason: "eigenvalue separation below conditioning threshold",
            });
        }
        let p1 = (*self - C2::identity() * l2) * ((l1 - l2).inv());
        Ok(C2::identity() * Complex64::new(s2, 0.0) + p1 * Complex64::new(s1 - s2, 0.0))
    }
}

fn re_sign(l: Complex64) -> Result<f64, Mat2Error> {
    if l.re > 0.0 {
        Ok(1.0)
    } else if l.re < 0.0 {
        Ok(-1.0)
    } else {
        Err(Mat2Error::DefectiveMatrix {
            reason: "eigenvalue with vanishing real part",
        })
    }
}

/// (cosh(sigma), sinh(sigma)/sigma) from sigma^2, series branch near zero.
pub(crate) fn cosh_sinhc(sigma_sq: Complex64) -> (Complex64, Complex64) {
    let sigma = sigma_sq.sqrt();
    if sigma.norm() < SIGMA_SERIES_THRESHOLD {
        cosh_sinhc_series(sigma_sq)
    } else {
        (sigma.cosh(), sigma.sinh() / sigma)
    }
}

/// Three-term Taylor expansions in sigma^2; the truncation error at the
/// branch threshold |sigma| = 1e-4 is ~1e-28, far below working precision.
fn cosh_sinhc_series(s2: Complex64) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    let cosh = one + s2 * (0.5 + s2 * (1.0 / 24.0));
    let sinhc = one + s2 * (1.0 / 6.0 + s2 * (1.0 / 120.0));
    (cosh, sinhc)
}

impl Add for C2 {
    type Output = C2;
    fn add(self, o: C2) -> C2 {
        C2::new(self.m11 + o.m11, self.m12 + o.m12, self.m21 + o.m21, self.m22 + o.m22)
    }
}

impl Sub for C2 {
    type Output = C2;
    fn sub(self, o: C2) -> C2 {
        C2::new(self.m11 - o.m11, self.m12 - o.m12, self.m21 - o.m21, self.m22 - o.m22)
    }
}

impl Neg for C2 {
    type Output = C2;
    fn neg(self) -> C2 {
        C2::new(-self.m11, -self.m12, -self.m21, -self.m22)
    }
}

impl Mul for C2 {
    type Output = C2;
    fn mul(self, o: C2) -> C2 {
        C2::new(
            self.m11 * o.m11 + self.m12 * o.m21,
            self.m11 * o.m12 + self.m12 * o.m22,
            self.m21 * o.m11 + self.m22 * o.m21,
            self.m21 * o.m12 + self.m22 * o.m22,
        )
    }
}

impl Mul<Complex64> for C2 {
    type Output = C2;
    fn mul(self, s: Complex64) -> C2 {
        C2::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }
}

impl Mul<f64> for C2 {
    type Output = C2;
    fn mul(self, s: f64) -> C2 {
        C2::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }
}
