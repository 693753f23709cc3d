//! Integration of the matrix transport equation along one direction.
//!
//! The radiance is carried by two 2-vectors a and b whose ratios give the
//! projective parameters alpha = -a1/a2 and beta = b2/b1. Both vectors obey
//! the linear system dv/dx = P v and are propagated cell by cell with the
//! exact exponential of the cell-constant traceless generator,
//! v(x_{i+1}) = (1 + tanh(sigma)/sigma P dx) v(x_i), up to an irrelevant
//! global factor. Stability dictates the integration direction: each vector
//! starts where its boundary value is known and grows from there.

use num_complex::Complex64;
use thiserror::Error;

use crate::mat2::{C2, LAMBDA3};

/// Default number of grid cells across the disordered region.
pub const DEFAULT_N_X: usize = 1024;

#[derive(Debug, Error)]
pub enum RayError {
    #[error("Riccati pole on sample: |1 + alpha beta| below 1e-14 at node {node}")]
    ParamBlowup { node: usize },
    #[error("non-finite ray values at node {node}")]
    NonFinite { node: usize },
}

/// Uniform grid x_j = j dx, j = 0..=n_cells, spanning [0, 1] in units of
/// the slab thickness. The contacts sit exactly on the boundary nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n_cells: usize,
}

impl Grid {
    pub fn new(n_cells: usize) -> Self {
        assert!(n_cells >= 2, "grid needs at least two cells");
        Self { n_cells }
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub const fn contact_a(&self) -> usize {
        0
    }

    pub fn contact_b(&self) -> usize {
        self.n_cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hemisphere {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contact {
    A,
    B,
}

/// Physical parameters of one ray integration. Lengths are in units of the
/// slab thickness: `l_over_ell` is the optical thickness L/ell (0 for free
/// propagation) and `eps_hat` = eps L / k.
#[derive(Debug, Clone, Copy)]
pub struct RayParams {
    pub mu: Complex64,
    pub l_over_ell: f64,
    pub eps_hat: f64,
    pub gamma_a: Complex64,
    pub gamma_b: Complex64,
}

/// Matrix radiance of one direction and one hemisphere: samples on the
/// disordered-region side of every node, plus the two outer-side contact
/// samples g(x_a-) and g(x_b+).
#[derive(Debug, Clone)]
pub struct RaySamples {
    pub inner: Vec<C2>,
    pub at_a_outer: C2,
    pub at_b_outer: C2,
}

/// Bulk generator of the vector transport system for signed direction
/// cosine `mu`: P = -(L/ell) Q / (2 mu) - eps_hat Lambda3 / (2 mu).
/// Contact deltas are applied separately by [`contact_jump`].
pub fn bulk_generator(mu: Complex64, qtilde: &C2, l_over_ell: f64, eps_hat: f64) -> C2 {
    let s = -(0.5 * l_over_ell) / mu;
    let e = -(0.5 * eps_hat) / mu;
    *qtilde * s + LAMBDA3 * e
}

/// Contact factor exp(i gamma Lambda+-) applied to a vector; the generators
/// are nilpotent so the exponential truncates to 1 + i gamma Lambda+-.
/// Crossing a contact against the direction of increasing x uses -gamma.
pub fn contact_jump(v: [Complex64; 2], which: Contact, gamma: Complex64) -> [Complex64; 2] {
    let ig = Complex64::new(0.0, 1.0) * gamma;
    match which {
        Contact::A => [v[0] + ig * v[1], v[1]],
        Contact::B => [v[0], v[1] + ig * v[0]],
    }
}

/// tanh(sigma)/sigma from sigma^2; even in sigma, so branch-free. The
/// series window is wide enough that bulk cells rarely touch the complex
/// tanh (truncation below 1e-16 at the threshold).
fn tanh_over_sigma(sigma_sq: Complex64) -> Complex64 {
    let n = sigma_sq.norm();
    if n < 1e-4 {
        // tanh(s)/s = 1 - s^2/3 + 2 s^4/15 - 17 s^6/315 + ...; truncation
        // below 1e-17 at the window edge |s| = 1e-2.
        let s2 = sigma_sq;
        let inner = Complex64::new(2.0 / 15.0, 0.0) + s2 * (-17.0 / 315.0);
        Complex64::new(1.0, 0.0) + s2 * (Complex64::new(-1.0 / 3.0, 0.0) + s2 * inner)
    } else {
        let sigma = sigma_sq.sqrt();
        if sigma.re.abs() > 20.0 {
            // tanh saturates to +-1 with exponentially small error.
            Complex64::new(sigma.re.signum(), 0.0) / sigma
        } else {
            sigma.tanh() / sigma
        }
    }
}

/// Cell increment W = tanh(sigma)/sigma * P dx with sigma^2 = -det(P dx);
/// the forward factor is 1 + W and the backward factor 1 - W.
fn cell_increment(p_dx: C2) -> C2 {
    p_dx * tanh_over_sigma(p_dx.sigma_sq())
}

fn renormalize(v: &mut [Complex64; 2], node: usize) -> Result<(), RayError> {
    let m = v[0].norm().max(v[1].norm());
    if !m.is_finite() || m < 1e-300 {
        return Err(RayError::NonFinite { node });
    }
    let inv = 1.0 / m;
    v[0] *= inv;
    v[1] *= inv;
    Ok(())
}

/// Reconstructs g from the two Schopohl vectors at one node. With
/// alpha = -a1/a2 and beta = b2/b1 this is the projective form of
/// g = (1/(1+alpha beta)) [[1-alpha beta, 2 alpha], [2 beta, -1+alpha beta]];
/// the trace vanishes identically by construction.
fn reconstruct(a: [Complex64; 2], b: [Complex64; 2], node: usize) -> Result<C2, RayError> {
    let d = a[1] * b[0] - a[0] * b[1];
    let scale = (a[1] * b[0]).norm().max((a[0] * b[1]).norm());
    if d.norm() < 1e-14 * scale || d.norm() < 1e-300 {
        return Err(RayError::ParamBlowup { node });
    }
    let g11 = (a[1] * b[0] + a[0] * b[1]) / d;
    let g12 = -2.0 * a[0] * b[0] / d;
    let g21 = 2.0 * a[1] * b[1] / d;
    let g = C2::new(g11, g12, g21, -g11);
    if !g.is_finite() {
        return Err(RayError::NonFinite { node });
    }
    Ok(g)
}

/// Integrates the transport equation for one direction cosine and one
/// hemisphere through a frozen field Q(x) given on the grid nodes
/// (disordered-region side at the contacts). Cell generators are built from
/// the midpoint average of the two node values.
pub fn integrate_ray(
    params: &RayParams,
    hemisphere: Hemisphere,
    qtilde: &[C2],
    grid: &Grid,
) -> Result<RaySamples, RayError> {
    let n = grid.n_cells();
    assert_eq!(qtilde.len(), grid.n_nodes(), "field must be sampled on every node");
    let dx = grid.dx();

    // Cell increments W_j from the +mu generator; the -mu generator is its
    // negative, so all four passes share them.
    let mut w = Vec::with_capacity(n);
    for j in 0..n {
        let q_mid = (qtilde[j] + qtilde[j + 1]) * 0.5;
        let p = bulk_generator(params.mu, &q_mid, params.l_over_ell, params.eps_hat);
        w.push(cell_increment(p * dx));
    }
    let plus = |v: [Complex64; 2], j: usize| {
        let wj = &w[j];
        [
            v[0] + wj.m11 * v[0] + wj.m12 * v[1],
            v[1] + wj.m21 * v[0] + wj.m22 * v[1],
        ]
    };
    let minus = |v: [Complex64; 2], j: usize| {
        let wj = &w[j];
        [
            v[0] - wj.m11 * v[0] - wj.m12 * v[1],
            v[1] - wj.m21 * v[0] - wj.m22 * v[1],
        ]
    };

    let mut a_in = vec![[Complex64::ZERO; 2]; n + 1];
    let mut b_in = vec![[Complex64::ZERO; 2]; n + 1];
    let (a_out_a, a_out_b, b_out_a, b_out_b);

    match hemisphere {
        Hemisphere::Plus => {
            // a+ grows rightward from (0,1) at x_a-.
            let start = [Complex64::ZERO, Complex64::ONE];
            a_out_a = start;
            let mut v = contact_jump(start, Contact::A, params.gamma_a);
            a_in[0] = v;
            for j in 0..n {
                v = plus(v, j);
                renormalize(&mut v, j + 1)?;
                a_in[j + 1] = v;
            }
            a_out_b = contact_jump(a_in[n], Contact::B, params.gamma_b);

            // b+ grows leftward from (1,0) at x_b+.
            let start = [Complex64::ONE, Complex64::ZERO];
            b_out_b = start;
            let mut v = contact_jump(start, Contact::B, -params.gamma_b);
            b_in[n] = v;
            for j in (0..n).rev() {
                v = minus(v, j);
                renormalize(&mut v, j)?;
                b_in[j] = v;
            }
            b_out_a = contact_jump(b_in[0], Contact::A, -params.gamma_a);
        }
        Hemisphere::Minus => {
            // a- grows leftward from (0,1) at x_b+.
            let start = [Complex64::ZERO, Complex64::ONE];
            a_out_b = start;
            let mut v = contact_jump(start, Contact::B, -params.gamma_b);
            a_in[n] = v;
            for j in (0..n).rev() {
                v = plus(v, j);
                renormalize(&mut v, j)?;
                a_in[j] = v;
            }
            a_out_a = contact_jump(a_in[0], Contact::A, -params.gamma_a);

            // b- grows rightward from (1,0) at x_a-.
            let start = [Complex64::ONE, Complex64::ZERO];
            b_out_a = start;
            let mut v = contact_jump(start, Contact::A, params.gamma_a);
            b_in[0] = v;
            for j in 0..n {
                v = minus(v, j);
                renormalize(&mut v, j + 1)?;
                b_in[j + 1] = v;
            }
            b_out_b = contact_jump(b_in[n], Contact::B, params.gamma_b);
        }
    }

    let mut inner = Vec::with_capacity(n + 1);
    for j in 0..=n {
        inner.push(reconstruct(a_in[j], b_in[j], j)?);
    }
    Ok(RaySamples {
        inner,
        at_a_outer: reconstruct(a_out_a, b_out_a, 0)?,
        at_b_outer: reconstruct(a_out_b, b_out_b, n)?,
    })
}
