//! Quasiballistic closed-form solver: a single scalar self-consistent
//! equation for the ray amplitude f(mu), valid when the field is uniform in
//! the bulk (L of order ell or below), plus the generating function built
//! from its first moment. No grid integration is involved.

use num_complex::Complex64;
use thiserror::Error;

use crate::dirset::{DirectionSet, DirsetError};

use std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum QbError {
    #[error("fixed point did not converge in {iterations} iterations (last update {last_update:.3e})")]
    NoConvergence { iterations: usize, last_update: f64 },
    #[error("pole in the closed equation at direction {index}")]
    PoleHit { index: usize },
    #[error(transparent)]
    Dirset(#[from] DirsetError),
}

/// Converged state: per-direction amplitudes, their kappa = 0 hemispheric
/// mean, and sigma = sqrt(1 + gamma/(1-gamma) <f>^2) computed from that
/// mean (the relation holds exactly at output).
#[derive(Debug, Clone)]
pub struct QbState {
    pub f: Vec<Complex64>,
    pub mean_f: Complex64,
    pub sigma: Complex64,
    pub gamma: Complex64,
    pub iterations: usize,
    pub last_update: f64,
}

pub const DEFAULT_DAMPING: f64 = 0.5;

const MEAN_TOL: f64 = 1e-13;
const MAX_ITER: usize = 100_000;

fn tanh_saturating(z: Complex64) -> Complex64 {
    if z.re.abs() > 20.0 {
        Complex64::new(z.re.signum(), 0.0)
    } else {
        z.tanh()
    }
}

/// Evaluates the closed map for every direction at a given mean amplitude:
/// f(mu) = [1 - (1 - m) th] / [1 + (1 + gamma/(1-gamma) m) th],
/// th = tanh(beta sigma)/sigma, beta = (L/2ell)/mu,
/// sigma = sqrt(1 + gamma/(1-gamma) m^2) in the principal branch
/// (th is even in sigma so the branch cancels).
fn eval_map(
    set: &DirectionSet,
    half_depth: f64,
    gamma: Complex64,
    mean: Complex64,
) -> Result<(Vec<Complex64>, Complex64), QbError> {
    let one = Complex64::ONE;
    let ratio = gamma / (one - gamma);
    let sigma = (one + ratio * mean * mean).sqrt();
    let f = set
        .directions()
        .iter()
        .enumerate()
        .map(|(i, dir)| {
            let beta = half_depth / dir.mu;
            let th = tanh_saturating(beta * sigma) / sigma;
            let denom = one + (one + ratio * mean) * th;
            if denom.norm() < 1e-14 {
                return Err(QbError::PoleHit { index: i });
            }
            Ok((one - (one - mean) * th) / denom)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((f, sigma))
}

/// Damped fixed-point iteration on <f>0+ starting from 1. `l_over_ell` may
/// be 0 (ballistic: f = 1 identically).
pub fn qb_solve(
    set: &DirectionSet,
    l_over_ell: f64,
    gamma: Complex64,
    damping: f64,
) -> Result<QbState, QbError> {
    assert!(damping > 0.0 && damping <= 1.0);
    assert!(
        (gamma - Complex64::ONE).norm() > 0.0,
        "gamma = 1 is the singular point of the closed equation"
    );
    let half_depth = 0.5 * l_over_ell;
    let mut mean = Complex64::ONE;
    for iter in 1..=MAX_ITER {
        let (f, _) = eval_map(set, half_depth, gamma, mean)?;
        let new_mean = set.directional_mean_scalar(&f, 0)?;
        let update = (new_mean - mean).norm();
        mean += damping * (new_mean - mean);
        if update < MEAN_TOL {
            let (f, sigma) = eval_map(set, half_depth, gamma, mean)?;
            return Ok(QbState {
                f,
                mean_f: mean,
                sigma,
                gamma,
                iterations: iter,
                last_update: update,
            });
        }
    }
    let (f, _) = eval_map(set, half_depth, gamma, mean)?;
    let new_mean = set.directional_mean_scalar(&f, 0)?;
    Err(QbError::NoConvergence {
        iterations: MAX_ITER,
        last_update: (new_mean - mean).norm(),
    })
}

/// F(gamma) = <f>1+ / (1 - gamma).
pub fn qb_gen_fun(state: &QbState, set: &DirectionSet) -> Result<Complex64, QbError> {
    let m1 = set.directional_mean_scalar(&state.f, 1)?;
    Ok(m1 / (Complex64::ONE - state.gamma))
}

/// Convenience wrapper: rho(T) from the quasiballistic closed form.
pub fn qb_rho(
    set: &DirectionSet,
    l_over_ell: f64,
    t: f64,
    eta: f64,
    damping: f64,
) -> Result<f64, QbError> {
    let gamma = Complex64::new(1.0 / t, eta);
    let state = qb_solve(set, l_over_ell, gamma, damping)?;
    let f = qb_gen_fun(&state, set)?;
    Ok(f.im / (PI * t * t))
}

/// Residual of the closed equation per direction for a converged state.
pub fn closed_equation_residual(
    state: &QbState,
    set: &DirectionSet,
    l_over_ell: f64,
) -> Result<f64, QbError> {
    let mean = set.directional_mean_scalar(&state.f, 0)?;
    let (f_expect, _) = eval_map(set, 0.5 * l_over_ell, state.gamma, mean)?;
    Ok(state
        .f
        .iter()
        .zip(&f_expect)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}
