//! Generating function F(gamma) from converged currents and assembly of
//! the transmission-eigenvalue density rho(T) over a scan grid.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::dirset::DirectionSet;
use crate::ray::Grid;
use crate::sc::{self, QField, SolveSettings, TransportParams};

use std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("transmission must lie strictly inside (0, 1), got {0}")]
    DomainError(f64),
}

/// How gamma is split between the two contacts. Both give the same F for
/// the same physical gamma = gamma_a gamma_b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// gamma_a = gamma_b = sqrt(gamma), principal branch.
    Sqrt,
    /// gamma_a = gamma, gamma_b = 1; F needs only the current at contact A.
    AOnly,
}

impl Convention {
    pub fn gammas(&self, gamma: Complex64) -> (Complex64, Complex64) {
        match self {
            Convention::Sqrt => {
                let s = gamma.sqrt();
                (s, s)
            }
            Convention::AOnly => (gamma, Complex64::ONE),
        }
    }
}

/// F = i (gamma_a' J21(x_a-) + gamma_b' J12(x_b+)), with the derivative
/// weights fixed by gamma_a gamma_b' + gamma_a' gamma_b = 1.
pub fn gen_fun(qf: &QField, gamma: Complex64, convention: Convention) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    match convention {
        Convention::Sqrt => {
            let gp = 0.5 / gamma.sqrt();
            i * gp * (qf.jpar_a_outer.m21 + qf.jpar_b_outer.m12)
        }
        Convention::AOnly => i * qf.jpar_a_outer.m21,
    }
}

/// rho(T) = Im F(1/T + i0+) / (pi T^2).
pub fn rho_at(t: f64, f: Complex64) -> Result<f64, SpectrumError> {
    if !(0.0 < t && t < 1.0) {
        return Err(SpectrumError::DomainError(t));
    }
    Ok(f.im / (PI * t * t))
}

/// Scan grid clustered at T = 1: T_m = 1 - (1 - u_m)^exponent with u_m
/// uniform on [u_min, u_max]. The density has an integrable divergence at
/// T = 1; cubic clustering resolves it. Endpoints T = 0, 1 are excluded.
pub fn t_grid(count: usize, exponent: f64, u_min: f64, u_max: f64) -> Vec<f64> {
    assert!(count >= 2);
    assert!(0.0 < u_min && u_min < u_max && u_max < 1.0);
    (0..count)
        .map(|m| {
            let u = u_min + (u_max - u_min) * m as f64 / (count - 1) as f64;
            1.0 - (1.0 - u).powf(exponent)
        })
        .collect()
}

pub const DEFAULT_T_COUNT: usize = 199;
pub const DEFAULT_T_EXPONENT: f64 = 3.0;
pub const DEFAULT_T_U_MIN: f64 = 0.001;
pub const DEFAULT_T_U_MAX: f64 = 0.999;

pub fn default_t_grid() -> Vec<f64> {
    t_grid(DEFAULT_T_COUNT, DEFAULT_T_EXPONENT, DEFAULT_T_U_MIN, DEFAULT_T_U_MAX)
}

/// One scan point. `rho` keeps the raw value (tiny eta-induced negative
/// values are clamped only in reports); `error` records a failed point
/// without dropping the row.
#[derive(Debug, Clone)]
pub struct SpectrumRow {
    pub t: f64,
    pub gamma: Complex64,
    pub f: Complex64,
    pub rho: f64,
    pub iterations: usize,
    pub residual: f64,
    pub error: Option<String>,
}

impl SpectrumRow {
    pub fn rho_clamped(&self) -> f64 {
        if self.rho < 0.0 && self.rho >= -1e-6 {
            0.0
        } else {
            self.rho
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumTable {
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumTable {
    pub fn failed_points(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    /// Trapezoid of rho over the scan grid; converged points only.
    pub fn normalization(&self) -> f64 {
        trapezoid(self.rows.iter().filter(|r| r.error.is_none()).map(|r| (r.t, r.rho)))
    }

    /// Mean transmittance from the same table, trapezoid of T rho(T).
    pub fn mean_transmittance(&self) -> f64 {
        trapezoid(
            self.rows
                .iter()
                .filter(|r| r.error.is_none())
                .map(|r| (r.t, r.t * r.rho)),
        )
    }
}

fn trapezoid(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = points.collect();
    pts.windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// Everything that stays fixed across a scan.
#[derive(Debug, Clone)]
pub struct ScanJob {
    pub set: DirectionSet,
    pub grid: Grid,
    pub l_over_ell: f64,
    pub eps_hat: f64,
    pub settings: SolveSettings,
    pub convention: Convention,
}

/// Solves one transmission value: gamma = 1/T + i eta, contacts split per
/// the convention, self-consistent solve, then F and rho.
pub fn solve_point(t: f64, job: &ScanJob) -> SpectrumRow {
    let gamma = Complex64::new(1.0 / t, job.settings.eta);
    let (gamma_a, gamma_b) = job.convention.gammas(gamma);
    let params = TransportParams {
        l_over_ell: job.l_over_ell,
        eps_hat: job.eps_hat,
        gamma_a,
        gamma_b,
    };
    match sc::solve(&params, &job.set, &job.grid, &job.settings) {
        Ok(qf) => {
            let f = gen_fun(&qf, gamma, job.convention);
            let rho = f.im / (PI * t * t);
            let residual = qf.residual_history.last().copied().unwrap_or(0.0);
            SpectrumRow { t, gamma, f, rho, iterations: qf.iterations, residual, error: None }
        }
        Err(err) => {
            let (iterations, residual) = match &err {
                sc::ScError::NoConvergence { iterations, last_residual, .. } => {
                    (*iterations, *last_residual)
                }
                _ => (0, f64::NAN),
            };
            SpectrumRow {
                t,
                gamma,
                f: Complex64::new(f64::NAN, f64::NAN),
                rho: f64::NAN,
                iterations,
                residual,
                error: Some(err.to_string()),
            }
        }
    }
}

/// Runs the scan; points are independent jobs and the assembled table keeps
/// the input order. Failed points are flagged, not dropped.
pub fn scan(t_values: &[f64], job: &ScanJob) -> SpectrumTable {
    assert!(
        t_values.windows(2).all(|w| w[0] < w[1]),
        "scan grid must be strictly increasing"
    );
    assert!(
        t_values.iter().all(|&t| 0.0 < t && t < 1.0),
        "scan grid must lie inside (0, 1)"
    );
    let rows: Vec<SpectrumRow> = t_values
        .par_iter()
        .map(|&t| solve_point(t, job))
        .collect();
    SpectrumTable { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ray::Grid;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rho_inverts_the_formula() {
        // F = i pi 0.25^2 at T = 0.25 gives rho = 1.
        let f = c(0.0, PI * 0.25 * 0.25);
        assert!((rho_at(0.25, f).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rho_at(0.5, c(3.7, 0.0)).unwrap(), 0.0);
        assert!(rho_at(0.0, f).is_err());
        assert!(rho_at(1.0, f).is_err());
        assert!(rho_at(1.3, f).is_err());
    }

    #[test]
    fn t_grid_clusters_at_one() {
        let g = default_t_grid();
        assert_eq!(g.len(), 199);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[0] > 0.0 && *g.last().unwrap() < 1.0);
        // Spacing near T = 1 is much finer than near T = 0.
        let d_lo = g[1] - g[0];
        let d_hi = g[198] - g[197];
        assert!(d_hi < d_lo / 100.0);
    }

    #[test]
    fn ballistic_generating_function_a_only() {
        // With no disorder, F = 1/(1 - gamma) exactly.
        let set = crate::dirset::DirectionSet::waveguide(2, 5.5).unwrap();
        let job = ScanJob {
            set,
            grid: Grid::new(32),
            l_over_ell: 0.0,
            eps_hat: 0.0,
            settings: SolveSettings { eta: 1e-6, ..SolveSettings::default() },
            convention: Convention::AOnly,
        };
        let row = solve_point(0.5, &job);
        assert!(row.error.is_none());
        let expect = (c(1.0, 0.0) - row.gamma).inv();
        assert!((row.f - expect).norm() < 1e-10, "F = {} vs {}", row.f, expect);
        // rho(0.5) is tiny: all the weight is a narrow peak at T = 1.
        assert!(row.rho.abs() < 1e-5);
    }

    #[test]
    fn ballistic_generating_function_sqrt_convention_matches() {
        let set = crate::dirset::DirectionSet::waveguide(2, 5.5).unwrap();
        let job = ScanJob {
            set,
            grid: Grid::new(32),
            l_over_ell: 0.0,
            eps_hat: 0.0,
            settings: SolveSettings { eta: 1e-6, ..SolveSettings::default() },
            convention: Convention::Sqrt,
        };
        let row = solve_point(0.5, &job);
        let expect = (c(1.0, 0.0) - row.gamma).inv();
        assert!((row.f - expect).norm() < 1e-10);
    }

    #[test]
    fn scan_flags_failures_instead_of_dropping() {
        let set = crate::dirset::DirectionSet::waveguide(2, 3.5).unwrap();
        let job = ScanJob {
            set,
            grid: Grid::new(64),
            l_over_ell: 2.0,
            eps_hat: 0.0,
            settings: SolveSettings { max_iter: 2, ..SolveSettings::default() },
            convention: Convention::Sqrt,
        };
        let table = scan(&[0.3, 0.6, 0.9], &job);
        assert_eq!(table.rows.len(), 3);
        assert_eq!(table.failed_points(), 3);
        assert!(table.rows.iter().all(|r| r.error.is_some() && r.rho.is_nan()));
    }
}
