//! Discrete families of propagation directions and weights: quantized
//! waveguide modes (periodic transverse boundaries) or complex-contour
//! Gauss-Jacobi nodes for the infinite slab, plus the hemispheric
//! directional means taken over them.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::mat2::C2;

/// Direction cosines below this floor are rejected: the transport generator
/// carries 1/mu.
pub const MU_FLOOR: f64 = 1e-9;

/// Default complex-contour parameter for slab quadrature.
pub const DEFAULT_CONTOUR_A: f64 = 0.5;

/// Default node count for slab quadrature.
pub const DEFAULT_N_MU: usize = 64;

#[derive(Debug, Error)]
pub enum DirsetError {
    #[error("spatial dimension must be >= 2, got {0}")]
    InvalidDim(u32),
    #[error("grazing mode: direction cosine {mu:.3e} below floor {floor:.1e}")]
    GrazingMode { mu: f64, floor: f64 },
    #[error("tridiagonal eigensolve for the quadrature rule did not converge")]
    QuadratureFailure,
    #[error("direction set is empty")]
    EmptySet,
    #[error("value count {values} does not match direction count {directions}")]
    LengthMismatch { values: usize, directions: usize },
}

/// Volume of the unit ball in R^d, V_d = pi^(d/2) / Gamma(d/2 + 1).
/// Extended down to d = -1 (via the Gamma function) for the moment
/// normalization identities.
pub fn unit_ball_volume(d: i32) -> f64 {
    assert!(d >= -1, "unit_ball_volume defined for d >= -1");
    PI.powf(d as f64 / 2.0) / gamma_half(d + 2)
}

/// Surface area of the unit ball in R^d, S_d = d V_d.
pub fn unit_ball_surface(d: i32) -> f64 {
    assert!(d >= 1, "unit_ball_surface defined for d >= 1");
    d as f64 * unit_ball_volume(d)
}

/// Gamma(n/2) for integer n >= 1, exact by the recursion from
/// Gamma(1/2) = sqrt(pi) and Gamma(1) = 1.
fn gamma_half(n: i32) -> f64 {
    debug_assert!(n >= 1);
    let mut value = if n % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut k = if n % 2 == 0 { 2 } else { 1 };
    while k < n {
        value *= k as f64 / 2.0;
        k += 2;
    }
    value
}

/// Closed form of int_0^1 mu^kappa (1 - mu^2)^((d-3)/2) dmu
/// = V_(d+kappa-2) / (S_(d-1) V_(kappa-1)), the continuum limit of the
/// slab moment sums.
pub fn hemisphere_moment(d: u32, kappa: u32) -> f64 {
    unit_ball_volume(d as i32 + kappa as i32 - 2)
        / (unit_ball_surface(d as i32 - 1) * unit_ball_volume(kappa as i32 - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    WaveguidePeriodic,
    SlabQuadrature,
}

/// One propagation direction: cosine mu (complex on the slab contour),
/// quadrature weight, and combinatorial multiplicity.
#[derive(Debug, Clone, Copy)]
pub struct Direction {
    pub mu: Complex64,
    pub weight: Complex64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone)]
pub struct DirectionSet {
    kind: SetKind,
    dim: u32,
    directions: Vec<Direction>,
    /// Sum_i mult_i c_i mu_i^(kappa-1) for kappa = 0, 1.
    moment_norms: [Complex64; 2],
}

impl DirectionSet {
    /// Propagating modes of a waveguide with periodic transverse boundaries:
    /// mu_n = sqrt(1 - (n / (W/lambda))^2) over n in Z^(d-1) with |n| < W/lambda
    /// strictly, grouped by the integer norm |n|^2, all weights 1. Modes at
    /// exact cutoff (mu = 0, integer widths) have no longitudinal carrier
    /// wave and are excluded together with the evanescent ones.
    pub fn waveguide(d: u32, w_over_lambda: f64) -> Result<Self, DirsetError> {
        Self::waveguide_with_floor(d, w_over_lambda, MU_FLOOR)
    }

    pub fn waveguide_with_floor(
        d: u32,
        w_over_lambda: f64,
        mu_floor: f64,
    ) -> Result<Self, DirsetError> {
        if d < 2 {
            return Err(DirsetError::InvalidDim(d));
        }
        assert!(w_over_lambda > 0.0, "waveguide width must be positive");
        let w2 = w_over_lambda * w_over_lambda;
        // Counts of integer vectors in Z^(d-1) at each norm |n|^2 <= W^2;
        // multiplicity is combinatorial, keyed on the exact integer norm.
        let mut counts: BTreeMap<u64, u32> = BTreeMap::new();
        count_lattice_norms(d as usize - 1, w2, 0, &mut counts);
        let mut directions = Vec::with_capacity(counts.len());
        for (&n2, &mult) in &counts {
            let mu = (1.0 - n2 as f64 / w2).sqrt();
            if mu < mu_floor {
                return Err(DirsetError::GrazingMode { mu, floor: mu_floor });
            }
            directions.push(Direction {
                mu: Complex64::new(mu, 0.0),
                weight: Complex64::new(1.0, 0.0),
                multiplicity: mult,
            });
        }
        Ok(Self::from_directions(SetKind::WaveguidePeriodic, d, directions))
    }

    /// Gauss quadrature for weight (1-t)^((d-3)/2) on [0,1], mapped onto the
    /// complex contour mu(t) = t + i a t (1 - t^2). The contour parameter
    /// `a` must be positive whenever poles accumulate near the real axis
    /// (always, in production runs).
    pub fn slab(d: u32, n_mu: usize, contour_a: f64) -> Result<Self, DirsetError> {
        if d < 2 {
            return Err(DirsetError::InvalidDim(d));
        }
        assert!(n_mu >= 2, "slab quadrature needs at least two nodes");
        assert!(contour_a >= 0.0, "contour parameter must be non-negative");
        let alpha = (d as f64 - 3.0) / 2.0;
        let (nodes, weights) = gauss_jacobi_01(n_mu, alpha)?;
        let a = contour_a;
        let directions = nodes
            .iter()
            .zip(&weights)
            .map(|(&t, &w)| {
                let mu = Complex64::new(t, a * t * (1.0 - t * t));
                let mu_prime = Complex64::new(1.0, a * (1.0 - 3.0 * t * t));
                let one_minus_mu2 = Complex64::new(1.0, 0.0) - mu * mu;
                let c = mu_prime * mu * one_minus_mu2.powf(alpha) * (w / (1.0 - t).powf(alpha));
                Direction { mu, weight: c, multiplicity: 1 }
            })
            .collect();
        Ok(Self::from_directions(SetKind::SlabQuadrature, d, directions))
    }

    /// A single direction with unit weight; used for one-dimensional
    /// cross-checks against the wave-resolution solver.
    pub fn single(mu: f64) -> Self {
        assert!(mu > 0.0);
        Self::from_directions(
            SetKind::WaveguidePeriodic,
            2,
            vec![Direction {
                mu: Complex64::new(mu, 0.0),
                weight: Complex64::new(1.0, 0.0),
                multiplicity: 1,
            }],
        )
    }

    fn from_directions(kind: SetKind, dim: u32, directions: Vec<Direction>) -> Self {
        let mut norms = [Complex64::ZERO; 2];
        for d in &directions {
            let m = d.multiplicity as f64;
            norms[0] += d.weight * m / d.mu;
            norms[1] += d.weight * m;
        }
        Self { kind, dim, directions, moment_norms: norms }
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    /// Number of distinct direction cosines.
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Total mode count Sum_i mult_i (N_p for a waveguide set).
    pub fn mode_count(&self) -> u64 {
        self.directions.iter().map(|d| d.multiplicity as u64).sum()
    }

    /// Sum_i mult_i c_i mu_i^(kappa-1), kappa in {0, 1}.
    pub fn moment_norm(&self, kappa: u32) -> Complex64 {
        self.moment_norms[kappa as usize]
    }

    /// Hemispheric directional mean with moment kappa in {0, 1}:
    /// Sum_i mult_i c_i mu_i^(kappa-1) A_i / Sum_i mult_i c_i mu_i^(kappa-1).
    /// `values` holds the samples of one hemisphere, indexed like the set.
    pub fn directional_mean(&self, values: &[C2], kappa: u32) -> Result<C2, DirsetError> {
        if self.directions.is_empty() {
            return Err(DirsetError::EmptySet);
        }
        if values.len() != self.directions.len() {
            return Err(DirsetError::LengthMismatch {
                values: values.len(),
                directions: self.directions.len(),
            });
        }
        let mut sum = C2::zero();
        for (dir, v) in self.directions.iter().zip(values) {
            sum = sum + *v * self.mean_weight(dir, kappa);
        }
        Ok(sum * self.moment_norms[kappa as usize].inv())
    }

    /// Scalar version of [`Self::directional_mean`].
    pub fn directional_mean_scalar(
        &self,
        values: &[Complex64],
        kappa: u32,
    ) -> Result<Complex64, DirsetError> {
        if self.directions.is_empty() {
            return Err(DirsetError::EmptySet);
        }
        if values.len() != self.directions.len() {
            return Err(DirsetError::LengthMismatch {
                values: values.len(),
                directions: self.directions.len(),
            });
        }
        let mut sum = Complex64::ZERO;
        for (dir, v) in self.directions.iter().zip(values) {
            sum += *v * self.mean_weight(dir, kappa);
        }
        Ok(sum / self.moment_norms[kappa as usize])
    }

    fn mean_weight(&self, dir: &Direction, kappa: u32) -> Complex64 {
        let w = dir.weight * dir.multiplicity as f64;
        match kappa {
            0 => w / dir.mu,
            1 => w,
            _ => panic!("moment order must be 0 or 1"),
        }
    }
}

/// Counts lattice vectors of Z^dims at each squared norm strictly below
/// the budget W^2.
fn count_lattice_norms(dims_left: usize, budget: f64, acc: u64, counts: &mut BTreeMap<u64, u32>) {
    if dims_left == 0 {
        *counts.entry(acc).or_insert(0) += 1;
        return;
    }
    let n_max = budget.sqrt().ceil() as i64;
    for n in -n_max..=n_max {
        let n2 = (n * n) as u64;
        if (acc as f64 + n2 as f64) < budget {
            count_lattice_norms(dims_left - 1, budget, acc + n2, counts);
        }
    }
}

/// Nodes and weights of the n-point Gauss rule for weight (1-t)^alpha on
/// [0,1], by the Golub-Welsch eigensolve of the shifted Jacobi recurrence
/// (parameters alpha, beta = 0).
fn gauss_jacobi_01(n: usize, alpha: f64) -> Result<(Vec<f64>, Vec<f64>), DirsetError> {
    let beta = 0.0f64;
    let ab = alpha + beta;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        m[(k, k)] = (diag + 1.0) / 2.0;
        if k + 1 < n {
            let j = kf + 1.0;
            let b = if k == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((ab + 2.0) * (ab + 2.0) * (ab + 3.0))
            } else {
                4.0 * j * (j + alpha) * (j + beta) * (j + ab)
                    / ((2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0))
            };
            let off = b.sqrt() / 2.0;
            m[(k, k + 1)] = off;
            m[(k + 1, k)] = off;
        }
    }
    let eigen = m
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or(DirsetError::QuadratureFailure)?;
    // mu0 = int_0^1 (1-t)^alpha dt
    let mu0 = 1.0 / (alpha + 1.0);
    let mut pairs: Vec<(f64, f64)> = eigen
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let v0 = eigen.eigenvectors[(0, i)];
            (t, mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::LAMBDA3;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_ball_values() {
        assert_abs_diff_eq!(unit_ball_volume(2), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(unit_ball_surface(3), 4.0 * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(unit_ball_volume(1), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(unit_ball_volume(0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(unit_ball_volume(-1), 1.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn waveguide_25p5_mode_table() {
        let set = DirectionSet::waveguide(2, 25.5).unwrap();
        assert_eq!(set.mode_count(), 51);
        assert_eq!(set.len(), 26);
        let mu_min = set
            .directions()
            .iter()
            .map(|d| d.mu.re)
            .fold(f64::INFINITY, f64::min);
        let expect = (1.0 - (25.0f64 / 25.5).powi(2)).sqrt();
        assert_abs_diff_eq!(mu_min, expect, epsilon = 1e-15);
        assert_abs_diff_eq!(mu_min, 0.197_056, epsilon = 1e-6);
        let grazing = set
            .directions()
            .iter()
            .find(|d| (d.mu.re - expect).abs() < 1e-12)
            .unwrap();
        assert_eq!(grazing.multiplicity, 2);
    }

    #[test]
    fn waveguide_1p5_distinct_modes() {
        let set = DirectionSet::waveguide(2, 1.5).unwrap();
        assert_eq!(set.len(), 2);
        let mus: Vec<f64> = set.directions().iter().map(|d| d.mu.re).collect();
        assert!(mus.contains(&1.0));
        let mu1 = 5.0f64.sqrt() / 3.0;
        assert!(mus.iter().any(|&m| (m - mu1).abs() < 1e-15));
        let m1 = set.directions().iter().find(|d| d.mu.re < 0.9).unwrap();
        assert_eq!(m1.multiplicity, 2);
        assert_abs_diff_eq!(mu1, 0.745_356, epsilon = 1e-6);
    }

    #[test]
    fn waveguide_cutoff_modes_are_excluded() {
        // Integer widths put modes exactly at cutoff (mu = 0); they carry
        // no longitudinal carrier wave and are dropped from the set.
        let set = DirectionSet::waveguide(2, 1.0).unwrap();
        assert_eq!(set.mode_count(), 1);
        assert_eq!(set.directions()[0].mu.re, 1.0);
        let set = DirectionSet::waveguide(2, 51.0).unwrap();
        assert_eq!(set.mode_count(), 101); // n = -50..50; n = +-51 at cutoff
        let mu_min = set.directions().iter().map(|d| d.mu.re).fold(f64::INFINITY, f64::min);
        assert!(mu_min > 0.0);
    }

    #[test]
    fn waveguide_count_matches_closed_form_2d() {
        for w in [2.3, 5.5, 10.25, 17.9, 25.5, 33.1] {
            let set = DirectionSet::waveguide(2, w).unwrap();
            assert_eq!(set.mode_count(), 2 * (w as u64) + 1, "W/lambda = {w}");
        }
    }

    #[test]
    fn waveguide_3d_multiplicities() {
        // W/lambda = 1.5: |n|^2 in {0, 1, 2} with counts 1, 4, 4.
        let set = DirectionSet::waveguide(3, 1.5).unwrap();
        assert_eq!(set.mode_count(), 9);
        assert_eq!(set.len(), 3);
        let mults: Vec<u32> = set.directions().iter().map(|d| d.multiplicity).collect();
        assert_eq!(mults.iter().sum::<u32>(), 9);
        assert!(mults.contains(&1) && mults.contains(&4));
    }

    #[test]
    fn slab_normalization_examples() {
        // d=2, kappa=0, a=0: sum c_i / mu_i = pi/2.
        let set = DirectionSet::slab(2, 64, 0.0).unwrap();
        let s = set.moment_norm(0);
        assert!((s - Complex64::new(PI / 2.0, 0.0)).norm() < 1e-10);
        // d=3, kappa=0, a=0.5: contour deformation preserves the integral = 1.
        let set = DirectionSet::slab(3, 64, 0.5).unwrap();
        let s = set.moment_norm(0);
        assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn slab_contour_keeps_im_mu2_positive() {
        let set = DirectionSet::slab(2, 32, 0.5).unwrap();
        for d in set.directions() {
            let mu2 = d.mu * d.mu;
            assert!(mu2.im > 0.0, "Im(mu^2) = {} at mu = {}", mu2.im, d.mu);
        }
    }

    #[test]
    fn slab_moments_match_closed_form() {
        for d in [2u32, 3] {
            for kappa in [0u32, 1] {
                for a in [0.0, 0.3, 1.0] {
                    let set = DirectionSet::slab(d, 64, a).unwrap();
                    let closed = hemisphere_moment(d, kappa);
                    let err = (set.moment_norm(kappa) - Complex64::new(closed, 0.0)).norm();
                    assert!(err < 1e-9, "d={d} kappa={kappa} a={a}: err = {err:.2e}");
                }
            }
        }
    }

    #[test]
    fn directional_mean_of_constant_is_constant() {
        for set in [
            DirectionSet::waveguide(2, 5.5).unwrap(),
            DirectionSet::slab(2, 16, 0.5).unwrap(),
        ] {
            let vals = vec![LAMBDA3; set.len()];
            for kappa in [0, 1] {
                let m = set.directional_mean(&vals, kappa).unwrap();
                assert!(m.max_abs_diff(&LAMBDA3) < 1e-12);
            }
        }
    }

    #[test]
    fn directional_mean_two_direction_hand_value() {
        // mu = {1, 0.5}, unit weights, kappa = 0 so weights mu^-1 = {1, 2}:
        // (Lambda3 - 2 Lambda3) / 3 = -Lambda3 / 3.
        let set = DirectionSet::from_directions(
            SetKind::WaveguidePeriodic,
            2,
            vec![
                Direction { mu: Complex64::new(1.0, 0.0), weight: Complex64::ONE, multiplicity: 1 },
                Direction { mu: Complex64::new(0.5, 0.0), weight: Complex64::ONE, multiplicity: 1 },
            ],
        );
        let m = set.directional_mean(&[LAMBDA3, -LAMBDA3], 0).unwrap();
        assert!(m.max_abs_diff(&(LAMBDA3 * (-1.0 / 3.0))) < 1e-15);
    }

    #[test]
    fn directional_mean_single_direction_is_value() {
        let set = DirectionSet::single(0.7);
        let v = LAMBDA3 * Complex64::new(0.3, -0.2);
        assert!(set.directional_mean(&[v], 0).unwrap().max_abs_diff(&v) < 1e-15);
        assert!(set.directional_mean(&[v], 1).unwrap().max_abs_diff(&v) < 1e-15);
    }

    #[test]
    fn directional_mean_permutation_and_split_invariance() {
        let base = DirectionSet::waveguide(2, 3.5).unwrap();
        let vals: Vec<C2> = (0..base.len())
            .map(|i| LAMBDA3 * (i as f64 + 0.5) + crate::mat2::LAMBDA_PLUS * (0.1 * i as f64))
            .collect();
        let reference = base.directional_mean(&vals, 0).unwrap();

        // Permute.
        let mut dirs: Vec<Direction> = base.directions().to_vec();
        dirs.reverse();
        let permuted = DirectionSet::from_directions(SetKind::WaveguidePeriodic, 2, dirs);
        let mut vals_rev = vals.clone();
        vals_rev.reverse();
        let m_perm = permuted.directional_mean(&vals_rev, 0).unwrap();
        assert!(m_perm.max_abs_diff(&reference) < 1e-13);

        // Split one multiplicity-2 direction into two identical entries.
        let mut dirs: Vec<Direction> = Vec::new();
        let mut split_vals: Vec<C2> = Vec::new();
        for (d, v) in base.directions().iter().zip(&vals) {
            if d.multiplicity == 2 && dirs.len() == split_vals.len() && split_vals.len() < 3 {
                let half = Direction { multiplicity: 1, ..*d };
                dirs.push(half);
                dirs.push(half);
                split_vals.push(*v);
                split_vals.push(*v);
            } else {
                dirs.push(*d);
                split_vals.push(*v);
            }
        }
        let split = DirectionSet::from_directions(SetKind::WaveguidePeriodic, 2, dirs);
        let m_split = split.directional_mean(&split_vals, 0).unwrap();
        assert!(m_split.max_abs_diff(&reference) < 1e-13);
    }

    #[test]
    fn empty_set_is_rejected() {
        let set = DirectionSet::from_directions(SetKind::WaveguidePeriodic, 2, Vec::new());
        assert!(matches!(set.directional_mean(&[], 0), Err(DirsetError::EmptySet)));
    }
}
