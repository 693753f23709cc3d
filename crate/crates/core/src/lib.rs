//! Solver for the disorder-averaged transmission-eigenvalue distribution
//! rho(T) of a scattering slab or waveguide.
//!
//! The computation integrates a self-consistent transport equation for a
//! direction-resolved 2x2 complex matrix radiance g(mu, x). Hemispheric
//! moments of g give a mean field Q(x) and a matrix current J(x); the
//! off-diagonal current entries at the contacts yield a generating function
//! F(gamma) whose imaginary part at gamma = 1/T + i0+ is the eigenvalue
//! density. Both quantized waveguide modes (periodic transverse boundaries)
//! and the infinite slab (complex-contour quadrature over direction cosines)
//! are supported, together with a closed-form quasiballistic solver and a
//! one-dimensional wave-resolution cross-check.

pub mod dirset;
pub mod mat2;
pub mod qb;
pub mod ray;
pub mod saddle1d;
pub mod sc;
pub mod spectrum;

pub use mat2::C2;
