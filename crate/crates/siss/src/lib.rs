//! Reconstruction of two-dimensional signals in a compactly supported
//! shift-invariant space from randomly located Radon samples.
//!
//! A signal is a finite combination `f = sum_l c_l phi(. - k_l)` of integer
//! shifts of a tensor-product B-spline generator, restricted to the centered
//! observation square `E_K = [-K, K]^2`. Along a fixed unit direction `p`,
//! the Radon transform of `f` collapses to a one-dimensional piecewise-cubic
//! profile, so line integrals through random points of `E_K` become point
//! evaluations of that profile. This crate provides:
//!
//! * the generator, its exact Radon profile, and a quadrature cross-check
//!   ([`generator`]);
//! * the shift lattice, signal evaluation, and Riesz-type stability
//!   constants of the shifted generators ([`lattice`]);
//! * projections of lattice signals and exact line-integral sampling
//!   ([`radon`]);
//! * random sample sets on the observation square together with the
//!   rank-one sample matrices entering the stability analysis
//!   ([`sampling`]);
//! * least-squares recovery of the coefficients from Radon samples
//!   ([`reconstruction`]);
//! * an analytic matrix-Bernstein failure bound and a Monte Carlo estimate
//!   of the sampling-set stability ([`stability`]);
//! * a small CLI (`siss`) exposing the above as reproducible experiments
//!   ([`cli`]).
//!
//! All randomness is driven by explicit `u64` seeds and all file outputs are
//! deterministic, so every experiment can be replayed bit for bit.

pub mod cli;
pub mod generator;
pub mod lattice;
pub mod piecewise;
pub mod quadrature;
pub mod radon;
pub mod reconstruction;
pub mod sampling;
pub mod stability;

pub use generator::{Direction, Generator, GeneratorError, RadonProfile, TensorB2};
pub use lattice::{LatticeError, LatticeGrid, Signal, StabilityConstants};
pub use radon::ProjectedSignal;
pub use reconstruction::{ReconstructionError, ReconstructionResult, SamplingMatrix};
pub use sampling::{Density, SampleSet, SamplingError};
pub use stability::{BoundConstants, StabilityError, StabilityReport};
