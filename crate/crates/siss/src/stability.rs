//! Analytic and empirical stability of random Radon sampling sets.
//!
//! A sample set is stable when the normalized sampled Radon energy
//! `(1/n) sum_j |R_p f(p . x_j)|^2` brackets the signal norm from both
//! sides for every in-space signal. This module computes the constants that
//! enter the matrix-Bernstein failure bound for that event, evaluates the
//! bound itself, and estimates the success probability empirically by
//! seeded Monte Carlo.
//!
//! The constants, for a direction `p`, density `xi` and lattice grid:
//!
//! * `c_phi`: supremum over the square of the absolute shift sum
//!   `sum_l |phi(x - k_l)|` (equal to 1 for the bundled partition-of-unity
//!   generator),
//! * `c_theta = |cos| + |sin|`: half-width scale of the projected square,
//! * `c1p <= c2p`: extremal eigenvalues of the Gram matrix of the shifted
//!   profiles `R_p phi(. - p k_l)` on the projected window — the tightest
//!   constants with `c1p |c|^2 <= int |sum_l c_l R_p phi(t - tau_l)|^2 dt
//!   <= c2p |c|^2`,
//! * `m2 <= big_m2`: Riesz constants of the generator shifts on the square,
//! * `xi_lower <= xi_upper`: two-sided density bounds.

use crate::generator::{Direction, Generator};
use crate::lattice::{shift_gram, stability_constants, LatticeError, LatticeGrid, Signal};
use crate::piecewise::sorted_dedup;
use crate::quadrature::integrate_cells;
use crate::radon::project_signal;
use crate::sampling::{derive_seed, draw_samples, Density, SamplingError};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Errors raised while computing stability constants or bounds.
#[derive(Debug, Error)]
pub enum StabilityError {
    /// The shifted-profile Gram matrix is numerically singular, so the
    /// frame constants of this direction are meaningless. Happens when
    /// distinct lattice points project onto (nearly) the same abscissa,
    /// e.g. the diagonal direction on a symmetric lattice.
    #[error(
        "shifted-profile Gram is near-singular for this direction \
         (lambda_min = {lambda_min:.6e}, lambda_max = {lambda_max:.6e}); \
         the projected shifts are linearly dependent"
    )]
    NearSingularFrame { lambda_min: f64, lambda_max: f64 },
    /// `gamma` must lie in the open interval `(0, gamma_max)`.
    #[error("gamma = {gamma:.6e} is outside the admissible interval (0, {gamma_max:.6e})")]
    InadmissibleGamma { gamma: f64, gamma_max: f64 },
    #[error("trial count must be positive")]
    NoTrials,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// Every constant entering the Bernstein failure bound and the
/// sampled-energy bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// Supremum of the absolute shift sum over the observation square.
    pub c_phi: f64,
    /// `|cos| + |sin|` of the sampling direction; in `[1, sqrt(2)]`.
    pub c_theta: f64,
    /// Lower frame constant of the shifted profiles.
    pub c1p: f64,
    /// Upper frame constant of the shifted profiles.
    pub c2p: f64,
    /// Lower Riesz constant of the generator shifts on the square.
    pub m2: f64,
    /// Upper Riesz constant of the generator shifts on the square.
    pub big_m2: f64,
    /// Infimum of the sampling density over the square.
    pub xi_lower: f64,
    /// Supremum of the sampling density over the square.
    pub xi_upper: f64,
}

/// Supremum of `sum_l |phi(x - k_l)|` over the observation square,
/// evaluated on a 513x513 grid followed by local refinement around the
/// maximizer. For the bundled generator the shifts are nonnegative and sum
/// to one everywhere on the square, so the scan returns 1 exactly.
pub fn c_phi<G: Generator>(generator: &G, grid: &LatticeGrid) -> f64 {
    let k = grid.domain_half_width();
    let f = |x: f64, y: f64| {
        grid.points()
            .iter()
            .map(|&(i, j)| generator.eval(x - i as f64, y - j as f64).abs())
            .sum::<f64>()
    };
    let scan = |x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64, m: usize| {
        let mut best = (f64::NEG_INFINITY, x_lo, y_lo);
        for i in 0..=m {
            let x = x_lo + (x_hi - x_lo) * i as f64 / m as f64;
            for j in 0..=m {
                let y = y_lo + (y_hi - y_lo) * j as f64 / m as f64;
                let v = f(x, y);
                if v > best.0 {
                    best = (v, x, y);
                }
            }
        }
        best
    };
    let (mut best, mut bx, mut by) = scan(-k, k, -k, k, 512);
    let mut step = 2.0 * k / 512.0;
    for _ in 0..4 {
        let (v, x, y) = scan(
            (bx - step).max(-k),
            (bx + step).min(k),
            (by - step).max(-k),
            (by + step).min(k),
            32,
        );
        if v > best {
            best = v;
            bx = x;
            by = y;
        }
        step /= 16.0;
    }
    best
}

/// Extremal eigenvalues `(c1p, c2p)` of the Gram matrix of the shifted
/// profiles `R_p phi(. - tau_l)` over the projected window
/// `[-K (|cos|+|sin|), K (|cos|+|sin|)]`.
///
/// Each Gram entry is piecewise polynomial between the merged profile
/// breakpoints and is integrated exactly cell by cell. Fails when
/// `lambda_min < 1e-12 lambda_max`: the linear-independence hypothesis on
/// the shifted profiles is violated for this direction.
pub fn frame_constants<G: Generator>(
    generator: &G,
    grid: &LatticeGrid,
    direction: Direction,
) -> Result<(f64, f64), StabilityError> {
    let profile = generator.radon_profile(direction);
    let shifts = grid.projected_shifts(direction);
    let window = grid.domain_half_width() * direction.l1_norm();
    let w = profile.support_half_width();
    let base = profile.breakpoints();
    let q = shifts.len();
    let mut gram = DMatrix::zeros(q, q);
    for l in 0..q {
        for m in l..q {
            let (tl, tm) = (shifts[l], shifts[m]);
            let lo = (-window).max(tl.max(tm) - w);
            let hi = window.min(tl.min(tm) + w);
            if lo >= hi {
                continue;
            }
            let breaks = sorted_dedup(base.iter().flat_map(|b| [b + tl, b + tm]).collect(), 0.0);
            let f = |t: f64| profile.value(t - tl) * profile.value(t - tm);
            let v = integrate_cells(&f, lo, hi, &breaks);
            gram[(l, m)] = v;
            gram[(m, l)] = v;
        }
    }
    let eigen = gram.symmetric_eigenvalues();
    let (lambda_min, lambda_max) = (eigen.min(), eigen.max());
    if lambda_max <= 0.0 || lambda_min < 1e-12 * lambda_max {
        return Err(StabilityError::NearSingularFrame {
            lambda_min,
            lambda_max,
        });
    }
    Ok((lambda_min, lambda_max))
}

/// Assembles all constants of the failure bound for one experiment setup.
pub fn bound_constants<G: Generator>(
    generator: &G,
    grid: &LatticeGrid,
    direction: Direction,
    density: &Density,
) -> Result<BoundConstants, StabilityError> {
    let riesz = stability_constants(generator, grid)?;
    let (c1p, c2p) = frame_constants(generator, grid, direction)?;
    let (xi_lower, xi_upper) = density.bounds();
    Ok(BoundConstants {
        c_phi: c_phi(generator, grid),
        c_theta: direction.l1_norm(),
        c1p,
        c2p,
        m2: riesz.lower,
        big_m2: riesz.upper,
        xi_lower,
        xi_upper,
    })
}

/// Upper end of the admissible deviation interval:
/// `gamma_max = 2 K c1p xi_lower / M2^2`. Any `gamma` in `(0, gamma_max)`
/// keeps the lower end of the sampled-energy bracket positive.
pub fn admissible_gamma_max(domain_half_width: f64, constants: &BoundConstants) -> f64 {
    2.0 * domain_half_width * constants.c1p * constants.xi_lower / constants.big_m2.powi(2)
}

/// Two-sided bracket for the normalized sampled energy of a unit-norm
/// signal: with probability at least `1 - epsilon`,
///
/// ```text
/// 2 K c1p xi_l / M2^2 - gamma  <=  (1/n) sum_j |R_p f(p . x_j)|^2
///                              <=  2 sqrt(2) K c2p xi_u / m2^2 + gamma.
/// ```
pub fn sampled_energy_bracket(
    gamma: f64,
    domain_half_width: f64,
    constants: &BoundConstants,
) -> (f64, f64) {
    let k = domain_half_width;
    let lower = 2.0 * k * constants.c1p * constants.xi_lower / constants.big_m2.powi(2) - gamma;
    let upper = 2.0 * std::f64::consts::SQRT_2 * k * constants.c2p * constants.xi_upper
        / constants.m2.powi(2)
        + gamma;
    (lower, upper)
}

/// Matrix-Bernstein bound on the probability that some in-space signal
/// escapes the sampled-energy bracket:
///
/// ```text
/// epsilon = Q exp( -n m2^4 gamma^2 /
///     (8 K^2 c_theta^2 M2^2 [4 K^2 c_theta^2 c_phi^2 xi_u
///                            + gamma (c_phi^2 + xi_u m2^2) / 3]) ).
/// ```
///
/// Strictly decreasing in `n`, strictly increasing in the basis size.
/// Rejects `gamma` outside the open admissible interval.
pub fn bernstein_epsilon(
    n: usize,
    gamma: f64,
    domain_half_width: f64,
    basis_count: usize,
    constants: &BoundConstants,
) -> Result<f64, StabilityError> {
    let gamma_max = admissible_gamma_max(domain_half_width, constants);
    if !(gamma > 0.0 && gamma < gamma_max) {
        return Err(StabilityError::InadmissibleGamma { gamma, gamma_max });
    }
    let k2 = domain_half_width * domain_half_width;
    let ct2 = constants.c_theta * constants.c_theta;
    let m2_sq = constants.m2 * constants.m2;
    let cphi2 = constants.c_phi * constants.c_phi;
    let numerator = n as f64 * m2_sq * m2_sq * gamma * gamma;
    let denominator = 8.0
        * k2
        * ct2
        * constants.big_m2.powi(2)
        * (4.0 * k2 * ct2 * cphi2 * constants.xi_upper
            + gamma * (cphi2 + constants.xi_upper * m2_sq) / 3.0);
    Ok(basis_count as f64 * (-numerator / denominator).exp())
}

/// Outcome of a Monte Carlo stability experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub sample_count: usize,
    pub trials: usize,
    pub seed: u64,
    pub gamma: f64,
    /// Analytic failure bound for these parameters.
    pub epsilon_q: f64,
    /// Fraction of trials in which the sampled-energy bracket held.
    pub empirical_success_rate: f64,
    /// Smallest normalized sampled energy observed across trials.
    pub empirical_frame_lower: f64,
    /// Largest normalized sampled energy observed across trials.
    pub empirical_frame_upper: f64,
}

/// Draws a signal whose coefficients are i.i.d. standard normal, rescaled
/// to unit norm on the square (`|f|_L2(E_K) = 1` via the shift Gram).
pub fn random_unit_signal<G: Generator + Clone, R: Rng>(
    generator: &G,
    grid: &LatticeGrid,
    gram: &DMatrix<f64>,
    rng: &mut R,
) -> Result<Signal<G>, StabilityError> {
    for _ in 0..64 {
        let c = DVector::from_iterator(
            grid.len(),
            (0..grid.len()).map(|_| rng.sample::<f64, _>(StandardNormal)),
        );
        let norm = (gram * &c).dot(&c).max(0.0).sqrt();
        if norm > 1e-12 {
            let coeffs = c.iter().map(|v| v / norm).collect();
            return Ok(Signal::new(generator.clone(), grid.clone(), coeffs)?);
        }
    }
    unreachable!("Gaussian coefficient draws cannot all be annihilated by a nonzero Gram");
}

/// Estimates the probability of the sampled-energy bracket empirically.
///
/// Each trial draws an independent sample set and one random unit-norm
/// signal (a witness; the analytic bound covers all signals at once) and
/// records whether the two-sided bracket holds for it. Per-trial seeds are
/// derived from the master seed, so trials are order-independent and the
/// whole report is reproducible.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_stability<G: Generator + Clone>(
    generator: &G,
    grid: &LatticeGrid,
    direction: Direction,
    density: &Density,
    n: usize,
    trials: usize,
    gamma: f64,
    seed: u64,
) -> Result<StabilityReport, StabilityError> {
    if trials == 0 {
        return Err(StabilityError::NoTrials);
    }
    let k = grid.domain_half_width();
    let constants = bound_constants(generator, grid, direction, density)?;
    let epsilon_q = bernstein_epsilon(n, gamma, k, grid.len(), &constants)?;
    let (lower, upper) = sampled_energy_bracket(gamma, k, &constants);
    let gram = shift_gram(generator, grid);
    let mut successes = 0usize;
    let mut observed_lower = f64::INFINITY;
    let mut observed_upper = f64::NEG_INFINITY;
    for trial in 0..trials {
        let samples = draw_samples(density, n, derive_seed(seed, 2 * trial as u64))?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2 * trial as u64 + 1));
        let signal = random_unit_signal(generator, grid, &gram, &mut rng)?;
        let projected = project_signal(&signal, direction);
        let energy = samples
            .points
            .iter()
            .map(|&x| {
                let v = projected
                    .sample_at(x)
                    .expect("drawn samples lie inside the square");
                v * v
            })
            .sum::<f64>()
            / n as f64;
        if lower <= energy && energy <= upper {
            successes += 1;
        }
        observed_lower = observed_lower.min(energy);
        observed_upper = observed_upper.max(energy);
    }
    Ok(StabilityReport {
        sample_count: n,
        trials,
        seed,
        gamma,
        epsilon_q,
        empirical_success_rate: successes as f64 / trials as f64,
        empirical_frame_lower: observed_lower,
        empirical_frame_upper: observed_upper,
    })
}
