//! Random sample locations on the observation square and the sample
//! statistics entering the stability analysis.
//!
//! Observation points are drawn i.i.d. from a bounded, strictly positive
//! density on `E_K = [-K, K]^2` by rejection sampling under a constant
//! envelope, driven by a counter-based seeded generator so every sample set
//! is reproducible from a single `u64`.
//!
//! Each observation point `x` contributes a rank-one matrix
//! `Psi(x) = v(x) v(x)'` with `v(x)_l = R_p phi(p . x - p . k_l)`; the
//! deviation of the empirical mean of `Psi` from its expectation is what
//! the matrix Bernstein bound controls. Expectations over the density
//! reduce, by integrating first along each projection line, to
//! one-dimensional integrals against a line-weight function, which keeps
//! them exact for the uniform density and cheap for smooth ones.

use crate::generator::{chord_length, line_box_interval, Direction, Generator, RadonProfile};
use crate::lattice::{LatticeError, Signal};
use crate::piecewise::sorted_dedup;
use crate::quadrature::{
    integrate2d_adaptive, integrate_adaptive, integrate_cells, QuadratureError,
};
use crate::radon::{corner_projections, project_signal, ProjectedSignal};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Relative slack allowed when checking densities against their declared
/// envelope and positivity bounds.
const ENVELOPE_SLACK: f64 = 1e-9;

/// Errors for density construction, sampling, and sample statistics.
#[derive(Debug, Error)]
pub enum SamplingError {
    /// Zero samples were requested.
    #[error("sample count must be at least 1")]
    EmptySampleRequest,
    /// Density parameters are out of range.
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    /// The density exceeded its declared constant envelope.
    #[error("density value {pdf:.6e} at ({x}, {y}) exceeds the declared envelope {bound:.6e}")]
    EnvelopeViolation {
        x: f64,
        y: f64,
        pdf: f64,
        bound: f64,
    },
    /// Rejection sampling used up its proposal budget.
    #[error("rejection sampling exhausted {budget} proposals while drawing {n} points")]
    ProposalBudget { budget: u64, n: usize },
    /// The density does not integrate to one.
    #[error("density mass is {mass:.8}, expected 1 within 1e-6")]
    NotNormalized { mass: f64 },
    /// A statistic requiring a unit-norm signal received something else.
    #[error("signal must have unit L2 norm on the observation square (got {norm:.6e})")]
    SignalNotNormalized { norm: f64 },
    /// A sample-set CSV file could not be parsed.
    #[error("sample CSV parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },
    /// An adaptive quadrature inside a density computation failed.
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone)]
enum DensityKind {
    Uniform,
    /// Gaussian restricted to the square and renormalized to unit mass;
    /// `norm` is the mass of the unrestricted kernel over the square.
    Gaussian {
        center: (f64, f64),
        sigma: f64,
        norm: f64,
    },
}

/// A bounded, strictly positive sampling density on the observation square,
/// together with its constant envelope bounds.
#[derive(Debug, Clone)]
pub struct Density {
    kind: DensityKind,
    domain_half_width: f64,
    lower: f64,
    upper: f64,
}

impl Density {
    /// The uniform density `1 / (4 K^2)` on `[-K, K]^2`.
    pub fn uniform(domain_half_width: f64) -> Result<Self, SamplingError> {
        let k = domain_half_width;
        if !k.is_finite() || k <= 0.0 {
            return Err(SamplingError::InvalidDensity(format!(
                "domain half-width must be positive and finite (got {k})"
            )));
        }
        let level = 1.0 / (4.0 * k * k);
        Ok(Self {
            kind: DensityKind::Uniform,
            domain_half_width: k,
            lower: level,
            upper: level,
        })
    }

    /// An isotropic Gaussian centered inside the square, truncated to the
    /// square and renormalized to unit mass.
    pub fn truncated_gaussian(
        domain_half_width: f64,
        center: (f64, f64),
        sigma: f64,
    ) -> Result<Self, SamplingError> {
        let k = domain_half_width;
        if !k.is_finite() || k <= 0.0 {
            return Err(SamplingError::InvalidDensity(format!(
                "domain half-width must be positive and finite (got {k})"
            )));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(SamplingError::InvalidDensity(format!(
                "gaussian sigma must be positive and finite (got {sigma})"
            )));
        }
        if !center.0.is_finite()
            || !center.1.is_finite()
            || center.0.abs() > k
            || center.1.abs() > k
        {
            return Err(SamplingError::InvalidDensity(format!(
                "gaussian center ({}, {}) must lie in the observation square [-{k}, {k}]^2",
                center.0, center.1
            )));
        }
        let axis_mass = |mu: f64| {
            integrate_adaptive(
                &|u: f64| (-0.5 * ((u - mu) / sigma).powi(2)).exp(),
                -k,
                k,
                1e-14,
            )
        };
        let norm = axis_mass(center.0)? * axis_mass(center.1)?;
        // The peak sits at the center; the minimum over the square is at
        // the corner farthest from the center.
        let fx = if center.0 >= 0.0 { -k } else { k };
        let fy = if center.1 >= 0.0 { -k } else { k };
        let d2 = (fx - center.0).powi(2) + (fy - center.1).powi(2);
        let upper = 1.0 / norm;
        let lower = (-0.5 * d2 / (sigma * sigma)).exp() / norm;
        if lower <= 0.0 || !upper.is_finite() {
            return Err(SamplingError::InvalidDensity(format!(
                "gaussian is not strictly positive on the square within f64 \
                 (lower bound {lower:.3e}); increase sigma"
            )));
        }
        Ok(Self {
            kind: DensityKind::Gaussian {
                center,
                sigma,
                norm,
            },
            domain_half_width: k,
            lower,
            upper,
        })
    }

    /// Density value; exactly zero outside the observation square.
    pub fn pdf(&self, x: f64, y: f64) -> f64 {
        let k = self.domain_half_width;
        if x.abs() > k || y.abs() > k {
            return 0.0;
        }
        match &self.kind {
            DensityKind::Uniform => self.upper,
            DensityKind::Gaussian {
                center,
                sigma,
                norm,
            } => {
                let d2 = (x - center.0).powi(2) + (y - center.1).powi(2);
                (-0.5 * d2 / (sigma * sigma)).exp() / norm
            }
        }
    }

    /// Constant bounds `(lower, upper)` with
    /// `lower <= pdf <= upper` on the observation square.
    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn domain_half_width(&self) -> f64 {
        self.domain_half_width
    }

    /// Short descriptive label used in file headers.
    pub fn tag(&self) -> String {
        match &self.kind {
            DensityKind::Uniform => "uniform".to_string(),
            DensityKind::Gaussian { center, sigma, .. } => {
                format!(
                    "gaussian(center=({},{}),sigma={})",
                    center.0, center.1, sigma
                )
            }
        }
    }

    /// Re-checks the declared properties numerically: the envelope bounds on
    /// an inclusive 101 x 101 grid and unit mass within `1e-6`.
    pub fn validate(&self) -> Result<(), SamplingError> {
        let k = self.domain_half_width;
        for i in 0..=100 {
            for j in 0..=100 {
                let x = -k + 2.0 * k * (i as f64) / 100.0;
                let y = -k + 2.0 * k * (j as f64) / 100.0;
                let p = self.pdf(x, y);
                if p > self.upper * (1.0 + ENVELOPE_SLACK) {
                    return Err(SamplingError::EnvelopeViolation {
                        x,
                        y,
                        pdf: p,
                        bound: self.upper,
                    });
                }
                if p < self.lower * (1.0 - ENVELOPE_SLACK) {
                    return Err(SamplingError::InvalidDensity(format!(
                        "density value {p:.6e} at ({x}, {y}) undercuts the declared \
                         lower bound {:.6e}",
                        self.lower
                    )));
                }
            }
        }
        let mass = match &self.kind {
            DensityKind::Uniform => 1.0,
            DensityKind::Gaussian { .. } => {
                integrate2d_adaptive(&|x, y| self.pdf(x, y), (-k, k), (-k, k), 1e-9)?
            }
        };
        if (mass - 1.0).abs() > 1e-6 {
            return Err(SamplingError::NotNormalized { mass });
        }
        Ok(())
    }

    /// Weight of the projection line `{ p . x = t }` under the density:
    /// `w(t) = int xi ds` along the chord, so that for any function `g`,
    /// `E[g(p . x)] = int g(t) w(t) dt`. Exact for the uniform density.
    pub fn line_weight(
        &self,
        direction: Direction,
        t: f64,
        tol: f64,
    ) -> Result<f64, SamplingError> {
        let k = self.domain_half_width;
        match &self.kind {
            DensityKind::Uniform => Ok(chord_length(direction, t, k) * self.upper),
            DensityKind::Gaussian { .. } => {
                let Some((lo, hi)) = line_box_interval(direction, t, k) else {
                    return Ok(0.0);
                };
                let (c, s) = (direction.cos(), direction.sin());
                let f = |sp: f64| self.pdf(t * c - sp * s, t * s + sp * c);
                Ok(integrate_adaptive(&f, lo, hi, tol)?)
            }
        }
    }
}

/// A reproducible set of observation points with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<(f64, f64)>,
    pub seed: u64,
    pub density_tag: String,
    pub domain_half_width: f64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Deterministic CSV form: provenance header comments, a column header,
    /// then one `x,y` row per point with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# siss samples\n");
        out.push_str(&format!("# seed = {}\n", self.seed));
        out.push_str(&format!("# density = {}\n", self.density_tag));
        out.push_str(&format!("# K = {:.16e}\n", self.domain_half_width));
        out.push_str("x,y\n");
        for &(x, y) in &self.points {
            out.push_str(&format!("{x:.16e},{y:.16e}\n"));
        }
        out
    }

    /// Parses the output of [`SampleSet::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, SamplingError> {
        let mut seed = None;
        let mut density_tag = None;
        let mut domain_half_width = None;
        let mut points = Vec::new();
        let mut saw_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |message: String| SamplingError::CsvParse {
                line: idx + 1,
                message,
            };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("seed =") {
                    seed = Some(v.trim().parse::<u64>().map_err(|e| err(e.to_string()))?);
                } else if let Some(v) = rest.strip_prefix("density =") {
                    density_tag = Some(v.trim().to_string());
                } else if let Some(v) = rest.strip_prefix("K =") {
                    domain_half_width =
                        Some(v.trim().parse::<f64>().map_err(|e| err(e.to_string()))?);
                }
                continue;
            }
            if line == "x,y" {
                saw_header = true;
                continue;
            }
            if !saw_header {
                return Err(err("data row before the x,y header".into()));
            }
            let (xs, ys) = line
                .split_once(',')
                .ok_or_else(|| err("expected two comma-separated values".into()))?;
            let x = xs.trim().parse::<f64>().map_err(|e| err(e.to_string()))?;
            let y = ys.trim().parse::<f64>().map_err(|e| err(e.to_string()))?;
            points.push((x, y));
        }
        let missing = |what: &str| SamplingError::CsvParse {
            line: 0,
            message: format!("missing `# {what} = ...` header"),
        };
        Ok(Self {
            points,
            seed: seed.ok_or_else(|| missing("seed"))?,
            density_tag: density_tag.ok_or_else(|| missing("density"))?,
            domain_half_width: domain_half_width.ok_or_else(|| missing("K"))?,
        })
    }
}

/// Derives a decorrelated per-task seed from a master seed and an index
/// (SplitMix64 finalizer applied twice), so consecutive indices produce
/// unrelated generator streams.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(master ^ mix(index))
}

/// Draws `n` i.i.d. points from the density by rejection sampling under its
/// constant envelope. Identical `(density, n, seed)` inputs reproduce the
/// identical point list.
pub fn draw_samples(density: &Density, n: usize, seed: u64) -> Result<SampleSet, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptySampleRequest);
    }
    let k = density.domain_half_width;
    let (_, upper) = density.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = 1000 * (n as u64) + 1000;
    let mut proposals = 0u64;
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        if proposals >= budget {
            return Err(SamplingError::ProposalBudget { budget, n });
        }
        proposals += 1;
        let x = -k + 2.0 * k * rng.gen::<f64>();
        let y = -k + 2.0 * k * rng.gen::<f64>();
        let u: f64 = rng.gen();
        let pdf = density.pdf(x, y);
        if pdf > upper * (1.0 + ENVELOPE_SLACK) {
            return Err(SamplingError::EnvelopeViolation {
                x,
                y,
                pdf,
                bound: upper,
            });
        }
        if u * upper <= pdf {
            points.push((x, y));
        }
    }
    Ok(SampleSet {
        points,
        seed,
        density_tag: density.tag(),
        domain_half_width: k,
    })
}

/// The rank-one sample matrix `Psi(x) = v v'` with
/// `v_l = R_p phi(p . x - tau_l)` over the projected shifts `tau`.
/// Positive semi-definite by construction.
pub fn psi_matrix(profile: &RadonProfile, shifts: &[f64], x: (f64, f64)) -> DMatrix<f64> {
    let t = profile.direction().dot(x);
    let v = DVector::from_iterator(
        shifts.len(),
        shifts.iter().map(|tau| profile.value(t - tau)),
    );
    &v * v.transpose()
}

/// Expectation of [`psi_matrix`] under the density, computed entrywise as
/// one-dimensional integrals of `R_p phi(t - tau_l) R_p phi(t - tau_m)`
/// against the density's line weight. For the uniform density every entry
/// is integrated exactly (the integrand is piecewise polynomial on the
/// merged cell grid); smooth densities use adaptive quadrature per cell.
pub fn expected_psi(
    profile: &RadonProfile,
    shifts: &[f64],
    density: &Density,
    tol: f64,
) -> Result<DMatrix<f64>, SamplingError> {
    let q = shifts.len();
    let k = density.domain_half_width();
    let d = profile.direction();
    let window = k * d.l1_norm();
    let w = profile.support_half_width();
    let base = profile.breakpoints();
    let corners = corner_projections(d, k);
    let mut out = DMatrix::zeros(q, q);
    for l in 0..q {
        for m in l..q {
            let (tl, tm) = (shifts[l], shifts[m]);
            let lo = (-window).max(tl.max(tm) - w);
            let hi = window.min(tl.min(tm) + w);
            if lo >= hi {
                continue;
            }
            let mut breaks: Vec<f64> = base
                .iter()
                .flat_map(|b| [b + tl, b + tm])
                .chain(corners.iter().copied())
                .collect();
            breaks = sorted_dedup(breaks, 0.0);
            let value = match &density.kind {
                DensityKind::Uniform => {
                    let f = |t: f64| {
                        profile.value(t - tl)
                            * profile.value(t - tm)
                            * chord_length(d, t, k)
                            * density.upper
                    };
                    integrate_cells(&f, lo, hi, &breaks)
                }
                DensityKind::Gaussian { .. } => {
                    let weight_tol = tol / (4.0 * (hi - lo).max(1.0));
                    let f = |t: f64| {
                        let wt = density
                            .line_weight(d, t, weight_tol)
                            .expect("gaussian line weight integration converges");
                        profile.value(t - tl) * profile.value(t - tm) * wt
                    };
                    let mut acc = 0.0;
                    let mut cursor = lo;
                    let cell_tol = tol / (breaks.len() as f64 + 1.0);
                    for &b in breaks.iter().filter(|&&b| b > lo && b < hi) {
                        acc += integrate_adaptive(&f, cursor, b, cell_tol)?;
                        cursor = b;
                    }
                    acc += integrate_adaptive(&f, cursor, hi, cell_tol)?;
                    acc
                }
            };
            out[(l, m)] = value;
            out[(m, l)] = value;
        }
    }
    Ok(out)
}

/// The centered sample matrix `Psi(x) - E[Psi]`, whose empirical mean over
/// a sample set is the deviation the Bernstein bound controls.
pub fn centered_psi(
    profile: &RadonProfile,
    shifts: &[f64],
    x: (f64, f64),
    expected: &DMatrix<f64>,
) -> DMatrix<f64> {
    psi_matrix(profile, shifts, x) - expected
}

/// Density-weighted Radon energy `int_{E_K} xi(x) |R_p f(p . x)|^2 dx`,
/// reduced to a one-dimensional integral against the line weight.
pub fn density_weighted_energy(
    projected: &ProjectedSignal,
    density: &Density,
    tol: f64,
) -> Result<f64, SamplingError> {
    let k = density.domain_half_width();
    let d = projected.direction();
    let window = k * d.l1_norm();
    let mut breaks = projected.breakpoints();
    breaks.extend_from_slice(&corner_projections(d, k));
    let breaks = sorted_dedup(breaks, 0.0);
    match &density.kind {
        DensityKind::Uniform => {
            let f = |t: f64| {
                let v = projected.value(t);
                v * v * chord_length(d, t, k) * density.upper
            };
            Ok(integrate_cells(&f, -window, window, &breaks))
        }
        DensityKind::Gaussian { .. } => {
            let weight_tol = tol / (8.0 * window.max(1.0));
            let f = |t: f64| {
                let v = projected.value(t);
                let wt = density
                    .line_weight(d, t, weight_tol)
                    .expect("gaussian line weight integration converges");
                v * v * wt
            };
            let cell_tol = tol / (breaks.len() as f64 + 1.0);
            let mut acc = 0.0;
            let mut cursor = -window;
            for &b in breaks.iter().filter(|&&b| b > -window && b < window) {
                acc += integrate_adaptive(&f, cursor, b, cell_tol)?;
                cursor = b;
            }
            acc += integrate_adaptive(&f, cursor, window, cell_tol)?;
            Ok(acc)
        }
    }
}

/// The zero-mean per-sample energy statistic of a unit-norm signal:
/// `Y(x) = |R_p f(p . x)|^2 - E[|R_p f(p . X)|^2]`. Its empirical mean over
/// a sample set measures how far the set is from the density average.
#[derive(Debug, Clone)]
pub struct CenteredEnergy {
    projected: ProjectedSignal,
    mean: f64,
}

impl CenteredEnergy {
    /// Builds the statistic for a unit-norm signal (`L^2(E_K)` norm within
    /// `1e-9` of one) and a validated density.
    pub fn new<G: Generator>(
        signal: &Signal<G>,
        direction: Direction,
        density: &Density,
        tol: f64,
    ) -> Result<Self, SamplingError> {
        let norm = signal.l2_norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(SamplingError::SignalNotNormalized { norm });
        }
        let projected = project_signal(signal, direction);
        let mean = density_weighted_energy(&projected, density, tol)?;
        Ok(Self { projected, mean })
    }

    /// The density average `E[|R_p f(p . X)|^2]` being subtracted.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Statistic value at an observation point.
    pub fn eval(&self, x: (f64, f64)) -> Result<f64, LatticeError> {
        let v = self.projected.sample_at(x)?;
        Ok(v * v - self.mean)
    }
}
