//! Gauss-Legendre quadrature: a fixed 15-point rule plus adaptive wrappers.
//!
//! The fixed rule is exact for polynomials of degree <= 29, which covers
//! every piecewise-polynomial integrand in this crate once the integration
//! interval is split at the integrand's breakpoints. The adaptive wrapper
//! (bisection with a whole-vs-halves error estimate) is used for integrands
//! that are not piecewise polynomial, such as Gaussian densities and the
//! quadrature oracle for Radon profiles.

use thiserror::Error;

/// Abscissae of the 15-point Gauss-Legendre rule on [-1, 1].
#[allow(clippy::excessive_precision)] // published table digits, kept verbatim
pub const GL15_NODES: [f64; 15] = [
    -9.87992518020485377e-1,
    -9.37273392400705951e-1,
    -8.48206583410427206e-1,
    -7.24417731360170070e-1,
    -5.70972172608538830e-1,
    -3.94151347077563385e-1,
    -2.01194093997434514e-1,
    0.0,
    2.01194093997434514e-1,
    3.94151347077563385e-1,
    5.70972172608538830e-1,
    7.24417731360170070e-1,
    8.48206583410427206e-1,
    9.37273392400705951e-1,
    9.87992518020485377e-1,
];

/// Weights of the 15-point Gauss-Legendre rule on [-1, 1].
#[allow(clippy::excessive_precision)] // published table digits, kept verbatim
pub const GL15_WEIGHTS: [f64; 15] = [
    3.07532419961186465e-2,
    7.03660474881080689e-2,
    1.07159220467171773e-1,
    1.39570677926153908e-1,
    1.66269205816993781e-1,
    1.86161000015561878e-1,
    1.98431485327111246e-1,
    2.02578241925560898e-1,
    1.98431485327111246e-1,
    1.86161000015561878e-1,
    1.66269205816993781e-1,
    1.39570677926153908e-1,
    1.07159220467171773e-1,
    7.03660474881080689e-2,
    3.07532419961186465e-2,
];

/// Errors produced by the adaptive integrators.
#[derive(Debug, Error)]
pub enum QuadratureError {
    /// The recursive bisection exhausted its subdivision budget before the
    /// local error estimates dropped below the requested tolerance.
    #[error(
        "adaptive quadrature on [{lo}, {hi}] did not reach tolerance {tol:.3e} \
         within {panels} panels"
    )]
    NoConvergence {
        lo: f64,
        hi: f64,
        tol: f64,
        panels: usize,
    },
}

/// 15-point Gauss-Legendre approximation of the integral of `f` over
/// `[lo, hi]`. Exact for polynomials of degree <= 29.
pub fn gl15<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for (x, w) in GL15_NODES.iter().zip(GL15_WEIGHTS.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Hard cap on the number of accepted panels per adaptive integral.
const MAX_PANELS: usize = 1 << 20;

/// Adaptive Gauss-Legendre integration of `f` over `[lo, hi]` to absolute
/// tolerance `tol`.
///
/// Each interval is accepted when the 15-point estimate agrees with the sum
/// over its two halves to within the locally allotted tolerance; otherwise
/// the halves are refined independently with half the allotment each.
/// Intervals that have shrunk to the floating-point resolution are accepted
/// as-is, so kinks and isolated mild singularities do not stall the
/// recursion.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, QuadratureError> {
    if lo == hi {
        return Ok(0.0);
    }
    let mut panels = 0usize;
    let whole = gl15(f, lo, hi);
    let value = refine(f, lo, hi, whole, tol.max(f64::MIN_POSITIVE), &mut panels)?;
    if panels > MAX_PANELS {
        return Err(QuadratureError::NoConvergence {
            lo,
            hi,
            tol,
            panels,
        });
    }
    Ok(value)
}

fn refine<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    whole: f64,
    tol: f64,
    panels: &mut usize,
) -> Result<f64, QuadratureError> {
    *panels += 1;
    if *panels > MAX_PANELS {
        return Err(QuadratureError::NoConvergence {
            lo,
            hi,
            tol,
            panels: *panels,
        });
    }
    let mid = 0.5 * (lo + hi);
    if mid <= lo || mid >= hi {
        // Interval below floating-point resolution; nothing left to refine.
        return Ok(whole);
    }
    let left = gl15(f, lo, mid);
    let right = gl15(f, mid, hi);
    let delta = left + right - whole;
    if delta.abs() <= tol {
        return Ok(left + right);
    }
    let l = refine(f, lo, mid, left, 0.5 * tol, panels)?;
    let r = refine(f, mid, hi, right, 0.5 * tol, panels)?;
    Ok(l + r)
}

/// Adaptive integration over an axis-aligned rectangle by iterated
/// one-dimensional adaptive rules. The inner tolerance is scaled so the
/// total absolute error stays within `tol`.
pub fn integrate2d_adaptive<F: Fn(f64, f64) -> f64>(
    f: &F,
    x_range: (f64, f64),
    y_range: (f64, f64),
    tol: f64,
) -> Result<f64, QuadratureError> {
    let (xlo, xhi) = x_range;
    let (ylo, yhi) = y_range;
    let width = (xhi - xlo).abs().max(1.0);
    let inner_tol = 0.5 * tol / width;
    // Inner failures cannot cross the closure boundary as errors; record the
    // worst one and report it after the outer integration.
    let inner_failed = std::cell::Cell::new(false);
    let slice = |x: f64| -> f64 {
        match integrate_adaptive(&|y| f(x, y), ylo, yhi, inner_tol) {
            Ok(v) => v,
            Err(_) => {
                inner_failed.set(true);
                0.0
            }
        }
    };
    let outer = integrate_adaptive(&slice, xlo, xhi, 0.5 * tol)?;
    if inner_failed.get() {
        return Err(QuadratureError::NoConvergence {
            lo: ylo,
            hi: yhi,
            tol: inner_tol,
            panels: MAX_PANELS,
        });
    }
    Ok(outer)
}

/// Integral of `f` over `[lo, hi]` split at the given breakpoints, one fixed
/// 15-point rule per cell. Exact when `f` restricted to each cell is a
/// polynomial of degree <= 29. Breakpoints outside the interval are ignored;
/// `breaks` must be sorted.
pub fn integrate_cells<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, breaks: &[f64]) -> f64 {
    debug_assert!(breaks.windows(2).all(|w| w[0] <= w[1]));
    let mut acc = 0.0;
    let mut cursor = lo;
    for &b in breaks.iter().filter(|&&b| b > lo && b < hi) {
        if b > cursor {
            acc += gl15(f, cursor, b);
            cursor = b;
        }
    }
    if hi > cursor {
        acc += gl15(f, cursor, hi);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gl15_exact_on_high_degree_polynomial() {
        // x^29 over [0, 1] has integral 1/30; degree 29 is the rule's limit.
        let v = gl15(|x| x.powi(29), 0.0, 1.0);
        assert_abs_diff_eq!(v, 1.0 / 30.0, epsilon = 1e-15);
    }

    #[test]
    fn adaptive_handles_kinks() {
        // |x - 1/3| over [-1, 1]: kink off the panel midpoints.
        let exact = {
            let a: f64 = 1.0 / 3.0;
            ((1.0 + a) * (1.0 + a) + (1.0 - a) * (1.0 - a)) / 2.0
        };
        let v = integrate_adaptive(&|x: f64| (x - 1.0 / 3.0).abs(), -1.0, 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, exact, epsilon = 1e-11);
    }

    #[test]
    fn adaptive_matches_gaussian_integral() {
        // int_{-8}^{8} exp(-x^2/2) dx = sqrt(2 pi) up to < 1e-15 truncation.
        let v = integrate_adaptive(&|x: f64| (-0.5 * x * x).exp(), -8.0, 8.0, 1e-13).unwrap();
        assert_abs_diff_eq!(v, (2.0 * std::f64::consts::PI).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn two_dimensional_rule_integrates_separable_product() {
        let v = integrate2d_adaptive(
            &|x: f64, y: f64| (x + 0.3).powi(2) * (1.0 - y).powi(3),
            (-0.5, 0.5),
            (-0.5, 0.5),
            1e-12,
        )
        .unwrap();
        let ix = ((0.8f64).powi(3) - (-0.2f64).powi(3)) / 3.0;
        let iy = ((1.5f64).powi(4) - (0.5f64).powi(4)) / 4.0;
        assert_abs_diff_eq!(v, ix * iy, epsilon = 1e-11);
    }

    #[test]
    fn cell_rule_is_exact_for_piecewise_polynomials() {
        // f(x) = |x| is linear on each side of 0; splitting there makes the
        // fixed rule exact.
        let v = integrate_cells(&|x: f64| x.abs(), -2.0, 1.0, &[0.0]);
        assert_abs_diff_eq!(v, 2.5, epsilon = 1e-14);
    }
}
