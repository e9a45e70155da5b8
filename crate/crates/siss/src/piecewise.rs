//! Piecewise-cubic functions on a sorted breakpoint grid.
//!
//! Radon profiles of the tensor B-spline generator are piecewise cubic, so a
//! compact exact representation is a list of cubic pieces. Each piece stores
//! its coefficients in the scaled local coordinate
//!
//! ```text
//! v = (t - mid) / half,  mid = (lo + hi) / 2,  half = (hi - lo) / 2,
//! ```
//!
//! which keeps coefficients on the order of the function values even for
//! very narrow pieces (near-degenerate directions produce pieces whose width
//! is the smaller of |cos theta| and |sin theta|). Pieces are built by
//! interpolating exact point values at four Chebyshev nodes; a cubic is
//! reproduced exactly by this construction.

use nalgebra::{Matrix4, Vector4};

/// Chebyshev nodes cos(pi/8), cos(3 pi/8) used for the 4-point fit on [-1, 1].
const CHEB_OUTER: f64 = 9.238795325112867e-1;
const CHEB_INNER: f64 = 3.8268343236508984e-1;

/// A cubic polynomial on `[lo, hi]`, evaluated in the scaled local
/// coordinate `v = (t - mid) / half`.
#[derive(Debug, Clone, Copy)]
pub struct Piece {
    lo: f64,
    hi: f64,
    /// Coefficients of `c0 + c1 v + c2 v^2 + c3 v^3`.
    coeffs: [f64; 4],
}

impl Piece {
    fn eval(&self, t: f64) -> f64 {
        let half = 0.5 * (self.hi - self.lo);
        let mid = 0.5 * (self.hi + self.lo);
        let v = if half > 0.0 { (t - mid) / half } else { 0.0 };
        let [c0, c1, c2, c3] = self.coeffs;
        c0 + v * (c1 + v * (c2 + v * c3))
    }

    /// Exact integral over the piece: odd powers of `v` cancel.
    fn integral(&self) -> f64 {
        let half = 0.5 * (self.hi - self.lo);
        half * (2.0 * self.coeffs[0] + 2.0 / 3.0 * self.coeffs[2])
    }
}

/// A compactly supported piecewise-cubic function; zero outside its pieces.
#[derive(Debug, Clone)]
pub struct PiecewisePoly {
    pieces: Vec<Piece>,
}

impl PiecewisePoly {
    /// Interpolates `f` on each interval of the sorted breakpoint grid.
    ///
    /// The result is exact whenever `f` restricted to each interval is a
    /// polynomial of degree at most three. `breaks` must be strictly
    /// increasing with at least two entries; the function is treated as
    /// identically zero outside `[breaks[0], breaks[last]]`.
    pub fn interpolate<F: Fn(f64) -> f64>(breaks: &[f64], f: F) -> Self {
        assert!(breaks.len() >= 2, "need at least one interval");
        assert!(
            breaks.windows(2).all(|w| w[0] < w[1]),
            "breakpoints must be strictly increasing"
        );
        // Vandermonde matrix of the fixed Chebyshev nodes; rows follow the
        // node order below.
        let nodes = [-CHEB_OUTER, -CHEB_INNER, CHEB_INNER, CHEB_OUTER];
        let vander = Matrix4::from_fn(|i, j| nodes[i].powi(j as i32));
        let lu = vander.lu();
        let pieces = breaks
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo);
                let values = Vector4::from_fn(|i, _| f(mid + half * nodes[i]));
                let coeffs = lu
                    .solve(&values)
                    .expect("Chebyshev Vandermonde is invertible");
                Piece {
                    lo,
                    hi,
                    coeffs: [coeffs[0], coeffs[1], coeffs[2], coeffs[3]],
                }
            })
            .collect();
        Self { pieces }
    }

    /// Value at `t`; exactly zero outside the support.
    pub fn eval(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(lo..=hi).contains(&t) {
            return 0.0;
        }
        // Binary search for the piece whose interval contains t; ties at a
        // shared breakpoint resolve to the right piece.
        let idx = self
            .pieces
            .partition_point(|p| p.hi < t)
            .min(self.pieces.len() - 1);
        self.pieces[idx].eval(t)
    }

    /// Interval outside of which the function vanishes identically.
    pub fn support(&self) -> (f64, f64) {
        (self.pieces[0].lo, self.pieces[self.pieces.len() - 1].hi)
    }

    /// The breakpoint grid, including both support endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.pieces.iter().map(|p| p.lo).collect();
        b.push(self.pieces[self.pieces.len() - 1].hi);
        b
    }

    /// Exact integral over the whole support.
    pub fn integral(&self) -> f64 {
        self.pieces.iter().map(Piece::integral).sum()
    }
}

/// Sorts a breakpoint candidate list and merges entries closer than `tol`.
///
/// Merging keeps the first representative of each cluster; clusters arise
/// from coincidences such as |cos theta| = |sin theta| at diagonal
/// directions, where the true function is a single polynomial across the
/// collapsed interval.
pub fn sorted_dedup(mut values: Vec<f64>, tol: f64) -> Vec<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).expect("breakpoints must not be NaN"));
    values.dedup_by(|next, kept| (*next - *kept).abs() <= tol);
    values
}
