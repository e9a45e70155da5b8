//! The integer shift lattice, lattice signals, and their stability
//! constants on the observation square.
//!
//! Signals live in the span of the shifted generators `phi(. - k)` whose
//! supports meet the observation square `E_K = [-K, K]^2`. With a generator
//! supported on `[-N, N]^2`, the relevant shifts form the lattice window
//! `E = [ceil(-N - K), floor(N + K)]^2`, enumerated in lexicographic order
//! so coefficient vectors have a canonical flattening.

use crate::generator::{Direction, Generator};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors for lattice construction, signal assembly, and evaluation.
#[derive(Debug, Error)]
pub enum LatticeError {
    /// The lattice parameters are outside the supported range.
    #[error("lattice parameters must satisfy N >= 1 and K > 0 (got N = {n}, K = {k})")]
    InvalidParameters { n: f64, k: f64 },
    /// The lattice window contains at most one shift.
    #[error("lattice window holds {q} shift(s); at least 2 are required")]
    DegenerateLattice { q: usize },
    /// A coefficient vector does not match the lattice size.
    #[error("coefficient vector has length {got}, lattice has {expected} points")]
    CoefficientLength { got: usize, expected: usize },
    /// A point was evaluated or sampled outside the observation square.
    #[error("point ({x}, {y}) lies outside the observation square [-{k}, {k}]^2")]
    OutsideDomain { x: f64, y: f64, k: f64 },
    /// The shift Gram matrix is numerically singular, so the shifts do not
    /// form a stable basis on the observation square.
    #[error(
        "shift Gram matrix is numerically singular \
         (lambda_min = {lambda_min:.6e}, lambda_max = {lambda_max:.6e})"
    )]
    SingularGram { lambda_min: f64, lambda_max: f64 },
    /// A signal document uses an enumeration order other than "lex".
    #[error("signal document order tag must be \"lex\" (got {0:?})")]
    UnsupportedOrder(String),
    /// A signal document was built for a different generator support.
    #[error(
        "signal document declares generator half-width {document}, \
         the supplied generator has {generator}"
    )]
    GeneratorMismatch { document: f64, generator: f64 },
    /// JSON (de)serialization failure for signal documents.
    #[error("signal document JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// The lattice window `E = [ceil(-N - K), floor(N + K)]^2` in lexicographic
/// order (first coordinate slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGrid {
    points: Vec<(i64, i64)>,
    support_half_width: f64,
    domain_half_width: f64,
}

impl LatticeGrid {
    /// Builds the lattice for a generator supported on `[-N, N]^2` and the
    /// observation square `[-K, K]^2`.
    pub fn new(support_half_width: f64, domain_half_width: f64) -> Result<Self, LatticeError> {
        let (n, k) = (support_half_width, domain_half_width);
        if !n.is_finite() || !k.is_finite() || n < 1.0 || k <= 0.0 {
            return Err(LatticeError::InvalidParameters { n, k });
        }
        let radius = n + k;
        let lo = (-radius).ceil() as i64;
        let hi = radius.floor() as i64;
        let mut points = Vec::new();
        for i in lo..=hi {
            for j in lo..=hi {
                points.push((i, j));
            }
        }
        if points.len() <= 1 {
            return Err(LatticeError::DegenerateLattice { q: points.len() });
        }
        Ok(Self {
            points,
            support_half_width: n,
            domain_half_width: k,
        })
    }

    /// Number of lattice shifts (the dimension of the signal space).
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Shifts in lexicographic order.
    pub fn points(&self) -> &[(i64, i64)] {
        &self.points
    }

    /// Index of a shift in the lexicographic enumeration.
    pub fn index_of(&self, point: (i64, i64)) -> Option<usize> {
        self.points.binary_search(&point).ok()
    }

    pub fn support_half_width(&self) -> f64 {
        self.support_half_width
    }

    pub fn domain_half_width(&self) -> f64 {
        self.domain_half_width
    }

    /// Whether a point lies in the observation square (boundary included).
    pub fn contains(&self, x: (f64, f64)) -> bool {
        x.0.abs() <= self.domain_half_width && x.1.abs() <= self.domain_half_width
    }

    /// Projections `p . k` of the lattice shifts, in lexicographic order.
    /// These are the centers of the shifted profiles after projecting a
    /// signal onto the direction `p`.
    pub fn projected_shifts(&self, direction: Direction) -> Vec<f64> {
        self.points
            .iter()
            .map(|&(i, j)| direction.dot((i as f64, j as f64)))
            .collect()
    }
}

/// Gram matrix of the shifted generators over the observation square,
/// `G[l, m] = int_{E_K} phi(x - k_l) phi(x - k_m) dx` in lexicographic
/// order. Symmetric positive semi-definite by construction.
pub fn shift_gram<G: Generator>(generator: &G, grid: &LatticeGrid) -> DMatrix<f64> {
    let q = grid.len();
    let k = grid.domain_half_width();
    let mut gram = DMatrix::zeros(q, q);
    for r in 0..q {
        for c in r..q {
            let v = generator.shift_inner_product(grid.points()[r], grid.points()[c], k);
            gram[(r, c)] = v;
            gram[(c, r)] = v;
        }
    }
    gram
}

/// Two-sided Riesz-type stability constants of the shifted generators on
/// the observation square: for every coefficient vector `c`,
///
/// ```text
/// lower * |c|_2 <= || sum_l c_l phi(. - k_l) ||_L2(E_K) <= upper * |c|_2.
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConstants {
    pub lower: f64,
    pub upper: f64,
}

/// Computes the stability constants as square roots of the extreme
/// eigenvalues of the shift Gram matrix. Fails when the Gram matrix is
/// numerically singular (`lambda_min < 1e-12 lambda_max`), in which case the
/// shifts do not form a stable basis on the square.
pub fn stability_constants<G: Generator>(
    generator: &G,
    grid: &LatticeGrid,
) -> Result<StabilityConstants, LatticeError> {
    let gram = shift_gram(generator, grid);
    let eigen = gram.symmetric_eigenvalues();
    let lambda_min = eigen.min();
    let lambda_max = eigen.max();
    if lambda_max <= 0.0 || lambda_min < 1e-12 * lambda_max {
        return Err(LatticeError::SingularGram {
            lambda_min,
            lambda_max,
        });
    }
    Ok(StabilityConstants {
        lower: lambda_min.sqrt(),
        upper: lambda_max.sqrt(),
    })
}

/// A signal `f = sum_l c_l phi(. - k_l)` observed on the square `E_K`.
#[derive(Debug, Clone)]
pub struct Signal<G: Generator> {
    generator: G,
    grid: LatticeGrid,
    coeffs: Vec<f64>,
}

impl<G: Generator> Signal<G> {
    /// Wraps a coefficient vector (lexicographic order) over the lattice.
    pub fn new(generator: G, grid: LatticeGrid, coeffs: Vec<f64>) -> Result<Self, LatticeError> {
        if coeffs.len() != grid.len() {
            return Err(LatticeError::CoefficientLength {
                got: coeffs.len(),
                expected: grid.len(),
            });
        }
        Ok(Self {
            generator,
            grid,
            coeffs,
        })
    }

    pub fn generator(&self) -> &G {
        &self.generator
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Point evaluation inside the observation square.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, LatticeError> {
        if !self.grid.contains((x, y)) {
            return Err(LatticeError::OutsideDomain {
                x,
                y,
                k: self.grid.domain_half_width(),
            });
        }
        let mut acc = 0.0;
        for (c, &(i, j)) in self.coeffs.iter().zip(self.grid.points()) {
            if *c != 0.0 {
                acc += c * self.generator.eval(x - i as f64, y - j as f64);
            }
        }
        Ok(acc)
    }

    /// `L^2(E_K)` norm via the exact quadratic form `sqrt(c' G c)`.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_with_gram(&shift_gram(&self.generator, &self.grid))
    }

    /// `L^2(E_K)` norm reusing a precomputed shift Gram matrix.
    pub fn l2_norm_with_gram(&self, gram: &DMatrix<f64>) -> f64 {
        let c = DVector::from_column_slice(&self.coeffs);
        (gram * &c).dot(&c).max(0.0).sqrt()
    }

    /// Portable description of the signal: lattice parameters, enumeration
    /// order tag, and the flattened coefficients.
    pub fn to_document(&self) -> SignalDocument {
        SignalDocument {
            support_half_width: self.grid.support_half_width(),
            domain_half_width: self.grid.domain_half_width(),
            order: "lex".to_string(),
            coeffs: self.coeffs.clone(),
        }
    }

    /// Rebuilds a signal from a document, validating the order tag, the
    /// generator support, and the coefficient count.
    pub fn from_document(generator: G, document: &SignalDocument) -> Result<Self, LatticeError> {
        if document.order != "lex" {
            return Err(LatticeError::UnsupportedOrder(document.order.clone()));
        }
        if document.support_half_width != generator.support_half_width() {
            return Err(LatticeError::GeneratorMismatch {
                document: document.support_half_width,
                generator: generator.support_half_width(),
            });
        }
        let grid = LatticeGrid::new(document.support_half_width, document.domain_half_width)?;
        Signal::new(generator, grid, document.coeffs.clone())
    }

    /// JSON form of [`Signal::to_document`].
    pub fn to_json(&self) -> Result<String, LatticeError> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    /// Parses [`Signal::to_json`] output back into a signal.
    pub fn from_json(generator: G, json: &str) -> Result<Self, LatticeError> {
        let document: SignalDocument = serde_json::from_str(json)?;
        Signal::from_document(generator, &document)
    }
}

/// Serializable description of a lattice signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalDocument {
    #[serde(rename = "N")]
    pub support_half_width: f64,
    #[serde(rename = "K")]
    pub domain_half_width: f64,
    pub order: String,
    pub coeffs: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{RadonProfile, TensorB2};
    use approx::assert_abs_diff_eq;

    #[test]
    fn lattice_enumerates_the_window_in_lex_order() {
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        assert_eq!(grid.len(), 9);
        assert_eq!(grid.points()[0], (-1, -1));
        assert_eq!(grid.points()[1], (-1, 0));
        assert_eq!(grid.points()[8], (1, 1));
        assert_eq!(grid.index_of((0, 1)), Some(5));
        assert_eq!(grid.index_of((2, 0)), None);

        let wide = LatticeGrid::new(1.0, 1.0).unwrap();
        assert_eq!(wide.len(), 25);
        assert_eq!(wide.points()[0], (-2, -2));
        assert_eq!(wide.points()[24], (2, 2));
    }

    #[test]
    fn invalid_lattice_parameters_are_rejected() {
        assert!(matches!(
            LatticeGrid::new(0.5, 0.5),
            Err(LatticeError::InvalidParameters { .. })
        ));
        assert!(matches!(
            LatticeGrid::new(1.0, 0.0),
            Err(LatticeError::InvalidParameters { .. })
        ));
        assert!(matches!(
            LatticeGrid::new(1.0, f64::NAN),
            Err(LatticeError::InvalidParameters { .. })
        ));
    }

    #[test]
    fn coefficient_length_is_enforced() {
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        assert!(matches!(
            Signal::new(TensorB2, grid, vec![0.0; 8]),
            Err(LatticeError::CoefficientLength {
                got: 8,
                expected: 9
            })
        ));
    }

    #[test]
    fn signal_evaluation_matches_the_generator_sum() {
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        let mut coeffs = vec![0.0; 9];
        coeffs[grid.index_of((0, 0)).unwrap()] = 2.0;
        coeffs[grid.index_of((1, 0)).unwrap()] = -1.0;
        let signal = Signal::new(TensorB2, grid, coeffs).unwrap();
        let expected = 2.0 * TensorB2.eval(0.25, -0.1) - TensorB2.eval(-0.75, -0.1);
        assert_abs_diff_eq!(signal.eval(0.25, -0.1).unwrap(), expected, epsilon = 1e-15);
        assert!(matches!(
            signal.eval(0.75, 0.0),
            Err(LatticeError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn center_evaluation_reads_off_the_center_coefficient() {
        // At the origin every shifted generator except phi itself vanishes.
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        let coeffs = vec![
            0.1717, -1.3467, 0.1075, -1.7869, -0.3373, 2.4782, -0.8612, -0.3645, 0.2011,
        ];
        let signal = Signal::new(TensorB2, grid, coeffs).unwrap();
        assert_abs_diff_eq!(signal.eval(0.0, 0.0).unwrap(), -0.3373, epsilon = 1e-15);
    }

    #[test]
    fn l2_norm_of_a_single_shift_has_closed_form() {
        // ||phi||_L2([-1/2,1/2]^2) = 7/12 for the tensor hat.
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        let mut coeffs = vec![0.0; 9];
        coeffs[4] = 1.0;
        let signal = Signal::new(TensorB2, grid, coeffs).unwrap();
        assert_abs_diff_eq!(signal.l2_norm(), 7.0 / 12.0, epsilon = 1e-14);
    }

    #[test]
    fn gram_is_symmetric_positive_semidefinite() {
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        let gram = shift_gram(&TensorB2, &grid);
        assert_eq!(gram.nrows(), 9);
        for r in 0..9 {
            for c in 0..9 {
                assert_abs_diff_eq!(gram[(r, c)], gram[(c, r)], epsilon = 0.0);
            }
        }
        let eigen = gram.symmetric_eigenvalues();
        assert!(eigen.min() >= -1e-14);
    }

    #[test]
    fn stability_constants_match_closed_form_eigenvalues() {
        // The Gram factorizes over axes, so the 2-D constants are the 1-D
        // extreme eigenvalues of [[1/24, 1/12, 0], [1/12, 7/12, 1/12],
        // [0, 1/12, 1/24]]: (5/8 -+ sqrt(25/64 - 1/24)) / 2.
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        let sc = stability_constants(&TensorB2, &grid).unwrap();
        assert_abs_diff_eq!(sc.lower, 0.017136523359212008, epsilon = 1e-14);
        assert_abs_diff_eq!(sc.upper, 0.607863476640788, epsilon = 1e-13);
    }

    #[test]
    fn zero_generator_reports_a_singular_gram() {
        #[derive(Clone, Copy)]
        struct Zero;
        impl Generator for Zero {
            fn support_half_width(&self) -> f64 {
                1.0
            }
            fn eval(&self, _x: f64, _y: f64) -> f64 {
                0.0
            }
            fn radon_profile(&self, direction: Direction) -> RadonProfile {
                TensorB2.radon_profile(direction)
            }
            fn shift_inner_product(&self, _: (i64, i64), _: (i64, i64), _: f64) -> f64 {
                0.0
            }
        }
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        assert!(matches!(
            stability_constants(&Zero, &grid),
            Err(LatticeError::SingularGram { .. })
        ));
    }

    #[test]
    fn signal_documents_round_trip_deterministically() {
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        let coeffs: Vec<f64> = (0..9).map(|i| (i as f64) * 0.125 - 0.4).collect();
        let signal = Signal::new(TensorB2, grid, coeffs.clone()).unwrap();
        let json = signal.to_json().unwrap();
        assert_eq!(json, signal.to_json().unwrap());
        let back = Signal::from_json(TensorB2, &json).unwrap();
        assert_eq!(back.coeffs(), coeffs.as_slice());
        assert_eq!(back.grid(), signal.grid());
    }

    #[test]
    fn foreign_documents_are_rejected() {
        let doc = SignalDocument {
            support_half_width: 1.0,
            domain_half_width: 0.5,
            order: "row-major".into(),
            coeffs: vec![0.0; 9],
        };
        assert!(matches!(
            Signal::from_document(TensorB2, &doc),
            Err(LatticeError::UnsupportedOrder(_))
        ));
        let doc = SignalDocument {
            support_half_width: 2.0,
            domain_half_width: 0.5,
            order: "lex".into(),
            coeffs: vec![0.0; 9],
        };
        assert!(matches!(
            Signal::from_document(TensorB2, &doc),
            Err(LatticeError::GeneratorMismatch { .. })
        ));
    }
}
