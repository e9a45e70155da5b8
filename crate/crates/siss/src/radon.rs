//! Radon projections of lattice signals.
//!
//! Projecting a lattice signal `f = sum_l c_l phi(. - k_l)` onto a unit
//! direction `p` turns the two-dimensional line-integral transform into a
//! one-dimensional function: `R_p f(t) = sum_l c_l R_p phi(t - p . k_l)`.
//! Since the generator profile `R_p phi` is an exact piecewise cubic, every
//! Radon sample of a signal is a closed-form point evaluation, and energy
//! integrals over the observation square reduce to exactly integrable
//! one-dimensional cell integrals.

use crate::generator::{
    chord_length, grid_line_crossings, line_box_interval, Direction, Generator, RadonProfile,
};
use crate::lattice::{LatticeError, Signal};
use crate::piecewise::sorted_dedup;
use crate::quadrature::integrate_cells;

/// The projection of a lattice signal onto one direction: a combination of
/// shifted copies of the direction's Radon profile.
#[derive(Debug, Clone)]
pub struct ProjectedSignal {
    profile: RadonProfile,
    shifts: Vec<f64>,
    coeffs: Vec<f64>,
    domain_half_width: f64,
}

impl ProjectedSignal {
    pub fn direction(&self) -> Direction {
        self.profile.direction()
    }

    /// The underlying single-shift profile `R_p phi`.
    pub fn profile(&self) -> &RadonProfile {
        &self.profile
    }

    /// Projected shift positions `p . k_l`, in lattice order.
    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    /// `R_p f(t)`: the line integral of the signal over `{ p . x = t }`.
    pub fn value(&self, t: f64) -> f64 {
        let w = self.profile.support_half_width();
        let mut acc = 0.0;
        for (c, tau) in self.coeffs.iter().zip(&self.shifts) {
            if *c != 0.0 && (t - tau).abs() <= w {
                acc += c * self.profile.value(t - tau);
            }
        }
        acc
    }

    /// Interval outside of which the projection vanishes.
    pub fn support(&self) -> (f64, f64) {
        let w = self.profile.support_half_width();
        let lo = self.shifts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self
            .shifts
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        (lo - w, hi + w)
    }

    /// Radon sample through an observation point: `R_p f(p . x)`. The point
    /// must lie in the observation square.
    pub fn sample_at(&self, x: (f64, f64)) -> Result<f64, LatticeError> {
        let k = self.domain_half_width;
        if x.0.abs() > k || x.1.abs() > k {
            return Err(LatticeError::OutsideDomain { x: x.0, y: x.1, k });
        }
        Ok(self.value(self.direction().dot(x)))
    }

    /// Sorted offsets at which the projection changes its cubic piece:
    /// every profile breakpoint translated by every shift. Integrands built
    /// from the projection are single polynomials between consecutive
    /// entries.
    pub fn breakpoints(&self) -> Vec<f64> {
        let base = self.profile.breakpoints();
        let mut all = Vec::with_capacity(base.len() * self.shifts.len());
        for tau in &self.shifts {
            all.extend(base.iter().map(|b| b + tau));
        }
        sorted_dedup(all, 0.0)
    }
}

/// Projects a lattice signal onto a direction.
pub fn project_signal<G: Generator>(signal: &Signal<G>, direction: Direction) -> ProjectedSignal {
    ProjectedSignal {
        profile: signal.generator().radon_profile(direction),
        shifts: signal.grid().projected_shifts(direction),
        coeffs: signal.coeffs().to_vec(),
        domain_half_width: signal.grid().domain_half_width(),
    }
}

/// Single Radon sample of a signal through an observation point. When many
/// samples share a direction, project once and call
/// [`ProjectedSignal::sample_at`] instead.
pub fn radon_sample<G: Generator>(
    signal: &Signal<G>,
    direction: Direction,
    x: (f64, f64),
) -> Result<f64, LatticeError> {
    project_signal(signal, direction).sample_at(x)
}

/// Offsets of the four square corners under projection: the chord length of
/// `{ p . x = t }` in the square is piecewise linear in `t` with kinks
/// exactly at these values.
pub fn corner_projections(direction: Direction, half_width: f64) -> [f64; 4] {
    let k = half_width;
    [
        direction.dot((k, k)),
        direction.dot((k, -k)),
        direction.dot((-k, k)),
        direction.dot((-k, -k)),
    ]
}

/// Line integral of the signal restricted to the observation square:
/// integrates `f` over the chord of `E_K` cut by the line `{ p . x = t }`,
/// ignoring the tails of the shifted generators outside the square. This
/// is the projection of the observed part of the signal, the quantity the
/// square-local norm bounds speak about; [`ProjectedSignal::value`]
/// integrates the full signal instead.
///
/// Exact: the chord is split where it crosses integer grid lines, leaving
/// one polynomial piece of the signal per cell.
pub fn restricted_radon_sample<G: Generator>(
    signal: &Signal<G>,
    direction: Direction,
    t: f64,
) -> f64 {
    let k = signal.grid().domain_half_width();
    let Some((lo, hi)) = line_box_interval(direction, t, k) else {
        return 0.0;
    };
    let (c, s) = (direction.cos(), direction.sin());
    let f = |sp: f64| {
        let (x, y) = (t * c - sp * s, t * s + sp * c);
        let mut acc = 0.0;
        for (cf, &(i, j)) in signal.coeffs().iter().zip(signal.grid().points()) {
            acc += cf * signal.generator().eval(x - i as f64, y - j as f64);
        }
        acc
    };
    let extent = (k + signal.grid().support_half_width()).ceil() as i64 + 1;
    let cuts = grid_line_crossings(direction, t, extent, (lo, hi), 1e-13 * (hi - lo));
    integrate_cells(&f, lo, hi, &cuts)
}

/// Exact `int_{E_K} |R_p f(p . x)|^2 dx`: by the coarea formula this equals
/// `int F(t)^2 chord(t) dt` with `F` the projection and `chord` the square's
/// chord-length function, both piecewise polynomial on the merged cell grid.
pub fn projected_energy_on_domain(projected: &ProjectedSignal) -> f64 {
    let k = projected.domain_half_width;
    let d = projected.direction();
    let window = k * d.l1_norm();
    let mut breaks = projected.breakpoints();
    breaks.extend_from_slice(&corner_projections(d, k));
    let breaks = sorted_dedup(breaks, 0.0);
    let f = |t: f64| {
        let v = projected.value(t);
        v * v * chord_length(d, t, k)
    };
    integrate_cells(&f, -window, window, &breaks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::TensorB2;
    use crate::lattice::LatticeGrid;
    use approx::assert_abs_diff_eq;

    fn demo_signal() -> Signal<TensorB2> {
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        let coeffs = vec![
            0.1717, -1.3467, 0.1075, -1.7869, -0.3373, 2.4782, -0.8612, -0.3645, 0.2011,
        ];
        Signal::new(TensorB2, grid, coeffs).unwrap()
    }

    /// Line integral of the signal computed directly in the plane, without
    /// the profile decomposition. Along the line the signal is piecewise
    /// quadratic, changing pieces where the line crosses an integer grid
    /// line, so one fixed rule per cell between crossings is exact.
    fn line_integral_oracle(signal: &Signal<TensorB2>, d: Direction, t: f64) -> f64 {
        let (c, s) = (d.cos(), d.sin());
        let f = |sp: f64| {
            let (x, y) = (t * c - sp * s, t * s + sp * c);
            let mut acc = 0.0;
            for (cf, &(i, j)) in signal.coeffs().iter().zip(signal.grid().points()) {
                acc += cf * TensorB2.eval(x - i as f64, y - j as f64);
            }
            acc
        };
        let mut cuts = Vec::new();
        for j in -2..=2 {
            let v = j as f64;
            if s != 0.0 {
                cuts.push((t * c - v) / s);
            }
            if c != 0.0 {
                cuts.push((v - t * s) / c);
            }
        }
        integrate_cells(&f, -4.0, 4.0, &sorted_dedup(cuts, 1e-12))
    }

    #[test]
    fn projection_of_a_single_shift_is_the_translated_profile() {
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        let mut coeffs = vec![0.0; 9];
        let idx = grid.index_of((1, -1)).unwrap();
        coeffs[idx] = 1.0;
        let signal = Signal::new(TensorB2, grid, coeffs).unwrap();
        let d = Direction::from_angle(0.7);
        let projected = project_signal(&signal, d);
        let profile = TensorB2.radon_profile(d);
        let tau = d.dot((1.0, -1.0));
        for i in 0..=100 {
            let t = -2.0 + 4.0 * (i as f64) / 100.0;
            assert_abs_diff_eq!(projected.value(t), profile.value(t - tau), epsilon = 1e-15);
        }
    }

    #[test]
    fn projection_matches_direct_line_integrals() {
        let signal = demo_signal();
        let d = Direction::from_vector(5.0, 12.0).unwrap();
        let projected = project_signal(&signal, d);
        for i in 0..=40 {
            let t = -1.3 + 2.6 * (i as f64) / 40.0;
            let oracle = line_integral_oracle(&signal, d, t);
            assert!(
                (projected.value(t) - oracle).abs() <= 1e-8,
                "mismatch at t = {t}: {} vs {}",
                projected.value(t),
                oracle
            );
        }
    }

    #[test]
    fn radon_sample_validates_the_observation_point() {
        let signal = demo_signal();
        let d = Direction::from_vector(5.0, 12.0).unwrap();
        let v = radon_sample(&signal, d, (0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v, line_integral_oracle(&signal, d, 0.0), epsilon = 1e-8);
        assert!(matches!(
            radon_sample(&signal, d, (0.51, 0.0)),
            Err(LatticeError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn projection_is_linear_in_the_signal() {
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        let a: Vec<f64> = (0..9).map(|i| 0.3 * (i as f64) - 1.0).collect();
        let b: Vec<f64> = (0..9).map(|i| ((i * i) as f64).sin()).collect();
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.5 * x - 0.75 * y).collect();
        let d = Direction::from_angle(1.1);
        let pa = project_signal(&Signal::new(TensorB2, grid.clone(), a).unwrap(), d);
        let pb = project_signal(&Signal::new(TensorB2, grid.clone(), b).unwrap(), d);
        let pc = project_signal(&Signal::new(TensorB2, grid, combo).unwrap(), d);
        for i in 0..=200 {
            let t = -2.0 + 4.0 * (i as f64) / 200.0;
            assert_abs_diff_eq!(
                pc.value(t),
                2.5 * pa.value(t) - 0.75 * pb.value(t),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn domain_energy_of_a_centered_shift_has_closed_form() {
        // Axis-aligned projection of phi is the hat; chords of the K = 1/2
        // square have length 1, so the energy is int_{-1/2}^{1/2} hat^2 = 7/12.
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        let mut coeffs = vec![0.0; 9];
        coeffs[4] = 1.0;
        let signal = Signal::new(TensorB2, grid, coeffs).unwrap();
        let projected = project_signal(&signal, Direction::from_angle(0.0));
        assert_abs_diff_eq!(
            projected_energy_on_domain(&projected),
            7.0 / 12.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn domain_energy_matches_two_dimensional_quadrature() {
        let signal = demo_signal();
        let d = Direction::from_angle(0.9);
        let projected = project_signal(&signal, d);
        let exact = projected_energy_on_domain(&projected);
        // Independent check: integrate |R_p f(p . x)|^2 on a tensor grid of
        // one-dimensional adaptive integrals.
        let f = |x: f64, y: f64| {
            let t = d.dot((x, y));
            let v = projected.value(t);
            v * v
        };
        let numeric =
            crate::quadrature::integrate2d_adaptive(&f, (-0.5, 0.5), (-0.5, 0.5), 1e-9).unwrap();
        assert_abs_diff_eq!(exact, numeric, epsilon = 1e-7);
    }

    #[test]
    fn restricted_integral_of_the_unit_signal_is_the_chord_length() {
        // The shifts form a partition of unity, so the all-ones signal is
        // identically 1 on the square and its restricted line integral is
        // exactly the chord length of E_K.
        let grid = LatticeGrid::new(1.0, 0.5).unwrap();
        let signal = Signal::new(TensorB2, grid, vec![1.0; 9]).unwrap();
        for theta in [0.0, 0.3, 0.7, std::f64::consts::FRAC_PI_4, 1.2, 2.0] {
            let d = Direction::from_angle(theta);
            let window = 0.5 * d.l1_norm();
            for i in 0..=50 {
                let t = -window + 2.0 * window * i as f64 / 50.0;
                assert_abs_diff_eq!(
                    restricted_radon_sample(&signal, d, t),
                    chord_length(d, t, 0.5),
                    epsilon = 1e-13
                );
            }
            // Beyond the projected window the chord is empty.
            assert_eq!(restricted_radon_sample(&signal, d, window + 0.01), 0.0);
        }
    }

    #[test]
    fn restricting_to_the_square_removes_the_generator_tails() {
        // Full and restricted integrals agree only when the line meets no
        // signal mass outside the square; the demo signal has mass there,
        // so the two transforms must differ on a generic line.
        let signal = demo_signal();
        let d = Direction::from_angle(0.7);
        let projected = project_signal(&signal, d);
        let full = projected.value(0.2);
        let restricted = restricted_radon_sample(&signal, d, 0.2);
        assert!(
            (full - restricted).abs() > 1e-3,
            "expected the tails to contribute: full = {full}, restricted = {restricted}"
        );
    }
}
