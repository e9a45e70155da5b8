//! Randomized structural invariants: facts that must hold for *every*
//! direction, shift, coefficient vector, or seed, not just the tabulated
//! cases in the unit tests.

use proptest::prelude::*;
use siss::generator::{chord_length, radon_line_integral, Direction, Generator, TensorB2};
use siss::lattice::{shift_gram, stability_constants, LatticeGrid, Signal};
use siss::radon::{project_signal, restricted_radon_sample};
use siss::sampling::{derive_seed, draw_samples, psi_matrix, Density};
use std::collections::HashSet;
use std::f64::consts::TAU;

fn demo_grid() -> LatticeGrid {
    LatticeGrid::new(1.0, 0.5).unwrap()
}

fn demo_signal(coeffs: Vec<f64>) -> Signal<TensorB2> {
    Signal::new(TensorB2, demo_grid(), coeffs).unwrap()
}

proptest! {
    /// The generator is even and nonnegative, so every projection is an
    /// even, nonnegative bump supported on `[-|p|_1, |p|_1]`.
    #[test]
    fn profiles_are_even_nonnegative_bumps_on_the_l1_ball(
        theta in 0.0..TAU,
        t in -2.5f64..2.5,
    ) {
        let direction = Direction::from_angle(theta);
        let profile = TensorB2.radon_profile(direction);
        prop_assert!((profile.support_half_width() - direction.l1_norm()).abs() <= 1e-12);
        let v = profile.value(t);
        prop_assert!(v >= 0.0, "negative profile value {v} at t = {t}");
        prop_assert!((v - profile.value(-t)).abs() <= 1e-12 * v.max(1.0));
        if t.abs() > profile.support_half_width() + 1e-12 {
            prop_assert_eq!(v, 0.0);
        }
    }

    /// Projections preserve total mass: the generator integrates to one
    /// over the plane, hence so does every profile over the line.
    #[test]
    fn profiles_integrate_to_one(theta in 0.0..TAU) {
        let mass = TensorB2.radon_profile(Direction::from_angle(theta)).mass();
        prop_assert!((mass - 1.0).abs() <= 1e-12, "profile mass {mass}");
    }

    /// A convolution of two unit-mass hats with slopes at most 2 is
    /// 4-Lipschitz; profile evaluation must not jump across breakpoints.
    #[test]
    fn profiles_are_lipschitz(
        theta in 0.0..TAU,
        t in -2.5f64..2.5,
        h in 1e-9f64..1e-3,
    ) {
        let profile = TensorB2.radon_profile(Direction::from_angle(theta));
        let delta = (profile.value(t + h) - profile.value(t)).abs();
        prop_assert!(delta <= 4.0 * h + 1e-15, "jump {delta:e} over step {h:e}");
    }

    /// The quadratic form of the shift Gram matrix is the squared
    /// signal norm on the observation square, so it is sandwiched by the
    /// stability constants for every coefficient vector.
    #[test]
    fn gram_quadratic_forms_respect_the_stability_constants(
        coeffs in prop::collection::vec(-2.0f64..2.0, 9),
    ) {
        let grid = demo_grid();
        let gram = shift_gram(&TensorB2, &grid);
        let constants = stability_constants(&TensorB2, &grid).unwrap();
        let norm_sq: f64 = coeffs.iter().map(|c| c * c).sum();
        let mut form = 0.0;
        for (r, cr) in coeffs.iter().enumerate() {
            for (s, cs) in coeffs.iter().enumerate() {
                form += cr * cs * gram[(r, s)];
            }
        }
        let slack = 1e-12 * norm_sq.max(1.0);
        prop_assert!(form >= constants.lower.powi(2) * norm_sq - slack);
        prop_assert!(form <= constants.upper.powi(2) * norm_sq + slack);
    }

    /// Drawing samples is a pure function of `(density, n, seed)`, and
    /// every point lands inside the observation square.
    #[test]
    fn sample_draws_are_deterministic_and_stay_in_the_square(
        n in 1usize..64,
        seed in any::<u64>(),
        half_width in 0.1f64..3.0,
    ) {
        let density = Density::uniform(half_width).unwrap();
        let first = draw_samples(&density, n, seed).unwrap();
        let second = draw_samples(&density, n, seed).unwrap();
        prop_assert_eq!(&first.points, &second.points);
        prop_assert_eq!(first.points.len(), n);
        prop_assert_eq!(first.seed, seed);
        for &(x, y) in &first.points {
            prop_assert!(x.abs() <= half_width && y.abs() <= half_width);
        }
    }

    /// Per-trial seeds derived from one master seed never repeat within
    /// an experiment, so trials draw independent sample sets.
    #[test]
    fn derived_trial_seeds_do_not_collide(master in any::<u64>()) {
        let seeds: HashSet<u64> = (0..256).map(|k| derive_seed(master, k)).collect();
        prop_assert_eq!(seeds.len(), 256);
    }

    /// Each sample contributes a rank-one outer product to the normal
    /// matrix: positive semi-definite, with trace equal to the squared
    /// length of the profile vector.
    #[test]
    fn sample_matrices_are_positive_semidefinite(
        theta in 0.0..TAU,
        x in -0.5f64..0.5,
        y in -0.5f64..0.5,
    ) {
        let direction = Direction::from_angle(theta);
        let profile = TensorB2.radon_profile(direction);
        let shifts = demo_grid().projected_shifts(direction);
        let psi = psi_matrix(&profile, &shifts, (x, y));
        let eigen = psi.symmetric_eigenvalues();
        let trace = psi.trace();
        prop_assert!(eigen.min() >= -1e-12 * trace.max(1.0));
        let t = direction.dot((x, y));
        let len_sq: f64 = shifts.iter().map(|tau| profile.value(t - tau).powi(2)).sum();
        prop_assert!((trace - len_sq).abs() <= 1e-12 * len_sq.max(1.0));
    }

    /// Projection commutes with linear combinations of signals.
    #[test]
    fn projection_is_linear_in_the_coefficients(
        a in prop::collection::vec(-2.0f64..2.0, 9),
        b in prop::collection::vec(-2.0f64..2.0, 9),
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        theta in 0.0..TAU,
        t in -2.5f64..2.5,
    ) {
        let direction = Direction::from_angle(theta);
        let combo: Vec<f64> =
            a.iter().zip(&b).map(|(u, v)| alpha * u + beta * v).collect();
        let lhs = project_signal(&demo_signal(combo), direction).value(t);
        let rhs = alpha * project_signal(&demo_signal(a), direction).value(t)
            + beta * project_signal(&demo_signal(b), direction).value(t);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The closed-form piecewise-polynomial profile agrees with a direct
    /// adaptive line quadrature of the generator at arbitrary offsets.
    #[test]
    fn closed_form_profiles_match_direct_quadrature(
        theta in 0.0..TAU,
        t in -2.5f64..2.5,
    ) {
        let direction = Direction::from_angle(theta);
        let closed = TensorB2.radon_profile(direction).value(t);
        let quad = radon_line_integral(&TensorB2, direction, t, 1e-10).unwrap();
        prop_assert!((closed - quad).abs() <= 1e-8, "closed {closed}, quadrature {quad}");
    }

    /// The projection of the signal restricted to the square integrates
    /// over a chord, so it can never exceed chord length times the sup of
    /// the signal (at most the largest coefficient, by the partition of
    /// unity of the nonnegative generator).
    #[test]
    fn restricted_samples_are_bounded_by_the_chord(
        coeffs in prop::collection::vec(-2.0f64..2.0, 9),
        theta in 0.0..TAU,
        t in -1.5f64..1.5,
    ) {
        let direction = Direction::from_angle(theta);
        let sup = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let signal = demo_signal(coeffs);
        let value = restricted_radon_sample(&signal, direction, t);
        let chord = chord_length(direction, t, signal.grid().domain_half_width());
        prop_assert!(
            value.abs() <= chord * sup + 1e-12,
            "restricted sample {value}, chord bound {}",
            chord * sup
        );
    }
}
