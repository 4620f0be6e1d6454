//! Transform-layer checks against independent oracles: brute-force modal
//! convolutions for the nonlinearity and finite differences for the energy
//! gradient term, plus property tests of the basic invariants.

mod common;

use common::{convolution_nonlinearity, fd_gradient_energy, max_coeff_diff, random_field};
use num_complex::Complex64;
use proptest::prelude::*;
use snls::norms::{energy, mass, sobolev_norm};
use snls::torus::{
    apply_semigroup, nonlinear_term, project_leq, to_physical, to_spectral, NonlinearitySpec,
    Sign, SpectralField, TorusSpec,
};

#[test]
fn dealiased_nonlinearity_matches_convolution_1d() {
    for (n, k) in [(4u32, 1u32), (8, 1), (8, 2), (6, 2)] {
        let spec = TorusSpec::new(1, n).unwrap();
        let f = random_field(&spec, 1000 + u64::from(n * 10 + k));
        for sign in [Sign::Defocusing, Sign::Focusing] {
            let nl = NonlinearitySpec::new(k, sign).unwrap();
            let fast = nonlinear_term(&f, &nl, true).unwrap();
            let slow = convolution_nonlinearity(&f, &nl);
            let scale = slow.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
            let err = max_coeff_diff(&fast, &slow) / scale;
            assert!(err < 1e-10, "N={n} k={k} rel err {err}");
        }
    }
}

#[test]
fn dealiased_nonlinearity_matches_convolution_2d() {
    let spec = TorusSpec::new(2, 4).unwrap();
    let f = random_field(&spec, 77);
    let nl = NonlinearitySpec::new(1, Sign::Defocusing).unwrap();
    let fast = nonlinear_term(&f, &nl, true).unwrap();
    let slow = convolution_nonlinearity(&f, &nl);
    let scale = slow.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    assert!(max_coeff_diff(&fast, &slow) / scale < 1e-10);
}

#[test]
fn aliased_evaluation_differs_without_padding() {
    // The dealias switch exists for speed comparisons; on a rough field the
    // unpadded product visibly deviates from the exact convolution.
    let spec = TorusSpec::new(1, 8).unwrap();
    let f = random_field(&spec, 3);
    let nl = NonlinearitySpec::new(1, Sign::Defocusing).unwrap();
    let aliased = nonlinear_term(&f, &nl, false).unwrap();
    let exact = convolution_nonlinearity(&f, &nl);
    let scale = exact.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    assert!(max_coeff_diff(&aliased, &exact) / scale > 1e-6);
}

#[test]
fn energy_gradient_term_matches_finite_differences() {
    let spec = TorusSpec::new(1, 8).unwrap();
    let f = random_field(&spec, 55);
    let nl = NonlinearitySpec::new(1, Sign::Defocusing).unwrap();
    // Isolate the gradient term: energy minus the signed potential term.
    let grid = to_physical(&f, nl.dealias_pad()).unwrap();
    let potential = grid.mean_of(|v| v.norm_sqr() * v.norm_sqr()) / 4.0;
    let gradient = energy(&f, &nl) - potential;
    let fd = fd_gradient_energy(&f, 64);
    let rel = (gradient - fd).abs() / gradient;
    assert!(rel < 1e-6, "gradient {gradient} vs fd {fd} rel {rel}");
}

#[test]
fn energy_gradient_term_matches_finite_differences_2d() {
    let spec = TorusSpec::with_periods(2, &[1.0, 1.5], 4).unwrap();
    let f = random_field(&spec, 56);
    let nl = NonlinearitySpec::new(1, Sign::Defocusing).unwrap();
    let grid = to_physical(&f, nl.dealias_pad()).unwrap();
    let potential = grid.mean_of(|v| v.norm_sqr() * v.norm_sqr()) / 4.0;
    let gradient = energy(&f, &nl) - potential;
    let fd = fd_gradient_energy(&f, 48);
    let rel = (gradient - fd).abs() / gradient;
    assert!(rel < 1e-6, "gradient {gradient} vs fd {fd} rel {rel}");
}

#[test]
fn mass_equals_half_l2_on_all_representations() {
    let spec = TorusSpec::new(2, 3).unwrap();
    let f = random_field(&spec, 4);
    let m = mass(&f);
    assert!((sobolev_norm(&f, 0.0).powi(2) - 2.0 * m).abs() < 1e-14 * m.max(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn round_trip_identity(seed in 0u64..1_000_000, pad in 1usize..4, n in 1u32..7) {
        let spec = TorusSpec::new(1, n).unwrap();
        let f = random_field(&spec, seed);
        let back = to_spectral(&to_physical(&f, pad).unwrap()).unwrap();
        prop_assert!(max_coeff_diff(&f, &back) < 1e-12);
    }

    #[test]
    fn projection_contracts_every_sobolev_norm(seed in 0u64..1_000_000, m in 0u32..6, s in -1.0f64..2.5) {
        let spec = TorusSpec::new(2, 4).unwrap();
        let f = random_field(&spec, seed);
        let p = project_leq(&f, m);
        prop_assert!(sobolev_norm(&p, s) <= sobolev_norm(&f, s) * (1.0 + 1e-13));
        prop_assert!(max_coeff_diff(&project_leq(&p, m), &p) == 0.0);
    }

    #[test]
    fn semigroup_is_unitary_in_every_mode(seed in 0u64..1_000_000, t in -5.0f64..5.0) {
        let spec = TorusSpec::new(1, 5).unwrap();
        let f = random_field(&spec, seed);
        let g = apply_semigroup(&f, t);
        for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
            prop_assert!((a.norm() - b.norm()).abs() < 1e-13);
        }
    }

    #[test]
    fn parseval_for_random_fields(seed in 0u64..1_000_000, pad in 1usize..4) {
        let spec = TorusSpec::new(1, 6).unwrap();
        let f = random_field(&spec, seed);
        let grid = to_physical(&f, pad).unwrap();
        let quad = grid.mean_of(|v| v.norm_sqr());
        let spectral = f.l2_sq();
        prop_assert!((quad - spectral).abs() <= 1e-12 * spectral.max(1.0));
    }
}

#[test]
fn delta_and_projection_edge_cases() {
    let spec = TorusSpec::new(2, 4).unwrap();
    let f = SpectralField::delta(&spec, &[3, 0]).unwrap();
    assert_eq!(project_leq(&f, 2).l2_sq(), 0.0);
    assert_eq!(project_leq(&f, 3).l2_sq(), 1.0);

    let g = random_field(&spec, 9);
    // All cube modes lie within the Euclidean ball of radius N·√d.
    let back = project_leq(&g, 6);
    assert_eq!(max_coeff_diff(&back, &g), 0.0);
}

#[test]
fn to_physical_rejects_non_finite_input() {
    let spec = TorusSpec::new(1, 2).unwrap();
    let mut f = SpectralField::zeros(&spec);
    f.set(&[0], Complex64::new(f64::NAN, 0.0)).unwrap();
    assert!(to_physical(&f, 1).is_err());
}
