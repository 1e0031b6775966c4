use proptest::prelude::*;
use reweight_l1::sigcore::{top_support, IndexSet, SignalVector};
use reweight_l1::theory::{
    brute_force_rip, decay_condition_max_d1, eta, gamma, prop2_accuracy, prop2_simulate, rip_condition_ok,
};
use reweight_l1::SensingMatrix;

/// `delta_2` of a matrix with two columns, from the closed-form eigenvalues
/// of a symmetric 2x2 matrix.
fn delta2_two_columns(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let (g11, g22, g12) = (a * a + c * c, b * b + d * d, a * b + c * d);
    let mean = 0.5 * (g11 + g22);
    let rad = (0.25 * (g11 - g22).powi(2) + g12 * g12).sqrt();
    (mean + rad - 1.0).max(1.0 - (mean - rad))
}

proptest! {
    #[test]
    fn rip_of_two_columns_matches_closed_form(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0) {
        let m = SensingMatrix::from_row_slice(2, 2, &[a, b, c, d]).unwrap();
        let got = brute_force_rip(&m, 2).unwrap().delta;
        prop_assert!((got - delta2_two_columns(a, b, c, d)).abs() <= 1e-9);
    }

    #[test]
    fn rip_constants_are_nondecreasing_in_order(seed in 0u64..10_000) {
        let a = reweight_l1::gen_gaussian(4, 7, seed).unwrap();
        let d: Vec<f64> = (1..=4).map(|k| brute_force_rip(&a, k).unwrap().delta).collect();
        for w in d.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn larger_support_estimate_never_lowers_d1(
        mags in proptest::collection::vec(0.0f64..10.0, 8..30),
        extra in proptest::collection::vec(0usize..30, 0..10),
        omega in 0.0f64..=1.0,
        e in 1.0f64..20.0,
    ) {
        let dim = mags.len();
        let x = SignalVector::new(mags).unwrap();
        let k = dim / 3;
        let s0 = (k / 2).max(1);
        let t0 = top_support(&x, k).unwrap();
        let small = top_support(&x, s0).unwrap();
        let big = small.union(&IndexSet::new(dim, extra.into_iter().filter(|&i| i < dim)).unwrap());
        let d_small = decay_condition_max_d1(&x, &t0, &small, omega, e, s0).unwrap();
        let d_big = decay_condition_max_d1(&x, &t0, &big, omega, e, s0).unwrap();
        prop_assert!(d_big.unwrap_or(0) >= d_small.unwrap_or(0));
    }

    #[test]
    fn gamma_is_one_at_half_accuracy_without_weights(omega in 0.0f64..=1.0) {
        // At alpha = 1/2 the square-root term is 1, so gamma is 1 for every omega.
        prop_assert!((gamma(omega, 0.5) - 1.0).abs() <= 1e-15);
    }
}

#[test]
fn eta_exists_exactly_when_the_rip_condition_holds() {
    for &(omega, alpha, a, d) in &[(1.0, 0.8, 3.0, 0.3), (1.0, 0.8, 3.0, 0.6), (0.2, 0.9, 2.0, 0.1), (0.0, 0.55, 1.5, 0.4)] {
        let ok = rip_condition_ok(a, gamma(omega, alpha), d);
        assert_eq!(eta(omega, alpha, a, d, d).is_ok(), ok, "{:?}", (omega, alpha, a, d));
    }
}

#[test]
fn simulated_accuracy_tracks_formula_across_parameters() {
    for &(s0, s1) in &[(10, 10), (10, 12), (12, 18), (15, 20)] {
        let sim = prop2_simulate(300, 20, s0, s1, 40_000, (s0 * 100 + s1) as u64).unwrap();
        let f = prop2_accuracy(s0, 20, sim.rho).unwrap().accuracy;
        assert!((sim.accuracy - f).abs() <= 0.02, "s0={s0} s1={s1}: {} vs {f}", sim.accuracy);
    }
}
