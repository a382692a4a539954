use curved_dirac::dirac_continuum::ConformalProfile;
use curved_dirac::scalar_bogolyubov::{
    analytic_squarehat, gaussian_window, numeric_bogolyubov, numeric_spectrum, particle_number,
    FrequencyProfile, NumericOptions,
};
use proptest::prelude::*;

fn dip(depth: f64) -> ConformalProfile {
    ConformalProfile::InvertedGaussian {
        depth,
        center: 0.0,
        width: 1.0,
    }
}

#[test]
fn square_hat_numeric_matches_closed_form_over_grid() {
    let opts = NumericOptions::default();
    for m in [0.5, 1.0, 2.0] {
        for t0 in [0.3, 1.0, 2.5] {
            let ks: Vec<f64> = (0..40).map(|i| 0.05 + 0.1 * i as f64).collect();
            let num = numeric_spectrum(
                &ks,
                m,
                &ConformalProfile::square_hat(t0),
                -1.0,
                t0 + 1.0,
                &opts,
            )
            .unwrap();
            for (k, n) in ks.iter().zip(&num) {
                if (k - m).abs() < 1e-9 {
                    continue;
                }
                let a = analytic_squarehat(*k, m, t0).unwrap();
                assert!(
                    (n.pair.alpha - a.alpha).norm() < 1e-6,
                    "alpha k={k} m={m} t0={t0}"
                );
                assert!(
                    (n.pair.beta - a.beta).norm() < 1e-6,
                    "beta k={k} m={m} t0={t0}"
                );
                assert!((particle_number(&n.pair) - particle_number(&a)).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn square_hat_reference_value() {
    // |β|² = sin²(√3)/15 for k = 2, m = 1, t0 = 1
    let a = analytic_squarehat(2.0, 1.0, 1.0).unwrap();
    let expect = 3f64.sqrt().sin().powi(2) / 15.0;
    assert!((particle_number(&a) - expect).abs() < 1e-14);
    assert!((particle_number(&a) - 0.064_948_106_528_06).abs() < 1e-12);
}

#[test]
fn massless_field_is_conformally_trivial() {
    let opts = NumericOptions::default();
    let (t_in, t_out) = gaussian_window(0.0, 1.0);
    for k in [0.1, 0.7, 2.0] {
        let r = numeric_bogolyubov(&FrequencyProfile::new(k, 0.0, dip(0.5)), t_in, t_out, &opts)
            .unwrap();
        assert!(particle_number(&r.pair) < 1e-12);
        let r = numeric_bogolyubov(
            &FrequencyProfile::new(k, 0.0, ConformalProfile::square_hat(1.0)),
            -1.0,
            2.0,
            &opts,
        )
        .unwrap();
        assert!(particle_number(&r.pair) < 1e-12);
    }
}

#[test]
fn production_falls_off_with_momentum() {
    let opts = NumericOptions::default();
    let (t_in, t_out) = gaussian_window(0.0, 1.0);
    let m = 1.0;
    let n = |k: f64| {
        particle_number(
            &numeric_bogolyubov(&FrequencyProfile::new(k, m, dip(0.5)), t_in, t_out, &opts)
                .unwrap()
                .pair,
        )
    };
    assert!(n(4.0 * m) < n(2.0 * m));
    assert!(n(2.0 * m) < n(m));
}

#[test]
fn gaussian_dip_regression() {
    // reference from an independent 8th-order adaptive integration at rtol 1e-13
    let opts = NumericOptions::default();
    let (t_in, t_out) = gaussian_window(0.0, 1.0);
    for (k, expect) in [
        (0.5, 0.060_934_395_970_176_615),
        (1.0, 0.001_748_343_901_893_820_1),
        (2.0, 1.191_350_912_807_665_8e-6),
    ] {
        let r = numeric_bogolyubov(&FrequencyProfile::new(k, 1.0, dip(0.5)), t_in, t_out, &opts)
            .unwrap();
        let n = particle_number(&r.pair);
        assert!(
            (n - expect).abs() < 1e-9 * expect.max(1e-3),
            "k={k}: {n} vs {expect}"
        );
    }
}

#[test]
fn wronskian_is_conserved_along_the_mode() {
    let (t_in, t_out) = gaussian_window(0.0, 1.0);
    let r = numeric_bogolyubov(
        &FrequencyProfile::new(0.8, 1.5, dip(0.7)),
        t_in,
        t_out,
        &NumericOptions::default(),
    )
    .unwrap();
    assert!(r.mode.times.len() > 10);
    assert!(r.mode.max_wronskian_deviation().unwrap() < 1e-8);
}

#[test]
fn asymptotically_curved_window_is_rejected() {
    let r = numeric_bogolyubov(
        &FrequencyProfile::new(1.0, 1.0, dip(0.5)),
        -1.0,
        1.0,
        &NumericOptions::default(),
    );
    assert!(r.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn analytic_pairs_are_normalized(k in 0.0f64..5.0, m in 0.1f64..3.0, t0 in 0.01f64..5.0) {
        prop_assume!((k - m).abs() > 1e-3);
        let a = analytic_squarehat(k, m, t0).unwrap();
        prop_assert!(a.normalization_residual() < 1e-10 * (1.0 + a.beta.norm_sqr()));
    }

    #[test]
    fn numeric_pairs_are_normalized(k in 0.0f64..3.0, m in 0.1f64..2.0, depth in 0.0f64..0.9) {
        let (t_in, t_out) = gaussian_window(0.0, 1.0);
        let r = numeric_bogolyubov(&FrequencyProfile::new(k, m, dip(depth)), t_in, t_out,
                                   &NumericOptions::default()).unwrap();
        prop_assert!(r.pair.normalization_residual() < 1e-8);
    }
}
