use curved_dirac::dirac_continuum::{evolve_flat, ConformalProfile, ModeSpectrum, SpinorGrid};
use curved_dirac::waveguide::{
    dirac_coupling, discretize, intensity_map, propagate, reconstruct, Boundary, DetuningProfile,
    PropagateOptions, WaveguideState,
};
use curved_dirac::C64;
use proptest::prelude::*;
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

/// `J_n(x) = (1/π) ∫₀^π cos(nτ − x sin τ) dτ`, trapezoid rule (spectrally accurate here).
fn bessel_j(n: i32, x: f64) -> f64 {
    let m = 2000;
    let h = PI / m as f64;
    let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
    let mut s = 0.5 * (f(0.0) + f(PI));
    for j in 1..m {
        s += f(j as f64 * h);
    }
    s * h / PI
}

#[test]
fn single_site_excitation_spreads_as_bessel_functions() {
    let (n_wg, l0) = (201, 101);
    for kappa in [-1.0, 0.7] {
        let s = WaveguideState::single_site(n_wg, l0, 1.0).unwrap();
        let z = [0.0, 2.5, 6.0];
        let traj = propagate(
            &s,
            kappa,
            &DetuningProfile::Uniform(0.0),
            &z,
            &PropagateOptions::default(),
        )
        .unwrap();
        let c = &traj.final_state;
        for n in -30i32..=30 {
            let expect = (-I).powi(n) * bessel_j(n, 2.0 * kappa * 6.0);
            let got = c.amplitude((l0 as i32 + n) as usize);
            assert!(
                (got - expect).norm() < 1e-8,
                "kappa={kappa} n={n}: {got} vs {expect}"
            );
        }
    }
}

/// Reference: the staggered Dirac difference equations written directly in
/// `(ψ₁, ψ₂)`, open ends `ψ₁(0) = ψ₂(N+1) = 0`, same RK4 steps.
fn staggered_reference(
    psi1: &[C64],
    psi2: &[C64],
    d: f64,
    mass: impl Fn(f64) -> f64,
    z1: f64,
    steps: usize,
) -> (Vec<C64>, Vec<C64>) {
    let n = psi1.len();
    let rhs = |t: f64, p1: &[C64], p2: &[C64]| {
        let m = mass(t);
        let mut d1 = vec![C64::new(0.0, 0.0); n];
        let mut d2 = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let p2_next = if j + 1 < n {
                p2[j + 1]
            } else {
                C64::new(0.0, 0.0)
            };
            let p1_prev = if j > 0 { p1[j - 1] } else { C64::new(0.0, 0.0) };
            // i ψ̇₁ = −i(ψ₂(n+1) − ψ₂(n))/d + mψ₁ ; i ψ̇₂ = −i(ψ₁(n) − ψ₁(n−1))/d − mψ₂
            d1[j] = -(p2_next - p2[j]) / d - I * m * p1[j];
            d2[j] = -(p1[j] - p1_prev) / d + I * m * p2[j];
        }
        (d1, d2)
    };
    let h = z1 / steps as f64;
    let (mut a, mut b) = (psi1.to_vec(), psi2.to_vec());
    let axpy = |x: &[C64], y: &[C64], s: f64| -> Vec<C64> {
        x.iter().zip(y).map(|(u, v)| u + v * s).collect()
    };
    for s in 0..steps {
        let t = s as f64 * h;
        let (k1a, k1b) = rhs(t, &a, &b);
        let (k2a, k2b) = rhs(
            t + 0.5 * h,
            &axpy(&a, &k1a, 0.5 * h),
            &axpy(&b, &k1b, 0.5 * h),
        );
        let (k3a, k3b) = rhs(
            t + 0.5 * h,
            &axpy(&a, &k2a, 0.5 * h),
            &axpy(&b, &k2b, 0.5 * h),
        );
        let (k4a, k4b) = rhs(t + h, &axpy(&a, &k3a, h), &axpy(&b, &k3b, h));
        for j in 0..n {
            a[j] += (k1a[j] + (k2a[j] + k3a[j]) * 2.0 + k4a[j]) * (h / 6.0);
            b[j] += (k1b[j] + (k2b[j] + k3b[j]) * 2.0 + k4b[j]) * (h / 6.0);
        }
    }
    (a, b)
}

#[test]
fn array_reproduces_staggered_dirac_equation() {
    let (length, sites) = (30.0, 60);
    let d = length / sites as f64;
    let grid = SpinorGrid::from_fn(length, sites, |x| {
        let g = (-x * x / 8.0).exp();
        [C64::from_polar(g, 0.4 * x), C64::new(0.3 * g, -0.2 * g)]
    })
    .unwrap();
    let profile = ConformalProfile::InvertedGaussian {
        depth: 0.4,
        center: 2.0,
        width: 0.7,
    };
    let mass = 1.3;
    let (z1, steps) = (4.0, 1600);
    let lattice = discretize(&grid, d).unwrap();
    let traj = propagate(
        &lattice,
        dirac_coupling(d),
        &DetuningProfile::Conformal {
            mass,
            profile: profile.clone(),
        },
        &[0.0, z1],
        &PropagateOptions {
            dz: Some(z1 / steps as f64),
            ..Default::default()
        },
    )
    .unwrap();
    let got = reconstruct(&traj.final_state).unwrap();
    let (r1, r2) = staggered_reference(
        grid.psi1(),
        grid.psi2(),
        d,
        |t| mass * profile.omega(t),
        z1,
        steps,
    );
    for j in 0..sites {
        assert!((got.psi1()[j] - r1[j]).norm() < 1e-10, "psi1[{j}]");
        assert!((got.psi2()[j] - r2[j]).norm() < 1e-10, "psi2[{j}]");
    }
}

/// L2 distance between the lattice solution and the continuum one sampled at
/// the staggered points, for a packet that stays clear of the array ends.
fn continuum_gap(n_wg: usize) -> f64 {
    let (length, m, t) = (40.0, 1.0, 4.0);
    let f = |x: f64| {
        let g = (-x * x / 8.0).exp();
        [
            C64::from_polar(g, 0.5 * x),
            C64::from_polar(0.5 * g, 0.5 * x),
        ]
    };
    let sites = n_wg / 2;
    let d = length / sites as f64;
    let s = WaveguideState::from_spinor_fn(sites, d, f).unwrap();
    let traj = propagate(
        &s,
        dirac_coupling(d),
        &DetuningProfile::Uniform(m),
        &[0.0, t],
        &PropagateOptions::default(),
    )
    .unwrap();
    let lat = reconstruct(&traj.final_state).unwrap();

    let fine = SpinorGrid::from_fn(200.0, 2048, f).unwrap();
    // from_fn normalizes; undo so both sides share the raw amplitude
    let raw = SpinorGrid::new(
        200.0,
        fine.positions().iter().map(|x| f(*x)[0]).collect(),
        fine.positions().iter().map(|x| f(*x)[1]).collect(),
    )
    .unwrap();
    let spec = ModeSpectrum::from_grid(&evolve_flat(&raw, m, t));
    let mut err = 0.0;
    for n in 0..sites {
        let x = s.origin + n as f64 * d;
        err += (lat.psi1()[n] - spec.evaluate(x)[0]).norm_sqr() * d;
        err += (lat.psi2()[n] - spec.evaluate(x - 0.5 * d)[1]).norm_sqr() * d;
    }
    err.sqrt()
}

#[test]
fn refining_the_array_approaches_the_continuum() {
    let gaps: Vec<f64> = [50, 100, 200, 502]
        .iter()
        .map(|n| continuum_gap(*n))
        .collect();
    for w in gaps.windows(2) {
        assert!(w[1] < w[0], "{gaps:?}");
    }
    assert!(gaps[3] < 0.05 * gaps[0], "{gaps:?}");
}

#[test]
fn intensity_map_is_mirror_symmetric_for_a_central_input() {
    let (n_wg, l0) = (121, 61);
    let s = WaveguideState::single_site(n_wg, l0, 1.0).unwrap();
    let z: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
    let traj = propagate(
        &s,
        -1.0,
        &DetuningProfile::Uniform(0.5),
        &z,
        &PropagateOptions {
            snapshot_every: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let map = intensity_map(&traj);
    assert_eq!((map.rows, map.cols), (z.len(), n_wg));
    for r in 0..map.rows {
        for n in 1..60 {
            assert!((map.get(r, l0 - 1 + n) - map.get(r, l0 - 1 - n)).abs() < 1e-12);
        }
    }
    assert!(traj.power_drift() < 1e-10);
}

#[test]
fn power_is_conserved_with_time_dependent_detuning() {
    let s = WaveguideState::single_site(80, 40, 0.5).unwrap();
    let det = DetuningProfile::Conformal {
        mass: 2.0,
        profile: ConformalProfile::InvertedGaussian {
            depth: 0.8,
            center: 2.0,
            width: 0.5,
        },
    };
    for boundary in [Boundary::Open, Boundary::Periodic] {
        let opts = PropagateOptions {
            boundary,
            ..Default::default()
        };
        let traj = propagate(&s, -2.0, &det, &[0.0, 1.0, 3.0, 6.0], &opts).unwrap();
        assert!(traj.power_drift() < 1e-8, "{boundary:?}");
    }
}

#[test]
fn imaginary_detuning_is_rejected() {
    // Ω² < 0 inside the square hat: no real detuning exists
    let s = WaveguideState::single_site(20, 10, 1.0).unwrap();
    let det = DetuningProfile::Conformal {
        mass: 1.0,
        profile: ConformalProfile::square_hat(1.0),
    };
    let r = propagate(&s, -1.0, &det, &[-1.0, 2.0], &PropagateOptions::default());
    assert!(matches!(
        r,
        Err(curved_dirac::WaveguideError::NonFinite { .. })
    ));
}

#[test]
fn coarse_steps_trip_the_power_check() {
    let s = WaveguideState::single_site(40, 20, 1.0).unwrap();
    let opts = PropagateOptions {
        dz: Some(0.9),
        ..Default::default()
    };
    assert!(propagate(
        &s,
        -1.0,
        &DetuningProfile::Uniform(0.0),
        &[0.0, 20.0],
        &opts
    )
    .is_err());
}

#[test]
fn edge_contact_is_reported() {
    let s = WaveguideState::single_site(20, 10, 1.0).unwrap();
    let traj = propagate(
        &s,
        -1.0,
        &DetuningProfile::Uniform(0.0),
        &[0.0, 10.0],
        &PropagateOptions::default(),
    )
    .unwrap();
    assert!(!traj.warnings.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn discretize_reconstruct_round_trip(sites in 2usize..64, seed in any::<u64>()) {
        let mut x = seed;
        let mut next = || { x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5 };
        let psi1: Vec<C64> = (0..sites).map(|_| C64::new(next(), next())).collect();
        let psi2: Vec<C64> = (0..sites).map(|_| C64::new(next(), next())).collect();
        let g = SpinorGrid::new(sites as f64 * 0.3, psi1, psi2).unwrap();
        let lat = discretize(&g, g.dx()).unwrap();
        prop_assert!((lat.power() * g.dx() - g.norm()).abs() < 1e-12 * (1.0 + g.norm()));
        let back = reconstruct(&lat).unwrap();
        prop_assert_eq!(back.psi1(), g.psi1());
        prop_assert_eq!(back.psi2(), g.psi2());
    }

    #[test]
    fn propagation_preserves_power(kappa in -3.0f64..3.0, sigma in -2.0f64..2.0, l in 1usize..30) {
        let s = WaveguideState::single_site(30, l, 1.0).unwrap();
        let traj = propagate(&s, kappa, &DetuningProfile::Uniform(sigma), &[0.0, 2.0],
                             &PropagateOptions::default()).unwrap();
        prop_assert!(traj.power_drift() < 1e-8);
    }
}
