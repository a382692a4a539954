use criterion::{criterion_group, criterion_main, Criterion};
use curved_dirac::dirac_continuum::{
    evolve_flat, evolve_frw, gaussian_position_packet, uniform_times, zb_analysis, EvolveOptions,
};
use curved_dirac::geometry::{christoffel, ricci_scalar};
use curved_dirac::scalar_bogolyubov::{gaussian_window, numeric_bogolyubov, NumericOptions};
use curved_dirac::waveguide::{dirac_coupling, propagate, PropagateOptions};
use curved_dirac::{
    ConformalProfile, DetuningProfile, FrequencyProfile, MetricSpec, Point, WaveguideState, C64,
};
use std::hint::black_box;

fn dip() -> ConformalProfile {
    ConformalProfile::InvertedGaussian {
        depth: 0.5,
        center: 1.0,
        width: 0.5,
    }
}

fn continuum(c: &mut Criterion) {
    let one = C64::new(1.0, 0.0);
    let psi = gaussian_position_packet(3.0, [one, one], 0.0, 200.0, 1024).unwrap();
    c.bench_function("flat_exact_n1024", |b| {
        b.iter(|| evolve_flat(black_box(&psi), 1.0, 10.0))
    });

    let small = gaussian_position_packet(3.0, [one, one], 0.0, 100.0, 256).unwrap();
    let times = [0.0, 2.0];
    c.bench_function("frw_midpoint_n256_t2", |b| {
        b.iter(|| {
            evolve_frw(
                black_box(&small),
                1.0,
                &dip(),
                &times,
                &EvolveOptions::default(),
            )
            .unwrap()
        })
    });

    let t = uniform_times(50.0, 0.02);
    let x: Vec<f64> = t.iter().map(|t| 0.1 * t + 0.3 * (2.0 * t).sin()).collect();
    c.bench_function("zb_analysis_2500", |b| {
        b.iter(|| zb_analysis(black_box(&t), black_box(&x)).unwrap())
    });
}

fn bogolyubov(c: &mut Criterion) {
    let freq = FrequencyProfile::new(0.7, 1.0, dip());
    let (t_in, t_out) = gaussian_window(1.0, 0.5);
    let opts = NumericOptions::default();
    c.bench_function("bogolyubov_gaussian_mode", |b| {
        b.iter(|| numeric_bogolyubov(black_box(&freq), t_in, t_out, &opts).unwrap())
    });
}

fn lattice(c: &mut Criterion) {
    let d = 0.4;
    let state = WaveguideState::from_spinor_fn(250, d, |x| {
        let g = C64::new((-x * x / 18.0).exp(), 0.0);
        [g, g]
    })
    .unwrap();
    let z = uniform_times(1.0, 0.1);
    let detuning = DetuningProfile::Uniform(1.0);
    let opts = PropagateOptions::default();
    c.bench_function("waveguide_rk4_n500_z1", |b| {
        b.iter(|| propagate(black_box(&state), dirac_coupling(d), &detuning, &z, &opts).unwrap())
    });
}

fn geometry(c: &mut Criterion) {
    let family = MetricSpec::catalog()[1].build();
    let p = Point::new(0.3, 0.2);
    c.bench_function("christoffel_general", |b| {
        b.iter(|| christoffel(black_box(&family), p).unwrap())
    });
    c.bench_function("ricci_scalar_general", |b| {
        b.iter(|| ricci_scalar(black_box(&family), p).unwrap())
    });
}

criterion_group!(benches, continuum, bogolyubov, lattice, geometry);
criterion_main!(benches);
