//! `waveguide-evolve`: binary waveguide array as a staggered Dirac lattice.

use crate::config::{key, Bound, Def, KeySpec, Reader};
use crate::evolve::{default_stride, read_profile, Packet, PacketSpec};
use crate::output::{scaling, sweep_dir, Output};
use crate::{Input, NumericalFailure};
use anyhow::Result;
use curved_dirac::dirac_continuum::{uniform_times, zb_analysis};
use curved_dirac::io::{Table, Value as Cell};
use curved_dirac::waveguide::{
    dirac_coupling, intensity_map, lattice_mean_position, propagate, Boundary, PropagateOptions,
};
use curved_dirac::{ConformalProfile, DetuningProfile, ModeSpectrum, WaveguideState, C64};
use std::path::PathBuf;

pub fn schema() -> Vec<KeySpec> {
    vec![
        key("n_waveguides", "-", Def::Required, "number of waveguides (even; 2 per lattice site); a list runs each value into its own n_<value>/ directory"),
        key("d", "length", Def::Optional, "lattice spacing; coupling κ = −1/d. Give exactly one of d, kappa, L"),
        key("kappa", "1/length", Def::Optional, "coupling strength |κ|, sets d = 1/|κ|"),
        key("L", "length", Def::Optional, "array length; sets d = L / (n_waveguides/2)"),
        key("mass", "energy", Def::Value("1.0"), "alternating detuning amplitude: σ_l = (−1)^l·mass·Ω(z)"),
        key("profile.kind", "-", Def::Optional, "conformal factor Ω(z): constant or gaussian (default Ω ≡ 1)"),
        key("profile.value", "-", Def::Value("1.0"), "constant: Ω"),
        key("profile.depth", "-", Def::Value("0.5"), "gaussian: Ω = 1 − depth·exp(−(z−center)²/2 width²)"),
        key("profile.center", "length", Def::Value("0.0"), "gaussian: centre of the dip"),
        key("profile.width", "length", Def::Value("1.0"), "gaussian: width of the dip"),
        key("z_max", "length", Def::Required, "propagation distance (plays the role of time)"),
        key("dz", "length", Def::Value("0.02"), "sampling interval of the observables"),
        key("step_dz", "length", Def::Optional, "RK4 step (default 0.01 / (2|κ| + max|σ|))"),
        key("power_tol", "-", Def::Value("1e-8"), "allowed relative power drift"),
        key("boundary", "-", Def::Value("\"open\""), "open (c_0 = c_{N+1} = 0) or periodic"),
        key("initial.type", "-", Def::Required, "gaussian (position packet), branch (single-energy packet) or site (one excited waveguide)"),
        key("initial.sigma", "length", Def::Optional, "gaussian: width σ of exp(−x²/2σ² + i k0 x)·components"),
        key("initial.components", "-", Def::Value("[1, 1]"), "gaussian: spinor (ψ₁, ψ₂); entries are numbers or [re, im]"),
        key("initial.sigma_k", "1/length", Def::Optional, "branch: momentum width, weight exp(−(k−k0)²/2σ_k²)"),
        key("initial.branch", "-", Def::Value("\"+\""), "branch: \"+\" or \"-\""),
        key("initial.k0", "1/length", Def::Value("0.0"), "gaussian/branch: mean momentum"),
        key("initial.n_continuum", "-", Def::Value("2048"), "branch: Fourier modes used to build the continuum packet before sampling"),
        key("initial.site", "-", Def::Optional, "site: excited waveguide, 1-based (default: middle)"),
        key("snapshot_every", "samples", Def::Optional, "store amplitudes every this many samples (default: at most 200 slices)"),
        key("pgm_scaling", "-", Def::Value("\"linear\""), "gray scaling of lattice.pgm (|c_l|): linear or log"),
        key("zb_windows", "length", Def::Value("[]"), "[[lo, hi], ...] windows in z for the ZB analysis (default: whole run)"),
    ]
}

enum Initial {
    Continuum(PacketSpec, usize),
    Site(Option<usize>),
}

enum Spacing {
    D(f64),
    Kappa(f64),
    Length(f64),
}

struct Settings {
    sizes: Vec<usize>,
    spacing: Spacing,
    mass: f64,
    profile: Option<ConformalProfile>,
    z_max: f64,
    dz: f64,
    step_dz: Option<f64>,
    power_tol: f64,
    boundary: Boundary,
    initial: Initial,
    snapshot_every: Option<usize>,
    pgm_scaling: String,
    windows: Vec<(f64, f64)>,
    outdir: PathBuf,
}

fn read(r: &mut Reader) -> Settings {
    let sizes = r.usize_list("n_waveguides", 4);
    for &n in &sizes {
        if n % 2 != 0 {
            r.error(format!(
                "'n_waveguides' = {n} must be even (two waveguides per site)"
            ));
        }
    }
    let given: Vec<&str> = ["d", "kappa", "L"]
        .into_iter()
        .filter(|k| r.present(k))
        .collect();
    let spacing = match given.as_slice() {
        ["d"] => Spacing::D(r.f64("d", Bound::Positive)),
        ["kappa"] => Spacing::Kappa(r.f64("kappa", Bound::Positive)),
        ["L"] => Spacing::Length(r.f64("L", Bound::Positive)),
        _ => {
            r.error(format!(
                "give exactly one of 'd', 'kappa', 'L' (got {})",
                if given.is_empty() {
                    "none".into()
                } else {
                    given.join(", ")
                }
            ));
            for k in given {
                r.opt_f64(k, Bound::Positive);
            }
            Spacing::D(f64::NAN)
        }
    };
    let mass = r.f64("mass", Bound::NonNegative);
    let profile = r
        .present("profile.kind")
        .then(|| read_profile(r, "profile.", false));
    let z_max = r.f64("z_max", Bound::Positive);
    let dz = r.f64("dz", Bound::Positive);
    let step_dz = r.opt_f64("step_dz", Bound::Positive);
    let power_tol = r.f64("power_tol", Bound::Positive);
    let boundary = match r.choice("boundary", &["open", "periodic"]).as_str() {
        "periodic" => Boundary::Periodic,
        _ => Boundary::Open,
    };
    let initial = match r
        .choice("initial.type", &["gaussian", "branch", "site"])
        .as_str()
    {
        "site" => Initial::Site(r.opt_usize("initial.site", 1)),
        "branch" => {
            let spec = PacketSpec::read(r, "initial.", false);
            let n = r.usize("initial.n_continuum", 2);
            if n != 0 && !n.is_power_of_two() {
                r.error(format!(
                    "'initial.n_continuum' = {n} must be a power of two"
                ));
            }
            Initial::Continuum(spec, n)
        }
        _ => Initial::Continuum(PacketSpec::read(r, "initial.", true), 0),
    };
    let snapshot_every = r.opt_usize("snapshot_every", 1);
    let pgm_scaling = r.choice("pgm_scaling", &["linear", "log"]);
    let windows = r.windows("zb_windows");
    let outdir = PathBuf::from(r.string("outdir"));
    Settings {
        sizes,
        spacing,
        mass,
        profile,
        z_max,
        dz,
        step_dz,
        power_tol,
        boundary,
        initial,
        snapshot_every,
        pgm_scaling,
        windows,
        outdir,
    }
}

fn initial_state(s: &Settings, n_wg: usize, d: f64) -> Result<WaveguideState> {
    let sites = n_wg / 2;
    let length = sites as f64 * d;
    let state = match &s.initial {
        Initial::Site(l) => {
            let l = l.unwrap_or(n_wg / 2);
            if l > n_wg {
                return Err(crate::config::ConfigError(vec![format!(
                    "'initial.site' = {l} exceeds n_waveguides = {n_wg}"
                )])
                .into());
            }
            let mut c = vec![C64::new(0.0, 0.0); n_wg];
            c[l - 1] = C64::new(1.0, 0.0);
            WaveguideState::new(c, d, -0.5 * length)?
        }
        Initial::Continuum(spec, n_cont) => match &spec.packet {
            Packet::Position { sigma, components } => {
                let (sigma, k0, comp) = (*sigma, spec.k0, *components);
                WaveguideState::from_spinor_fn(sites, d, |x| {
                    let g = C64::from_polar((-x * x / (2.0 * sigma * sigma)).exp(), k0 * x);
                    [comp[0] * g, comp[1] * g]
                })?
            }
            Packet::Branch { .. } => {
                let spectrum = ModeSpectrum::from_grid(&spec.grid(s.mass, length, *n_cont)?);
                WaveguideState::from_spinor_fn(sites, d, |x| spectrum.evaluate(x))?
            }
        },
    };
    Ok(state.normalized()?)
}

fn zb_table() -> Table {
    Table::new([
        "n_waveguides",
        "z_lo",
        "z_hi",
        "frequency",
        "amplitude",
        "detected",
        "packet_width",
    ])
}

fn lattice_width(s: &WaveguideState) -> f64 {
    let mean = lattice_mean_position(s);
    let p = s.power();
    let var: f64 = s
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, c)| (s.position(i + 1) - mean).powi(2) * c.norm_sqr())
        .sum::<f64>()
        / p;
    (2.0 * var).sqrt()
}

pub fn run(input: &Input) -> Result<()> {
    let mut r = input.reader(&schema());
    let s = read(&mut r);
    let effective = r.finish()?;
    let mut out = Output::create(&s.outdir, "waveguide-evolve", &effective)?;
    let sweep = s.sizes.len() > 1;
    let mut summary = zb_table();
    let mut failures = Vec::new();
    for &n_wg in &s.sizes {
        let prefix = if sweep {
            format!("{}/", sweep_dir("n", n_wg))
        } else {
            String::new()
        };
        let d = match s.spacing {
            Spacing::D(d) => d,
            Spacing::Kappa(k) => 1.0 / k,
            Spacing::Length(l) => l / (n_wg / 2) as f64,
        };
        let kappa = dirac_coupling(d);
        let state = initial_state(&s, n_wg, d)?;
        let width = lattice_width(&state);
        let z = uniform_times(s.z_max, s.dz);
        let every = s.snapshot_every.unwrap_or_else(|| default_stride(z.len()));
        let detuning = match &s.profile {
            Some(p) => DetuningProfile::Conformal {
                mass: s.mass,
                profile: p.clone(),
            },
            None => DetuningProfile::Uniform(s.mass),
        };
        let opts = PropagateOptions {
            dz: s.step_dz,
            boundary: s.boundary,
            snapshot_every: every,
            power_tol: Some(s.power_tol),
        };
        println!("N_wg = {n_wg}: d = {d}, κ = {kappa} (z plays the role of t)");
        let traj = propagate(&state, kappa, &detuning, &z, &opts)?;
        for w in &traj.warnings {
            eprintln!("warning (N_wg = {n_wg}): {w}");
        }

        let mut amps = Table::new(["z", "l", "re_c", "im_c", "abs_c"]);
        for (i, c) in &traj.snapshots {
            for (l, v) in c.iter().enumerate() {
                amps.push(vec![
                    traj.z[*i].into(),
                    Cell::Int(l as i64 + 1),
                    v.re.into(),
                    v.im.into(),
                    v.norm().into(),
                ])?;
            }
        }
        out.csv(&format!("{prefix}lattice.csv"), &amps)?;
        let mut obs = Table::new(["z", "mean_x", "power"]);
        for ((zi, x), p) in traj.z.iter().zip(&traj.mean_x).zip(&traj.power) {
            obs.push(vec![(*zi).into(), (*x).into(), (*p).into()])?;
        }
        out.csv(&format!("{prefix}lattice_observables.csv"), &obs)?;
        out.pgm(
            &format!("{prefix}lattice.pgm"),
            &intensity_map(&traj),
            scaling(&s.pgm_scaling),
        )?;

        let windows = if s.windows.is_empty() {
            vec![(z[0], z[z.len() - 1])]
        } else {
            s.windows.clone()
        };
        let mut zb = zb_table();
        for (lo, hi) in windows {
            let (zs, xs) = traj.window(lo, hi);
            let res = zb_analysis(&zs, &xs)?;
            let row: Vec<Cell> = vec![
                Cell::Int(n_wg as i64),
                lo.into(),
                hi.into(),
                res.frequency.into(),
                res.amplitude.into(),
                Cell::Int(res.detected as i64),
                width.into(),
            ];
            zb.push(row.clone())?;
            summary.push(row)?;
            if res.detected {
                println!(
                    "N_wg = {n_wg}: z ∈ [{lo}, {hi}] ZB frequency {:.6} amplitude {:.6e}",
                    res.frequency, res.amplitude
                );
            } else {
                println!("N_wg = {n_wg}: z ∈ [{lo}, {hi}] no ZB");
            }
        }
        out.csv(&format!("{prefix}zb.csv"), &zb)?;

        let drift = traj.power_drift();
        println!(
            "N_wg = {n_wg}: power drift {drift:.3e} (tolerance {:e})",
            s.power_tol
        );
        if !(drift <= s.power_tol) {
            failures.push(format!("N_wg = {n_wg}: power drift {drift:e}"));
        }
    }
    if sweep {
        out.csv("zb_summary.csv", &summary)?;
    }
    let manifest = out.finish()?;
    println!("wrote {}", manifest.display());
    if !failures.is_empty() {
        return Err(NumericalFailure(failures.join("; ")).into());
    }
    Ok(())
}
