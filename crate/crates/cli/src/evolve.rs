//! `flat-evolve` and `frw-evolve`.

use crate::config::{key, Bound, Def, KeySpec, Reader};
use crate::output::{scaling, sweep_dir, Output};
use crate::{Input, NumericalFailure};
use anyhow::Result;
use curved_dirac::dirac_continuum::{
    branch_packet, evolve_frw, flat_trajectory, gaussian_position_packet, packet_width,
    uniform_times, zb_analysis, EvolveOptions,
};
use curved_dirac::io::{Matrix, Table, Value as Cell};
use curved_dirac::{Branch, ConformalProfile, SpinorGrid, Trajectory, C64};
use std::path::PathBuf;

const FLAT_DRIFT: f64 = 1e-12;
const FRW_DRIFT: f64 = 1e-8;

fn common_keys() -> Vec<KeySpec> {
    vec![
        key("mass", "energy", Def::Value("1.0"), "mass m ≥ 0; a list runs each value into its own m_<value>/ directory"),
        key("sigma", "length", Def::Optional, "Gaussian width σ of a position packet ψ ∝ exp(−x²/2σ² + i k0 x)·components; exclusive with sigma_k"),
        key("sigma_k", "1/length", Def::Optional, "momentum width of a single-branch packet, weight exp(−(k−k0)²/2σ_k²); exclusive with sigma"),
        key("k0", "1/length", Def::Value("0.0"), "mean momentum of the packet"),
        key("branch", "-", Def::Value("\"+\""), "energy branch of a sigma_k packet: \"+\" or \"-\""),
        key("components", "-", Def::Value("[1, 1]"), "spinor (ψ₁, ψ₂) of a sigma packet; entries are numbers or [re, im]"),
        key("L", "length", Def::Value("200.0"), "periodic domain length"),
        key("N", "-", Def::Value("1024"), "grid points (power of two)"),
        key("t_max", "time", Def::Required, "end of the run"),
        key("dt", "time", Def::Value("0.02"), "sampling interval of the observables"),
        key("scale_t_max_with_mass", "-", Def::Value("false"), "multiply t_max by each mass (same number of ZB periods per mass)"),
        key("m_ref", "energy", Def::Optional, "mass defining the ± energy projections (default: mass)"),
        key("density_every", "samples", Def::Optional, "write the density every this many samples (default: at most 200 time slices)"),
        key("x_stride", "grid points", Def::Value("1"), "write every x_stride-th grid point of the density"),
        key("pgm", "-", Def::Value("false"), "also write density.pgm (|ψ|, rows = time, cols = space)"),
        key("pgm_scaling", "-", Def::Value("\"linear\""), "gray scaling of the PGM: linear or log"),
        key("zb_windows", "time", Def::Value("[]"), "[[lo, hi], ...] windows for the ZB analysis (default: whole run)"),
    ]
}

pub fn flat_schema() -> Vec<KeySpec> {
    common_keys()
}

pub fn frw_schema() -> Vec<KeySpec> {
    let mut k = common_keys();
    k.extend([
        key(
            "profile.kind",
            "-",
            Def::Required,
            "conformal factor Ω(t): constant, squarehat or gaussian; m_eff(t) = Ω(t)·m",
        ),
        key("profile.value", "-", Def::Value("1.0"), "constant: Ω"),
        key(
            "profile.t0",
            "time",
            Def::Value("1.0"),
            "squarehat: Ω = omega_inside on [0, t0], 1 elsewhere",
        ),
        key(
            "profile.omega_inside",
            "-",
            Def::Value("0.5"),
            "squarehat: Ω inside the hat (≥ 0)",
        ),
        key(
            "profile.depth",
            "-",
            Def::Value("0.5"),
            "gaussian: Ω = 1 − depth·exp(−(t−center)²/2 width²)",
        ),
        key(
            "profile.center",
            "time",
            Def::Value("0.0"),
            "gaussian: centre of the dip",
        ),
        key(
            "profile.width",
            "time",
            Def::Value("1.0"),
            "gaussian: width of the dip",
        ),
        key(
            "step_dt",
            "time",
            Def::Optional,
            "integrator step (default 0.01 / max E_k)",
        ),
    ]);
    k
}

#[derive(Debug, Clone)]
pub enum Packet {
    Position { sigma: f64, components: [C64; 2] },
    Branch { sigma_k: f64, branch: Branch },
}

#[derive(Debug, Clone)]
pub struct PacketSpec {
    pub packet: Packet,
    pub k0: f64,
}

impl PacketSpec {
    /// Read `<prefix>sigma`/`sigma_k`/… for a packet of the given kind.
    pub fn read(r: &mut Reader, prefix: &str, gaussian: bool) -> PacketSpec {
        let k = |s: &str| format!("{prefix}{s}");
        let k0 = r.f64(&k("k0"), Bound::Any);
        let packet = if gaussian {
            Packet::Position {
                sigma: r.f64(&k("sigma"), Bound::Positive),
                components: r.spinor(&k("components")),
            }
        } else {
            let branch = match r
                .choice(&k("branch"), &["+", "-", "positive", "negative"])
                .as_str()
            {
                "-" | "negative" => Branch::Negative,
                _ => Branch::Positive,
            };
            Packet::Branch {
                sigma_k: r.f64(&k("sigma_k"), Bound::Positive),
                branch,
            }
        };
        PacketSpec { packet, k0 }
    }

    pub fn grid(&self, m: f64, length: f64, n: usize) -> Result<SpinorGrid> {
        Ok(match &self.packet {
            Packet::Position { sigma, components } => {
                gaussian_position_packet(*sigma, *components, self.k0, length, n)?
            }
            Packet::Branch { sigma_k, branch } => {
                branch_packet(*sigma_k, self.k0, *branch, m, length, n)?
            }
        })
    }
}

pub fn read_profile(r: &mut Reader, prefix: &str, allow_squarehat: bool) -> ConformalProfile {
    let k = |s: &str| format!("{prefix}{s}");
    let kinds: &[&str] = if allow_squarehat {
        &["constant", "squarehat", "gaussian"]
    } else {
        &["constant", "gaussian"]
    };
    match r.choice(&k("kind"), kinds).as_str() {
        "constant" => ConformalProfile::Constant(r.f64(&k("value"), Bound::NonNegative)),
        "squarehat" => {
            let t0 = r.f64(&k("t0"), Bound::Positive);
            let inside = r.f64(&k("omega_inside"), Bound::NonNegative);
            ConformalProfile::SquareHat {
                t0,
                omega_sq_inside: inside * inside,
            }
        }
        "gaussian" => {
            let depth = r.f64(&k("depth"), Bound::Any);
            if !(depth < 1.0) {
                r.error(format!(
                    "'{}' = {depth} must be < 1 (Ω must stay positive)",
                    k("depth")
                ));
            }
            ConformalProfile::InvertedGaussian {
                depth,
                center: r.f64(&k("center"), Bound::Any),
                width: r.f64(&k("width"), Bound::Positive),
            }
        }
        _ => ConformalProfile::Constant(1.0),
    }
}

/// `ceil(n / 200)`: at most ~200 stored slices by default.
pub fn default_stride(n_samples: usize) -> usize {
    n_samples.div_ceil(200).max(1)
}

struct Settings {
    masses: Vec<f64>,
    packet: PacketSpec,
    length: f64,
    n: usize,
    t_max: f64,
    dt: f64,
    scale_t: bool,
    m_ref: Option<f64>,
    density_every: Option<usize>,
    x_stride: usize,
    pgm: bool,
    pgm_scaling: String,
    windows: Vec<(f64, f64)>,
    profile: Option<ConformalProfile>,
    step_dt: Option<f64>,
    outdir: PathBuf,
}

fn read(r: &mut Reader, frw: bool) -> Settings {
    let masses = r.f64_list("mass", Bound::NonNegative);
    let gaussian = match (r.present("sigma"), r.present("sigma_k")) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => {
            r.error("give exactly one of 'sigma' (position packet) and 'sigma_k' (branch packet), not both");
            true
        }
        (false, false) => {
            r.error(
                "missing packet width: give 'sigma' (position packet) or 'sigma_k' (branch packet)",
            );
            true
        }
    };
    let packet = PacketSpec::read(r, "", gaussian);
    let length = r.f64("L", Bound::Positive);
    let n = r.usize("N", 2);
    if n != 0 && !n.is_power_of_two() {
        r.error(format!("'N' = {n} must be a power of two"));
    }
    let t_max = r.f64("t_max", Bound::Positive);
    let dt = r.f64("dt", Bound::Positive);
    let scale_t = r.bool("scale_t_max_with_mass");
    if scale_t && masses.contains(&0.0) {
        r.error("'scale_t_max_with_mass' needs every mass > 0");
    }
    let m_ref = r.opt_f64("m_ref", Bound::NonNegative);
    let density_every = r.opt_usize("density_every", 1);
    let x_stride = r.usize("x_stride", 1);
    let pgm = r.bool("pgm");
    let pgm_scaling = r.choice("pgm_scaling", &["linear", "log"]);
    let windows = r.windows("zb_windows");
    let (profile, step_dt) = if frw {
        (
            Some(read_profile(r, "profile.", true)),
            r.opt_f64("step_dt", Bound::Positive),
        )
    } else {
        (None, None)
    };
    let outdir = PathBuf::from(r.string("outdir"));
    Settings {
        masses,
        packet,
        length,
        n,
        t_max,
        dt,
        scale_t,
        m_ref,
        density_every,
        x_stride,
        pgm,
        pgm_scaling,
        windows,
        profile,
        step_dt,
        outdir,
    }
}

fn zb_table() -> Table {
    Table::new([
        "mass",
        "t_lo",
        "t_hi",
        "frequency",
        "amplitude",
        "detected",
        "packet_width",
    ])
}

pub fn run(input: &Input, frw: bool) -> Result<()> {
    let schema = if frw { frw_schema() } else { flat_schema() };
    let mut r = input.reader(&schema);
    let s = read(&mut r, frw);
    let effective = r.finish()?;
    let command = if frw { "frw-evolve" } else { "flat-evolve" };
    let mut out = Output::create(&s.outdir, command, &effective)?;

    let sweep = s.masses.len() > 1;
    let mut summary = zb_table();
    let mut failures = Vec::new();
    for &m in &s.masses {
        let prefix = if sweep {
            format!("{}/", sweep_dir("m", m))
        } else {
            String::new()
        };
        let t_max = if s.scale_t { s.t_max * m } else { s.t_max };
        let times = uniform_times(t_max, s.dt);
        let every = s
            .density_every
            .unwrap_or_else(|| default_stride(times.len()));
        let state = s.packet.grid(m, s.length, s.n)?;
        let width = packet_width(&state);
        let opts = EvolveOptions {
            m_ref: s.m_ref,
            snapshot_every: every,
            dt: s.step_dt,
        };
        let traj = match &s.profile {
            Some(p) => evolve_frw(&state, m, p, &times, &opts)?,
            None => flat_trajectory(&state, m, &times, &opts)?,
        };
        for w in &traj.warnings {
            eprintln!("warning (m = {m}): {w}");
        }

        write_density(&mut out, &prefix, &traj, s.x_stride, s.pgm, &s.pgm_scaling)?;
        write_observables(&mut out, &prefix, &traj)?;
        if let Some(p) = &s.profile {
            let mut t = Table::new(["t", "omega", "m_eff"]);
            for &ti in &times {
                let o = p.omega(ti);
                t.push(vec![ti.into(), o.into(), (o * m).into()])?;
            }
            out.csv(&format!("{prefix}profile.csv"), &t)?;
        }

        let windows = if s.windows.is_empty() {
            vec![(times[0], times[times.len() - 1])]
        } else {
            s.windows.clone()
        };
        let mut zb = zb_table();
        for (lo, hi) in windows {
            let (ts, xs) = traj.window(lo, hi);
            let res = zb_analysis(&ts, &xs)?;
            let row: Vec<Cell> = vec![
                m.into(),
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
                    "m = {m}: t ∈ [{lo}, {hi}] ZB frequency {:.6} amplitude {:.6e}",
                    res.frequency, res.amplitude
                );
            } else {
                println!("m = {m}: t ∈ [{lo}, {hi}] no ZB");
            }
        }
        out.csv(&format!("{prefix}zb.csv"), &zb)?;

        let drift = traj.norm_drift();
        let tol = if frw { FRW_DRIFT } else { FLAT_DRIFT };
        println!("m = {m}: norm drift {drift:.3e} (tolerance {tol:e})");
        if !(drift <= tol) {
            failures.push(format!("m = {m}: norm drift {drift:e} exceeds {tol:e}"));
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

fn write_density(
    out: &mut Output,
    prefix: &str,
    traj: &Trajectory,
    stride: usize,
    pgm: bool,
    scale: &str,
) -> Result<()> {
    let mut t = Table::new(["t", "x", "rho1", "rho2", "rho"]);
    let mut pixels = Vec::new();
    let mut cols = 0;
    for (i, g) in &traj.snapshots {
        let time = traj.times[*i];
        let (p1, p2) = (g.psi1(), g.psi2());
        cols = 0;
        for j in (0..g.len()).step_by(stride) {
            let (r1, r2) = (p1[j].norm_sqr(), p2[j].norm_sqr());
            t.push(vec![
                time.into(),
                g.x(j).into(),
                r1.into(),
                r2.into(),
                (r1 + r2).into(),
            ])?;
            pixels.push((r1 + r2).sqrt());
            cols += 1;
        }
    }
    out.csv(&format!("{prefix}density.csv"), &t)?;
    if pgm {
        let m = Matrix::new(traj.snapshots.len(), cols, pixels)?;
        out.pgm(&format!("{prefix}density.pgm"), &m, scaling(scale))?;
    }
    Ok(())
}

fn write_observables(out: &mut Output, prefix: &str, traj: &Trajectory) -> Result<()> {
    let mut t = Table::new(["t", "mean_x", "norm", "pos_fraction", "neg_fraction"]);
    for (time, o) in traj.times.iter().zip(&traj.observables) {
        t.push(vec![
            (*time).into(),
            o.mean_x.into(),
            o.norm.into(),
            o.pos_fraction.into(),
            o.neg_fraction.into(),
        ])?;
    }
    out.csv(&format!("{prefix}observables.csv"), &t)
}
