//! `bogolyubov`: scalar-mode Bogolyubov spectrum for a square-hat or Gaussian dip.

use crate::config::{key, Bound, Def, KeySpec};
use crate::output::Output;
use crate::{Input, NumericalFailure};
use anyhow::Result;
use curved_dirac::io::{Table, Value as Cell};
use curved_dirac::scalar_bogolyubov::{
    analytic_squarehat, gaussian_window, numeric_spectrum, particle_number, NumericOptions,
};
use curved_dirac::ConformalProfile;
use std::path::PathBuf;

const NORMALIZATION_TOL: f64 = 1e-8;

pub fn schema() -> Vec<KeySpec> {
    vec![
        key("profile", "-", Def::Value("\"squarehat\""), "squarehat: ω² = k² − m² on [0, t0]; gaussian: ω² = k² + Ω(t)²m² with an inverted-Gaussian Ω"),
        key("m", "energy", Def::Value("1.0"), "mass"),
        key("t0", "time", Def::Value("1.0"), "squarehat: duration of the hat"),
        key("depth", "-", Def::Value("0.5"), "gaussian: Ω = 1 − depth·exp(−(t−center)²/2 width²)"),
        key("center", "time", Def::Value("0.0"), "gaussian: centre of the dip"),
        key("width", "time", Def::Value("1.0"), "gaussian: width of the dip"),
        key("kmin", "1/length", Def::Value("0.0"), "first momentum"),
        key("kmax", "1/length", Def::Value("5.0"), "last momentum"),
        key("nk", "-", Def::Value("101"), "number of momenta (uniform grid)"),
        key("t_in", "time", Def::Optional, "start of integration (default: −1 for squarehat, center − 10·width for gaussian)"),
        key("t_out", "time", Def::Optional, "end of integration (default: t0 + 1 for squarehat, center + 10·width for gaussian)"),
        key("rtol", "-", Def::Value("1e-12"), "relative tolerance of the adaptive integrator"),
        key("atol", "-", Def::Value("1e-14"), "absolute tolerance of the adaptive integrator"),
        key("wronskian_tol", "-", Def::Value("1e-8"), "allowed deviation of the Wronskian from 1 along each mode"),
    ]
}

pub fn run(input: &Input) -> Result<()> {
    let mut r = input.reader(&schema());
    let kind = r.choice("profile", &["squarehat", "gaussian"]);
    let m = r.f64("m", Bound::NonNegative);
    let (profile, window, t0) = if kind == "gaussian" {
        let depth = r.f64("depth", Bound::Any);
        if !(depth < 1.0) {
            r.error(format!("'depth' = {depth} must be < 1"));
        }
        let center = r.f64("center", Bound::Any);
        let width = r.f64("width", Bound::Positive);
        let p = ConformalProfile::InvertedGaussian {
            depth,
            center,
            width,
        };
        (p, gaussian_window(center, width), None)
    } else {
        let t0 = r.f64("t0", Bound::Positive);
        (ConformalProfile::square_hat(t0), (-1.0, t0 + 1.0), Some(t0))
    };
    let kmin = r.f64("kmin", Bound::NonNegative);
    let kmax = r.f64("kmax", Bound::NonNegative);
    let nk = r.usize("nk", 1);
    if kmax < kmin {
        r.error(format!("'kmax' = {kmax} must be ≥ 'kmin' = {kmin}"));
    }
    let t_in = r.opt_f64("t_in", Bound::Any).unwrap_or(window.0);
    let t_out = r.opt_f64("t_out", Bound::Any).unwrap_or(window.1);
    if !(t_out > t_in) {
        r.error(format!("t_out = {t_out} must exceed t_in = {t_in}"));
    }
    let opts = NumericOptions {
        rtol: r.f64("rtol", Bound::Positive),
        atol: r.f64("atol", Bound::Positive),
        wronskian_tol: r.f64("wronskian_tol", Bound::Positive),
        ..Default::default()
    };
    let outdir = PathBuf::from(r.string("outdir"));
    let effective = r.finish()?;

    let ks: Vec<f64> = if nk == 1 {
        vec![kmin]
    } else {
        (0..nk)
            .map(|i| kmin + (kmax - kmin) * i as f64 / (nk - 1) as f64)
            .collect()
    };
    let spectrum = numeric_spectrum(&ks, m, &profile, t_in, t_out, &opts)?;

    let mut out = Output::create(&outdir, "bogolyubov", &effective)?;
    let mut t = Table::new([
        "k",
        "re_alpha",
        "im_alpha",
        "re_beta",
        "im_beta",
        "n_k",
        "n_k_analytic",
        "abs_err",
        "wronskian_dev",
    ]);
    let mut worst_norm = 0.0f64;
    let mut worst_err = 0.0f64;
    let mut worst_w = 0.0f64;
    for s in &spectrum {
        let p = &s.pair;
        let w = s.mode.max_wronskian_deviation()?;
        worst_w = worst_w.max(w);
        let n = particle_number(p);
        worst_norm = worst_norm.max(p.normalization_residual());
        let analytic = t0
            .and_then(|t0| analytic_squarehat(p.k, m, t0).ok())
            .map(|a| particle_number(&a));
        let (an, err): (Cell, Cell) = match analytic {
            Some(a) => {
                worst_err = worst_err.max((n - a).abs());
                (a.into(), (n - a).abs().into())
            }
            None => ("".into(), "".into()),
        };
        t.push(vec![
            p.k.into(),
            p.alpha.re.into(),
            p.alpha.im.into(),
            p.beta.re.into(),
            p.beta.im.into(),
            n.into(),
            an,
            err,
            w.into(),
        ])?;
    }
    out.csv("spectrum.csv", &t)?;
    let manifest = out.finish()?;
    println!("{kind}, m = {m}: {} momenta, max ||α|²−|β|²−1| = {worst_norm:.3e}, max |W−1| = {worst_w:.3e}", ks.len());
    if t0.is_some() {
        println!("max |n_k − n_k(closed form)| = {worst_err:.3e}");
    }
    println!("wrote {}", manifest.display());
    if !(worst_norm <= NORMALIZATION_TOL) {
        return Err(NumericalFailure(format!(
            "normalization residual {worst_norm:e} exceeds {NORMALIZATION_TOL:e}"
        ))
        .into());
    }
    Ok(())
}
