//! Particle creation for a real scalar field in 1+1 FRW.
//!
//! Each mode obeys `v̈ + ω_k²(t) v = 0` with `ω_k² = k² + Ω²(t) m²`. The 'in'
//! mode is `v = e^{iω t}/√ω`; after the excursion it is expanded as
//! `v = [α* e^{iω(t−t_ref)} + β* e^{−iω(t−t_ref)}]/√ω`, so `n_k = |β|²`.

use rayon::prelude::*;
use thiserror::Error;

use crate::dirac_continuum::ConformalProfile;
use crate::linalg::{C64, I};
use crate::ode::{Dopri5, OdeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BogolyubovError {
    #[error(
        "resonance: |k − m| = {gap:e} < 1e-9, the closed form degenerates (use the numeric path)"
    )]
    Resonance { gap: f64 },
    #[error("profile is not asymptotically flat at t = {t}: Ω² = {omega_sq}")]
    NotAsymptoticallyFlat { t: f64, omega_sq: f64 },
    #[error("Wronskian drifted to {value} at t = {t}")]
    WronskianDrift { t: f64, value: f64 },
    #[error("Wronskian has imaginary residue {residue:e}")]
    NumericalInconsistency { residue: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

pub type Result<T> = std::result::Result<T, BogolyubovError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogolyubovPair {
    pub k: f64,
    pub alpha: C64,
    pub beta: C64,
}

impl BogolyubovPair {
    /// `|α|² − |β|² − 1`
    pub fn normalization_residual(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr() - 1.0
    }
}

/// `n_k = |β_k|²`
pub fn particle_number(pair: &BogolyubovPair) -> f64 {
    pair.beta.norm_sqr()
}

/// `−i(v̇ v* − v v̇*)/2`
pub fn wronskian(v: C64, vdot: C64) -> Result<f64> {
    let w = (vdot * v.conj() - v * vdot.conj()) * C64::new(0.0, -0.5);
    if !(w.im.abs() < 1e-12) {
        return Err(BogolyubovError::NumericalInconsistency { residue: w.im });
    }
    Ok(w.re)
}

/// `ω_k²(t) = k² + Ω²(t)·m²`
#[derive(Debug, Clone)]
pub struct FrequencyProfile {
    pub k: f64,
    pub m: f64,
    pub profile: ConformalProfile,
}

impl FrequencyProfile {
    pub fn new(k: f64, m: f64, profile: ConformalProfile) -> Self {
        FrequencyProfile { k, m, profile }
    }

    pub fn omega_sq(&self, t: f64) -> f64 {
        self.k * self.k + self.profile.omega_squared(t) * self.m * self.m
    }

    /// Asymptotic frequency `√(k² + m²)`.
    pub fn omega_asymptotic(&self) -> f64 {
        self.k.hypot(self.m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeFunction {
    pub k: f64,
    pub times: Vec<f64>,
    pub v: Vec<C64>,
    pub vdot: Vec<C64>,
}

impl ModeFunction {
    pub fn wronskians(&self) -> Result<Vec<f64>> {
        self.v
            .iter()
            .zip(&self.vdot)
            .map(|(v, vd)| wronskian(*v, *vd))
            .collect()
    }

    /// Largest `|W − 1|` along the stored samples.
    pub fn max_wronskian_deviation(&self) -> Result<f64> {
        Ok(self
            .wronskians()?
            .iter()
            .map(|w| (w - 1.0).abs())
            .fold(0.0, f64::max))
    }
}

/// Closed-form square-hat coefficients (Ω² = −1 on `0 < t < t0`), with
/// `Ω_k = √(k² − m²)` taken as the principal complex root.
pub fn analytic_squarehat(k: f64, m: f64, t0: f64) -> Result<BogolyubovPair> {
    let gap = (k.abs() - m.abs()).abs();
    if gap < 1e-9 {
        return Err(BogolyubovError::Resonance { gap });
    }
    if !(t0 >= 0.0) {
        return Err(BogolyubovError::InvalidParameter(format!(
            "t0 = {t0} must be ≥ 0"
        )));
    }
    let w = C64::new(k.hypot(m), 0.0);
    let big = C64::new(k * k - m * m, 0.0).sqrt();
    let r = w / big + big / w;
    let ph = (-I * big * t0).exp();
    // (ω+Ω)²/(4ωΩ) e^{−iΩt0} − (ω−Ω)²/(4ωΩ) e^{iΩt0}, expanded so the root's sign drops out
    let alpha = ph * (r + 2.0) / 4.0 - (r - 2.0) / (ph * 4.0);
    let beta = I * 0.5 * (big / w - w / big) * (big * t0).sin();
    Ok(BogolyubovPair { k, alpha, beta })
}

#[derive(Debug, Clone, Copy)]
pub struct NumericOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Reference time of the 'out' expansion; defaults to `t0` for the square
    /// hat and `0` otherwise.
    pub t_ref: Option<f64>,
    /// Allowed `|W − 1|` along the mode.
    pub wronskian_tol: f64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions {
            rtol: 1e-12,
            atol: 1e-14,
            t_ref: None,
            wronskian_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NumericBogolyubov {
    pub pair: BogolyubovPair,
    pub mode: ModeFunction,
}

/// Exact transfer over a segment of constant `ω²` (possibly negative).
fn transfer(v: C64, vd: C64, omega_sq: f64, tau: f64) -> (C64, C64) {
    let w = C64::new(omega_sq, 0.0).sqrt();
    let (c, s_over_w, ws) = if w.norm() * tau.abs() < 1e-12 {
        (
            C64::new(1.0, 0.0),
            C64::new(tau, 0.0),
            C64::new(-omega_sq * tau, 0.0),
        )
    } else {
        let s = (w * tau).sin();
        ((w * tau).cos(), s / w, w * s)
    };
    (v * c + vd * s_over_w, -v * ws + vd * c)
}

/// Integrate the 'in' mode from `t_in` to `t_out` and project onto the 'out' modes.
pub fn numeric_bogolyubov(
    freq: &FrequencyProfile,
    t_in: f64,
    t_out: f64,
    opts: &NumericOptions,
) -> Result<NumericBogolyubov> {
    if !(t_out > t_in) {
        return Err(BogolyubovError::InvalidParameter(format!(
            "t_out = {t_out} must exceed t_in = {t_in}"
        )));
    }
    for t in [t_in, t_out] {
        let omega_sq = freq.profile.omega_squared(t);
        if !((omega_sq - 1.0).abs() <= 1e-10) {
            return Err(BogolyubovError::NotAsymptoticallyFlat { t, omega_sq });
        }
    }
    let w = freq.omega_asymptotic();
    if !(w > 0.0) {
        return Err(BogolyubovError::InvalidParameter(
            "k = m = 0 has no mode".into(),
        ));
    }
    let v0 = C64::from_polar(1.0 / w.sqrt(), w * t_in);
    let vd0 = I * w * v0;

    let mut mode = ModeFunction {
        k: freq.k,
        times: Vec::new(),
        v: Vec::new(),
        vdot: Vec::new(),
    };
    let t_ref = match (&freq.profile, opts.t_ref) {
        (_, Some(t)) => t,
        (ConformalProfile::SquareHat { t0, .. }, None) => *t0,
        _ => 0.0,
    };

    let (v, vd) = if let ConformalProfile::SquareHat { t0, .. } = &freq.profile {
        let mut cuts = vec![t_in];
        cuts.extend([0.0, *t0].into_iter().filter(|c| *c > t_in && *c < t_out));
        cuts.push(t_out);
        let (mut v, mut vd) = (v0, vd0);
        const SUB: usize = 32;
        mode.times.push(t_in);
        mode.v.push(v);
        mode.vdot.push(vd);
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let omega_sq = freq.omega_sq(0.5 * (a + b));
            let (v_start, vd_start) = (v, vd);
            for j in 1..=SUB {
                let t = if j == SUB {
                    b
                } else {
                    a + (b - a) * j as f64 / SUB as f64
                };
                (v, vd) = transfer(v_start, vd_start, omega_sq, t - a);
                mode.times.push(t);
                mode.v.push(v);
                mode.vdot.push(vd);
            }
        }
        (v, vd)
    } else {
        let solver = Dopri5::with_tolerance(opts.rtol, opts.atol);
        let y0 = [v0.re, v0.im, vd0.re, vd0.im];
        let y = solver.integrate(
            |t, y| {
                let w2 = freq.omega_sq(t);
                [y[2], y[3], -w2 * y[0], -w2 * y[1]]
            },
            t_in,
            y0,
            t_out,
            |t, y| {
                mode.times.push(t);
                mode.v.push(C64::new(y[0], y[1]));
                mode.vdot.push(C64::new(y[2], y[3]));
            },
        )?;
        (C64::new(y[0], y[1]), C64::new(y[2], y[3]))
    };

    for ((t, v), vd) in mode.times.iter().zip(&mode.v).zip(&mode.vdot) {
        let value = wronskian(*v, *vd)?;
        if !((value - 1.0).abs() <= opts.wronskian_tol) {
            return Err(BogolyubovError::WronskianDrift { t: *t, value });
        }
    }

    let s = t_out - t_ref;
    let a = (v + vd / (I * w)) * 0.5;
    let b = (v - vd / (I * w)) * 0.5;
    let alpha_conj = a * w.sqrt() * C64::from_polar(1.0, -w * s);
    let beta_conj = b * w.sqrt() * C64::from_polar(1.0, w * s);
    Ok(NumericBogolyubov {
        pair: BogolyubovPair {
            k: freq.k,
            alpha: alpha_conj.conj(),
            beta: beta_conj.conj(),
        },
        mode,
    })
}

/// Numeric coefficients over a grid of `k`, evaluated in parallel.
pub fn numeric_spectrum(
    ks: &[f64],
    m: f64,
    profile: &ConformalProfile,
    t_in: f64,
    t_out: f64,
    opts: &NumericOptions,
) -> Result<Vec<NumericBogolyubov>> {
    ks.par_iter()
        .map(|&k| {
            numeric_bogolyubov(
                &FrequencyProfile::new(k, m, profile.clone()),
                t_in,
                t_out,
                opts,
            )
        })
        .collect()
}

/// Integration window `[center − 10·width, center + 10·width]` over which an
/// inverted Gaussian departs from Ω² = 1 by more than 1e-10·depth.
pub fn gaussian_window(center: f64, width: f64) -> (f64, f64) {
    (center - 10.0 * width, center + 10.0 * width)
}
