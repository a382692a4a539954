//! Spinor wave packets under `i∂_t ψ = −iσ_x ∂_x ψ + σ_z m_eff(t) ψ` on a
//! periodic grid.
//!
//! The mass depends on time only, so every Fourier mode evolves on its own as
//! a 2×2 system. Flat evolution uses the exact propagator; a time-dependent
//! mass uses the midpoint exponential `u ← exp(−i H_k(t + dt/2) dt) u`.
//!
//! Mode amplitudes are normalized so that `ψ(x) = L^{−1/2} Σ_k a_k e^{ikx}` and
//! `Σ_k |a_k|² = ∫|ψ|² dx`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dirac_propagator, C64, ZERO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiracError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain too small: packet envelope at the boundary is {edge_ratio:e} of its peak (limit 1e-8)")]
    DomainTooSmall { edge_ratio: f64 },
    #[error("conformal factor Ω = {omega} is not positive at t = {t}")]
    NonPositiveProfile { t: f64, omega: f64 },
    #[error("unitarity drift {drift:e} over {steps} steps ending at t = {t}")]
    UnitarityDrift { t: f64, drift: f64, steps: usize },
    #[error("time samples must be strictly increasing (index {0})")]
    TimesNotIncreasing(usize),
    #[error("zitterbewegung analysis needs at least {needed} uniformly spaced samples, got {got}")]
    ShortSeries { needed: usize, got: usize },
    #[error("time samples are not uniformly spaced")]
    NonUniformTimes,
}

pub type Result<T> = std::result::Result<T, DiracError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    #[serde(alias = "+")]
    Positive,
    #[serde(alias = "-")]
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

/// `√(k² + m²)`
pub fn energy(k: f64, m: f64) -> f64 {
    k.hypot(m)
}

/// Normalized eigenvector of `H_k = σ_x k + σ_z m` with eigenvalue `±E_k`.
pub fn eigenspinor(k: f64, m: f64, branch: Branch) -> [C64; 2] {
    let e = energy(k, m);
    let em = e + m;
    if em == 0.0 {
        // k = m = 0: continue the rest-frame convention
        return match branch {
            Branch::Positive => [C64::new(1.0, 0.0), ZERO],
            Branch::Negative => [ZERO, C64::new(1.0, 0.0)],
        };
    }
    let norm = (2.0 * e * em).sqrt();
    match branch {
        Branch::Positive => [C64::new(em / norm, 0.0), C64::new(k / norm, 0.0)],
        Branch::Negative => [C64::new(-k / norm, 0.0), C64::new(em / norm, 0.0)],
    }
}

/// Callable time profile used by [`ConformalProfile::Custom`].
#[derive(Clone)]
pub struct Sampler(pub Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl fmt::Debug for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Sampler(..)")
    }
}

/// Conformal factor Ω(t).
#[derive(Debug, Clone)]
pub enum ConformalProfile {
    Constant(f64),
    /// Ω² = `omega_sq_inside` for `0 < t < t0`, 1 elsewhere.
    SquareHat {
        t0: f64,
        omega_sq_inside: f64,
    },
    /// Ω = 1 − depth·exp(−(t − center)²/(2 width²))
    InvertedGaussian {
        depth: f64,
        center: f64,
        width: f64,
    },
    /// Ω(t) from an arbitrary sampler.
    Custom(Sampler),
}

impl ConformalProfile {
    /// The scalar-field square hat with Ω² = −1 inside.
    pub fn square_hat(t0: f64) -> Self {
        ConformalProfile::SquareHat {
            t0,
            omega_sq_inside: -1.0,
        }
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ConformalProfile::Custom(Sampler(Arc::new(f)))
    }

    pub fn omega_squared(&self, t: f64) -> f64 {
        match self {
            ConformalProfile::SquareHat {
                t0,
                omega_sq_inside,
            } => {
                if t > 0.0 && t < *t0 {
                    *omega_sq_inside
                } else {
                    1.0
                }
            }
            other => other.omega(t).powi(2),
        }
    }

    /// Ω(t); NaN where Ω² < 0.
    pub fn omega(&self, t: f64) -> f64 {
        match self {
            ConformalProfile::Constant(c) => *c,
            ConformalProfile::SquareHat { .. } => self.omega_squared(t).sqrt(),
            ConformalProfile::InvertedGaussian {
                depth,
                center,
                width,
            } => {
                let z = (t - center) / width;
                1.0 - depth * (-0.5 * z * z).exp()
            }
            ConformalProfile::Custom(s) => (s.0)(t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DiracError::InvalidParameter(msg));
        match self {
            ConformalProfile::Constant(c) if !(*c > 0.0) => bad(format!("constant Ω = {c} must be > 0")),
            ConformalProfile::SquareHat { t0, .. } if !(*t0 >= 0.0) => {
                bad(format!("square hat t0 = {t0} must be ≥ 0"))
            }
            ConformalProfile::InvertedGaussian { depth, width, .. }
                if !(*depth >= 0.0 && *depth < 1.0) || !(*width > 0.0) =>
            {
                bad(format!(
                    "inverted Gaussian needs 0 ≤ depth < 1 and width > 0 (got depth {depth}, width {width})"
                ))
            }
            _ => Ok(()),
        }
    }
}

/// Two-component field on `x_j = −L/2 + j·L/N`, periodic. Any `N ≥ 2` is
/// accepted (lattice reconstructions need it); powers of two are fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorGrid {
    length: f64,
    psi1: Vec<C64>,
    psi2: Vec<C64>,
}

impl SpinorGrid {
    pub fn new(length: f64, psi1: Vec<C64>, psi2: Vec<C64>) -> Result<Self> {
        if psi1.len() != psi2.len() {
            return Err(DiracError::InvalidGrid(format!(
                "component lengths differ ({} vs {})",
                psi1.len(),
                psi2.len()
            )));
        }
        let n = psi1.len();
        if n < 2 {
            return Err(DiracError::InvalidGrid(format!(
                "N = {n} must be at least 2"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(DiracError::InvalidGrid(format!(
                "L = {length} must be positive"
            )));
        }
        Ok(SpinorGrid { length, psi1, psi2 })
    }

    /// Sample `f(x) -> (ψ₁, ψ₂)` on the grid and normalize.
    pub fn from_fn(length: f64, n: usize, f: impl Fn(f64) -> [C64; 2]) -> Result<Self> {
        let dx = length / n as f64;
        let (psi1, psi2) = (0..n)
            .map(|j| {
                let v = f(-0.5 * length + j as f64 * dx);
                (v[0], v[1])
            })
            .unzip();
        SpinorGrid::new(length, psi1, psi2)?.normalized()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(DiracError::InvalidGrid(format!(
                "cannot normalize a state of norm {norm}"
            )));
        }
        let s = 1.0 / norm.sqrt();
        self.psi1
            .iter_mut()
            .chain(self.psi2.iter_mut())
            .for_each(|z| *z *= s);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.psi1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi1.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.len() as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.x(j)).collect()
    }

    pub fn psi1(&self) -> &[C64] {
        &self.psi1
    }

    pub fn psi2(&self) -> &[C64] {
        &self.psi2
    }

    /// `|ψ₁|² + |ψ₂|²` per site.
    pub fn density(&self) -> Vec<f64> {
        self.psi1
            .iter()
            .zip(&self.psi2)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect()
    }

    /// `∫ (|ψ₁|² + |ψ₂|²) dx`
    pub fn norm(&self) -> f64 {
        self.density().iter().sum::<f64>() * self.dx()
    }

    /// Largest edge density relative to the peak density.
    pub fn edge_density(&self) -> f64 {
        let d = self.density();
        let peak = d.iter().cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        d[0].max(d[d.len() - 1]) / peak
    }

    /// Density at both edges above 1e-6 of the peak: the packet has wrapped.
    pub fn is_wrapped(&self) -> bool {
        let d = self.density();
        let peak = d.iter().cloned().fold(0.0, f64::max);
        peak > 0.0 && d[0] > 1e-6 * peak && d[d.len() - 1] > 1e-6 * peak
    }

    /// L2 distance `(∫ |ψ − φ|² dx)^{1/2}`; grids must match.
    pub fn l2_distance(&self, other: &SpinorGrid) -> f64 {
        assert_eq!(self.len(), other.len(), "grid sizes differ");
        let s: f64 = self
            .psi1
            .iter()
            .zip(&other.psi1)
            .chain(self.psi2.iter().zip(&other.psi2))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (s * self.dx()).sqrt()
    }
}

/// Signed wavenumber index for FFT position `j`.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j < n.div_ceil(2) {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Forward/inverse transform pair of a fixed size.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn to_modes(&self, grid: &SpinorGrid) -> ModeSpectrum {
        assert_eq!(grid.len(), self.n);
        let n = self.n;
        let scale = (grid.dx() / n as f64).sqrt();
        let mut a1 = grid.psi1.clone();
        let mut a2 = grid.psi2.clone();
        self.forward.process(&mut a1);
        self.forward.process(&mut a2);
        let mut k = Vec::with_capacity(n);
        for j in 0..n {
            let sj = signed_index(j, n);
            k.push(2.0 * PI * sj as f64 / grid.length);
            // e^{−ik x₀} with x₀ = −L/2 is (−1)^j exactly
            let s = if sj.rem_euclid(2) == 0 { scale } else { -scale };
            a1[j] *= s;
            a2[j] *= s;
        }
        ModeSpectrum {
            length: grid.length,
            k,
            a1,
            a2,
        }
    }

    pub fn to_grid(&self, spec: &ModeSpectrum) -> SpinorGrid {
        assert_eq!(spec.k.len(), self.n);
        let n = self.n;
        let scale = 1.0 / spec.length.sqrt();
        let mut p1 = spec.a1.clone();
        let mut p2 = spec.a2.clone();
        for j in 0..n {
            let s = if signed_index(j, n).rem_euclid(2) == 0 {
                scale
            } else {
                -scale
            };
            p1[j] *= s;
            p2[j] *= s;
        }
        self.inverse.process(&mut p1);
        self.inverse.process(&mut p2);
        SpinorGrid {
            length: spec.length,
            psi1: p1,
            psi2: p2,
        }
    }
}

/// Mode amplitudes `(a₁(k), a₂(k))` in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub length: f64,
    pub k: Vec<f64>,
    pub a1: Vec<C64>,
    pub a2: Vec<C64>,
}

impl ModeSpectrum {
    pub fn from_grid(grid: &SpinorGrid) -> Self {
        Spectral::new(grid.len()).to_modes(grid)
    }

    pub fn to_grid(&self) -> SpinorGrid {
        Spectral::new(self.k.len()).to_grid(self)
    }

    pub fn norm(&self) -> f64 {
        self.a1.iter().chain(&self.a2).map(|z| z.norm_sqr()).sum()
    }

    /// Trigonometric interpolation of the field at any `x`.
    pub fn evaluate(&self, x: f64) -> [C64; 2] {
        let mut out = [ZERO; 2];
        for ((k, a1), a2) in self.k.iter().zip(&self.a1).zip(&self.a2) {
            let ph = C64::from_polar(1.0, k * x);
            out[0] += a1 * ph;
            out[1] += a2 * ph;
        }
        let s = 1.0 / self.length.sqrt();
        [out[0] * s, out[1] * s]
    }

    /// Summed weight on the ± eigenspinors of `(k, m_ref)`.
    pub fn energy_fractions(&self, m_ref: f64) -> (f64, f64) {
        let mut pos = 0.0;
        let mut neg = 0.0;
        for ((k, a1), a2) in self.k.iter().zip(&self.a1).zip(&self.a2) {
            let up = eigenspinor(*k, m_ref, Branch::Positive);
            let um = eigenspinor(*k, m_ref, Branch::Negative);
            pos += (up[0].conj() * a1 + up[1].conj() * a2).norm_sqr();
            neg += (um[0].conj() * a1 + um[1].conj() * a2).norm_sqr();
        }
        (pos, neg)
    }

    fn apply_flat(&mut self, m: f64, t: f64) {
        for ((k, a1), a2) in self
            .k
            .iter()
            .zip(self.a1.iter_mut())
            .zip(self.a2.iter_mut())
        {
            let v = dirac_propagator(*k, m, t).apply([*a1, *a2]);
            *a1 = v[0];
            *a2 = v[1];
        }
    }
}

fn check_envelope(grid: &SpinorGrid) -> Result<()> {
    let d = grid.density();
    let peak = d.iter().cloned().fold(0.0, f64::max);
    let edge_ratio = (d[0].max(d[d.len() - 1]) / peak).sqrt();
    if edge_ratio > 1e-8 {
        return Err(DiracError::DomainTooSmall { edge_ratio });
    }
    Ok(())
}

/// Normalized `exp(−x²/(2σ²) + i k0 x)·(c₁, c₂)`.
pub fn gaussian_position_packet(
    sigma: f64,
    components: [C64; 2],
    k0: f64,
    length: f64,
    n: usize,
) -> Result<SpinorGrid> {
    if !(sigma > 0.0) {
        return Err(DiracError::InvalidParameter(format!(
            "σ = {sigma} must be > 0"
        )));
    }
    let half = 0.5 * length;
    let edge_ratio = (-half * half / (2.0 * sigma * sigma)).exp();
    if edge_ratio > 1e-8 {
        return Err(DiracError::DomainTooSmall { edge_ratio });
    }
    SpinorGrid::from_fn(length, n, |x| {
        let env = C64::from_polar((-x * x / (2.0 * sigma * sigma)).exp(), k0 * x);
        [components[0] * env, components[1] * env]
    })
}

/// Normalized `Σ_k exp(−(k−k0)²/(2σ_k²)) u_±(k) e^{ikx}` over the grid modes.
pub fn branch_packet(
    sigma_k: f64,
    k0: f64,
    branch: Branch,
    m: f64,
    length: f64,
    n: usize,
) -> Result<SpinorGrid> {
    if !(sigma_k > 0.0) {
        return Err(DiracError::InvalidParameter(format!(
            "σ_k = {sigma_k} must be > 0"
        )));
    }
    // validates N and L
    let empty = SpinorGrid::new(length, vec![ZERO; n], vec![ZERO; n])?;
    let sp = Spectral::new(n);
    let mut spec = sp.to_modes(&empty);
    for j in 0..n {
        let k = spec.k[j];
        let w = (-(k - k0).powi(2) / (2.0 * sigma_k * sigma_k)).exp();
        let u = eigenspinor(k, m, branch);
        spec.a1[j] = u[0] * w;
        spec.a2[j] = u[1] * w;
    }
    let grid = sp.to_grid(&spec).normalized()?;
    check_envelope(&grid)?;
    Ok(grid)
}

/// Exact flat evolution by time `t`.
pub fn evolve_flat(state: &SpinorGrid, m: f64, t: f64) -> SpinorGrid {
    let sp = Spectral::new(state.len());
    let mut spec = sp.to_modes(state);
    spec.apply_flat(m, t);
    sp.to_grid(&spec)
}

/// `∫ x |ψ|² dx / ∫ |ψ|² dx` on `[−L/2, L/2)`.
pub fn mean_position(state: &SpinorGrid) -> f64 {
    let d = state.density();
    let total: f64 = d.iter().sum();
    d.iter()
        .enumerate()
        .map(|(j, r)| state.x(j) * r)
        .sum::<f64>()
        / total
}

/// `√2 ×` the rms spread of `|ψ|²`; equals σ for a Gaussian envelope `exp(−x²/2σ²)`.
pub fn packet_width(state: &SpinorGrid) -> f64 {
    let d = state.density();
    let total: f64 = d.iter().sum();
    let mean = mean_position(state);
    let var = d
        .iter()
        .enumerate()
        .map(|(j, r)| (state.x(j) - mean).powi(2) * r)
        .sum::<f64>()
        / total;
    (2.0 * var).sqrt()
}

/// Summed squared projections onto the ± eigenspinors of `(k, m_ref)`.
pub fn energy_fractions(state: &SpinorGrid, m_ref: f64) -> (f64, f64) {
    ModeSpectrum::from_grid(state).energy_fractions(m_ref)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub mean_x: f64,
    pub norm: f64,
    /// Positive-energy weight divided by the norm.
    pub pos_fraction: f64,
    pub neg_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub observables: Vec<Observables>,
    /// `(time index, state)` every `snapshot_every` samples.
    pub snapshots: Vec<(usize, SpinorGrid)>,
    pub warnings: Vec<String>,
    pub final_state: SpinorGrid,
}

impl Trajectory {
    pub fn mean_x(&self) -> Vec<f64> {
        self.observables.iter().map(|o| o.mean_x).collect()
    }

    /// `(t, ⟨x⟩)` restricted to `lo ≤ t ≤ hi`.
    pub fn window(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        self.times
            .iter()
            .zip(&self.observables)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .map(|(t, o)| (*t, o.mean_x))
            .unzip()
    }

    /// Largest relative deviation of the norm from its initial value.
    pub fn norm_drift(&self) -> f64 {
        let n0 = self.observables[0].norm;
        self.observables
            .iter()
            .map(|o| (o.norm - n0).abs() / n0)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvolveOptions {
    /// Reference mass for the energy projections (defaults to the bare mass).
    pub m_ref: Option<f64>,
    /// Keep a full state every this many samples (0: none).
    pub snapshot_every: usize,
    /// Time step of the midpoint stepper (defaults to `0.01 / max E_k`).
    pub dt: Option<f64>,
}

/// `0, dt, 2dt, …` up to and including `t_max` (within rounding).
pub fn uniform_times(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(DiracError::InvalidParameter("empty time grid".into()));
    }
    for i in 1..times.len() {
        if !(times[i] > times[i - 1]) {
            return Err(DiracError::TimesNotIncreasing(i));
        }
    }
    Ok(())
}

struct Recorder {
    sp: Spectral,
    m_ref: f64,
    snapshot_every: usize,
    observables: Vec<Observables>,
    snapshots: Vec<(usize, SpinorGrid)>,
    wrapped_at: Option<f64>,
}

impl Recorder {
    fn record(&mut self, i: usize, t: f64, spec: &ModeSpectrum) -> SpinorGrid {
        let grid = self.sp.to_grid(spec);
        let norm = spec.norm();
        let (pos, neg) = spec.energy_fractions(self.m_ref);
        self.observables.push(Observables {
            mean_x: mean_position(&grid),
            norm,
            pos_fraction: pos / norm,
            neg_fraction: neg / norm,
        });
        if self.wrapped_at.is_none() && grid.is_wrapped() {
            self.wrapped_at = Some(t);
        }
        if self.snapshot_every > 0 && i.is_multiple_of(self.snapshot_every) {
            self.snapshots.push((i, grid.clone()));
        }
        grid
    }

    fn finish(self, times: &[f64], final_state: SpinorGrid) -> Trajectory {
        let warnings = self
            .wrapped_at
            .map(|t| format!("packet density reaches both domain edges from t = {t}; mean position unreliable"))
            .into_iter()
            .collect();
        Trajectory {
            times: times.to_vec(),
            observables: self.observables,
            snapshots: self.snapshots,
            warnings,
            final_state,
        }
    }
}

/// Exact flat evolution sampled at `times` (the input state is taken at `times[0]`).
pub fn flat_trajectory(
    state: &SpinorGrid,
    m: f64,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    check_times(times)?;
    let sp = Spectral::new(state.len());
    let spec0 = sp.to_modes(state);
    let mut rec = Recorder {
        sp: sp.clone(),
        m_ref: opts.m_ref.unwrap_or(m),
        snapshot_every: opts.snapshot_every,
        observables: Vec::with_capacity(times.len()),
        snapshots: Vec::new(),
        wrapped_at: None,
    };
    let mut last = state.clone();
    for (i, &t) in times.iter().enumerate() {
        let mut spec = spec0.clone();
        spec.apply_flat(m, t - times[0]);
        last = rec.record(i, t, &spec);
    }
    Ok(rec.finish(times, last))
}

/// Default midpoint step `0.01 / max_k E_k` for mass scale `m_max`.
pub fn default_dt(k_max: f64, m_max: f64) -> f64 {
    0.01 / energy(k_max, m_max)
}

/// Evolve under `m_eff(t) = Ω(t)·m` and sample at `times` (the input state is
/// taken at `times[0]`). Observables refer to the rescaled field that obeys
/// the effective-mass equation.
pub fn evolve_frw(
    state: &SpinorGrid,
    m: f64,
    profile: &ConformalProfile,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    check_times(times)?;
    profile.validate()?;
    let sp = Spectral::new(state.len());
    let mut spec = sp.to_modes(state);
    let k_max = spec.k.iter().fold(0.0_f64, |a, k| a.max(k.abs()));

    // Ω bound over the run for the default step
    let t_span = times[times.len() - 1] - times[0];
    let probe = (0..=1000).map(|i| profile.omega(times[0] + t_span * i as f64 / 1000.0));
    let omega_max = probe.fold(1.0_f64, |a, o| if o.is_finite() { a.max(o) } else { a });
    let dt = match opts.dt {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => {
            return Err(DiracError::InvalidParameter(format!(
                "dt = {dt} must be > 0"
            )))
        }
        None => default_dt(k_max, m * omega_max),
    };

    let mut rec = Recorder {
        sp: sp.clone(),
        m_ref: opts.m_ref.unwrap_or(m),
        snapshot_every: opts.snapshot_every,
        observables: Vec::with_capacity(times.len()),
        snapshots: Vec::new(),
        wrapped_at: None,
    };
    let mut last = rec.record(0, times[0], &spec);
    let mut masses = Vec::new();
    for i in 1..times.len() {
        let (ta, tb) = (times[i - 1], times[i]);
        let steps = ((tb - ta) / dt).ceil().max(1.0) as usize;
        let h = (tb - ta) / steps as f64;
        masses.clear();
        for s in 0..steps {
            let t = ta + (s as f64 + 0.5) * h;
            let omega = profile.omega(t);
            if !(omega > 0.0) {
                return Err(DiracError::NonPositiveProfile { t, omega });
            }
            masses.push(m * omega);
        }
        let ModeSpectrum { k, a1, a2, .. } = &mut spec;
        let worst = k
            .par_iter()
            .zip(a1.par_iter_mut())
            .zip(a2.par_iter_mut())
            .map(|((k, a1), a2)| {
                let before = a1.norm_sqr() + a2.norm_sqr();
                let mut u = [*a1, *a2];
                for &me in &masses {
                    u = dirac_propagator(*k, me, h).apply(u);
                }
                *a1 = u[0];
                *a2 = u[1];
                let after = a1.norm_sqr() + a2.norm_sqr();
                (after - before).abs() / before.max(f64::MIN_POSITIVE)
            })
            .reduce(|| 0.0, f64::max);
        if worst > 1e-10 * steps as f64 {
            return Err(DiracError::UnitarityDrift {
                t: tb,
                drift: worst,
                steps,
            });
        }
        last = rec.record(i, tb, &spec);
    }
    Ok(rec.finish(times, last))
}

/// Dominant zitterbewegung component of a mean-position series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZbResult {
    /// Angular frequency; NaN when nothing was detected.
    pub frequency: f64,
    pub amplitude: f64,
    pub detected: bool,
}

/// Below this amplitude a spectral peak is reported as "no ZB".
pub const ZB_NOISE_FLOOR: f64 = 1e-9;

fn uniform_step(times: &[f64]) -> Result<f64> {
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(DiracError::NonUniformTimes);
        }
    }
    Ok(dt)
}

/// Least-squares linear detrend followed by a Hann window.
fn detrended_windowed(times: &[f64], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = times.len() as f64;
    let tm = times.iter().sum::<f64>() / n;
    let vm = values.iter().sum::<f64>() / n;
    let (mut stt, mut stv) = (0.0, 0.0);
    for (t, v) in times.iter().zip(values) {
        stt += (t - tm) * (t - tm);
        stv += (t - tm) * (v - vm);
    }
    let slope = stv / stt;
    let m = times.len();
    let w: Vec<f64> = (0..m)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / (m - 1) as f64).cos()))
        .collect();
    let r = times
        .iter()
        .zip(values)
        .zip(&w)
        .map(|((t, v), wi)| (v - vm - slope * (t - tm)) * wi)
        .collect();
    (r, w)
}

/// Detrend, Hann-window and zero-pad `values(times)`, then locate the dominant
/// peak above `4π/T` with parabolic interpolation.
pub fn zb_analysis(times: &[f64], values: &[f64]) -> Result<ZbResult> {
    const MIN: usize = 16;
    if times.len() < MIN || times.len() != values.len() {
        return Err(DiracError::ShortSeries {
            needed: MIN,
            got: times.len().min(values.len()),
        });
    }
    let dt = uniform_step(times)?;
    let (r, w) = detrended_windowed(times, values);
    let wsum: f64 = w.iter().sum();
    let nfft = (8 * r.len()).next_power_of_two();
    let mut buf: Vec<C64> = r.iter().map(|v| C64::new(*v, 0.0)).collect();
    buf.resize(nfft, ZERO);
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    let mag: Vec<f64> = buf[..=nfft / 2].iter().map(|z| z.norm()).collect();

    let d_omega = 2.0 * PI / (nfft as f64 * dt);
    let span = times[times.len() - 1] - times[0];
    let lo = ((4.0 * PI / span) / d_omega).ceil().max(1.0) as usize;
    let hi = nfft / 2 - 1;
    let none = ZbResult {
        frequency: f64::NAN,
        amplitude: 0.0,
        detected: false,
    };
    if lo >= hi {
        return Ok(none);
    }
    let i = (lo..hi).max_by(|a, b| mag[*a].total_cmp(&mag[*b])).unwrap();
    let (a, b, c) = (mag[i - 1], mag[i], mag[i + 1]);
    let denom = a - 2.0 * b + c;
    let p = if denom != 0.0 {
        0.5 * (a - c) / denom
    } else {
        0.0
    };
    let peak = b - 0.25 * (a - c) * p;
    let amplitude = 2.0 * peak / wsum;
    if !(amplitude >= ZB_NOISE_FLOOR) {
        return Ok(none);
    }
    Ok(ZbResult {
        frequency: (i as f64 + p) * d_omega,
        amplitude,
        detected: true,
    })
}

/// Windowed amplitude of the detrended series at angular frequency `omega`,
/// on the same scale as [`ZbResult::amplitude`].
pub fn spectral_amplitude(times: &[f64], values: &[f64], omega: f64) -> f64 {
    let (r, w) = detrended_windowed(times, values);
    let wsum: f64 = w.iter().sum();
    let s: C64 = r
        .iter()
        .zip(times)
        .map(|(v, t)| C64::from_polar(*v, -omega * t))
        .sum();
    2.0 * s.norm() / wsum
}
