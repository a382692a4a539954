//! Binary waveguide arrays: `i dc_l/dz = κ(c_{l+1} + c_{l−1}) + (−1)^l σ_l(z) c_l`.
//!
//! Waveguides are labelled `l = 1..N_wg`; spatial site `n = 1..N_wg/2` hosts
//! `c_{2n} = (−1)^n ψ₁(n)` and `c_{2n−1} = −i(−1)^n ψ₂(n)`. Substituting this map
//! into the staggered difference Dirac equation gives the array equation with
//! `κ = −1/d` and `σ_l = m_eff` (see [`dirac_coupling`]).
//!
//! The difference scheme is staggered: `ψ₁(n)` sits at `x = origin + (n−1)d`
//! and `ψ₂(n)` half a cell to the left, so `x_l = origin + (l/2 − 1)d`.

use thiserror::Error;

use crate::dirac_continuum::{ConformalProfile, SpinorGrid};
use crate::io::Matrix;
use crate::linalg::{C64, I, ZERO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveguideError {
    #[error("malformed state: {0}")]
    Malformed(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("z samples must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("power drifted by {drift:e} (relative) at z = {z}")]
    PowerDrift { z: f64, drift: f64 },
    #[error("non-finite detuning at z = {z}")]
    NonFinite { z: f64 },
}

pub type Result<T> = std::result::Result<T, WaveguideError>;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveguideState {
    /// `amplitudes[l − 1]` is `c_l`.
    pub amplitudes: Vec<C64>,
    /// Lattice constant (one spatial site = two waveguides).
    pub d: f64,
    /// Position of `ψ₁(1)`.
    pub origin: f64,
}

impl WaveguideState {
    pub fn new(amplitudes: Vec<C64>, d: f64, origin: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(WaveguideError::InvalidParameter(format!(
                "d = {d} must be > 0"
            )));
        }
        if amplitudes.is_empty() {
            return Err(WaveguideError::Malformed("no waveguides".into()));
        }
        Ok(WaveguideState {
            amplitudes,
            d,
            origin,
        })
    }

    /// Single excited waveguide `l` (1-based) in an array of `n_wg`.
    pub fn single_site(n_wg: usize, l: usize, d: f64) -> Result<Self> {
        if l == 0 || l > n_wg {
            return Err(WaveguideError::InvalidParameter(format!(
                "waveguide {l} outside 1..={n_wg}"
            )));
        }
        let mut c = vec![ZERO; n_wg];
        c[l - 1] = C64::new(1.0, 0.0);
        WaveguideState::new(c, d, 0.0)
    }

    /// Staggered sampling of a continuum spinor `f(x) = (ψ₁, ψ₂)` on `sites`
    /// sites centred on `x = 0` (`origin = −sites·d/2`). Not normalized.
    pub fn from_spinor_fn(sites: usize, d: f64, f: impl Fn(f64) -> [C64; 2]) -> Result<Self> {
        let origin = -0.5 * sites as f64 * d;
        let mut c = vec![ZERO; 2 * sites];
        for n in 1..=sites {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let x1 = origin + (n as f64 - 1.0) * d;
            let p1 = f(x1)[0];
            let p2 = f(x1 - 0.5 * d)[1];
            c[2 * n - 1] = p1 * sign;
            c[2 * n - 2] = -I * p2 * sign;
        }
        WaveguideState::new(c, d, origin)
    }

    pub fn n_waveguides(&self) -> usize {
        self.amplitudes.len()
    }

    /// `c_l`, 1-based.
    pub fn amplitude(&self, l: usize) -> C64 {
        self.amplitudes[l - 1]
    }

    /// `x_l = origin + (l/2 − 1)·d`
    pub fn position(&self, l: usize) -> f64 {
        self.origin + (0.5 * l as f64 - 1.0) * self.d
    }

    pub fn positions(&self) -> Vec<f64> {
        (1..=self.n_waveguides())
            .map(|l| self.position(l))
            .collect()
    }

    /// `Σ |c_l|²`
    pub fn power(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `(|c_1|² + |c_N|²) / power`
    pub fn edge_fraction(&self) -> f64 {
        let n = self.n_waveguides();
        (self.amplitudes[0].norm_sqr() + self.amplitudes[n - 1].norm_sqr()) / self.power()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let p = self.power();
        if !(p > 0.0 && p.is_finite()) {
            return Err(WaveguideError::Malformed(format!(
                "cannot normalize power {p}"
            )));
        }
        let s = 1.0 / p.sqrt();
        self.amplitudes.iter_mut().for_each(|c| *c *= s);
        Ok(self)
    }
}

/// Coupling that turns the array into the staggered Dirac equation.
pub fn dirac_coupling(d: f64) -> f64 {
    -1.0 / d
}

/// Map grid sites `j = 0..N` to spatial sites `n = j + 1`. Amplitudes are not
/// rescaled, so `power · d` equals the grid norm when `d` is the grid spacing.
pub fn discretize(state: &SpinorGrid, d: f64) -> Result<WaveguideState> {
    let sites = state.len();
    let mut c = vec![ZERO; 2 * sites];
    for n in 1..=sites {
        let (p1, p2) = (state.psi1()[n - 1], state.psi2()[n - 1]);
        if n % 2 == 0 {
            c[2 * n - 1] = p1;
            c[2 * n - 2] = -I * p2;
        } else {
            c[2 * n - 1] = -p1;
            c[2 * n - 2] = I * p2;
        }
    }
    WaveguideState::new(c, d, -0.5 * sites as f64 * d)
}

/// Exact inverse of [`discretize`]; the grid spans `L = (N_wg/2)·d`.
pub fn reconstruct(state: &WaveguideState) -> Result<SpinorGrid> {
    let n_wg = state.n_waveguides();
    if !n_wg.is_multiple_of(2) {
        return Err(WaveguideError::Malformed(format!(
            "odd number of waveguides ({n_wg})"
        )));
    }
    let sites = n_wg / 2;
    let mut psi1 = vec![ZERO; sites];
    let mut psi2 = vec![ZERO; sites];
    for n in 1..=sites {
        let (a, b) = (state.amplitudes[2 * n - 1], state.amplitudes[2 * n - 2]);
        if n % 2 == 0 {
            psi1[n - 1] = a;
            psi2[n - 1] = I * b;
        } else {
            psi1[n - 1] = -a;
            psi2[n - 1] = -I * b;
        }
    }
    SpinorGrid::new(sites as f64 * state.d, psi1, psi2)
        .map_err(|e| WaveguideError::Malformed(e.to_string()))
}

/// `σ_l(z)`; the array equation multiplies it by `(−1)^l`.
#[derive(Debug, Clone)]
pub enum DetuningProfile {
    Uniform(f64),
    /// `σ = mass · Ω(z)`
    Conformal {
        mass: f64,
        profile: ConformalProfile,
    },
    PerSite(Vec<f64>),
}

impl DetuningProfile {
    fn fill(&self, z: f64, out: &mut [f64]) -> Result<()> {
        match self {
            DetuningProfile::Uniform(s) => out.fill(*s),
            DetuningProfile::Conformal { mass, profile } => out.fill(mass * profile.omega(z)),
            DetuningProfile::PerSite(v) => out.copy_from_slice(v),
        }
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(WaveguideError::NonFinite { z })
        }
    }

    fn max_abs(&self, z0: f64, z1: f64) -> f64 {
        match self {
            DetuningProfile::Uniform(s) => s.abs(),
            DetuningProfile::Conformal { mass, profile } => (0..=1000)
                .map(|i| (mass * profile.omega(z0 + (z1 - z0) * i as f64 / 1000.0)).abs())
                .filter(|v| v.is_finite())
                .fold(0.0, f64::max),
            DetuningProfile::PerSite(v) => v.iter().fold(0.0, |a, s| a.max(s.abs())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// `c_0 = c_{N+1} = 0`
    #[default]
    Open,
    Periodic,
}

#[derive(Debug, Clone, Default)]
pub struct PropagateOptions {
    /// RK4 step; defaults to `0.01 / (2|κ| + max|σ|)`.
    pub dz: Option<f64>,
    pub boundary: Boundary,
    /// Keep amplitudes every this many samples (0: none).
    pub snapshot_every: usize,
    /// Allowed relative power drift over the run.
    pub power_tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LatticeTrajectory {
    pub z: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub power: Vec<f64>,
    /// `(z index, amplitudes)`
    pub snapshots: Vec<(usize, Vec<C64>)>,
    pub warnings: Vec<String>,
    pub final_state: WaveguideState,
}

impl LatticeTrajectory {
    pub fn power_drift(&self) -> f64 {
        let p0 = self.power[0];
        self.power
            .iter()
            .map(|p| (p - p0).abs() / p0)
            .fold(0.0, f64::max)
    }

    /// `(z, ⟨x⟩)` restricted to `lo ≤ z ≤ hi`.
    pub fn window(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        self.z
            .iter()
            .zip(&self.mean_x)
            .filter(|(z, _)| **z >= lo && **z <= hi)
            .map(|(z, x)| (*z, *x))
            .unzip()
    }
}

/// `Σ x_l |c_l|² / Σ |c_l|²`
pub fn lattice_mean_position(state: &WaveguideState) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, c) in state.amplitudes.iter().enumerate() {
        let p = c.norm_sqr();
        num += state.position(i + 1) * p;
        den += p;
    }
    num / den
}

fn apply_h(c: &[C64], kappa: f64, sigma: &[f64], boundary: Boundary, out: &mut [C64]) {
    let n = c.len();
    for i in 0..n {
        let left = if i > 0 {
            c[i - 1]
        } else if boundary == Boundary::Periodic && n > 2 {
            c[n - 1]
        } else {
            ZERO
        };
        let right = if i + 1 < n {
            c[i + 1]
        } else if boundary == Boundary::Periodic && n > 2 {
            c[0]
        } else {
            ZERO
        };
        // label l = i + 1
        let stagger = if i % 2 == 0 { -sigma[i] } else { sigma[i] };
        out[i] = (left + right) * kappa + c[i] * stagger;
    }
}

/// RK4 integration of the array from `z[0]` through every sample of `z`.
pub fn propagate(
    state: &WaveguideState,
    kappa: f64,
    detuning: &DetuningProfile,
    z: &[f64],
    opts: &PropagateOptions,
) -> Result<LatticeTrajectory> {
    let n = state.n_waveguides();
    if z.is_empty() {
        return Err(WaveguideError::InvalidParameter("empty z grid".into()));
    }
    for i in 1..z.len() {
        if !(z[i] > z[i - 1]) {
            return Err(WaveguideError::NotIncreasing(i));
        }
    }
    if let DetuningProfile::PerSite(v) = detuning {
        if v.len() != n {
            return Err(WaveguideError::InvalidParameter(format!(
                "{} per-site detunings for {n} waveguides",
                v.len()
            )));
        }
    }
    let z_end = z[z.len() - 1];
    let dz = match opts.dz {
        Some(h) if h > 0.0 => h,
        Some(h) => {
            return Err(WaveguideError::InvalidParameter(format!(
                "dz = {h} must be > 0"
            )))
        }
        None => 0.01 / (2.0 * kappa.abs() + detuning.max_abs(z[0], z_end)).max(1e-300),
    };
    let tol = opts.power_tol.unwrap_or(1e-8);

    let mut c = state.amplitudes.clone();
    let p0 = state.power();
    let mut traj = LatticeTrajectory {
        z: z.to_vec(),
        mean_x: Vec::with_capacity(z.len()),
        power: Vec::with_capacity(z.len()),
        snapshots: Vec::new(),
        warnings: Vec::new(),
        final_state: state.clone(),
    };
    let mut edge_warned = false;
    let mut record = |i: usize, c: &[C64], traj: &mut LatticeTrajectory| -> Result<()> {
        let s = WaveguideState {
            amplitudes: c.to_vec(),
            d: state.d,
            origin: state.origin,
        };
        let p = s.power();
        let drift = (p - p0).abs() / p0;
        if !(drift <= tol) {
            return Err(WaveguideError::PowerDrift { z: z[i], drift });
        }
        traj.power.push(p);
        traj.mean_x.push(lattice_mean_position(&s));
        if !edge_warned && opts.boundary == Boundary::Open && s.edge_fraction() > 1e-6 {
            edge_warned = true;
            traj.warnings.push(format!(
                "packet reaches the array edge at z = {} (edge fraction {:.3e}); reflections likely",
                z[i],
                s.edge_fraction()
            ));
        }
        if opts.snapshot_every > 0 && i.is_multiple_of(opts.snapshot_every) {
            traj.snapshots.push((i, c.to_vec()));
        }
        Ok(())
    };

    record(0, &c, &mut traj)?;
    let mut sig = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut k = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
    let mut tmp = vec![ZERO; n];
    let minus_i = -I;
    for i in 1..z.len() {
        let (za, zb) = (z[i - 1], z[i]);
        let steps = ((zb - za) / dz).ceil().max(1.0) as usize;
        let h = (zb - za) / steps as f64;
        for s in 0..steps {
            let z0 = za + s as f64 * h;
            detuning.fill(z0, &mut sig[0])?;
            detuning.fill(z0 + 0.5 * h, &mut sig[1])?;
            detuning.fill(z0 + h, &mut sig[2])?;

            apply_h(&c, kappa, &sig[0], opts.boundary, &mut k[0]);
            k[0].iter_mut().for_each(|v| *v *= minus_i);
            for (t, (ci, ki)) in tmp.iter_mut().zip(c.iter().zip(&k[0])) {
                *t = ci + ki * (0.5 * h);
            }
            apply_h(&tmp, kappa, &sig[1], opts.boundary, &mut k[1]);
            k[1].iter_mut().for_each(|v| *v *= minus_i);
            for (t, (ci, ki)) in tmp.iter_mut().zip(c.iter().zip(&k[1])) {
                *t = ci + ki * (0.5 * h);
            }
            apply_h(&tmp, kappa, &sig[1], opts.boundary, &mut k[2]);
            k[2].iter_mut().for_each(|v| *v *= minus_i);
            for (t, (ci, ki)) in tmp.iter_mut().zip(c.iter().zip(&k[2])) {
                *t = ci + ki * h;
            }
            apply_h(&tmp, kappa, &sig[2], opts.boundary, &mut k[3]);
            k[3].iter_mut().for_each(|v| *v *= minus_i);
            for j in 0..n {
                c[j] += (k[0][j] + (k[1][j] + k[2][j]) * 2.0 + k[3][j]) * (h / 6.0);
            }
        }
        record(i, &c, &mut traj)?;
    }
    traj.final_state = WaveguideState {
        amplitudes: c,
        d: state.d,
        origin: state.origin,
    };
    Ok(traj)
}

/// `|c_l|` per stored snapshot: rows are z samples, columns waveguides.
pub fn intensity_map(traj: &LatticeTrajectory) -> Matrix {
    let cols = traj.snapshots.first().map_or(0, |(_, c)| c.len());
    let data = traj
        .snapshots
        .iter()
        .flat_map(|(_, c)| c.iter().map(|v| v.norm()))
        .collect();
    Matrix::new(traj.snapshots.len(), cols, data).expect("snapshots share one width")
}
