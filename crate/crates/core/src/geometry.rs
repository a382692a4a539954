//! Connection coefficients of diagonal 1+1 dimensional metrics.
//!
//! Coordinate 0 is time, coordinate 1 is space. Every array is indexed
//! `[upper][lower...]`, in the order the component symbol is written:
//!
//! * `ChristoffelSymbols::gamma[l][m][n]` is Γ^l_{mn}
//! * `Vielbein::e_inv[mu][a]` is e^μ_a, `Vielbein::e[a][mu]` is e^a_μ
//! * `SpinConnection::omega[a][b][n]` is ω^a_{bn}
//!
//! Local (Latin) indices are raised and lowered with η = diag(1, −1). The gamma
//! matrices are fixed to γ̃⁰ = σ_z, γ̃¹ = iσ_y.
//!
//! Everything in [`christoffel`], [`spin_connection`] and [`ricci_scalar`] is
//! evaluated from the general index formulas acting on the metric components
//! and their partial derivatives. The hand-reduced expressions for each metric
//! family live in [`closed_form`] and are used as an independent check.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Mat2, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("{what} = {value} is not positive at (t={t}, x={x})")]
    Domain {
        what: &'static str,
        value: f64,
        t: f64,
        x: f64,
    },
    #[error("non-finite {what} at (t={t}, x={x})")]
    NonFinite { what: &'static str, t: f64, x: f64 },
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// A spacetime point `(t, x)`; for the Rindler families these are `(v, u)` and `(η, ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub t: f64,
    pub x: f64,
}

impl Point {
    pub const fn new(t: f64, x: f64) -> Self {
        Point { t, x }
    }

    pub fn coord(&self, i: usize) -> f64 {
        if i == 0 {
            self.t
        } else {
            self.x
        }
    }

    fn shifted(&self, i: usize, h: f64) -> Point {
        let mut p = *self;
        if i == 0 {
            p.t += h;
        } else {
            p.x += h;
        }
        p
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.t, self.x)
    }
}

/// Central-difference step for first derivatives.
pub fn fd_step(s: f64) -> f64 {
    1e-5 * s.abs().max(1.0)
}

/// Second derivatives use a wider stencil; with `fd_step` the `ε/h²` roundoff
/// would sit at 1e-6.
pub fn fd_step_second(s: f64) -> f64 {
    1e-4 * s.abs().max(1.0)
}

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Grad2 = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;
type Hess2 = Arc<dyn Fn(f64, f64) -> [[f64; 2]; 2] + Send + Sync>;

/// Real function of one coordinate with optional analytic derivatives.
#[derive(Clone)]
pub struct ScalarFunction1D {
    f: Fn1,
    d1: Option<Fn1>,
    d2: Option<Fn1>,
}

impl fmt::Debug for ScalarFunction1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction1D")
            .field("analytic_derivatives", &self.has_analytic_derivatives())
            .finish()
    }
}

impl ScalarFunction1D {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFunction1D {
            f: Arc::new(f),
            d1: None,
            d2: None,
        }
    }

    pub fn with_derivatives(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarFunction1D {
            f: Arc::new(f),
            d1: Some(Arc::new(d1)),
            d2: Some(Arc::new(d2)),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::with_derivatives(move |_| c, |_| 0.0, |_| 0.0)
    }

    /// `amplitude · exp(rate · s)`
    pub fn exponential(amplitude: f64, rate: f64) -> Self {
        Self::with_derivatives(
            move |s| amplitude * (rate * s).exp(),
            move |s| amplitude * rate * (rate * s).exp(),
            move |s| amplitude * rate * rate * (rate * s).exp(),
        )
    }

    /// `Σ coeffs[i] · s^i`
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let c0 = Arc::new(coeffs);
        let (c1, c2) = (c0.clone(), c0.clone());
        Self::with_derivatives(
            move |s| c0.iter().rev().fold(0.0, |acc, &c| acc * s + c),
            move |s| {
                c1.iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (i, &c)| acc * s + i as f64 * c)
            },
            move |s| {
                c2.iter()
                    .enumerate()
                    .skip(2)
                    .rev()
                    .fold(0.0, |acc, (i, &c)| acc * s + (i * (i - 1)) as f64 * c)
            },
        )
    }

    /// `ln(s)`, defined for `s > 0`.
    pub fn log() -> Self {
        Self::with_derivatives(f64::ln, |s| 1.0 / s, |s| -1.0 / (s * s))
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.d1.is_some() && self.d2.is_some()
    }

    /// Same function with the analytic derivatives dropped, so the
    /// finite-difference fallback is used.
    pub fn without_derivatives(&self) -> Self {
        ScalarFunction1D {
            f: self.f.clone(),
            d1: None,
            d2: None,
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    pub fn d1(&self, s: f64) -> f64 {
        match &self.d1 {
            Some(d) => d(s),
            None => self.fd1(s),
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        match &self.d2 {
            Some(d) => d(s),
            None => self.fd2(s),
        }
    }

    fn fd1(&self, s: f64) -> f64 {
        let h = fd_step(s);
        (self.value(s + h) - self.value(s - h)) / (2.0 * h)
    }

    fn fd2(&self, s: f64) -> f64 {
        let h = fd_step_second(s);
        (self.value(s + h) - 2.0 * self.value(s) + self.value(s - h)) / (h * h)
    }

    /// Largest relative mismatch between the analytic derivatives and central
    /// differences over `probes`, or `None` when no analytic derivatives exist.
    pub fn derivative_mismatch(&self, probes: &[f64]) -> Option<f64> {
        if !self.has_analytic_derivatives() {
            return None;
        }
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
        Some(probes.iter().fold(0.0_f64, |worst, &s| {
            worst
                .max(rel(self.d1(s), self.fd1(s)))
                .max(rel(self.d2(s), self.fd2(s)))
        }))
    }
}

/// Real function of `(t, x)` with optional analytic gradient and Hessian.
#[derive(Clone)]
pub struct ScalarFunction2D {
    f: Fn2,
    grad: Option<Grad2>,
    hess: Option<Hess2>,
}

impl fmt::Debug for ScalarFunction2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction2D")
            .field("analytic_derivatives", &self.has_analytic_derivatives())
            .finish()
    }
}

impl ScalarFunction2D {
    pub fn new(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFunction2D {
            f: Arc::new(f),
            grad: None,
            hess: None,
        }
    }

    pub fn with_derivatives(
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        grad: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
        hess: impl Fn(f64, f64) -> [[f64; 2]; 2] + Send + Sync + 'static,
    ) -> Self {
        ScalarFunction2D {
            f: Arc::new(f),
            grad: Some(Arc::new(grad)),
            hess: Some(Arc::new(hess)),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::with_derivatives(move |_, _| c, |_, _| [0.0; 2], |_, _| [[0.0; 2]; 2])
    }

    /// Lift a function of time; derivatives carry over.
    pub fn of_time(g: ScalarFunction1D) -> Self {
        let analytic = g.has_analytic_derivatives();
        let (g0, g1, g2) = (g.clone(), g.clone(), g);
        let mut out = Self::new(move |t, _| g0.value(t));
        if analytic {
            out.grad = Some(Arc::new(move |t, _| [g1.d1(t), 0.0]));
            out.hess = Some(Arc::new(move |t, _| [[g2.d2(t), 0.0], [0.0, 0.0]]));
        }
        out
    }

    /// Lift a function of space; derivatives carry over.
    pub fn of_space(g: ScalarFunction1D) -> Self {
        let analytic = g.has_analytic_derivatives();
        let (g0, g1, g2) = (g.clone(), g.clone(), g);
        let mut out = Self::new(move |_, x| g0.value(x));
        if analytic {
            out.grad = Some(Arc::new(move |_, x| [0.0, g1.d1(x)]));
            out.hess = Some(Arc::new(move |_, x| [[0.0, 0.0], [0.0, g2.d2(x)]]));
        }
        out
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.grad.is_some() && self.hess.is_some()
    }

    pub fn without_derivatives(&self) -> Self {
        ScalarFunction2D {
            f: self.f.clone(),
            grad: None,
            hess: None,
        }
    }

    pub fn value(&self, p: Point) -> f64 {
        (self.f)(p.t, p.x)
    }

    pub fn grad(&self, p: Point) -> [f64; 2] {
        match &self.grad {
            Some(g) => g(p.t, p.x),
            None => {
                let mut out = [0.0; 2];
                for (i, o) in out.iter_mut().enumerate() {
                    let h = fd_step(p.coord(i));
                    *o = (self.value(p.shifted(i, h)) - self.value(p.shifted(i, -h))) / (2.0 * h);
                }
                out
            }
        }
    }

    pub fn hess(&self, p: Point) -> [[f64; 2]; 2] {
        if let Some(h) = &self.hess {
            return h(p.t, p.x);
        }
        let mut out = [[0.0; 2]; 2];
        let f0 = self.value(p);
        for i in 0..2 {
            let h = fd_step_second(p.coord(i));
            out[i][i] =
                (self.value(p.shifted(i, h)) - 2.0 * f0 + self.value(p.shifted(i, -h))) / (h * h);
        }
        let (ht, hx) = (fd_step_second(p.t), fd_step_second(p.x));
        let at = |dt: f64, dx: f64| self.value(p.shifted(0, dt).shifted(1, dx));
        let mixed = (at(ht, hx) - at(ht, -hx) - at(-ht, hx) + at(-ht, -hx)) / (4.0 * ht * hx);
        out[0][1] = mixed;
        out[1][0] = mixed;
        out
    }

    fn jet(&self, p: Point) -> Jet {
        Jet {
            v: self.value(p),
            g: self.grad(p),
            h: self.hess(p),
        }
    }
}

/// Value, gradient and Hessian of a scalar at one point.
#[derive(Debug, Clone, Copy)]
struct Jet {
    v: f64,
    g: [f64; 2],
    h: [[f64; 2]; 2],
}

impl Jet {
    fn constant(v: f64) -> Self {
        Jet {
            v,
            g: [0.0; 2],
            h: [[0.0; 2]; 2],
        }
    }

    /// Jet of `exp(f)` given the jet of `f`.
    fn exp(self) -> Self {
        let e = self.v.exp();
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = e * (self.h[i][j] + self.g[i] * self.g[j]);
            }
        }
        Jet {
            v: e,
            g: [e * self.g[0], e * self.g[1]],
            h,
        }
    }

    /// Jet of `f²`.
    fn square(self) -> Self {
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = 2.0 * (self.g[i] * self.g[j] + self.v * self.h[i][j]);
            }
        }
        Jet {
            v: self.v * self.v,
            g: [2.0 * self.v * self.g[0], 2.0 * self.v * self.g[1]],
            h,
        }
    }

    fn from_time(f: &ScalarFunction1D, t: f64) -> Self {
        Jet {
            v: f.value(t),
            g: [f.d1(t), 0.0],
            h: [[f.d2(t), 0.0], [0.0, 0.0]],
        }
    }

    fn from_space(f: &ScalarFunction1D, x: f64) -> Self {
        Jet {
            v: f.value(x),
            g: [0.0, f.d1(x)],
            h: [[0.0, 0.0], [0.0, f.d2(x)]],
        }
    }
}

/// The diagonal 2D metric families.
#[derive(Debug, Clone)]
pub enum MetricFamily {
    /// ds² = Ω²(t,x)(dt² − dx²)
    Conformal(ScalarFunction2D),
    /// ds² = e^{2Φ(x)}dt² − e^{2Ψ(x)}dx²
    Static {
        phi: ScalarFunction1D,
        psi: ScalarFunction1D,
    },
    /// ds² = dt² − a²(t)dx²
    Frw(ScalarFunction1D),
    /// ds² = u²dv² − du² with point `(v, u)`, `u > 0`
    RindlerPolar,
    /// ds² = e^{2aξ}(dη² − dξ²) with point `(η, ξ)`
    RindlerConformal { accel: f64 },
}

/// Metric components `g[m][n]`, first derivatives `dg[r][m][n] = ∂_r g_{mn}`
/// and second derivatives `ddg[l][r][m][n] = ∂_l ∂_r g_{mn}`.
#[derive(Debug, Clone, Copy)]
pub struct MetricJet {
    pub g: [[f64; 2]; 2],
    pub dg: [[[f64; 2]; 2]; 2],
    pub ddg: [[[[f64; 2]; 2]; 2]; 2],
}

impl MetricJet {
    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let g = self.g;
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        [
            [g[1][1] / det, -g[0][1] / det],
            [-g[1][0] / det, g[0][0] / det],
        ]
    }
}

impl MetricFamily {
    /// Jets of `A = √g₀₀` and `B = √(−g₁₁)`.
    fn scale_jets(&self, p: Point) -> Result<(Jet, Jet)> {
        let (a, b) = match self {
            MetricFamily::Conformal(omega) => {
                let j = omega.jet(p);
                check_positive("Ω", j.v, p)?;
                (j, j)
            }
            MetricFamily::Static { phi, psi } => (
                Jet::from_space(phi, p.x).exp(),
                Jet::from_space(psi, p.x).exp(),
            ),
            MetricFamily::Frw(a) => {
                let j = Jet::from_time(a, p.t);
                check_positive("a", j.v, p)?;
                (Jet::constant(1.0), j)
            }
            MetricFamily::RindlerPolar => {
                check_positive("u", p.x, p)?;
                let u = Jet {
                    v: p.x,
                    g: [0.0, 1.0],
                    h: [[0.0; 2]; 2],
                };
                (u, Jet::constant(1.0))
            }
            MetricFamily::RindlerConformal { accel } => {
                let lin = Jet {
                    v: accel * p.x,
                    g: [0.0, *accel],
                    h: [[0.0; 2]; 2],
                };
                let e = lin.exp();
                (e, e)
            }
        };
        for (what, j) in [("√g00", &a), ("√-g11", &b)] {
            let finite = j.v.is_finite()
                && j.g.iter().all(|v| v.is_finite())
                && j.h.iter().flatten().all(|v| v.is_finite());
            if !finite {
                return Err(GeometryError::NonFinite {
                    what,
                    t: p.t,
                    x: p.x,
                });
            }
            check_positive(what, j.v, p)?;
        }
        Ok((a, b))
    }

    /// Metric components and their first two partial derivatives at `p`.
    pub fn metric(&self, p: Point) -> Result<MetricJet> {
        let (a, b) = self.scale_jets(p)?;
        let (a2, b2) = (a.square(), b.square());
        let mut out = MetricJet {
            g: [[a2.v, 0.0], [0.0, -b2.v]],
            dg: [[[0.0; 2]; 2]; 2],
            ddg: [[[[0.0; 2]; 2]; 2]; 2],
        };
        for r in 0..2 {
            out.dg[r][0][0] = a2.g[r];
            out.dg[r][1][1] = -b2.g[r];
            for l in 0..2 {
                out.ddg[l][r][0][0] = a2.h[l][r];
                out.ddg[l][r][1][1] = -b2.h[l][r];
            }
        }
        Ok(out)
    }
}

fn check_positive(what: &'static str, value: f64, p: Point) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::Domain {
            what,
            value,
            t: p.t,
            x: p.x,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChristoffelSymbols {
    pub gamma: [[[f64; 2]; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vielbein {
    pub e_inv: [[f64; 2]; 2],
    pub e: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinConnection {
    pub omega: [[[f64; 2]; 2]; 2],
}

impl SpinConnection {
    /// ω_{abν} = η_{ac} ω^c_{bν}
    pub fn lowered(&self) -> [[[f64; 2]; 2]; 2] {
        let mut out = self.omega;
        for b in 0..2 {
            for n in 0..2 {
                out[1][b][n] = -self.omega[1][b][n];
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorConnectionMatrix {
    pub omega: [Mat2; 2],
}

pub const ETA: [f64; 2] = [1.0, -1.0];

/// γ̃⁰ = σ_z, γ̃¹ = iσ_y
pub fn gamma_matrices() -> [Mat2; 2] {
    [Mat2::sigma_z(), Mat2::sigma_y().scale(crate::linalg::I)]
}

/// [γ̃⁰, γ̃¹]
pub fn gamma_commutator() -> Mat2 {
    let [g0, g1] = gamma_matrices();
    g0.commutator(g1)
}

fn christoffel_from_jet(m: &MetricJet) -> ChristoffelSymbols {
    let ginv = m.inverse();
    let mut gamma = [[[0.0; 2]; 2]; 2];
    for (s, gs) in gamma.iter_mut().enumerate() {
        for mu in 0..2 {
            for nu in 0..2 {
                gs[mu][nu] = 0.5
                    * (0..2)
                        .map(|r| ginv[s][r] * (m.dg[mu][nu][r] + m.dg[nu][r][mu] - m.dg[r][mu][nu]))
                        .sum::<f64>();
            }
        }
    }
    ChristoffelSymbols { gamma }
}

/// Christoffel symbols Γ^σ_{μν} = ½ g^{σρ}(∂_μ g_{νρ} + ∂_ν g_{ρμ} − ∂_ρ g_{μν}).
pub fn christoffel(metric: &MetricFamily, p: Point) -> Result<ChristoffelSymbols> {
    Ok(christoffel_from_jet(&metric.metric(p)?))
}

/// Diagonal vielbein `e^μ_a = δ^μ_a / √|g_μμ|` and its inverse.
pub fn vielbein(metric: &MetricFamily, p: Point) -> Result<Vielbein> {
    let (a, b) = metric.scale_jets(p)?;
    Ok(Vielbein {
        e_inv: [[1.0 / a.v, 0.0], [0.0, 1.0 / b.v]],
        e: [[a.v, 0.0], [0.0, b.v]],
    })
}

/// `∂_ν e^μ_a` indexed `[mu][a][nu]`.
fn vielbein_derivative(metric: &MetricFamily, p: Point) -> Result<[[[f64; 2]; 2]; 2]> {
    let (a, b) = metric.scale_jets(p)?;
    let mut d = [[[0.0; 2]; 2]; 2];
    for n in 0..2 {
        d[0][0][n] = -a.g[n] / (a.v * a.v);
        d[1][1][n] = -b.g[n] / (b.v * b.v);
    }
    Ok(d)
}

/// ω^a_{bν} = e^a_μ ∂_ν e^μ_b + e^a_μ e^σ_b Γ^μ_{σν}
pub fn spin_connection(metric: &MetricFamily, p: Point) -> Result<SpinConnection> {
    let gamma = christoffel(metric, p)?.gamma;
    let vb = vielbein(metric, p)?;
    let de = vielbein_derivative(metric, p)?;
    let mut omega = [[[0.0; 2]; 2]; 2];
    for (a, oa) in omega.iter_mut().enumerate() {
        for (b, oab) in oa.iter_mut().enumerate() {
            for (n, o) in oab.iter_mut().enumerate() {
                let mut sum = 0.0;
                for mu in 0..2 {
                    sum += vb.e[a][mu] * de[mu][b][n];
                    for s in 0..2 {
                        sum += vb.e[a][mu] * vb.e_inv[s][b] * gamma[mu][s][n];
                    }
                }
                *o = sum;
            }
        }
    }
    Ok(SpinConnection { omega })
}

/// Ω_ν = −(i/4) ω_{abν} σ^{ab} with σ^{ab} = (i/2)[γ̃^a, γ̃^b].
pub fn spinor_connection(metric: &MetricFamily, p: Point) -> Result<SpinorConnectionMatrix> {
    let low = spin_connection(metric, p)?.lowered();
    let gam = gamma_matrices();
    let mut out = [Mat2::zero(); 2];
    for (n, o) in out.iter_mut().enumerate() {
        for a in 0..2 {
            for b in 0..2 {
                let sigma_ab = gam[a].commutator(gam[b]).scale(C64::new(0.0, 0.5));
                *o = *o + sigma_ab.scale(C64::new(0.0, -0.25 * low[a][b][n]));
            }
        }
    }
    Ok(SpinorConnectionMatrix { omega: out })
}

/// Ricci tensor `R_{μν}` from
/// `∂_λ Γ^λ_{μν} − ∂_ν Γ^λ_{μλ} + Γ^λ_{μν} Γ^σ_{λσ} − Γ^λ_{μσ} Γ^σ_{νλ}`.
pub fn ricci_tensor(metric: &MetricFamily, p: Point) -> Result<[[f64; 2]; 2]> {
    let m = metric.metric(p)?;
    let ginv = m.inverse();
    let gamma = christoffel_from_jet(&m).gamma;

    // ∂_l g^{sr} = −g^{sa} ∂_l g_{ab} g^{br}
    let mut dginv = [[[0.0; 2]; 2]; 2];
    for (l, dl) in dginv.iter_mut().enumerate() {
        for s in 0..2 {
            for r in 0..2 {
                let mut acc = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        acc -= ginv[s][a] * m.dg[l][a][b] * ginv[b][r];
                    }
                }
                dl[s][r] = acc;
            }
        }
    }

    // dgamma[l][s][mu][nu] = ∂_l Γ^s_{mu nu}
    let mut dgamma = [[[[0.0; 2]; 2]; 2]; 2];
    for l in 0..2 {
        for s in 0..2 {
            for mu in 0..2 {
                for nu in 0..2 {
                    let mut acc = 0.0;
                    for r in 0..2 {
                        let comb = m.dg[mu][nu][r] + m.dg[nu][r][mu] - m.dg[r][mu][nu];
                        let dcomb = m.ddg[l][mu][nu][r] + m.ddg[l][nu][r][mu] - m.ddg[l][r][mu][nu];
                        acc += dginv[l][s][r] * comb + ginv[s][r] * dcomb;
                    }
                    dgamma[l][s][mu][nu] = 0.5 * acc;
                }
            }
        }
    }

    let mut ric = [[0.0; 2]; 2];
    for (mu, row) in ric.iter_mut().enumerate() {
        for (nu, r) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for l in 0..2 {
                acc += dgamma[l][l][mu][nu] - dgamma[nu][l][mu][l];
                for s in 0..2 {
                    acc += gamma[l][mu][nu] * gamma[s][l][s] - gamma[l][mu][s] * gamma[s][nu][l];
                }
            }
            *r = acc;
        }
    }
    Ok(ric)
}

/// Ricci scalar R = g^{μν} R_{μν}.
pub fn ricci_scalar(metric: &MetricFamily, p: Point) -> Result<f64> {
    let ginv = metric.metric(p)?.inverse();
    let ric = ricci_tensor(metric, p)?;
    let mut r = 0.0;
    for mu in 0..2 {
        for nu in 0..2 {
            r += ginv[mu][nu] * ric[mu][nu];
        }
    }
    Ok(r)
}

/// Hand-reduced expressions for each metric family.
pub mod closed_form {
    use super::*;

    fn sym_gamma(entries: &[((usize, usize, usize), f64)]) -> ChristoffelSymbols {
        let mut gamma = [[[0.0; 2]; 2]; 2];
        for &((l, m, n), v) in entries {
            gamma[l][m][n] = v;
            gamma[l][n][m] = v;
        }
        ChristoffelSymbols { gamma }
    }

    fn conformal_rates(omega: &ScalarFunction2D, p: Point) -> Result<(f64, f64, f64)> {
        let o = omega.value(p);
        check_positive("Ω", o, p)?;
        let g = omega.grad(p);
        Ok((o, g[0] / o, g[1] / o))
    }

    /// Φ, Φ', Ψ, Ψ' of the static form, with Rindler polar as Φ = ln u, Ψ = 0.
    fn static_parts(metric: &MetricFamily, p: Point) -> Option<Result<(f64, f64, f64, f64)>> {
        match metric {
            MetricFamily::Static { phi, psi } => Some(Ok((
                phi.value(p.x),
                phi.d1(p.x),
                psi.value(p.x),
                psi.d1(p.x),
            ))),
            MetricFamily::RindlerPolar => {
                Some(check_positive("u", p.x, p).map(|_| (p.x.ln(), 1.0 / p.x, 0.0, 0.0)))
            }
            _ => None,
        }
    }

    pub fn christoffel(metric: &MetricFamily, p: Point) -> Result<ChristoffelSymbols> {
        if let Some(parts) = static_parts(metric, p) {
            let (phi, dphi, psi, dpsi) = parts?;
            return Ok(sym_gamma(&[
                ((0, 1, 0), dphi),
                ((1, 0, 0), dphi * (2.0 * (phi - psi)).exp()),
                ((1, 1, 1), dpsi),
            ]));
        }
        match metric {
            MetricFamily::Conformal(omega) => {
                let (_, dot, prime) = conformal_rates(omega, p)?;
                Ok(sym_gamma(&[
                    ((0, 0, 0), dot),
                    ((0, 1, 1), dot),
                    ((1, 1, 0), dot),
                    ((0, 0, 1), prime),
                    ((1, 0, 0), prime),
                    ((1, 1, 1), prime),
                ]))
            }
            MetricFamily::Frw(a) => {
                let av = a.value(p.t);
                check_positive("a", av, p)?;
                let ad = a.d1(p.t);
                Ok(sym_gamma(&[((0, 1, 1), av * ad), ((1, 1, 0), ad / av)]))
            }
            MetricFamily::RindlerConformal { accel } => Ok(sym_gamma(&[
                ((0, 0, 1), *accel),
                ((1, 0, 0), *accel),
                ((1, 1, 1), *accel),
            ])),
            _ => unreachable!("static families handled above"),
        }
    }

    pub fn vielbein(metric: &MetricFamily, p: Point) -> Result<Vielbein> {
        let (e00, e11) = if let Some(parts) = static_parts(metric, p) {
            let (phi, _, psi, _) = parts?;
            ((-phi).exp(), (-psi).exp())
        } else {
            match metric {
                MetricFamily::Conformal(omega) => {
                    let (o, _, _) = conformal_rates(omega, p)?;
                    (1.0 / o, 1.0 / o)
                }
                MetricFamily::Frw(a) => {
                    let av = a.value(p.t);
                    check_positive("a", av, p)?;
                    (1.0, 1.0 / av)
                }
                MetricFamily::RindlerConformal { accel } => {
                    let e = (-accel * p.x).exp();
                    (e, e)
                }
                _ => unreachable!("static families handled above"),
            }
        };
        Ok(Vielbein {
            e_inv: [[e00, 0.0], [0.0, e11]],
            e: [[1.0 / e00, 0.0], [0.0, 1.0 / e11]],
        })
    }

    /// Only the off-diagonal ω^0_{1ν} = ω^1_{0ν} survive for diagonal metrics.
    fn boost_rates(metric: &MetricFamily, p: Point) -> Result<[f64; 2]> {
        if let Some(parts) = static_parts(metric, p) {
            let (phi, dphi, psi, _) = parts?;
            return Ok([dphi * (phi - psi).exp(), 0.0]);
        }
        match metric {
            MetricFamily::Conformal(omega) => {
                let (_, dot, prime) = conformal_rates(omega, p)?;
                Ok([prime, dot])
            }
            MetricFamily::Frw(a) => {
                check_positive("a", a.value(p.t), p)?;
                Ok([0.0, a.d1(p.t)])
            }
            MetricFamily::RindlerConformal { accel } => Ok([*accel, 0.0]),
            _ => unreachable!("static families handled above"),
        }
    }

    pub fn spin_connection(metric: &MetricFamily, p: Point) -> Result<SpinConnection> {
        let w = boost_rates(metric, p)?;
        let mut omega = [[[0.0; 2]; 2]; 2];
        omega[0][1] = w;
        omega[1][0] = w;
        Ok(SpinConnection { omega })
    }

    /// Ω_ν = (ω^0_{1ν}/4)[γ̃⁰, γ̃¹]
    pub fn spinor_connection(metric: &MetricFamily, p: Point) -> Result<SpinorConnectionMatrix> {
        let w = boost_rates(metric, p)?;
        let comm = gamma_commutator();
        Ok(SpinorConnectionMatrix {
            omega: [comm.scale_re(w[0] / 4.0), comm.scale_re(w[1] / 4.0)],
        })
    }

    /// Conformal: R = −(2/Ω²)(∂_t² − ∂_x²) ln Ω, which for Ω(t) is
    /// 2((Ω̇/Ω)² − Ω̈/Ω)/Ω². Static: 2e^{−2Ψ}(Φ'' + Φ'² − Φ'Ψ'). FRW: −2ä/a.
    pub fn ricci_scalar(metric: &MetricFamily, p: Point) -> Result<f64> {
        match metric {
            MetricFamily::Conformal(omega) => {
                let (o, dot, prime) = conformal_rates(omega, p)?;
                let h = omega.hess(p);
                let ln_tt = h[0][0] / o - dot * dot;
                let ln_xx = h[1][1] / o - prime * prime;
                Ok(-2.0 * (ln_tt - ln_xx) / (o * o))
            }
            MetricFamily::Static { phi, psi } => {
                let (dphi, dpsi) = (phi.d1(p.x), psi.d1(p.x));
                Ok(2.0 * (-2.0 * psi.value(p.x)).exp() * (phi.d2(p.x) + dphi * dphi - dphi * dpsi))
            }
            MetricFamily::Frw(a) => {
                let av = a.value(p.t);
                check_positive("a", av, p)?;
                Ok(-2.0 * a.d2(p.t) / av)
            }
            MetricFamily::RindlerPolar => {
                check_positive("u", p.x, p)?;
                Ok(0.0)
            }
            MetricFamily::RindlerConformal { .. } => Ok(0.0),
        }
    }
}

/// Named, parameterized metrics used by the command line and the checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", content = "params", rename_all = "kebab-case")]
pub enum MetricSpec {
    Flat(NoParams),
    /// Ω = exp(rate·t)
    ConformalExp(RateParams),
    /// Ω(t) = Σ coeffs[i] tⁱ
    ConformalPoly(PolyParams),
    /// Ω(t,x) = 1 + amplitude·exp(−(t²+x²)/(2 width²))
    ConformalBump(BumpParams),
    /// Φ(x), Ψ(x) polynomials
    StaticPoly(StaticParams),
    /// a(t) = a0 + rate·t
    FrwLinear(LinearParams),
    /// a(t) = exp(hubble·t)
    FrwExp(HubbleParams),
    RindlerPolar(NoParams),
    RindlerConformal(AccelParams),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoParams {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateParams {
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyParams {
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpParams {
    pub amplitude: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticParams {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearParams {
    pub a0: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HubbleParams {
    pub hubble: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccelParams {
    pub accel: f64,
}

impl MetricSpec {
    pub const NAMES: [&'static str; 9] = [
        "flat",
        "conformal-exp",
        "conformal-poly",
        "conformal-bump",
        "static-poly",
        "frw-linear",
        "frw-exp",
        "rindler-polar",
        "rindler-conformal",
    ];

    /// Parse from a metric name and its JSON parameter object.
    pub fn from_name(name: &str, params: serde_json::Value) -> serde_json::Result<Self> {
        let params = if params.is_null() {
            serde_json::json!({})
        } else {
            params
        };
        serde_json::from_value(serde_json::json!({ "metric": name, "params": params }))
    }

    /// A representative instance of every family.
    pub fn catalog() -> Vec<MetricSpec> {
        vec![
            MetricSpec::Flat(NoParams {}),
            MetricSpec::ConformalExp(RateParams { rate: 0.7 }),
            MetricSpec::ConformalPoly(PolyParams {
                coeffs: vec![1.0, 0.3, 0.5],
            }),
            MetricSpec::ConformalBump(BumpParams {
                amplitude: 0.4,
                width: 0.8,
            }),
            MetricSpec::StaticPoly(StaticParams {
                phi: vec![0.1, 0.5, -0.3],
                psi: vec![-0.2, 0.2, 0.4],
            }),
            MetricSpec::FrwLinear(LinearParams { a0: 1.0, rate: 0.8 }),
            MetricSpec::FrwExp(HubbleParams { hubble: 0.6 }),
            MetricSpec::RindlerPolar(NoParams {}),
            MetricSpec::RindlerConformal(AccelParams { accel: 0.9 }),
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricSpec::Flat(_) => "flat",
            MetricSpec::ConformalExp(_) => "conformal-exp",
            MetricSpec::ConformalPoly(_) => "conformal-poly",
            MetricSpec::ConformalBump(_) => "conformal-bump",
            MetricSpec::StaticPoly(_) => "static-poly",
            MetricSpec::FrwLinear(_) => "frw-linear",
            MetricSpec::FrwExp(_) => "frw-exp",
            MetricSpec::RindlerPolar(_) => "rindler-polar",
            MetricSpec::RindlerConformal(_) => "rindler-conformal",
        }
    }

    /// Build the family with analytic derivatives.
    pub fn build(&self) -> MetricFamily {
        match self {
            MetricSpec::Flat(_) => MetricFamily::Conformal(ScalarFunction2D::constant(1.0)),
            MetricSpec::ConformalExp(p) => MetricFamily::Conformal(ScalarFunction2D::of_time(
                ScalarFunction1D::exponential(1.0, p.rate),
            )),
            MetricSpec::ConformalPoly(p) => MetricFamily::Conformal(ScalarFunction2D::of_time(
                ScalarFunction1D::polynomial(p.coeffs.clone()),
            )),
            MetricSpec::ConformalBump(p) => {
                let (amp, w2) = (p.amplitude, p.width * p.width);
                let bump = move |t: f64, x: f64| amp * (-(t * t + x * x) / (2.0 * w2)).exp();
                MetricFamily::Conformal(ScalarFunction2D::with_derivatives(
                    move |t, x| 1.0 + bump(t, x),
                    move |t, x| {
                        let b = bump(t, x);
                        [-t / w2 * b, -x / w2 * b]
                    },
                    move |t, x| {
                        let b = bump(t, x);
                        let (ct, cx) = (-t / w2, -x / w2);
                        [
                            [b * (ct * ct - 1.0 / w2), b * ct * cx],
                            [b * ct * cx, b * (cx * cx - 1.0 / w2)],
                        ]
                    },
                ))
            }
            MetricSpec::StaticPoly(p) => MetricFamily::Static {
                phi: ScalarFunction1D::polynomial(p.phi.clone()),
                psi: ScalarFunction1D::polynomial(p.psi.clone()),
            },
            MetricSpec::FrwLinear(p) => {
                MetricFamily::Frw(ScalarFunction1D::polynomial(vec![p.a0, p.rate]))
            }
            MetricSpec::FrwExp(p) => {
                MetricFamily::Frw(ScalarFunction1D::exponential(1.0, p.hubble))
            }
            MetricSpec::RindlerPolar(_) => MetricFamily::RindlerPolar,
            MetricSpec::RindlerConformal(p) => MetricFamily::RindlerConformal { accel: p.accel },
        }
    }

    /// Coordinate box `[(t_lo, t_hi), (x_lo, x_hi)]` inside which probe points are drawn.
    pub fn probe_box(&self) -> [(f64, f64); 2] {
        match self {
            MetricSpec::RindlerPolar(_) => [(-1.0, 1.0), (0.5, 2.5)],
            MetricSpec::FrwLinear(p) if p.rate < 0.0 => {
                // keep a(t) > a0/2
                let t_hi = (0.5 * p.a0 / -p.rate).min(1.0);
                [(0.0, t_hi), (-1.0, 1.0)]
            }
            MetricSpec::FrwLinear(_) => [(0.0, 1.0), (-1.0, 1.0)],
            _ => [(-1.0, 1.0), (-1.0, 1.0)],
        }
    }
}

impl MetricFamily {
    /// Same family with every analytic derivative dropped.
    pub fn finite_difference(&self) -> MetricFamily {
        match self {
            MetricFamily::Conformal(o) => MetricFamily::Conformal(o.without_derivatives()),
            MetricFamily::Static { phi, psi } => MetricFamily::Static {
                phi: phi.without_derivatives(),
                psi: psi.without_derivatives(),
            },
            MetricFamily::Frw(a) => MetricFamily::Frw(a.without_derivatives()),
            other => other.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> MetricFamily {
        MetricFamily::Conformal(ScalarFunction2D::constant(1.0))
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn flat_spacetime_has_no_connection() {
        let p = Point::new(0.3, -1.2);
        let g = christoffel(&flat(), p).unwrap();
        assert!(g.gamma.iter().flatten().flatten().all(|&v| v == 0.0));
        let v = vielbein(&flat(), p).unwrap();
        assert_eq!(v.e_inv, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(v.e, [[1.0, 0.0], [0.0, 1.0]]);
        let w = spin_connection(&flat(), p).unwrap();
        assert!(w.omega.iter().flatten().flatten().all(|&v| v == 0.0));
        let s = spinor_connection(&flat(), p).unwrap();
        assert_eq!(s.omega, [Mat2::zero(); 2]);
        assert_eq!(ricci_scalar(&flat(), p).unwrap(), 0.0);
    }

    #[test]
    fn exponential_conformal_factor_christoffels() {
        let m = MetricFamily::Conformal(ScalarFunction2D::of_time(ScalarFunction1D::exponential(
            1.0, 1.0,
        )));
        let g = christoffel(&m, Point::new(0.0, 0.0)).unwrap().gamma;
        for (l, mu, nu, want) in [
            (0, 0, 0, 1.0),
            (0, 1, 1, 1.0),
            (1, 1, 0, 1.0),
            (1, 0, 1, 1.0),
            (0, 0, 1, 0.0),
            (0, 1, 0, 0.0),
            (1, 0, 0, 0.0),
            (1, 1, 1, 0.0),
        ] {
            assert_close(g[l][mu][nu], want, 1e-15);
        }
    }

    #[test]
    fn frw_linear_scale_factor() {
        let m = MetricFamily::Frw(ScalarFunction1D::polynomial(vec![0.0, 2.0]));
        let g = christoffel(&m, Point::new(1.0, 0.0)).unwrap().gamma;
        assert_close(g[0][1][1], 4.0, 1e-14);
        assert_close(g[1][1][0], 1.0, 1e-14);
        assert_close(g[1][0][1], 1.0, 1e-14);
        assert_close(g[0][0][0], 0.0, 1e-14);

        let m = MetricFamily::Frw(ScalarFunction1D::constant(2.0));
        let v = vielbein(&m, Point::new(0.0, 0.0)).unwrap();
        assert_eq!(v.e_inv, [[1.0, 0.0], [0.0, 0.5]]);

        let m = MetricFamily::Frw(ScalarFunction1D::polynomial(vec![0.0, 1.0]));
        let w = spin_connection(&m, Point::new(2.0, 0.0)).unwrap().omega;
        assert_close(w[0][1][1], 1.0, 1e-14);
        assert_close(w[1][0][1], 1.0, 1e-14);
    }

    #[test]
    fn static_vielbein_components() {
        let phi = ScalarFunction1D::polynomial(vec![0.2, 0.5]);
        let psi = ScalarFunction1D::polynomial(vec![-0.1, 0.0, 0.3]);
        let x = 0.7;
        let m = MetricFamily::Static {
            phi: phi.clone(),
            psi: psi.clone(),
        };
        let v = vielbein(&m, Point::new(0.0, x)).unwrap();
        assert_close(v.e_inv[0][0], (-phi.value(x)).exp(), 1e-15);
        assert_close(v.e_inv[1][1], (-psi.value(x)).exp(), 1e-15);
    }

    #[test]
    fn quadratic_conformal_factor_ricci() {
        let m = MetricFamily::Conformal(ScalarFunction2D::of_time(ScalarFunction1D::polynomial(
            vec![1.0, 0.0, 1.0],
        )));
        assert_close(ricci_scalar(&m, Point::new(0.0, 0.0)).unwrap(), -4.0, 1e-12);
        let fd = m.finite_difference();
        assert_close(ricci_scalar(&fd, Point::new(0.0, 0.0)).unwrap(), -4.0, 1e-6);
    }

    #[test]
    fn exponential_conformal_factor_is_flat() {
        let m = MetricFamily::Conformal(ScalarFunction2D::of_time(ScalarFunction1D::exponential(
            1.0, 1.0,
        )));
        for t in [-1.0, 0.0, 0.5, 2.0] {
            assert_close(ricci_scalar(&m, Point::new(t, 0.3)).unwrap(), 0.0, 1e-12);
        }
    }

    #[test]
    fn domain_violations_carry_the_point() {
        let m = MetricFamily::Frw(ScalarFunction1D::polynomial(vec![0.0, 1.0]));
        let err = christoffel(&m, Point::new(-0.5, 1.0)).unwrap_err();
        assert_eq!(
            err,
            GeometryError::Domain {
                what: "a",
                value: -0.5,
                t: -0.5,
                x: 1.0
            }
        );
        assert!(matches!(
            vielbein(&MetricFamily::RindlerPolar, Point::new(0.0, 0.0)),
            Err(GeometryError::Domain { what: "u", .. })
        ));
        let neg = MetricFamily::Conformal(ScalarFunction2D::constant(-1.0));
        assert!(spin_connection(&neg, Point::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn spinor_connection_is_proportional_to_gamma_commutator() {
        let comm = gamma_commutator();
        // [σ_z, iσ_y] = 2σ_x
        assert_eq!(comm, Mat2::sigma_x().scale_re(2.0));
        let spec = MetricSpec::catalog();
        for s in &spec {
            let m = s.build();
            let [(t0, _), (x0, _)] = s.probe_box();
            let p = Point::new(t0 + 0.25, x0 + 0.3);
            let om = spinor_connection(&m, p).unwrap();
            for mat in om.omega {
                // mat = c·comm, so the σ_x entries carry everything
                let c = mat.0[0][1] / comm.0[0][1];
                assert!((mat - comm.scale(c)).max_abs() < 1e-14, "{}", s.name());
            }
        }
    }

    #[test]
    fn metric_spec_parses_from_name_and_params() {
        let s = MetricSpec::from_name("frw-exp", serde_json::json!({"hubble": 0.5})).unwrap();
        assert_eq!(s, MetricSpec::FrwExp(HubbleParams { hubble: 0.5 }));
        let s = MetricSpec::from_name("rindler-polar", serde_json::Value::Null).unwrap();
        assert_eq!(s.name(), "rindler-polar");
        assert!(MetricSpec::from_name("frw-exp", serde_json::json!({"h": 0.5})).is_err());
        assert!(MetricSpec::from_name("kerr", serde_json::json!({})).is_err());
        for s in MetricSpec::catalog() {
            assert!(MetricSpec::NAMES.contains(&s.name()));
        }
    }

    #[test]
    fn analytic_derivatives_agree_with_differences() {
        let probes: Vec<f64> = (0..20).map(|i| -1.0 + 0.1 * i as f64).collect();
        for f in [
            ScalarFunction1D::exponential(1.3, -0.7),
            ScalarFunction1D::polynomial(vec![1.0, -2.0, 0.5, 0.25]),
        ] {
            assert!(f.derivative_mismatch(&probes).unwrap() < 1e-6);
        }
        assert!(ScalarFunction1D::new(f64::sin)
            .derivative_mismatch(&probes)
            .is_none());
    }
}
