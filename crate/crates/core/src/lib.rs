//! Dirac spinor wave packets in 1+1 dimensional flat and conformally flat
//! spacetimes.
//!
//! * [`geometry`] — Christoffel symbols, vielbein, spin and spinor connections
//!   and Ricci scalar for diagonal 2D metrics.
//! * [`dirac_continuum`] — spectral evolution of spinor packets under the flat
//!   and time-dependent-mass Dirac equations, zitterbewegung analysis.
//! * [`scalar_bogolyubov`] — scalar mode functions and Bogolyubov coefficients.
//! * [`waveguide`] — binary waveguide-array coupled-mode equations and the
//!   spinor ↔ waveguide map.
//! * [`io`] — CSV/PGM writers, run manifests and series comparison.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dirac_continuum;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod ode;
pub mod scalar_bogolyubov;
pub mod waveguide;

pub use dirac_continuum::{
    Branch, ConformalProfile, DiracError, ModeSpectrum, SpinorGrid, Trajectory, ZbResult,
};
pub use geometry::{GeometryError, MetricFamily, MetricSpec, Point};
pub use io::{ComparisonReport, IoError, Matrix, RunManifest, Scaling, Series, Table};
pub use linalg::{Mat2, C64};
pub use scalar_bogolyubov::{BogolyubovError, BogolyubovPair, FrequencyProfile, ModeFunction};
pub use waveguide::{DetuningProfile, LatticeTrajectory, WaveguideError, WaveguideState};
