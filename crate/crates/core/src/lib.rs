//! Phase-space dynamics in the Husimi representation.
//!
//! The crate propagates Wigner, Husimi, and classical phase-space states on
//! periodic spectral grids, computes gauge-dependent hydrodynamic fluxes and
//! parcel trajectories, and provides the numerical diagnostics (purity,
//! continuity, action stationarity, Bopp equivalences) used by the
//! verification suite.

pub mod error;
mod fftplan;
pub mod grid;
pub mod field;
pub mod symbols;
pub mod algebra;
pub mod states;
pub mod dynamics;
pub mod interp;
pub mod flux;
pub mod action;
pub mod bopp;
pub mod snapshot;

pub use error::{Error, Result};
pub use field::{Field, ScalarKind};
pub use grid::{Axis, AxisSpec, DofWidths, Grid};
pub use states::{Representation, State};
