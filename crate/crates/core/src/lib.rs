//! Mean-field ground states and phase diagrams of a multi-cavity Dicke model
//! with staggered Zeeman couplings and an optional periodic drive.
//!
//! `no_std` with `alloc`; file formats, the CLI and parallel sweeps live in
//! the `dicke` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod math;

pub mod bessel;
pub mod critical;
pub mod ed;
pub mod error;
pub mod exponent;
pub mod exec;
pub mod linalg;
pub mod model;
pub mod profile;
pub mod scan;
pub mod sequence;
pub mod solver;
pub mod texture;

pub use error::{Error, Result};
pub use model::{DriveParams, GroundState, ModelParams, PhaseLabel, ZeemanSet};
pub use solver::{minimize_driven, minimize_undriven, MinimaReport, SolverOptions};
