//! Simulator and verification harness for the degenerate viscous lake
//! equations on the unit disk with Navier/free boundary conditions.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bathymetry;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod initial;
pub mod io;
pub mod norms;
pub mod verify;

pub use error::{LakeError, Result};
