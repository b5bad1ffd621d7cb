//! Capacity of general run-length constrained systems.
//!
//! A system `<W, L>` admits every string whose runs have lengths in the set
//! `W` and whose adjacent runs carry distinct labels from the alphabet `L`.
//! This crate evaluates its generating functions, solves for its capacity,
//! counts its strings exactly, and builds and samples its maxentropic input
//! process.

pub mod capacity;
pub mod enumeration;
pub mod error;
pub mod genfun;
pub mod maxent;
pub mod system;
pub mod system_file;
pub mod text;
pub mod weight;

pub use capacity::{capacity_residual_certificate, solve_capacity, CapacityResult};
pub use error::{Error, Result};
pub use genfun::{eval_gw, eval_gw_derivative, eval_support_gf, eval_system_gf, SeriesValue};
pub use system::{ConstrainedSystem, Label, LabelSet, Run, RunLengthSet, RunString};
pub use weight::Weight;
