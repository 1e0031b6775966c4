//! Sparse recovery by weighted basis pursuit denoise.
//!
//! The crate solves `minimize sum_i w_i |u_i| subject to ||A u - y||_2 <= eps`
//! with an operator-splitting solver ([`wbpdn`]) and wraps it in three
//! recovery drivers ([`reweight`]): plain l1, iterative reweighting with
//! inverse-magnitude weights (IRL1), and support-driven reweighting with
//! constant weights on a support estimate and on the intersection of
//! consecutive estimates (SDRL1).
//!
//! [`theory`] evaluates the constants and sufficient conditions that motivate
//! support-driven reweighting, and [`bench`] runs the sparse phase-grid and
//! compressible-signal Monte Carlo experiments.
//!
//! Index sets are 0-based inside the library. The CLI and the binary/JSON
//! outputs convert to 1-based indices at the boundary.

pub mod bench;
pub mod error;
pub mod io;
pub mod reweight;
pub mod rng;
pub mod sensing;
pub mod sigcore;
pub mod signalgen;
pub mod theory;
pub mod wbpdn;

pub use error::{Error, Result};
pub use reweight::{run_irl1, run_l1, run_sdrl1, Method, OuterConfig, RecoveryResult};
pub use sensing::{gen_gaussian, measure, MeasurementSet, SensingMatrix};
pub use sigcore::{IndexSet, SignalVector};
pub use wbpdn::{solve, SolverConfig, SolverResult, WeightVector};
