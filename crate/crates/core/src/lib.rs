//! Stochastic-process models for movement tracks, age-structured
//! populations, rainfall travel times and clustered point patterns.
//!
//! Most users start from the runnable programs under `examples/`; the
//! `stochmodels` binary exposes the same operations as subcommands.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cluster;
pub mod diagnostics;
pub mod error;
pub mod geom;
pub mod inference;
pub mod optim;
pub mod popdyn;
pub mod potential;
pub mod raintravel;
pub mod rng;
pub mod scenarios;
pub mod sde;
pub mod special;
pub mod trajectory;

pub use error::{Error, Result};
pub use geom::{Point, Region};
pub use rng::{derive_rng, RngStream};
pub use trajectory::{load_trajectory, Trajectory};
