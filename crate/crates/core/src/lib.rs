//! Simulation and Monte Carlo verification of random walks with
//! reinforced memory: elephant random walks under two reinforcement
//! rules, their three-color urn representations, percolated preferential
//! attachment trees, and the strongly reinforced shark random swim driven
//! by isotropic stable steps.
//!
//! The crate is organized around the objects themselves:
//!
//! - [`walk`]: the general reinforced-walk engine with pluggable step
//!   sources and O(log n) weighted selection;
//! - [`urn`]: random-replacement urns equivalent in law to the walks;
//! - [`patree`]: preferential attachment trees, midpoint-cut percolation,
//!   and branching-process samplers for the limit variables;
//! - [`srs`]: shark-swim simulators and limit characteristic functions;
//! - [`stable`]: isotropic alpha-stable sampling;
//! - [`theory`]: closed-form constants, thresholds, and moment formulas;
//! - [`stats`]: estimators, tests, and MCReport records;
//! - [`verify`]: the named acceptance checks behind `reinforce-walk
//!   verify`;
//! - [`cli`]: the command-line interface.

pub mod cli;
pub mod error;
pub mod fenwick;
pub mod patree;
pub mod rng;
pub mod special;
pub mod srs;
pub mod stable;
pub mod stats;
pub mod theory;
pub mod urn;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
