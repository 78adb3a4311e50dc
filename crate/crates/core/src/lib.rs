//! Construction and verification of a pair of interval diffeomorphisms
//! `f, g` of `[0, 1]` whose group exhibits level descent without a local
//! minimal set, at configurable truncation depth.

pub mod bridge;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod generators;
pub mod output;
pub mod partition;
pub mod regularity;
mod zeta;

pub use error::{LabError, Result};
pub use generators::{IntervalAction, Letter, MapKind, Word};
pub use partition::{LocalPoint, Params, PartitionModel, Schedule};
