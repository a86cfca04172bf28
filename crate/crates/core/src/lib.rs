//! Controlled multi-object scene datasets for probing conditional image
//! generators, and the tooling to score what those generators produce.
//!
//! The pipeline runs config → [`sampler`] → [`render`] → [`dataset_io`], and
//! evaluation runs predictions / generated images → [`metrics`]. The
//! [`miner`] module counts count- and relation-phrases in caption corpora.

pub mod dataset_io;
pub mod error;
pub mod metrics;
pub mod miner;
pub mod render;
pub mod sampler;
pub mod scene;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{MosaicError, Result};
