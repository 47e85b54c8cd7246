//! Argument facet similarity toolkit.
//!
//! The crate covers two pipelines over topic-sorted dialog sentences:
//! selecting sentences that read as standalone arguments (`corpus`, `aq`),
//! and predicting graded similarity for pairs of such arguments
//! (`pairing`, `features`, `ml`, `report`). The `cli` module drives both
//! from a config file.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aq;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod features;
pub mod ml;
pub mod pairing;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
