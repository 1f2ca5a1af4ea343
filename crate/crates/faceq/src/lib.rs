//! faceq: a face image quality toolkit.
//!
//! Scores image quality with a two-level learning-to-rank model,
//! partitions datasets into low/middle/high quality sets, applies
//! threshold-selected enhancement operators (Weber-face photometric
//! normalization, Wiener deblurring, externally supplied images), and
//! measures the effect on gallery/probe face recognition via CMC curves.
//!
//! Start with the runnable examples (`cargo run -p faceq --example
//! gen_corpus`, then `quality_measures`, `cmc_evaluation`, ...) or the
//! `faceq` binary for batch work over manifest CSVs.

// `!(x > 0.0)` style checks are deliberate: they reject NaN along with
// out-of-range values in one comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod rng;

pub mod raster;

pub mod geometry;
pub mod manifest;
pub mod measures;

pub mod enhance;
pub mod features;
pub mod fiqa;
pub mod eval;
pub mod synthcorpus;
pub mod config;
pub mod pipeline;

pub use error::{Error, Result};
