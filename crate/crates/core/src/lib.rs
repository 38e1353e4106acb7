//! Segmentation, tracking, retrieval and evaluation of out-of-distribution
//! (OOD) objects in video sequences.

pub mod cluster_metrics;
pub mod error;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod retrieval;
pub mod meta;
pub mod metrics;
pub mod segmentation;
pub mod synth;
pub mod tracker;
pub mod tracking_eval;

pub use error::{Error, ErrorClass, Result};
pub use model::*;
