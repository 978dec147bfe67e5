//! Event-aware prompt learning on continuous-time dynamic graphs.
//!
//! The crate pre-trains a temporal-attention graph encoder on link
//! prediction, then adapts it to few-shot downstream tasks by tuning only a
//! small event-aware plug-in: per-node historical events are extracted,
//! re-scaled by a learnable event prompt, weighted by exponential time decay
//! and a per-rank dynamic prompt, and added back into the node embedding.
//!
//! See the `cli` module (and the `evp` binary) for the experiment harness:
//! ingest, pretrain, evaluate, ablate, sweep-k, synth.

pub mod autodiff;
pub mod checkpoint;
pub mod cli;
pub mod downstream;
pub mod encoder;
pub mod error;
pub mod graph;
pub mod optim;
pub mod plot;
pub mod plugin;
pub mod pretrain;
pub mod report;
pub mod seeding;
pub mod synthetic;
pub mod time_encoding;

pub use error::{Error, Result};
