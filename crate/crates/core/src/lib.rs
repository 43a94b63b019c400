//! Representative selection on attributed graphs.
//!
//! The crate trains a single-layer GCN encoder under the DGI contrastive
//! objective jointly with a set of learnable representative embeddings, then
//! reads k representative nodes off the trained geometry. Around that core it
//! provides classical selector baselines (random, degree, k-means, k-medoids,
//! farthest-first, facility-location coverage), a downstream two-layer GCN
//! evaluation harness with accuracy / label-coverage / NMI / significance
//! reporting, synthetic attributed-graph generators, and an exactly solvable
//! "fit or not" label-inference lab for measuring how far heuristic selectors
//! fall short of the optimal representative set.
//!
//! Everything is deterministic given (input, config, seed); training runs are
//! bitwise reproducible in f64 single-threaded mode.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod eval;
pub mod fon;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod reps;
pub mod synthetic;

pub use error::{Error, Result};
