//! Kernel-based evaluation of pretrained entity embeddings.
//!
//! The toolkit judges an embedding table `φ` only through its inner-product
//! kernel `K(x, x') = ⟨φ(x), φ(x')⟩`, which is unchanged by the arbitrary
//! rotations that independent pretraining runs produce. Around that kernel it
//! provides:
//!
//! - [`embedding`]: storage, kernel, Gram tiles, arc-cosine tangent kernel, IO
//! - [`data`]: interaction logs, 5-core filtering, leave-last-out splits, labels
//! - [`sgns`]: skip-gram negative-sampling pretraining and stability analysis
//! - [`clf`]: alignment metric, mean-kernel classifier, F1, risk-bound check
//! - [`seq`]: exposure-discounted sequence embeddings and full-catalog ranking
//! - [`sim`]: exposure-biased interaction simulator with known ground truth
//! - [`harness`]: downstream comparator heads, structure and correlation studies
//! - [`report`]: the versioned JSON report
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clf;
pub mod cli;
pub mod data;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod report;
pub mod rng;
pub mod seq;
pub mod sgns;
pub mod sim;
pub mod stats;

pub use embedding::{arc_cosine_ntk, gram, kernel, random_rotation, EmbeddingTable, GramBlockSpec, GramMatrix};
pub use error::{Error, Result};
