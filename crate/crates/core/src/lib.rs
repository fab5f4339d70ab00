//! Active learning for binary image segmentation.
//!
//! The crate runs the full query → annotate → train → evaluate loop with a
//! built-in miniature encoder-decoder, eleven query strategies (entropy,
//! PCA/UMAP representativeness, their hybrid compositions, random and
//! core-set), seven segmentation metrics and one-sided significance tests.
//!
//! Module map:
//!
//! * [`corpus`]: samples, manifests on disk, synthetic data, pool bookkeeping
//! * [`learner`]: encoder-decoder, losses, Adam, gradient checking, checkpoints
//! * [`reduce`]: PCA and UMAP
//! * [`cluster`]: k-means and centroid-nearest selection
//! * [`strategies`]: acquisition functions
//! * [`metrics`]: overlap and surface-distance metrics
//! * [`stats`]: paired/Welch t-tests and the Wilcoxon signed-rank test
//! * [`harness`]: experiment driver, learning curves and comparison tables
//! * [`cli`]: the `alseg` command-line front end

pub mod cli;
pub mod cluster;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod reduce;
pub mod rng;
pub mod stats;
pub mod strategies;

pub use error::{Error, Result};
