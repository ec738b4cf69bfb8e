//! Document clustering with K-means under two interchangeable similarity
//! measures, cosine and fuzzy (sigma-count Jaccard), plus a harness that
//! times both on the same corpus and writes per-cluster manifests.
//!
//! The pipeline runs in this order:
//!
//! 1. [`corpus_io`] loads plain-text files from a directory tree.
//! 2. [`preprocess`] filters, tokenizes, removes stopwords and stems.
//! 3. [`vectorize`] prunes the vocabulary by document frequency and builds
//!    unit-length log-tf · log-idf vectors.
//! 4. [`kmeans`] clusters the vectors under a [`similarity::MeasureKind`].
//! 5. [`report`] times the runs, writes manifests and renders the comparison.
//!
//! [`synth`] generates labelled corpora for testing and benchmarking.

pub mod cli;
pub mod corpus_io;
pub mod error;
pub mod kmeans;
pub mod preprocess;
pub mod report;
pub mod similarity;
pub mod synth;
pub mod vectorize;

pub use error::{Error, Result};
