//! Query-likelihood document retrieval built around Polya urn document
//! models, with the classic multinomial smoothing baselines next to them.
//!
//! The crate is organized as a pipeline over an immutable inverted index:
//!
//! - [`textprep`]: tokenization, stopword removal, Porter stemming.
//! - [`index`]: index construction, collection statistics, on-disk format.
//! - [`ranking`]: the six query-likelihood scoring functions and retrieval.
//! - [`estimation`]: digamma, the background-mass fixed-point estimator, and
//!   derived smoothing hyperparameters.
//! - [`feedback`]: pseudo-relevance expansion models and reranking.
//! - [`evaluation`]: run/qrels interchange, AP/NDCG/recall, paired t-test,
//!   parameter sweeps.
//! - [`diagnostics`]: length-normalization checks, length-bin curves,
//!   background-distribution comparisons.
//!
//! Everything is deterministic: identical inputs produce identical outputs,
//! byte for byte, across runs and thread counts.

pub mod diagnostics;
pub mod estimation;
pub mod evaluation;
pub mod feedback;
pub mod index;
pub mod ranking;
pub mod textprep;

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of a byte string. Used for pipeline fingerprints
/// and index file checksums.
pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write;
        write!(out, "{:02x}", b).expect("writing to a String cannot fail");
    }
    out
}
