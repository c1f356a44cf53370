//! Direct likelihood-ratio estimation over discrete elements (word bigrams),
//! plus the evaluation pipeline used to compare estimators on a
//! context-prediction task.
//!
//! The crate is organized around a small data flow:
//!
//! 1. [`corpus`] — parse tagged corpora, extract bigrams and entity left
//!    contexts, or synthesize corpora with planted contexts.
//! 2. [`counts`] — frequency tables for the denominator/numerator samples,
//!    with threshold pruning that preserves totals.
//! 3. [`estimators`] — the ratio estimators themselves (plain ratio of
//!    relative frequencies, hard frequency threshold, L2-regularized, and
//!    the L1-regularized soft-threshold form), plus a brute-force
//!    optimization oracle used to cross-check the closed form.
//! 4. [`eval`] — ranking, rank–recall curves, AUC, and grid tuning.
//! 5. [`bench`] — wall-clock and storage-footprint measurement of the
//!    store + estimate phases.
//! 6. [`plot`] — self-contained SVG rendering of rank–recall curves.
//!
//! The `lrtk` binary (see [`cli`]) exposes each stage as a subcommand.

#![forbid(unsafe_code)]

use std::io;
use std::path::PathBuf;

pub mod bench;
pub mod cli;
pub mod corpus;
pub mod counts;
pub mod estimators;
pub mod eval;
pub mod plot;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Underlying I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A malformed line in an input file (1-based line number).
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// Inconsistent or out-of-range configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A pruned table cannot serve an estimator whose threshold is below
    /// the prune threshold: the required low-frequency counts are gone.
    #[error(
        "table pruned at threshold {pruned} cannot serve an estimator with threshold {required}; \
         counts at or below {pruned} were discarded"
    )]
    PrunedBeyondSpec { pruned: u64, required: u64 },

    /// The optimization oracle is a brute-force checker and refuses large
    /// element sets.
    #[error("optimization instance has {got} elements, oracle limit is {max}")]
    InstanceTooLarge { got: usize, max: usize },

    /// Recall is undefined against an empty reference set.
    #[error("reference set is empty; recall is undefined")]
    EmptyReference,
}

impl Error {
    /// Attach a path to a parse error produced while reading `path`.
    #[must_use]
    pub fn in_file(self, path: &std::path::Path) -> Error {
        match self {
            Error::Parse { line, reason } => Error::Parse {
                line,
                reason: format!("{}: {reason}", path.display()),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: &std::path::Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}
