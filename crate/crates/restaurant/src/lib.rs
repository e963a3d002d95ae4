//! File formats, corpus handling and benchmarking around `restaurant-core`.

pub mod bench;
pub mod corpus;
pub mod report;

use std::time::{Duration, Instant};

use restaurant_core::Budget;

pub use corpus::{load_corpus, parse_corpus, run_entry, CorpusEntry, CorpusError, Distribution, RunResult, RunVerdict};

/// Environment variable naming the default corpus file.
pub const CORPUS_ENV: &str = "RESTAURANT_CORPUS";

/// The corpus shipped with the crate.
pub fn bundled_corpus_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/corpus.xml")
}

/// `$RESTAURANT_CORPUS` if set, else the bundled corpus.
pub fn default_corpus_path() -> std::path::PathBuf {
    std::env::var_os(CORPUS_ENV)
        .map(Into::into)
        .unwrap_or_else(bundled_corpus_path)
}

/// A wall-clock budget.
#[derive(Clone, Copy, Debug)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn after(d: Duration) -> Self {
        Deadline(Instant::now().checked_add(d))
    }

    pub fn never() -> Self {
        Deadline(None)
    }
}

impl Budget for Deadline {
    fn exhausted(&self) -> bool {
        self.0.is_some_and(|t| Instant::now() >= t)
    }
}
