use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corpus root {} is not a readable directory", .0.display())]
    BadRoot(PathBuf),

    #[error("empty corpus: no loadable documents under {}", .0.display())]
    EmptyCorpus(PathBuf),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("vocabulary empty; lower min_df (currently {min_df})")]
    EmptyVocabulary { min_df: usize },

    #[error("no document produced a non-empty vector")]
    NoVectors,

    #[error("cannot normalize zero vector")]
    ZeroVector,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("need {k} distinct rows for initialization but only {distinct} of {rows} rows are distinct ({duplicates} duplicates)")]
    TooFewDistinct {
        k: usize,
        rows: usize,
        distinct: usize,
        duplicates: usize,
    },

    #[error("end time {end} is before start time {start}")]
    ClockOrder { start: String, end: String },

    #[error("invalid clock time {0:?}")]
    ClockParse(String),

    #[error("{} already exists (pass --force to overwrite)", .0.display())]
    OutputExists(PathBuf),

    #[error("no ground-truth label for document {0}")]
    MissingLabel(String),

    #[error("report has no runs")]
    NoRuns,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
