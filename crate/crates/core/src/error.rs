use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: invalid UTF-8", path.display())]
    Decode { path: PathBuf, line: usize },

    #[error(
        "line count mismatch: {} has {src_lines} lines but {} has {tgt_lines}",
        src_path.display(),
        tgt_path.display()
    )]
    LineCountMismatch {
        src_path: PathBuf,
        src_lines: usize,
        tgt_path: PathBuf,
        tgt_lines: usize,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid token {surface:?}: {reason}")]
    InvalidToken { surface: String, reason: &'static str },

    #[error("invalid language code {0:?}")]
    InvalidLangCode(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sentence {sentence}: token {index} has no POS tag")]
    MissingPos { sentence: usize, index: usize },

    #[error("sentence {sentence}: source index {index} has no substitution entry")]
    MissingSubstitution { sentence: usize, index: usize },

    #[error("sentence {sentence}: a code-mixed variant must switch at least one word")]
    EmptySubset { sentence: usize },

    #[error("perplexity threshold set but no fluency scorer supplied")]
    MissingScorer,

    #[error("no external score for sentence {id} variant {variant}")]
    MissingScore { id: usize, variant: usize },

    #[error("direction {name}: {src_lines} source lines vs {tgt_lines} target lines")]
    MisalignedDirection {
        name: String,
        src_lines: usize,
        tgt_lines: usize,
    },

    #[error("cannot sample {k} items from a corpus of {n}")]
    SampleTooLarge { k: usize, n: usize },

    #[error("recipe {recipe} needs corpus {corpus:?}, which is not configured")]
    MissingCorpus { recipe: String, corpus: String },

    #[error("language model file: {0}")]
    LmFormat(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
