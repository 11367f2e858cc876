use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::read_lines;

/// POS tags whose words may be switched. Tags are opaque strings compared
/// exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InclusionList {
    tags: BTreeSet<String>,
}

/// Noun, adjective and quantifier tags of the IL-POSTS/BIS tagset emitted
/// by common Hindi shallow parsers.
pub const DEFAULT_TAGS: &[&str] = &["NN", "NNP", "NST", "JJ", "QF", "QC", "QO"];

impl InclusionList {
    pub fn new<I, S>(tags: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tags: BTreeSet<String> = tags.into_iter().map(Into::into).collect();
        if tags.is_empty() {
            return Err(Error::InvalidArgument("inclusion list is empty".into()));
        }
        Ok(InclusionList { tags })
    }

    /// One tag per line; `#` starts a comment.
    pub fn load(path: &Path) -> Result<Self> {
        let mut tags = Vec::new();
        for (i, line) in read_lines(path)?.iter().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.contains(char::is_whitespace) {
                return Err(Error::parse(path, i + 1, "one POS tag per line"));
            }
            tags.push(line.to_owned());
        }
        if tags.is_empty() {
            return Err(Error::parse(path, 1, "inclusion list is empty"));
        }
        Self::new(tags)
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.tags.iter().map(String::as_str)
    }
}

impl Default for InclusionList {
    fn default() -> Self {
        Self::new(DEFAULT_TAGS.iter().copied()).expect("non-empty default")
    }
}
