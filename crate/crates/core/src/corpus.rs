//! Text data model and corpus file formats.
//!
//! A [`Sentence`] is a list of [`TaggedToken`]s, each carrying a language
//! label, an optional POS tag and a transliteration flag. Every pipeline
//! stage consumes and produces sentences in this form.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use unicode_normalization::{is_nfc, UnicodeNormalization};

use crate::error::{Error, Result};
use crate::io::read_lines;

pub const DANDA: char = '\u{0964}';
pub const NEUTRAL_TAG: &str = "O";

/// Two-letter lowercase ISO 639-1 code.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LangCode([u8; 2]);

impl LangCode {
    pub fn as_str(&self) -> &str {
        // constructed only from ASCII lowercase bytes
        std::str::from_utf8(&self.0).expect("ascii")
    }
}

impl FromStr for LangCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.as_bytes() {
            [a, b] if a.is_ascii_lowercase() && b.is_ascii_lowercase() => Ok(LangCode([*a, *b])),
            _ => Err(Error::InvalidLangCode(s.to_owned())),
        }
    }
}

impl fmt::Display for LangCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for LangCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_str())
    }
}

/// Language role of a token within a code-mixed corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LangTag {
    Matrix(LangCode),
    Embedded(LangCode),
    Neutral,
}

impl LangTag {
    pub fn is_neutral(&self) -> bool {
        matches!(self, LangTag::Neutral)
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self, LangTag::Matrix(_))
    }

    /// The sidecar spelling: the ISO code, or `O` for neutral tokens.
    pub fn label(&self) -> &str {
        match self {
            LangTag::Matrix(c) | LangTag::Embedded(c) => c.as_str(),
            LangTag::Neutral => NEUTRAL_TAG,
        }
    }
}

/// The matrix/embedded language codes of one corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LanguagePair {
    matrix: LangCode,
    embedded: LangCode,
}

impl LanguagePair {
    pub fn new(matrix: &str, embedded: &str) -> Result<Self> {
        let matrix: LangCode = matrix.parse()?;
        let embedded: LangCode = embedded.parse()?;
        if matrix == embedded {
            return Err(Error::InvalidArgument(format!(
                "matrix and embedded languages must differ (both {matrix})"
            )));
        }
        Ok(LanguagePair { matrix, embedded })
    }

    pub fn matrix(&self) -> LangTag {
        LangTag::Matrix(self.matrix)
    }

    pub fn embedded(&self) -> LangTag {
        LangTag::Embedded(self.embedded)
    }

    /// Resolve a sidecar label against this pair.
    pub fn parse_tag(&self, label: &str) -> Option<LangTag> {
        if label == NEUTRAL_TAG {
            Some(LangTag::Neutral)
        } else if label == self.matrix.as_str() {
            Some(self.matrix())
        } else if label == self.embedded.as_str() {
            Some(self.embedded())
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaggedToken {
    surface: String,
    lang: LangTag,
    pos: Option<String>,
    transliterated: bool,
}

impl TaggedToken {
    /// Build a token from an already normalized surface. Fails if the
    /// surface is empty, contains whitespace, or is not NFC.
    pub fn new(surface: impl Into<String>, lang: LangTag) -> Result<Self> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(Error::InvalidToken {
                surface,
                reason: "empty surface",
            });
        }
        if surface.chars().any(char::is_whitespace) {
            return Err(Error::InvalidToken {
                surface,
                reason: "surface contains whitespace",
            });
        }
        if !is_nfc(&surface) {
            return Err(Error::InvalidToken {
                surface,
                reason: "surface is not NFC",
            });
        }
        Ok(TaggedToken {
            surface,
            lang,
            pos: None,
            transliterated: false,
        })
    }

    pub fn with_pos(mut self, pos: impl Into<String>) -> Self {
        self.pos = Some(pos.into());
        self
    }

    /// Mark the token as a romanization of a matrix-language word.
    pub fn into_transliterated(mut self, romanized: impl Into<String>) -> Result<Self> {
        if !self.lang.is_matrix() {
            return Err(Error::InvalidToken {
                surface: self.surface,
                reason: "only matrix-language tokens can be transliterated",
            });
        }
        let fresh = TaggedToken::new(romanized, self.lang)?;
        self.surface = fresh.surface;
        self.transliterated = true;
        Ok(self)
    }

    /// Same token with a different surface (tags and flags kept).
    pub fn with_surface(&self, surface: impl Into<String>) -> Result<Self> {
        let fresh = TaggedToken::new(surface, self.lang)?;
        Ok(TaggedToken {
            surface: fresh.surface,
            ..self.clone()
        })
    }

    pub(crate) fn set_lang(&mut self, lang: LangTag) {
        self.lang = lang;
        if !lang.is_matrix() {
            self.transliterated = false;
        }
    }

    pub(crate) fn set_transliterated(&mut self, value: bool) {
        self.transliterated = value && self.lang.is_matrix();
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn lang(&self) -> LangTag {
        self.lang
    }

    pub fn pos(&self) -> Option<&str> {
        self.pos.as_deref()
    }

    pub fn transliterated(&self) -> bool {
        self.transliterated
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub id: usize,
    pub tokens: Vec<TaggedToken>,
}

impl Sentence {
    pub fn new(id: usize, tokens: Vec<TaggedToken>) -> Self {
        Sentence { id, tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(TaggedToken::surface)
    }

    /// Space-joined surfaces.
    pub fn text(&self) -> String {
        self.surfaces().collect::<Vec<_>>().join(" ")
    }

    /// Space-joined sidecar labels.
    pub fn lang_labels(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.lang().label().to_owned())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Replace every token's language tag from a sidecar line.
    pub fn apply_lang_labels(&mut self, line: &str, langs: &LanguagePair) -> std::result::Result<(), String> {
        let labels: Vec<&str> = line.split_whitespace().collect();
        if labels.len() != self.tokens.len() {
            return Err(format!(
                "{} language tags for {} tokens",
                labels.len(),
                self.tokens.len()
            ));
        }
        for (tok, label) in self.tokens.iter_mut().zip(labels) {
            let tag = langs
                .parse_tag(label)
                .ok_or_else(|| format!("unknown language tag {label:?}"))?;
            tok.set_lang(tag);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelPair {
    pub id: usize,
    pub source: Sentence,
    pub target: Sentence,
}

impl ParallelPair {
    pub fn new(source: Sentence, target: Sentence) -> Result<Self> {
        if source.id != target.id {
            return Err(Error::InvalidArgument(format!(
                "pair ids differ: source {} target {}",
                source.id, target.id
            )));
        }
        Ok(ParallelPair {
            id: source.id,
            source,
            target,
        })
    }

    /// The same pair with source and target exchanged.
    pub fn swapped(&self) -> ParallelPair {
        ParallelPair {
            id: self.id,
            source: self.target.clone(),
            target: self.source.clone(),
        }
    }
}

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || c == DANDA
}

/// NFC-normalize a line and split it into tokens. Whitespace separates
/// tokens; every punctuation character becomes its own neutral token.
pub fn normalize_and_tokenize(raw_line: &str, lang: LangTag) -> Vec<TaggedToken> {
    let normalized: String = raw_line.nfc().collect();
    let mut tokens = Vec::new();
    let mut push = |s: &str, tag: LangTag| {
        let piece: String = s.nfc().collect();
        tokens.push(TaggedToken::new(piece, tag).expect("non-empty, whitespace-free, NFC"));
    };
    for chunk in normalized.split_whitespace() {
        let mut start = 0;
        for (i, c) in chunk.char_indices() {
            if is_punctuation(c) {
                if start < i {
                    push(&chunk[start..i], lang);
                }
                push(&chunk[i..i + c.len_utf8()], LangTag::Neutral);
                start = i + c.len_utf8();
            }
        }
        if start < chunk.len() {
            push(&chunk[start..], lang);
        }
    }
    tokens
}

pub fn sentence_from_line(id: usize, raw_line: &str, lang: LangTag) -> Sentence {
    Sentence::new(id, normalize_and_tokenize(raw_line, lang))
}

/// Load a plain-text file as sentences, one per line, ids 0..n-1.
pub fn load_plain(path: &Path, lang: LangTag) -> Result<Vec<Sentence>> {
    Ok(read_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, line)| sentence_from_line(i, line, lang))
        .collect())
}

/// Zip two line-aligned plain-text files into parallel pairs.
pub fn load_parallel(
    src_path: &Path,
    tgt_path: &Path,
    langs: &LanguagePair,
) -> Result<Vec<ParallelPair>> {
    let src = load_plain(src_path, langs.matrix())?;
    let tgt = load_plain(tgt_path, langs.embedded())?;
    zip_pairs(src, src_path, tgt, tgt_path)
}

/// Pair up already-loaded sentence lists, checking their lengths.
pub fn zip_pairs(
    src: Vec<Sentence>,
    src_path: &Path,
    tgt: Vec<Sentence>,
    tgt_path: &Path,
) -> Result<Vec<ParallelPair>> {
    if src.len() != tgt.len() {
        return Err(Error::LineCountMismatch {
            src_path: src_path.to_path_buf(),
            src_lines: src.len(),
            tgt_path: tgt_path.to_path_buf(),
            tgt_lines: tgt.len(),
        });
    }
    src.into_iter()
        .zip(tgt)
        .enumerate()
        .map(|(id, (mut s, mut t))| {
            s.id = id;
            t.id = id;
            ParallelPair::new(s, t)
        })
        .collect()
}

/// Load POS-tagged TSV: `token<TAB>POS` rows, blank line between sentences.
pub fn load_tagged(path: &Path, lang: LangTag) -> Result<Vec<Sentence>> {
    let lines = read_lines(path)?;
    let mut sentences = Vec::new();
    let mut current: Vec<TaggedToken> = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(Sentence::new(sentences.len(), std::mem::take(&mut current)));
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected 2 tab-separated columns, found {}", cols.len()),
            ));
        }
        let surface: String = cols[0].nfc().collect();
        let tag = if surface.chars().all(is_punctuation) {
            LangTag::Neutral
        } else {
            lang
        };
        let token = TaggedToken::new(surface, tag)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?
            .with_pos(cols[1]);
        current.push(token);
    }
    if !current.is_empty() {
        sentences.push(Sentence::new(sentences.len(), current));
    }
    Ok(sentences)
}

pub fn write_tagged(w: &mut dyn Write, sentences: &[Sentence]) -> Result<()> {
    for s in sentences {
        for (index, tok) in s.tokens.iter().enumerate() {
            let pos = tok.pos().ok_or(Error::MissingPos {
                sentence: s.id,
                index,
            })?;
            writeln!(w, "{}\t{}", tok.surface(), pos).map_err(|e| Error::io("<tagged>", e))?;
        }
        writeln!(w).map_err(|e| Error::io("<tagged>", e))?;
    }
    Ok(())
}

pub fn write_plain(w: &mut dyn Write, sentences: &[Sentence]) -> std::io::Result<()> {
    for s in sentences {
        writeln!(w, "{}", s.text())?;
    }
    Ok(())
}

pub fn write_lang_tags(w: &mut dyn Write, sentences: &[Sentence]) -> std::io::Result<()> {
    for s in sentences {
        writeln!(w, "{}", s.lang_labels())?;
    }
    Ok(())
}

/// Apply a language-tag sidecar file to `sentences` in order.
pub fn read_lang_tags(path: &Path, sentences: &mut [Sentence], langs: &LanguagePair) -> Result<()> {
    let lines = read_lines(path)?;
    if lines.len() != sentences.len() {
        return Err(Error::parse(
            path,
            lines.len().min(sentences.len()) + 1,
            format!(
                "{} tag lines for {} sentences",
                lines.len(),
                sentences.len()
            ),
        ));
    }
    for (i, (line, s)) in lines.iter().zip(sentences.iter_mut()).enumerate() {
        s.apply_lang_labels(line, langs)
            .map_err(|m| Error::parse(path, i + 1, m))?;
    }
    Ok(())
}
