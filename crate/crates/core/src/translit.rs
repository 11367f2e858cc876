//! Rule-table romanization of Devanagari tokens.

use std::collections::HashMap;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::generate::CmRecord;
use crate::io::read_lines;

/// The shipped Devanagari table.
pub const DEFAULT_TABLE: &str = include_str!("../data/devanagari.tsv");
/// Bumped whenever the shipped table changes.
pub const DEFAULT_TABLE_VERSION: &str = "devanagari-1";

const VIRAMA: char = '\u{094D}';
const NUKTA: char = '\u{093C}';

pub fn is_devanagari(c: char) -> bool {
    ('\u{0900}'..='\u{097F}').contains(&c)
}

fn is_consonant(c: char) -> bool {
    ('\u{0915}'..='\u{0939}').contains(&c) || ('\u{0958}'..='\u{095F}').contains(&c) || c == NUKTA
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Rule {
    pattern: Vec<char>,
    output: String,
    /// Bare consonant whose output carries the inherent vowel.
    schwa: bool,
    conjunct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslitScheme {
    rules: Vec<Rule>,
    /// Rule indices by first pattern character, longest pattern first, then
    /// file order.
    by_first: HashMap<char, Vec<usize>>,
    schwa_deletion: bool,
}

impl TranslitScheme {
    /// Parse `pattern<TAB>replacement` rows. `#` starts a comment line.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut rules: Vec<Rule> = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let lineno = n + 1;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: String| Error::parse(origin, lineno, m);
            let (pattern, output) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected pattern<TAB>replacement".into()))?;
            if output.contains('\t') {
                return Err(bad("too many columns".into()));
            }
            let pattern: String = pattern.nfc().collect();
            if pattern.is_empty() {
                return Err(bad("empty pattern".into()));
            }
            if output.is_empty() || !output.bytes().all(|b| b.is_ascii_alphabetic()) {
                return Err(bad(format!("replacement {output:?} is not ASCII letters")));
            }
            if let Some(first) = seen.insert(pattern.clone(), lineno) {
                return Err(bad(format!("duplicate pattern {pattern:?} (first on line {first})")));
            }
            let chars: Vec<char> = pattern.chars().collect();
            let last = *chars.last().unwrap();
            rules.push(Rule {
                schwa: is_consonant(last) && output.ends_with('a'),
                conjunct: last == VIRAMA,
                pattern: chars,
                output: output.to_owned(),
            });
        }
        let mut by_first: HashMap<char, Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            by_first.entry(r.pattern[0]).or_default().push(i);
        }
        for list in by_first.values_mut() {
            // stable: equal lengths keep file order
            list.sort_by_key(|&i| std::cmp::Reverse(rules[i].pattern.len()));
        }
        Ok(TranslitScheme {
            rules,
            by_first,
            schwa_deletion: true,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_lines(path)?.join("\n");
        Self::parse(&text, path)
    }

    /// The shipped table with terminal schwa deletion on.
    pub fn devanagari() -> Self {
        Self::parse(DEFAULT_TABLE, Path::new("<builtin devanagari.tsv>")).expect("shipped table is valid")
    }

    pub fn with_schwa_deletion(mut self, on: bool) -> Self {
        self.schwa_deletion = on;
        self
    }

    pub fn schwa_deletion(&self) -> bool {
        self.schwa_deletion
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    fn longest_match(&self, chars: &[char]) -> Option<&Rule> {
        self.by_first
            .get(&chars[0])?
            .iter()
            .map(|&i| &self.rules[i])
            .find(|r| chars.starts_with(&r.pattern))
    }

    pub fn transliterate(&self, token: &str) -> String {
        self.transliterate_counted(token).0
    }

    /// Romanized form plus the number of Devanagari code points no rule
    /// covered (those pass through unchanged).
    pub fn transliterate_counted(&self, token: &str) -> (String, usize) {
        let chars: Vec<char> = token.nfc().collect();
        let mut out = String::with_capacity(chars.len() * 2);
        let mut unknown = 0;
        // rules applied in the current Devanagari run, and the last two
        let mut run_len = 0usize;
        let mut last: Option<&Rule> = None;
        let mut before_last: Option<&Rule> = None;
        let mut i = 0;
        while i < chars.len() {
            if let Some(rule) = self.longest_match(&chars[i..]) {
                out.push_str(&rule.output);
                i += rule.pattern.len();
                run_len += 1;
                before_last = last;
                last = Some(rule);
                continue;
            }
            let c = chars[i];
            if is_devanagari(c) {
                unknown += 1;
                run_len += 1;
                before_last = last;
                last = None;
            } else {
                self.end_run(&mut out, run_len, last, before_last);
                run_len = 0;
                last = None;
                before_last = None;
            }
            out.push(c);
            i += 1;
        }
        self.end_run(&mut out, run_len, last, before_last);
        (out, unknown)
    }

    /// Drop the inherent vowel of a word-final bare consonant, except in
    /// one-letter words and after a conjunct.
    fn end_run(&self, out: &mut String, run_len: usize, last: Option<&Rule>, before_last: Option<&Rule>) {
        let Some(rule) = last else { return };
        if self.schwa_deletion && rule.schwa && run_len > 1 && !before_last.is_some_and(|r| r.conjunct) {
            out.pop();
        }
    }
}

/// Exact-token romanizations consulted before the rule table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OverrideMap {
    map: HashMap<String, String>,
    duplicates: usize,
}

impl OverrideMap {
    /// Parse `devanagari<TAB>roman` rows; a repeated key keeps its last
    /// value and is counted in [`OverrideMap::duplicates`].
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut out = OverrideMap::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.is_empty() {
                continue;
            }
            let bad = |m: &str| Error::parse(origin, n + 1, m);
            let cols: Vec<&str> = line.split('\t').collect();
            let [key, value] = cols[..] else {
                return Err(bad("expected token<TAB>romanization"));
            };
            if key.is_empty() || value.is_empty() || key.contains(' ') || value.contains(char::is_whitespace) {
                return Err(bad("empty field or embedded whitespace"));
            }
            if out.map.insert(key.nfc().collect(), value.nfc().collect()).is_some() {
                out.duplicates += 1;
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_lines(path)?.join("\n");
        Self::parse(&text, path)
    }

    pub fn get(&self, token: &str) -> Option<&str> {
        self.map.get(token).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Keys that appeared more than once in the source file.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transliterator {
    pub scheme: TranslitScheme,
    pub overrides: OverrideMap,
}

impl Default for Transliterator {
    fn default() -> Self {
        Transliterator {
            scheme: TranslitScheme::devanagari(),
            overrides: OverrideMap::default(),
        }
    }
}

/// Where each romanization came from, plus problems found.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranslitReport {
    pub tokens: usize,
    pub overridden: usize,
    pub by_rule: usize,
    pub unchanged: usize,
    pub unknown_codepoints: usize,
    /// Outputs containing anything but ASCII letters.
    pub non_letter_outputs: usize,
    pub override_duplicates: usize,
}

impl TranslitReport {
    pub fn rows(&self) -> Vec<(&'static str, usize)> {
        vec![
            ("tokens", self.tokens),
            ("overridden", self.overridden),
            ("by_rule", self.by_rule),
            ("unchanged", self.unchanged),
            ("unknown_codepoints", self.unknown_codepoints),
            ("non_letter_outputs", self.non_letter_outputs),
            ("override_duplicates", self.override_duplicates),
        ]
    }
}

impl Transliterator {
    pub fn new(scheme: TranslitScheme, overrides: OverrideMap) -> Self {
        Transliterator { scheme, overrides }
    }

    pub fn apply(&self, token: &str) -> (String, usize) {
        match self.overrides.get(token) {
            Some(v) => (v.to_owned(), 0),
            None => self.scheme.transliterate_counted(token),
        }
    }

    /// Romanize every matrix-language source token in place. Embedded and
    /// neutral tokens are untouched; tokens already marked transliterated
    /// are skipped.
    pub fn romanize_records(&self, records: &mut [CmRecord]) -> Result<TranslitReport> {
        let mut report = TranslitReport {
            override_duplicates: self.overrides.duplicates(),
            ..Default::default()
        };
        for r in records {
            for tok in r.variant.tokens.iter_mut() {
                if !tok.lang().is_matrix() || tok.transliterated() {
                    continue;
                }
                report.tokens += 1;
                let surface = tok.surface().to_owned();
                let overridden = self.overrides.get(&surface).is_some();
                let (out, unknown) = self.apply(&surface);
                report.unknown_codepoints += unknown;
                if overridden {
                    report.overridden += 1;
                } else if out == surface {
                    report.unchanged += 1;
                } else {
                    report.by_rule += 1;
                }
                if !out.bytes().all(|b| b.is_ascii_alphabetic()) {
                    report.non_letter_outputs += 1;
                }
                if out.is_ascii() {
                    *tok = tok.clone().into_transliterated(out)?;
                } else {
                    *tok = tok.with_surface(out)?;
                }
            }
        }
        Ok(report)
    }
}
