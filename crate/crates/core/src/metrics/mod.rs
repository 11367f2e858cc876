//! Code-mixing metrics, corpus BLEU and corpus statistics.

mod bleu;
mod stats;

pub use bleu::{bleu, BleuScore};
pub use stats::{corpus_stats, write_stats, CorpusStats};

use crate::corpus::{LangTag, TaggedToken};

fn language_counts(tokens: &[TaggedToken]) -> Vec<(LangTag, usize)> {
    let mut counts: Vec<(LangTag, usize)> = Vec::new();
    for t in tokens.iter().filter(|t| !t.lang().is_neutral()) {
        match counts.iter_mut().find(|(l, _)| *l == t.lang()) {
            Some((_, c)) => *c += 1,
            None => counts.push((t.lang(), 1)),
        }
    }
    counts
}

/// Code-Mixing Index (Gambäck & Das): `100 · (1 − w_max / (n − u))`, where
/// `u` counts neutral tokens and `w_max` is the size of the largest
/// language. Zero for sentences with no language-bearing tokens.
pub fn cmi(tokens: &[TaggedToken]) -> f64 {
    let counts = language_counts(tokens);
    let tagged: usize = counts.iter().map(|(_, c)| c).sum();
    if tagged == 0 {
        return 0.0;
    }
    let w_max = counts.iter().map(|(_, c)| *c).max().unwrap_or(0);
    100.0 * (1.0 - w_max as f64 / tagged as f64)
}

/// Switch Point Fraction: language changes between consecutive
/// non-neutral tokens, over the number of such boundaries.
pub fn spf(tokens: &[TaggedToken]) -> f64 {
    let langs: Vec<LangTag> = tokens
        .iter()
        .map(TaggedToken::lang)
        .filter(|l| !l.is_neutral())
        .collect();
    if langs.len() < 2 {
        return 0.0;
    }
    let switches = langs.windows(2).filter(|w| w[0] != w[1]).count();
    switches as f64 / (langs.len() - 1) as f64
}
