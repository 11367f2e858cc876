//! Word alignment: lexical translation tables trained by EM, Viterbi
//! links, intersection symmetrization and per-sentence substitution tables.

mod em;
mod format;
mod substitution;

use std::collections::{BTreeSet, HashMap};

pub use em::{train, train_diagonal, train_ibm1, TrainConfig, Training};
pub use format::{read_pharaoh, read_substitutions, write_pharaoh, write_substitutions, write_table};
pub use substitution::{extract_substitution_table, Substitution, SubstitutionTable};

use crate::corpus::ParallelPair;

pub const NULL_WORD: &str = "<null>";
pub const DEFAULT_ITERATIONS: usize = 5;
pub const DEFAULT_TENSION: f64 = 4.0;
pub(crate) const PRUNE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Default)]
pub(crate) struct Vocab {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub(crate) fn intern(&mut self, w: &str) -> u32 {
        if let Some(&id) = self.index.get(w) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(w.to_owned());
        self.index.insert(w.to_owned(), id);
        id
    }

    pub(crate) fn get(&self, w: &str) -> Option<u32> {
        self.index.get(w).copied()
    }

    pub(crate) fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub(crate) fn len(&self) -> usize {
        self.words.len()
    }
}

/// Sparse distribution t(·|f) for one source word, sorted by target id.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Row {
    pub(crate) targets: Vec<u32>,
    pub(crate) probs: Vec<f64>,
}

impl Row {
    pub(crate) fn slot(&self, e: u32) -> Option<usize> {
        self.targets.binary_search(&e).ok()
    }

    fn prob(&self, e: u32) -> f64 {
        self.slot(e).map_or(0.0, |k| self.probs[k])
    }
}

/// Lexical translation probabilities t(target | source). Source id 0 is the
/// NULL word.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTable {
    pub(crate) source: Vocab,
    pub(crate) target: Vocab,
    pub(crate) rows: Vec<Row>,
}

impl PartialEq for Vocab {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words
    }
}

impl TranslationTable {
    /// t(target | source); zero for unseen or out-of-vocabulary words.
    pub fn prob(&self, source: &str, target: &str) -> f64 {
        match (self.source.get(source), self.target.get(target)) {
            (Some(f), Some(e)) if f != 0 => self.rows[f as usize].prob(e),
            _ => 0.0,
        }
    }

    /// t(target | NULL).
    pub fn null_prob(&self, target: &str) -> f64 {
        self.target.get(target).map_or(0.0, |e| self.rows[0].prob(e))
    }

    /// Σ_e t(e|f) for a source word (`None` for NULL).
    pub fn row_sum(&self, source: Option<&str>) -> Option<f64> {
        let f = match source {
            None => 0,
            Some(w) => self.source.get(w).filter(|&f| f != 0)?,
        };
        Some(self.rows[f as usize].probs.iter().sum())
    }

    /// Source words in the table, excluding NULL.
    pub fn source_words(&self) -> impl Iterator<Item = &str> {
        self.source.words.iter().skip(1).map(String::as_str)
    }

    pub fn entry_count(&self) -> usize {
        self.rows.iter().map(|r| r.targets.len()).sum()
    }

    pub(crate) fn lookup(&self, f: Option<u32>, e: Option<u32>) -> f64 {
        match (f, e) {
            (Some(f), Some(e)) => self.rows[f as usize].prob(e),
            _ => 0.0,
        }
    }
}

/// Unnormalized diagonal alignment prior. NULL (`None`) always weighs 1,
/// so the prior becomes uniform as tension goes to zero.
pub(crate) fn diagonal_weight(tension: Option<f64>, i: Option<usize>, j: usize, m: usize, n: usize) -> f64 {
    match (tension, i) {
        (Some(t), Some(i)) => {
            let d = ((i + 1) as f64 / m as f64 - (j + 1) as f64 / n as f64).abs();
            (-t * d).exp()
        }
        _ => 1.0,
    }
}

/// Word alignment links (source index, target index) for one pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlignmentLinks {
    links: BTreeSet<(usize, usize)>,
}

impl AlignmentLinks {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, i: usize, j: usize) -> bool {
        self.links.insert((i, j))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.links.contains(&(i, j))
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links.iter().copied()
    }

    /// Swap source and target roles.
    pub fn transpose(&self) -> Self {
        self.iter().map(|(i, j)| (j, i)).collect()
    }

    /// True when every link lies inside a `src_len × tgt_len` grid.
    pub fn fits(&self, src_len: usize, tgt_len: usize) -> bool {
        self.iter().all(|(i, j)| i < src_len && j < tgt_len)
    }
}

impl FromIterator<(usize, usize)> for AlignmentLinks {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        AlignmentLinks {
            links: iter.into_iter().collect(),
        }
    }
}

/// Link each target word to its most probable source word. NULL wins ties,
/// real positions tie-break to the smallest index, and NULL links are
/// dropped.
pub fn viterbi_align(table: &TranslationTable, pair: &ParallelPair, tension: Option<f64>) -> AlignmentLinks {
    let src: Vec<Option<u32>> = pair.source.surfaces().map(|w| table.source.get(w)).collect();
    let m = src.len();
    let n = pair.target.len();
    let mut links = AlignmentLinks::new();
    for (j, e) in pair.target.surfaces().enumerate() {
        let e = table.target.get(e);
        let mut best = table.lookup(Some(0), e) * diagonal_weight(tension, None, j, m, n);
        let mut best_i = None;
        for (i, &f) in src.iter().enumerate() {
            let score = table.lookup(f.filter(|&f| f != 0), e) * diagonal_weight(tension, Some(i), j, m, n);
            if score > best {
                best = score;
                best_i = Some(i);
            }
        }
        if let Some(i) = best_i {
            links.insert(i, j);
        }
    }
    links
}

/// Intersection of forward links and (already transposed) backward links.
pub fn symmetrize(forward: &AlignmentLinks, backward: &AlignmentLinks) -> AlignmentLinks {
    forward.links.intersection(&backward.links).copied().collect()
}

/// Train both directions and return intersected links for every pair.
pub fn align_corpus(pairs: &[ParallelPair], config: &TrainConfig) -> crate::Result<(Training, Training, Vec<AlignmentLinks>)> {
    let forward = train(pairs, config)?;
    let swapped: Vec<ParallelPair> = pairs.iter().map(ParallelPair::swapped).collect();
    let backward = train(&swapped, config)?;
    let links = pairs
        .iter()
        .zip(&swapped)
        .map(|(p, s)| {
            let f = viterbi_align(&forward.table, p, config.tension);
            let b = viterbi_align(&backward.table, s, config.tension).transpose();
            symmetrize(&f, &b)
        })
        .collect();
    Ok((forward, backward, links))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{sentence_from_line, LanguagePair};

    pub(crate) fn toy_pairs() -> Vec<ParallelPair> {
        let langs = LanguagePair::new("de", "en").unwrap();
        [("das haus", "the house"), ("das buch", "the book"), ("ein buch", "a book")]
            .iter()
            .enumerate()
            .map(|(id, (s, t))| {
                ParallelPair::new(
                    sentence_from_line(id, s, langs.matrix()),
                    sentence_from_line(id, t, langs.embedded()),
                )
                .unwrap()
            })
            .collect()
    }

    fn pair(s: &str, t: &str) -> ParallelPair {
        let langs = LanguagePair::new("de", "en").unwrap();
        ParallelPair::new(
            sentence_from_line(0, s, langs.matrix()),
            sentence_from_line(0, t, langs.embedded()),
        )
        .unwrap()
    }

    #[test]
    fn viterbi_on_toy_table() {
        let table = train_ibm1(&toy_pairs(), 10).unwrap();
        let links = viterbi_align(&table, &toy_pairs()[0], None);
        assert_eq!(links.iter().collect::<Vec<_>>(), [(0, 0), (1, 1)]);
    }

    #[test]
    fn viterbi_oov_source_links_nothing() {
        let table = train_ibm1(&toy_pairs(), 5).unwrap();
        let links = viterbi_align(&table, &pair("xx yy", "the house"), None);
        assert!(links.is_empty());
    }

    #[test]
    fn viterbi_tie_goes_to_smaller_index() {
        // "haus" twice: identical scores, the first occurrence wins
        let table = train_ibm1(&toy_pairs(), 5).unwrap();
        let links = viterbi_align(&table, &pair("haus haus", "house"), None);
        assert_eq!(links.iter().collect::<Vec<_>>(), [(0, 0)]);
    }

    #[test]
    fn symmetrize_is_intersection() {
        let f: AlignmentLinks = [(0, 0), (1, 1)].into_iter().collect();
        let b: AlignmentLinks = [(0, 0)].into_iter().collect();
        assert_eq!(symmetrize(&f, &b), b);
        assert_eq!(symmetrize(&f, &f), f);
        let d: AlignmentLinks = [(2, 2)].into_iter().collect();
        assert!(symmetrize(&f, &d).is_empty());
    }

    #[test]
    fn align_corpus_links_toy_words() {
        let cfg = TrainConfig {
            iterations: 10,
            tension: None,
            threads: 1,
        };
        let (_, _, links) = align_corpus(&toy_pairs(), &cfg).unwrap();
        assert!(links[0].contains(0, 0) && links[0].contains(1, 1));
        assert!(links[2].contains(1, 1));
    }

    #[test]
    fn diagonal_weight_limits() {
        assert_eq!(diagonal_weight(None, Some(0), 3, 4, 4), 1.0);
        assert_eq!(diagonal_weight(Some(4.0), None, 3, 4, 4), 1.0);
        assert_eq!(diagonal_weight(Some(4.0), Some(1), 1, 4, 4), 1.0);
        assert!(diagonal_weight(Some(4.0), Some(0), 3, 4, 4) < 0.1);
    }
}
