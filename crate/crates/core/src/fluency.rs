//! Interpolated n-gram language model used as the fluency scorer, and
//! externally supplied per-variant perplexities.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::generate::{CMVariant, FluencyScorer};
use crate::io::read_lines;

pub const MAGIC: &[u8; 5] = b"CMLM1";
pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

const UNK_ID: u32 = 0;
const BOS_ID: u32 = 1;
const EOS_ID: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct LmConfig {
    pub order: usize,
    /// Training words seen fewer times than this become `<unk>`.
    pub min_count: usize,
    /// Interpolation weights, lowest order first. `None` picks
    /// (0.5, 0.3, 0.2) for order 3 and uniform weights otherwise.
    pub weights: Option<Vec<f64>>,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            order: 3,
            min_count: 2,
            weights: None,
        }
    }
}

impl LmConfig {
    pub fn order(order: usize) -> Self {
        LmConfig {
            order,
            ..Default::default()
        }
    }

    fn resolved_weights(&self) -> Result<Vec<f64>> {
        let w = match &self.weights {
            Some(w) => w.clone(),
            None if self.order == 3 => vec![0.5, 0.3, 0.2],
            None => vec![1.0 / self.order as f64; self.order],
        };
        check_weights(&w, self.order)?;
        Ok(w)
    }
}

fn check_weights(w: &[f64], order: usize) -> Result<()> {
    if w.len() != order {
        return Err(Error::InvalidArgument(format!(
            "lm: {} interpolation weights for order {order}",
            w.len()
        )));
    }
    if w.iter().any(|&x| x.is_nan() || x <= 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(
            "lm: interpolation weights must be positive and sum to 1".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramLM {
    order: usize,
    weights: Vec<f64>,
    words: Vec<String>,
    ids: HashMap<String, u32>,
    /// `ngrams[k - 1]` maps a k-gram to its count.
    ngrams: Vec<HashMap<Vec<u32>, u64>>,
    /// `contexts[k - 1]` maps a (k-1)-word history to the number of k-grams
    /// that extend it.
    contexts: Vec<HashMap<Vec<u32>, u64>>,
}

impl NgramLM {
    pub fn train<S: AsRef<str>>(corpus: &[Vec<S>], config: &LmConfig) -> Result<Self> {
        if config.order == 0 {
            return Err(Error::InvalidArgument("lm: order must be at least 1".into()));
        }
        let weights = config.resolved_weights()?;
        let sentences: Vec<&Vec<S>> = corpus.iter().filter(|s| !s.is_empty()).collect();
        if sentences.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for s in &sentences {
            for w in s.iter() {
                *freq.entry(w.as_ref()).or_default() += 1;
            }
        }
        let mut kept: Vec<&str> = freq
            .iter()
            .filter(|(w, &c)| c >= config.min_count && !matches!(**w, UNK | BOS | EOS))
            .map(|(w, _)| *w)
            .collect();
        kept.sort_unstable();
        let words: Vec<String> = [UNK, BOS, EOS].into_iter().chain(kept).map(str::to_owned).collect();
        let mut lm = NgramLM::empty(config.order, weights, words);
        for s in &sentences {
            let ids = lm.encode(s.iter().map(AsRef::as_ref));
            for k in 1..=lm.order {
                // <s> is context only, never predicted
                for g in ids.windows(k).filter(|g| g[k - 1] != BOS_ID) {
                    *lm.ngrams[k - 1].entry(g.to_vec()).or_default() += 1;
                }
            }
        }
        // unknown words always keep some unigram mass
        lm.ngrams[0].entry(vec![UNK_ID]).or_insert(1);
        lm.rebuild_contexts();
        Ok(lm)
    }

    fn empty(order: usize, weights: Vec<f64>, words: Vec<String>) -> Self {
        let ids = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        NgramLM {
            order,
            weights,
            words,
            ids,
            ngrams: vec![HashMap::new(); order],
            contexts: vec![HashMap::new(); order],
        }
    }

    fn rebuild_contexts(&mut self) {
        for k in 1..=self.order {
            let mut ctx: HashMap<Vec<u32>, u64> = HashMap::new();
            for (g, &c) in &self.ngrams[k - 1] {
                *ctx.entry(g[..k - 1].to_vec()).or_default() += c;
            }
            self.contexts[k - 1] = ctx;
        }
    }

    /// `<s>`-padded ids ending in `</s>`.
    fn encode<'a>(&self, words: impl Iterator<Item = &'a str>) -> Vec<u32> {
        let mut ids = vec![BOS_ID; self.order - 1];
        ids.extend(words.map(|w| self.id(w)));
        ids.push(EOS_ID);
        ids
    }

    fn id(&self, w: &str) -> u32 {
        match self.ids.get(w) {
            Some(&i) if i > EOS_ID => i,
            _ => UNK_ID,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Known words, `<unk>` and `</s>` included, `<s>` excluded.
    pub fn vocab_size(&self) -> usize {
        self.words.len() - 1
    }

    /// Predictable symbols: every known word plus `<unk>` and `</s>`.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.words.iter().filter(|w| *w != BOS).map(String::as_str)
    }

    fn prob_ids(&self, history: &[u32], w: u32) -> f64 {
        let unigram_total = self.contexts[0][&Vec::new()] as f64;
        let mut p = *self.ngrams[0].get(&vec![w]).unwrap_or(&0) as f64 / unigram_total;
        let mut mix = self.weights[0] * p;
        for k in 2..=self.order {
            let h = &history[history.len() + 1 - k..];
            if let Some(&c) = self.contexts[k - 1].get(h) {
                let mut g = h.to_vec();
                g.push(w);
                p = *self.ngrams[k - 1].get(&g).unwrap_or(&0) as f64 / c as f64;
            }
            // an unseen history reuses the next-lower estimate
            mix += self.weights[k - 1] * p;
        }
        mix
    }

    /// P(word | history), where history holds the preceding words (older
    /// first, `<s>` allowed) and only its last order-1 entries are used.
    pub fn prob(&self, history: &[&str], word: &str) -> f64 {
        let mut h = vec![BOS_ID; (self.order - 1).saturating_sub(history.len())];
        let start = history.len().saturating_sub(self.order - 1);
        h.extend(history[start..].iter().map(|w| if *w == BOS { BOS_ID } else { self.id(w) }));
        let w = if word == EOS { EOS_ID } else { self.id(word) };
        self.prob_ids(&h, w)
    }

    /// exp of the mean negative log-probability over the words and `</s>`.
    pub fn perplexity<S: AsRef<str>>(&self, sentence: &[S]) -> Result<f64> {
        if sentence.is_empty() {
            return Err(Error::InvalidArgument("lm: perplexity of an empty sentence".into()));
        }
        let ids = self.encode(sentence.iter().map(AsRef::as_ref));
        let h = self.order - 1;
        let nll: f64 = (h..ids.len()).map(|i| -self.prob_ids(&ids[i - h..i], ids[i]).ln()).sum();
        Ok((nll / (ids.len() - h) as f64).exp())
    }

    pub fn save(&self, w: &mut dyn Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.order as u32).to_le_bytes())?;
        for x in &self.weights {
            w.write_all(&x.to_le_bytes())?;
        }
        w.write_all(&(self.words.len() as u32).to_le_bytes())?;
        for word in &self.words {
            w.write_all(&(word.len() as u32).to_le_bytes())?;
            w.write_all(word.as_bytes())?;
        }
        for table in &self.ngrams {
            let mut entries: Vec<(&Vec<u32>, &u64)> = table.iter().collect();
            entries.sort_unstable();
            w.write_all(&(entries.len() as u64).to_le_bytes())?;
            for (g, c) in entries {
                for id in g {
                    w.write_all(&id.to_le_bytes())?;
                }
                w.write_all(&c.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load(r: &mut dyn Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::LmFormat(format!("read failed: {e}")))?;
        let mut cur = Cursor { bytes: &bytes, at: 0 };
        if cur.take(MAGIC.len())? != MAGIC {
            return Err(Error::LmFormat("missing CMLM1 header".into()));
        }
        let order = cur.u32()? as usize;
        if order == 0 || order > 16 {
            return Err(Error::LmFormat(format!("implausible order {order}")));
        }
        let weights = (0..order).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        check_weights(&weights, order).map_err(|e| Error::LmFormat(e.to_string()))?;
        let n_words = cur.u32()? as usize;
        let mut words = Vec::with_capacity(n_words.min(1 << 20));
        for _ in 0..n_words {
            let len = cur.u32()? as usize;
            let s = std::str::from_utf8(cur.take(len)?).map_err(|_| Error::LmFormat("word is not UTF-8".into()))?;
            words.push(s.to_owned());
        }
        if words.len() < 3 || words[..3] != [UNK, BOS, EOS] {
            return Err(Error::LmFormat("reserved symbols missing".into()));
        }
        let mut lm = NgramLM::empty(order, weights, words);
        for k in 1..=order {
            let n = cur.u64()?;
            for _ in 0..n {
                let g = (0..k).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
                if g.iter().any(|&id| id as usize >= lm.words.len()) {
                    return Err(Error::LmFormat("word id out of range".into()));
                }
                let c = cur.u64()?;
                lm.ngrams[k - 1].insert(g, c);
            }
        }
        if cur.at != bytes.len() {
            return Err(Error::LmFormat("trailing bytes".into()));
        }
        if !lm.ngrams[0].contains_key(&vec![UNK_ID]) {
            return Err(Error::LmFormat("no unigram mass for <unk>".into()));
        }
        lm.rebuild_contexts();
        Ok(lm)
    }

    pub fn save_file(&self, path: &Path) -> Result<()> {
        crate::io::atomic_write(path, |w| self.save(w))
    }

    pub fn load_file(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::load(&mut f)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::LmFormat("truncated file".into()))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl FluencyScorer for NgramLM {
    fn perplexity(&self, variant: &CMVariant) -> Result<f64> {
        let words: Vec<&str> = variant.tokens.iter().map(|t| t.surface()).collect();
        NgramLM::perplexity(self, &words)
    }
}

/// Perplexities from an outside scorer, keyed by (pair id, variant).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalScores {
    scores: HashMap<(usize, usize), f64>,
}

impl ExternalScores {
    /// TSV `id<TAB>variant<TAB>ppl`, with an optional header row.
    pub fn load(path: &Path) -> Result<Self> {
        let mut scores = HashMap::new();
        for (n, line) in read_lines(path)?.iter().enumerate() {
            if line.is_empty() || (n == 0 && line.starts_with("id\t")) {
                continue;
            }
            let bad = |m: String| Error::parse(path, n + 1, m);
            let cols: Vec<&str> = line.split('\t').collect();
            let [id, variant, ppl] = cols[..] else {
                return Err(bad(format!("expected 3 columns, found {}", cols.len())));
            };
            let id = id.parse().map_err(|_| bad(format!("bad id {id:?}")))?;
            let variant = variant.parse().map_err(|_| bad(format!("bad variant {variant:?}")))?;
            let ppl: f64 = ppl.parse().map_err(|_| bad(format!("bad ppl {ppl:?}")))?;
            if !(ppl.is_finite() && ppl > 0.0) {
                return Err(bad(format!("ppl must be positive and finite, got {ppl}")));
            }
            scores.insert((id, variant), ppl);
        }
        Ok(ExternalScores { scores })
    }

    pub fn insert(&mut self, id: usize, variant: usize, ppl: f64) {
        self.scores.insert((id, variant), ppl);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl FluencyScorer for ExternalScores {
    fn perplexity(&self, v: &CMVariant) -> Result<f64> {
        self.scores
            .get(&(v.pair_id, v.variant))
            .copied()
            .ok_or(Error::MissingScore {
                id: v.pair_id,
                variant: v.variant,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LanguagePair;
    use crate::generate::tests::certificate;
    use crate::generate::{filter_variants, sample_subsets, substitute, FilterSpec};
    use proptest::prelude::*;

    fn split(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(str::to_owned).collect())
            .collect()
    }

    fn ten() -> Vec<Vec<String>> {
        split(&[
            "yah certificate trusted nahin hai",
            "yah certificate trusted nahin hai",
            "yah certificate trusted nahin hai",
            "mera phone kaam nahin karta",
            "mera laptop kaam karta hai",
            "yah phone naya hai",
            "vah certificate purana hai",
            "mera certificate naya hai",
            "yah laptop trusted hai",
            "phone kaam nahin karta",
        ])
    }

    #[test]
    fn conditionals_sum_to_one() {
        let lm = NgramLM::train(&ten(), &LmConfig::default()).unwrap();
        let vocab: Vec<String> = lm.vocabulary().map(str::to_owned).collect();
        for h in [vec![], vec!["yah"], vec![BOS, BOS], vec!["mera", "phone"], vec!["zzz", "yah"], vec!["hai", "hai"]] {
            let total: f64 = vocab.iter().map(|w| lm.prob(&h, w)).sum();
            assert!((total - 1.0).abs() < 1e-6, "history {h:?}: {total}");
            for w in &vocab {
                let p = lm.prob(&h, w);
                assert!(p > 0.0 && p <= 1.0);
            }
        }
    }

    #[test]
    fn balanced_unigram_ppl_is_vocab_size() {
        // a, b, </s> and <unk> (x1, x2) all have count 2
        let lm = NgramLM::train(&split(&["a b x1", "a b x2"]), &LmConfig::order(1)).unwrap();
        assert_eq!(lm.vocab_size(), 4);
        for s in [vec!["a", "b"], vec!["b"], vec!["a", "zz", "b"]] {
            assert!((lm.perplexity(&s).unwrap() - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn repeated_sentence_is_minimum() {
        let lm = NgramLM::train(&split(&["a b c"; 5]), &LmConfig::default()).unwrap();
        let best = lm.perplexity(&["a", "b", "c"]).unwrap();
        for other in [vec!["a", "c", "b"], vec!["c", "b", "a"], vec!["b", "a", "c"], vec!["a", "b"], vec!["q"]] {
            assert!(lm.perplexity(&other).unwrap() > best, "{other:?}");
        }
    }

    #[test]
    fn seen_sentence_beats_its_shuffle() {
        let lm = NgramLM::train(&ten(), &LmConfig::default()).unwrap();
        let seen = lm.perplexity(&["yah", "certificate", "trusted", "nahin", "hai"]).unwrap();
        let shuffled = lm.perplexity(&["nahin", "yah", "hai", "trusted", "certificate"]).unwrap();
        assert!(seen < shuffled);
        assert_eq!(seen, lm.perplexity(&["yah", "certificate", "trusted", "nahin", "hai"]).unwrap());
    }

    #[test]
    fn unknown_words_have_finite_ppl() {
        let lm = NgramLM::train(&ten(), &LmConfig::default()).unwrap();
        let p = lm.perplexity(&["qqq", "rrr", "sss"]).unwrap();
        assert!(p.is_finite() && p >= 1.0);
        // no singletons at all still leaves <unk> mass
        let lm = NgramLM::train(&split(&["a b", "a b"]), &LmConfig::default()).unwrap();
        assert!(lm.perplexity(&["zz"]).unwrap().is_finite());
    }

    #[test]
    fn errors() {
        assert!(NgramLM::train(&ten(), &LmConfig::order(0)).is_err());
        assert!(matches!(NgramLM::train::<String>(&[], &LmConfig::default()), Err(Error::EmptyCorpus)));
        let lm = NgramLM::train(&ten(), &LmConfig::default()).unwrap();
        assert!(lm.perplexity::<&str>(&[]).is_err());
        let bad = LmConfig {
            weights: Some(vec![0.5, 0.5, 0.0]),
            ..Default::default()
        };
        assert!(NgramLM::train(&ten(), &bad).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let lm = NgramLM::train(&ten(), &LmConfig::default()).unwrap();
        let mut buf = Vec::new();
        lm.save(&mut buf).unwrap();
        assert!(buf.starts_with(MAGIC));
        let back = NgramLM::load(&mut buf.as_slice()).unwrap();
        assert_eq!(back, lm);
        let mut again = Vec::new();
        back.save(&mut again).unwrap();
        assert_eq!(buf, again);
        assert!(NgramLM::load(&mut &buf[..buf.len() - 3]).is_err());
        let mut wrong = buf.clone();
        wrong[0] = b'X';
        assert!(matches!(NgramLM::load(&mut wrong.as_slice()), Err(Error::LmFormat(_))));
    }

    #[test]
    fn external_scores_drive_filtering() {
        let (pair, table) = certificate();
        let emb = LanguagePair::new("hi", "en").unwrap().embedded();
        let variants: Vec<CMVariant> = sample_subsets(&[1, 2, 3], 10, 0)
            .iter()
            .enumerate()
            .map(|(i, s)| substitute(&pair, &table, s, emb, i).unwrap())
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.tsv");
        // ranking opposite to any LM preference: larger switch sets score better
        let rows: String = variants
            .iter()
            .map(|v| format!("0\t{}\t{}\n", v.variant, 100.0 - v.switched.len() as f64 * 10.0))
            .collect();
        std::fs::write(&path, format!("id\tvariant\tppl\n{rows}")).unwrap();
        let scores = ExternalScores::load(&path).unwrap();
        let kept = filter_variants(variants.clone(), &FilterSpec::permissive(1), Some(&scores)).unwrap();
        assert_eq!(kept[0].switched, [1, 2, 3]);
        assert_eq!(kept[0].ppl, Some(70.0));
        std::fs::write(&path, "0\t0\t5\n").unwrap();
        let partial = ExternalScores::load(&path).unwrap();
        assert!(matches!(
            filter_variants(variants, &FilterSpec::permissive(1), Some(&partial)),
            Err(Error::MissingScore { id: 0, variant: 1 })
        ));
        std::fs::write(&path, "0\t0\n").unwrap();
        assert!(matches!(ExternalScores::load(&path), Err(Error::Parse { line: 1, .. })));
    }

    proptest! {
        #[test]
        fn adding_a_sentence_never_raises_its_unigram_ppl(
            corpus in proptest::collection::vec(proptest::collection::vec(0u8..6, 1..6), 1..8),
            pick in any::<proptest::sample::Index>(),
            rev in any::<bool>(),
        ) {
            let corpus: Vec<Vec<String>> = corpus
                .iter()
                .map(|s| s.iter().map(|w| format!("w{w}")).collect())
                .collect();
            let mut s = corpus[pick.index(corpus.len())].clone();
            if rev {
                s.reverse();
            }
            let pure = LmConfig { order: 1, min_count: 1, weights: None };
            let before = NgramLM::train(&corpus, &pure).unwrap().perplexity(&s).unwrap();
            let mut more = corpus.clone();
            more.push(s.clone());
            let after = NgramLM::train(&more, &pure).unwrap().perplexity(&s).unwrap();
            prop_assert!(after <= before * (1.0 + 1e-12), "{} > {}", after, before);
        }

        #[test]
        fn trigram_ppl_finite_and_at_least_one(
            corpus in proptest::collection::vec(proptest::collection::vec(0u8..8, 1..7), 1..10),
            probe in proptest::collection::vec(0u8..12, 1..7),
        ) {
            let corpus: Vec<Vec<String>> = corpus.iter().map(|s| s.iter().map(|w| format!("w{w}")).collect()).collect();
            let probe: Vec<String> = probe.iter().map(|w| format!("w{w}")).collect();
            let lm = NgramLM::train(&corpus, &LmConfig::default()).unwrap();
            let p = lm.perplexity(&probe).unwrap();
            prop_assert!(p.is_finite() && p >= 1.0);
        }
    }
}
