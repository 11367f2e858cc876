//! Word-level adversarial perturbations: adjacent switch, vowel omission,
//! keyboard-proximity typo and interior shuffle.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TaggedToken;
use crate::error::{Error, Result};
use crate::generate::CMVariant;
use crate::seed;

pub const QWERTY_TABLE: &str = include_str!("../data/qwerty.tsv");
pub const QWERTY_TABLE_VERSION: &str = "qwerty-1";

const SHUFFLE_ATTEMPTS: usize = 10;

fn qwerty() -> &'static HashMap<char, Vec<char>> {
    static TABLE: OnceLock<HashMap<char, Vec<char>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        QWERTY_TABLE
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let (k, v) = l.split_once('\t').expect("key<TAB>neighbours");
                (k.chars().next().unwrap(), v.chars().collect())
            })
            .collect()
    })
}

/// QWERTY neighbours of a letter, in the case of the input.
pub fn keyboard_neighbours(c: char) -> Vec<char> {
    let lower = c.to_ascii_lowercase();
    match qwerty().get(&lower) {
        Some(n) if c.is_ascii_uppercase() => n.iter().map(|x| x.to_ascii_uppercase()).collect(),
        Some(n) => n.clone(),
        None => Vec::new(),
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Swap the interior pair at `position`, `position + 1`. First and last
/// characters never move; a swap that changes nothing is rejected.
pub fn perturb_switch(word: &str, position: usize) -> Option<String> {
    let mut chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if n < 4 || position < 1 || position > n - 3 || chars[position] == chars[position + 1] {
        return None;
    }
    chars.swap(position, position + 1);
    Some(chars.into_iter().collect())
}

/// Drop each interior vowel with probability 1/2; if none went, drop one
/// random interior character instead.
pub fn perturb_omission<R: Rng + ?Sized>(word: &str, rng: &mut R) -> Option<String> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if n < 4 {
        return None;
    }
    let mut keep = vec![true; n];
    for i in 1..n - 1 {
        if is_vowel(chars[i]) && rng.gen_bool(0.5) {
            keep[i] = false;
        }
    }
    if keep.iter().all(|&k| k) {
        keep[rng.gen_range(1..n - 1)] = false;
    }
    Some(chars.iter().zip(&keep).filter(|(_, &k)| k).map(|(c, _)| c).collect())
}

/// Replace the letter at `position` with a random keyboard neighbour.
pub fn perturb_typo<R: Rng + ?Sized>(word: &str, position: usize, rng: &mut R) -> Option<String> {
    let mut chars: Vec<char> = word.chars().collect();
    if chars.len() < 3 || position >= chars.len() {
        return None;
    }
    let neighbours = keyboard_neighbours(chars[position]);
    chars[position] = *neighbours.choose(rng)?;
    Some(chars.into_iter().collect())
}

/// Permute the interior uniformly, redrawing outcomes equal to the input.
pub fn perturb_shuffle<R: Rng + ?Sized>(word: &str, rng: &mut R) -> Option<String> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if n < 4 || chars[1..n - 1].iter().all(|&c| c == chars[1]) {
        return None;
    }
    let mut candidate = chars.clone();
    for _ in 0..SHUFFLE_ATTEMPTS {
        candidate[1..n - 1].shuffle(rng);
        if candidate != chars {
            return Some(candidate.into_iter().collect());
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseKind {
    Switch,
    Omission,
    Typo,
    Shuffle,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [NoiseKind::Switch, NoiseKind::Omission, NoiseKind::Typo, NoiseKind::Shuffle];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Switch => "switch",
            NoiseKind::Omission => "omission",
            NoiseKind::Typo => "typo",
            NoiseKind::Shuffle => "shuffle",
        }
    }
}

/// Per-token probabilities of each perturbation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseRates {
    pub switch: f64,
    pub omission: f64,
    pub typo: f64,
    pub shuffle: f64,
}

impl NoiseRates {
    /// 30% switch, 12% omission, 12% typo, 6% shuffle.
    pub const STANDARD: NoiseRates = NoiseRates {
        switch: 0.30,
        omission: 0.12,
        typo: 0.12,
        shuffle: 0.06,
    };

    pub fn get(&self, kind: NoiseKind) -> f64 {
        match kind {
            NoiseKind::Switch => self.switch,
            NoiseKind::Omission => self.omission,
            NoiseKind::Typo => self.typo,
            NoiseKind::Shuffle => self.shuffle,
        }
    }

    pub fn total(&self) -> f64 {
        NoiseKind::ALL.iter().map(|&k| self.get(k)).sum()
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for k in NoiseKind::ALL {
            let r = self.get(k);
            if !(0.0..=1.0).contains(&r) {
                out.push(format!("noise.{}: rate {r} outside [0, 1]", k.name()));
            }
        }
        // small slack for decimal input such as 0.3 + 0.12 + ...
        if self.total() > 1.0 + 1e-9 {
            out.push(format!("noise: rates sum to {:.4}, more than 1", self.total()));
        }
        out
    }
}

impl FromStr for NoiseRates {
    type Err = Error;

    /// `switch=0.30,omission=0.12,typo=0.12,shuffle=0.06`; omitted kinds
    /// are 0.
    fn from_str(s: &str) -> Result<Self> {
        let mut rates = NoiseRates::default();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("noise: expected kind=rate, got {item:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("noise: bad rate {v:?} for {k}")))?;
            let slot = match k.trim() {
                "switch" => &mut rates.switch,
                "omission" => &mut rates.omission,
                "typo" => &mut rates.typo,
                "shuffle" => &mut rates.shuffle,
                other => return Err(Error::InvalidArgument(format!("noise: unknown kind {other:?}"))),
            };
            *slot = v;
        }
        Ok(rates)
    }
}

impl fmt::Display for NoiseRates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "switch={},omission={},typo={},shuffle={}",
            self.switch, self.omission, self.typo, self.shuffle
        )
    }
}

/// Minimum word length, in characters, for each perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinLengths {
    pub switch: usize,
    pub omission: usize,
    pub typo: usize,
    pub shuffle: usize,
}

impl Default for MinLengths {
    fn default() -> Self {
        MinLengths {
            switch: 4,
            omission: 4,
            typo: 3,
            shuffle: 4,
        }
    }
}

impl MinLengths {
    pub fn get(&self, kind: NoiseKind) -> usize {
        match kind {
            NoiseKind::Switch => self.switch,
            NoiseKind::Omission => self.omission,
            NoiseKind::Typo => self.typo,
            NoiseKind::Shuffle => self.shuffle,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eligibility {
    /// Romanized matrix-language tokens only.
    #[default]
    TransliteratedMatrix,
    /// Any tagged token written entirely in ASCII letters.
    AllLatin,
}

impl Eligibility {
    pub fn admits(self, token: &TaggedToken) -> bool {
        match self {
            Eligibility::TransliteratedMatrix => token.lang().is_matrix() && token.transliterated(),
            Eligibility::AllLatin => {
                !token.lang().is_neutral() && token.surface().bytes().all(|b| b.is_ascii_alphabetic())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub rates: NoiseRates,
    pub min_len: MinLengths,
    pub eligibility: Eligibility,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(rates: NoiseRates, seed: u64) -> Self {
        NoiseSpec {
            rates,
            min_len: MinLengths::default(),
            eligibility: Eligibility::default(),
            seed,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = self.rates.violations();
        let floor = MinLengths::default();
        for k in NoiseKind::ALL {
            if self.min_len.get(k) < floor.get(k) {
                out.push(format!(
                    "noise.min_len.{}: must be at least {}",
                    k.name(),
                    floor.get(k)
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(v.join("; ")))
        }
    }

    /// The perturbation drawn for `u` in [0, 1), by cumulative thresholds
    /// in switch, omission, typo, shuffle order.
    pub fn kind_for(&self, u: f64) -> Option<NoiseKind> {
        let mut acc = 0.0;
        for k in NoiseKind::ALL {
            acc += self.rates.get(k);
            if u < acc {
                return Some(k);
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KindCounts {
    pub drawn: usize,
    pub applied: usize,
    pub fallback: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NoiseReport {
    pub tokens: usize,
    pub eligible: usize,
    pub per_kind: [KindCounts; 4],
}

impl NoiseReport {
    pub fn kind(&self, k: NoiseKind) -> KindCounts {
        self.per_kind[k as usize]
    }

    pub fn perturbed(&self) -> usize {
        self.per_kind.iter().map(|c| c.applied).sum()
    }

    pub fn fallbacks(&self) -> usize {
        self.per_kind.iter().map(|c| c.fallback).sum()
    }

    pub fn applied_fraction(&self, k: NoiseKind) -> f64 {
        ratio(self.kind(k).applied, self.eligible)
    }

    pub fn perturbed_fraction(&self) -> f64 {
        ratio(self.perturbed(), self.eligible)
    }

    pub fn write_tsv(&self, w: &mut dyn Write, spec: &NoiseSpec) -> std::io::Result<()> {
        writeln!(w, "kind\trate\tdrawn\tapplied\tfallback\tapplied_fraction")?;
        for k in NoiseKind::ALL {
            let c = self.kind(k);
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{:.4}",
                k.name(),
                spec.rates.get(k),
                c.drawn,
                c.applied,
                c.fallback,
                self.applied_fraction(k)
            )?;
        }
        writeln!(
            w,
            "total\t{}\t{}\t{}\t{}\t{:.4}",
            spec.rates.total(),
            self.per_kind.iter().map(|c| c.drawn).sum::<usize>(),
            self.perturbed(),
            self.fallbacks(),
            self.perturbed_fraction()
        )?;
        writeln!(w, "#")?;
        writeln!(w, "# tokens {} eligible {} seed {}", self.tokens, self.eligible, spec.seed)?;
        writeln!(
            w,
            "# perturbed {} ({:.2} %), fell back to clean {}",
            self.perturbed(),
            100.0 * self.perturbed_fraction(),
            self.fallbacks()
        )
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Apply one perturbation of the given kind, choosing the position among
/// those where it would change the word.
fn perturb<R: Rng + ?Sized>(kind: NoiseKind, word: &str, min_len: usize, rng: &mut R) -> Option<String> {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() < min_len {
        return None;
    }
    match kind {
        NoiseKind::Switch => {
            let n = chars.len();
            let spots: Vec<usize> = (1..n.saturating_sub(2)).filter(|&i| chars[i] != chars[i + 1]).collect();
            perturb_switch(word, *spots.choose(rng)?)
        }
        NoiseKind::Omission => perturb_omission(word, rng),
        NoiseKind::Typo => {
            let spots: Vec<usize> = (0..chars.len())
                .filter(|&i| !keyboard_neighbours(chars[i]).is_empty())
                .collect();
            perturb_typo(word, *spots.choose(rng)?, rng)
        }
        NoiseKind::Shuffle => perturb_shuffle(word, rng),
    }
}

/// Perturb eligible tokens in place. Each token gets one uniform draw from
/// an rng keyed by (seed, pair id, variant, token index); perturbations
/// that cannot apply leave the token clean and are counted as fallbacks.
pub fn inject_noise(variants: &mut [CMVariant], spec: &NoiseSpec) -> Result<NoiseReport> {
    spec.validate()?;
    let mut report = NoiseReport::default();
    for v in variants.iter_mut() {
        for (idx, tok) in v.tokens.iter_mut().enumerate() {
            report.tokens += 1;
            if !spec.eligibility.admits(tok) {
                continue;
            }
            report.eligible += 1;
            let mut rng = seed::rng(spec.seed, &[v.pair_id as u64, v.variant as u64, idx as u64]);
            let Some(kind) = spec.kind_for(rng.gen::<f64>()) else {
                continue;
            };
            let counts = &mut report.per_kind[kind as usize];
            counts.drawn += 1;
            match perturb(kind, tok.surface(), spec.min_len.get(kind), &mut rng) {
                Some(noisy) => {
                    *tok = tok.with_surface(noisy)?;
                    counts.applied += 1;
                }
                None => counts.fallback += 1,
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{LangTag, LanguagePair};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(s: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(s)
    }

    /// First seed under which `f` yields `want`.
    fn find_seed(want: &str, f: impl Fn(&mut ChaCha8Rng) -> Option<String>) -> Option<u64> {
        (0..10_000).find(|&s| f(&mut rng(s)).as_deref() == Some(want))
    }

    #[test]
    fn switch_examples() {
        assert_eq!(perturb_switch("transfer", 3).as_deref(), Some("trasnfer"));
        assert_eq!(perturb_switch("ab", 0), None);
        assert_eq!(perturb_switch("abcd", 1).as_deref(), Some("acbd"));
        assert_eq!(perturb_switch("abcd", 2), None);
        assert_eq!(perturb_switch("abcd", 0), None);
        assert_eq!(perturb_switch("abbd", 1), None);
    }

    #[test]
    fn omission_examples() {
        assert!(find_seed("amzng", |r| perturb_omission("amazing", r)).is_some());
        let out = perturb_omission("bcdf", &mut rng(1)).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.starts_with('b') && out.ends_with('f'));
        assert_eq!(perturb_omission("abc", &mut rng(1)), None);
        // all-vowel interior still leaves the anchors
        for s in 0..50 {
            assert!(perturb_omission("baeiouc", &mut rng(s)).unwrap().len() >= 2);
        }
    }

    #[test]
    fn typo_examples() {
        assert!(find_seed("movile", |r| perturb_typo("mobile", 2, r)).is_some());
        assert_eq!(perturb_typo("ab1", 2, &mut rng(0)), None);
        assert!(find_seed("xat", |r| perturb_typo("cat", 0, r)).is_some());
        assert!(perturb_typo("Cat", 0, &mut rng(0)).unwrap().starts_with(|c: char| c.is_ascii_uppercase()));
    }

    #[test]
    fn adjacency_table() {
        assert_eq!(keyboard_neighbours('b'), ['f', 'g', 'h', 'v', 'n']);
        assert!(keyboard_neighbours('c').contains(&'x'));
        assert!(keyboard_neighbours('7').is_empty());
        for (k, ns) in qwerty() {
            for n in ns {
                assert!(qwerty()[n].contains(k), "{k} -> {n} not symmetric");
            }
        }
    }

    #[test]
    fn shuffle_examples() {
        assert!(find_seed("loptap", |r| perturb_shuffle("laptop", r)).is_some());
        assert_eq!(perturb_shuffle("aaaa", &mut rng(0)), None);
        assert_eq!(perturb_shuffle("abc", &mut rng(0)), None);
    }

    #[test]
    fn rates_parse_and_validate() {
        let r: NoiseRates = "switch=0.30,omission=0.12,typo=0.12,shuffle=0.06".parse().unwrap();
        assert_eq!(r, NoiseRates::STANDARD);
        assert!(r.violations().is_empty());
        assert_eq!(r.to_string().parse::<NoiseRates>().unwrap(), r);
        let over: NoiseRates = "switch=0.6,typo=0.6".parse().unwrap();
        assert!(over.violations().iter().any(|v| v.starts_with("noise")));
        assert!("bogus=0.1".parse::<NoiseRates>().is_err());
        assert!("switch".parse::<NoiseRates>().is_err());
    }

    #[test]
    fn cumulative_thresholds() {
        let s = NoiseSpec::new(NoiseRates::STANDARD, 0);
        assert_eq!(s.kind_for(0.0), Some(NoiseKind::Switch));
        assert_eq!(s.kind_for(0.299), Some(NoiseKind::Switch));
        assert_eq!(s.kind_for(0.41), Some(NoiseKind::Omission));
        assert_eq!(s.kind_for(0.53), Some(NoiseKind::Typo));
        assert_eq!(s.kind_for(0.59), Some(NoiseKind::Shuffle));
        assert_eq!(s.kind_for(0.61), None);
    }

    fn romanized_variant(words: &[&str], pair_id: usize) -> CMVariant {
        let langs = LanguagePair::new("hi", "en").unwrap();
        let tokens: Vec<TaggedToken> = words
            .iter()
            .map(|w| match *w {
                "." => TaggedToken::new(".", LangTag::Neutral).unwrap(),
                w if w.starts_with('E') => TaggedToken::new(w, langs.embedded()).unwrap(),
                w => TaggedToken::new(w, langs.matrix()).unwrap().into_transliterated(w).unwrap(),
            })
            .collect();
        CMVariant {
            pair_id,
            variant: 0,
            switched: Vec::new(),
            cmi: 0.0,
            spf: 0.0,
            tokens,
            ppl: None,
        }
    }

    #[test]
    fn zero_rates_leave_input_identical() {
        let mut vs = vec![romanized_variant(&["yah", "Esecurity", "nahin", "."], 0)];
        let before = vs.clone();
        let report = inject_noise(&mut vs, &NoiseSpec::new(NoiseRates::default(), 5)).unwrap();
        assert_eq!(vs, before);
        assert_eq!(report.eligible, 2);
        assert_eq!(report.perturbed(), 0);
    }

    #[test]
    fn default_eligibility_spares_embedded_and_neutral() {
        let all = NoiseRates {
            switch: 1.0,
            ..Default::default()
        };
        let mut vs = vec![romanized_variant(&["pramaan", "Esecurity", "."], 0)];
        inject_noise(&mut vs, &NoiseSpec::new(all, 1)).unwrap();
        assert_ne!(vs[0].tokens[0].surface(), "pramaan");
        assert_eq!(vs[0].tokens[1].surface(), "Esecurity");
        assert_eq!(vs[0].tokens[2].surface(), ".");
        let mut spec = NoiseSpec::new(all, 1);
        spec.eligibility = Eligibility::AllLatin;
        let mut vs = vec![romanized_variant(&["pramaan", "Esecurity", "."], 0)];
        inject_noise(&mut vs, &spec).unwrap();
        assert_ne!(vs[0].tokens[1].surface(), "Esecurity");
    }

    #[test]
    fn deterministic_and_counted() {
        let words = ["pramaan", "patra", "vishvasaniya", "nahin", "hai", "ek", "kaam"];
        let make = || (0..300).map(|i| romanized_variant(&words, i)).collect::<Vec<_>>();
        let spec = NoiseSpec::new(NoiseRates::STANDARD, 99);
        let (mut a, mut b) = (make(), make());
        let ra = inject_noise(&mut a, &spec).unwrap();
        let rb = inject_noise(&mut b, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        // "ek" is below every minimum length, so it always falls back
        assert!(ra.fallbacks() > 0);
        for k in NoiseKind::ALL {
            let c = ra.kind(k);
            assert_eq!(c.drawn, c.applied + c.fallback);
        }
        let mut buf = Vec::new();
        ra.write_tsv(&mut buf, &spec).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 6 + 3);
    }

    proptest! {
        #[test]
        fn switch_preserves_multiset_and_length(w in "[a-z]{4,12}", p in 1usize..10) {
            if let Some(out) = perturb_switch(&w, p) {
                let (mut a, mut b): (Vec<char>, Vec<char>) = (w.chars().collect(), out.chars().collect());
                prop_assert_ne!(&out, &w);
                prop_assert_eq!(a.first(), b.first());
                prop_assert_eq!(a.last(), b.last());
                a.sort_unstable();
                b.sort_unstable();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn omission_strictly_shortens(w in "[a-z]{4,12}", s in any::<u64>()) {
            let out = perturb_omission(&w, &mut rng(s)).unwrap();
            prop_assert!(out.len() < w.len() && out.len() >= 2);
            prop_assert_eq!(out.chars().next(), w.chars().next());
            prop_assert_eq!(out.chars().last(), w.chars().last());
        }

        #[test]
        fn typo_preserves_length(w in "[a-zA-Z]{3,12}", p in 0usize..12, s in any::<u64>()) {
            if let Some(out) = perturb_typo(&w, p, &mut rng(s)) {
                prop_assert_eq!(out.chars().count(), w.chars().count());
                prop_assert_ne!(out, w);
            }
        }

        #[test]
        fn shuffle_preserves_multiset_and_anchors(w in "[a-z]{4,12}", s in any::<u64>()) {
            if let Some(out) = perturb_shuffle(&w, &mut rng(s)) {
                prop_assert_ne!(&out, &w);
                let (mut a, mut b): (Vec<char>, Vec<char>) = (w.chars().collect(), out.chars().collect());
                prop_assert_eq!(a[0], b[0]);
                prop_assert_eq!(a.last(), b.last());
                a.sort_unstable();
                b.sort_unstable();
                prop_assert_eq!(a, b);
            }
        }
    }
}
