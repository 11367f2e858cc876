//! Code-mixed sentence generation: candidate selection, switch-set
//! sampling, substitution and filtering.

mod combinations;
mod filter;
mod format;

use std::collections::HashMap;

use rayon::prelude::*;

pub use combinations::{binomial, combination_sizes, count_variants, sample_subsets};
pub use filter::{filter_variants, FilterSpec, FluencyScorer};
pub use format::{read_cm_tsv, write_cm_tsv, CmRecord};

pub use crate::inclusion::InclusionList;

use crate::align::SubstitutionTable;
use crate::corpus::{LangTag, ParallelPair, Sentence, TaggedToken};
use crate::error::{Error, Result};
use crate::metrics::{cmi, spf};
use crate::seed;

/// Number of switch sets sampled per sentence before filtering.
pub const DEFAULT_POOL: usize = 50;

/// One code-mixed rendering of a source sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct CMVariant {
    pub pair_id: usize,
    /// Ordinal of the switch set among those sampled for this pair. Stable
    /// across filtering, so external scores can refer to it.
    pub variant: usize,
    /// Switched source indices, ascending.
    pub switched: Vec<usize>,
    pub tokens: Vec<TaggedToken>,
    pub cmi: f64,
    pub spf: f64,
    pub ppl: Option<f64>,
}

impl CMVariant {
    pub fn text(&self) -> String {
        self.tokens.iter().map(TaggedToken::surface).collect::<Vec<_>>().join(" ")
    }

    /// Recompute CMI and SPF after the tokens changed.
    pub fn rescore(&mut self) {
        self.cmi = cmi(&self.tokens);
        self.spf = spf(&self.tokens);
    }
}

/// Indices of tokens whose POS tag is in the inclusion list.
pub fn select_candidates(sentence: &Sentence, inclusion: &InclusionList) -> Result<Vec<usize>> {
    sentence
        .tokens
        .iter()
        .enumerate()
        .filter_map(|(index, t)| match t.pos() {
            None => Some(Err(Error::MissingPos {
                sentence: sentence.id,
                index,
            })),
            Some(p) if inclusion.contains(p) => Some(Ok(index)),
            Some(_) => None,
        })
        .collect()
}

/// Replace the tokens at `subset` with their aligned target words.
pub fn substitute(
    pair: &ParallelPair,
    table: &SubstitutionTable,
    subset: &[usize],
    embedded: LangTag,
    variant: usize,
) -> Result<CMVariant> {
    if subset.is_empty() {
        return Err(Error::EmptySubset { sentence: pair.id });
    }
    let mut tokens = pair.source.tokens.clone();
    let mut switched = subset.to_vec();
    switched.sort_unstable();
    switched.dedup();
    for &i in &switched {
        let entry = table.get(i).ok_or(Error::MissingSubstitution {
            sentence: pair.id,
            index: i,
        })?;
        let src = tokens.get(i).ok_or(Error::MissingSubstitution {
            sentence: pair.id,
            index: i,
        })?;
        if src.surface() != entry.src {
            return Err(Error::InvalidArgument(format!(
                "sentence {}: substitution table expects {:?} at index {i}, source has {:?}",
                pair.id,
                entry.src,
                src.surface()
            )));
        }
        let mut tok = TaggedToken::new(entry.tgt.as_str(), embedded)?.with_pos(entry.pos.as_str());
        tok.set_lang(embedded);
        tokens[i] = tok;
    }
    Ok(CMVariant {
        pair_id: pair.id,
        variant,
        switched,
        cmi: cmi(&tokens),
        spf: spf(&tokens),
        tokens,
        ppl: None,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct GenerateOptions {
    pub seed: u64,
    /// Switch sets sampled per sentence before filtering.
    pub pool: usize,
    pub embedded: LangTag,
    pub threads: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenerateReport {
    pub pairs: usize,
    pub pairs_without_candidates: usize,
    /// Pairs that had candidates but no variant survived filtering.
    pub pairs_filtered_out: usize,
    pub variants_sampled: usize,
    pub variants_emitted: usize,
}

/// Per-pair seed for switch-set sampling.
pub fn pair_seed(seed: u64, pair_id: usize) -> u64 {
    seed::derive(seed, &[pair_id as u64])
}

fn generate_pair(
    pair: &ParallelPair,
    table: &SubstitutionTable,
    inclusion: &InclusionList,
    spec: &FilterSpec,
    opts: &GenerateOptions,
    scorer: Option<&dyn FluencyScorer>,
) -> Result<(Vec<CMVariant>, usize, usize)> {
    let candidates: Vec<usize> = select_candidates(&pair.source, inclusion)?
        .into_iter()
        .filter(|i| table.get(*i).is_some())
        .collect();
    let subsets = sample_subsets(&candidates, opts.pool, pair_seed(opts.seed, pair.id));
    let variants = subsets
        .iter()
        .enumerate()
        .map(|(ordinal, s)| substitute(pair, table, s, opts.embedded, ordinal))
        .collect::<Result<Vec<_>>>()?;
    let sampled = variants.len();
    Ok((filter_variants(variants, spec, scorer)?, candidates.len(), sampled))
}

/// Run selection → sampling → substitution → filtering over a corpus.
/// Output is ordered by pair id, then variant ordinal, and is identical for
/// any thread count.
pub fn generate_cm_corpus(
    pairs: &[ParallelPair],
    tables: &[SubstitutionTable],
    inclusion: &InclusionList,
    spec: &FilterSpec,
    opts: &GenerateOptions,
    scorer: Option<&(dyn FluencyScorer + Sync)>,
) -> Result<(Vec<CmRecord>, GenerateReport)> {
    spec.validate()?;
    if opts.pool == 0 {
        return Err(Error::InvalidArgument("sampling pool must be positive".into()));
    }
    if spec.ppl_max.is_some() && scorer.is_none() {
        return Err(Error::MissingScorer);
    }
    let by_id: HashMap<usize, &SubstitutionTable> = tables.iter().map(|t| (t.id, t)).collect();
    let work = |pair: &ParallelPair| -> Result<(Vec<CMVariant>, usize, usize)> {
        let table = by_id.get(&pair.id).ok_or_else(|| {
            Error::InvalidArgument(format!("no substitution table for sentence {}", pair.id))
        })?;
        let scorer = scorer.map(|s| s as &dyn FluencyScorer);
        generate_pair(pair, table, inclusion, spec, opts, scorer)
    };
    let results: Vec<Result<_>> = if opts.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| pairs.par_iter().map(work).collect())
    } else {
        pairs.iter().map(work).collect()
    };

    let mut report = GenerateReport {
        pairs: pairs.len(),
        ..Default::default()
    };
    let mut out = Vec::new();
    for (pair, result) in pairs.iter().zip(results) {
        let (variants, n_candidates, sampled) = result?;
        report.variants_sampled += sampled;
        if n_candidates == 0 {
            report.pairs_without_candidates += 1;
        } else if variants.is_empty() {
            report.pairs_filtered_out += 1;
        }
        report.variants_emitted += variants.len();
        out.extend(variants.into_iter().map(|variant| CmRecord {
            variant,
            target: pair.target.clone(),
        }));
    }
    Ok((out, report))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::align::Substitution;
    use crate::corpus::{sentence_from_line, LanguagePair};

    pub(crate) fn tagged_sentence(id: usize, words: &[(&str, &str)]) -> Sentence {
        let langs = LanguagePair::new("hi", "en").unwrap();
        let line = words.iter().map(|(w, _)| *w).collect::<Vec<_>>().join(" ");
        let mut s = sentence_from_line(id, &line, langs.matrix());
        for (tok, (_, pos)) in s.tokens.iter_mut().zip(words) {
            *tok = tok.clone().with_pos(*pos);
        }
        s
    }

    pub(crate) fn certificate() -> (ParallelPair, SubstitutionTable) {
        let langs = LanguagePair::new("hi", "en").unwrap();
        let src = tagged_sentence(
            0,
            &[
                ("यह", "DEM"),
                ("सुरक्षा", "NN"),
                ("प्रमाणपत्र", "NN"),
                ("विश्वशनीय", "JJ"),
                ("नहीं", "NEG"),
                ("है", "VAUX"),
                ("।", "SYM"),
            ],
        );
        let tgt = sentence_from_line(0, "This security certificate is not trusted .", langs.embedded());
        let mut table = SubstitutionTable::empty(0);
        for (i, s, t) in [(1, "सुरक्षा", "security"), (2, "प्रमाणपत्र", "certificate"), (3, "विश्वशनीय", "trusted")] {
            table.entries.insert(
                i,
                Substitution {
                    src: s.into(),
                    tgt: t.into(),
                    pos: src.tokens[i].pos().unwrap().into(),
                },
            );
        }
        (ParallelPair::new(src, tgt).unwrap(), table)
    }

    fn embedded() -> LangTag {
        LanguagePair::new("hi", "en").unwrap().embedded()
    }

    #[test]
    fn verbs_are_not_candidates() {
        let s = tagged_sentence(0, &[("वह", "PRP"), ("खेल", "VM"), ("रहा", "VAUX"), ("है", "VAUX")]);
        assert!(select_candidates(&s, &InclusionList::default()).unwrap().is_empty());
    }

    #[test]
    fn certificate_candidates() {
        let s = tagged_sentence(
            0,
            &[
                ("यह", "DEM"),
                ("सुरक्षा", "NN"),
                ("प्रमाणपत्र", "NN"),
                ("विश्वशनीय", "JJ"),
                ("नहीं", "NEG"),
                ("है", "VAUX"),
            ],
        );
        assert_eq!(select_candidates(&s, &InclusionList::default()).unwrap(), [1, 2, 3]);
        assert!(select_candidates(&Sentence::new(0, vec![]), &InclusionList::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn untagged_token_is_error() {
        let langs = LanguagePair::new("hi", "en").unwrap();
        let s = sentence_from_line(3, "यह सुरक्षा", langs.matrix());
        assert!(matches!(
            select_candidates(&s, &InclusionList::default()),
            Err(Error::MissingPos { sentence: 3, index: 0 })
        ));
    }

    #[test]
    fn substitute_full_and_partial() {
        let (pair, table) = certificate();
        let v = substitute(&pair, &table, &[1, 2, 3], embedded(), 0).unwrap();
        assert_eq!(v.text(), "यह security certificate trusted नहीं है ।");
        assert_eq!(v.cmi, 50.0);
        assert!((v.spf - 0.4).abs() < 1e-12);
        let v = substitute(&pair, &table, &[1], embedded(), 0).unwrap();
        assert_eq!(v.text(), "यह security प्रमाणपत्र विश्वशनीय नहीं है ।");
        assert!(matches!(
            substitute(&pair, &table, &[], embedded(), 0),
            Err(Error::EmptySubset { .. })
        ));
        assert!(matches!(
            substitute(&pair, &table, &[4], embedded(), 0),
            Err(Error::MissingSubstitution { index: 4, .. })
        ));
    }

    #[test]
    fn variant_differs_exactly_at_switched_positions() {
        let (pair, table) = certificate();
        for subset in sample_subsets(&[1, 2, 3], 100, 0) {
            let v = substitute(&pair, &table, &subset, embedded(), 0).unwrap();
            assert_eq!(v.tokens.len(), pair.source.len());
            let diff: Vec<usize> = (0..v.tokens.len())
                .filter(|&i| v.tokens[i] != pair.source.tokens[i])
                .collect();
            assert_eq!(diff, v.switched);
            assert!(diff.iter().all(|&i| v.tokens[i].lang() == embedded()));
        }
    }

    #[test]
    fn mismatched_table_is_rejected() {
        let (pair, mut table) = certificate();
        table.entries.get_mut(&1).unwrap().src = "कुछ".into();
        assert!(substitute(&pair, &table, &[1], embedded(), 0).is_err());
    }

    fn opts(seed: u64, threads: usize) -> GenerateOptions {
        GenerateOptions {
            seed,
            pool: DEFAULT_POOL,
            embedded: embedded(),
            threads,
        }
    }

    #[test]
    fn fully_switched_certificate_survives_permissive_filter() {
        let (pair, table) = certificate();
        let spec = FilterSpec::permissive(10);
        let (out, report) = generate_cm_corpus(
            std::slice::from_ref(&pair),
            &[table],
            &InclusionList::default(),
            &spec,
            &opts(1, 1),
            None,
        )
        .unwrap();
        assert_eq!(out.len(), 7);
        assert!(out
            .iter()
            .any(|r| r.variant.text() == "यह security certificate trusted नहीं है ।"));
        assert_eq!(out[0].target, pair.target);
        assert_eq!(report.variants_emitted, 7);
    }

    #[test]
    fn no_candidates_no_variants() {
        let langs = LanguagePair::new("hi", "en").unwrap();
        let src = tagged_sentence(0, &[("वह", "PRP"), ("खेल", "VM"), ("रहा", "VAUX"), ("है", "VAUX")]);
        let tgt = sentence_from_line(0, "He is playing", langs.embedded());
        let pair = ParallelPair::new(src, tgt).unwrap();
        let (out, report) = generate_cm_corpus(
            &[pair],
            &[SubstitutionTable::empty(0)],
            &InclusionList::default(),
            &FilterSpec::permissive(5),
            &opts(1, 1),
            None,
        )
        .unwrap();
        assert!(out.is_empty());
        assert_eq!(report.pairs_without_candidates, 1);
    }

    #[test]
    fn missing_table_is_error() {
        let (pair, _) = certificate();
        assert!(generate_cm_corpus(
            &[pair],
            &[],
            &InclusionList::default(),
            &FilterSpec::permissive(5),
            &opts(1, 1),
            None
        )
        .is_err());
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let (pair, table) = certificate();
        let mut pairs = Vec::new();
        let mut tables = Vec::new();
        for id in 0..40 {
            let mut p = pair.clone();
            p.id = id;
            p.source.id = id;
            p.target.id = id;
            let mut t = table.clone();
            t.id = id;
            pairs.push(p);
            tables.push(t);
        }
        let spec = FilterSpec::permissive(3);
        let run = |threads| {
            generate_cm_corpus(&pairs, &tables, &InclusionList::default(), &spec, &opts(9, threads), None)
                .unwrap()
                .0
        };
        assert_eq!(run(1), run(4));
    }
}
