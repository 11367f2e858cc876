use std::collections::HashSet;
use std::io::Write;

use crate::corpus::LangTag;
use crate::generate::CmRecord;

/// Sentence-, token- and character-level statistics of a code-mixed corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    pub sentences: usize,
    pub unique_sentences: usize,
    /// Unweighted mean of sentence CMI, percent.
    pub mean_cmi: f64,
    /// Unweighted mean of sentence SPF, fraction.
    pub mean_spf: f64,
    pub matrix_src_tokens: usize,
    pub embedded_src_tokens: usize,
    pub target_tokens: usize,
    pub matrix_src_types: usize,
    pub embedded_src_types: usize,
    pub target_types: usize,
    /// Code-mixed source length in tokens.
    pub token_mean: f64,
    pub token_median: f64,
    pub token_max: usize,
    /// Code-mixed source line length in characters, spaces included.
    pub char_mean: f64,
    pub char_median: f64,
    pub char_max: usize,
}

fn median(values: &mut [usize]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_unstable();
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid] as f64
    } else {
        (values[mid - 1] + values[mid]) as f64 / 2.0
    }
}

pub fn corpus_stats(corpus: &[CmRecord]) -> CorpusStats {
    let mut s = CorpusStats {
        sentences: corpus.len(),
        ..Default::default()
    };
    if corpus.is_empty() {
        return s;
    }
    let mut unique = HashSet::new();
    let mut matrix_types = HashSet::new();
    let mut embedded_types = HashSet::new();
    let mut target_types = HashSet::new();
    let mut token_lens = Vec::with_capacity(corpus.len());
    let mut char_lens = Vec::with_capacity(corpus.len());
    let (mut cmi_sum, mut spf_sum) = (0.0, 0.0);
    for r in corpus {
        let v = &r.variant;
        let text = v.text();
        token_lens.push(v.tokens.len());
        char_lens.push(text.chars().count());
        unique.insert(text);
        cmi_sum += v.cmi;
        spf_sum += v.spf;
        for t in &v.tokens {
            match t.lang() {
                LangTag::Matrix(_) => {
                    s.matrix_src_tokens += 1;
                    matrix_types.insert(t.surface());
                }
                LangTag::Embedded(_) => {
                    s.embedded_src_tokens += 1;
                    embedded_types.insert(t.surface());
                }
                LangTag::Neutral => {}
            }
        }
        for t in r.target.tokens.iter().filter(|t| !t.lang().is_neutral()) {
            s.target_tokens += 1;
            target_types.insert(t.surface());
        }
    }
    let n = corpus.len() as f64;
    s.unique_sentences = unique.len();
    s.mean_cmi = cmi_sum / n;
    s.mean_spf = spf_sum / n;
    s.matrix_src_types = matrix_types.len();
    s.embedded_src_types = embedded_types.len();
    s.target_types = target_types.len();
    s.token_mean = token_lens.iter().sum::<usize>() as f64 / n;
    s.char_mean = char_lens.iter().sum::<usize>() as f64 / n;
    s.token_max = token_lens.iter().copied().max().unwrap_or(0);
    s.char_max = char_lens.iter().copied().max().unwrap_or(0);
    s.token_median = median(&mut token_lens);
    s.char_median = median(&mut char_lens);
    s
}

/// TSV header and row, then a `#`-prefixed human-readable summary. SPF is
/// printed as a percentage.
pub fn write_stats(w: &mut dyn Write, s: &CorpusStats) -> std::io::Result<()> {
    writeln!(
        w,
        "sentences\tunique\tcmi\tspf_pct\tmatrix_src_tokens\tembedded_src_tokens\ttgt_tokens\t\
         matrix_src_types\tembedded_src_types\ttgt_types\ttoken_mean\ttoken_median\tchar_mean\tchar_median"
    )?;
    writeln!(
        w,
        "{}\t{}\t{:.2}\t{:.2}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.2}\t{}\t{:.2}\t{}",
        s.sentences,
        s.unique_sentences,
        s.mean_cmi,
        100.0 * s.mean_spf,
        s.matrix_src_tokens,
        s.embedded_src_tokens,
        s.target_tokens,
        s.matrix_src_types,
        s.embedded_src_types,
        s.target_types,
        s.token_mean,
        s.token_median,
        s.char_mean,
        s.char_median
    )?;
    writeln!(w, "#")?;
    writeln!(w, "# sentences        {} ({} unique)", s.sentences, s.unique_sentences)?;
    writeln!(w, "# CMI              {:.2}", s.mean_cmi)?;
    writeln!(w, "# SPF              {:.2} %", 100.0 * s.mean_spf)?;
    writeln!(
        w,
        "# source tokens    {} matrix / {} embedded ({} / {} types)",
        s.matrix_src_tokens, s.embedded_src_tokens, s.matrix_src_types, s.embedded_src_types
    )?;
    writeln!(w, "# target tokens    {} ({} types)", s.target_tokens, s.target_types)?;
    writeln!(
        w,
        "# length (tokens)  mean {:.2} median {} max {}",
        s.token_mean, s.token_median, s.token_max
    )?;
    writeln!(
        w,
        "# length (chars)   mean {:.2} median {} max {}",
        s.char_mean, s.char_median, s.char_max
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{normalize_and_tokenize, sentence_from_line, LanguagePair};
    use crate::generate::CMVariant;
    use crate::metrics::{cmi, spf};

    fn record(line: &str, embedded_at: &[usize]) -> CmRecord {
        let langs = LanguagePair::new("hi", "en").unwrap();
        let mut tokens = normalize_and_tokenize(line, langs.matrix());
        for &i in embedded_at {
            tokens[i].set_lang(langs.embedded());
        }
        CmRecord {
            variant: CMVariant {
                pair_id: 0,
                variant: 0,
                switched: embedded_at.to_vec(),
                cmi: cmi(&tokens),
                spf: spf(&tokens),
                tokens,
                ppl: None,
            },
            target: sentence_from_line(0, "This security certificate is not trusted .", langs.embedded()),
        }
    }

    #[test]
    fn empty_corpus() {
        let s = corpus_stats(&[]);
        assert_eq!(s, CorpusStats::default());
    }

    #[test]
    fn certificate_sentence_lengths() {
        let s = corpus_stats(&[record("Yeh security certificate trusted nahi hai.", &[1, 2, 3])]);
        assert_eq!(s.token_mean, 7.0);
        assert_eq!(s.char_mean, 43.0);
        assert_eq!(s.char_median, 43.0);
        assert_eq!(s.mean_cmi, 50.0);
        assert_eq!(s.matrix_src_tokens, 3);
        assert_eq!(s.embedded_src_tokens, 3);
        assert_eq!(s.target_tokens, 6);
    }

    #[test]
    fn duplicates_counted_once() {
        let r = record("Yeh security certificate trusted nahi hai.", &[1]);
        let s = corpus_stats(&[r.clone(), r]);
        assert_eq!(s.sentences, 2);
        assert_eq!(s.unique_sentences, 1);
        assert!(s.token_median <= s.token_max as f64);
    }

    #[test]
    fn medians_of_even_counts() {
        let s = corpus_stats(&[record("a b", &[]), record("a b c d", &[])]);
        assert_eq!(s.token_median, 3.0);
        let mut buf = Vec::new();
        write_stats(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap().split('\t').count(), 14);
    }
}
