//! Code-mixed corpus TSV:
//! `id, variant, cm_source, target, lang_tags, cmi, spf, ppl` with a header row.

use std::io::Write;
use std::path::Path;

use super::CMVariant;
use crate::corpus::{normalize_and_tokenize, LangTag, LanguagePair, Sentence, TaggedToken};
use crate::error::{Error, Result};
use crate::io::read_lines;
use crate::metrics::{cmi, spf};

pub const HEADER: &str = "id\tvariant\tcm_source\ttarget\tlang_tags\tcmi\tspf\tppl";

/// A generated variant together with its untouched target sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct CmRecord {
    pub variant: CMVariant,
    pub target: Sentence,
}

pub fn write_cm_tsv(w: &mut dyn Write, records: &[CmRecord]) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for r in records {
        let v = &r.variant;
        let ppl = v.ppl.map_or_else(|| "-".to_owned(), |p| format!("{p:.4}"));
        let tags = v.tokens.iter().map(|t| t.lang().label().to_owned()).collect::<Vec<_>>().join(" ");
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{}",
            v.pair_id,
            v.variant,
            v.text(),
            r.target.text(),
            tags,
            v.cmi,
            v.spf,
            ppl
        )?;
    }
    Ok(())
}

/// Read a corpus written by [`write_cm_tsv`]. Matrix-language tokens made
/// only of ASCII characters are marked as transliterated; CMI and SPF are
/// recomputed from the language tags.
pub fn read_cm_tsv(path: &Path, langs: &LanguagePair) -> Result<Vec<CmRecord>> {
    let lines = read_lines(path)?;
    let mut out = Vec::with_capacity(lines.len());
    for (n, line) in lines.iter().enumerate() {
        let lineno = n + 1;
        if n == 0 && line == HEADER {
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let bad = |m: String| Error::parse(path, lineno, m);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 8 {
            return Err(bad(format!("expected 8 columns, found {}", cols.len())));
        }
        let pair_id: usize = cols[0].parse().map_err(|_| bad(format!("bad id {:?}", cols[0])))?;
        let variant: usize = cols[1]
            .parse()
            .map_err(|_| bad(format!("bad variant {:?}", cols[1])))?;
        let surfaces: Vec<&str> = cols[2].split(' ').filter(|s| !s.is_empty()).collect();
        let labels: Vec<&str> = cols[4].split(' ').filter(|s| !s.is_empty()).collect();
        if surfaces.len() != labels.len() {
            return Err(bad(format!("{} tokens but {} language tags", surfaces.len(), labels.len())));
        }
        let mut tokens = Vec::with_capacity(surfaces.len());
        for (s, l) in surfaces.iter().zip(&labels) {
            let lang = langs
                .parse_tag(l)
                .ok_or_else(|| bad(format!("unknown language tag {l:?}")))?;
            let mut tok = TaggedToken::new(*s, lang).map_err(|e| bad(e.to_string()))?;
            tok.set_transliterated(lang.is_matrix() && s.is_ascii());
            tokens.push(tok);
        }
        let ppl = match cols[7] {
            "-" => None,
            p => Some(p.parse::<f64>().map_err(|_| bad(format!("bad ppl {p:?}")))?),
        };
        let switched = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| matches!(t.lang(), LangTag::Embedded(_)))
            .map(|(i, _)| i)
            .collect();
        let target = Sentence::new(pair_id, normalize_and_tokenize(cols[3], langs.embedded()));
        out.push(CmRecord {
            variant: CMVariant {
                pair_id,
                variant,
                switched,
                cmi: cmi(&tokens),
                spf: spf(&tokens),
                tokens,
                ppl,
            },
            target,
        });
    }
    Ok(out)
}
