use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AlignmentLinks;
use crate::corpus::ParallelPair;
use crate::error::{Error, Result};
use crate::inclusion::InclusionList;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    pub src: String,
    pub tgt: String,
    pub pos: String,
}

/// One-to-one source→target word map for a single sentence, restricted to
/// inclusion-list POS tags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubstitutionTable {
    pub id: usize,
    pub entries: BTreeMap<usize, Substitution>,
}

impl SubstitutionTable {
    pub fn empty(id: usize) -> Self {
        SubstitutionTable {
            id,
            entries: BTreeMap::new(),
        }
    }

    pub fn get(&self, src_idx: usize) -> Option<&Substitution> {
        self.entries.get(&src_idx)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Keep source word `i` iff it has exactly one link `(i, j)`, target `j`
/// has no other link, and the source POS tag is in the inclusion list.
pub fn extract_substitution_table(
    pair: &ParallelPair,
    links: &AlignmentLinks,
    inclusion: &InclusionList,
) -> Result<SubstitutionTable> {
    if let Some(index) = pair.source.tokens.iter().position(|t| t.pos().is_none()) {
        return Err(Error::MissingPos {
            sentence: pair.id,
            index,
        });
    }
    if !links.fits(pair.source.len(), pair.target.len()) {
        return Err(Error::InvalidArgument(format!(
            "sentence {}: alignment link outside {}x{} grid",
            pair.id,
            pair.source.len(),
            pair.target.len()
        )));
    }
    let mut src_degree = vec![0usize; pair.source.len()];
    let mut tgt_degree = vec![0usize; pair.target.len()];
    for (i, j) in links.iter() {
        src_degree[i] += 1;
        tgt_degree[j] += 1;
    }
    let mut entries = BTreeMap::new();
    for (i, j) in links.iter() {
        if src_degree[i] != 1 || tgt_degree[j] != 1 {
            continue;
        }
        let src = &pair.source.tokens[i];
        let pos = src.pos().expect("checked above");
        if !inclusion.contains(pos) {
            continue;
        }
        entries.insert(
            i,
            Substitution {
                src: src.surface().to_owned(),
                tgt: pair.target.tokens[j].surface().to_owned(),
                pos: pos.to_owned(),
            },
        );
    }
    Ok(SubstitutionTable { id: pair.id, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{sentence_from_line, LanguagePair, Sentence};

    fn tagged_pair(src: &[(&str, &str)], tgt: &str) -> ParallelPair {
        let langs = LanguagePair::new("hi", "en").unwrap();
        let line = src.iter().map(|(w, _)| *w).collect::<Vec<_>>().join(" ");
        let mut s: Sentence = sentence_from_line(0, &line, langs.matrix());
        for (tok, (_, pos)) in s.tokens.iter_mut().zip(src) {
            *tok = tok.clone().with_pos(*pos);
        }
        ParallelPair::new(s, sentence_from_line(0, tgt, langs.embedded())).unwrap()
    }

    fn certificate_pair() -> ParallelPair {
        tagged_pair(
            &[
                ("यह", "DEM"),
                ("सुरक्षा", "NN"),
                ("प्रमाणपत्र", "NN"),
                ("विश्वशनीय", "JJ"),
                ("नहीं", "NEG"),
                ("है", "VAUX"),
                ("।", "SYM"),
            ],
            "This security certificate is not trusted .",
        )
    }

    #[test]
    fn one_to_many_excluded() {
        let pair = certificate_pair();
        let links: AlignmentLinks = [(1, 1), (1, 2), (2, 3)].into_iter().collect();
        let table = extract_substitution_table(&pair, &links, &InclusionList::default()).unwrap();
        assert!(table.get(1).is_none());
        assert!(table.get(2).is_none() || table.get(2).unwrap().tgt == "is");
    }

    #[test]
    fn many_to_one_excluded() {
        let pair = certificate_pair();
        let links: AlignmentLinks = [(1, 1), (2, 1)].into_iter().collect();
        let table = extract_substitution_table(&pair, &links, &InclusionList::default()).unwrap();
        assert!(table.is_empty());
    }

    #[test]
    fn noun_maps_one_to_one() {
        let pair = certificate_pair();
        let links: AlignmentLinks = [(0, 0), (1, 1), (2, 2), (3, 5), (4, 4), (5, 3), (6, 6)]
            .into_iter()
            .collect();
        let table = extract_substitution_table(&pair, &links, &InclusionList::default()).unwrap();
        assert_eq!(table.get(1).unwrap().src, "सुरक्षा");
        assert_eq!(table.get(1).unwrap().tgt, "security");
        assert_eq!(table.get(3).unwrap().tgt, "trusted");
        assert_eq!(table.entries.keys().copied().collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn verb_excluded() {
        let pair = tagged_pair(&[("वह", "PRP"), ("खेल", "VM"), ("रहा", "VAUX"), ("है", "VAUX")], "He is playing");
        let links: AlignmentLinks = [(0, 0), (1, 2)].into_iter().collect();
        let table = extract_substitution_table(&pair, &links, &InclusionList::default()).unwrap();
        assert!(table.is_empty());
    }

    #[test]
    fn missing_pos_is_error() {
        let langs = LanguagePair::new("hi", "en").unwrap();
        let pair = ParallelPair::new(
            sentence_from_line(0, "यह सुरक्षा", langs.matrix()),
            sentence_from_line(0, "this security", langs.embedded()),
        )
        .unwrap();
        let links: AlignmentLinks = [(1, 1)].into_iter().collect();
        assert!(matches!(
            extract_substitution_table(&pair, &links, &InclusionList::default()),
            Err(Error::MissingPos { index: 0, .. })
        ));
    }

    #[test]
    fn out_of_range_link_is_error() {
        let links: AlignmentLinks = [(1, 40)].into_iter().collect();
        assert!(extract_substitution_table(&certificate_pair(), &links, &InclusionList::default()).is_err());
    }
}
