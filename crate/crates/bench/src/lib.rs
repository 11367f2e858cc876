//! Synthetic inputs shared by the benchmarks.

use codemix::corpus::sentence_from_line;
use codemix::{CmRecord, LanguagePair, ParallelPair, Sentence, TaggedToken};

const NOUNS: [(&str, &str); 8] = [
    ("सुरक्षा", "security"),
    ("प्रमाणपत्र", "certificate"),
    ("किताब", "book"),
    ("कमरा", "room"),
    ("शहर", "city"),
    ("पानी", "water"),
    ("नौकरी", "job"),
    ("योजना", "plan"),
];
const ADJS: [(&str, &str); 4] = [("नया", "new"), ("पुराना", "old"), ("सुंदर", "beautiful"), ("ज़रूरी", "important")];

pub fn langs() -> LanguagePair {
    LanguagePair::new("hi", "en").expect("valid codes")
}

fn tagged(id: usize, words: &[(&str, &str)]) -> Sentence {
    let line = words.iter().map(|(w, _)| *w).collect::<Vec<_>>().join(" ");
    let mut s = sentence_from_line(id, &line, langs().matrix());
    for (t, (_, pos)) in s.tokens.iter_mut().zip(words) {
        *t = t.clone().with_pos(*pos);
    }
    s
}

/// `n` tagged pairs of the form "this N1 and N2 are ADJ".
pub fn bitext(n: usize) -> Vec<ParallelPair> {
    (0..n)
        .map(|i| {
            let (n1, e1) = NOUNS[i % NOUNS.len()];
            let (n2, e2) = NOUNS[(i / NOUNS.len() + 3) % NOUNS.len()];
            let (a, ea) = ADJS[(i / 3) % ADJS.len()];
            let src = tagged(
                i,
                &[("यह", "DEM"), (n1, "NN"), ("और", "CC"), (n2, "NN"), (a, "JJ"), ("हैं", "VM"), ("।", "SYM")],
            );
            let tgt = sentence_from_line(i, &format!("this {e1} and {e2} are {ea} ."), langs().embedded());
            ParallelPair::new(src, tgt).expect("shared id")
        })
        .collect()
}

/// Devanagari matrix words for transliteration.
pub fn devanagari_words() -> Vec<&'static str> {
    NOUNS.iter().chain(&ADJS).map(|(w, _)| *w).collect()
}

/// Records whose matrix tokens are already romanized, for noise injection.
pub fn romanized_records(n: usize) -> Vec<CmRecord> {
    const WORDS: [&str; 6] = ["suraksha", "kitaab", "kamra", "naukari", "yojana", "sundar"];
    let hi = langs().matrix();
    (0..n)
        .map(|i| {
            let tokens: Vec<TaggedToken> = (0..8)
                .map(|j| {
                    let w = WORDS[(i + j) % WORDS.len()];
                    TaggedToken::new(w, hi).and_then(|t| t.into_transliterated(w)).expect("ascii word")
                })
                .collect();
            let mut variant = codemix::CMVariant {
                pair_id: i,
                variant: 0,
                switched: vec![],
                tokens,
                cmi: 0.0,
                spf: 0.0,
                ppl: None,
            };
            variant.rescore();
            CmRecord {
                variant,
                target: sentence_from_line(i, "placeholder target", langs().embedded()),
            }
        })
        .collect()
}
