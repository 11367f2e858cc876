//! Building blocks for synthetic code-mixed parallel corpora: word
//! alignment, switch-set generation, transliteration, noise injection,
//! fluency scoring, metrics and corpus assembly.

pub mod align;
pub mod assembly;
pub mod corpus;
pub mod error;
pub mod fluency;
pub mod generate;
pub mod inclusion;
pub mod io;
pub mod metrics;
pub mod noise;
pub mod seed;
pub mod translit;

pub use align::{
    align_corpus, extract_substitution_table, symmetrize, viterbi_align, AlignmentLinks,
    Substitution, SubstitutionTable, TrainConfig, Training, TranslationTable,
};
pub use assembly::{assemble_joint, recipe_directions, undersample, Direction, RecipeConfig};
pub use corpus::{LangCode, LangTag, LanguagePair, ParallelPair, Sentence, TaggedToken};
pub use error::{Error, Result};
pub use fluency::{ExternalScores, LmConfig, NgramLM};
pub use generate::{
    filter_variants, generate_cm_corpus, CMVariant, CmRecord, FilterSpec, FluencyScorer,
    GenerateOptions, GenerateReport,
};
pub use inclusion::InclusionList;
pub use noise::{inject_noise, NoiseReport, NoiseSpec};
pub use metrics::{bleu, cmi, corpus_stats, spf, BleuScore, CorpusStats};
pub use translit::{OverrideMap, TranslitReport, TranslitScheme, Transliterator};

/// Toolkit version, reported by the command line tool.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
