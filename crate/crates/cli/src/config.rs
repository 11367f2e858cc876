//! Pipeline configuration: TOML, paths relative to the config file, every
//! violation collected before failing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use codemix::assembly::{CorpusEntry, RecipeKind, SampleSize};
use codemix::generate::{FilterSpec, DEFAULT_POOL};
use codemix::noise::{Eligibility, MinLengths, NoiseRates, NoiseSpec};
use codemix::LanguagePair;
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Mandatory; kept optional here so a missing seed is reported with the
    /// other violations instead of as a parse error.
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub threads: usize,
    #[serde(default)]
    pub langs: Langs,
    pub input: Input,
    pub output: Output,
    #[serde(default)]
    pub align: AlignSection,
    #[serde(default)]
    pub generate: GenerateSection,
    #[serde(default)]
    pub translit: TranslitSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub assemble: AssembleSection,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Langs {
    pub matrix: String,
    pub embedded: String,
}

impl Default for Langs {
    fn default() -> Self {
        Langs {
            matrix: "hi".into(),
            embedded: "en".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Input {
    /// POS-tagged matrix-language side.
    pub source: PathBuf,
    /// Plain embedded-language side.
    pub target: PathBuf,
    pub inclusion: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignSection {
    pub iterations: usize,
    pub tension: f64,
    /// `false` trains plain IBM Model 1.
    pub diagonal: bool,
}

impl Default for AlignSection {
    fn default() -> Self {
        AlignSection {
            iterations: codemix::align::DEFAULT_ITERATIONS,
            tension: codemix::align::DEFAULT_TENSION,
            diagonal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateSection {
    pub pool: usize,
    pub cmi: [f64; 2],
    pub spf: [f64; 2],
    pub cap: usize,
    pub ppl_max: Option<f64>,
    /// Train an n-gram LM on the unfiltered variants and score with it.
    pub bootstrap_lm: bool,
    pub lm_order: usize,
    pub lm_min_count: usize,
    /// External perplexities; takes precedence over the bootstrap LM.
    pub scores: Option<PathBuf>,
}

impl Default for GenerateSection {
    fn default() -> Self {
        let f = FilterSpec::default();
        GenerateSection {
            pool: DEFAULT_POOL,
            cmi: [f.cmi.0, f.cmi.1],
            spf: [f.spf.0, f.spf.1],
            cap: f.cap,
            ppl_max: f.ppl_max,
            bootstrap_lm: true,
            lm_order: 3,
            lm_min_count: 2,
            scores: None,
        }
    }
}

impl GenerateSection {
    pub fn filter_spec(&self) -> FilterSpec {
        FilterSpec {
            cmi: (self.cmi[0], self.cmi[1]),
            spf: (self.spf[0], self.spf[1]),
            ppl_max: self.ppl_max,
            cap: self.cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslitSection {
    pub scheme: Option<PathBuf>,
    pub overrides: Option<PathBuf>,
    #[serde(default = "yes")]
    pub schwa_deletion: bool,
}

impl Default for TranslitSection {
    fn default() -> Self {
        TranslitSection {
            scheme: None,
            overrides: None,
            schwa_deletion: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "standard_rates")]
    pub rates: NoiseRates,
    #[serde(default)]
    pub eligibility: Eligibility,
    #[serde(default)]
    pub min_len: MinLengths,
}

fn standard_rates() -> NoiseRates {
    NoiseRates::STANDARD
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            rates: NoiseRates::STANDARD,
            eligibility: Eligibility::default(),
            min_len: MinLengths::default(),
        }
    }
}

impl NoiseSection {
    pub fn spec(&self, seed: u64) -> NoiseSpec {
        NoiseSpec {
            rates: self.rates,
            min_len: self.min_len,
            eligibility: self.eligibility,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssembleSection {
    #[serde(default = "default_recipe")]
    pub recipe: RecipeKind,
    /// Lines kept from each generated corpus; mandatory.
    pub sample: Option<SampleSize>,
    #[serde(default)]
    pub shuffle: bool,
    /// Corpora not produced by the pipeline (bn, bn_r for zcmt).
    #[serde(default)]
    pub corpus: BTreeMap<String, CorpusEntry>,
}

fn default_recipe() -> RecipeKind {
    RecipeKind::RcmtRoman
}

impl Default for AssembleSection {
    fn default() -> Self {
        AssembleSection {
            recipe: default_recipe(),
            sample: None,
            shuffle: false,
            corpus: BTreeMap::new(),
        }
    }
}

/// Corpus keys the pipeline writes itself.
pub const GENERATED_CORPORA: [&str; 3] = ["hi_c", "hi_cr", "hi_crn"];

impl PipelineConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            anyhow::anyhow!("{}:{line}: {}", origin.display(), e.message())
        })?;
        let base = origin.parent().unwrap_or(Path::new(""));
        cfg.resolve(base);
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| *p = base.join(&*p);
        fix(&mut self.input.source);
        fix(&mut self.input.target);
        fix(&mut self.output.dir);
        for p in [
            &mut self.input.inclusion,
            &mut self.generate.scores,
            &mut self.translit.scheme,
            &mut self.translit.overrides,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        for c in self.assemble.corpus.values_mut() {
            fix(&mut c.src);
            fix(&mut c.tgt);
        }
    }

    /// Every violated constraint as `field: message`.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.seed.is_none() {
            out.push("seed: required (there is no clock-based default)".to_owned());
        }
        if self.threads == 0 {
            out.push("threads: must be at least 1".to_owned());
        }
        if let Err(e) = LanguagePair::new(&self.langs.matrix, &self.langs.embedded) {
            out.push(format!("langs: {e}"));
        }

        let mut need = |field: &str, p: &Path| {
            if !p.is_file() {
                out.push(format!("{field}: no such file {}", p.display()));
            }
        };
        need("input.source", &self.input.source);
        need("input.target", &self.input.target);
        if let Some(p) = &self.input.inclusion {
            need("input.inclusion", p);
        }
        if let Some(p) = &self.generate.scores {
            need("generate.scores", p);
        }
        if let Some(p) = &self.translit.scheme {
            need("translit.scheme", p);
        }
        if let Some(p) = &self.translit.overrides {
            need("translit.overrides", p);
        }
        for (key, c) in &self.assemble.corpus {
            need(&format!("assemble.corpus.{key}.src"), &c.src);
            need(&format!("assemble.corpus.{key}.tgt"), &c.tgt);
        }

        if self.align.iterations == 0 {
            out.push("align.iterations: must be at least 1".to_owned());
        }
        if !(self.align.tension.is_finite() && self.align.tension > 0.0) {
            out.push(format!("align.tension: must be positive, got {}", self.align.tension));
        }

        let g = &self.generate;
        out.extend(g.filter_spec().violations().into_iter().map(|v| format!("generate.{v}")));
        if g.pool == 0 {
            out.push("generate.pool: must be at least 1".to_owned());
        }
        if g.lm_order == 0 {
            out.push("generate.lm_order: must be at least 1".to_owned());
        }
        if g.ppl_max.is_some() && !g.bootstrap_lm && g.scores.is_none() {
            out.push("generate.ppl_max: set but neither bootstrap_lm nor scores supplies perplexities".to_owned());
        }

        out.extend(self.noise.spec(0).violations());

        let a = &self.assemble;
        if a.sample.is_none() {
            out.push("assemble.sample: required (a line count or \"all\")".to_owned());
        }
        for key in GENERATED_CORPORA {
            if a.corpus.contains_key(key) {
                out.push(format!("assemble.corpus.{key}: written by the pipeline, cannot be configured"));
            }
        }
        if a.recipe == RecipeKind::Zcmt {
            for key in ["bn", "bn_r"] {
                if !a.corpus.contains_key(key) {
                    out.push(format!("assemble.corpus.{key}: required by recipe zcmt"));
                }
            }
        }
        out
    }
}

/// Load and check a pipeline config, reporting every violation at once.
pub fn validate_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let cfg = PipelineConfig::parse(&text, path)?;
    let v = cfg.violations();
    if !v.is_empty() {
        bail!("invalid config {}:\n  {}", path.display(), v.join("\n  "));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(body: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("src.tsv"), "यह\tDEM\n").unwrap();
        std::fs::write(dir.path().join("tgt.txt"), "this\n").unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, body).unwrap();
        (dir, path)
    }

    const MINIMAL: &str = r#"
seed = 7
[input]
source = "src.tsv"
target = "tgt.txt"
[output]
dir = "out"
[assemble]
sample = "all"
"#;

    fn error_of(body: &str) -> String {
        let (_dir, path) = setup(body);
        format!("{:#}", validate_config(&path).unwrap_err())
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let (dir, path) = setup(MINIMAL);
        let cfg = validate_config(&path).unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.input.source, dir.path().join("src.tsv"));
        assert_eq!(cfg.generate.filter_spec(), FilterSpec::default());
        assert_eq!(cfg.noise.rates, NoiseRates::STANDARD);
        assert_eq!(cfg.assemble.recipe, RecipeKind::RcmtRoman);
        assert_eq!(cfg.assemble.sample, Some(SampleSize::All(codemix::assembly::AllLines::All)));
    }

    #[test]
    fn noise_rates_over_one_name_noise() {
        let body = format!("{MINIMAL}\n[noise.rates]\nswitch = 0.6\nomission = 0.6\n");
        let e = error_of(&body);
        assert!(e.contains("noise: rates sum to 1.2000"), "{e}");
    }

    #[test]
    fn inverted_cmi_window() {
        let body = format!("{MINIMAL}\n[generate]\ncmi = [40.0, 20.0]\n");
        assert!(error_of(&body).contains("generate.cmi: cmi window inverted"));
    }

    #[test]
    fn all_violations_are_collected() {
        let body = r#"
[input]
source = "missing.tsv"
target = "tgt.txt"
[output]
dir = "out"
[generate]
spf = [0.9, 0.1]
ppl_max = 100.0
bootstrap_lm = false
[assemble]
recipe = "zcmt"
"#;
        let e = error_of(body);
        for needle in [
            "seed: required",
            "input.source: no such file",
            "missing.tsv",
            "generate.spf: spf window inverted",
            "generate.ppl_max",
            "assemble.sample: required",
            "assemble.corpus.bn: required by recipe zcmt",
            "assemble.corpus.bn_r: required by recipe zcmt",
        ] {
            assert!(e.contains(needle), "missing {needle:?} in {e}");
        }
    }

    #[test]
    fn unknown_fields_are_rejected_with_a_line() {
        let body = format!("{MINIMAL}\n[align]\nitrations = 3\n");
        let e = error_of(&body);
        assert!(e.contains("cfg.toml:") && e.contains("itrations"), "{e}");
    }

    #[test]
    fn generated_corpora_cannot_be_overridden() {
        let body = format!("{MINIMAL}\n[assemble.corpus.hi_c]\nsrc = \"tgt.txt\"\ntgt = \"tgt.txt\"\nsample = 1\n");
        assert!(error_of(&body).contains("assemble.corpus.hi_c: written by the pipeline"));
    }
}
