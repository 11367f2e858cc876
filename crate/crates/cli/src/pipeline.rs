//! The full run: align → dict → generate → translit → noise → assemble →
//! stats. Every stage reads its predecessor's output file back from disk.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use codemix::assembly::{CorpusEntry, RecipeConfig};
use codemix::{LanguagePair, LmConfig, OverrideMap, TrainConfig, TranslitScheme, Transliterator};

use crate::config::{validate_config, PipelineConfig};
use crate::report::Report;
use crate::stages::{self, Scoring};

/// File names inside the output directory.
pub mod files {
    pub const ALIGNMENT: &str = "alignments.pharaoh";
    pub const TABLE_FWD: &str = "ttable.fwd.tsv";
    pub const TABLE_BWD: &str = "ttable.bwd.tsv";
    pub const SUBSTITUTIONS: &str = "substitutions.jsonl";
    pub const UNFILTERED: &str = "cm.unfiltered.tsv";
    pub const LM: &str = "lm.bin";
    pub const CM: &str = "cm.tsv";
    pub const ROMAN: &str = "cm.roman.tsv";
    pub const NOISY: &str = "cm.noisy.tsv";
    pub const NOISE_REPORT: &str = "noise.tsv";
    pub const HI_C: &str = "hi_c.txt";
    pub const HI_CR: &str = "hi_cr.txt";
    pub const HI_CRN: &str = "hi_crn.txt";
    pub const EN: &str = "en.txt";
    pub const TRAIN_SRC: &str = "train.src";
    pub const TRAIN_TGT: &str = "train.tgt";
    pub const STATS: &str = "stats.tsv";
    pub const REPORT: &str = "report.tsv";
}

pub fn run(config_path: &Path, threads_override: Option<usize>) -> Result<PathBuf> {
    let cfg = validate_config(config_path)?;
    let mut report = Report::new("pipeline");
    report.file("input.config", config_path)?;
    run_config(&cfg, threads_override, &mut report)?;
    let path = cfg.output.dir.join(files::REPORT);
    report.write(&path)?;
    Ok(path)
}

/// Run a validated config, recording into `report`.
pub fn run_config(cfg: &PipelineConfig, threads_override: Option<usize>, report: &mut Report) -> Result<()> {
    let seed = cfg.seed.context("seed: required")?;
    let threads = threads_override.unwrap_or(cfg.threads);
    let langs = LanguagePair::new(&cfg.langs.matrix, &cfg.langs.embedded)?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let out = |name: &str| dir.join(name);
    report.set("seed", seed);
    report.set("threads", threads);
    report.set("langs", format_args!("{}-{}", cfg.langs.matrix, cfg.langs.embedded));

    let src = &cfg.input.source;
    let tgt = &cfg.input.target;
    let (alignment, table_fwd, table_bwd) = (out(files::ALIGNMENT), out(files::TABLE_FWD), out(files::TABLE_BWD));
    report.time("align", |r| {
        stages::align(
            &stages::AlignJob {
                src,
                tgt,
                langs: &langs,
                train: TrainConfig {
                    iterations: cfg.align.iterations,
                    tension: cfg.align.diagonal.then_some(cfg.align.tension),
                    threads,
                },
                out: &alignment,
                table_fwd: Some(&table_fwd),
                table_bwd: Some(&table_bwd),
            },
            r,
        )
    })?;

    let subs = out(files::SUBSTITUTIONS);
    let inclusion = cfg.input.inclusion.as_deref();
    report.time("dict", |r| {
        stages::dict(
            &stages::DictJob {
                src,
                tgt,
                langs: &langs,
                alignment: &alignment,
                inclusion,
                out: &subs,
            },
            r,
        )
    })?;

    let g = &cfg.generate;
    let (unfiltered, lm_path, cm) = (out(files::UNFILTERED), out(files::LM), out(files::CM));
    let scoring = match (&g.scores, g.bootstrap_lm) {
        (Some(p), _) => Scoring::Scores(p),
        (None, true) => Scoring::Bootstrap {
            config: LmConfig {
                order: g.lm_order,
                min_count: g.lm_min_count,
                weights: None,
            },
            out: Some(&lm_path),
        },
        (None, false) => Scoring::None,
    };
    report.time("generate", |r| {
        stages::generate(
            &stages::GenerateJob {
                src,
                tgt,
                langs: &langs,
                subs: &subs,
                inclusion,
                spec: g.filter_spec(),
                seed,
                pool: g.pool,
                threads,
                scoring,
                unfiltered_out: Some(&unfiltered),
                out: &cm,
            },
            r,
        )
    })?;

    let scheme = match &cfg.translit.scheme {
        Some(p) => {
            report.file("translit.input.scheme", p)?;
            TranslitScheme::load(p)?
        }
        None => TranslitScheme::devanagari(),
    };
    let overrides = match &cfg.translit.overrides {
        Some(p) => {
            report.file("translit.input.overrides", p)?;
            OverrideMap::load(p)?
        }
        None => OverrideMap::default(),
    };
    let translit = Transliterator::new(scheme.with_schwa_deletion(cfg.translit.schwa_deletion), overrides);
    let roman = out(files::ROMAN);
    report.time("translit", |r| {
        stages::translit(
            &stages::TranslitJob {
                input: &cm,
                langs: &langs,
                translit: &translit,
                out: &roman,
            },
            r,
        )
    })?;

    let (noisy, noise_report) = (out(files::NOISY), out(files::NOISE_REPORT));
    report.time("noise", |r| {
        stages::noise(
            &stages::NoiseJob {
                input: &roman,
                langs: &langs,
                spec: cfg.noise.spec(seed),
                out: &noisy,
                noise_report: &noise_report,
            },
            r,
        )
    })?;

    // plain views feeding assembly; the target side is shared
    let en = out(files::EN);
    report.time("plain", |_| {
        stages::write_plain_sides(&cm, &langs, &out(files::HI_C), Some(&en))?;
        stages::write_plain_sides(&roman, &langs, &out(files::HI_CR), None)?;
        stages::write_plain_sides(&noisy, &langs, &out(files::HI_CRN), None)?;
        Ok(())
    })?;

    let sample = cfg.assemble.sample.context("assemble.sample: required")?;
    let mut corpus = cfg.assemble.corpus.clone();
    for (key, file) in [("hi_c", files::HI_C), ("hi_cr", files::HI_CR), ("hi_crn", files::HI_CRN)] {
        corpus.insert(
            key.to_owned(),
            CorpusEntry {
                src: out(file),
                tgt: en.clone(),
                sample,
            },
        );
    }
    let recipe = RecipeConfig {
        recipe: cfg.assemble.recipe,
        shuffle: cfg.assemble.shuffle,
        corpus,
    };
    let (train_src, train_tgt) = (out(files::TRAIN_SRC), out(files::TRAIN_TGT));
    report.time("assemble", |r| {
        stages::assemble(
            &stages::AssembleJob {
                recipe: &recipe,
                seed,
                out_src: &train_src,
                out_tgt: &train_tgt,
            },
            r,
        )
    })?;

    let stats = out(files::STATS);
    report.time("stats", |r| stages::stats(&cm, &langs, Some(&stats), r))?;
    Ok(())
}
