//! One function per pipeline stage. Each reads its inputs from disk, writes
//! its outputs atomically and records hashes and counts in a [`Report`].

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use codemix::align::{read_pharaoh, read_substitutions, write_pharaoh, write_substitutions, write_table};
use codemix::assembly::DirectionSummary;
use codemix::corpus::{load_plain, load_tagged, zip_pairs};
use codemix::generate::{read_cm_tsv, write_cm_tsv};
use codemix::io::atomic_write;
use codemix::metrics::write_stats;
use codemix::noise::NoiseKind;
use codemix::{
    align_corpus, assemble_joint, corpus_stats, extract_substitution_table, generate_cm_corpus, inject_noise,
    recipe_directions, CmRecord, ExternalScores, FilterSpec, FluencyScorer, GenerateOptions, InclusionList,
    LanguagePair, LmConfig, NgramLM, NoiseSpec, ParallelPair, RecipeConfig, TrainConfig, Transliterator,
};

use crate::report::Report;

/// Write a file whose serializer reports core errors.
fn write_with(path: &Path, f: impl FnOnce(&mut dyn Write) -> codemix::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    atomic_write(path, |w| w.write_all(&buf))?;
    Ok(())
}

fn write_io(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    atomic_write(path, f)?;
    Ok(())
}

fn load_pairs(src: &Path, tgt: &Path, langs: &LanguagePair, report: &mut Report, stage: &str) -> Result<Vec<ParallelPair>> {
    let s = load_tagged(src, langs.matrix())?;
    let t = load_plain(tgt, langs.embedded())?;
    report.file(&format!("{stage}.input.src"), src)?;
    report.file(&format!("{stage}.input.tgt"), tgt)?;
    Ok(zip_pairs(s, src, t, tgt)?)
}

fn load_inclusion(path: Option<&Path>, report: &mut Report, stage: &str) -> Result<InclusionList> {
    match path {
        Some(p) => {
            report.file(&format!("{stage}.input.inclusion"), p)?;
            Ok(InclusionList::load(p)?)
        }
        None => Ok(InclusionList::default()),
    }
}

pub struct AlignJob<'a> {
    pub src: &'a Path,
    pub tgt: &'a Path,
    pub langs: &'a LanguagePair,
    pub train: TrainConfig,
    pub out: &'a Path,
    pub table_fwd: Option<&'a Path>,
    pub table_bwd: Option<&'a Path>,
}

pub fn align(job: &AlignJob, report: &mut Report) -> Result<()> {
    let pairs = load_pairs(job.src, job.tgt, job.langs, report, "align")?;
    let (fwd, bwd, links) = align_corpus(&pairs, &job.train)?;
    write_io(job.out, |w| write_pharaoh(w, &links))?;
    report.file("align.output.alignment", job.out)?;
    for (name, path, training) in [("fwd", job.table_fwd, &fwd), ("bwd", job.table_bwd, &bwd)] {
        if let Some(p) = path {
            write_io(p, |w| write_table(w, &training.table))?;
            report.file(&format!("align.output.table_{name}"), p)?;
        }
        if let Some(ll) = training.log_likelihood.last() {
            report.set(format!("align.{name}.log_likelihood"), format_args!("{ll:.6}"));
        }
    }
    let n_links: usize = links.iter().map(|l| l.len()).sum();
    report.set("align.iterations", job.train.iterations);
    report.set(
        "align.tension",
        job.train.tension.map_or_else(|| "ibm1".to_owned(), |t| t.to_string()),
    );
    report.set("align.count.pairs", pairs.len());
    report.set("align.count.links", n_links);
    report.note(format!("align: {} pairs, {n_links} symmetrized links", pairs.len()));
    Ok(())
}

pub struct DictJob<'a> {
    pub src: &'a Path,
    pub tgt: &'a Path,
    pub langs: &'a LanguagePair,
    pub alignment: &'a Path,
    pub inclusion: Option<&'a Path>,
    pub out: &'a Path,
}

pub fn dict(job: &DictJob, report: &mut Report) -> Result<()> {
    let pairs = load_pairs(job.src, job.tgt, job.langs, report, "dict")?;
    let links = read_pharaoh(job.alignment)?;
    report.file("dict.input.alignment", job.alignment)?;
    if links.len() != pairs.len() {
        bail!(
            "{}: {} alignment lines for {} sentence pairs",
            job.alignment.display(),
            links.len(),
            pairs.len()
        );
    }
    let inclusion = load_inclusion(job.inclusion, report, "dict")?;
    let tables = pairs
        .iter()
        .zip(&links)
        .map(|(p, l)| extract_substitution_table(p, l, &inclusion))
        .collect::<codemix::Result<Vec<_>>>()?;
    write_with(job.out, |w| write_substitutions(w, &tables))?;
    report.file("dict.output.substitutions", job.out)?;
    let entries: usize = tables.iter().map(|t| t.len()).sum();
    let empty = tables.iter().filter(|t| t.is_empty()).count();
    report.set("dict.count.tables", tables.len());
    report.set("dict.count.entries", entries);
    report.set("dict.count.empty_tables", empty);
    report.note(format!("dict: {entries} substitution entries, {empty} sentences without any"));
    Ok(())
}

/// Where perplexities come from.
pub enum Scoring<'a> {
    None,
    Lm(&'a Path),
    Scores(&'a Path),
    /// Train an n-gram LM on the unfiltered variants.
    Bootstrap { config: LmConfig, out: Option<&'a Path> },
}

pub struct GenerateJob<'a> {
    pub src: &'a Path,
    pub tgt: &'a Path,
    pub langs: &'a LanguagePair,
    pub subs: &'a Path,
    pub inclusion: Option<&'a Path>,
    pub spec: FilterSpec,
    pub seed: u64,
    pub pool: usize,
    pub threads: usize,
    pub scoring: Scoring<'a>,
    pub unfiltered_out: Option<&'a Path>,
    pub out: &'a Path,
}

pub fn generate(job: &GenerateJob, report: &mut Report) -> Result<()> {
    let tables = read_substitutions(job.subs)?;
    report.file("generate.input.substitutions", job.subs)?;
    let pairs = load_pairs(job.src, job.tgt, job.langs, report, "generate")?;
    let inclusion = load_inclusion(job.inclusion, report, "generate")?;
    let opts = GenerateOptions {
        seed: job.seed,
        pool: job.pool,
        embedded: job.langs.embedded(),
        threads: job.threads,
    };

    let needs_pool = job.unfiltered_out.is_some() || matches!(job.scoring, Scoring::Bootstrap { .. });
    let unfiltered = if needs_pool {
        let (records, r) = generate_cm_corpus(&pairs, &tables, &inclusion, &FilterSpec::permissive(job.pool), &opts, None)?;
        report.set("generate.count.unfiltered", r.variants_emitted);
        if let Some(p) = job.unfiltered_out {
            write_io(p, |w| write_cm_tsv(w, &records))?;
            report.file("generate.output.unfiltered", p)?;
        }
        records
    } else {
        Vec::new()
    };

    let scorer: Option<Box<dyn FluencyScorer + Sync>> = match &job.scoring {
        Scoring::None => None,
        Scoring::Lm(p) => {
            report.file("generate.input.lm", p)?;
            Some(Box::new(NgramLM::load_file(p)?))
        }
        Scoring::Scores(p) => {
            report.file("generate.input.scores", p)?;
            Some(Box::new(ExternalScores::load(p)?))
        }
        Scoring::Bootstrap { config, out } => {
            let text: Vec<Vec<&str>> = unfiltered
                .iter()
                .map(|r| r.variant.tokens.iter().map(|t| t.surface()).collect())
                .collect();
            let lm = NgramLM::train(&text, config).context("training the bootstrap language model")?;
            report.set("generate.lm.order", lm.order());
            report.set("generate.lm.vocab", lm.vocab_size());
            if let Some(p) = out {
                lm.save_file(p)?;
                report.file("generate.output.lm", p)?;
            }
            Some(Box::new(lm))
        }
    };

    let (records, r) = generate_cm_corpus(&pairs, &tables, &inclusion, &job.spec, &opts, scorer.as_deref())?;
    write_io(job.out, |w| write_cm_tsv(w, &records))?;
    report.file("generate.output.corpus", job.out)?;
    report.set("generate.seed", job.seed);
    report.set("generate.pool", job.pool);
    report.set(
        "generate.filter",
        format_args!(
            "cmi=[{},{}] spf=[{},{}] cap={} ppl_max={}",
            job.spec.cmi.0,
            job.spec.cmi.1,
            job.spec.spf.0,
            job.spec.spf.1,
            job.spec.cap,
            job.spec.ppl_max.map_or_else(|| "none".to_owned(), |p| p.to_string())
        ),
    );
    report.set("generate.count.pairs", r.pairs);
    report.set("generate.count.pairs_without_candidates", r.pairs_without_candidates);
    report.set("generate.count.pairs_filtered_out", r.pairs_filtered_out);
    report.set("generate.count.sampled", r.variants_sampled);
    report.set("generate.count.emitted", r.variants_emitted);
    report.note(format!(
        "generate: {} variants kept of {} sampled over {} pairs",
        r.variants_emitted, r.variants_sampled, r.pairs
    ));
    Ok(())
}

pub struct TranslitJob<'a> {
    pub input: &'a Path,
    pub langs: &'a LanguagePair,
    pub translit: &'a Transliterator,
    pub out: &'a Path,
}

pub fn translit(job: &TranslitJob, report: &mut Report) -> Result<()> {
    let mut records = read_cm_tsv(job.input, job.langs)?;
    report.file("translit.input.corpus", job.input)?;
    let r = job.translit.romanize_records(&mut records)?;
    write_io(job.out, |w| write_cm_tsv(w, &records))?;
    report.file("translit.output.corpus", job.out)?;
    report.set("translit.schwa_deletion", job.translit.scheme.schwa_deletion());
    report.set("translit.rules", job.translit.scheme.len());
    report.set("translit.overrides", job.translit.overrides.len());
    for (k, v) in r.rows() {
        report.set(format!("translit.count.{k}"), v);
    }
    report.note(format!(
        "translit: {} tokens, {} by rule, {} overridden, {} unknown code points",
        r.tokens, r.by_rule, r.overridden, r.unknown_codepoints
    ));
    Ok(())
}

pub struct NoiseJob<'a> {
    pub input: &'a Path,
    pub langs: &'a LanguagePair,
    pub spec: NoiseSpec,
    pub out: &'a Path,
    pub noise_report: &'a Path,
}

pub fn noise(job: &NoiseJob, report: &mut Report) -> Result<()> {
    let records = read_cm_tsv(job.input, job.langs)?;
    report.file("noise.input.corpus", job.input)?;
    let (mut variants, targets): (Vec<_>, Vec<_>) = records.into_iter().map(|r| (r.variant, r.target)).unzip();
    let r = inject_noise(&mut variants, &job.spec)?;
    let records: Vec<CmRecord> = variants
        .into_iter()
        .zip(targets)
        .map(|(variant, target)| CmRecord { variant, target })
        .collect();
    write_io(job.out, |w| write_cm_tsv(w, &records))?;
    write_io(job.noise_report, |w| r.write_tsv(w, &job.spec))?;
    report.file("noise.output.corpus", job.out)?;
    report.file("noise.output.report", job.noise_report)?;
    report.set("noise.seed", job.spec.seed);
    report.set("noise.rates", job.spec.rates);
    report.set("noise.count.tokens", r.tokens);
    report.set("noise.count.eligible", r.eligible);
    for k in NoiseKind::ALL {
        report.set(format!("noise.count.{}", k.name()), r.kind(k).applied);
    }
    report.set("noise.count.fallbacks", r.fallbacks());
    report.note(format!(
        "noise: {} of {} eligible tokens perturbed ({:.2}%)",
        r.perturbed(),
        r.eligible,
        100.0 * r.perturbed_fraction()
    ));
    Ok(())
}

pub struct AssembleJob<'a> {
    pub recipe: &'a RecipeConfig,
    pub seed: u64,
    pub out_src: &'a Path,
    pub out_tgt: &'a Path,
}

pub fn assemble(job: &AssembleJob, report: &mut Report) -> Result<Vec<DirectionSummary>> {
    let dirs = recipe_directions(job.recipe)?;
    let mut seen: Vec<&PathBuf> = Vec::new();
    for d in &dirs {
        for p in [&d.source, &d.target] {
            if !seen.contains(&p) {
                seen.push(p);
            }
        }
    }
    for (i, p) in seen.iter().enumerate() {
        report.file(&format!("assemble.input.{i}"), p)?;
    }
    let out = assemble_joint(&dirs, job.seed, job.recipe.shuffle)?;
    out.write(job.out_src, job.out_tgt)?;
    report.file("assemble.output.src", job.out_src)?;
    report.file("assemble.output.tgt", job.out_tgt)?;
    report.set("assemble.recipe", job.recipe.recipe);
    report.set("assemble.seed", job.seed);
    report.set("assemble.shuffle", job.recipe.shuffle);
    for d in &out.directions {
        report.set(
            format!("assemble.direction.{}", d.name),
            format_args!("{}\t{}/{}", d.proxy, d.lines_out, d.lines_in),
        );
    }
    report.set("assemble.count.directions", out.directions.len());
    report.set("assemble.count.lines", out.source.len());
    report.note(format!(
        "assemble: {} lines over {} directions ({})",
        out.source.len(),
        out.directions.len(),
        job.recipe.recipe
    ));
    Ok(out.directions)
}

/// Corpus statistics, to `out` or stdout.
pub fn stats(input: &Path, langs: &LanguagePair, out: Option<&Path>, report: &mut Report) -> Result<()> {
    let records = read_cm_tsv(input, langs)?;
    report.file("stats.input.corpus", input)?;
    let s = corpus_stats(&records);
    match out {
        Some(p) => {
            write_io(p, |w| write_stats(w, &s))?;
            report.file("stats.output.stats", p)?;
        }
        None => write_stats(&mut std::io::stdout().lock(), &s)?,
    }
    report.set("stats.count.sentences", s.sentences);
    report.set("stats.mean_cmi", format_args!("{:.4}", s.mean_cmi));
    report.set("stats.mean_spf", format_args!("{:.4}", s.mean_spf));
    report.note(format!(
        "stats: {} sentences, mean CMI {:.2}, mean SPF {:.2}%",
        s.sentences,
        s.mean_cmi,
        100.0 * s.mean_spf
    ));
    Ok(())
}

/// Plain one-sentence-per-line views of a CM corpus: source side and
/// target side.
pub fn write_plain_sides(input: &Path, langs: &LanguagePair, src_out: &Path, tgt_out: Option<&Path>) -> Result<usize> {
    let records = read_cm_tsv(input, langs)?;
    let src: Vec<String> = records.iter().map(|r| r.variant.text()).collect();
    codemix::assembly::write_lines(src_out, &src)?;
    if let Some(t) = tgt_out {
        let tgt: Vec<String> = records.iter().map(|r| r.target.text()).collect();
        codemix::assembly::write_lines(t, &tgt)?;
    }
    Ok(records.len())
}
