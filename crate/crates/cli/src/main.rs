mod config;
mod pipeline;
mod report;
mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use codemix::assembly::RecipeConfig;
use codemix::generate::DEFAULT_POOL;
use codemix::io::read_lines;
use codemix::noise::{Eligibility, NoiseRates, QWERTY_TABLE_VERSION};
use codemix::translit::DEFAULT_TABLE_VERSION;
use codemix::{FilterSpec, LanguagePair, LmConfig, NoiseSpec, OverrideMap, TrainConfig, TranslitScheme, Transliterator};

use report::Report;
use stages::Scoring;

/// Synthetic code-mixed parallel corpus toolkit.
#[derive(Parser)]
#[command(name = "codemix")]
struct Cli {
    /// Worker threads for stages that parallelize (1 keeps runs bitwise
    /// reproducible across machines).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train lexical tables and write symmetrized alignments (Pharaoh format).
    Align(AlignArgs),
    /// Extract per-sentence substitution tables from alignments.
    Dict(DictArgs),
    /// Generate and filter code-mixed variants.
    Generate(GenerateArgs),
    /// Romanize matrix-language tokens of a code-mixed corpus.
    Translit(TranslitArgs),
    /// Inject adversarial spelling noise into romanized tokens.
    Noise(NoiseArgs),
    /// Build a joint training corpus from a recipe.
    Assemble(AssembleArgs),
    /// Corpus statistics of a code-mixed corpus.
    Stats(StatsArgs),
    /// Corpus BLEU of whitespace-tokenized files.
    Bleu(BleuArgs),
    /// Run every stage from a config file.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct Langs {
    /// Matrix language code.
    #[arg(long, default_value = "hi")]
    matrix: String,
    /// Embedded language code.
    #[arg(long, default_value = "en")]
    embedded: String,
}

impl Langs {
    fn pair(&self) -> Result<LanguagePair> {
        Ok(LanguagePair::new(&self.matrix, &self.embedded)?)
    }
}

#[derive(Args)]
struct Bitext {
    /// POS-tagged matrix-language side (`token<TAB>POS`, blank line between sentences).
    #[arg(long)]
    src: PathBuf,
    /// Embedded-language side, one sentence per line.
    #[arg(long)]
    tgt: PathBuf,
    #[command(flatten)]
    langs: Langs,
}

#[derive(Args)]
struct ReportArg {
    /// Run report path [default: <out>.report.tsv].
    #[arg(long)]
    report: Option<PathBuf>,
}

impl ReportArg {
    fn path(&self, out: &Path) -> PathBuf {
        self.report.clone().unwrap_or_else(|| report::default_path(out))
    }
}

#[derive(Args)]
struct AlignArgs {
    #[command(flatten)]
    bitext: Bitext,
    #[arg(long, default_value_t = codemix::align::DEFAULT_ITERATIONS)]
    iterations: usize,
    /// Diagonal-prior tension.
    #[arg(long, default_value_t = codemix::align::DEFAULT_TENSION)]
    tension: f64,
    /// Plain IBM Model 1 without the diagonal prior.
    #[arg(long)]
    ibm1: bool,
    #[arg(long)]
    out: PathBuf,
    /// Forward translation table.
    #[arg(long)]
    table_out: Option<PathBuf>,
    /// Backward translation table.
    #[arg(long)]
    table_bwd_out: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct DictArgs {
    #[command(flatten)]
    bitext: Bitext,
    /// Pharaoh alignment file.
    #[arg(long)]
    alignment: PathBuf,
    /// POS tags eligible for switching, one per line [default: nouns, adjectives, quantifiers].
    #[arg(long)]
    inclusion: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    bitext: Bitext,
    /// Substitution tables (JSON lines).
    #[arg(long)]
    subs: PathBuf,
    #[arg(long)]
    inclusion: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Inclusive CMI window, percent.
    #[arg(long, default_value = "20,40", value_parser = parse_window)]
    cmi: (f64, f64),
    /// Inclusive SPF window, fraction.
    #[arg(long, default_value = "0.35,0.55", value_parser = parse_window)]
    spf: (f64, f64),
    /// Variants kept per sentence.
    #[arg(long, default_value_t = 5)]
    cap: usize,
    /// Switch sets sampled per sentence before filtering.
    #[arg(long, default_value_t = DEFAULT_POOL)]
    pool: usize,
    #[arg(long)]
    ppl_max: Option<f64>,
    /// Score with a saved n-gram LM.
    #[arg(long, conflicts_with_all = ["scores", "bootstrap_lm"])]
    lm: Option<PathBuf>,
    /// Score with external perplexities (`id<TAB>variant<TAB>ppl`).
    #[arg(long, conflicts_with = "bootstrap_lm")]
    scores: Option<PathBuf>,
    /// Train an n-gram LM on the unfiltered variants and score with it.
    #[arg(long)]
    bootstrap_lm: bool,
    #[arg(long, default_value_t = 3)]
    lm_order: usize,
    #[arg(long, default_value_t = 2)]
    lm_min_count: usize,
    /// Save the bootstrap LM.
    #[arg(long, requires = "bootstrap_lm")]
    lm_out: Option<PathBuf>,
    /// Every sampled variant, before filtering.
    #[arg(long)]
    unfiltered_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    report: ReportArg,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((num(lo)?, num(hi)?))
}

#[derive(Args)]
struct TranslitArgs {
    /// Code-mixed corpus TSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Rule table (`pattern<TAB>output`) [default: built-in Devanagari table].
    #[arg(long)]
    scheme: Option<PathBuf>,
    /// Whole-word overrides (`token<TAB>romanization`).
    #[arg(long)]
    overrides: Option<PathBuf>,
    #[arg(long)]
    no_schwa_deletion: bool,
    #[command(flatten)]
    langs: Langs,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-token rates, e.g. `switch=0.30,omission=0.12,typo=0.12,shuffle=0.06`.
    #[arg(long, default_value_t = NoiseRates::STANDARD)]
    noise: NoiseRates,
    #[arg(long)]
    seed: u64,
    /// Perturb any Latin-script word, not only romanized matrix tokens.
    #[arg(long)]
    all_latin: bool,
    /// Per-kind counts [default: <out>.noise.tsv].
    #[arg(long)]
    noise_report: Option<PathBuf>,
    #[command(flatten)]
    langs: Langs,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct AssembleArgs {
    /// Recipe TOML.
    #[arg(long)]
    recipe: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Receives train.src and train.tgt.
    #[arg(long)]
    out_dir: PathBuf,
    /// Shuffle the joint corpus even if the recipe does not ask for it.
    #[arg(long)]
    shuffle: bool,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    /// Stats TSV [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    langs: Langs,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct BleuArgs {
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long, default_value_t = 4)]
    max_order: usize,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
}

fn long_version() -> String {
    format!(
        "{} (tables: {DEFAULT_TABLE_VERSION}, {QWERTY_TABLE_VERSION})",
        codemix::VERSION
    )
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(long_version().into_boxed_str());
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads.unwrap_or(1).max(1);
    match cli.command {
        Command::Align(a) => {
            let langs = a.bitext.langs.pair()?;
            let mut r = Report::new("align");
            stages::align(
                &stages::AlignJob {
                    src: &a.bitext.src,
                    tgt: &a.bitext.tgt,
                    langs: &langs,
                    train: TrainConfig {
                        iterations: a.iterations,
                        tension: (!a.ibm1).then_some(a.tension),
                        threads,
                    },
                    out: &a.out,
                    table_fwd: a.table_out.as_deref(),
                    table_bwd: a.table_bwd_out.as_deref(),
                },
                &mut r,
            )?;
            r.write(&a.report.path(&a.out))
        }
        Command::Dict(a) => {
            let langs = a.bitext.langs.pair()?;
            let mut r = Report::new("dict");
            stages::dict(
                &stages::DictJob {
                    src: &a.bitext.src,
                    tgt: &a.bitext.tgt,
                    langs: &langs,
                    alignment: &a.alignment,
                    inclusion: a.inclusion.as_deref(),
                    out: &a.out,
                },
                &mut r,
            )?;
            r.write(&a.report.path(&a.out))
        }
        Command::Generate(a) => {
            let langs = a.bitext.langs.pair()?;
            let spec = FilterSpec {
                cmi: a.cmi,
                spf: a.spf,
                ppl_max: a.ppl_max,
                cap: a.cap,
            };
            let scoring = if let Some(p) = &a.lm {
                Scoring::Lm(p)
            } else if let Some(p) = &a.scores {
                Scoring::Scores(p)
            } else if a.bootstrap_lm {
                Scoring::Bootstrap {
                    config: LmConfig {
                        order: a.lm_order,
                        min_count: a.lm_min_count,
                        weights: None,
                    },
                    out: a.lm_out.as_deref(),
                }
            } else {
                Scoring::None
            };
            let mut r = Report::new("generate");
            stages::generate(
                &stages::GenerateJob {
                    src: &a.bitext.src,
                    tgt: &a.bitext.tgt,
                    langs: &langs,
                    subs: &a.subs,
                    inclusion: a.inclusion.as_deref(),
                    spec,
                    seed: a.seed,
                    pool: a.pool,
                    threads,
                    scoring,
                    unfiltered_out: a.unfiltered_out.as_deref(),
                    out: &a.out,
                },
                &mut r,
            )?;
            r.write(&a.report.path(&a.out))
        }
        Command::Translit(a) => {
            let langs = a.langs.pair()?;
            let mut r = Report::new("translit");
            let scheme = match &a.scheme {
                Some(p) => {
                    r.file("translit.input.scheme", p)?;
                    TranslitScheme::load(p)?
                }
                None => TranslitScheme::devanagari(),
            };
            let overrides = match &a.overrides {
                Some(p) => {
                    r.file("translit.input.overrides", p)?;
                    OverrideMap::load(p)?
                }
                None => OverrideMap::default(),
            };
            let translit = Transliterator::new(scheme.with_schwa_deletion(!a.no_schwa_deletion), overrides);
            stages::translit(
                &stages::TranslitJob {
                    input: &a.input,
                    langs: &langs,
                    translit: &translit,
                    out: &a.out,
                },
                &mut r,
            )?;
            r.write(&a.report.path(&a.out))
        }
        Command::Noise(a) => {
            let langs = a.langs.pair()?;
            let mut spec = NoiseSpec::new(a.noise, a.seed);
            if a.all_latin {
                spec.eligibility = Eligibility::AllLatin;
            }
            spec.validate()?;
            let noise_report = a.noise_report.clone().unwrap_or_else(|| {
                let mut name = a.out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
                name.push(".noise.tsv");
                a.out.with_file_name(name)
            });
            let mut r = Report::new("noise");
            stages::noise(
                &stages::NoiseJob {
                    input: &a.input,
                    langs: &langs,
                    spec,
                    out: &a.out,
                    noise_report: &noise_report,
                },
                &mut r,
            )?;
            r.write(&a.report.path(&a.out))
        }
        Command::Assemble(a) => {
            let mut recipe = RecipeConfig::load(&a.recipe)?;
            recipe.shuffle |= a.shuffle;
            std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
            let (src, tgt) = (a.out_dir.join("train.src"), a.out_dir.join("train.tgt"));
            let mut r = Report::new("assemble");
            r.file("assemble.input.recipe", &a.recipe)?;
            stages::assemble(
                &stages::AssembleJob {
                    recipe: &recipe,
                    seed: a.seed,
                    out_src: &src,
                    out_tgt: &tgt,
                },
                &mut r,
            )?;
            r.write(&a.report.report.unwrap_or_else(|| a.out_dir.join("assemble.report.tsv")))
        }
        Command::Stats(a) => {
            let langs = a.langs.pair()?;
            let mut r = Report::new("stats");
            stages::stats(&a.input, &langs, a.out.as_deref(), &mut r)?;
            match (&a.report.report, &a.out) {
                (Some(p), _) => r.write(p),
                (None, Some(out)) => r.write(&report::default_path(out)),
                (None, None) => Ok(()),
            }
        }
        Command::Bleu(a) => {
            let tokenize = |p: &Path| -> Result<Vec<Vec<String>>> {
                Ok(read_lines(p)?
                    .iter()
                    .map(|l| l.split_whitespace().map(str::to_owned).collect())
                    .collect())
            };
            let score = codemix::bleu(&tokenize(&a.hyp)?, &tokenize(&a.reference)?, a.max_order)?;
            println!("{score}");
            Ok(())
        }
        Command::Pipeline(a) => {
            let report = pipeline::run(&a.config, cli.threads)?;
            println!("wrote {}", report.display());
            Ok(())
        }
    }
}
