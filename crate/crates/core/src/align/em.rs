//! EM training of lexical translation tables (IBM Model 1 and the
//! diagonal-prior reparameterization).

use rayon::prelude::*;

use super::{diagonal_weight, Row, TranslationTable, Vocab, DEFAULT_ITERATIONS, DEFAULT_TENSION, NULL_WORD, PRUNE_FLOOR};
use crate::corpus::ParallelPair;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    /// `None` trains plain IBM Model 1; `Some(t)` uses the diagonal prior
    /// with fixed tension `t`.
    pub tension: Option<f64>,
    /// Worker threads for the E-step. Results are bitwise reproducible for a
    /// fixed thread count and identical to the sequential run at 1.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: DEFAULT_ITERATIONS,
            tension: Some(DEFAULT_TENSION),
            threads: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Training {
    pub table: TranslationTable,
    /// Corpus log-likelihood measured in each iteration's E-step, i.e.
    /// under the parameters that iteration started from.
    pub log_likelihood: Vec<f64>,
}

pub fn train_ibm1(pairs: &[ParallelPair], iterations: usize) -> Result<TranslationTable> {
    let cfg = TrainConfig {
        iterations,
        tension: None,
        threads: 1,
    };
    Ok(train(pairs, &cfg)?.table)
}

pub fn train_diagonal(pairs: &[ParallelPair], iterations: usize, tension: f64) -> Result<TranslationTable> {
    let cfg = TrainConfig {
        iterations,
        tension: Some(tension),
        threads: 1,
    };
    Ok(train(pairs, &cfg)?.table)
}

type Encoded = (Vec<u32>, Vec<u32>);

pub fn train(pairs: &[ParallelPair], cfg: &TrainConfig) -> Result<Training> {
    if cfg.iterations == 0 {
        return Err(Error::InvalidArgument("EM iterations must be positive".into()));
    }
    if let Some(t) = cfg.tension {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("tension must be positive, got {t}")));
        }
    }
    if cfg.threads == 0 {
        return Err(Error::InvalidArgument("thread count must be positive".into()));
    }

    let mut source = Vocab::default();
    let mut target = Vocab::default();
    source.intern(NULL_WORD);
    // pairs with an empty side carry no alignment evidence
    let corpus: Vec<Encoded> = pairs
        .iter()
        .filter(|p| !p.source.is_empty() && !p.target.is_empty())
        .map(|p| {
            (
                p.source.surfaces().map(|w| source.intern(w)).collect(),
                p.target.surfaces().map(|w| target.intern(w)).collect(),
            )
        })
        .collect();
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut rows = initial_rows(&corpus, source.len());
    let pool = if cfg.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?,
        )
    } else {
        None
    };

    let mut log_likelihood = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        let (counts, ll) = match &pool {
            None => expected_counts(&rows, &corpus, cfg.tension),
            Some(pool) => {
                let chunk = corpus.len().div_ceil(cfg.threads);
                let partials: Vec<_> = pool.install(|| {
                    corpus
                        .par_chunks(chunk)
                        .map(|c| expected_counts(&rows, c, cfg.tension))
                        .collect()
                });
                merge(partials)
            }
        };
        log_likelihood.push(ll);
        maximize(&mut rows, counts);
    }

    Ok(Training {
        table: TranslationTable { source, target, rows },
        log_likelihood,
    })
}

/// Uniform t(e|f) over the targets each source word (and NULL) co-occurs with.
fn initial_rows(corpus: &[Encoded], n_source: usize) -> Vec<Row> {
    let mut cooc: Vec<Vec<u32>> = vec![Vec::new(); n_source];
    for (src, tgt) in corpus {
        for f in std::iter::once(0).chain(src.iter().copied()) {
            cooc[f as usize].extend_from_slice(tgt);
        }
    }
    cooc.into_iter()
        .map(|mut targets| {
            targets.sort_unstable();
            targets.dedup();
            let p = 1.0 / targets.len().max(1) as f64;
            let probs = vec![p; targets.len()];
            Row { targets, probs }
        })
        .collect()
}

fn expected_counts(rows: &[Row], corpus: &[Encoded], tension: Option<f64>) -> (Vec<Vec<f64>>, f64) {
    let mut counts: Vec<Vec<f64>> = rows.iter().map(|r| vec![0.0; r.targets.len()]).collect();
    let mut ll = 0.0;
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    for (src, tgt) in corpus {
        let (m, n) = (src.len(), tgt.len());
        for (j, &e) in tgt.iter().enumerate() {
            cells.clear();
            let mut z = 0.0;
            let mut prior_mass = 0.0;
            let positions = std::iter::once((None, 0u32)).chain(src.iter().enumerate().map(|(i, &f)| (Some(i), f)));
            for (i, f) in positions {
                let prior = diagonal_weight(tension, i, j, m, n);
                prior_mass += prior;
                if let Some(slot) = rows[f as usize].slot(e) {
                    let w = rows[f as usize].probs[slot] * prior;
                    z += w;
                    cells.push((f as usize, slot, w));
                }
            }
            if z <= 0.0 {
                continue;
            }
            ll += (z / prior_mass).ln();
            for &(f, slot, w) in &cells {
                counts[f][slot] += w / z;
            }
        }
    }
    (counts, ll)
}

fn merge(partials: Vec<(Vec<Vec<f64>>, f64)>) -> (Vec<Vec<f64>>, f64) {
    let mut iter = partials.into_iter();
    let (mut total, mut ll) = iter.next().expect("at least one chunk");
    for (counts, part_ll) in iter {
        for (acc, row) in total.iter_mut().zip(counts) {
            for (a, c) in acc.iter_mut().zip(row) {
                *a += c;
            }
        }
        ll += part_ll;
    }
    (total, ll)
}

fn maximize(rows: &mut [Row], counts: Vec<Vec<f64>>) {
    for (row, c) in rows.iter_mut().zip(counts) {
        let total: f64 = c.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let mut targets = Vec::with_capacity(row.targets.len());
        let mut probs = Vec::with_capacity(row.targets.len());
        for (&e, &c) in row.targets.iter().zip(&c) {
            let p = c / total;
            if p >= PRUNE_FLOOR {
                targets.push(e);
                probs.push(p);
            }
        }
        let kept: f64 = probs.iter().sum();
        if kept != 1.0 {
            probs.iter_mut().for_each(|p| *p /= kept);
        }
        *row = Row { targets, probs };
    }
}
