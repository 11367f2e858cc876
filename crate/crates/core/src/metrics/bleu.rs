use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BleuScore {
    /// 0–100.
    pub score: f64,
    /// Clipped n-gram precisions, 0–100. `None` for an order that neither
    /// side of the corpus is long enough to contain.
    pub precisions: Vec<Option<f64>>,
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl fmt::Display for BleuScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self
            .precisions
            .iter()
            .map(|p| p.map_or_else(|| "-".to_owned(), |p| format!("{p:.1}")))
            .collect::<Vec<_>>()
            .join("/");
        write!(f, "BLEU = {:.2} ({p}, BP={:.3})", self.score, self.brevity_penalty)
    }
}

fn ngram_counts<'t>(tokens: &'t [&'t str], n: usize) -> HashMap<&'t [&'t str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU over pre-tokenized sentences with a single reference each.
/// No smoothing: any zero n-gram precision yields 0.
pub fn bleu<S: AsRef<str>>(hypotheses: &[Vec<S>], references: &[Vec<S>], max_order: usize) -> Result<BleuScore> {
    if hypotheses.is_empty() {
        return Err(Error::InvalidArgument("BLEU needs at least one sentence".into()));
    }
    if hypotheses.len() != references.len() {
        return Err(Error::InvalidArgument(format!(
            "{} hypotheses vs {} references",
            hypotheses.len(),
            references.len()
        )));
    }
    if max_order == 0 {
        return Err(Error::InvalidArgument("BLEU max order must be positive".into()));
    }
    let mut matches = vec![0usize; max_order];
    let mut totals = vec![0usize; max_order];
    let mut ref_totals = vec![0usize; max_order];
    let (mut hyp_len, mut ref_len) = (0, 0);
    for (h, r) in hypotheses.iter().zip(references) {
        let h: Vec<&str> = h.iter().map(AsRef::as_ref).collect();
        let r: Vec<&str> = r.iter().map(AsRef::as_ref).collect();
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=max_order {
            let hc = ngram_counts(&h, n);
            let rc = ngram_counts(&r, n);
            totals[n - 1] += h.len().saturating_sub(n - 1);
            ref_totals[n - 1] += r.len().saturating_sub(n - 1);
            matches[n - 1] += hc
                .iter()
                .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
                .sum::<usize>();
        }
    }
    let precisions: Vec<Option<f64>> = (0..max_order)
        .map(|k| match (totals[k], ref_totals[k]) {
            (0, 0) => None,
            (0, _) => Some(0.0),
            (t, _) => Some(matches[k] as f64 / t as f64),
        })
        .collect();
    let present: Vec<f64> = precisions.iter().flatten().copied().collect();
    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    let score = if present.is_empty() || present.contains(&0.0) {
        0.0
    } else {
        let log_mean = present.iter().map(|p| p.ln()).sum::<f64>() / present.len() as f64;
        100.0 * brevity_penalty * log_mean.exp()
    };
    Ok(BleuScore {
        score,
        precisions: precisions.iter().map(|p| p.map(|p| 100.0 * p)).collect(),
        brevity_penalty,
        hyp_len,
        ref_len,
    })
}
