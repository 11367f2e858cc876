use std::cmp::Ordering;

use super::CMVariant;
use crate::error::{Error, Result};

/// Perplexity source for fluency filtering.
pub trait FluencyScorer {
    fn perplexity(&self, variant: &CMVariant) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    /// Inclusive CMI window, percent.
    pub cmi: (f64, f64),
    /// Inclusive SPF window, fraction.
    pub spf: (f64, f64),
    /// Maximum perplexity, if any.
    pub ppl_max: Option<f64>,
    /// Variants kept per sentence.
    pub cap: usize,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            cmi: (20.0, 40.0),
            spf: (0.35, 0.55),
            ppl_max: None,
            cap: 5,
        }
    }
}

impl FilterSpec {
    /// Windows that admit every variant.
    pub fn permissive(cap: usize) -> Self {
        FilterSpec {
            cmi: (0.0, 100.0),
            spf: (0.0, 1.0),
            ppl_max: None,
            cap,
        }
    }

    /// Every violated constraint, as `field: message`.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.cmi.0 > self.cmi.1 {
            out.push("cmi: cmi window inverted".to_owned());
        }
        if self.spf.0 > self.spf.1 {
            out.push("spf: spf window inverted".to_owned());
        }
        if self.cap == 0 {
            out.push("cap: per-sentence cap must be at least 1".to_owned());
        }
        if let Some(p) = self.ppl_max {
            if p.is_nan() || p <= 0.0 {
                out.push(format!("ppl_max: threshold must be positive, got {p}"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(v.join("; ")))
        }
    }

    fn admits(&self, v: &CMVariant) -> bool {
        let within = |x: f64, (lo, hi): (f64, f64)| x >= lo && x <= hi;
        within(v.cmi, self.cmi)
            && within(v.spf, self.spf)
            && match (self.ppl_max, v.ppl) {
                (Some(max), Some(p)) => p <= max,
                (Some(_), None) => false,
                (None, _) => true,
            }
    }
}

fn rank(a: &CMVariant, b: &CMVariant) -> Ordering {
    let ppl = match (a.ppl, b.ppl) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    };
    ppl.then_with(|| a.switched.len().cmp(&b.switched.len()))
        .then_with(|| a.switched.cmp(&b.switched))
}

/// Keep variants inside the CMI/SPF windows (and under the perplexity
/// threshold when set), then the `cap` best by perplexity, smaller switch
/// set, then lexicographic switch set. Survivors keep their input order.
pub fn filter_variants(
    variants: Vec<CMVariant>,
    spec: &FilterSpec,
    scorer: Option<&dyn FluencyScorer>,
) -> Result<Vec<CMVariant>> {
    spec.validate()?;
    if spec.ppl_max.is_some() && scorer.is_none() {
        return Err(Error::MissingScorer);
    }
    let mut kept: Vec<(usize, CMVariant)> = Vec::with_capacity(variants.len());
    for (pos, mut v) in variants.into_iter().enumerate() {
        if let Some(s) = scorer {
            v.ppl = Some(s.perplexity(&v)?);
        }
        if spec.admits(&v) {
            kept.push((pos, v));
        }
    }
    if kept.len() > spec.cap {
        kept.sort_by(|a, b| rank(&a.1, &b.1));
        kept.truncate(spec.cap);
        kept.sort_by_key(|(pos, _)| *pos);
    }
    Ok(kept.into_iter().map(|(_, v)| v).collect())
}
