//! Switch-set sizes and subset sampling.
//!
//! A sentence with `r` switchable words admits `2^r − 1` non-empty switch
//! sets. Only sizes from [`combination_sizes`] are used, and when that family
//! is larger than the per-sentence budget a uniform sample without
//! replacement is drawn from it.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::seq::index;
use rand::Rng;

use crate::seed;

/// Allowed switch-set sizes for `r` candidate words.
pub fn combination_sizes(r: usize) -> RangeInclusive<usize> {
    match r {
        // empty range
        0 => RangeInclusive::new(1, 0),
        1..=4 => 1..=r,
        5..=7 => r - 3..=r,
        // ceil(0.6 r) ..= floor(0.7 r) in integer arithmetic
        _ => (6 * r).div_ceil(10)..=(7 * r) / 10,
    }
}

/// C(n, k), or `None` on u128 overflow.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Σ C(r, k) over the allowed sizes; `None` when it does not fit in u128.
pub fn count_variants(r: usize) -> Option<u128> {
    combination_sizes(r).try_fold(0u128, |acc, k| acc.checked_add(binomial(r, k)?))
}

/// The `rank`-th k-subset of `0..r` in lexicographic order.
fn unrank(r: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let mut c = next;
        loop {
            let below = binomial(r - c - 1, k - slot - 1).expect("fits: bounded by C(r, k)");
            if rank < below {
                break;
            }
            rank -= below;
            c += 1;
        }
        out.push(c);
        next = c + 1;
    }
    out
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

fn sort_family(family: &mut [Vec<usize>]) {
    family.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
}

/// Switch sets for one sentence, each a sorted list of candidate indices.
///
/// If the allowed family has at most `cap` members it is enumerated in full;
/// otherwise `cap` distinct members are drawn uniformly. Output is ordered
/// by size, then lexicographically, and depends only on the inputs and
/// `seed`.
pub fn sample_subsets(candidates: &[usize], cap: usize, seed: u64) -> Vec<Vec<usize>> {
    let r = candidates.len();
    let sizes = combination_sizes(r);
    if r == 0 || cap == 0 {
        return Vec::new();
    }
    let pick = |positions: Vec<usize>| positions.into_iter().map(|p| candidates[p]).collect::<Vec<_>>();

    let mut family: Vec<Vec<usize>> = match count_variants(r) {
        Some(total) if total <= cap as u128 => sizes
            .flat_map(|k| (0..binomial(r, k).unwrap()).map(move |rank| unrank(r, k, rank)))
            .map(pick)
            .collect(),
        Some(total) => {
            let mut rng = seed::rng(seed, &[]);
            let mut drawn = BTreeSet::new();
            while drawn.len() < cap {
                // a global rank over the family picks size k with weight C(r, k)
                let mut rank = rng.gen_range(0..total);
                let mut chosen = None;
                for k in sizes.clone() {
                    let c = binomial(r, k).unwrap();
                    if rank < c {
                        chosen = Some(unrank(r, k, rank));
                        break;
                    }
                    rank -= c;
                }
                drawn.insert(chosen.expect("rank below total"));
            }
            drawn.into_iter().map(pick).collect()
        }
        None => {
            // family too large for exact ranks: weight sizes in log space and
            // draw each k-subset with Floyd's algorithm
            let mut rng = seed::rng(seed, &[]);
            let ks: Vec<usize> = sizes.collect();
            let logs: Vec<f64> = ks.iter().map(|&k| ln_binomial(r, k)).collect();
            let top = logs.iter().cloned().fold(f64::MIN, f64::max);
            let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
            let total: f64 = weights.iter().sum();
            let mut drawn = BTreeSet::new();
            while drawn.len() < cap {
                let mut u = rng.gen::<f64>() * total;
                let mut k = *ks.last().unwrap();
                for (&kk, &w) in ks.iter().zip(&weights) {
                    if u < w {
                        k = kk;
                        break;
                    }
                    u -= w;
                }
                let mut positions = index::sample(&mut rng, r, k).into_vec();
                positions.sort_unstable();
                drawn.insert(positions);
            }
            drawn.into_iter().map(pick).collect()
        }
    };
    sort_family(&mut family);
    family
}
