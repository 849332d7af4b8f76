//! Rank statistics for comparing strategies.

use crate::error::{Error, Result};
use crate::normal;

/// Below this many observations on either side p-values are computed exactly.
pub const EXACT_BELOW: usize = 8;

/// Median with the midpoint convention for even sizes; `None` when empty.
/// Infinite values are allowed and sort as usual.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else if v[n / 2 - 1] == v[n / 2] {
        // Avoids inf − inf when both middle values are the same infinity.
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Midranks (1-based) of `values` in their original order, plus the tie
/// group sizes.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = 0.5 * ((i + 1) + j) as f64;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

/// Two-sided Mann-Whitney U test. Returns `(U_a, p)` where `U_a` counts the
/// pairs with `a > b`, ties counting one half.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Mann-Whitney needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("Mann-Whitney samples contain NaN".into()));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let na = a.len() as f64;
    let rank_sum: f64 = ranks[..a.len()].iter().sum();
    let u = rank_sum - na * (na + 1.0) / 2.0;
    let p = if a.len() < EXACT_BELOW || b.len() < EXACT_BELOW {
        exact_p(&ranks, a.len(), u)
    } else {
        normal_p(a.len(), b.len(), &ties, u)
    };
    Ok((u, p.clamp(0.0, 1.0)))
}

/// Normal approximation with tie and continuity corrections.
fn normal_p(na: usize, nb: usize, ties: &[usize], u: f64) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    let n = na + nb;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term);
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - na * nb / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
    2.0 * normal::cdf(-z)
}

/// Exact permutation p-value: the fraction of size-`na` subsets of the pooled
/// midranks whose U lies at least as far from the null mean as the observed one.
fn exact_p(ranks: &[f64], na: usize, u_obs: f64) -> f64 {
    // Doubled midranks are integers, so subset rank sums can be counted by
    // dynamic programming over (subset size, doubled sum).
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let mut counts = vec![vec![0f64; max_sum + 1]; na + 1];
    counts[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=na).rev() {
            let (lower, upper) = counts.split_at_mut(k);
            for s in (r..=max_sum).rev() {
                let c = lower[k - 1][s - r];
                if c != 0.0 {
                    upper[0][s] += c;
                }
            }
        }
    }
    let nb = ranks.len() - na;
    let mean = (na * nb) as f64 / 2.0;
    let offset = (na * (na + 1)) as f64 / 2.0;
    let observed = (u_obs - mean).abs();
    let total: f64 = counts[na].iter().sum();
    let extreme: f64 = counts[na]
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c != 0.0)
        .filter(|&(s, _)| (s as f64 / 2.0 - offset - mean).abs() >= observed - 1e-9)
        .map(|(_, &c)| c)
        .sum();
    extreme / total
}
