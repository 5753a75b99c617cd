//! Rank-sum testing and order statistics for comparing run outcomes.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Samples up to this size get the exact permutation distribution.
pub const EXACT_MAX_SAMPLE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PValueMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `U` of the first sample: pairs `(a, b)` with `a > b`, ties counting one half.
    pub u: f64,
    pub p_two_sided: f64,
    pub method: PValueMethod,
}

/// Mid-ranks (1-based) of `values`, ties sharing their average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Wilcoxon-Mann-Whitney rank-sum test.
///
/// The two-sided p-value is `P(|U - n1 n2 / 2| >= |u - n1 n2 / 2|)`. It is
/// computed from the exact permutation distribution (conditional on ties)
/// when both samples have at most [`EXACT_MAX_SAMPLE`] elements, and from the
/// tie-corrected normal approximation with continuity correction otherwise.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidDistribution("non-finite sample value".into()));
    }
    let n1 = a.len();
    let n2 = b.len();
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..n1].iter().sum();
    let u = rank_sum_a - (n1 * (n1 + 1)) as f64 / 2.0;

    if n1.max(n2) <= EXACT_MAX_SAMPLE {
        // doubled mid-ranks are integers
        let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
        let observed: usize = doubled[..n1].iter().sum();
        let p = exact_two_sided(&doubled, n1, observed);
        return Ok(MannWhitney {
            u,
            p_two_sided: p,
            method: PValueMethod::Exact,
        });
    }

    let n = (n1 + n2) as f64;
    let mean = (n1 * n2) as f64 / 2.0;
    let tie_term: f64 = tie_groups(&pooled).map(|t| t * t * t - t).sum::<f64>() / (n * (n - 1.0));
    let var = (n1 * n2) as f64 / 12.0 * ((n + 1.0) - tie_term);
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(MannWhitney {
        u,
        p_two_sided: p,
        method: PValueMethod::Normal,
    })
}

fn tie_groups(values: &[f64]) -> impl Iterator<Item = f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        groups.push((j - i + 1) as f64);
        i = j + 1;
    }
    groups.into_iter()
}

/// Counts size-`k` subsets of `doubled` by their sum and returns the share
/// whose sum deviates from the mean at least as much as `observed`.
fn exact_two_sided(doubled: &[usize], k: usize, observed: usize) -> f64 {
    let max_sum: usize = doubled.iter().sum();
    // counts[j][s]: subsets of size j with sum s
    let mut counts = vec![vec![0.0f64; max_sum + 1]; k + 1];
    counts[0][0] = 1.0;
    for (seen, &d) in doubled.iter().enumerate() {
        for j in (1..=k.min(seen + 1)).rev() {
            let (lower, upper) = counts.split_at_mut(j);
            let prev = &lower[j - 1];
            let row = &mut upper[0];
            for s in (d..=max_sum).rev() {
                if prev[s - d] != 0.0 {
                    row[s] += prev[s - d];
                }
            }
        }
    }
    let n = doubled.len();
    // mean of the doubled rank sum is k (n + 1)
    let centre = (k * (n + 1)) as i64;
    let dev = (observed as i64 - centre).abs();
    let (mut extreme, mut total) = (0.0, 0.0);
    for (s, &c) in counts[k].iter().enumerate() {
        total += c;
        if (s as i64 - centre).abs() >= dev {
            extreme += c;
        }
    }
    (extreme / total).min(1.0)
}

/// Linear-interpolation quantile (`q` in `[0, 1]`) of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::RngStream;

    #[test]
    fn separated_samples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert_eq!(r.method, PValueMethod::Exact);
        // one-sided 1 / C(6,3) = 0.05
        assert!((r.p_two_sided - 0.1).abs() < 1e-12);
        let r = mann_whitney_u(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.u, 9.0);
    }

    #[test]
    fn identical_samples() {
        let a = [3.0, 1.0, 4.0, 1.5, 9.0];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.u, 12.5);
        assert!(r.p_two_sided > 0.99);
        let big: Vec<f64> = (0..30).map(|i| (i * 7 % 11) as f64).collect();
        let r = mann_whitney_u(&big, &big).unwrap();
        assert_eq!(r.method, PValueMethod::Normal);
        assert_eq!(r.u, 450.0);
        assert!(r.p_two_sided > 0.99);
    }

    #[test]
    fn all_tied() {
        let r = mann_whitney_u(&[2.0; 25], &[2.0; 25]).unwrap();
        assert_eq!(r.p_two_sided, 1.0);
        let r = mann_whitney_u(&[2.0; 4], &[2.0; 3]).unwrap();
        assert_eq!(r.p_two_sided, 1.0);
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(mann_whitney_u(&[], &[1.0]), Err(Error::EmptySample)));
        assert!(matches!(mann_whitney_u(&[1.0], &[]), Err(Error::EmptySample)));
    }

    #[test]
    fn midrank_ties() {
        assert_eq!(midranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(midranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn normal_path_is_calibrated() {
        let mut rng = RngStream::from_seed(123);
        let trials = 1000;
        let mut hits = 0;
        for _ in 0..trials {
            let a: Vec<f64> = (0..30).map(|_| rng.next_unit()).collect();
            let b: Vec<f64> = (0..30).map(|_| rng.next_unit()).collect();
            if mann_whitney_u(&a, &b).unwrap().p_two_sided < 0.05 {
                hits += 1;
            }
        }
        let rate = hits as f64 / trials as f64;
        assert!((rate - 0.05).abs() <= 0.02, "rejection rate {rate}");
    }

    #[test]
    fn quantiles() {
        assert_eq!(median(&[3.0]), 3.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.75), 1.75);
    }
}
