//! Rank tests with exact small-sample distributions.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{invalid_arg, Error, Result};

use super::{Method, Tail, TestResult};

/// Largest number of nonzero differences handled by exact enumeration.
pub const SIGNED_RANK_EXACT_MAX: usize = 25;
/// Largest smaller-sample size handled exactly by the rank-sum test.
pub const RANK_SUM_EXACT_MAX: usize = 12;

/// Ranks 1..=n with ties given their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Sum of t^3 - t over tie groups.
fn tie_term(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        total += t * t * t - t;
        i = j + 1;
    }
    total
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// p-value from upper and lower tail probabilities.
fn tail_p(tail: Tail, upper: f64, lower: f64) -> f64 {
    match tail {
        Tail::Greater => upper,
        Tail::Less => lower,
        Tail::TwoSided => (2.0 * upper.min(lower)).min(1.0),
    }
    .clamp(0.0, 1.0)
}

/// Normal approximation with a continuity correction of `cc` toward the mean.
fn normal_p(stat: f64, mean: f64, sd: f64, cc: f64, tail: Tail) -> f64 {
    let n = std_normal();
    let upper = n.sf((stat - mean - cc) / sd);
    let lower = n.cdf((stat - mean + cc) / sd);
    tail_p(tail, upper, lower)
}

/// Wilcoxon signed-rank test of the differences against zero. Zero
/// differences are dropped; the statistic is the positive-rank sum W+.
pub fn wilcoxon_signed_rank(diffs: &[f64], tail: Tail) -> Result<TestResult> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(invalid_arg("differences must be finite"));
    }
    let nz: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return Err(Error::UndefinedTest("all differences are zero".into()));
    }
    let abs: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term(&abs) / 48.0;
    let z = (var > 0.0).then(|| (w_plus - mean) / var.sqrt());

    let (p, exact) = if n <= SIGNED_RANK_EXACT_MAX {
        // doubled ranks are integers even with ties
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let total: usize = doubled.iter().sum();
        let mut counts = vec![0u64; total + 1];
        counts[0] = 1;
        for &r in &doubled {
            for s in (r..=total).rev() {
                counts[s] += counts[s - r];
            }
        }
        let obs = (2.0 * w_plus).round() as usize;
        let all = 2f64.powi(n as i32);
        let upper = counts[obs..].iter().sum::<u64>() as f64 / all;
        let lower = counts[..=obs].iter().sum::<u64>() as f64 / all;
        (tail_p(tail, upper, lower), true)
    } else {
        (normal_p(w_plus, mean, var.sqrt(), 0.5, tail), false)
    };
    Ok(TestResult {
        method: Method::SignedRank,
        statistic: w_plus,
        p_value: p,
        n,
        df: None,
        z,
        exact,
    })
}

/// Wilcoxon rank-sum (Mann-Whitney) test; the statistic is the rank sum
/// of `a`. `Tail::Less` tests whether `a` tends to be smaller than `b`.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64], tail: Tail) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid_arg("rank-sum test needs two nonempty samples"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(invalid_arg("samples must be finite"));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = average_ranks(&pooled);
    let (na, nb) = (a.len(), b.len());
    let big_n = (na + nb) as f64;
    let w: f64 = ranks[..na].iter().sum();
    let mean = na as f64 * (big_n + 1.0) / 2.0;
    let ties = tie_term(&pooled);
    let var = na as f64 * nb as f64 / 12.0 * ((big_n + 1.0) - ties / (big_n * (big_n - 1.0)));
    let z = (var > 0.0).then(|| (w - mean) / var.sqrt());

    let (p, exact) = if na.min(nb) <= RANK_SUM_EXACT_MAX {
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let total: usize = doubled.iter().sum();
        // count[k][s]: subsets of size k with doubled-rank sum s
        let mut count = vec![vec![0u128; total + 1]; na + 1];
        count[0][0] = 1;
        for &r in &doubled {
            for k in (1..=na).rev() {
                let (lo, hi) = count.split_at_mut(k);
                let prev = &lo[k - 1];
                let cur = &mut hi[0];
                for s in (r..=total).rev() {
                    cur[s] += prev[s - r];
                }
            }
        }
        let dist = &count[na];
        let all: u128 = dist.iter().sum();
        let obs = (2.0 * w).round() as usize;
        let upper = dist[obs..].iter().sum::<u128>() as f64 / all as f64;
        let lower = dist[..=obs].iter().sum::<u128>() as f64 / all as f64;
        (tail_p(tail, upper, lower), true)
    } else if var > 0.0 {
        (normal_p(w, mean, var.sqrt(), 0.5, tail), false)
    } else {
        (1.0, false)
    };
    Ok(TestResult {
        method: Method::RankSum,
        statistic: w,
        p_value: p,
        n: na + nb,
        df: None,
        z,
        exact,
    })
}

/// Kruskal-Wallis H with tie correction and a chi-square reference.
pub fn kruskal_wallis(groups: &[&[f64]]) -> Result<TestResult> {
    if groups.len() < 2 || groups.iter().any(|g| g.is_empty()) {
        return Err(invalid_arg("Kruskal-Wallis needs at least two nonempty groups"));
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(invalid_arg("samples must be finite"));
    }
    let n = pooled.len() as f64;
    let correction = 1.0 - tie_term(&pooled) / (n * n * n - n);
    if correction <= 0.0 {
        return Err(Error::UndefinedTest("all observations are identical".into()));
    }
    let ranks = average_ranks(&pooled);
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction;
    let h = h.max(0.0);
    let df = (groups.len() - 1) as f64;
    let p = ChiSquared::new(df).expect("positive df").sf(h);
    Ok(TestResult {
        method: Method::KruskalWallis,
        statistic: h,
        p_value: p.clamp(0.0, 1.0),
        n: pooled.len(),
        df: Some(df),
        z: None,
        exact: false,
    })
}

/// Friedman test on a blocks x treatments matrix, tie-corrected.
pub fn friedman(blocks: &[Vec<f64>]) -> Result<TestResult> {
    let n = blocks.len();
    let k = blocks.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(invalid_arg("Friedman test needs at least 2 blocks and 2 treatments"));
    }
    if blocks.iter().any(|b| b.len() != k) {
        return Err(invalid_arg("every block needs one value per treatment"));
    }
    if blocks.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid_arg("values must be finite"));
    }
    let mut col = vec![0.0; k];
    let mut ties = 0.0;
    for b in blocks {
        for (c, r) in col.iter_mut().zip(average_ranks(b)) {
            *c += r;
        }
        ties += tie_term(b);
    }
    let (nf, kf) = (n as f64, k as f64);
    let raw = 12.0 / (nf * kf * (kf + 1.0)) * col.iter().map(|r| r * r).sum::<f64>() - 3.0 * nf * (kf + 1.0);
    let denom = 1.0 - ties / (nf * (kf * kf * kf - kf));
    let stat = if denom > 0.0 { (raw / denom).max(0.0) } else { 0.0 };
    let df = kf - 1.0;
    let p = if stat == 0.0 {
        1.0
    } else {
        ChiSquared::new(df).expect("positive df").sf(stat)
    };
    Ok(TestResult {
        method: Method::Friedman,
        statistic: stat,
        p_value: p.clamp(0.0, 1.0),
        n,
        df: Some(df),
        z: None,
        exact: false,
    })
}
