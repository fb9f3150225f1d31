//! Pocock-Simon minimization over baseline BBT and age tertiles.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::patient::PatientProfile;

/// Probability of assigning to a minimizing group.
pub const DEFAULT_BIASED_COIN: f64 = 0.8;

/// Cut points of the baseline BBT tertiles, blocks.
pub const BBT_TERTILES: (f64, f64) = (14.0, 32.0);
/// Cut points of the age tertiles, years.
pub const AGE_TERTILES: (f64, f64) = (50.0, 65.0);

fn tertile(v: f64, cuts: (f64, f64)) -> usize {
    if v < cuts.0 {
        0
    } else if v < cuts.1 {
        1
    } else {
        2
    }
}

/// Covariate levels of a participant: (BBT tertile, age tertile).
pub fn strata(profile: &PatientProfile) -> [usize; 2] {
    [tertile(profile.baseline_bbt, BBT_TERTILES), tertile(profile.age, AGE_TERTILES)]
}

/// Running marginal counts per factor level and group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tallies {
    pub n_groups: usize,
    /// `counts[factor][level][group]`.
    pub counts: Vec<Vec<Vec<u32>>>,
    pub totals: Vec<u32>,
}

impl Tallies {
    pub fn new(n_groups: usize, levels_per_factor: &[usize]) -> Self {
        Self {
            n_groups,
            counts: levels_per_factor.iter().map(|&l| vec![vec![0; n_groups]; l]).collect(),
            totals: vec![0; n_groups],
        }
    }

    /// Tallies for the two tertile covariates.
    pub fn tertiles(n_groups: usize) -> Self {
        Self::new(n_groups, &[3, 3])
    }

    pub fn record(&mut self, levels: &[usize], group: usize) {
        for (f, &l) in levels.iter().enumerate() {
            self.counts[f][l][group] += 1;
        }
        self.totals[group] += 1;
    }

    /// Variance-based imbalance if the participant joined `group`, summed over
    /// the participant's factor levels; the overall group sizes enter as an
    /// additional factor.
    pub fn imbalance(&self, levels: &[usize], group: usize) -> f64 {
        let spread = |row: &[u32]| -> f64 {
            let bumped: Vec<f64> = row.iter().enumerate().map(|(g, &c)| f64::from(c + u32::from(g == group))).collect();
            let m = bumped.iter().sum::<f64>() / bumped.len() as f64;
            bumped.iter().map(|c| (c - m).powi(2)).sum()
        };
        levels.iter().enumerate().map(|(f, &l)| spread(&self.counts[f][l])).sum::<f64>() + spread(&self.totals)
    }

    /// Largest between-group difference over every factor level.
    pub fn max_marginal_difference(&self) -> u32 {
        self.counts
            .iter()
            .flatten()
            .map(|row| row.iter().max().unwrap_or(&0) - row.iter().min().unwrap_or(&0))
            .max()
            .unwrap_or(0)
    }

    pub fn total_difference(&self) -> u32 {
        self.totals.iter().max().unwrap_or(&0) - self.totals.iter().min().unwrap_or(&0)
    }
}

/// Assignment probabilities: the minimizing groups share `p_best` (plus
/// whatever the others leave), every other group gets (1 - p_best)/(k - 1).
pub fn assignment_probabilities(tallies: &Tallies, levels: &[usize], p_best: f64) -> Result<Vec<f64>> {
    let k = tallies.n_groups;
    if k < 2 {
        return Err(invalid_arg("minimization needs at least two groups"));
    }
    if !(1.0 / k as f64 - 1e-12..=1.0).contains(&p_best) {
        return Err(invalid_arg(format!("biased coin {p_best} outside [1/k, 1]")));
    }
    if levels.len() != tallies.counts.len() || levels.iter().zip(&tallies.counts).any(|(&l, c)| l >= c.len()) {
        return Err(invalid_arg("covariate levels do not match the tallies"));
    }
    let scores: Vec<f64> = (0..k).map(|g| tallies.imbalance(levels, g)).collect();
    let best = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let is_best = |s: f64| s - best < 1e-9;
    let m = scores.iter().filter(|&&s| is_best(s)).count();
    let other = (1.0 - p_best) / (k - 1) as f64;
    let min_share = (1.0 - (k - m) as f64 * other) / m as f64;
    Ok(scores.iter().map(|&s| if is_best(s) { min_share } else { other }).collect())
}

pub fn minimization_randomize<R: Rng + ?Sized>(
    profile: &PatientProfile,
    tallies: &mut Tallies,
    p_best: f64,
    rng: &mut R,
) -> Result<usize> {
    let levels = strata(profile);
    let probs = assignment_probabilities(tallies, &levels, p_best)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut group = probs.len() - 1;
    for (g, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            group = g;
            break;
        }
    }
    tallies.record(&levels, group);
    Ok(group)
}
