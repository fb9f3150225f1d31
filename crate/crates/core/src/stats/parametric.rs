//! Regression, a normality gate and the repeated-measures ANOVA path.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal, StudentsT};

use crate::error::{invalid_arg, Error, Result};

use super::nonparametric::friedman;
use super::{Method, TestResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Two-sided p of the t-test on the slope.
    pub p_value: f64,
    pub n: usize,
}

/// Ordinary least squares fit of `y` on `x`.
pub fn simple_linreg(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(invalid_arg("x and y differ in length"));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::UndefinedTest(format!("regression needs 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::UndefinedTest("x has zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = (syy - slope * sxy).max(0.0);
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let df = nf - 2.0;
    let p_value = if sse <= 1e-15 * syy.max(1e-300) {
        0.0
    } else {
        let se = (sse / df / sxx).sqrt();
        let t = slope / se;
        2.0 * StudentsT::new(0.0, 1.0, df).expect("positive df").sf(t.abs())
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        p_value: p_value.clamp(0.0, 1.0),
        n,
    })
}

/// Anderson-Darling normality test with estimated mean and variance.
/// Returns the small-sample adjusted A*^2 and its p-value.
pub fn anderson_darling(x: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n < 8 {
        return Err(Error::UndefinedTest(format!("normality test needs 8 values, got {n}")));
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    if sd <= 0.0 {
        return Err(Error::UndefinedTest("values have zero variance".into()));
    }
    let mut z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let norm = Normal::new(0.0, 1.0).expect("unit normal");
    let eps = 1e-300;
    let s: f64 = (0..n)
        .map(|i| {
            let f = norm.cdf(z[i]).max(eps);
            let g = norm.sf(z[n - 1 - i]).max(eps);
            (2.0 * i as f64 + 1.0) * (f.ln() + g.ln())
        })
        .sum();
    let a2 = -nf - s / nf;
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    Ok((a, p.clamp(0.0, 1.0)))
}

/// Time and group-by-time effects of a mixed design (participants nested in
/// groups, repeated over timepoints). Participant intercepts are removed by
/// centering each participant's series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmAnova {
    pub time: TestResult,
    pub interaction: TestResult,
}

pub fn rm_anova(scores: &[Vec<f64>], groups: &[usize]) -> Result<RmAnova> {
    let n = scores.len();
    if n != groups.len() {
        return Err(invalid_arg("one group label per participant required"));
    }
    let t = scores.first().map_or(0, Vec::len);
    if t < 2 || scores.iter().any(|s| s.len() != t) {
        return Err(invalid_arg("every participant needs the same >= 2 timepoints"));
    }
    let n_groups = groups.iter().max().map_or(0, |g| g + 1);
    let sizes: Vec<usize> = (0..n_groups).map(|g| groups.iter().filter(|&&x| x == g).count()).collect();
    let present = sizes.iter().filter(|&&s| s > 0).count();
    if n <= present {
        return Err(Error::UndefinedTest("no residual degrees of freedom".into()));
    }
    let centred: Vec<Vec<f64>> = scores
        .iter()
        .map(|s| {
            let m = s.iter().sum::<f64>() / t as f64;
            s.iter().map(|v| v - m).collect()
        })
        .collect();
    let time_means: Vec<f64> = (0..t)
        .map(|j| centred.iter().map(|s| s[j]).sum::<f64>() / n as f64)
        .collect();
    let mut group_means = vec![vec![0.0; t]; n_groups];
    for (s, &g) in centred.iter().zip(groups) {
        for j in 0..t {
            group_means[g][j] += s[j] / sizes[g] as f64;
        }
    }
    let ss_time = n as f64 * time_means.iter().map(|m| m * m).sum::<f64>();
    let ss_int: f64 = (0..n_groups)
        .filter(|&g| sizes[g] > 0)
        .map(|g| sizes[g] as f64 * (0..t).map(|j| (group_means[g][j] - time_means[j]).powi(2)).sum::<f64>())
        .sum();
    let ss_res: f64 = centred
        .iter()
        .zip(groups)
        .map(|(s, &g)| (0..t).map(|j| (s[j] - group_means[g][j]).powi(2)).sum::<f64>())
        .sum();
    let df_time = (t - 1) as f64;
    let df_int = ((present - 1) * (t - 1)) as f64;
    let df_res = ((n - present) * (t - 1)) as f64;
    let f_test = |ss: f64, df: f64| -> TestResult {
        let (stat, p) = if df == 0.0 {
            (0.0, 1.0)
        } else if ss_res <= 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            let f = (ss / df) / (ss_res / df_res);
            (f, FisherSnedecor::new(df, df_res).expect("positive df").sf(f))
        };
        TestResult {
            method: Method::RmAnova,
            statistic: stat,
            p_value: p.clamp(0.0, 1.0),
            n,
            df: Some(df),
            z: None,
            exact: false,
        }
    };
    Ok(RmAnova {
        time: f_test(ss_time, df_time),
        interaction: f_test(ss_int, df_int),
    })
}

/// Main effect of timepoint: the ANOVA path when the within-participant
/// residuals pass the normality gate (p > 0.05), Friedman otherwise.
pub fn timepoint_effect(scores: &[Vec<f64>], groups: &[usize]) -> Result<TestResult> {
    let residuals: Vec<f64> = scores
        .iter()
        .flat_map(|s| {
            let m = s.iter().sum::<f64>() / s.len().max(1) as f64;
            s.iter().map(move |v| v - m)
        })
        .collect();
    let normal = matches!(anderson_darling(&residuals), Ok((_, p)) if p > 0.05);
    if normal {
        Ok(rm_anova(scores, groups)?.time)
    } else {
        friedman(scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::SeededRng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = simple_linreg(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_x_variance_is_undefined() {
        assert!(matches!(
            simple_linreg(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedTest(_))
        ));
    }

    #[test]
    fn null_r_squared_mean() {
        let mut rng = SeededRng::new(2, 0);
        let n = 17;
        let reps = 4000;
        let mean: f64 = (0..reps)
            .map(|_| {
                let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                simple_linreg(&x, &y).unwrap().r_squared
            })
            .sum::<f64>()
            / reps as f64;
        assert!((mean - 1.0 / (n as f64 - 1.0)).abs() < 0.006, "mean R^2 {mean}");
    }

    #[test]
    fn negative_association_gives_negative_slope() {
        // larger reduction in proprioceptive error with larger BBT gain
        let error_change = [-6.0, -4.0, -3.0, -1.0, 0.0, 1.0];
        let bbt_change = [9.0, 7.0, 4.0, 3.0, 0.0, -1.0];
        assert!(simple_linreg(&error_change, &bbt_change).unwrap().slope < 0.0);
    }

    #[test]
    fn anderson_darling_separates_normal_from_skewed() {
        let mut rng = SeededRng::new(8, 0);
        let normal: Vec<f64> = (0..200).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let skewed: Vec<f64> = normal.iter().map(|v| v.exp()).collect();
        assert!(anderson_darling(&normal).unwrap().1 > 0.05);
        assert!(anderson_darling(&skewed).unwrap().1 < 0.001);
    }

    #[test]
    fn rm_anova_detects_time_effect() {
        let mut rng = SeededRng::new(4, 0);
        let scores: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let base = 20.0 + 5.0 * rng.sample::<f64, _>(StandardNormal) + i as f64 * 0.1;
                (0..3).map(|t| base + 2.0 * t as f64 + rng.sample::<f64, _>(StandardNormal)).collect()
            })
            .collect();
        let groups: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let r = rm_anova(&scores, &groups).unwrap();
        assert!(r.time.p_value < 1e-6);
        assert!(r.interaction.p_value > 0.001);
        assert_eq!(r.time.df, Some(2.0));
        assert_eq!(r.interaction.df, Some(4.0));
    }
}
