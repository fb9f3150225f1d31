//! Simulated participants: perception and motor response models that close
//! the loop with the games and assessments, and the generative outcome model.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::games::{FingerSet, Movement, NoteSpec, TrainingMode};
use crate::kinematics::{CrossingPattern, SeededRng};

/// Minimal clinically important BBT change, blocks.
pub const MCID_BLOCKS: i32 = 6;
/// Resampling interval of perceived-separation noise, seconds.
pub const PERCEPTION_TICK: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Button-press (or tracking) latency, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub mean: f64,
    pub sd: f64,
}

impl Latency {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sd == 0.0 {
            return self.mean.max(0.0);
        }
        (self.mean + self.sd * rng.sample::<f64, _>(rand_distr::StandardNormal)).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientProfile {
    pub id: u32,
    pub age: f64,
    pub baseline_bbt: f64,
    /// Per-finger perceived-angle noise, degrees.
    pub prop_noise_sd: f64,
    pub press_latency: Latency,
    pub motor_noise_sd: f64,
    pub skill: f64,
    /// Mean finger force at movement initiation, N.
    #[serde(default = "default_intent_force")]
    pub intent_force_n: f64,
    /// Flexion MVC of the stronger finger, N.
    #[serde(default = "default_strength")]
    pub strength_n: f64,
    /// Ability to produce opposing forces with the two fingers, 0..1.
    #[serde(default = "default_individuation")]
    pub individuation: f64,
    #[serde(default = "default_side")]
    pub affected_side: Side,
    #[serde(default)]
    pub group: Option<TrainingMode>,
    #[serde(default)]
    pub impaired: Option<bool>,
}

fn default_intent_force() -> f64 {
    4.0
}
fn default_strength() -> f64 {
    15.0
}
fn default_individuation() -> f64 {
    0.8
}
fn default_side() -> Side {
    Side::Right
}

impl PatientProfile {
    pub fn validate(&self) -> Result<()> {
        let sds = [
            ("prop_noise_sd", self.prop_noise_sd),
            ("press_latency.sd", self.press_latency.sd),
            ("motor_noise_sd", self.motor_noise_sd),
        ];
        for (name, v) in sds {
            if v.is_nan() || v < 0.0 {
                return Err(invalid_arg(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.baseline_bbt >= 0.0) {
            return Err(invalid_arg("baseline_bbt must be >= 0"));
        }
        if !(self.press_latency.mean >= 0.0) {
            return Err(invalid_arg("press latency mean must be >= 0"));
        }
        Ok(())
    }

    /// Noise-free, zero-latency participant with saturated skill.
    pub fn oracle() -> Self {
        Self {
            id: 0,
            age: 55.0,
            baseline_bbt: 50.0,
            prop_noise_sd: 0.0,
            press_latency: Latency { mean: 0.0, sd: 0.0 },
            motor_noise_sd: 0.0,
            skill: 1e3,
            intent_force_n: 10.0,
            strength_n: 15.0,
            individuation: 1.0,
            affected_side: Side::Right,
            group: None,
            impaired: None,
        }
    }

    /// A participant who never produces a successful movement.
    pub fn inert() -> Self {
        Self {
            skill: -1e3,
            intent_force_n: 0.0,
            ..Self::oracle()
        }
    }

    /// Participant with only a press latency, no perceptual noise.
    pub fn pure_latency(latency: f64) -> Self {
        Self {
            press_latency: Latency { mean: latency, sd: 0.0 },
            ..Self::oracle()
        }
    }
}

pub fn load_cohort(path: &Path) -> Result<Vec<PatientProfile>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_cohort(&text, &path.display().to_string())
}

pub fn parse_cohort(text: &str, source_name: &str) -> Result<Vec<PatientProfile>> {
    let cohort: Vec<PatientProfile> = serde_json::from_str(text).map_err(|e| Error::Parse {
        source_name: source_name.to_string(),
        line: e.line(),
        field: format!("column {}", e.column()),
        message: e.to_string(),
    })?;
    for p in &cohort {
        p.validate()?;
    }
    Ok(cohort)
}

/// Single participant document (same fields as a cohort entry).
pub fn parse_profile(text: &str, source_name: &str) -> Result<PatientProfile> {
    let p: PatientProfile = serde_json::from_str(text).map_err(|e| Error::Parse {
        source_name: source_name.to_string(),
        line: e.line(),
        field: format!("column {}", e.column()),
        message: e.to_string(),
    })?;
    p.validate()?;
    Ok(p)
}

/// Time at which the participant presses the button during a crossing, or
/// `None` if the press would fall after the movement ends.
///
/// The perceived separation is the true separation plus Gaussian noise
/// (sd `sqrt(2) * prop_noise_sd`, one independent error per finger) held
/// constant over 50 ms ticks. The press follows the first sign change of the
/// perceived separation by a sampled latency.
pub fn perceive_crossing<R: Rng + ?Sized>(
    pattern: &CrossingPattern,
    profile: &PatientProfile,
    rng: &mut R,
) -> Option<f64> {
    let detected = detect_crossing(pattern, profile.prop_noise_sd * std::f64::consts::SQRT_2, rng)?;
    let press = detected + profile.press_latency.sample(rng);
    (press <= pattern.duration()).then_some(press)
}

fn detect_crossing<R: Rng + ?Sized>(pattern: &CrossingPattern, noise_sd: f64, rng: &mut R) -> Option<f64> {
    let rising = pattern.rising.samples();
    let falling = pattern.falling.samples();
    // orient so the perceived separation starts positive
    let orient = if falling[0].angle >= rising[0].angle { 1.0 } else { -1.0 };
    let sep = |i: usize| orient * (falling[i].angle - rising[i].angle);
    let draw = |rng: &mut R| {
        if noise_sd == 0.0 {
            0.0
        } else {
            noise_sd * rng.sample::<f64, _>(rand_distr::StandardNormal)
        }
    };

    let t0 = rising[0].t;
    let mut bin = 0usize;
    let mut noise = draw(rng);
    let (mut i, mut t_prev, mut s_prev) = (0usize, t0, sep(0));
    if s_prev + noise <= 0.0 {
        return Some(t0);
    }
    // Walk the piecewise-linear separation, splitting segments at perception
    // ticks; within a piece the perceived value is linear in time.
    while i + 1 < rising.len() {
        let next_tick = t0 + (bin + 1) as f64 * PERCEPTION_TICK;
        let next_sample = rising[i + 1].t;
        let t_next = next_tick.min(next_sample);
        let s_next = if t_next == next_sample {
            sep(i + 1)
        } else {
            let frac = (t_next - rising[i].t) / (next_sample - rising[i].t);
            sep(i) + frac * (sep(i + 1) - sep(i))
        };
        let (va, vb) = (s_prev + noise, s_next + noise);
        if vb <= 0.0 {
            if vb == 0.0 {
                return Some(t_next);
            }
            return Some(t_prev + (t_next - t_prev) * va / (va - vb));
        }
        if t_next == next_sample {
            i += 1;
        }
        if t_next == next_tick {
            bin += 1;
            noise = draw(rng);
            if s_next + noise <= 0.0 {
                return Some(t_next);
            }
        }
        t_prev = t_next;
        s_prev = s_next;
    }
    None
}

/// Coefficients of the logistic success model
/// `p = logistic(slope * (skill + gain_weight * gain - difficulty_weight * difficulty))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseModel {
    pub slope: f64,
    pub gain_weight: f64,
    pub difficulty_weight: f64,
    /// Share of failed movements that are misses rather than early/late presses.
    pub miss_share: f64,
}

impl Default for ResponseModel {
    fn default() -> Self {
        Self {
            slope: 1.5,
            gain_weight: 0.5,
            difficulty_weight: 1.0,
            miss_share: 0.4,
        }
    }
}

/// Largest assistance gain the controller is expected to need.
pub const MAX_GAIN: f64 = 20.0;

impl ResponseModel {
    pub fn success_probability(&self, skill: f64, gain: f64, difficulty: f64) -> f64 {
        let z = self.slope * (skill + self.gain_weight * gain - self.difficulty_weight * difficulty);
        1.0 / (1.0 + (-z).exp())
    }
}

/// Simulated attempt at a note. `difficulty` is the scalar difficulty level
/// (including any presentation penalty) and `window` the hit tolerance.
pub fn respond_to_note<R: Rng + ?Sized>(
    note: &NoteSpec,
    profile: &PatientProfile,
    gain: f64,
    difficulty: f64,
    window: f64,
    model: &ResponseModel,
    rng: &mut R,
) -> Movement {
    let p = model.success_probability(profile.skill, gain, difficulty);
    let success = rng.random::<f64>() < p;
    let fingers = note.required_fingers();
    if success {
        let jitter = rng.random_range(-0.9..=0.9) * window;
        return Movement {
            fingers,
            press_time: Some(note.hit_time + jitter),
        };
    }
    if rng.random::<f64>() < model.miss_share {
        // no movement, or the wrong finger(s)
        let wrong = match rng.random_range(0..3) {
            0 => FingerSet::NONE,
            _ if fingers == FingerSet::BOTH => FingerSet::INDEX,
            _ => FingerSet::BOTH,
        };
        return Movement {
            fingers: wrong,
            press_time: (!wrong.is_empty()).then_some(note.hit_time),
        };
    }
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let overshoot = window * (1.05 + rng.sample::<f64, _>(rand_distr::Exp1));
    Movement {
        fingers,
        press_time: Some(note.hit_time + sign * overshoot),
    }
}

/// Mean and sd of the 1-month BBT change for one (group, impairment) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeCell {
    pub group: TrainingMode,
    pub impaired: bool,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModelParams {
    pub cells: Vec<OutcomeCell>,
}

impl OutcomeModelParams {
    pub fn validate(&self) -> Result<()> {
        for g in TrainingMode::ALL {
            for imp in [false, true] {
                let cell = self.cell(g, imp)?;
                if !(cell.sd > 0.0 && cell.sd.is_finite() && cell.mean.is_finite()) {
                    return Err(invalid_arg(format!(
                        "outcome cell {}/{} needs finite mean and sd > 0",
                        g.as_str(),
                        imp
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cell(&self, group: TrainingMode, impaired: bool) -> Result<&OutcomeCell> {
        self.cells
            .iter()
            .find(|c| c.group == group && c.impaired == impaired)
            .ok_or_else(|| {
                Error::InvalidConfiguration(format!(
                    "no outcome cell for group {} impaired={impaired}",
                    group.as_str()
                ))
            })
    }

    /// Every cell centred on zero, keeping the calibrated spreads.
    pub fn zero_effect(&self) -> Self {
        Self {
            cells: self.cells.iter().map(|c| OutcomeCell { mean: 0.0, ..*c }).collect(),
        }
    }
}

/// Integer BBT change at follow-up for an assigned participant.
pub fn sample_outcome<R: Rng + ?Sized>(
    profile: &PatientProfile,
    params: &OutcomeModelParams,
    rng: &mut R,
) -> Result<i32> {
    let group = profile
        .group
        .ok_or_else(|| Error::InvalidState(format!("participant {} has no group", profile.id)))?;
    let impaired = profile
        .impaired
        .ok_or_else(|| Error::InvalidState(format!("participant {} has unknown impairment", profile.id)))?;
    let cell = params.cell(group, impaired)?;
    let dist = Normal::new(cell.mean, cell.sd).map_err(|e| invalid_arg(e.to_string()))?;
    Ok(dist.sample(rng).round() as i32)
}

/// Population the cohort generator draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CohortKind {
    /// Chronic stroke participants with hand impairment.
    Stroke,
    /// Unimpaired, age-matched controls.
    Control,
}

/// Lognormal draw with the given median and log-scale sd.
fn lognormal<R: Rng + ?Sized>(rng: &mut R, median: f64, log_sd: f64) -> f64 {
    median * (log_sd * rng.sample::<f64, _>(rand_distr::StandardNormal)).exp()
}

/// Generate a cohort whose marginals follow the trial's baseline table.
pub fn generate_cohort(n: usize, kind: CohortKind, seed: u64) -> Vec<PatientProfile> {
    let base = SeededRng::new(seed, 0xC0_4047);
    (0..n)
        .map(|i| {
            let mut rng = base.derive(i as u64);
            let std_normal = |rng: &mut SeededRng| rng.sample::<f64, _>(rand_distr::StandardNormal);
            let age = (58.0 + 14.0 * std_normal(&mut rng)).clamp(25.0, 85.0);
            match kind {
                CohortKind::Stroke => {
                    let bbt = (24.0 + 19.0 * std_normal(&mut rng)).clamp(1.0, 60.0).round();
                    PatientProfile {
                        id: i as u32 + 1,
                        age: age.round(),
                        baseline_bbt: bbt,
                        prop_noise_sd: lognormal(&mut rng, STROKE_NOISE_MEDIAN, STROKE_NOISE_LOG_SD),
                        press_latency: Latency {
                            mean: lognormal(&mut rng, STROKE_LATENCY_MEDIAN, STROKE_LATENCY_LOG_SD),
                            sd: 0.08,
                        },
                        motor_noise_sd: lognormal(&mut rng, 3.0, 0.4),
                        skill: -2.2 + 0.04 * bbt + 0.5 * std_normal(&mut rng),
                        intent_force_n: lognormal(&mut rng, 4.0, 0.3),
                        strength_n: lognormal(&mut rng, 13.0, 0.7),
                        individuation: (0.6 + 0.2 * std_normal(&mut rng)).clamp(0.05, 1.0),
                        affected_side: if rng.random::<f64>() < 25.0 / 45.0 { Side::Left } else { Side::Right },
                        group: None,
                        impaired: None,
                    }
                }
                CohortKind::Control => PatientProfile {
                    id: i as u32 + 1,
                    age: age.round(),
                    baseline_bbt: (55.0 + 8.0 * std_normal(&mut rng)).clamp(30.0, 80.0).round(),
                    prop_noise_sd: lognormal(&mut rng, CONTROL_NOISE_MEDIAN, CONTROL_NOISE_LOG_SD),
                    press_latency: Latency {
                        mean: lognormal(&mut rng, CONTROL_LATENCY_MEDIAN, CONTROL_LATENCY_LOG_SD),
                        sd: 0.05,
                    },
                    motor_noise_sd: lognormal(&mut rng, 1.5, 0.3),
                    skill: 1.0 + 0.4 * std_normal(&mut rng),
                    intent_force_n: lognormal(&mut rng, 8.0, 0.2),
                    strength_n: lognormal(&mut rng, 15.0, 0.25),
                    individuation: (0.9 + 0.05 * std_normal(&mut rng)).clamp(0.5, 1.0),
                    affected_side: Side::Right,
                    group: None,
                    impaired: None,
                },
            }
        })
        .collect()
}

// Perception parameters of the generated cohorts, tuned so simulated Crisscross
// scores land on the control statistics (7.68 +/- 2.56 deg) and the stroke
// baseline distribution (median 12 deg, 44% above the impairment threshold).
pub const CONTROL_NOISE_MEDIAN: f64 = 2.0;
pub const CONTROL_NOISE_LOG_SD: f64 = 0.35;
pub const CONTROL_LATENCY_MEDIAN: f64 = 0.365;
pub const CONTROL_LATENCY_LOG_SD: f64 = 0.25;
pub const STROKE_NOISE_MEDIAN: f64 = 4.0;
pub const STROKE_NOISE_LOG_SD: f64 = 0.6;
pub const STROKE_LATENCY_MEDIAN: f64 = 0.66;
pub const STROKE_LATENCY_LOG_SD: f64 = 0.5;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::Lane;
    use crate::kinematics::crossing_pattern;

    #[test]
    fn noiseless_press_is_exact() {
        for speed in [8.0, 10.5, 13.3, 18.0] {
            let c = crossing_pattern(12.0, 54.0, speed, 0.001).unwrap();
            let mut rng = SeededRng::new(1, 1);
            let t = perceive_crossing(&c, &PatientProfile::oracle(), &mut rng).unwrap();
            assert!((t - c.t_cross).abs() < 1e-9, "speed {speed}: {t} vs {}", c.t_cross);
            assert!(c.separation_at(t).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn latency_error_is_relative_speed_times_delay() {
        let c = crossing_pattern(12.0, 54.0, 10.5, 0.001).unwrap();
        let mut rng = SeededRng::new(1, 1);
        let t = perceive_crossing(&c, &PatientProfile::pure_latency(0.3), &mut rng).unwrap();
        assert!((c.separation_at(t).unwrap().abs() - 6.3).abs() < 1e-9);
    }

    #[test]
    fn detection_independent_of_sample_grid() {
        let profile = PatientProfile {
            prop_noise_sd: 3.0,
            ..PatientProfile::oracle()
        };
        let fine = crossing_pattern(12.0, 54.0, 12.0, 0.001).unwrap();
        let coarse = crossing_pattern(12.0, 54.0, 12.0, 0.05).unwrap();
        for seed in 0..20 {
            let a = perceive_crossing(&fine, &profile, &mut SeededRng::new(seed, 3));
            let b = perceive_crossing(&coarse, &profile, &mut SeededRng::new(seed, 3));
            assert!((a.unwrap() - b.unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn late_press_past_trial_end_is_no_press() {
        let c = crossing_pattern(12.0, 54.0, 18.0, 0.01).unwrap();
        let mut rng = SeededRng::new(0, 0);
        assert!(perceive_crossing(&c, &PatientProfile::pure_latency(5.0), &mut rng).is_none());
    }

    #[test]
    fn success_probability_shape() {
        let m = ResponseModel::default();
        assert_eq!(m.success_probability(1e3, 0.0, 0.0), 1.0);
        let grid: Vec<f64> = (0..=40).map(|k| m.success_probability(-1.0, k as f64 * 0.5, 0.0)).collect();
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
        assert!(m.success_probability(-1.0, 0.0, 1.0) < m.success_probability(-1.0, 0.0, 0.0));
    }

    #[test]
    fn average_profile_reaches_target_inside_gain_range() {
        // bisection on p(gain) = 0.8 for the mean generated stroke skill
        let cohort = generate_cohort(400, CohortKind::Stroke, 5);
        let mean_skill = cohort.iter().map(|p| p.skill).sum::<f64>() / cohort.len() as f64;
        let m = ResponseModel::default();
        let f = |g: f64| m.success_probability(mean_skill, g, 0.0) - 0.8;
        assert!(f(0.0) < 0.0 && f(MAX_GAIN) > 0.0);
        let (mut lo, mut hi) = (0.0, MAX_GAIN);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!(lo > 0.5 && lo < MAX_GAIN - 0.5, "crossing gain {lo}");
    }

    #[test]
    fn oracle_hits_every_note() {
        let note = NoteSpec { hit_time: 3.0, lane: Lane::Middle };
        let mut rng = SeededRng::new(2, 2);
        for _ in 0..100 {
            let mv = respond_to_note(&note, &PatientProfile::oracle(), 0.0, 0.0, 0.2, &ResponseModel::default(), &mut rng);
            let j = crate::games::judge_note(&note, &mv, 0.2);
            assert_eq!(j.category, crate::games::JudgementCategory::Hit);
        }
    }

    #[test]
    fn outcome_requires_assignment() {
        let params = crate::defaults::Defaults::embedded().outcome_params();
        let mut rng = SeededRng::new(0, 0);
        let mut p = PatientProfile::oracle();
        assert!(matches!(sample_outcome(&p, &params, &mut rng), Err(Error::InvalidState(_))));
        p.group = Some(TrainingMode::Virtual);
        assert!(matches!(sample_outcome(&p, &params, &mut rng), Err(Error::InvalidState(_))));
        p.impaired = Some(true);
        assert!(sample_outcome(&p, &params, &mut rng).is_ok());
    }

    #[test]
    fn cohort_json_roundtrip_and_errors() {
        let cohort = generate_cohort(3, CohortKind::Stroke, 1);
        let text = serde_json::to_string_pretty(&cohort).unwrap();
        let back = parse_cohort(&text, "mem").unwrap();
        assert_eq!(back, cohort);
        let err = parse_cohort("[{\"id\": 1,\n \"age\": \"old\"}]", "bad.json").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let mut neg = cohort[0].clone();
        neg.prop_noise_sd = -1.0;
        assert!(neg.validate().is_err());
    }
}
