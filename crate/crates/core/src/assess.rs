//! Robotic assessment battery: Crisscross, Move and Match, ThumbSense and
//! Hand Capacity, plus impairment classification and the visit schedule.

use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::kinematics::{crossing_pattern, Workspace};
use crate::patient::{perceive_crossing, PatientProfile, PERCEPTION_TICK};

/// Sample interval used when simulating assessments. Crossing ramps are
/// piecewise linear, so interpolation on this grid is exact.
pub const ASSESSMENT_DT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrisscrossConfig {
    pub ws: Workspace,
    pub n_crossings: usize,
    pub speed_range: (f64, f64),
    pub dt: f64,
    /// Exchange which finger flexes and which extends.
    pub swap_fingers: bool,
}

impl Default for CrisscrossConfig {
    fn default() -> Self {
        Self {
            ws: Workspace::assessment(),
            n_crossings: 20,
            speed_range: (8.0, 18.0),
            dt: ASSESSMENT_DT,
            swap_fingers: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingTrial {
    pub speed: f64,
    pub press_time: Option<f64>,
    pub error_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrisscrossResult {
    pub trials: Vec<CrossingTrial>,
    pub mean_error_deg: f64,
}

/// Evenly stratified speeds over the range, shuffled.
pub fn crossing_speeds<R: Rng + ?Sized>(n: usize, range: (f64, f64), rng: &mut R) -> Vec<f64> {
    let mut speeds: Vec<f64> = if n == 1 {
        vec![0.5 * (range.0 + range.1)]
    } else {
        (0..n)
            .map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64)
            .collect()
    };
    speeds.shuffle(rng);
    speeds
}

/// One Crisscross run. Trials without a press are scored at the separation
/// reached at the end of the movement.
pub fn run_crisscross<R: Rng + ?Sized>(
    cfg: &CrisscrossConfig,
    patient: &PatientProfile,
    rng: &mut R,
) -> Result<CrisscrossResult> {
    patient.validate()?;
    let speeds = crossing_speeds(cfg.n_crossings, cfg.speed_range, rng);
    let mut trials = Vec::with_capacity(speeds.len());
    for speed in speeds {
        let mut pattern = crossing_pattern(cfg.ws.min_deg, cfg.ws.max_deg, speed, cfg.dt)?;
        if cfg.swap_fingers {
            pattern = pattern.swapped();
        }
        let press_time = perceive_crossing(&pattern, patient, rng);
        let at = press_time.unwrap_or_else(|| pattern.duration());
        let error_deg = pattern.separation_at(at)?.abs();
        trials.push(CrossingTrial {
            speed,
            press_time,
            error_deg,
        });
    }
    let mean_error_deg = trials.iter().map(|t| t.error_deg).sum::<f64>() / trials.len().max(1) as f64;
    Ok(CrisscrossResult {
        trials,
        mean_error_deg,
    })
}

/// Control-cohort statistics that define proprioceptive impairment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentThreshold {
    pub control_mean: f64,
    pub control_sd: f64,
    pub n_sd: f64,
}

impl ImpairmentThreshold {
    pub fn new(control_mean: f64, control_sd: f64) -> Self {
        Self {
            control_mean,
            control_sd,
            n_sd: 2.0,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.control_mean + self.n_sd * self.control_sd
    }
}

impl Default for ImpairmentThreshold {
    fn default() -> Self {
        Self::new(7.68, 2.56)
    }
}

/// Impaired when the Crisscross error strictly exceeds the threshold.
pub fn classify_impairment(mean_error: f64, thr: &ImpairmentThreshold) -> bool {
    mean_error > thr.threshold()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveMatchConfig {
    pub driver_speed: f64,
    pub ws: Workspace,
    /// Full up-and-down cycles of the driven finger.
    pub cycles: usize,
    pub dt: f64,
}

impl Default for MoveMatchConfig {
    fn default() -> Self {
        Self {
            driver_speed: 10.0,
            ws: Workspace::assessment(),
            cycles: 3,
            dt: 0.01,
        }
    }
}

/// How the tracking finger follows the driven one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerModel {
    pub lag: f64,
    pub offset: f64,
    pub noise_sd: f64,
}

impl TrackerModel {
    pub fn from_patient(p: &PatientProfile) -> Self {
        Self {
            lag: p.press_latency.mean,
            offset: 0.0,
            noise_sd: p.prop_noise_sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveMatchResult {
    pub mean_abs_error_deg: f64,
    /// (t, driver, tracker) samples.
    pub trace: Vec<(f64, f64, f64)>,
}

fn triangle(cfg: &MoveMatchConfig, t: f64) -> f64 {
    let span = cfg.ws.span();
    let half_period = span / cfg.driver_speed;
    let phase = (t.max(0.0) / half_period).rem_euclid(2.0);
    if phase <= 1.0 {
        cfg.ws.min_deg + span * phase
    } else {
        cfg.ws.max_deg - span * (phase - 1.0)
    }
}

/// Tracking run against a triangle-wave driver; score is the time-averaged
/// absolute angle difference (trapezoid rule).
pub fn run_move_match_with<R: Rng + ?Sized>(cfg: &MoveMatchConfig, tracker: &TrackerModel, rng: &mut R) -> Result<MoveMatchResult> {
    if !(cfg.driver_speed > 0.0 && cfg.dt > 0.0 && cfg.cycles > 0) {
        return Err(invalid_arg("move-and-match needs positive speed, dt and cycles"));
    }
    let duration = 2.0 * cfg.cycles as f64 * cfg.ws.span() / cfg.driver_speed;
    let n = (duration / cfg.dt).round() as usize;
    let mut trace = Vec::with_capacity(n + 1);
    let mut bin = usize::MAX;
    let mut noise = 0.0;
    for k in 0..=n {
        let t = k as f64 * duration / n as f64;
        let b = (t / PERCEPTION_TICK) as usize;
        if b != bin {
            bin = b;
            noise = if tracker.noise_sd > 0.0 {
                tracker.noise_sd * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
        }
        let driver = triangle(cfg, t);
        let track = triangle(cfg, t - tracker.lag) + tracker.offset + noise;
        trace.push((t, driver, track));
    }
    let area: f64 = trace
        .windows(2)
        .map(|w| 0.5 * ((w[0].2 - w[0].1).abs() + (w[1].2 - w[1].1).abs()) * (w[1].0 - w[0].0))
        .sum();
    Ok(MoveMatchResult {
        mean_abs_error_deg: area / duration,
        trace,
    })
}

pub fn run_move_match<R: Rng + ?Sized>(cfg: &MoveMatchConfig, patient: &PatientProfile, rng: &mut R) -> Result<f64> {
    patient.validate()?;
    Ok(run_move_match_with(cfg, &TrackerModel::from_patient(patient), rng)?.mean_abs_error_deg)
}

pub const THUMB_POSES: [f64; 3] = [0.0, 0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThumbSenseConfig {
    pub n_trials: usize,
    pub hold_range_s: (f64, f64),
    /// Thumb travel, degrees, corresponding to one pose unit.
    pub deg_per_pose_unit: f64,
}

impl Default for ThumbSenseConfig {
    fn default() -> Self {
        Self {
            n_trials: 15,
            hold_range_s: (6.0, 10.0),
            deg_per_pose_unit: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThumbTrial {
    pub pose: f64,
    pub hold_s: f64,
    pub response: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThumbSenseResult {
    pub trials: Vec<ThumbTrial>,
    pub accuracy_pct: f64,
    pub percent_missed: f64,
}

/// Three-alternative thumb pose identification by nearest prototype.
pub fn run_thumbsense<R: Rng + ?Sized>(
    cfg: &ThumbSenseConfig,
    patient: &PatientProfile,
    rng: &mut R,
) -> Result<ThumbSenseResult> {
    if !(10..=30).contains(&cfg.n_trials) {
        return Err(invalid_arg(format!("ThumbSense runs 10-30 trials, got {}", cfg.n_trials)));
    }
    let sd = patient.prop_noise_sd / cfg.deg_per_pose_unit;
    let mut trials = Vec::with_capacity(cfg.n_trials);
    for _ in 0..cfg.n_trials {
        let pose = THUMB_POSES[rng.random_range(0..3)];
        let hold_s = rng.random_range(cfg.hold_range_s.0..=cfg.hold_range_s.1);
        let response = if sd.is_finite() {
            let perceived = pose + sd * rng.sample::<f64, _>(StandardNormal);
            THUMB_POSES
                .into_iter()
                .min_by(|a, b| (a - perceived).abs().total_cmp(&(b - perceived).abs()))
                .unwrap_or(0.5)
        } else {
            THUMB_POSES[rng.random_range(0..3)]
        };
        trials.push(ThumbTrial { pose, hold_s, response });
    }
    let correct = trials.iter().filter(|t| t.pose == t.response).count();
    let accuracy_pct = 100.0 * correct as f64 / trials.len() as f64;
    Ok(ThumbSenseResult {
        trials,
        accuracy_pct,
        percent_missed: 100.0 - accuracy_pct,
    })
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn segments_cross(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Normalized area of the index/middle force workspace (shoelace formula).
pub fn hand_capacity(boundary: &[(f64, f64)], reference_area: f64) -> Result<f64> {
    if !(reference_area > 0.0) {
        return Err(invalid_arg("reference area must be positive"));
    }
    let n = boundary.len();
    if n < 3 {
        return Ok(0.0);
    }
    for i in 0..n {
        for j in i + 1..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (a1, a2) = (boundary[i], boundary[(i + 1) % n]);
            let (b1, b2) = (boundary[j], boundary[(j + 1) % n]);
            if segments_cross(a1, a2, b1, b2) {
                return Err(invalid_arg(format!("force boundary self-intersects (edges {i} and {j})")));
            }
        }
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (boundary[i], boundary[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    Ok(0.5 * twice.abs() / reference_area)
}

const EXTENSION_RATIO: f64 = 0.6;
const COCONTRACTION: f64 = 0.7;

/// Octagonal (F_index, F_middle) boundary of maximal voluntary forces.
/// Flexion is positive; opposing-direction corners shrink with poor individuation.
pub fn force_boundary(strength_n: f64, individuation: f64) -> Vec<(f64, f64)> {
    let f = strength_n;
    let e = EXTENSION_RATIO * strength_n;
    let a = COCONTRACTION;
    let ind = individuation.clamp(0.0, 1.0);
    vec![
        (f, 0.0),
        (a * f, a * f),
        (0.0, f),
        (-a * e * ind, a * f * ind),
        (-e, 0.0),
        (-a * e, -a * e),
        (0.0, -e),
        (a * f * ind, -a * e * ind),
    ]
}

/// Force-workspace area of an unimpaired hand (15 N flexion, full individuation).
pub fn reference_force_area() -> f64 {
    let b = force_boundary(15.0, 1.0);
    hand_capacity(&b, 1.0).expect("reference boundary is simple")
}

pub fn run_hand_capacity(patient: &PatientProfile) -> Result<f64> {
    hand_capacity(&force_boundary(patient.strength_n, patient.individuation), reference_force_area())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduledItem {
    ThumbSense,
    MoveAndMatch,
    Bbt,
    Crisscross,
    UnassistedGameplay,
    Tuning,
}

impl ScheduledItem {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduledItem::ThumbSense => "thumbsense",
            ScheduledItem::MoveAndMatch => "move_and_match",
            ScheduledItem::Bbt => "bbt",
            ScheduledItem::Crisscross => "crisscross",
            ScheduledItem::UnassistedGameplay => "unassisted_gameplay",
            ScheduledItem::Tuning => "tuning",
        }
    }
}

/// Assessments (and gain tuning) due in training session 1..=9.
pub fn assessment_schedule(session: u32) -> Result<BTreeSet<ScheduledItem>> {
    use ScheduledItem::*;
    let items: &[ScheduledItem] = match session {
        1 | 4 | 7 => &[ThumbSense, Tuning],
        2 | 5 | 8 => &[MoveAndMatch, Bbt],
        3 | 6 | 9 => &[Crisscross, UnassistedGameplay],
        _ => return Err(invalid_arg(format!("session {session} outside 1..=9"))),
    };
    Ok(items.iter().copied().collect())
}

/// Battery run at both baselines, post-therapy and one-month follow-up.
pub fn full_battery() -> BTreeSet<ScheduledItem> {
    use ScheduledItem::*;
    [ThumbSense, MoveAndMatch, Bbt, Crisscross].into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentRow {
    pub timepoint: String,
    pub assessment: String,
    pub score: f64,
    pub units: String,
}

/// Per-participant ledger: `timepoint,assessment,score,units`.
pub fn write_assessment_csv<W: Write>(rows: &[AssessmentRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<assessment csv>".into(),
        source: e,
    })
}
