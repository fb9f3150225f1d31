//! Assist-as-needed machinery.
//!
//! The success-rate controller raises the assistance gain by one step after
//! every failed movement and lowers it by a quarter step after every success,
//! so the expected drift vanishes at an 80% success rate.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::kinematics::{Finger, Trajectory, Workspace};

/// Success rate the staircase converges to.
pub const TARGET_SUCCESS: f64 = 0.8;
/// Decrement after a success, as a fraction of the step.
pub const SUCCESS_DECREMENT: f64 = 0.25;
/// Load-cell force a participant must produce before physical assistance engages.
pub const INTENT_THRESHOLD_N: f64 = 2.0;
/// Stiffness of the simulated assistive controller (normalized units).
pub const UNIT_STIFFNESS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssistMode {
    Physical,
    Virtual,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Failure,
}

impl Outcome {
    pub fn from_success(success: bool) -> Self {
        if success {
            Outcome::Success
        } else {
            Outcome::Failure
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Failure => "failure",
        }
    }
}

/// Gain of one training channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssistState {
    pub gain: f64,
    pub step: f64,
    pub mode: AssistMode,
}

impl AssistState {
    pub fn new(gain: f64, step: f64, mode: AssistMode) -> Result<Self> {
        if !(gain.is_finite() && gain >= 0.0) {
            return Err(invalid_arg(format!("assistance gain must be >= 0, got {gain}")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(invalid_arg(format!("gain step must be > 0, got {step}")));
        }
        Ok(Self { gain, step, mode })
    }
}

/// One staircase update: `+step` on failure, `-step/4` (floored at zero) on success.
pub fn update_gain(s: AssistState, outcome: Outcome) -> AssistState {
    let gain = match outcome {
        Outcome::Failure => s.gain + s.step,
        Outcome::Success => (s.gain - SUCCESS_DECREMENT * s.step).max(0.0),
    };
    AssistState { gain, ..s }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Flexion,
    Extension,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Flexion => Direction::Extension,
            Direction::Extension => Direction::Flexion,
        }
    }
}

/// Training channel a gain belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    /// FingerPong: one gain averaged over both fingers and directions.
    Pooled,
    /// RehabHero: finger- and direction-specific gains.
    Finger(Finger, Direction),
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Pooled => write!(f, "pooled"),
            Channel::Finger(finger, Direction::Flexion) => write!(f, "{}-flexion", finger.as_str()),
            Channel::Finger(finger, Direction::Extension) => write!(f, "{}-extension", finger.as_str()),
        }
    }
}

/// Per-channel gains of one participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGains {
    channels: BTreeMap<Channel, AssistState>,
}

impl ChannelGains {
    /// RehabHero's four finger/direction channels plus the pooled FingerPong gain,
    /// all starting from `initial`.
    pub fn new(initial: AssistState) -> Self {
        let mut channels = BTreeMap::new();
        channels.insert(Channel::Pooled, initial);
        for finger in [Finger::Index, Finger::Middle] {
            for dir in [Direction::Flexion, Direction::Extension] {
                channels.insert(Channel::Finger(finger, dir), initial);
            }
        }
        Self { channels }
    }

    pub fn get(&self, channel: Channel) -> AssistState {
        self.channels[&channel]
    }

    pub fn gain(&self, channel: Channel) -> f64 {
        self.get(channel).gain
    }

    pub fn update(&mut self, channel: Channel, outcome: Outcome) -> (f64, f64) {
        let state = self.channels.get_mut(&channel).expect("all channels are populated");
        let before = state.gain;
        *state = update_gain(*state, outcome);
        (before, state.gain)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Channel, &AssistState)> {
        self.channels.iter()
    }

    pub fn set_mode(&mut self, mode: AssistMode) {
        for s in self.channels.values_mut() {
            s.mode = mode;
        }
    }
}

/// Assistive command for the physical-assistance controller.
///
/// No assistance unless the participant's own force reaches the intent threshold.
pub fn physical_assist_force(
    gain: f64,
    reference: &Trajectory,
    current_angle: f64,
    t: f64,
    intent_force: f64,
) -> Result<f64> {
    let target = reference.angle_at(t)?;
    if intent_force < INTENT_THRESHOLD_N {
        return Ok(0.0);
    }
    Ok(gain * UNIT_STIFFNESS * (target - current_angle))
}

/// Display-space position under virtual assistance: movement on either side of
/// the workspace midpoint is amplified by `gain`.
pub fn virtual_map(gain: f64, x: f64, ws: Workspace) -> Result<f64> {
    if !(gain.is_finite() && gain >= 1.0) {
        return Err(invalid_arg(format!("virtual gain must be >= 1, got {gain}")));
    }
    let mid = ws.mid();
    Ok((mid + gain * (x - mid)).clamp(ws.min_deg, ws.max_deg))
}

pub const MIN_TIMING_WINDOW: f64 = 0.05;
pub const MAX_BALL_SPEED_SCALE: f64 = 3.0;
pub const MIN_PADDLE_SCALE: f64 = 0.25;
pub const DEFAULT_TIMING_WINDOW: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifficultyState {
    /// RehabHero hit tolerance, seconds.
    pub timing_window: f64,
    pub ball_speed_scale: f64,
    pub paddle_scale: f64,
}

impl Default for DifficultyState {
    fn default() -> Self {
        Self {
            timing_window: DEFAULT_TIMING_WINDOW,
            ball_speed_scale: 1.0,
            paddle_scale: 1.0,
        }
    }
}

impl DifficultyState {
    /// Scalar difficulty: 0 at the defaults, +1 per e-fold of escalation on each axis.
    pub fn level(&self) -> f64 {
        (DEFAULT_TIMING_WINDOW / self.timing_window).ln() + self.ball_speed_scale.ln()
            - self.paddle_scale.ln()
    }
}

/// Tighten the games when unassisted success beats the target.
pub fn escalate_difficulty(d: DifficultyState, unassisted_success: f64) -> DifficultyState {
    if unassisted_success <= TARGET_SUCCESS {
        return d;
    }
    DifficultyState {
        timing_window: (d.timing_window * 0.9).max(MIN_TIMING_WINDOW),
        ball_speed_scale: (d.ball_speed_scale * 1.1).min(MAX_BALL_SPEED_SCALE),
        paddle_scale: (d.paddle_scale * 0.9).max(MIN_PADDLE_SCALE),
    }
}

/// Gains are tuned in the first session of each week (1, 4, 7) and frozen otherwise.
pub fn tune_session_schedule(session_index: u32) -> Result<bool> {
    if !(1..=9).contains(&session_index) {
        return Err(invalid_arg(format!("session index {session_index} outside 1..=9")));
    }
    Ok(matches!(session_index, 1 | 4 | 7))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerTraceRow {
    pub trial: usize,
    pub outcome: Outcome,
    pub gain_before: f64,
    pub gain_after: f64,
    pub channel: String,
}

pub fn write_trace_csv<W: Write>(rows: &[ControllerTraceRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<controller trace>".into(),
        source: e,
    })
}

/// Drive a single channel for `trials` movements against a success model
/// `p_success(gain)`, updating after every movement.
pub fn run_staircase<R: Rng + ?Sized>(
    initial: AssistState,
    trials: usize,
    p_success: impl Fn(f64) -> f64,
    rng: &mut R,
) -> Vec<ControllerTraceRow> {
    let mut state = initial;
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let p = p_success(state.gain);
        let outcome = Outcome::from_success(rng.random::<f64>() < p);
        let next = update_gain(state, outcome);
        rows.push(ControllerTraceRow {
            trial,
            outcome,
            gain_before: state.gain,
            gain_after: next.gain,
            channel: Channel::Pooled.to_string(),
        });
        state = next;
    }
    rows
}

/// Success fraction over the last `window` rows of a trace.
pub fn trailing_success_rate(rows: &[ControllerTraceRow], window: usize) -> f64 {
    let tail = &rows[rows.len().saturating_sub(window)..];
    if tail.is_empty() {
        return 0.0;
    }
    tail.iter().filter(|r| r.outcome == Outcome::Success).count() as f64 / tail.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::minimum_jerk_trajectory;
    use proptest::prelude::*;

    fn state(gain: f64) -> AssistState {
        AssistState::new(gain, 1.0, AssistMode::Physical).unwrap()
    }

    #[test]
    fn update_gain_examples() {
        assert_eq!(update_gain(state(2.0), Outcome::Failure).gain, 3.0);
        assert_eq!(update_gain(state(2.0), Outcome::Success).gain, 1.75);
        assert_eq!(update_gain(state(0.1), Outcome::Success).gain, 0.0);
        let s = update_gain(state(2.0), Outcome::Failure);
        assert_eq!((s.step, s.mode), (1.0, AssistMode::Physical));
    }

    #[test]
    fn drift_vanishes_at_eighty_percent() {
        // E[dg] = (1 - p) * step - p * step / 4
        let drift = |p: f64| (1.0 - p) - SUCCESS_DECREMENT * p;
        assert!(drift(0.8).abs() < 1e-15);
        assert!(drift(0.7) > 0.0 && drift(0.9) < 0.0);
    }

    #[test]
    fn four_to_one_ratio_nets_zero() {
        let mut s = state(5.0);
        for o in [
            Outcome::Failure,
            Outcome::Success,
            Outcome::Success,
            Outcome::Success,
            Outcome::Success,
        ] {
            s = update_gain(s, o);
        }
        assert!((s.gain - 5.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn gain_never_negative(outcomes in proptest::collection::vec(any::<bool>(), 0..400), g0 in 0.0f64..5.0, step in 0.01f64..3.0) {
            let mut s = AssistState::new(g0, step, AssistMode::Virtual).unwrap();
            for ok in outcomes {
                s = update_gain(s, Outcome::from_success(ok));
                prop_assert!(s.gain >= 0.0);
            }
        }

        #[test]
        fn virtual_map_is_monotone(a in 12.0f64..54.0, b in 12.0f64..54.0, g in 1.0f64..6.0) {
            let ws = Workspace::assessment();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(virtual_map(g, lo, ws).unwrap() <= virtual_map(g, hi, ws).unwrap());
        }
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(AssistState::new(-0.1, 1.0, AssistMode::None).is_err());
        assert!(AssistState::new(0.0, 0.0, AssistMode::None).is_err());
    }

    #[test]
    fn physical_assist_examples() {
        let reference = minimum_jerk_trajectory(20.0, 40.0, 0.0, 1.0, 0.001).unwrap();
        let at = reference.angle_at(0.5).unwrap();
        assert_eq!(physical_assist_force(2.0, &reference, at - 5.0, 0.5, 1.5).unwrap(), 0.0);
        assert_eq!(physical_assist_force(2.0, &reference, at, 0.5, 3.0).unwrap(), 0.0);
        let cmd = physical_assist_force(2.0, &reference, at - 5.0, 0.5, 3.0).unwrap();
        assert!((cmd - 10.0).abs() < 1e-12);
        assert!(physical_assist_force(2.0, &reference, at, 1.5, 3.0).is_err());
    }

    #[test]
    fn virtual_map_examples() {
        let ws = Workspace::assessment();
        for x in [12.0, 20.0, 33.0, 54.0] {
            assert_eq!(virtual_map(1.0, x, ws).unwrap(), x);
        }
        for g in [1.0, 2.5, 9.0] {
            assert_eq!(virtual_map(g, 33.0, ws).unwrap(), 33.0);
        }
        assert_eq!(virtual_map(2.0, 43.0, ws).unwrap(), 53.0);
        assert_eq!(virtual_map(3.0, 50.0, ws).unwrap(), 54.0);
        assert!(virtual_map(0.9, 30.0, ws).is_err());
    }

    #[test]
    fn escalation_examples() {
        let d = DifficultyState::default();
        assert_eq!(escalate_difficulty(d, 0.70), d);
        assert_eq!(escalate_difficulty(d, 0.80), d);
        let up = escalate_difficulty(d, 0.85);
        assert!((up.timing_window - 0.18).abs() < 1e-12);
        assert!((up.ball_speed_scale - 1.1).abs() < 1e-12);
        assert!((up.paddle_scale - 0.9).abs() < 1e-12);
        assert!(up.level() > d.level());
        let mut x = d;
        for _ in 0..200 {
            x = escalate_difficulty(x, 1.0);
        }
        assert_eq!(x.timing_window, MIN_TIMING_WINDOW);
        assert_eq!(x.ball_speed_scale, MAX_BALL_SPEED_SCALE);
        assert_eq!(x.paddle_scale, MIN_PADDLE_SCALE);
    }

    #[test]
    fn tuning_schedule() {
        let tuned: Vec<u32> = (1..=9).filter(|&i| tune_session_schedule(i).unwrap()).collect();
        assert_eq!(tuned, vec![1, 4, 7]);
        assert!(tune_session_schedule(0).is_err());
        assert!(tune_session_schedule(10).is_err());
    }

    #[test]
    fn trace_csv_header() {
        let mut rng = crate::kinematics::SeededRng::new(3, 0);
        let rows = run_staircase(state(1.0), 5, |_| 0.5, &mut rng);
        let mut buf = Vec::new();
        write_trace_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("trial,outcome,gain_before,gain_after,channel\n"));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn channel_gains_are_independent() {
        let mut g = ChannelGains::new(state(1.0));
        g.update(Channel::Finger(Finger::Index, Direction::Flexion), Outcome::Failure);
        assert_eq!(g.gain(Channel::Finger(Finger::Index, Direction::Flexion)), 2.0);
        assert_eq!(g.gain(Channel::Finger(Finger::Index, Direction::Extension)), 1.0);
        assert_eq!(g.gain(Channel::Pooled), 1.0);
        assert_eq!(g.iter().count(), 5);
    }
}
