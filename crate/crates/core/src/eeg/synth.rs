//! Synthetic recordings of the Crisscross-with-feedback task.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::assess::crossing_speeds;
use crate::error::{invalid_arg, Error, Result};
use crate::kinematics::{crossing_pattern, CrossingPattern, SeededRng, Workspace};
use crate::patient::{perceive_crossing, PatientProfile, Side};

use super::{EegRecording, Event, EventKind, Mirror, EEG_FS, MONTAGE_10_20};

/// Relative pCNV amplitude per electrode for a right-hand task
/// (left-hemisphere dominant).
const PCNV_WEIGHTS: [f64; 19] = [
    0.05, 0.05, 0.1, 0.3, 0.3, 0.2, 0.1, 0.3, 0.8, 0.7, 0.4, 0.15, 0.4, 0.9, 1.0, 0.5, 0.2, 0.4, 0.3,
];

/// Relative blink amplitude per electrode.
const BLINK_WEIGHTS: [f64; 19] = [
    1.0, 1.0, 0.55, 0.45, 0.5, 0.45, 0.55, 0.15, 0.15, 0.15, 0.15, 0.15, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05,
];

const BLINK_DURATION_S: f64 = 0.4;
const REBOUND_DECAY_S: f64 = 0.15;
const REBOUND_PEAK_S: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_crossings: usize,
    /// Amplitude of the anticipatory ramp at the button press, microvolts.
    pub pcnv_gain_uv: f64,
    /// Constant crossing speed; stratified over `speed_range` when `None`.
    pub fixed_speed: Option<f64>,
    pub speed_range: (f64, f64),
    pub ws: Workspace,
    pub participant: PatientProfile,
    /// RMS of the background 1/f activity per channel.
    pub noise_uv: f64,
    pub line_uv: f64,
    pub blink_uv: f64,
    pub blink_rate_hz: f64,
    /// Peak of the positive post-press rebound relative to the ramp amplitude.
    pub rebound_ratio: f64,
    pub feedback_delay_s: f64,
    /// Pause between the end of one movement and the next onset.
    pub gap_range_s: (f64, f64),
    pub lead_in_s: f64,
    pub tail_s: f64,
    pub affected_side: Side,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_crossings: 100,
            pcnv_gain_uv: 10.0,
            fixed_speed: None,
            speed_range: (8.0, 18.0),
            ws: Workspace::assessment(),
            participant: PatientProfile::pure_latency(0.3),
            noise_uv: 10.0,
            line_uv: 5.0,
            blink_uv: 90.0,
            blink_rate_hz: 0.2,
            rebound_ratio: 0.5,
            feedback_delay_s: 0.083,
            gap_range_s: (1.5, 3.0),
            lead_in_s: 10.0,
            tail_s: 10.0,
            affected_side: Side::Right,
        }
    }
}

/// Timing of one crossing within the recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingKinematics {
    pub crossing: usize,
    pub onset_sample: usize,
    pub speed_degps: f64,
    /// Press time after onset, seconds.
    pub press_s: Option<f64>,
}

impl CrossingKinematics {
    pub fn duration_s(&self, ws: &Workspace) -> f64 {
        ws.span() / self.speed_degps
    }

    pub fn pattern(&self, ws: &Workspace, dt: f64) -> Result<CrossingPattern> {
        crossing_pattern(ws.min_deg, ws.max_deg, self.speed_degps, dt)
    }
}

/// Known quantities of a synthetic recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub pcnv_gain_uv: f64,
    /// Noise-free Pz amplitude averaged over 0.5-1.0 s after onset.
    pub pz_window_uv: f64,
    pub affected_side: Side,
    pub n_blinks: usize,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub recording: EegRecording,
    pub kinematics: Vec<CrossingKinematics>,
    pub truth: GroundTruth,
}

/// Noise-free pCNV time course `t` seconds after onset for a press at `press`.
pub fn pcnv_waveform(t: f64, press: f64, gain: f64, rebound_ratio: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else if t < press {
        -gain * t / press
    } else {
        let u = t - press;
        -gain * (-u / REBOUND_DECAY_S).exp()
            + rebound_ratio * gain * (u / REBOUND_PEAK_S) * (1.0 - u / REBOUND_PEAK_S).exp()
    }
}

/// Background activity: unit-variance 1/f sources (Kellet's three-pole
/// approximation).
fn pink_source<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    let mut out: Vec<f64> = (0..n + 2000)
        .map(|_| {
            let w: f64 = rng.sample(StandardNormal);
            b0 = 0.99765 * b0 + w * 0.099_046;
            b1 = 0.963 * b1 + w * 0.296_516_4;
            b2 = 0.57 * b2 + w * 1.052_691_3;
            b0 + b1 + b2 + w * 0.1848
        })
        .skip(2000)
        .collect();
    let mean = out.iter().sum::<f64>() / n as f64;
    let sd = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    for v in &mut out {
        *v = (*v - mean) / sd;
    }
    out
}

pub fn synth_recording(cfg: &SynthConfig, seed: u64) -> Result<SynthOutput> {
    if !(cfg.pcnv_gain_uv >= 0.0 && cfg.pcnv_gain_uv.is_finite()) {
        return Err(invalid_arg(format!("pcnv gain must be >= 0, got {}", cfg.pcnv_gain_uv)));
    }
    if cfg.n_crossings == 0 {
        return Err(invalid_arg("synthetic recording needs at least one crossing"));
    }
    if !(cfg.gap_range_s.0 > 0.0 && cfg.gap_range_s.0 <= cfg.gap_range_s.1) {
        return Err(invalid_arg("gap range must be positive and ordered"));
    }
    for (name, v) in [("noise_uv", cfg.noise_uv), ("line_uv", cfg.line_uv), ("blink_uv", cfg.blink_uv)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid_arg(format!("{name} must be >= 0")));
        }
    }
    cfg.participant.validate()?;
    let fs = EEG_FS;
    let base = SeededRng::new(seed, 0xEE6);
    let speeds = match cfg.fixed_speed {
        Some(s) => vec![s; cfg.n_crossings],
        None => crossing_speeds(cfg.n_crossings, cfg.speed_range, &mut base.derive(1)),
    };

    let mut perception = base.derive(2);
    let mut gaps = base.derive(3);
    let mut kinematics = Vec::with_capacity(cfg.n_crossings);
    let mut events = Vec::new();
    let mut t = cfg.lead_in_s;
    for (k, &speed) in speeds.iter().enumerate() {
        let pattern = crossing_pattern(cfg.ws.min_deg, cfg.ws.max_deg, speed, 1.0 / fs)?;
        let press_s = perceive_crossing(&pattern, &cfg.participant, &mut perception);
        let onset_sample = (t * fs).round() as usize;
        events.push(Event {
            sample: onset_sample,
            kind: EventKind::MovementOnset,
        });
        if let Some(p) = press_s {
            let press_sample = onset_sample + (p * fs).round() as usize;
            events.push(Event {
                sample: press_sample,
                kind: EventKind::ButtonPress,
            });
            events.push(Event {
                sample: onset_sample + ((p + cfg.feedback_delay_s) * fs).round() as usize,
                kind: EventKind::FeedbackOn,
            });
        }
        kinematics.push(CrossingKinematics {
            crossing: k,
            onset_sample,
            speed_degps: speed,
            press_s,
        });
        let gap = gaps.random_range(cfg.gap_range_s.0..=cfg.gap_range_s.1);
        t = onset_sample as f64 / fs + pattern.duration() + gap;
    }
    let last = kinematics.last().map_or(0.0, |k| k.onset_sample as f64 / fs + k.duration_s(&cfg.ws));
    let n = ((last + cfg.tail_s) * fs).ceil() as usize;
    let c = MONTAGE_10_20.len();

    // anticipatory potential, one template per sample
    let mut pcnv = vec![0.0; n];
    let mut window_means = Vec::with_capacity(kinematics.len());
    for k in &kinematics {
        let press = k.press_s.unwrap_or_else(|| k.duration_s(&cfg.ws));
        let end = (k.onset_sample + ((press + 4.0) * fs) as usize).min(n);
        for (i, v) in pcnv.iter_mut().enumerate().take(end).skip(k.onset_sample) {
            let tt = (i - k.onset_sample) as f64 / fs;
            *v += pcnv_waveform(tt, press, cfg.pcnv_gain_uv, cfg.rebound_ratio);
        }
        let w: Vec<f64> = (150..=300)
            .map(|s| pcnv_waveform(s as f64 / fs, press, cfg.pcnv_gain_uv, cfg.rebound_ratio))
            .collect();
        window_means.push(w.iter().sum::<f64>() / w.len() as f64);
    }

    let mut noise_rng = base.derive(4);
    let sources: Vec<Vec<f64>> = if cfg.noise_uv > 0.0 {
        (0..c).map(|_| pink_source(n, &mut noise_rng)).collect()
    } else {
        vec![]
    };
    let mut mix_rng = base.derive(7);
    let mixing: Vec<Vec<f64>> = (0..c)
        .map(|_| {
            let row: Vec<f64> = (0..c).map(|_| mix_rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row.into_iter().map(|v| v / norm).collect()
        })
        .collect();

    let mut blink_rng = base.derive(5);
    let mut blinks = Vec::new();
    if cfg.blink_uv > 0.0 && cfg.blink_rate_hz > 0.0 {
        let mut bt = 0.0;
        loop {
            bt += -(1.0 - blink_rng.random::<f64>()).ln() / cfg.blink_rate_hz;
            if bt + BLINK_DURATION_S >= n as f64 / fs {
                break;
            }
            blinks.push(((bt * fs) as usize, cfg.blink_uv * blink_rng.random_range(0.8..1.2)));
        }
    }
    let blink_len = (BLINK_DURATION_S * fs) as usize;
    let mut blink = vec![0.0; n];
    for &(start, amp) in &blinks {
        for j in 0..blink_len {
            blink[start + j] += amp * (PI * j as f64 / blink_len as f64).sin().powi(2);
        }
    }

    let mut line_rng = base.derive(6);
    let line: Vec<(f64, f64)> = (0..c)
        .map(|_| {
            (
                cfg.line_uv * line_rng.random_range(0.5..1.5),
                line_rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();

    let data: Vec<Vec<f64>> = (0..c)
        .map(|ch| {
            (0..n)
                .map(|i| {
                    let background: f64 = if sources.is_empty() {
                        0.0
                    } else {
                        cfg.noise_uv * (0..c).map(|j| mixing[ch][j] * sources[j][i]).sum::<f64>()
                    };
                    let (amp, phase) = line[ch];
                    background
                        + amp * (2.0 * PI * 60.0 * i as f64 / fs + phase).sin()
                        + BLINK_WEIGHTS[ch] * blink[i]
                        + PCNV_WEIGHTS[ch] * pcnv[i]
                })
                .collect()
        })
        .collect();
    let labels = MONTAGE_10_20.iter().map(|s| s.to_string()).collect();
    let mut recording = EegRecording::new(labels, fs, data, events)?;
    if cfg.affected_side == Side::Left {
        recording = recording.mirror_electrodes(Side::Left)?;
    }
    Ok(SynthOutput {
        recording,
        kinematics,
        truth: GroundTruth {
            pcnv_gain_uv: cfg.pcnv_gain_uv,
            pz_window_uv: window_means.iter().sum::<f64>() / window_means.len() as f64,
            affected_side: cfg.affected_side,
            n_blinks: blinks.len(),
        },
    })
}

pub fn write_kinematics_csv<W: Write>(rows: &[CrossingKinematics], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<kinematics csv>".into(),
        source: e,
    })?;
    Ok(())
}

pub fn read_kinematics_csv<R: Read>(reader: R) -> Result<Vec<CrossingKinematics>> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}
