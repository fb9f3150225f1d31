//! Epoching, trial rejection, pCNV measurement and kinematic correlation maps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::kinematics::Workspace;
use crate::patient::Side;

use super::ica::{pearson, remove_eye_artifacts, IcaConfig, IcaReport};
use super::synth::CrossingKinematics;
use super::{notch_then_bandpass, EegRecording, EventKind, Mirror, PCNV_ELECTRODES};

/// Baseline-corrected segments around movement onsets.
#[derive(Debug, Clone, PartialEq)]
pub struct Epochs {
    pub labels: Vec<String>,
    pub fs: f64,
    /// Samples before the onset.
    pub pre: usize,
    pub onsets: Vec<usize>,
    /// `data[channel][epoch][sample]`.
    pub data: Vec<Vec<Vec<f64>>>,
}

impl Epochs {
    pub fn n_epochs(&self) -> usize {
        self.onsets.len()
    }

    pub fn len(&self) -> usize {
        self.data.first().and_then(|c| c.first()).map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.n_epochs() == 0
    }

    /// Index range of samples between `from_s` and `to_s` relative to onset,
    /// both ends inclusive.
    pub fn window(&self, from_s: f64, to_s: f64) -> std::ops::RangeInclusive<usize> {
        let at = |t: f64| (self.pre as f64 + (t * self.fs).round()) as usize;
        at(from_s)..=at(to_s)
    }

    /// Multiply every sample by `k`.
    pub fn scaled(&self, k: f64) -> Epochs {
        let mut out = self.clone();
        out.data
            .iter_mut()
            .flatten()
            .flatten()
            .for_each(|v| *v *= k);
        out
    }
}

/// Cut -250..3000 ms around each movement onset and subtract the mean over
/// -250..-50 ms. Onsets too close to either end of the recording are skipped.
pub fn epoch(rec: &EegRecording) -> Result<Epochs> {
    epoch_with(rec, (-0.25, 3.0), (-0.25, -0.05))
}

pub fn epoch_with(rec: &EegRecording, span_s: (f64, f64), baseline_s: (f64, f64)) -> Result<Epochs> {
    let ordered = span_s.0 < 0.0 && span_s.1 > 0.0 && span_s.0 <= baseline_s.0 && baseline_s.0 < baseline_s.1;
    if !(ordered && baseline_s.1 <= span_s.1) {
        return Err(invalid_arg("epoch span must straddle the onset and contain the baseline"));
    }
    let pre = (-span_s.0 * rec.fs).round() as usize;
    let post = (span_s.1 * rec.fs).round() as usize;
    let b0 = (pre as f64 + (baseline_s.0 * rec.fs).round()) as usize;
    let b1 = (pre as f64 + (baseline_s.1 * rec.fs).round()) as usize;
    let n = rec.n_samples();
    let onsets: Vec<usize> = rec
        .events_of(EventKind::MovementOnset)
        .filter(|&o| o >= pre && o + post < n)
        .collect();
    let data = rec
        .data
        .par_iter()
        .map(|ch| {
            onsets
                .iter()
                .map(|&o| {
                    let mut seg = ch[o - pre..=o + post].to_vec();
                    let base = seg[b0..=b1].iter().sum::<f64>() / (b1 - b0 + 1) as f64;
                    seg.iter_mut().for_each(|v| *v -= base);
                    seg
                })
                .collect()
        })
        .collect();
    Ok(Epochs {
        labels: rec.labels.clone(),
        fs: rec.fs,
        pre,
        onsets,
        data,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionConfig {
    /// Absolute amplitude limit, microvolts.
    pub abs_uv: f64,
    /// Sample-to-sample step limit, microvolts.
    pub step_uv: f64,
    /// Median absolute deviations tolerated on epoch median and variance.
    pub mad_k: f64,
    /// Factor applied to the raw MAD (1.4826 makes it a consistent
    /// estimate of the standard deviation for normal data).
    pub mad_scale: f64,
    /// Floor on the MAD so identical epochs are never rejected.
    pub mad_floor: f64,
    /// Channels losing more than this share of epochs are excluded.
    pub max_removed_share: f64,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        Self {
            abs_uv: 100.0,
            step_uv: 50.0,
            mad_k: 3.0,
            mad_scale: 1.4826,
            mad_floor: 1e-9,
            max_removed_share: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRejection {
    pub label: String,
    pub amplitude: usize,
    pub outlier: usize,
    pub kept: Vec<bool>,
    pub excluded: bool,
}

impl ChannelRejection {
    pub fn n_kept(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    pub fn n_rejected(&self) -> usize {
        self.kept.len() - self.n_kept()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionReport {
    pub channels: Vec<ChannelRejection>,
}

impl RejectionReport {
    /// Share of channel-epochs removed.
    pub fn removed_share(&self) -> f64 {
        let total: usize = self.channels.iter().map(|c| c.kept.len()).sum();
        let removed: usize = self.channels.iter().map(|c| c.n_rejected()).sum();
        removed as f64 / total.max(1) as f64
    }

    pub fn channel(&self, label: &str) -> Option<&ChannelRejection> {
        self.channels.iter().find(|c| c.label == label)
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mad_outliers(values: &[f64], candidates: &[usize], cfg: &RejectionConfig) -> Vec<usize> {
    let mut vals: Vec<f64> = candidates.iter().map(|&i| values[i]).collect();
    let med = median(&mut vals);
    let mut dev: Vec<f64> = vals.iter().map(|v| (v - med).abs()).collect();
    let mad = (cfg.mad_scale * median(&mut dev)).max(cfg.mad_floor);
    candidates
        .iter()
        .copied()
        .filter(|&i| (values[i] - med).abs() > cfg.mad_k * mad)
        .collect()
}

/// Two-stage, per-channel epoch rejection.
pub fn reject_epochs(epochs: &Epochs, cfg: &RejectionConfig) -> Result<RejectionReport> {
    if epochs.n_epochs() < 4 {
        return Err(invalid_arg(format!(
            "rejection needs at least 4 epochs, got {}",
            epochs.n_epochs()
        )));
    }
    let channels = epochs
        .data
        .par_iter()
        .zip(epochs.labels.par_iter())
        .map(|(ch, label)| {
            let mut kept = vec![true; ch.len()];
            for (e, seg) in ch.iter().enumerate() {
                let too_big = seg.iter().any(|v| v.abs() > cfg.abs_uv);
                let too_steep = seg.windows(2).any(|w| (w[1] - w[0]).abs() > cfg.step_uv);
                if too_big || too_steep {
                    kept[e] = false;
                }
            }
            let amplitude = kept.iter().filter(|&&k| !k).count();
            let survivors: Vec<usize> = (0..ch.len()).filter(|&e| kept[e]).collect();
            let mut outlier = 0;
            if !survivors.is_empty() {
                let medians: Vec<f64> = ch.iter().map(|s| median(&mut s.clone())).collect();
                let variances: Vec<f64> = ch
                    .iter()
                    .map(|s| {
                        let m = s.iter().sum::<f64>() / s.len() as f64;
                        s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / s.len() as f64
                    })
                    .collect();
                let mut flagged = mad_outliers(&medians, &survivors, cfg);
                flagged.extend(mad_outliers(&variances, &survivors, cfg));
                for e in flagged {
                    if kept[e] {
                        kept[e] = false;
                        outlier += 1;
                    }
                }
            }
            let removed = kept.iter().filter(|&&k| !k).count();
            ChannelRejection {
                label: label.clone(),
                amplitude,
                outlier,
                excluded: removed as f64 > cfg.max_removed_share * kept.len() as f64,
                kept,
            }
        })
        .collect();
    Ok(RejectionReport { channels })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectrodePcnv {
    pub label: String,
    /// Mean of the averaged ERP over the window, microvolts.
    pub amplitude_uv: Option<f64>,
    /// Standard error across the per-epoch window means.
    pub sem_uv: Option<f64>,
    pub kept: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcnvResult {
    pub window_s: (f64, f64),
    pub electrodes: Vec<ElectrodePcnv>,
}

/// Fewer retained epochs than this leave the electrode without a value.
pub const MIN_PCNV_EPOCHS: usize = 10;

impl PcnvResult {
    pub fn get(&self, label: &str) -> Option<&ElectrodePcnv> {
        self.electrodes.iter().find(|e| e.label == label)
    }

    pub fn amplitude(&self, label: &str) -> Option<f64> {
        self.get(label).and_then(|e| e.amplitude_uv)
    }

    /// The sensorimotor electrodes in reporting order.
    pub fn reported(&self) -> Vec<&ElectrodePcnv> {
        PCNV_ELECTRODES.iter().filter_map(|l| self.get(l)).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["electrode", "amplitude_uv", "sem_uv", "kept", "rejected"])?;
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.4}"));
        for e in self.reported() {
            w.write_record([
                e.label.clone(),
                fmt(e.amplitude_uv),
                fmt(e.sem_uv),
                e.kept.to_string(),
                e.rejected.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<pcnv csv>".into(),
            source: e,
        })?;
        Ok(())
    }
}

/// Average the retained epochs of each channel and take the mean over
/// 0.5-1.0 s after onset.
pub fn pcnv(epochs: &Epochs, report: &RejectionReport) -> Result<PcnvResult> {
    pcnv_window(epochs, report, (0.5, 1.0))
}

pub fn pcnv_window(epochs: &Epochs, report: &RejectionReport, window_s: (f64, f64)) -> Result<PcnvResult> {
    let window = epochs.window(window_s.0, window_s.1);
    if *window.end() >= epochs.len() {
        return Err(invalid_arg("pCNV window extends past the epoch"));
    }
    let mut electrodes = Vec::with_capacity(epochs.labels.len());
    for (c, label) in epochs.labels.iter().enumerate() {
        let rej = report
            .channel(label)
            .ok_or_else(|| invalid_arg(format!("no rejection entry for {label}")))?;
        let means: Vec<f64> = epochs.data[c]
            .iter()
            .zip(&rej.kept)
            .filter(|(_, &k)| k)
            .map(|(seg, _)| seg[window.clone()].iter().sum::<f64>() / window.clone().count() as f64)
            .collect();
        if means.is_empty() && PCNV_ELECTRODES.contains(&label.as_str()) {
            return Err(Error::Analysis(format!("all epochs rejected on {label}")));
        }
        let usable = means.len() >= MIN_PCNV_EPOCHS && !rej.excluded;
        let n = means.len() as f64;
        let mean = means.iter().sum::<f64>() / n;
        let sem = if means.len() > 1 {
            (means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            f64::NAN
        };
        electrodes.push(ElectrodePcnv {
            label: label.clone(),
            amplitude_uv: usable.then_some(mean),
            sem_uv: usable.then_some(sem),
            kept: means.len(),
            rejected: rej.n_rejected(),
        });
    }
    Ok(PcnvResult { window_s, electrodes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    Theta1,
    Theta2,
    Separation,
    RelativeVelocity,
    Error,
}

impl Regressor {
    pub const ALL: [Regressor; 5] = [
        Regressor::Theta1,
        Regressor::Theta2,
        Regressor::Separation,
        Regressor::RelativeVelocity,
        Regressor::Error,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Regressor::Theta1 => "theta1",
            Regressor::Theta2 => "theta2",
            Regressor::Separation => "separation",
            Regressor::RelativeVelocity => "relative_velocity",
            Regressor::Error => "error",
        }
    }
}

/// Kinematic regressors on the EEG sample grid; NaN outside movements.
pub fn regressor_series(
    kinematics: &[CrossingKinematics],
    n_samples: usize,
    fs: f64,
    ws: &Workspace,
) -> Result<Vec<(Regressor, Vec<f64>)>> {
    let mut series: Vec<(Regressor, Vec<f64>)> =
        Regressor::ALL.iter().map(|&r| (r, vec![f64::NAN; n_samples])).collect();
    for k in kinematics {
        let pattern = k.pattern(ws, 1.0 / fs)?;
        let last = ((k.duration_s(ws) * fs).floor() as usize).min(n_samples.saturating_sub(k.onset_sample + 1));
        for j in 0..=last {
            let t = (j as f64 / fs).min(pattern.duration());
            let th1 = pattern.rising.angle_at(t)?;
            let th2 = pattern.falling.angle_at(t)?;
            let v = pattern.rising.velocity_at(t)?.abs() + pattern.falling.velocity_at(t)?.abs();
            let i = k.onset_sample + j;
            let values = [th1, th2, th2 - th1, v, (th2 - th1).abs()];
            for ((_, s), val) in series.iter_mut().zip(values) {
                s[i] = val;
            }
        }
    }
    Ok(series)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMap {
    pub labels: Vec<String>,
    pub regressors: Vec<Regressor>,
    /// `r[channel][regressor]`; `None` when a series has no variance.
    pub r: Vec<Vec<Option<f64>>>,
}

impl CorrelationMap {
    pub fn get(&self, label: &str, regressor: Regressor) -> Option<f64> {
        let c = self.labels.iter().position(|l| l == label)?;
        let j = self.regressors.iter().position(|&r| r == regressor)?;
        self.r[c][j]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["electrode".to_string()];
        header.extend(self.regressors.iter().map(|r| r.as_str().to_string()));
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.r) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| v.map_or(String::new(), |x| format!("{x:.4}"))));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<correlation csv>".into(),
            source: e,
        })?;
        Ok(())
    }
}

/// Pearson r between every channel and every regressor over the samples
/// where the regressor is defined.
pub fn kinematic_correlation_map(rec: &EegRecording, regressors: &[(Regressor, Vec<f64>)]) -> Result<CorrelationMap> {
    for (r, s) in regressors {
        if s.len() != rec.n_samples() {
            return Err(invalid_arg(format!(
                "regressor {} has {} samples, recording {}",
                r.as_str(),
                s.len(),
                rec.n_samples()
            )));
        }
    }
    let r = rec
        .data
        .par_iter()
        .map(|ch| {
            regressors
                .iter()
                .map(|(_, s)| {
                    let (a, b): (Vec<f64>, Vec<f64>) = ch
                        .iter()
                        .zip(s)
                        .filter(|(_, v)| v.is_finite())
                        .map(|(x, v)| (*x, *v))
                        .unzip();
                    pearson(&a, &b)
                })
                .collect()
        })
        .collect();
    Ok(CorrelationMap {
        labels: rec.labels.clone(),
        regressors: regressors.iter().map(|(r, _)| *r).collect(),
        r,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub ica: Option<IcaConfig>,
    pub rejection: RejectionConfig,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        Self {
            ica: Some(IcaConfig::default()),
            rejection: RejectionConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProcessOutput {
    pub pcnv: PcnvResult,
    pub rejection: RejectionReport,
    pub ica: Option<IcaReport>,
    pub correlation: Option<CorrelationMap>,
}

/// Mirror, filter, remove blinks, epoch, reject and measure.
pub fn process_recording(
    rec: &EegRecording,
    affected_side: Side,
    kinematics: Option<(&[CrossingKinematics], &Workspace)>,
    cfg: &ProcessConfig,
) -> Result<ProcessOutput> {
    let rec = rec.clone().mirror_electrodes(affected_side)?;
    let filtered = notch_then_bandpass(&rec)?;
    let (clean, ica) = match &cfg.ica {
        Some(ica_cfg) => {
            let (clean, report) = remove_eye_artifacts(&filtered, ica_cfg)?;
            (clean, Some(report))
        }
        None => (filtered, None),
    };
    let epochs = epoch(&clean)?;
    let rejection = reject_epochs(&epochs, &cfg.rejection)?;
    let pcnv = pcnv(&epochs, &rejection)?;
    let correlation = match kinematics {
        Some((k, ws)) => {
            let series = regressor_series(k, clean.n_samples(), clean.fs, ws)?;
            Some(kinematic_correlation_map(&clean, &series)?)
        }
        None => None,
    };
    Ok(ProcessOutput {
        pcnv,
        rejection,
        ica,
        correlation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eeg::{Event, EEG_FS};
    use crate::kinematics::SeededRng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn recording(channels: Vec<Vec<f64>>, onsets: &[usize]) -> EegRecording {
        let labels = (0..channels.len()).map(|i| format!("Ch{i}")).collect();
        let events = onsets
            .iter()
            .map(|&s| Event {
                sample: s,
                kind: EventKind::MovementOnset,
            })
            .collect();
        EegRecording::new(labels, EEG_FS, channels, events).unwrap()
    }

    fn synthetic_epochs(segments: Vec<Vec<f64>>) -> Epochs {
        Epochs {
            labels: vec!["Pz".into()],
            fs: EEG_FS,
            pre: 75,
            onsets: (0..segments.len()).collect(),
            data: vec![segments],
        }
    }

    #[test]
    fn baseline_mean_is_zero() {
        let mut rng = SeededRng::new(1, 0);
        let x: Vec<f64> = (0..6000).map(|_| 20.0 + 5.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let rec = recording(vec![x], &[500, 2000, 4000]);
        let ep = epoch(&rec).unwrap();
        assert_eq!(ep.len(), 976);
        for seg in &ep.data[0] {
            let base = seg[0..=60].iter().sum::<f64>() / 61.0;
            assert!(base.abs() < 1e-9);
        }
    }

    #[test]
    fn edge_onsets_skipped() {
        let rec = recording(vec![vec![0.0; 2000]], &[10, 500, 1900]);
        assert_eq!(epoch(&rec).unwrap().onsets, vec![500]);
    }

    #[test]
    fn identical_epochs_kept() {
        let seg: Vec<f64> = (0..976).map(|i| (i as f64 * 0.05).sin()).collect();
        let ep = synthetic_epochs(vec![seg; 12]);
        let rep = reject_epochs(&ep, &RejectionConfig::default()).unwrap();
        assert_eq!(rep.channels[0].n_rejected(), 0);
    }

    #[test]
    fn high_variance_epoch_is_the_only_one_rejected() {
        // circular shifts of one zero-median waveform share median and variance
        let base: Vec<f64> = (0..976).map(|i| 4.0 * (i as f64 * 2.0 * std::f64::consts::PI / 61.0).sin()).collect();
        let mut segs: Vec<Vec<f64>> = (0..21)
            .map(|k| {
                let mut s = base.clone();
                s.rotate_left(k * 7);
                s
            })
            .collect();
        segs[13].iter_mut().for_each(|v| *v *= 10f64.sqrt());
        let rep = reject_epochs(&synthetic_epochs(segs), &RejectionConfig::default()).unwrap();
        let rejected: Vec<usize> = (0..21).filter(|&e| !rep.channels[0].kept[e]).collect();
        assert_eq!(rejected, vec![13]);
        assert_eq!(rep.channels[0].outlier, 1);
    }

    #[test]
    fn amplitude_and_step_limits() {
        let mut segs = vec![vec![0.0; 976]; 8];
        segs[2][400] = 150.0;
        segs[5][300] = 30.0;
        segs[5][301] = -30.0;
        let rep = reject_epochs(&synthetic_epochs(segs), &RejectionConfig::default()).unwrap();
        assert!(!rep.channels[0].kept[2]);
        assert!(!rep.channels[0].kept[5]);
        assert_eq!(rep.channels[0].amplitude, 2);
    }

    #[test]
    fn rejection_needs_four_epochs() {
        let ep = synthetic_epochs(vec![vec![0.0; 976]; 3]);
        assert!(reject_epochs(&ep, &RejectionConfig::default()).is_err());
    }

    #[test]
    fn pcnv_is_linear_in_scale() {
        let mut rng = SeededRng::new(3, 0);
        let segs: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..976).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let ep = synthetic_epochs(segs);
        let rep = reject_epochs(&ep, &RejectionConfig::default()).unwrap();
        let a = pcnv(&ep, &rep).unwrap().amplitude("Pz").unwrap();
        let b = pcnv(&ep.scaled(3.0), &rep).unwrap().amplitude("Pz").unwrap();
        assert!((b - 3.0 * a).abs() < 1e-12);
    }

    #[test]
    fn all_rejected_required_electrode_is_an_error() {
        let ep = synthetic_epochs(vec![vec![500.0; 976]; 6]);
        let rep = reject_epochs(&ep, &RejectionConfig::default()).unwrap();
        assert!(matches!(pcnv(&ep, &rep), Err(Error::Analysis(_))));
    }

    #[test]
    fn too_few_epochs_leave_a_gap() {
        let ep = synthetic_epochs(vec![vec![0.0; 976]; 6]);
        let rep = reject_epochs(&ep, &RejectionConfig::default()).unwrap();
        let r = pcnv(&ep, &rep).unwrap();
        assert_eq!(r.amplitude("Pz"), None);
        assert_eq!(r.get("Pz").unwrap().kept, 6);
    }

    #[test]
    fn copied_regressor_correlates_perfectly() {
        let ws = Workspace::assessment();
        let k = vec![
            CrossingKinematics {
                crossing: 0,
                onset_sample: 100,
                speed_degps: 12.0,
                press_s: None,
            },
            CrossingKinematics {
                crossing: 1,
                onset_sample: 2000,
                speed_degps: 16.0,
                press_s: None,
            },
        ];
        let series = regressor_series(&k, 4000, EEG_FS, &ws).unwrap();
        let copy: Vec<f64> = series[0].1.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect();
        let mut rng = SeededRng::new(8, 0);
        let velocity_locked: Vec<f64> = series[3]
            .1
            .iter()
            .map(|v| if v.is_finite() { *v } else { 0.0 } + 3.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let rec = recording(vec![copy, velocity_locked], &[100, 2000]);
        let map = kinematic_correlation_map(&rec, &series).unwrap();
        assert!((map.get("Ch0", Regressor::Theta1).unwrap() - 1.0).abs() < 1e-12);
        let vel = map.get("Ch1", Regressor::RelativeVelocity).unwrap().abs();
        let pos = map.get("Ch1", Regressor::Theta1).unwrap().abs();
        assert!(vel > pos);
    }

    #[test]
    fn constant_regressor_is_missing() {
        let rec = recording(vec![(0..100).map(f64::from).collect()], &[]);
        let map = kinematic_correlation_map(&rec, &[(Regressor::Error, vec![1.0; 100])]).unwrap();
        assert_eq!(map.r[0][0], None);
    }
}
