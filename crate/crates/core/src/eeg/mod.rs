//! Synthetic EEG for the Crisscross-with-feedback task and the pCNV
//! extraction pipeline.
//!
//! Data are held channel-major in microvolts; events are sample indices on a
//! single marker stream.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::patient::Side;

pub mod erp;
pub mod filter;
pub mod ica;
pub mod synth;

pub use erp::{
    epoch, kinematic_correlation_map, pcnv, process_recording, reject_epochs, CorrelationMap, ElectrodePcnv, Epochs,
    PcnvResult, ProcessConfig, ProcessOutput, Regressor, RejectionConfig, RejectionReport,
};
pub use filter::{notch_then_bandpass, Biquad, FilterBank};
pub use ica::{fastica, remove_eye_artifacts, IcaConfig, IcaModel, IcaReport};
pub use synth::{synth_recording, CrossingKinematics, SynthConfig, SynthOutput};

/// Sampling rate of the headset.
pub const EEG_FS: f64 = 300.0;

/// The 19-channel 10-20 montage.
pub const MONTAGE_10_20: [&str; 19] = [
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "Cz", "C4", "T4", "T5", "P3", "Pz", "P4", "T6", "O1", "O2",
];

/// Left/right homologous electrode pairs.
pub const LATERAL_PAIRS: [(&str, &str); 8] = [
    ("Fp1", "Fp2"),
    ("F7", "F8"),
    ("F3", "F4"),
    ("T3", "T4"),
    ("C3", "C4"),
    ("T5", "T6"),
    ("P3", "P4"),
    ("O1", "O2"),
];

/// Electrodes over which the pCNV is reported.
pub const PCNV_ELECTRODES: [&str; 6] = ["Fz", "F3", "Cz", "C3", "Pz", "P3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    MovementOnset,
    ButtonPress,
    FeedbackOn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub sample: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EegRecording {
    pub labels: Vec<String>,
    pub fs: f64,
    /// One row per channel, microvolts.
    pub data: Vec<Vec<f64>>,
    pub events: Vec<Event>,
}

impl EegRecording {
    pub fn new(labels: Vec<String>, fs: f64, data: Vec<Vec<f64>>, mut events: Vec<Event>) -> Result<Self> {
        if labels.len() != data.len() {
            return Err(invalid_arg(format!(
                "{} labels for {} channels",
                labels.len(),
                data.len()
            )));
        }
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(invalid_arg(format!("sampling rate must be positive, got {fs}")));
        }
        let n = data.first().map_or(0, Vec::len);
        if data.iter().any(|c| c.len() != n) {
            return Err(invalid_arg("channels differ in length"));
        }
        if let Some(e) = events.iter().find(|e| e.sample >= n) {
            return Err(invalid_arg(format!("event at sample {} beyond {} samples", e.sample, n)));
        }
        events.sort();
        Ok(Self { labels, fs, data, events })
    }

    pub fn n_samples(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn channel(&self, label: &str) -> Option<&[f64]> {
        self.channel_index(label).map(|i| self.data[i].as_slice())
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = usize> + '_ {
        self.events.iter().filter(move |e| e.kind == kind).map(|e| e.sample)
    }
}

/// Channel permutation that exchanges every lateral pair present in `labels`.
fn mirror_permutation(labels: &[String]) -> Result<Vec<usize>> {
    let find = |l: &str| labels.iter().position(|x| x == l);
    let mut perm: Vec<usize> = (0..labels.len()).collect();
    let mut swapped = 0;
    for (left, right) in LATERAL_PAIRS {
        match (find(left), find(right)) {
            (Some(a), Some(b)) => {
                perm.swap(a, b);
                swapped += 1;
            }
            (None, None) => {}
            _ => {
                return Err(Error::InvalidMontage(format!(
                    "lateral pair {left}/{right} is incomplete"
                )))
            }
        }
    }
    if swapped == 0 {
        return Err(Error::InvalidMontage("montage has no lateral pairs".into()));
    }
    Ok(perm)
}

/// Types whose electrode labels can be reflected across the midline.
pub trait Mirror: Sized {
    /// Exchange homologous electrodes so that, for a left-affected
    /// participant, left-hemisphere labels refer to the trained hand.
    /// Right-affected data are returned unchanged.
    fn mirror_electrodes(self, affected_side: Side) -> Result<Self>;
}

impl Mirror for EegRecording {
    fn mirror_electrodes(mut self, affected_side: Side) -> Result<Self> {
        let perm = mirror_permutation(&self.labels)?;
        if affected_side == Side::Right {
            return Ok(self);
        }
        let mut data = std::mem::take(&mut self.data);
        let mut out: Vec<Vec<f64>> = vec![Vec::new(); data.len()];
        for (i, &src) in perm.iter().enumerate() {
            out[i] = std::mem::take(&mut data[src]);
        }
        self.data = out;
        Ok(self)
    }
}

impl Mirror for PcnvResult {
    fn mirror_electrodes(mut self, affected_side: Side) -> Result<Self> {
        let labels: Vec<String> = self.electrodes.iter().map(|e| e.label.clone()).collect();
        let perm = mirror_permutation(&labels)?;
        if affected_side == Side::Right {
            return Ok(self);
        }
        let values: Vec<ElectrodePcnv> = perm.iter().map(|&src| self.electrodes[src].clone()).collect();
        for (slot, mut v) in self.electrodes.iter_mut().zip(values) {
            v.label = slot.label.clone();
            *slot = v;
        }
        Ok(self)
    }
}

/// JSON sidecar accompanying a CSV recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub labels: Vec<String>,
    pub fs: f64,
    pub n_samples: usize,
    pub events: Vec<Event>,
    #[serde(default = "default_side")]
    pub affected_side: Side,
}

fn default_side() -> Side {
    Side::Right
}

impl Sidecar {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: e.line(),
            field: format!("column {}", e.column()),
            message: e.to_string(),
        })
    }
}

/// Samples as rows, one column per channel label.
pub fn write_recording_csv<W: Write>(rec: &EegRecording, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&rec.labels)?;
    let mut row = Vec::with_capacity(rec.labels.len());
    for s in 0..rec.n_samples() {
        row.clear();
        row.extend(rec.data.iter().map(|c| format!("{:.6}", c[s])));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<recording csv>".into(),
        source: e,
    })?;
    Ok(())
}

pub fn read_recording_csv<R: Read>(reader: R, sidecar: &Sidecar, source_name: &str) -> Result<EegRecording> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != sidecar.labels {
        return Err(Error::Parse {
            source_name: source_name.to_string(),
            line: 1,
            field: "header".into(),
            message: "channel labels differ from the sidecar".into(),
        });
    }
    let mut data = vec![Vec::with_capacity(sidecar.n_samples); header.len()];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                source_name: source_name.to_string(),
                line,
                field: "row".into(),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                source_name: source_name.to_string(),
                line,
                field: header[c].clone(),
                message: format!("not a number: {field:?}"),
            })?;
            data[c].push(v);
        }
    }
    if data.first().map_or(0, Vec::len) != sidecar.n_samples {
        return Err(Error::Parse {
            source_name: source_name.to_string(),
            line: data.first().map_or(0, Vec::len) + 1,
            field: "n_samples".into(),
            message: format!("sidecar declares {} samples", sidecar.n_samples),
        });
    }
    EegRecording::new(header, sidecar.fs, data, sidecar.events.clone())
}

/// Write `<stem>.csv` and `<stem>.json` next to each other.
pub fn save_recording(rec: &EegRecording, affected_side: Side, stem: &Path) -> Result<()> {
    let sidecar = Sidecar {
        labels: rec.labels.clone(),
        fs: rec.fs,
        n_samples: rec.n_samples(),
        events: rec.events.clone(),
        affected_side,
    };
    let mut csv_buf = Vec::new();
    write_recording_csv(rec, &mut csv_buf)?;
    crate::io::write_atomic(&stem.with_extension("csv"), &csv_buf)?;
    crate::io::write_atomic(&stem.with_extension("json"), serde_json::to_string_pretty(&sidecar)?.as_bytes())
}

pub fn load_recording(stem: &Path) -> Result<(EegRecording, Side)> {
    let json_path = stem.with_extension("json");
    let csv_path = stem.with_extension("csv");
    let sidecar = Sidecar::parse(&crate::io::read_to_string(&json_path)?, &json_path.display().to_string())?;
    let file = std::fs::File::open(&csv_path).map_err(|source| Error::Io {
        path: csv_path.display().to_string(),
        source,
    })?;
    let rec = read_recording_csv(std::io::BufReader::new(file), &sidecar, &csv_path.display().to_string())?;
    Ok((rec, sidecar.affected_side))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(labels: &[&str]) -> EegRecording {
        let data = labels.iter().enumerate().map(|(i, _)| vec![i as f64; 4]).collect();
        EegRecording::new(labels.iter().map(|s| s.to_string()).collect(), EEG_FS, data, vec![]).unwrap()
    }

    #[test]
    fn right_side_is_identity() {
        let rec = labelled(&MONTAGE_10_20);
        assert_eq!(rec.clone().mirror_electrodes(Side::Right).unwrap(), rec);
    }

    #[test]
    fn left_side_swaps_pairs_and_is_involution() {
        let rec = labelled(&MONTAGE_10_20);
        let m = rec.clone().mirror_electrodes(Side::Left).unwrap();
        let idx = |l: &str| rec.channel_index(l).unwrap() as f64;
        assert_eq!(m.channel("C3").unwrap()[0], idx("C4"));
        assert_eq!(m.channel("P4").unwrap()[0], idx("P3"));
        assert_eq!(m.channel("F3").unwrap()[0], idx("F4"));
        assert_eq!(m.channel("Cz").unwrap()[0], idx("Cz"));
        assert_eq!(m.mirror_electrodes(Side::Left).unwrap(), rec);
    }

    #[test]
    fn incomplete_pair_is_invalid_montage() {
        let rec = labelled(&["F3", "Fz", "F4", "C3", "Cz"]);
        assert!(matches!(rec.mirror_electrodes(Side::Left), Err(Error::InvalidMontage(_))));
    }

    #[test]
    fn recording_csv_roundtrip() {
        let rec = EegRecording::new(
            vec!["C3".into(), "C4".into()],
            EEG_FS,
            vec![vec![1.5, -2.25, 0.0], vec![0.125, 3.0, -1.0]],
            vec![Event {
                sample: 1,
                kind: EventKind::MovementOnset,
            }],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("rec");
        save_recording(&rec, Side::Left, &stem).unwrap();
        let (back, side) = load_recording(&stem).unwrap();
        assert_eq!(back, rec);
        assert_eq!(side, Side::Left);
    }

    #[test]
    fn malformed_sidecar_reports_line() {
        let err = Sidecar::parse("{\n  \"labels\": [\"C3\"],\n  \"fs\": oops\n}", "rec.json").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
