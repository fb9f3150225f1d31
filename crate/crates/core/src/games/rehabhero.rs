use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::kinematics::Finger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lane {
    Top,
    Middle,
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FingerSet {
    pub index: bool,
    pub middle: bool,
}

impl FingerSet {
    pub const NONE: FingerSet = FingerSet { index: false, middle: false };
    pub const INDEX: FingerSet = FingerSet { index: true, middle: false };
    pub const MIDDLE: FingerSet = FingerSet { index: false, middle: true };
    pub const BOTH: FingerSet = FingerSet { index: true, middle: true };

    pub fn is_empty(&self) -> bool {
        !self.index && !self.middle
    }

    pub fn fingers(&self) -> impl Iterator<Item = Finger> {
        let (i, m) = (self.index, self.middle);
        [(i, Finger::Index), (m, Finger::Middle)]
            .into_iter()
            .filter_map(|(on, f)| on.then_some(f))
    }
}

impl Lane {
    /// Top notes are the index finger, bottom notes the middle finger,
    /// middle notes both.
    pub fn required_fingers(self) -> FingerSet {
        match self {
            Lane::Top => FingerSet::INDEX,
            Lane::Middle => FingerSet::BOTH,
            Lane::Bottom => FingerSet::MIDDLE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteSpec {
    pub hit_time: f64,
    pub lane: Lane,
}

impl NoteSpec {
    pub fn required_fingers(&self) -> FingerSet {
        self.lane.required_fingers()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Song {
    notes: Vec<NoteSpec>,
    lanes_used: u8,
}

impl Song {
    pub fn new(notes: Vec<NoteSpec>, lanes_used: u8) -> Result<Self> {
        if !matches!(lanes_used, 2 | 3) {
            return Err(invalid_arg(format!("songs use 2 or 3 lanes, got {lanes_used}")));
        }
        if notes.windows(2).any(|w| w[1].hit_time <= w[0].hit_time) {
            return Err(invalid_arg("note hit times must be strictly increasing"));
        }
        if lanes_used == 2 && notes.iter().any(|n| n.lane == Lane::Middle) {
            return Err(invalid_arg("two-lane songs cannot contain middle notes"));
        }
        Ok(Self { notes, lanes_used })
    }

    pub fn notes(&self) -> &[NoteSpec] {
        &self.notes
    }

    pub fn lanes_used(&self) -> u8 {
        self.lanes_used
    }
}

/// Random song at roughly 0.7 notes/s.
pub fn generate_song<R: Rng + ?Sized>(lanes_used: u8, n_notes: usize, rng: &mut R) -> Result<Song> {
    let mut t = 2.0;
    let mut notes = Vec::with_capacity(n_notes);
    for _ in 0..n_notes {
        t += rng.random_range(0.9..1.95);
        let lane = match (lanes_used, rng.random_range(0..lanes_used)) {
            (_, 0) => Lane::Top,
            (2, _) => Lane::Bottom,
            (_, 1) => Lane::Middle,
            _ => Lane::Bottom,
        };
        notes.push(NoteSpec { hit_time: t, lane });
    }
    Song::new(notes, lanes_used)
}

/// A participant's attempt at one note.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Movement {
    pub fingers: FingerSet,
    pub press_time: Option<f64>,
}

impl Movement {
    pub fn none() -> Self {
        Self {
            fingers: FingerSet::NONE,
            press_time: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgementCategory {
    Hit,
    Early,
    Late,
    Miss,
}

impl JudgementCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            JudgementCategory::Hit => "hit",
            JudgementCategory::Early => "early",
            JudgementCategory::Late => "late",
            JudgementCategory::Miss => "miss",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Judgement {
    pub category: JudgementCategory,
    /// Signed press - hit time; `None` for misses.
    pub timing_error: Option<f64>,
}

pub fn judge_note(note: &NoteSpec, movement: &Movement, window: f64) -> Judgement {
    let press = match movement.press_time {
        Some(t) if movement.fingers == note.required_fingers() => t,
        _ => {
            return Judgement {
                category: JudgementCategory::Miss,
                timing_error: None,
            }
        }
    };
    let err = press - note.hit_time;
    let category = if err.abs() <= window {
        JudgementCategory::Hit
    } else if err < 0.0 {
        JudgementCategory::Early
    } else {
        JudgementCategory::Late
    };
    Judgement {
        category,
        timing_error: Some(err),
    }
}
