//! RehabHero and FingerPong engines with Standard, Propriopixel and Virtual
//! presentation, plus per-session scheduling and success accounting.

mod pong;
mod rehabhero;
mod session;

pub use pong::{step_pong, PongConfig, PongEvent, PongMode, PongServe, PongState};
pub use rehabhero::{generate_song, judge_note, FingerSet, Judgement, JudgementCategory, Lane, Movement, NoteSpec, Song};
pub use session::{
    run_game, run_session, write_events_csv, GameContent, GameContext, GameRecord, GameSpec, MovementRecord,
    SessionPlan, SessionRecord, TrainingState,
};

use serde::{Deserialize, Serialize};

use crate::kinematics::Workspace;

/// Presentation/assistance paradigm a participant trains in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingMode {
    Standard,
    Propriopixel,
    Virtual,
}

impl TrainingMode {
    pub const ALL: [TrainingMode; 3] = [TrainingMode::Standard, TrainingMode::Virtual, TrainingMode::Propriopixel];

    pub fn as_str(self) -> &'static str {
        match self {
            TrainingMode::Standard => "standard",
            TrainingMode::Propriopixel => "propriopixel",
            TrainingMode::Virtual => "virtual",
        }
    }
}

impl std::str::FromStr for TrainingMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(TrainingMode::Standard),
            "propriopixel" => Ok(TrainingMode::Propriopixel),
            "virtual" => Ok(TrainingMode::Virtual),
            other => Err(crate::error::invalid_arg(format!("unknown training mode '{other}'"))),
        }
    }
}

/// Thumb pose that cues a note lane in Propriopixel RehabHero.
pub fn propriopixel_note_cue(lane: Lane) -> f64 {
    match lane {
        Lane::Top => 1.0,
        Lane::Middle => 0.5,
        Lane::Bottom => 0.0,
    }
}

/// Ball-finger angle that encodes the ball height in Propriopixel FingerPong:
/// top of the court is full extension, bottom is full flexion.
pub fn propriopixel_ball_cue(ball_y: f64, ws: Workspace) -> f64 {
    ws.max_deg - ball_y.clamp(0.0, 1.0) * ws.span()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn note_cues() {
        assert_eq!(propriopixel_note_cue(Lane::Top), 1.0);
        assert_eq!(propriopixel_note_cue(Lane::Bottom), 0.0);
        assert_eq!(propriopixel_note_cue(Lane::Middle), 0.5);
    }

    #[test]
    fn ball_cues() {
        let ws = Workspace::assessment();
        assert_eq!(propriopixel_ball_cue(1.0, ws), 12.0);
        assert_eq!(propriopixel_ball_cue(0.0, ws), 54.0);
        assert_eq!(propriopixel_ball_cue(0.5, ws), 33.0);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("Virtual".parse::<TrainingMode>().unwrap(), TrainingMode::Virtual);
        assert!("robotic".parse::<TrainingMode>().is_err());
    }
}
