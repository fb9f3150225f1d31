use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::pong::{aim_paddle, predict_arrival, BASE_BALL_SPEED, BASE_PADDLE_HALF_HEIGHT, TARGET_HALF_HEIGHT};
use super::{
    generate_song, judge_note, step_pong, Judgement, JudgementCategory, PongConfig, PongEvent, PongMode, PongServe,
    PongState, Song, TrainingMode,
};
use crate::assist::{
    escalate_difficulty, tune_session_schedule, AssistMode, Channel, ChannelGains, DifficultyState, Direction,
    Outcome, INTENT_THRESHOLD_N,
};
use crate::error::{Error, Result};
use crate::kinematics::{Finger, SeededRng};
use crate::patient::{respond_to_note, PatientProfile, ResponseModel};

/// Extra difficulty of the proprioceptively cued presentation; grows with
/// the participant's perceptual noise.
const PROPRIOPIXEL_PENALTY: f64 = 0.35;
const PROPRIOPIXEL_NOISE_PENALTY: f64 = 0.03;

/// Everything a participant carries from game to game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingState {
    pub gains: ChannelGains,
    pub difficulty: DifficultyState,
    next_direction: BTreeMap<Finger, Direction>,
}

impl TrainingState {
    pub fn new(gains: ChannelGains) -> Self {
        Self {
            gains,
            difficulty: DifficultyState::default(),
            next_direction: [(Finger::Index, Direction::Flexion), (Finger::Middle, Direction::Flexion)]
                .into_iter()
                .collect(),
        }
    }

    /// Fresh state for a training mode, every channel starting at `initial_gain`.
    pub fn for_mode(mode: TrainingMode, initial_gain: f64, step: f64) -> Result<Self> {
        let assist = match mode {
            TrainingMode::Virtual => AssistMode::Virtual,
            _ => AssistMode::Physical,
        };
        let s = crate::assist::AssistState::new(initial_gain, step, assist)?;
        Ok(Self::new(ChannelGains::new(s)))
    }

    fn take_direction(&mut self, finger: Finger) -> Direction {
        let d = self.next_direction.entry(finger).or_insert(Direction::Flexion);
        let out = *d;
        *d = d.flip();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameContext {
    pub mode: TrainingMode,
    /// Per-movement gain updates enabled.
    pub tuning: bool,
    /// False for unassisted probe games.
    pub assisted: bool,
    pub response: ResponseModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GameSpec {
    RehabHero(Song),
    FingerPong { config: PongConfig, serves: Vec<PongServe> },
}

pub type GameContent = GameSpec;

impl GameSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GameSpec::RehabHero(_) => "rehabhero",
            GameSpec::FingerPong { .. } => "fingerpong",
        }
    }

    pub fn movement_count(&self) -> usize {
        match self {
            GameSpec::RehabHero(song) => song.notes().len(),
            GameSpec::FingerPong { serves, .. } => serves.len(),
        }
    }

    pub fn fingerpong<R: Rng + ?Sized>(config: PongConfig, rng: &mut R) -> Self {
        let serves = (0..config.balls)
            .map(|_| PongServe {
                y: rng.random_range(0.1..0.9),
                vy: rng.random_range(-0.6..0.6),
                target_offset: rng.random_range(-1..=1),
            })
            .collect();
        GameSpec::FingerPong { config, serves }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovementRecord {
    pub movement_idx: usize,
    pub category: JudgementCategory,
    pub timing_error: Option<f64>,
    /// Gain in force when the movement was made.
    pub gain: f64,
    pub channel: Channel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub mode: TrainingMode,
    pub assisted: bool,
    pub content: GameContent,
    pub movements: Vec<MovementRecord>,
}

impl GameRecord {
    pub fn hits(&self) -> usize {
        self.movements.iter().filter(|m| m.category == JudgementCategory::Hit).count()
    }

    pub fn success_rate(&self) -> f64 {
        if self.movements.is_empty() {
            return 0.0;
        }
        self.hits() as f64 / self.movements.len() as f64
    }
}

fn check_mode(ctx: &GameContext, state: &TrainingState) -> Result<()> {
    if !ctx.assisted {
        return Ok(());
    }
    let expected = match ctx.mode {
        TrainingMode::Virtual => AssistMode::Virtual,
        TrainingMode::Standard | TrainingMode::Propriopixel => AssistMode::Physical,
    };
    for (channel, s) in state.gains.iter() {
        if s.mode != expected {
            return Err(Error::InvalidConfiguration(format!(
                "{} training needs {:?} assistance but channel {channel} is {:?}",
                ctx.mode.as_str(),
                expected,
                s.mode
            )));
        }
    }
    Ok(())
}

fn difficulty_level(ctx: &GameContext, profile: &PatientProfile, d: &DifficultyState) -> f64 {
    let penalty = match ctx.mode {
        TrainingMode::Propriopixel => PROPRIOPIXEL_PENALTY + PROPRIOPIXEL_NOISE_PENALTY * profile.prop_noise_sd,
        _ => 0.0,
    };
    d.level() + penalty
}

/// Assistance actually delivered: physical assistance only engages once the
/// participant initiates the movement themselves.
fn effective_gain<R: Rng + ?Sized>(ctx: &GameContext, profile: &PatientProfile, gain: f64, rng: &mut R) -> f64 {
    if !ctx.assisted {
        return 0.0;
    }
    match ctx.mode {
        TrainingMode::Virtual => gain,
        _ => {
            let intent = profile.intent_force_n + rng.sample::<f64, _>(StandardNormal);
            if intent >= INTENT_THRESHOLD_N {
                gain
            } else {
                0.0
            }
        }
    }
}

/// Play one game. Gains in `state` are updated per movement when tuning is on.
pub fn run_game<R: Rng + ?Sized>(
    ctx: &GameContext,
    spec: &GameSpec,
    profile: &PatientProfile,
    state: &mut TrainingState,
    rng: &mut R,
) -> Result<GameRecord> {
    check_mode(ctx, state)?;
    let level = difficulty_level(ctx, profile, &state.difficulty);
    let movements = match spec {
        GameSpec::RehabHero(song) => play_song(ctx, song, profile, state, level, rng),
        GameSpec::FingerPong { config, serves } => play_pong(ctx, config, serves, profile, state, level, rng),
    };
    Ok(GameRecord {
        mode: ctx.mode,
        assisted: ctx.assisted,
        content: spec.clone(),
        movements,
    })
}

fn play_song<R: Rng + ?Sized>(
    ctx: &GameContext,
    song: &Song,
    profile: &PatientProfile,
    state: &mut TrainingState,
    level: f64,
    rng: &mut R,
) -> Vec<MovementRecord> {
    let mut out = Vec::with_capacity(song.notes().len());
    for (idx, note) in song.notes().iter().enumerate() {
        let channels: Vec<Channel> = note
            .required_fingers()
            .fingers()
            .map(|f| Channel::Finger(f, state.take_direction(f)))
            .collect();
        let gain = if ctx.assisted {
            channels.iter().map(|c| state.gains.gain(*c)).sum::<f64>() / channels.len() as f64
        } else {
            0.0
        };
        let eff = effective_gain(ctx, profile, gain, rng);
        let mut window = state.difficulty.timing_window;
        if ctx.mode == TrainingMode::Virtual && ctx.assisted {
            // virtual assistance also relaxes the hit timing requirement
            window = (window * (1.0 + 0.1 * gain)).min(0.5);
        }
        let mv = respond_to_note(note, profile, eff, level, window, &ctx.response, rng);
        let Judgement { category, timing_error } = judge_note(note, &mv, window);
        if ctx.tuning && ctx.assisted {
            let outcome = Outcome::from_success(category == JudgementCategory::Hit);
            for c in &channels {
                state.gains.update(*c, outcome);
            }
        }
        out.push(MovementRecord {
            movement_idx: idx,
            category,
            timing_error,
            gain,
            channel: channels[0],
        });
    }
    out
}

fn play_pong<R: Rng + ?Sized>(
    ctx: &GameContext,
    config: &PongConfig,
    serves: &[PongServe],
    profile: &PatientProfile,
    state: &mut TrainingState,
    level: f64,
    rng: &mut R,
) -> Vec<MovementRecord> {
    let d = state.difficulty;
    let hh = BASE_PADDLE_HALF_HEIGHT * d.paddle_scale;
    let vx = BASE_BALL_SPEED * d.ball_speed_scale;
    let mut out = Vec::with_capacity(serves.len());
    for (idx, serve) in serves.iter().enumerate() {
        let gain = if ctx.assisted { state.gains.gain(Channel::Pooled) } else { 0.0 };
        let eff = effective_gain(ctx, profile, gain, rng);
        let mut court = PongState {
            ball: (1.0, serve.y),
            ball_vel: (-vx, serve.vy * d.ball_speed_scale),
            paddle_y: 0.5,
            paddle_half_height: hh,
            mode: config.mode,
            target_y: 0.5,
            target_half_height: TARGET_HALF_HEIGHT,
        };
        let arrival = predict_arrival(&court);
        court.target_y = (arrival + f64::from(serve.target_offset) * 2.0 * hh).clamp(0.05, 0.95);
        let p = ctx.response.success_probability(profile.skill, eff, level);
        let paddle = if rng.random::<f64>() < p {
            let jitter = rng.random_range(-0.05..0.05) * hh;
            match config.mode {
                PongMode::Rally => arrival + 4.0 * jitter,
                PongMode::Target => aim_paddle(arrival, court.target_y, hh) + jitter,
            }
        } else {
            let off = (hh * (1.2 + 0.5 * rng.sample::<f64, _>(rand_distr::Exp1))).min(0.45);
            let up = rng.random::<bool>();
            let candidate = if up { arrival + off } else { arrival - off };
            if (0.0..=1.0).contains(&candidate) {
                candidate
            } else if up {
                arrival - off
            } else {
                arrival + off
            }
        };
        let (court, first) = step_pong(court, 10.0, paddle);
        let success = match (config.mode, first) {
            (PongMode::Rally, PongEvent::PlayerHit) => true,
            (PongMode::Target, PongEvent::PlayerHit) => step_pong(court, 10.0, paddle).1 == PongEvent::TargetHit,
            _ => false,
        };
        if ctx.tuning && ctx.assisted {
            state.gains.update(Channel::Pooled, Outcome::from_success(success));
        }
        out.push(MovementRecord {
            movement_idx: idx,
            category: if success { JudgementCategory::Hit } else { JudgementCategory::Miss },
            timing_error: None,
            gain,
            channel: Channel::Pooled,
        });
    }
    out
}

/// Layout of one training session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub two_lane_songs: usize,
    pub three_lane_songs: usize,
    pub rally_games: usize,
    pub target_games: usize,
    pub notes_per_song: (usize, usize),
    pub balls_per_game: (usize, usize),
}

impl Default for SessionPlan {
    fn default() -> Self {
        Self {
            two_lane_songs: 5,
            three_lane_songs: 5,
            rally_games: 10,
            target_games: 8,
            notes_per_song: (64, 70),
            balls_per_game: (18, 20),
        }
    }
}

pub const SESSION_MOVEMENT_BUDGET: (usize, usize) = (950, 1150);

impl SessionPlan {
    pub fn rehabhero_games(&self) -> usize {
        self.two_lane_songs + self.three_lane_songs
    }

    pub fn fingerpong_games(&self) -> usize {
        self.rally_games + self.target_games
    }

    pub fn movement_bounds(&self) -> (usize, usize) {
        let songs = self.rehabhero_games();
        let pongs = self.fingerpong_games();
        (
            songs * self.notes_per_song.0 + pongs * self.balls_per_game.0,
            songs * self.notes_per_song.1 + pongs * self.balls_per_game.1,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.movement_bounds();
        if self.notes_per_song.0 > self.notes_per_song.1 || self.balls_per_game.0 > self.balls_per_game.1 {
            return Err(Error::InvalidConfiguration("empty count range in session plan".into()));
        }
        if lo < SESSION_MOVEMENT_BUDGET.0 || hi > SESSION_MOVEMENT_BUDGET.1 {
            return Err(Error::InvalidConfiguration(format!(
                "session plan yields {lo}..{hi} movements, outside the {}..{} budget",
                SESSION_MOVEMENT_BUDGET.0, SESSION_MOVEMENT_BUDGET.1
            )));
        }
        Ok(())
    }

    /// Game contents for a session. Depends only on `content_rng`, never on
    /// the training mode.
    pub fn build_games(&self, content_rng: &SeededRng) -> Result<Vec<GameSpec>> {
        let mut games = Vec::with_capacity(self.rehabhero_games() + self.fingerpong_games());
        let mut k = 0u64;
        let mut next_rng = || {
            k += 1;
            content_rng.derive(k)
        };
        for lanes in std::iter::repeat_n(2u8, self.two_lane_songs).chain(std::iter::repeat_n(3u8, self.three_lane_songs)) {
            let mut rng = next_rng();
            let n = rng.random_range(self.notes_per_song.0..=self.notes_per_song.1);
            games.push(GameSpec::RehabHero(generate_song(lanes, n, &mut rng)?));
        }
        let modes = std::iter::repeat_n(PongMode::Rally, self.rally_games)
            .chain(std::iter::repeat_n(PongMode::Target, self.target_games));
        for (i, mode) in modes.enumerate() {
            let mut rng = next_rng();
            let balls = rng.random_range(self.balls_per_game.0..=self.balls_per_game.1);
            let finger = if i % 2 == 0 { Finger::Index } else { Finger::Middle };
            games.push(GameSpec::fingerpong(PongConfig { mode, balls, finger }, &mut rng));
        }
        Ok(games)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session: u32,
    pub mode: TrainingMode,
    pub tuning: bool,
    pub movements: usize,
    pub hits: usize,
    pub early: usize,
    pub late: usize,
    pub misses: usize,
    pub assisted_success: f64,
    pub unassisted_success: Option<f64>,
    pub difficulty_after: DifficultyState,
    pub games: Vec<GameRecord>,
}

fn unassisted_probe_session(session: u32) -> bool {
    matches!(session, 3 | 6 | 9)
}

/// Run one training session: ten RehabHero songs then eighteen FingerPong games.
///
/// In sessions 3, 6 and 9 the first song and the first rally game are
/// unassisted probes; difficulty escalates afterwards if their success beats
/// the target.
pub fn run_session(
    plan: &SessionPlan,
    session: u32,
    mode: TrainingMode,
    profile: &PatientProfile,
    state: &mut TrainingState,
    rng: &SeededRng,
    response: ResponseModel,
) -> Result<SessionRecord> {
    plan.validate()?;
    let tuning = tune_session_schedule(session)?;
    let games = plan.build_games(&rng.derive(10_000 + u64::from(session)))?;
    let mut response_rng = rng.derive(20_000 + u64::from(session));
    let probes = unassisted_probe_session(session);
    let first_rally = plan.rehabhero_games();

    let mut records = Vec::with_capacity(games.len());
    for (i, spec) in games.iter().enumerate() {
        let assisted = !(probes && (i == 0 || i == first_rally));
        let ctx = GameContext {
            mode,
            tuning: tuning && assisted,
            assisted,
            response,
        };
        records.push(run_game(&ctx, spec, profile, state, &mut response_rng)?);
    }

    let count = |pred: &dyn Fn(&GameRecord) -> bool, cat: JudgementCategory| {
        records
            .iter()
            .filter(|g| pred(g))
            .flat_map(|g| &g.movements)
            .filter(|m| m.category == cat)
            .count()
    };
    let all = |_: &GameRecord| true;
    let movements: usize = records.iter().map(|g| g.movements.len()).sum();
    let assisted_moves: usize = records.iter().filter(|g| g.assisted).map(|g| g.movements.len()).sum();
    let unassisted_moves = movements - assisted_moves;
    let assisted_hits = count(&|g| g.assisted, JudgementCategory::Hit);
    let unassisted_success = (unassisted_moves > 0)
        .then(|| count(&|g| !g.assisted, JudgementCategory::Hit) as f64 / unassisted_moves as f64);
    if let Some(u) = unassisted_success {
        state.difficulty = escalate_difficulty(state.difficulty, u);
    }
    Ok(SessionRecord {
        session,
        mode,
        tuning,
        movements,
        hits: count(&all, JudgementCategory::Hit),
        early: count(&all, JudgementCategory::Early),
        late: count(&all, JudgementCategory::Late),
        misses: count(&all, JudgementCategory::Miss),
        assisted_success: if assisted_moves > 0 { assisted_hits as f64 / assisted_moves as f64 } else { 0.0 },
        unassisted_success,
        difficulty_after: state.difficulty,
        games: records,
    })
}

/// Per-movement event log: `session,game,mode,movement_idx,category,timing_error_s,gain`.
pub fn write_events_csv<W: Write>(sessions: &[SessionRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["session", "game", "mode", "movement_idx", "category", "timing_error_s", "gain"])?;
    for s in sessions {
        for (g, game) in s.games.iter().enumerate() {
            for m in &game.movements {
                w.write_record([
                    s.session.to_string(),
                    g.to_string(),
                    game.mode.as_str().to_string(),
                    m.movement_idx.to_string(),
                    m.category.as_str().to_string(),
                    m.timing_error.map(|e| format!("{e:.6}")).unwrap_or_default(),
                    format!("{:.6}", m.gain),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::Io {
        path: "<events csv>".into(),
        source: e,
    })
}
