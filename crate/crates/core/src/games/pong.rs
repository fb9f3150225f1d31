use serde::{Deserialize, Serialize};

use crate::kinematics::Finger;

/// Paddle half-height at the default difficulty (unit court).
pub const BASE_PADDLE_HALF_HEIGHT: f64 = 0.12;
pub const TARGET_HALF_HEIGHT: f64 = 0.1;
/// Horizontal ball speed at the default difficulty, court widths per second.
pub const BASE_BALL_SPEED: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PongMode {
    /// Rally against a computer opponent.
    Rally,
    /// Return the ball onto a target on the far side.
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PongEvent {
    None,
    PlayerHit,
    PlayerMiss,
    TargetHit,
    TargetMiss,
}

/// Court state. The player's paddle sits on the plane x = 0, the opponent
/// (or target column) on x = 1; walls at y = 0 and y = 1 reflect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PongState {
    pub ball: (f64, f64),
    pub ball_vel: (f64, f64),
    pub paddle_y: f64,
    pub paddle_half_height: f64,
    pub mode: PongMode,
    pub target_y: f64,
    pub target_half_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PongServe {
    pub y: f64,
    pub vy: f64,
    /// Target offset relative to the incoming ball in units of two paddle
    /// half-heights: -1 below, 0 matched, +1 above.
    pub target_offset: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PongConfig {
    pub mode: PongMode,
    pub balls: usize,
    pub finger: Finger,
}

/// Fold an unbounded coordinate into [0, 1] by mirror reflection; the flag is
/// true when an odd number of reflections occurred.
pub(crate) fn fold_unit(u: f64) -> (f64, bool) {
    let m = u.rem_euclid(2.0);
    let flipped = u.floor().rem_euclid(2.0) == 1.0;
    if m <= 1.0 {
        (m, flipped)
    } else {
        (2.0 - m, flipped)
    }
}

fn advance(s: &mut PongState, dt: f64) {
    let x = s.ball.0 + s.ball_vel.0 * dt;
    let (y, flipped) = fold_unit(s.ball.1 + s.ball_vel.1 * dt);
    s.ball = (x, y);
    if flipped {
        s.ball_vel.1 = -s.ball_vel.1;
    }
}

/// Advance the court by `dt`, stopping early at the first plane crossing.
///
/// The paddle is moved to `paddle_input` (clamped to the court) before the
/// ball advances. On a player hit the ball is returned: in rally mode with its
/// vertical velocity kept, in target mode deflected in proportion to the hit
/// offset so the paddle can aim.
pub fn step_pong(s: PongState, dt: f64, paddle_input: f64) -> (PongState, PongEvent) {
    let mut s = s;
    s.paddle_y = paddle_input.clamp(0.0, 1.0);
    let (x, vx) = (s.ball.0, s.ball_vel.0);
    let to_plane = if vx < 0.0 {
        x / -vx
    } else if vx > 0.0 {
        (1.0 - x) / vx
    } else {
        f64::INFINITY
    };
    if to_plane > dt {
        advance(&mut s, dt);
        return (s, PongEvent::None);
    }
    advance(&mut s, to_plane.max(0.0));
    if vx < 0.0 {
        s.ball.0 = 0.0;
        let offset = s.ball.1 - s.paddle_y;
        if offset.abs() > s.paddle_half_height {
            return (s, PongEvent::PlayerMiss);
        }
        s.ball_vel.0 = -vx;
        if s.mode == PongMode::Target {
            s.ball_vel.1 = vx.abs() * offset / s.paddle_half_height;
        }
        (s, PongEvent::PlayerHit)
    } else {
        s.ball.0 = 1.0;
        s.ball_vel.0 = -vx;
        match s.mode {
            PongMode::Rally => (s, PongEvent::None),
            PongMode::Target if (s.ball.1 - s.target_y).abs() <= s.target_half_height => (s, PongEvent::TargetHit),
            PongMode::Target => (s, PongEvent::TargetMiss),
        }
    }
}

/// Height at which a ball currently at `s.ball` reaches the player plane.
pub(crate) fn predict_arrival(s: &PongState) -> f64 {
    let t = s.ball.0 / -s.ball_vel.0;
    fold_unit(s.ball.1 + s.ball_vel.1 * t).0
}

/// Paddle position that, when hit at `arrival_y`, sends the ball onto `target_y`.
///
/// Aims directly when the paddle fits on the court, otherwise banks the
/// return off the nearer wall.
pub(crate) fn aim_paddle(arrival_y: f64, target_y: f64, half_height: f64) -> f64 {
    // return flight takes 1/|vx|; deflection gives vy = |vx| * offset / hh,
    // so the unreflected landing point moves by offset / hh court heights
    let margin = 0.1 * half_height;
    let paddle_for = |landing: f64| arrival_y - (landing - arrival_y) * half_height;
    [target_y, -target_y, 2.0 - target_y]
        .into_iter()
        .filter(|u| (u - arrival_y).abs() <= 1.0)
        .map(paddle_for)
        .find(|p| (margin..=1.0 - margin).contains(p))
        .unwrap_or_else(|| paddle_for(target_y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn court(ball: (f64, f64), vel: (f64, f64)) -> PongState {
        PongState {
            ball,
            ball_vel: vel,
            paddle_y: 0.5,
            paddle_half_height: 0.1,
            mode: PongMode::Rally,
            target_y: 0.5,
            target_half_height: TARGET_HALF_HEIGHT,
        }
    }

    #[test]
    fn hit_at_zero_offset() {
        let s = court((0.05, 0.5), (-1.0, 0.0));
        let (next, ev) = step_pong(s, 0.1, 0.5);
        assert_eq!(ev, PongEvent::PlayerHit);
        assert!(next.ball_vel.0 > 0.0);
    }

    #[test]
    fn miss_just_outside_paddle() {
        let s = court((0.05, 0.5 + 0.1 * 1.01), (-1.0, 0.0));
        let (_, ev) = step_pong(s, 0.1, 0.5);
        assert_eq!(ev, PongEvent::PlayerMiss);
    }

    #[test]
    fn wall_reflection() {
        let s = court((0.5, 0.95), (0.0, 1.0));
        let (next, ev) = step_pong(s, 0.1, 0.5);
        assert_eq!(ev, PongEvent::None);
        assert!(next.ball.1 < 1.0);
        assert!((next.ball.1 - 0.95).abs() < 1e-12);
        assert_eq!(next.ball_vel.1, -1.0);
    }

    #[test]
    fn speed_conserved_across_reflections() {
        let mut s = court((0.9, 0.3), (-0.01, 2.7));
        let speed = s.ball_vel.0.hypot(s.ball_vel.1);
        for _ in 0..500 {
            let (next, ev) = step_pong(s, 0.013, 0.5);
            assert_eq!(ev, PongEvent::None);
            assert!((next.ball_vel.0.hypot(next.ball_vel.1) - speed).abs() < 1e-9);
            assert!((0.0..=1.0).contains(&next.ball.1));
            s = next;
        }
    }

    #[test]
    fn aiming_reaches_target() {
        for (arrival, target) in [(0.2, 0.9), (0.5, 0.5), (0.7, 0.1), (0.005, 0.2), (0.995, 0.8)] {
            let mut s = court((0.3, arrival), (-0.5, 0.0));
            s.mode = PongMode::Target;
            s.target_y = target;
            s.paddle_half_height = 0.12;
            let paddle = aim_paddle(arrival, target, 0.12);
            let (s, ev) = step_pong(s, 10.0, paddle);
            assert_eq!(ev, PongEvent::PlayerHit);
            let (end, ev) = step_pong(s, 10.0, paddle);
            assert_eq!(ev, PongEvent::TargetHit);
            assert!((end.ball.1 - target).abs() < 1e-9);
            assert!((0.0..=1.0).contains(&paddle));
        }
    }

    #[test]
    fn prediction_matches_physics() {
        let s = court((0.8, 0.2), (-0.4, 1.3));
        let predicted = predict_arrival(&s);
        let (end, _) = step_pong(s, 100.0, predicted);
        assert!((end.ball.1 - predicted).abs() < 1e-12);
    }
}
