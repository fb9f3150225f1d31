//! The same participant trained for nine sessions in each paradigm.

use fingerlab::games::{run_session, SessionPlan, TrainingMode, TrainingState};
use fingerlab::kinematics::SeededRng;
use fingerlab::patient::{generate_cohort, CohortKind, ResponseModel};

fn main() -> fingerlab::Result<()> {
    let profile = generate_cohort(3, CohortKind::Stroke, 11).remove(2);
    let plan = SessionPlan::default();
    for mode in TrainingMode::ALL {
        let mut state = TrainingState::for_mode(mode, 2.0, 1.0)?;
        let mut moves = 0;
        let mut probes = Vec::new();
        for session in 1..=9 {
            let rng = SeededRng::new(11, u64::from(session));
            let rec = run_session(&plan, session, mode, &profile, &mut state, &rng, ResponseModel::default())?;
            moves += rec.movements;
            if let Some(u) = rec.unassisted_success {
                probes.push(format!("{:.0}%", 100.0 * u));
            }
        }
        println!(
            "{:<13} {moves} movements, unassisted probes {}, final window {:.3} s",
            mode.as_str(),
            probes.join("/"),
            state.difficulty.timing_window
        );
    }
    Ok(())
}
