//! Generate a song and judge a participant's presses against it, then play a
//! full training session.

use fingerlab::games::{generate_song, judge_note, run_session, JudgementCategory, SessionPlan, TrainingMode, TrainingState};
use fingerlab::kinematics::SeededRng;
use fingerlab::patient::{generate_cohort, respond_to_note, CohortKind, ResponseModel};

fn main() -> fingerlab::Result<()> {
    let mut rng = SeededRng::new(7, 0);
    let profile = generate_cohort(1, CohortKind::Stroke, 7).remove(0);
    let song = generate_song(3, 64, &mut rng)?;
    let model = ResponseModel::default();
    let mut counts = [0usize; 4];
    for note in song.notes() {
        let m = respond_to_note(note, &profile, 3.0, 0.0, 0.20, &model, &mut rng);
        let idx = match judge_note(note, &m, 0.20).category {
            JudgementCategory::Hit => 0,
            JudgementCategory::Early => 1,
            JudgementCategory::Late => 2,
            JudgementCategory::Miss => 3,
        };
        counts[idx] += 1;
    }
    println!("one song at gain 3: hit {} early {} late {} miss {}", counts[0], counts[1], counts[2], counts[3]);

    let plan = SessionPlan::default();
    let mut state = TrainingState::for_mode(TrainingMode::Standard, 2.0, 1.0)?;
    let rec = run_session(&plan, 1, TrainingMode::Standard, &profile, &mut state, &SeededRng::new(7, 1), model)?;
    println!(
        "session 1: {} movements, {:.1}% assisted success, tuning {}",
        rec.movements,
        100.0 * rec.assisted_success,
        rec.tuning
    );
    Ok(())
}
