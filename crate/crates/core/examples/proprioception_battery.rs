//! Move and Match, ThumbSense and hand capacity for one participant.

use fingerlab::assess::{run_hand_capacity, run_move_match, run_thumbsense, MoveMatchConfig, ThumbSenseConfig};
use fingerlab::kinematics::SeededRng;
use fingerlab::patient::{generate_cohort, CohortKind};

fn main() -> fingerlab::Result<()> {
    let mut rng = SeededRng::new(5, 0);
    for (label, kind) in [("control", CohortKind::Control), ("stroke", CohortKind::Stroke)] {
        let p = generate_cohort(1, kind, 5).remove(0);
        let mm = run_move_match(&MoveMatchConfig::default(), &p, &mut rng)?;
        let ts = run_thumbsense(&ThumbSenseConfig::default(), &p, &mut rng)?;
        let hc = run_hand_capacity(&p)?;
        println!(
            "{label:<8} move-and-match {mm:5.2} deg, thumbsense {:4.1}% missed, hand capacity {hc:.2}",
            ts.percent_missed
        );
    }
    Ok(())
}
