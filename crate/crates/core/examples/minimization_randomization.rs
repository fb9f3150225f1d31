//! Covariate-adaptive allocation of a 45-participant cohort.

use fingerlab::games::TrainingMode;
use fingerlab::kinematics::SeededRng;
use fingerlab::patient::{generate_cohort, CohortKind};
use fingerlab::stats::{minimization_randomize, Tallies, DEFAULT_BIASED_COIN};

fn main() -> fingerlab::Result<()> {
    let cohort = generate_cohort(45, CohortKind::Stroke, 21);
    let mut tallies = Tallies::tertiles(3);
    let mut rng = SeededRng::new(21, 1);
    for p in &cohort {
        minimization_randomize(p, &mut tallies, DEFAULT_BIASED_COIN, &mut rng)?;
    }
    let names: Vec<&str> = TrainingMode::ALL.iter().map(|m| m.as_str()).collect();
    println!("groups {names:?} sizes {:?}", tallies.totals);
    for (factor, levels) in ["bbt tertile", "age tertile"].iter().zip(&tallies.counts) {
        for (l, row) in levels.iter().enumerate() {
            println!("{factor} {l}: {row:?}");
        }
    }
    Ok(())
}
