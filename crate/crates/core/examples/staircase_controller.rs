//! Success-rate staircase against participants of three skill levels.

use fingerlab::assist::{run_staircase, trailing_success_rate, AssistMode, AssistState};
use fingerlab::kinematics::SeededRng;
use fingerlab::patient::ResponseModel;

fn main() -> fingerlab::Result<()> {
    let model = ResponseModel::default();
    for skill in [-3.0, -1.0, 0.5] {
        let init = AssistState::new(2.0, 1.0, AssistMode::Physical)?;
        let mut rng = SeededRng::new(42, 0);
        let trace = run_staircase(init, 5000, |g| model.success_probability(skill, g, 0.0), &mut rng);
        let mean_gain = trace[3000..].iter().map(|r| r.gain_after).sum::<f64>() / 2000.0;
        println!(
            "skill {skill:+.1}: success over last 2000 = {:.3}, mean gain {mean_gain:.2}",
            trailing_success_rate(&trace, 2000)
        );
    }
    Ok(())
}
