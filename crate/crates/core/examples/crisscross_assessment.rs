//! Crisscross scores for a pure-latency participant and a control cohort,
//! classified against the impairment threshold.

use fingerlab::assess::{classify_impairment, run_crisscross, CrisscrossConfig, ImpairmentThreshold};
use fingerlab::kinematics::SeededRng;
use fingerlab::patient::{generate_cohort, CohortKind, PatientProfile};

fn main() -> fingerlab::Result<()> {
    let cfg = CrisscrossConfig::default();
    let mut rng = SeededRng::new(3, 0);
    let r = run_crisscross(&cfg, &PatientProfile::pure_latency(0.25), &mut rng)?;
    for t in r.trials.iter().take(3) {
        println!("speed {:5.2} deg/s -> error {:.3} deg (2 x speed x latency = {:.3})", t.speed, t.error_deg, 0.5 * t.speed);
    }

    let thr = ImpairmentThreshold::default();
    let controls = generate_cohort(37, CohortKind::Control, 3);
    let scores: Vec<f64> = controls
        .iter()
        .map(|p| run_crisscross(&cfg, p, &mut rng).map(|r| r.mean_error_deg))
        .collect::<fingerlab::Result<_>>()?;
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    println!("control cohort mean error {mean:.2} deg, threshold {:.2} deg", thr.threshold());

    let stroke = generate_cohort(45, CohortKind::Stroke, 3);
    let impaired = stroke
        .iter()
        .filter(|p| {
            let e = run_crisscross(&cfg, p, &mut rng).map(|r| r.mean_error_deg).unwrap_or(f64::NAN);
            classify_impairment(e, &thr)
        })
        .count();
    println!("stroke cohort: {impaired}/45 impaired");
    Ok(())
}
