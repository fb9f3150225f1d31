//! Simulate a 45-participant trial and write the report bundle.

use fingerlab::defaults::Defaults;
use fingerlab::games::TrainingMode;
use fingerlab::patient::{generate_cohort, CohortKind};
use fingerlab::stats::{run_virtual_trial, write_bundle, TrialConfig};

fn main() -> fingerlab::Result<()> {
    let seed = 2024;
    let cohort = generate_cohort(45, CohortKind::Stroke, seed);
    let params = Defaults::embedded().outcome_params();
    let ledger = run_virtual_trial(&cohort, &params, &TrialConfig::default(), seed)?;
    let dir = std::env::temp_dir().join("fingerlab-virtual-trial");
    let rates = write_bundle(&ledger, &dir)?;
    let pct = |r: Option<f64>| r.map_or_else(|| "n/a".to_string(), |r| format!("{r:.0}%"));
    for g in TrainingMode::ALL {
        println!(
            "{:<13} responders: impaired {}, unimpaired {}",
            g.as_str(),
            pct(rates.rate(g, Some(true))),
            pct(rates.rate(g, Some(false)))
        );
    }
    println!("bundle in {}", dir.display());
    Ok(())
}
