//! Acceptance criteria. Runs as a plain binary so every criterion prints a
//! PASS/FAIL line whether or not it holds.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use fingerlab::assess::{
    assessment_schedule, classify_impairment, run_crisscross, CrisscrossConfig, ImpairmentThreshold, ScheduledItem,
};
use fingerlab::assist::{run_staircase, trailing_success_rate, tune_session_schedule, AssistMode, AssistState};
use fingerlab::cli::Cli;
use fingerlab::defaults::Defaults;
use fingerlab::eeg::{epoch, notch_then_bandpass, process_recording, synth_recording, FilterBank, ProcessConfig, SynthConfig};
use fingerlab::games::{run_session, SessionPlan, TrainingMode, TrainingState};
use fingerlab::kinematics::SeededRng;
use fingerlab::patient::{generate_cohort, CohortKind, PatientProfile, ResponseModel, Side};
use fingerlab::stats::{
    friedman, kruskal_wallis, responder_report, run_virtual_trial, wilcoxon_rank_sum, wilcoxon_signed_rank, Tail,
    TrialConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn staircase_equilibrium() -> Outcome {
    let start = Instant::now();
    let model = ResponseModel::default();
    let mut worst: f64 = 0.0;
    for skill in [-3.0, -1.0, 0.5] {
        for seed in 0..20 {
            let init = AssistState::new(2.0, 1.0, AssistMode::Physical).unwrap();
            let mut rng = SeededRng::new(seed, 0);
            let trace = run_staircase(init, 5000, |g| model.success_probability(skill, g, 0.0), &mut rng);
            worst = worst.max((trailing_success_rate(&trace, 2000) - 0.80).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 0.03 && secs < 5.0,
        format!("max |rate - 0.80| = {worst:.4} over 3 skills x 20 seeds, {secs:.2} s"),
    )
}

fn impairment_threshold() -> Outcome {
    let thr = ImpairmentThreshold::new(7.68, 2.56);
    let t = thr.threshold();
    let boundary = (t - 12.80).abs() < 1e-12
        && !classify_impairment(12.80, &thr)
        && classify_impairment(12.80 + 1e-9, &thr)
        && !classify_impairment(12.80 - 1e-9, &thr);
    let mut runner = proptest::test_runner::TestRunner::new(proptest::test_runner::Config {
        failure_persistence: None,
        ..proptest::test_runner::Config::default()
    });
    let props = runner
        .run(&(0.0..60.0f64, 0.0..60.0f64), |(a, b)| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            // monotone: impaired at lo implies impaired at hi
            proptest::prop_assert!(!classify_impairment(lo, &thr) || classify_impairment(hi, &thr));
            proptest::prop_assert_eq!(classify_impairment(a, &thr), a > 12.80);
            Ok(())
        })
        .is_ok();
    outcome(boundary && props, format!("threshold {t:.2} deg, boundary ok {boundary}, properties ok {props}"))
}

fn crisscross_oracle() -> Outcome {
    let cfg = CrisscrossConfig::default();
    let mut worst: f64 = 0.0;
    for (i, latency) in [0.1, 0.25, 0.4].into_iter().enumerate() {
        let mut rng = SeededRng::new(i as u64, 0);
        let r = run_crisscross(&cfg, &PatientProfile::pure_latency(latency), &mut rng).unwrap();
        for t in &r.trials {
            worst = worst.max((t.error_deg - 2.0 * t.speed * latency).abs());
        }
    }
    let means: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let cohort = generate_cohort(37, CohortKind::Control, seed);
            let mut rng = SeededRng::new(seed, 1);
            let s: f64 = cohort
                .iter()
                .map(|p| run_crisscross(&cfg, p, &mut rng).unwrap().mean_error_deg)
                .sum();
            s / cohort.len() as f64
        })
        .collect();
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        worst <= 1e-6 && lo >= 5.1 && hi <= 10.2,
        format!("oracle max dev {worst:.2e} deg; control run means {lo:.2}..{hi:.2} deg over 100 seeds"),
    )
}

fn eeg_recovery() -> Outcome {
    let cfg = |seed_noise: f64| SynthConfig {
        fixed_speed: Some(10.5),
        participant: PatientProfile::oracle(),
        noise_uv: seed_noise,
        ..SynthConfig::default()
    };
    let target = -3.75;

    let start = Instant::now();
    let first = synth_recording(&cfg(1.0), 0).unwrap();
    process_recording(&first.recording, Side::Right, None, &ProcessConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let runs: Vec<(f64, f64)> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let s = synth_recording(&cfg(1.0), seed).unwrap();
            let out = process_recording(&s.recording, Side::Right, None, &ProcessConfig::default()).unwrap();
            (out.pcnv.amplitude("Pz").unwrap_or(f64::NAN), out.rejection.removed_share())
        })
        .collect();
    let worst_rel = runs
        .iter()
        .map(|(a, _)| ((a - target) / target).abs())
        .fold(0.0, f64::max);
    let worst_rej = runs.iter().map(|r| r.1).fold(0.0, f64::max);

    let fs = 300.0;
    let bank = FilterBank::eeg_default(fs);
    let n = 60 * 300;
    let sine = |f: f64| -> Vec<f64> { (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect() };
    let x10 = sine(10.0);
    let y10 = bank.filtfilt(&x10).unwrap();
    let (a, b) = (6000, 12000);
    let xcorr = |lag: i64| -> f64 { (a..b).map(|i| x10[i] * y10[(i as i64 + lag) as usize]).sum() };
    let lag = (-15..=15).max_by(|&p, &q| xcorr(p).total_cmp(&xcorr(q))).unwrap();
    let y60 = bank.filtfilt(&sine(60.0)).unwrap();
    let peak60 = y60[a..b].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let atten_db = -20.0 * peak60.log10();

    let filtered = notch_then_bandpass(&first.recording).unwrap();
    let ep = epoch(&filtered).unwrap();
    let base = ep.window(-0.25, -0.05);
    let baseline_max = ep
        .data
        .iter()
        .flatten()
        .map(|e| (e[base.clone()].iter().sum::<f64>() / base.clone().count() as f64).abs())
        .fold(0.0, f64::max);

    let pass = worst_rel <= 0.10 && worst_rej < 0.10 && lag == 0 && atten_db >= 40.0 && baseline_max < 1e-9 && secs < 30.0;
    outcome(
        pass,
        format!(
            "Pz max rel error {:.1}% over 20 seeds, max rejection {:.1}%, 10 Hz lag {lag}, 60 Hz {atten_db:.0} dB, \
             baseline |mean| {baseline_max:.1e}, one recording {secs:.1} s",
            100.0 * worst_rel,
            100.0 * worst_rej
        ),
    )
}

/// Exact one-sided p (statistic >= observed) by enumerating every sign vector.
fn brute_signed_rank(d: &[f64]) -> f64 {
    let ranks = fingerlab::stats::average_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let w: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let n = d.len();
    let mut hits = 0u64;
    for mask in 0..(1u64 << n) {
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if s >= w - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / (1u64 << n) as f64
}

/// Exact one-sided p (rank sum of `a` <= observed) over every split.
fn brute_rank_sum(a: &[f64], b: &[f64]) -> f64 {
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = fingerlab::stats::average_ranks(&all);
    let w: f64 = ranks[..a.len()].iter().sum();
    let n = all.len();
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        total += 1;
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if s <= w + 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

fn statistical_oracles() -> Outcome {
    let sr = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], Tail::Greater).unwrap();
    let rs = wilcoxon_rank_sum(&[1.0, 2.0], &[3.0, 4.0], Tail::Less).unwrap();
    let kw = kruskal_wallis(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]).unwrap();
    let blocks: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64 + 0.5, i as f64 + 1.0]).collect();
    let fr = friedman(&blocks).unwrap();
    let fixed = (sr.p_value - 0.125).abs() < 1e-12
        && sr.exact
        && (rs.p_value - 1.0 / 6.0).abs() < 1e-12
        && rs.exact
        && (kw.statistic - 32.0 / 7.0).abs() < 1e-9
        && (fr.statistic - 20.0).abs() < 1e-9
        && fr.p_value < 0.001;

    let mut rng = SeededRng::new(5, 0);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    use rand::Rng;
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        // integer-valued data so ties occur
        let d: Vec<f64> = (0..n)
            .map(|_| {
                let v = rng.random_range(1..=4) as f64;
                if rng.random::<bool>() { v } else { -v }
            })
            .collect();
        let p = wilcoxon_signed_rank(&d, Tail::Greater).unwrap();
        worst = worst.max((p.p_value - brute_signed_rank(&d)).abs());
        let m = rng.random_range(1..n.max(2));
        let k = rng.random_range(1..=(8 - m).max(1));
        let a: Vec<f64> = (0..m).map(|_| rng.random_range(0..6) as f64).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.random_range(0..6) as f64).collect();
        if let Ok(r) = wilcoxon_rank_sum(&a, &b, Tail::Less) {
            worst = worst.max((r.p_value - brute_rank_sum(&a, &b)).abs());
        }
        cases += 1;
    }
    outcome(
        fixed && worst < 1e-9,
        format!(
            "SR p {:.4}, RS p {:.4}, KW H {:.4}, Friedman {:.2}; {cases} brute-force cases, max |dp| {worst:.1e}",
            sr.p_value, rs.p_value, kw.statistic, fr.statistic
        ),
    )
}

fn fig4_rates() -> Outcome {
    let params = Defaults::embedded().outcome_params();
    let cfg = TrialConfig {
        simulate_training: false,
        ..TrialConfig::default()
    };
    let per_trial: Vec<BTreeMap<(TrainingMode, bool), f64>> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let cohort = generate_cohort(45, CohortKind::Stroke, seed);
            let l = run_virtual_trial(&cohort, &params, &TrialConfig { jobs: 1, ..cfg.clone() }, seed).unwrap();
            let r = responder_report(&l);
            r.by_cell
                .iter()
                .filter_map(|c| Some(((c.group, c.impaired?), c.rate_pct?)))
                .collect()
        })
        .collect();
    let targets = [
        (TrainingMode::Propriopixel, true, 63.0),
        (TrainingMode::Virtual, true, 42.0),
        (TrainingMode::Standard, true, 0.0),
        (TrainingMode::Standard, false, 40.0),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (g, imp, target) in targets {
        let v: Vec<f64> = per_trial.iter().filter_map(|m| m.get(&(g, imp)).copied()).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        pass &= (mean - target).abs() <= 10.0;
        parts.push(format!(
            "{}{} {mean:.1}% (paper {target:.0}%)",
            if imp { "impaired " } else { "intact " },
            g.as_str()
        ));
    }
    outcome(pass, parts.join(", "))
}

fn session_dose() -> Outcome {
    use ScheduledItem::*;
    let table: [(u32, &[ScheduledItem]); 9] = [
        (1, &[ThumbSense, Tuning]),
        (2, &[MoveAndMatch, Bbt]),
        (3, &[Crisscross, UnassistedGameplay]),
        (4, &[ThumbSense, Tuning]),
        (5, &[MoveAndMatch, Bbt]),
        (6, &[Crisscross, UnassistedGameplay]),
        (7, &[ThumbSense, Tuning]),
        (8, &[MoveAndMatch, Bbt]),
        (9, &[Crisscross, UnassistedGameplay]),
    ];
    let schedule_ok = table.iter().all(|(s, items)| {
        assessment_schedule(*s).unwrap() == items.iter().copied().collect()
            && tune_session_schedule(*s).unwrap() == matches!(s, 1 | 4 | 7)
    });
    let plan = SessionPlan::default();
    let profiles = generate_cohort(6, CohortKind::Stroke, 77);
    let mut totals = Vec::new();
    let mut tuning_ok = true;
    for (i, p) in profiles.iter().enumerate() {
        let mode = TrainingMode::ALL[i % 3];
        let mut state = TrainingState::for_mode(mode, 2.0, 1.0).unwrap();
        let rng = SeededRng::new(77, i as u64);
        let mut total = 0;
        for s in 1..=9 {
            let rec = run_session(&plan, s, mode, p, &mut state, &rng, ResponseModel::default()).unwrap();
            tuning_ok &= rec.tuning == matches!(s, 1 | 4 | 7);
            total += rec.movements;
        }
        totals.push(total);
    }
    let in_range = totals.iter().all(|t| (8600..=9800).contains(t));
    outcome(
        schedule_ok && tuning_ok && in_range,
        format!("course totals {totals:?}, schedule sets ok {schedule_ok}, tuning sessions ok {tuning_ok}"),
    )
}

fn hash_dir(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let bytes = std::fs::read(&p).unwrap();
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), hex);
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, jobs: &str| {
        let dir = tmp.path().join(name);
        let cli = Cli::try_parse_from([
            "fingerlab",
            "trial",
            "--seed",
            "31",
            "--jobs",
            jobs,
            "--out",
            dir.to_str().unwrap(),
        ])
        .unwrap();
        fingerlab::cli::run(&cli, &mut std::io::sink()).unwrap();
        hash_dir(&dir)
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "4");
    let d = run("d", "4");
    let files = a.len();
    outcome(
        files == 5 && a == b && a == c && c == d,
        format!("{files} files; jobs 1 twice equal {}, jobs 4 twice equal {}, jobs 1 vs 4 equal {}", a == b, c == d, a == c),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 staircase equilibrium", staircase_equilibrium),
        ("2 impairment threshold", impairment_threshold),
        ("3 crisscross oracle and control cohort", crisscross_oracle),
        ("4 EEG pCNV recovery", eeg_recovery),
        ("5 statistical oracles", statistical_oracles),
        ("6 responder rates", fig4_rates),
        ("7 session dose and schedule", session_dose),
        ("8 deterministic trial bundles", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] criterion {name}: {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
