//! Command-line front end. The binary only forwards to [`main_with_args`].

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::assess::{
    classify_impairment, run_crisscross, run_hand_capacity, run_move_match, run_thumbsense, CrisscrossConfig,
    MoveMatchConfig, ThumbSenseConfig,
};
use crate::assist::{run_staircase, trailing_success_rate, write_trace_csv, AssistMode, AssistState};
use crate::defaults::{parse_outcome_params, Defaults};
use crate::eeg::{
    load_recording, process_recording, save_recording, synth::read_kinematics_csv, synth::write_kinematics_csv,
    synth_recording, ProcessConfig, SynthConfig,
};
use crate::error::{invalid_arg, Error, Result};
use crate::games::TrainingMode;
use crate::io::{read_to_string, write_atomic};
use crate::kinematics::{SeededRng, Workspace};
use crate::patient::{generate_cohort, parse_cohort, parse_profile, CohortKind, PatientProfile, ResponseModel, Side};
use crate::stats::report::{write_bundle, write_report};
use crate::stats::trial::{run_virtual_trial, TrialConfig, TrialLedger, MIN_PARTICIPANTS};

/// Below this many movements the staircase has not settled.
pub const MIN_DEMO_MOVEMENTS: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "fingerlab", version, about = "Finger rehabilitation simulation lab")]
pub struct Cli {
    /// Seed that fully determines every output.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; 0 uses every core. Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Cohort JSON (array of participant profiles).
    #[arg(long, global = true)]
    pub cohort: Option<PathBuf>,
    /// Outcome-model JSON (cells or a full defaults document).
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the success-rate staircase against a simulated participant.
    ControllerDemo {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        patient_skill: f64,
        #[arg(long, default_value_t = 5000)]
        movements: usize,
    },
    /// Run one robotic assessment.
    Assess {
        #[arg(long, value_enum)]
        which: Assessment,
        /// Participant JSON; the noise-free oracle participant if omitted.
        #[arg(long)]
        patient: Option<PathBuf>,
    },
    /// Synthesize or process EEG recordings.
    Eeg {
        #[command(subcommand)]
        command: EegCommand,
    },
    /// Simulate a randomized trial and write the report bundle.
    Trial {
        #[arg(long, default_value_t = 45)]
        participants: usize,
        /// Skip game-by-game training simulation (outcomes are unchanged).
        #[arg(long)]
        fast: bool,
    },
    /// Rebuild the report files from a trial ledger.
    Report {
        /// Ledger JSON; `<out>/ledger.json` if omitted.
        #[arg(long)]
        ledger: Option<PathBuf>,
    },
    /// Generate a cohort JSON.
    Cohort {
        #[arg(long, default_value_t = 45)]
        participants: usize,
        #[arg(long, value_enum, default_value_t = Population::Stroke)]
        kind: Population,
    },
}

#[derive(Debug, Subcommand)]
pub enum EegCommand {
    /// Write a synthetic Crisscross recording with a known pCNV.
    Synth {
        #[arg(long, default_value_t = 10.0)]
        pcnv_gain: f64,
        #[arg(long, default_value_t = 100)]
        crossings: usize,
        /// Background noise RMS, microvolts.
        #[arg(long, default_value_t = 10.0)]
        noise: f64,
        #[arg(long, value_enum, default_value_t = AffectedSide::Right)]
        affected_side: AffectedSide,
    },
    /// Extract pCNV amplitudes and the kinematic correlation map.
    Process {
        /// Recording stem (`<stem>.csv` + `<stem>.json`) or a directory
        /// holding `recording.csv`/`recording.json`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Skip eye-artifact removal.
        #[arg(long)]
        no_ica: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Assessment {
    Crisscross,
    Movematch,
    Thumbsense,
    Handcap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Population {
    Stroke,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AffectedSide {
    Left,
    Right,
}

impl From<AffectedSide> for Side {
    fn from(s: AffectedSide) -> Self {
        match s {
            AffectedSide::Left => Side::Left,
            AffectedSide::Right => Side::Right,
        }
    }
}

/// Parse `args`, run, and return the process exit code. Diagnostics are a
/// single line on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            eprintln!("fingerlab: {}", line.trim_start_matches("error: "));
            return 2;
        }
    };
    let stdout = std::io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fingerlab: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}

fn out_dir(cli: &Cli, fallback: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(fallback))
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

pub fn run(cli: &Cli, w: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::ControllerDemo {
            patient_skill,
            movements,
        } => controller_demo(cli, *patient_skill, *movements, w),
        Command::Assess { which, patient } => assess(cli, *which, patient.as_deref(), w),
        Command::Eeg { command } => match command {
            EegCommand::Synth {
                pcnv_gain,
                crossings,
                noise,
                affected_side,
            } => eeg_synth(cli, *pcnv_gain, *crossings, *noise, (*affected_side).into(), w),
            EegCommand::Process { input, no_ica } => eeg_process(cli, input, *no_ica, w),
        },
        Command::Trial { participants, fast } => trial(cli, *participants, *fast, w),
        Command::Report { ledger } => report(cli, ledger.as_deref(), w),
        Command::Cohort { participants, kind } => cohort(cli, *participants, *kind, w),
    }
}

fn controller_demo(cli: &Cli, skill: f64, movements: usize, w: &mut dyn Write) -> Result<()> {
    if movements == 0 {
        return Err(invalid_arg("--movements must be positive"));
    }
    if movements < MIN_DEMO_MOVEMENTS {
        eprintln!("fingerlab: warning: {movements} movements is pre-equilibrium; the staircase needs at least {MIN_DEMO_MOVEMENTS}");
    }
    let c = Defaults::embedded().controller;
    let init = AssistState::new(c.initial_gain, c.step, AssistMode::Physical)?;
    let model = ResponseModel::default();
    let mut rng = SeededRng::new(cli.seed, 0xC7);
    let rows = run_staircase(init, movements, |g| model.success_probability(skill, g, 0.0), &mut rng);
    let window = 2000.min(movements);
    let rate = trailing_success_rate(&rows, window);
    if let Some(dir) = &cli.out {
        let mut buf = Vec::new();
        write_trace_csv(&rows, &mut buf)?;
        write_atomic(&dir.join("controller_trace.csv"), &buf)?;
    }
    writeln!(w, "movements: {movements}").map_err(io_err)?;
    writeln!(w, "success rate (last {window}): {rate:.4}").map_err(io_err)?;
    let marks: Vec<String> = (1..=10)
        .map(|k| k * movements / 10 - 1)
        .map(|i| format!("{:.0}", rows[i].gain_after))
        .collect();
    writeln!(w, "gain by decile: {}", marks.join(" ")).map_err(io_err)?;
    Ok(())
}

fn load_patient(path: Option<&Path>) -> Result<PatientProfile> {
    match path {
        Some(p) => parse_profile(&read_to_string(p)?, &p.display().to_string()),
        None => Ok(PatientProfile::oracle()),
    }
}

fn assess(cli: &Cli, which: Assessment, patient: Option<&Path>, w: &mut dyn Write) -> Result<()> {
    let p = load_patient(patient)?;
    let mut rng = SeededRng::new(cli.seed, 0xA5);
    let (name, score, units) = match which {
        Assessment::Crisscross => {
            let r = run_crisscross(&CrisscrossConfig::default(), &p, &mut rng)?;
            ("crisscross", r.mean_error_deg, "deg")
        }
        Assessment::Movematch => ("move_and_match", run_move_match(&MoveMatchConfig::default(), &p, &mut rng)?, "deg"),
        Assessment::Thumbsense => {
            let r = run_thumbsense(&ThumbSenseConfig::default(), &p, &mut rng)?;
            ("thumbsense", r.percent_missed, "pct_missed")
        }
        Assessment::Handcap => ("hand_capacity", run_hand_capacity(&p)?, "fraction"),
    };
    let line = format!("assessment,score,units\n{name},{score:.4},{units}\n");
    if let Some(dir) = &cli.out {
        write_atomic(&dir.join(format!("{name}.csv")), line.as_bytes())?;
    }
    w.write_all(line.as_bytes()).map_err(io_err)?;
    if which == Assessment::Crisscross {
        let thr = Defaults::embedded().impairment_threshold();
        let label = if classify_impairment(score, &thr) { "impaired" } else { "unimpaired" };
        writeln!(w, "classification: {label} (threshold {:.2} deg)", thr.threshold()).map_err(io_err)?;
    }
    Ok(())
}

fn eeg_synth(cli: &Cli, gain: f64, crossings: usize, noise: f64, side: Side, w: &mut dyn Write) -> Result<()> {
    let cfg = SynthConfig {
        pcnv_gain_uv: gain,
        n_crossings: crossings,
        noise_uv: noise,
        affected_side: side,
        ..SynthConfig::default()
    };
    let out = synth_recording(&cfg, cli.seed)?;
    let dir = out_dir(cli, "eeg");
    save_recording(&out.recording, side, &dir.join("recording"))?;
    let mut buf = Vec::new();
    write_kinematics_csv(&out.kinematics, &mut buf)?;
    write_atomic(&dir.join("kinematics.csv"), &buf)?;
    write_atomic(&dir.join("truth.json"), serde_json::to_string_pretty(&out.truth)?.as_bytes())?;
    writeln!(
        w,
        "wrote {} channels x {} samples, {} crossings to {}",
        out.recording.labels.len(),
        out.recording.n_samples(),
        out.kinematics.len(),
        dir.display()
    )
    .map_err(io_err)?;
    writeln!(w, "expected Pz window mean: {:.4} uV", out.truth.pz_window_uv).map_err(io_err)?;
    Ok(())
}

fn eeg_process(cli: &Cli, input: &Path, no_ica: bool, w: &mut dyn Write) -> Result<()> {
    let (stem, dir) = if input.is_dir() {
        (input.join("recording"), input.to_path_buf())
    } else {
        let dir = input.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        (input.to_path_buf(), dir)
    };
    let (rec, side) = load_recording(&stem)?;
    let kin_path = dir.join("kinematics.csv");
    let kinematics = if kin_path.exists() {
        let f = std::fs::File::open(&kin_path).map_err(|source| Error::Io {
            path: kin_path.display().to_string(),
            source,
        })?;
        Some(read_kinematics_csv(f)?)
    } else {
        None
    };
    let ws = Workspace::assessment();
    let cfg = ProcessConfig {
        ica: if no_ica { None } else { ProcessConfig::default().ica },
        ..ProcessConfig::default()
    };
    let out = process_recording(&rec, side, kinematics.as_deref().map(|k| (k, &ws)), &cfg)?;
    let out_dir = out_dir(cli, &dir.display().to_string());
    let mut buf = Vec::new();
    out.pcnv.write_csv(&mut buf)?;
    write_atomic(&out_dir.join("pcnv.csv"), &buf)?;
    if let Some(map) = &out.correlation {
        let mut buf = Vec::new();
        map.write_csv(&mut buf)?;
        write_atomic(&out_dir.join("correlation.csv"), &buf)?;
    }
    w.write_all(&buf_of(|b| out.pcnv.write_csv(b))?).map_err(io_err)?;
    writeln!(w, "epochs removed: {:.1}%", 100.0 * out.rejection.removed_share()).map_err(io_err)?;
    if let Some(ica) = &out.ica {
        writeln!(
            w,
            "ica: {} components, {} removed{}",
            ica.n_components,
            ica.removed.len(),
            if ica.passthrough { " (passthrough)" } else { "" }
        )
        .map_err(io_err)?;
    }
    Ok(())
}

fn buf_of(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut b = Vec::new();
    f(&mut b)?;
    Ok(b)
}

fn trial(cli: &Cli, participants: usize, fast: bool, w: &mut dyn Write) -> Result<()> {
    let cohort = match &cli.cohort {
        Some(p) => parse_cohort(&read_to_string(p)?, &p.display().to_string())?,
        None => {
            if participants < MIN_PARTICIPANTS {
                return Err(invalid_arg(format!(
                    "--participants {participants} is below the minimum of {MIN_PARTICIPANTS}"
                )));
            }
            generate_cohort(participants, CohortKind::Stroke, cli.seed)
        }
    };
    let defaults = Defaults::embedded();
    let params = match &cli.params {
        Some(p) => parse_outcome_params(&read_to_string(p)?, &p.display().to_string())?,
        None => defaults.outcome_params(),
    };
    let cfg = TrialConfig {
        jobs: cli.jobs,
        simulate_training: !fast,
        threshold: defaults.impairment_threshold(),
        initial_gain: defaults.controller.initial_gain,
        gain_step: defaults.controller.step,
        ..TrialConfig::default()
    };
    let ledger = run_virtual_trial(&cohort, &params, &cfg, cli.seed)?;
    let dir = out_dir(cli, "trial");
    let rates = write_bundle(&ledger, &dir)?;
    writeln!(w, "participants: {}", ledger.participants.len()).map_err(io_err)?;
    for g in TrainingMode::ALL {
        let fmt = |imp| rates.rate(g, imp).map_or_else(|| "n/a".to_string(), |r| format!("{r:.0}%"));
        writeln!(
            w,
            "{:<13} responders: all {}, impaired {}, unimpaired {}",
            g.as_str(),
            fmt(None),
            fmt(Some(true)),
            fmt(Some(false))
        )
        .map_err(io_err)?;
    }
    writeln!(w, "bundle written to {}", dir.display()).map_err(io_err)?;
    Ok(())
}

fn report(cli: &Cli, ledger: Option<&Path>, w: &mut dyn Write) -> Result<()> {
    let path = match ledger {
        Some(p) => p.to_path_buf(),
        None => out_dir(cli, "trial").join("ledger.json"),
    };
    let l = TrialLedger::from_json(&read_to_string(&path)?, &path.display().to_string())?;
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf));
    write_report(&l, &dir)?;
    writeln!(w, "report for {} participants written to {}", l.participants.len(), dir.display()).map_err(io_err)
}

fn cohort(cli: &Cli, n: usize, kind: Population, w: &mut dyn Write) -> Result<()> {
    if n == 0 {
        return Err(invalid_arg("--participants must be positive"));
    }
    let kind = match kind {
        Population::Stroke => CohortKind::Stroke,
        Population::Control => CohortKind::Control,
    };
    let json = serde_json::to_string_pretty(&generate_cohort(n, kind, cli.seed))?;
    match &cli.out {
        Some(dir) => {
            write_atomic(&dir.join("cohort.json"), json.as_bytes())?;
            writeln!(w, "wrote {n} participants to {}", dir.join("cohort.json").display()).map_err(io_err)
        }
        None => writeln!(w, "{json}").map_err(io_err),
    }
}
