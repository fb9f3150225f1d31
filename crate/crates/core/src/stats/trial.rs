//! Virtual trial: randomize a cohort, run the visit schedule, draw outcomes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assess::{
    assessment_schedule, classify_impairment, full_battery, run_crisscross, run_hand_capacity, run_move_match,
    run_thumbsense, AssessmentRow, CrisscrossConfig, ImpairmentThreshold, MoveMatchConfig, ScheduledItem,
    ThumbSenseConfig,
};
use crate::error::{invalid_arg, Error, Result};
use crate::games::{run_session, SessionPlan, TrainingMode, TrainingState};
use crate::kinematics::SeededRng;
use crate::patient::{sample_outcome, OutcomeModelParams, PatientProfile, ResponseModel};

use super::minimization::{minimization_randomize, Tallies, DEFAULT_BIASED_COIN};

/// Smallest cohort the harness accepts.
pub const MIN_PARTICIPANTS: usize = 18;

pub const BASELINE_1: &str = "baseline1";
pub const BASELINE_2: &str = "baseline2";
pub const POST: &str = "post";
pub const FOLLOW_UP: &str = "1mfu";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub p_best: f64,
    /// Worker threads for participant simulation; 0 uses every core.
    /// Not recorded in the ledger: results do not depend on it.
    #[serde(skip)]
    pub jobs: usize,
    pub threshold: ImpairmentThreshold,
    /// Play every training session game by game. When false the weekly
    /// visits carry only their assessments, which leaves outcomes unchanged.
    pub simulate_training: bool,
    pub initial_gain: f64,
    pub gain_step: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            p_best: DEFAULT_BIASED_COIN,
            jobs: 0,
            threshold: ImpairmentThreshold::default(),
            simulate_training: true,
            initial_gain: 2.0,
            gain_step: 1.0,
        }
    }
}

/// One visit: what was scheduled and what was measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub timepoint: String,
    pub items: Vec<ScheduledItem>,
    pub scores: Vec<AssessmentRow>,
    /// Movements attempted during the training session, if one was played.
    pub movements: Option<usize>,
}

impl Visit {
    pub fn score(&self, assessment: &str) -> Option<f64> {
        self.scores.iter().find(|r| r.assessment == assessment).map(|r| r.score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantRecord {
    pub profile: PatientProfile,
    pub group: TrainingMode,
    pub impaired: bool,
    pub visits: Vec<Visit>,
    /// BBT at follow-up minus the mean of the two baselines.
    pub delta_bbt: f64,
    /// Same change measured at the post-therapy visit.
    pub delta_bbt_post: f64,
}

impl ParticipantRecord {
    pub fn visit(&self, timepoint: &str) -> Option<&Visit> {
        self.visits.iter().find(|v| v.timepoint == timepoint)
    }

    /// Mean of the two baseline scores of an assessment.
    pub fn baseline(&self, assessment: &str) -> Option<f64> {
        let a = self.visit(BASELINE_1)?.score(assessment)?;
        let b = self.visit(BASELINE_2)?.score(assessment)?;
        Some(0.5 * (a + b))
    }

    /// Score at `timepoint` minus the baseline mean.
    pub fn change(&self, assessment: &str, timepoint: &str) -> Option<f64> {
        Some(self.visit(timepoint)?.score(assessment)? - self.baseline(assessment)?)
    }

    pub fn total_movements(&self) -> usize {
        self.visits.iter().filter_map(|v| v.movements).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLedger {
    pub seed: u64,
    pub config: TrialConfig,
    pub outcome_params: OutcomeModelParams,
    pub participants: Vec<ParticipantRecord>,
}

impl TrialLedger {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str, source_name: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: e.line(),
            field: format!("column {}", e.column()),
            message: e.to_string(),
        })
    }
}

fn row(timepoint: &str, assessment: &str, score: f64, units: &str) -> AssessmentRow {
    AssessmentRow {
        timepoint: timepoint.to_string(),
        assessment: assessment.to_string(),
        score,
        units: units.to_string(),
    }
}

/// Everything in `items` that produces a score, in schedule order.
fn measure(
    timepoint: &str,
    items: &[ScheduledItem],
    profile: &PatientProfile,
    bbt: f64,
    unassisted: Option<f64>,
    rng: &mut SeededRng,
) -> Result<Vec<AssessmentRow>> {
    let mut rows = Vec::new();
    for item in items {
        match item {
            ScheduledItem::ThumbSense => {
                let r = run_thumbsense(&ThumbSenseConfig::default(), profile, rng)?;
                rows.push(row(timepoint, item.as_str(), r.percent_missed, "pct_missed"));
            }
            ScheduledItem::MoveAndMatch => {
                let e = run_move_match(&MoveMatchConfig::default(), profile, rng)?;
                rows.push(row(timepoint, item.as_str(), e, "deg"));
            }
            ScheduledItem::Bbt => rows.push(row(timepoint, item.as_str(), bbt, "blocks")),
            ScheduledItem::Crisscross => {
                let r = run_crisscross(&CrisscrossConfig::default(), profile, rng)?;
                rows.push(row(timepoint, item.as_str(), r.mean_error_deg, "deg"));
            }
            ScheduledItem::UnassistedGameplay => {
                let s = unassisted.unwrap_or_else(|| {
                    ResponseModel::default().success_probability(profile.skill, 0.0, 0.0)
                });
                rows.push(row(timepoint, item.as_str(), 100.0 * s, "pct_success"));
            }
            ScheduledItem::Tuning => {}
        }
    }
    Ok(rows)
}

fn battery_visit(timepoint: &str, profile: &PatientProfile, bbt: f64, rng: &mut SeededRng) -> Result<Visit> {
    let items: Vec<ScheduledItem> = full_battery().into_iter().collect();
    let mut scores = measure(timepoint, &items, profile, bbt, None, rng)?;
    scores.push(row(timepoint, "hand_capacity", run_hand_capacity(profile)?, "fraction"));
    Ok(Visit {
        timepoint: timepoint.to_string(),
        items,
        scores,
        movements: None,
    })
}

/// Baseline visits only; decides the impairment label.
fn run_baselines(profile: &PatientProfile, rng: &SeededRng) -> Result<Vec<Visit>> {
    let bbt = profile.baseline_bbt;
    Ok(vec![
        battery_visit(BASELINE_1, profile, bbt, &mut rng.derive(1))?,
        battery_visit(BASELINE_2, profile, bbt, &mut rng.derive(2))?,
    ])
}

fn run_course(
    profile: &PatientProfile,
    mut visits: Vec<Visit>,
    params: &OutcomeModelParams,
    cfg: &TrialConfig,
    rng: &SeededRng,
) -> Result<ParticipantRecord> {
    let group = profile.group.ok_or_else(|| Error::InvalidState("participant not randomized".into()))?;
    let impaired = profile.impaired.ok_or_else(|| Error::InvalidState("impairment not classified".into()))?;
    let base = profile.baseline_bbt;
    let mut outcome_rng = rng.derive(3);
    let delta_1mfu = f64::from(sample_outcome(profile, params, &mut outcome_rng)?);
    let delta_post = f64::from(sample_outcome(profile, params, &mut outcome_rng)?);
    let bbt_post = (base + delta_post).max(0.0);
    let bbt_1mfu = (base + delta_1mfu).max(0.0);

    let plan = SessionPlan::default();
    let mut state = TrainingState::for_mode(group, cfg.initial_gain, cfg.gain_step)?;
    for session in 1..=9u32 {
        let items: Vec<ScheduledItem> = assessment_schedule(session)?.into_iter().collect();
        let timepoint = format!("s{session}");
        let (movements, unassisted) = if cfg.simulate_training {
            let rec = run_session(
                &plan,
                session,
                group,
                profile,
                &mut state,
                &rng.derive(100 + u64::from(session)),
                ResponseModel::default(),
            )?;
            (Some(rec.movements), rec.unassisted_success)
        } else {
            (None, None)
        };
        let bbt = base + (bbt_post - base) * f64::from(session) / 9.0;
        let scores = measure(
            &timepoint,
            &items,
            profile,
            bbt.round(),
            unassisted,
            &mut rng.derive(200 + u64::from(session)),
        )?;
        visits.push(Visit {
            timepoint,
            items,
            scores,
            movements,
        });
    }
    visits.push(battery_visit(POST, profile, bbt_post, &mut rng.derive(4))?);
    visits.push(battery_visit(FOLLOW_UP, profile, bbt_1mfu, &mut rng.derive(5))?);
    Ok(ParticipantRecord {
        profile: profile.clone(),
        group,
        impaired,
        visits,
        delta_bbt: bbt_1mfu - base,
        delta_bbt_post: bbt_post - base,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfiguration(format!("thread pool: {e}")))
}

/// Run the whole trial. Randomization is sequential in cohort order (each
/// assignment depends on the earlier ones); everything else runs per
/// participant on its own random stream, so results do not depend on `jobs`.
pub fn run_virtual_trial(
    cohort: &[PatientProfile],
    params: &OutcomeModelParams,
    cfg: &TrialConfig,
    seed: u64,
) -> Result<TrialLedger> {
    if cohort.len() < MIN_PARTICIPANTS {
        return Err(invalid_arg(format!(
            "a trial needs at least {MIN_PARTICIPANTS} participants, got {}",
            cohort.len()
        )));
    }
    params.validate()?;
    let mut ids: Vec<u32> = cohort.iter().map(|p| p.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid_arg("participant ids must be unique"));
    }
    for p in cohort {
        p.validate()?;
    }
    let streams = SeededRng::new(seed, 0x7121A1);
    let pool = pool(cfg.jobs)?;

    let baselines: Vec<Vec<Visit>> = pool.install(|| {
        cohort
            .par_iter()
            .map(|p| run_baselines(p, &streams.derive(u64::from(p.id))))
            .collect::<Result<_>>()
    })?;

    let mut tallies = Tallies::tertiles(TrainingMode::ALL.len());
    let mut coin = SeededRng::new(seed, 0x3A11);
    let mut assigned = Vec::with_capacity(cohort.len());
    for (p, visits) in cohort.iter().zip(&baselines) {
        let g = minimization_randomize(p, &mut tallies, cfg.p_best, &mut coin)?;
        let cc: Vec<f64> = visits
            .iter()
            .filter_map(|v| v.score(ScheduledItem::Crisscross.as_str()))
            .collect();
        let mean = cc.iter().sum::<f64>() / cc.len() as f64;
        let mut q = p.clone();
        q.group = Some(TrainingMode::ALL[g]);
        q.impaired = Some(classify_impairment(mean, &cfg.threshold));
        assigned.push(q);
    }

    let participants: Vec<ParticipantRecord> = pool.install(|| {
        assigned
            .par_iter()
            .zip(baselines.into_par_iter())
            .map(|(p, visits)| run_course(p, visits, params, cfg, &streams.derive(u64::from(p.id))))
            .collect::<Result<_>>()
    })?;
    Ok(TrialLedger {
        seed,
        config: cfg.clone(),
        outcome_params: params.clone(),
        participants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults::Defaults;
    use crate::patient::{generate_cohort, CohortKind};

    fn fast() -> TrialConfig {
        TrialConfig {
            simulate_training: false,
            ..TrialConfig::default()
        }
    }

    #[test]
    fn too_small_cohort_refused() {
        let cohort = generate_cohort(10, CohortKind::Stroke, 1);
        let params = Defaults::embedded().outcome_params();
        assert!(run_virtual_trial(&cohort, &params, &fast(), 1).is_err());
    }

    #[test]
    fn visit_structure_and_change_scores() {
        let cohort = generate_cohort(24, CohortKind::Stroke, 3);
        let params = Defaults::embedded().outcome_params();
        let ledger = run_virtual_trial(&cohort, &params, &fast(), 3).unwrap();
        assert_eq!(ledger.participants.len(), 24);
        for p in &ledger.participants {
            let tps: Vec<&str> = p.visits.iter().map(|v| v.timepoint.as_str()).collect();
            assert_eq!(
                tps,
                ["baseline1", "baseline2", "s1", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "post", "1mfu"]
            );
            let change = p.change("bbt", FOLLOW_UP).unwrap();
            assert!((change - p.delta_bbt).abs() < 1e-12);
            for s in 1..=9u32 {
                let v = p.visit(&format!("s{s}")).unwrap();
                let expected: Vec<ScheduledItem> = assessment_schedule(s).unwrap().into_iter().collect();
                assert_eq!(v.items, expected);
            }
        }
    }

    #[test]
    fn jobs_do_not_change_the_ledger() {
        let cohort = generate_cohort(20, CohortKind::Stroke, 5);
        let params = Defaults::embedded().outcome_params();
        let one = run_virtual_trial(&cohort, &params, &TrialConfig { jobs: 1, ..fast() }, 9).unwrap();
        let four = run_virtual_trial(&cohort, &params, &TrialConfig { jobs: 4, ..fast() }, 9).unwrap();
        assert_eq!(one.participants, four.participants);
    }
}
