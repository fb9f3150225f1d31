//! Responder rates and the report bundle written from a trial ledger.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::games::TrainingMode;
use crate::io::write_atomic;

use super::nonparametric::{kruskal_wallis, wilcoxon_rank_sum, wilcoxon_signed_rank};
use super::parametric::timepoint_effect;
use super::trial::{ParticipantRecord, TrialLedger, FOLLOW_UP, POST};
use super::{Tail, TestResult};

/// Minimal clinically important BBT change, blocks.
pub const MCID_BBT: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub group: TrainingMode,
    /// `None` pools both impairment subgroups.
    pub impaired: Option<bool>,
    pub n: usize,
    pub responders: usize,
    /// Percent; `None` for an empty cell.
    pub rate_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponderReport {
    pub mcid: f64,
    pub by_group: Vec<RateRow>,
    pub by_cell: Vec<RateRow>,
}

impl ResponderReport {
    pub fn rate(&self, group: TrainingMode, impaired: Option<bool>) -> Option<f64> {
        let rows = if impaired.is_some() { &self.by_cell } else { &self.by_group };
        rows.iter()
            .find(|r| r.group == group && r.impaired == impaired)
            .and_then(|r| r.rate_pct)
    }
}

fn rate_row(ps: &[&ParticipantRecord], group: TrainingMode, impaired: Option<bool>, mcid: f64) -> RateRow {
    let cell: Vec<_> = ps
        .iter()
        .filter(|p| p.group == group && impaired.is_none_or(|i| p.impaired == i))
        .collect();
    let responders = cell.iter().filter(|p| p.delta_bbt >= mcid).count();
    RateRow {
        group,
        impaired,
        n: cell.len(),
        responders,
        rate_pct: (!cell.is_empty()).then(|| 100.0 * responders as f64 / cell.len() as f64),
    }
}

/// Share of participants whose follow-up BBT change reaches the MCID.
pub fn responder_report(ledger: &TrialLedger) -> ResponderReport {
    let ps: Vec<&ParticipantRecord> = ledger.participants.iter().collect();
    let by_group = TrainingMode::ALL.iter().map(|&g| rate_row(&ps, g, None, MCID_BBT)).collect();
    let by_cell = [true, false]
        .iter()
        .flat_map(|&imp| TrainingMode::ALL.iter().map(move |&g| (g, imp)))
        .map(|(g, imp)| rate_row(&ps, g, Some(imp), MCID_BBT))
        .collect();
    ResponderReport {
        mcid: MCID_BBT,
        by_group,
        by_cell,
    }
}

/// A change-score outcome and the direction that counts as improvement.
struct Outcome {
    name: &'static str,
    improve: Tail,
    value: fn(&ParticipantRecord) -> Option<f64>,
}

const OUTCOMES: [Outcome; 6] = [
    Outcome {
        name: "delta_bbt_1mfu",
        improve: Tail::Greater,
        value: |p| Some(p.delta_bbt),
    },
    Outcome {
        name: "delta_bbt_post",
        improve: Tail::Greater,
        value: |p| Some(p.delta_bbt_post),
    },
    Outcome {
        name: "delta_crisscross_post",
        improve: Tail::Less,
        value: |p| p.change("crisscross", POST),
    },
    Outcome {
        name: "delta_move_and_match_post",
        improve: Tail::Less,
        value: |p| p.change("move_and_match", POST),
    },
    Outcome {
        name: "delta_thumbsense_post",
        improve: Tail::Less,
        value: |p| p.change("thumbsense", POST),
    },
    Outcome {
        name: "delta_hand_capacity_post",
        improve: Tail::Greater,
        value: |p| p.change("hand_capacity", POST),
    },
];

/// One line of the change-score table. Undefined tests keep empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRow {
    pub outcome: String,
    pub subset: String,
    pub group: String,
    pub test: String,
    pub result: Option<TestResult>,
    pub note: String,
}

fn test_row(outcome: &str, subset: &str, group: &str, test: &str, r: Result<TestResult>) -> TestRow {
    let (result, note) = match r {
        Ok(t) => (Some(t), String::new()),
        Err(e) => (None, e.to_string()),
    };
    TestRow {
        outcome: outcome.into(),
        subset: subset.into(),
        group: group.into(),
        test: test.into(),
        result,
        note,
    }
}

fn values(ps: &[&ParticipantRecord], f: fn(&ParticipantRecord) -> Option<f64>, g: TrainingMode) -> Vec<f64> {
    ps.iter().filter(|p| p.group == g).filter_map(|p| f(p)).collect()
}

/// Within-group signed-rank tests (one-tailed toward improvement), the
/// across-group Kruskal-Wallis test and two-tailed pairwise rank-sum tests,
/// for every outcome in every impairment subset; plus the timepoint effect
/// on BBT.
pub fn change_score_tests(ledger: &TrialLedger) -> Vec<TestRow> {
    let subsets: [(&str, Option<bool>); 3] = [("all", None), ("impaired", Some(true)), ("unimpaired", Some(false))];
    let mut rows = Vec::new();
    for (subset, imp) in subsets {
        let ps: Vec<&ParticipantRecord> = ledger
            .participants
            .iter()
            .filter(|p| imp.is_none_or(|i| p.impaired == i))
            .collect();
        for o in &OUTCOMES {
            let by_group: Vec<Vec<f64>> = TrainingMode::ALL.iter().map(|&g| values(&ps, o.value, g)).collect();
            for (g, v) in TrainingMode::ALL.iter().zip(&by_group) {
                rows.push(test_row(o.name, subset, g.as_str(), "within", wilcoxon_signed_rank(v, o.improve)));
            }
            let nonempty: Vec<&[f64]> = by_group.iter().filter(|v| !v.is_empty()).map(Vec::as_slice).collect();
            rows.push(test_row(o.name, subset, "all", "between", kruskal_wallis(&nonempty)));
            for i in 0..TrainingMode::ALL.len() {
                for j in i + 1..TrainingMode::ALL.len() {
                    let label = format!("{}_vs_{}", TrainingMode::ALL[i].as_str(), TrainingMode::ALL[j].as_str());
                    let r = if by_group[i].is_empty() || by_group[j].is_empty() {
                        Err(crate::Error::UndefinedTest("empty group".into()))
                    } else {
                        wilcoxon_rank_sum(&by_group[i], &by_group[j], Tail::TwoSided)
                    };
                    rows.push(test_row(o.name, subset, &label, "pairwise", r));
                }
            }
        }
        let series: Vec<(Vec<f64>, usize)> = ps
            .iter()
            .filter_map(|p| {
                let b = p.baseline("bbt")?;
                let post = p.visit(POST)?.score("bbt")?;
                let fu = p.visit(FOLLOW_UP)?.score("bbt")?;
                let g = TrainingMode::ALL.iter().position(|&m| m == p.group)?;
                Some((vec![b, post, fu], g))
            })
            .collect();
        let (scores, groups): (Vec<Vec<f64>>, Vec<usize>) = series.into_iter().unzip();
        let r = if scores.len() < 2 {
            Err(crate::Error::UndefinedTest("fewer than two participants".into()))
        } else {
            timepoint_effect(&scores, &groups)
        };
        rows.push(test_row("bbt", subset, "all", "timepoint", r));
    }
    rows
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, sd)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| crate::Error::Analysis(e.to_string()))
}

/// Baseline characteristics per group: `variable,group,n,mean,sd,median`.
pub fn table1_csv(ledger: &TrialLedger) -> Result<Vec<u8>> {
    let vars: [(&str, fn(&ParticipantRecord) -> Option<f64>); 7] = [
        ("age", |p| Some(p.profile.age)),
        ("bbt", |p| p.baseline("bbt")),
        ("crisscross_deg", |p| p.baseline("crisscross")),
        ("move_and_match_deg", |p| p.baseline("move_and_match")),
        ("thumbsense_pct_missed", |p| p.baseline("thumbsense")),
        ("hand_capacity", |p| p.baseline("hand_capacity")),
        ("impaired", |p| Some(f64::from(u8::from(p.impaired)))),
    ];
    let mut rows = Vec::new();
    for (name, f) in vars {
        for g in TrainingMode::ALL {
            let v: Vec<f64> = ledger
                .participants
                .iter()
                .filter(|p| p.group == g)
                .filter_map(f)
                .collect();
            let (m, sd, med) = if v.is_empty() {
                (None, None, None)
            } else {
                let (m, sd) = mean_sd(&v);
                (Some(m), Some(sd), Some(median(&v)))
            };
            rows.push(vec![name.into(), g.as_str().into(), v.len().to_string(), opt(m), opt(sd), opt(med)]);
        }
    }
    csv_bytes(&["variable", "group", "n", "mean", "sd", "median"], rows)
}

pub fn table2_csv(tests: &[TestRow]) -> Result<Vec<u8>> {
    let rows = tests
        .iter()
        .map(|t| {
            let r = t.result.as_ref();
            vec![
                t.outcome.clone(),
                t.subset.clone(),
                t.group.clone(),
                r.map_or_else(|| t.test.clone(), |r| format!("{}:{}", t.test, r.method.as_str())),
                opt(r.map(|r| r.statistic)),
                opt(r.and_then(|r| r.df)),
                opt(r.and_then(|r| r.z)),
                opt(r.map(|r| r.p_value)),
                r.map_or_else(String::new, |r| r.n.to_string()),
                r.map_or_else(String::new, |r| r.exact.to_string()),
            ]
        })
        .collect();
    csv_bytes(
        &["outcome", "subset", "group", "test", "statistic", "df", "z", "p", "n", "exact"],
        rows,
    )
}

pub fn fig4_csv(report: &ResponderReport) -> Result<Vec<u8>> {
    let rows = report
        .by_group
        .iter()
        .chain(&report.by_cell)
        .map(|r| {
            vec![
                r.group.as_str().into(),
                r.impaired.map_or_else(|| "all".into(), |i| if i { "impaired".into() } else { "unimpaired".into() }),
                r.n.to_string(),
                r.responders.to_string(),
                opt(r.rate_pct),
            ]
        })
        .collect();
    csv_bytes(&["group", "subset", "n", "responders", "rate_pct"], rows)
}

pub fn summary_md(ledger: &TrialLedger, report: &ResponderReport, tests: &[TestRow]) -> String {
    let mut s = String::new();
    let n = ledger.participants.len();
    let impaired = ledger.participants.iter().filter(|p| p.impaired).count();
    let _ = writeln!(s, "# Virtual trial summary\n");
    let _ = writeln!(s, "- seed: {}", ledger.seed);
    let _ = writeln!(s, "- participants: {n} ({impaired} proprioceptively impaired)");
    let _ = writeln!(s, "- impairment threshold: {:.2} deg", ledger.config.threshold.threshold());
    let _ = writeln!(s, "- responder criterion: BBT change >= {} blocks at follow-up\n", report.mcid);
    let _ = writeln!(s, "## Responder rates\n");
    let _ = writeln!(s, "| group | all | impaired | unimpaired |");
    let _ = writeln!(s, "|---|---|---|---|");
    let cell = |g, i| {
        report
            .by_group
            .iter()
            .chain(&report.by_cell)
            .find(|r| r.group == g && r.impaired == i)
            .map_or_else(String::new, |r| match r.rate_pct {
                Some(p) => format!("{p:.0}% ({}/{})", r.responders, r.n),
                None => "n/a".into(),
            })
    };
    for g in TrainingMode::ALL {
        let _ = writeln!(s, "| {} | {} | {} | {} |", g.as_str(), cell(g, None), cell(g, Some(true)), cell(g, Some(false)));
    }
    let _ = writeln!(s, "\n## Follow-up BBT change across groups\n");
    for t in tests
        .iter()
        .filter(|t| t.outcome == "delta_bbt_1mfu" && t.test == "between")
    {
        match &t.result {
            Some(r) => {
                let _ = writeln!(s, "- {}: H = {:.3}, p = {:.4} (n = {})", t.subset, r.statistic, r.p_value, r.n);
            }
            None => {
                let _ = writeln!(s, "- {}: not computed ({})", t.subset, t.note);
            }
        }
    }
    let moves: Vec<f64> = ledger
        .participants
        .iter()
        .map(|p| p.total_movements() as f64)
        .filter(|&m| m > 0.0)
        .collect();
    if !moves.is_empty() {
        let (m, sd) = mean_sd(&moves);
        let _ = writeln!(s, "\n## Training dose\n\n- movements over nine sessions: {m:.0} +/- {sd:.0}");
    }
    s
}

/// Write table1.csv, table2.csv, fig4_rates.csv and summary.md into `dir`.
pub fn write_report(ledger: &TrialLedger, dir: &Path) -> Result<ResponderReport> {
    let report = responder_report(ledger);
    let tests = change_score_tests(ledger);
    write_atomic(&dir.join("table1.csv"), &table1_csv(ledger)?)?;
    write_atomic(&dir.join("table2.csv"), &table2_csv(&tests)?)?;
    write_atomic(&dir.join("fig4_rates.csv"), &fig4_csv(&report)?)?;
    write_atomic(&dir.join("summary.md"), summary_md(ledger, &report, &tests).as_bytes())?;
    Ok(report)
}

/// The report files plus `ledger.json`.
pub fn write_bundle(ledger: &TrialLedger, dir: &Path) -> Result<ResponderReport> {
    write_atomic(&dir.join("ledger.json"), ledger.to_json()?.as_bytes())?;
    write_report(ledger, dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults::Defaults;
    use crate::patient::{generate_cohort, CohortKind};
    use crate::stats::trial::{run_virtual_trial, TrialConfig};

    fn ledger(seed: u64) -> TrialLedger {
        let cohort = generate_cohort(45, CohortKind::Stroke, seed);
        let cfg = TrialConfig {
            simulate_training: false,
            ..TrialConfig::default()
        };
        run_virtual_trial(&cohort, &Defaults::embedded().outcome_params(), &cfg, seed).unwrap()
    }

    #[test]
    fn everyone_improving_is_all_responders() {
        let mut l = ledger(1);
        for p in &mut l.participants {
            p.delta_bbt = 10.0;
        }
        let r = responder_report(&l);
        for row in r.by_group.iter().chain(&r.by_cell) {
            if row.n > 0 {
                assert_eq!(row.rate_pct, Some(100.0));
            }
        }
    }

    #[test]
    fn table2_has_one_row_per_test() {
        let l = ledger(2);
        let tests = change_score_tests(&l);
        // per subset: 6 outcomes x (3 within + 1 between + 3 pairwise) + 1 timepoint
        assert_eq!(tests.len(), 3 * (6 * 7 + 1));
        let bytes = table2_csv(&tests).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("outcome,subset,group,test,statistic,df,z,p,n,exact\n"));
        for t in tests.iter().filter_map(|t| t.result.as_ref()) {
            assert!((0.0..=1.0).contains(&t.p_value));
        }
    }

    #[test]
    fn bundle_written() {
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&ledger(3), dir.path()).unwrap();
        for f in ["ledger.json", "table1.csv", "table2.csv", "fig4_rates.csv", "summary.md"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let text = std::fs::read_to_string(dir.path().join("ledger.json")).unwrap();
        let back = TrialLedger::from_json(&text, "ledger.json").unwrap();
        assert_eq!(back.participants.len(), 45);
    }
}
