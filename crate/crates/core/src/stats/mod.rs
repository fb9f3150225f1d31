//! Statistical tests, randomization and the virtual trial.

use serde::{Deserialize, Serialize};

pub mod minimization;
pub mod nonparametric;
pub mod parametric;
pub mod report;
pub mod trial;

pub use minimization::{assignment_probabilities, minimization_randomize, strata, Tallies, DEFAULT_BIASED_COIN};
pub use nonparametric::{average_ranks, friedman, kruskal_wallis, wilcoxon_rank_sum, wilcoxon_signed_rank};
pub use parametric::{anderson_darling, rm_anova, simple_linreg, timepoint_effect, LinearFit, RmAnova};
pub use report::{change_score_tests, responder_report, write_bundle, write_report, ResponderReport, MCID_BBT};
pub use trial::{run_virtual_trial, ParticipantRecord, TrialConfig, TrialLedger, Visit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SignedRank,
    RankSum,
    KruskalWallis,
    Friedman,
    RmAnova,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::SignedRank => "wilcoxon_signed_rank",
            Method::RankSum => "wilcoxon_rank_sum",
            Method::KruskalWallis => "kruskal_wallis",
            Method::Friedman => "friedman",
            Method::RmAnova => "rm_anova",
        }
    }
}

/// Alternative hypothesis. `Greater` means the tested quantity tends to be
/// positive (signed rank) or the first sample tends to be larger (rank sum).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    TwoSided,
    Greater,
    Less,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: Method,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub df: Option<f64>,
    /// Normal-approximation z (tie corrected, no continuity correction).
    pub z: Option<f64>,
    pub exact: bool,
}
