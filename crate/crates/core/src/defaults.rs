//! Versioned defaults document holding every calibrated constant.

use serde::{Deserialize, Serialize};

use crate::assess::ImpairmentThreshold;
use crate::error::Result;
use crate::patient::{OutcomeCell, OutcomeModelParams};

const EMBEDDED: &str = include_str!("../defaults/defaults.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentDefaults {
    pub control_mean_deg: f64,
    pub control_sd_deg: f64,
    pub n_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerDefaults {
    pub initial_gain: f64,
    pub step: f64,
    pub target_success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Defaults {
    pub version: String,
    pub impairment: ImpairmentDefaults,
    pub controller: ControllerDefaults,
    pub mcid_blocks: i32,
    pub outcome_cells: Vec<OutcomeCell>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Defaults {
    pub fn embedded() -> Self {
        serde_json::from_str(EMBEDDED).expect("embedded defaults document is valid")
    }

    pub fn embedded_text() -> &'static str {
        EMBEDDED
    }

    pub fn outcome_params(&self) -> OutcomeModelParams {
        OutcomeModelParams {
            cells: self.outcome_cells.clone(),
        }
    }

    pub fn impairment_threshold(&self) -> ImpairmentThreshold {
        ImpairmentThreshold::new(self.impairment.control_mean_deg, self.impairment.control_sd_deg)
    }
}

/// Outcome parameters from a JSON document: either a bare `{"cells": [...]}`
/// object or a full defaults document.
pub fn parse_outcome_params(text: &str, source_name: &str) -> Result<OutcomeModelParams> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Doc {
        Params(OutcomeModelParams),
        Full(Box<Defaults>),
    }
    let doc: Doc = serde_json::from_str(text).map_err(|e| crate::Error::Parse {
        source_name: source_name.to_string(),
        line: e.line(),
        field: format!("column {}", e.column()),
        message: e.to_string(),
    })?;
    let params = match doc {
        Doc::Params(p) => p,
        Doc::Full(d) => d.outcome_params(),
    };
    params.validate()?;
    Ok(params)
}
