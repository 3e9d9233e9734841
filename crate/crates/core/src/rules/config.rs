use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RuleError;

/// Every threshold and minimum run length used by the frame rules.
///
/// Thresholds compared with "exceeds" use strict `>`; the spectacle crowd
/// threshold is inclusive. The debate person gate is strict `<`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleConfig {
    pub riot_violence_threshold: f64,
    pub riot_min_run: u32,
    pub confront_police_threshold: f64,
    pub confront_min_run: u32,
    pub confront_excludes_debate: bool,
    pub confront_requires_protest: bool,
    pub spectacle_crowd_threshold: u32,
    pub spectacle_min_run: u32,
    pub debate_max_people: u32,
    pub debate_area_low: f64,
    pub debate_run_low: u32,
    pub debate_area_high: f64,
    pub debate_run_high: u32,
    /// Black faces needed in one image for group presence.
    pub black_group_min: u32,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self {
            riot_violence_threshold: 0.5,
            riot_min_run: 3,
            confront_police_threshold: 0.85,
            confront_min_run: 4,
            confront_excludes_debate: true,
            confront_requires_protest: false,
            spectacle_crowd_threshold: 150,
            spectacle_min_run: 3,
            debate_max_people: 5,
            debate_area_low: 0.03,
            debate_run_low: 6,
            debate_area_high: 0.20,
            debate_run_high: 3,
            black_group_min: 3,
        }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<(), RuleError> {
        let unit = [
            ("riot_violence_threshold", self.riot_violence_threshold),
            ("confront_police_threshold", self.confront_police_threshold),
            ("debate_area_low", self.debate_area_low),
            ("debate_area_high", self.debate_area_high),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(RuleError::InvalidConfig(format!(
                    "{name} = {v} is outside [0, 1]"
                )));
            }
        }
        let positive = [
            ("riot_min_run", self.riot_min_run),
            ("confront_min_run", self.confront_min_run),
            ("spectacle_crowd_threshold", self.spectacle_crowd_threshold),
            ("spectacle_min_run", self.spectacle_min_run),
            ("debate_max_people", self.debate_max_people),
            ("debate_run_low", self.debate_run_low),
            ("debate_run_high", self.debate_run_high),
            ("black_group_min", self.black_group_min),
        ];
        for (name, v) in positive {
            if v < 1 {
                return Err(RuleError::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    /// Parses a flat `key = value` file. Missing keys take their defaults;
    /// unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self, RuleError> {
        let cfg: RuleConfig =
            toml::from_str(text).map_err(|e| RuleError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RuleError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            RuleError::InvalidConfig(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
            .map_err(|e| RuleError::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }
}
