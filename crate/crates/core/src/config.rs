//! Simulation configuration and its XML form.
//!
//! ```xml
//! <simulation_config>
//!   <seed>1</seed>
//!   <step_duration>1</step_duration>
//!   <epoch_length>86400</epoch_length>
//!   <duration_steps>2592000</duration_steps>
//!   <responder_speed>11.11</responder_speed>
//!   <on_scene_mean>1200</on_scene_mean>
//!   <patience_mean>49.36</patience_mean>
//!   <redial_probability>0.85</redial_probability>
//!   <service_min>4</service_min>
//!   <service_mean>204</service_mean>
//!   <abandonment>true</abandonment>
//!   <redial_abandoned>false</redial_abandoned>
//!   <utilization_sample_steps>1</utilization_sample_steps>
//! </simulation_config>
//! ```
//!
//! Every element is optional; missing ones take the defaults shown above.

use std::fmt::Write as _;

use thiserror::Error;

use crate::entities::models::DurationModel;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("invalid value {value:?} for <{key}>")]
    InvalidValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub seed: u64,
    /// Seconds per time step.
    pub step_duration: f64,
    /// Steps per epoch; caller-region queues are refilled at epoch boundaries.
    pub epoch_length: u64,
    pub duration_steps: u64,
    /// Responder travel speed, m/s.
    pub responder_speed: f64,
    pub on_scene_mean: f64,
    pub patience_mean: f64,
    pub redial_probability: f64,
    pub service_min: f64,
    pub service_mean: f64,
    /// When false, queued callers never hang up.
    pub abandonment: bool,
    /// When true, abandoned callers redial with `redial_probability` too.
    pub redial_abandoned: bool,
    /// Stride of the rows written to `utilization.csv`.
    pub utilization_sample_steps: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            seed: 1,
            step_duration: 1.0,
            epoch_length: 86_400,
            duration_steps: 30 * 86_400,
            responder_speed: 11.11,
            on_scene_mean: 1200.0,
            patience_mean: 49.36,
            redial_probability: 0.85,
            service_min: 4.0,
            service_mean: 204.0,
            abandonment: true,
            redial_abandoned: false,
            utilization_sample_steps: 1,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if !(self.step_duration > 0.0) || !self.step_duration.is_finite() {
            return fail(format!("step_duration must be positive, got {}", self.step_duration));
        }
        if self.epoch_length == 0 {
            return fail("epoch_length must be at least 1".into());
        }
        if self.utilization_sample_steps == 0 {
            return fail("utilization_sample_steps must be at least 1".into());
        }
        if !(self.responder_speed > 0.0) {
            return fail(format!("responder_speed must be positive, got {}", self.responder_speed));
        }
        if !(0.0..=1.0).contains(&self.redial_probability) {
            return fail(format!(
                "redial_probability must lie in [0, 1], got {}",
                self.redial_probability
            ));
        }
        self.duration_model()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn duration_model(&self) -> DurationModel {
        DurationModel {
            service_min: self.service_min,
            service_mean: self.service_mean,
            patience_mean: self.patience_mean,
            on_scene_mean: self.on_scene_mean,
        }
    }

    /// Horizon in seconds.
    pub fn duration_seconds(&self) -> f64 {
        self.duration_steps as f64 * self.step_duration
    }

    /// Whole steps for a duration in seconds, rounded to nearest.
    pub fn steps_for(&self, seconds: f64) -> u64 {
        (seconds / self.step_duration).round() as u64
    }

    pub fn from_xml(text: &str) -> Result<Self, ConfigError> {
        let doc = roxmltree::Document::parse(text).map_err(|e| ConfigError::Xml(e.to_string()))?;
        let root = doc.root_element();
        if root.tag_name().name() != "simulation_config" {
            return Err(ConfigError::Xml(format!(
                "expected <simulation_config> root, found <{}>",
                root.tag_name().name()
            )));
        }
        let mut cfg = SimulationConfig::default();
        for n in root.children().filter(|n| n.is_element()) {
            let key = n.tag_name().name();
            let value = n.text().unwrap_or("").trim();
            let bad = || ConfigError::InvalidValue {
                key: key.to_string(),
                value: value.to_string(),
            };
            macro_rules! set {
                ($field:ident) => {
                    cfg.$field = value.parse().map_err(|_| bad())?
                };
            }
            match key {
                "seed" => set!(seed),
                "step_duration" => set!(step_duration),
                "epoch_length" => set!(epoch_length),
                "duration_steps" => set!(duration_steps),
                "responder_speed" => set!(responder_speed),
                "on_scene_mean" => set!(on_scene_mean),
                "patience_mean" => set!(patience_mean),
                "redial_probability" => set!(redial_probability),
                "service_min" => set!(service_min),
                "service_mean" => set!(service_mean),
                "abandonment" => set!(abandonment),
                "redial_abandoned" => set!(redial_abandoned),
                "utilization_sample_steps" => set!(utilization_sample_steps),
                other => log::warn!("simulation config: ignoring <{other}>"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_xml(&self) -> String {
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<simulation_config>\n");
        let mut line = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "  <{k}>{v}</{k}>");
        };
        line("seed", &self.seed);
        line("step_duration", &self.step_duration);
        line("epoch_length", &self.epoch_length);
        line("duration_steps", &self.duration_steps);
        line("responder_speed", &self.responder_speed);
        line("on_scene_mean", &self.on_scene_mean);
        line("patience_mean", &self.patience_mean);
        line("redial_probability", &self.redial_probability);
        line("service_min", &self.service_min);
        line("service_mean", &self.service_mean);
        line("abandonment", &self.abandonment);
        line("redial_abandoned", &self.redial_abandoned);
        line("utilization_sample_steps", &self.utilization_sample_steps);
        out.push_str("</simulation_config>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xml_round_trip() {
        let mut cfg = SimulationConfig::default();
        cfg.seed = 99;
        cfg.abandonment = false;
        cfg.step_duration = 0.5;
        assert_eq!(SimulationConfig::from_xml(&cfg.to_xml()).unwrap(), cfg);
    }

    #[test]
    fn missing_elements_take_defaults() {
        let cfg = SimulationConfig::from_xml("<simulation_config><seed>5</seed></simulation_config>").unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.redial_probability, 0.85);
        assert_eq!(cfg.patience_mean, 49.36);
    }

    #[test]
    fn invalid_values() {
        let err = SimulationConfig::from_xml("<simulation_config><seed>x</seed></simulation_config>").unwrap_err();
        assert!(matches!(err, ConfigError::InvalidValue { .. }));
        let err = SimulationConfig::from_xml(
            "<simulation_config><service_min>10</service_min><service_mean>10</service_mean></simulation_config>",
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
        assert!(SimulationConfig::from_xml(
            "<simulation_config><step_duration>0</step_duration></simulation_config>"
        )
        .is_err());
    }
}
