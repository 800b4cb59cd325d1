//! JSON experiment configuration.
//!
//! Power-valued fields accept either watts (a bare number) or
//! `{"dbm": x}`; everything is stored and re-serialized in watts.

use std::path::{Path, PathBuf};

use rfharvest_core::{Alpha, HarvestParams, LinkParams, McConfig, RateConvention};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::CliError;

/// One source model of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    /// Ginibre α-DPP with `α = -1/m`.
    Ginibre {
        m: u32,
    },
    Ppp,
}

impl ModelSpec {
    pub fn label(&self) -> String {
        match self {
            ModelSpec::Ginibre { m } => Alpha::from_m(*m).map(|a| a.label()).unwrap_or_default(),
            ModelSpec::Ppp => "PPP".to_string(),
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

fn power<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Power {
        Watts(f64),
        Dbm { dbm: f64 },
    }
    Ok(match Power::deserialize(deserializer)? {
        Power::Watts(w) => w,
        Power::Dbm { dbm } => dbm_to_watts(dbm),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarvestConfig {
    pub beta: f64,
    #[serde(deserialize_with = "power")]
    pub p_source: f64,
    pub g_source: f64,
    pub g_harvester: f64,
    pub wavelength: f64,
    pub epsilon: f64,
    #[serde(deserialize_with = "power")]
    pub p_circuit: f64,
    pub sensor_position: [f64; 2],
}

impl Default for HarvestConfig {
    fn default() -> Self {
        HarvestParams::default().into()
    }
}

impl From<HarvestParams> for HarvestConfig {
    fn from(p: HarvestParams) -> Self {
        HarvestConfig {
            beta: p.beta,
            p_source: p.p_source,
            g_source: p.g_source,
            g_harvester: p.g_harvester,
            wavelength: p.wavelength,
            epsilon: p.epsilon,
            p_circuit: p.p_circuit,
            sensor_position: p.sensor_position,
        }
    }
}

impl From<HarvestConfig> for HarvestParams {
    fn from(c: HarvestConfig) -> Self {
        HarvestParams {
            beta: c.beta,
            p_source: c.p_source,
            g_source: c.g_source,
            g_harvester: c.g_harvester,
            wavelength: c.wavelength,
            epsilon: c.epsilon,
            p_circuit: c.p_circuit,
            sensor_position: c.sensor_position,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub bandwidth: f64,
    pub channel_gain: f64,
    #[serde(deserialize_with = "power")]
    pub noise_power: f64,
    pub rate_threshold: f64,
    pub rate_convention: RateConvention,
}

impl Default for LinkConfig {
    fn default() -> Self {
        let l = LinkParams::default();
        LinkConfig {
            bandwidth: l.bandwidth,
            channel_gain: l.channel_gain,
            noise_power: l.noise_power,
            rate_threshold: l.rate_threshold,
            rate_convention: l.rate_convention,
        }
    }
}

impl From<LinkConfig> for LinkParams {
    fn from(c: LinkConfig) -> Self {
        LinkParams {
            bandwidth: c.bandwidth,
            channel_gain: c.channel_gain,
            noise_power: c.noise_power,
            rate_threshold: c.rate_threshold,
            rate_convention: c.rate_convention,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// Sweep or pattern CSV; `--out` takes precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// JSON report of `validate`; defaults to the CSV path with a `.json`
    /// extension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub models: Vec<ModelSpec>,
    pub rho_sweep: Vec<f64>,
    pub window_radius: f64,
    pub harvest: HarvestConfig,
    pub link: LinkConfig,
    pub monte_carlo: McConfig,
    /// Rayon pool size for `validate`; `None` uses all cores.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub outputs: OutputPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            models: vec![
                ModelSpec::Ginibre { m: 1 },
                ModelSpec::Ginibre { m: 2 },
                ModelSpec::Ginibre { m: 4 },
                ModelSpec::Ppp,
            ],
            rho_sweep: vec![0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1],
            window_radius: 10.0,
            harvest: HarvestConfig::default(),
            link: LinkConfig::default(),
            monte_carlo: McConfig::default(),
            workers: None,
            outputs: OutputPaths::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path`, or returns the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(ExperimentConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::from_json(&text)
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.rho_sweep.is_empty() {
            return Err(CliError::Config("rho_sweep must not be empty".into()));
        }
        if self.models.is_empty() {
            return Err(CliError::Config("models must not be empty".into()));
        }
        if let Some(rho) = self
            .rho_sweep
            .iter()
            .find(|r| !(r.is_finite() && **r >= 0.0))
        {
            return Err(CliError::Config(format!(
                "density {rho} in rho_sweep is invalid"
            )));
        }
        for model in &self.models {
            if let ModelSpec::Ginibre { m } = model {
                Alpha::from_m(*m)?;
            }
        }
        if !(self.window_radius.is_finite() && self.window_radius > 0.0) {
            return Err(CliError::Config("window_radius must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        self.harvest_params().validate()?;
        self.link_params().validate()?;
        self.monte_carlo.validate()?;
        Ok(())
    }

    pub fn harvest_params(&self) -> HarvestParams {
        self.harvest.into()
    }

    pub fn link_params(&self) -> LinkParams {
        self.link.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-90.0) - 1e-12).abs() < 1e-27);
        assert!((dbm_to_watts(-18.0) - 1.584_893e-5).abs() < 1e-11);
    }

    #[test]
    fn empty_document_gives_defaults() {
        let c = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.rho_sweep.len(), 7);
        assert_eq!(c.models.len(), 4);
    }

    #[test]
    fn power_fields_accept_dbm() {
        let c = ExperimentConfig::from_json(
            r#"{"harvest": {"p_circuit": {"dbm": -18}}, "link": {"noise_power": {"dbm": -90}}}"#,
        )
        .unwrap();
        assert!((c.harvest.p_circuit - dbm_to_watts(-18.0)).abs() < 1e-20);
        assert!((c.link.noise_power - 1e-12).abs() < 1e-27);
        let echoed: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(echoed["harvest"]["p_circuit"].as_f64(), Some(c.harvest.p_circuit));
    }

    #[test]
    fn rejects_bad_documents() {
        for doc in [
            r#"{"rho_sweep": []}"#,
            r#"{"rho_sweep": [-1]}"#,
            r#"{"models": [{"kind": "ginibre", "m": 0}]}"#,
            r#"{"window_radius": 0}"#,
            r#"{"harvest": {"epsilon": 0}}"#,
            r#"{"monte_carlo": {"replications": 0, "master_seed": 1}}"#,
            r#"{"unknown": 1}"#,
            r#"not json"#,
        ] {
            assert!(ExperimentConfig::from_json(doc).is_err(), "{doc}");
        }
    }

    #[test]
    fn labels() {
        assert_eq!(ModelSpec::Ginibre { m: 1 }.label(), "-1");
        assert_eq!(ModelSpec::Ginibre { m: 4 }.label(), "-1/4");
        assert_eq!(ModelSpec::Ppp.label(), "PPP");
    }
}
