//! Top-level configuration document.

use serde::{Deserialize, Serialize};

use crate::bench::BenchConfig;
use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::simulate::Scenario;

/// Simulation scenario, diagnosis pipeline and benchmark settings. Missing
/// sections and fields take their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub scenario: Scenario,
    pub pipeline: PipelineConfig,
    pub bench: BenchConfig,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.pipeline.validate()?;
        if self.scenario.model.n_fss() != self.pipeline.fss_specs.len() {
            return Err(Error::InvalidConfig(format!(
                "scenario has {} switching systems but the pipeline has {}",
                self.scenario.model.n_fss(),
                self.pipeline.fss_specs.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_document_fills_defaults() {
        let c: Config = serde_json::from_str(r#"{"scenario": {"n_steps": 1234}, "pipeline": {"detector": {"w": 20}}}"#).unwrap();
        assert_eq!(c.scenario.n_steps, 1234);
        assert_eq!(c.scenario.counts.nominal, 100);
        assert_eq!(c.pipeline.detector.w, 20);
        assert_eq!(c.pipeline.detector.alpha, 1e-9);
        c.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let c = Config::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<Config>(&s).unwrap(), c);
    }

    #[test]
    fn mismatched_fss_count_is_rejected() {
        let mut c = Config::default();
        c.pipeline.fss_specs.pop();
        assert!(c.validate().unwrap_err().is_validation());
    }
}
