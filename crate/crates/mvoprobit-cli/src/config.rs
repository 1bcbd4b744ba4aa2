//! Strict JSON run configuration. Unknown keys are rejected everywhere so a
//! typo in a covariate or option name cannot silently change a scientific
//! run; the parsed config re-serializes with every default materialized.

use crate::error::{CliError, Result};
use mvoprobit::estimate::FitOptions;
use mvoprobit::features::{BandMidpoints, MergeMap, StageLabel};
use mvoprobit::model::{EquationSpec, ModelSpec, ParameterSet};
use mvoprobit::predict::ContourRequest;
use mvoprobit::simulate::{CovariateGenerator, CovariateKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// Input CSV path (fit/predict).
    #[serde(default)]
    pub input: Option<String>,
    /// Output path prefix for emitted artifacts.
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub contour: Option<ContourConfig>,
    #[serde(default)]
    pub merge_map: Option<MergeMapConfig>,
    /// Frequency-band midpoint overrides for the `sei` pipeline.
    #[serde(default)]
    pub band_midpoints: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub equations: Vec<EquationConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationConfig {
    pub name: String,
    pub n_stages: usize,
    pub covariates: Vec<String>,
    pub outcome: String,
}

impl ModelConfig {
    pub fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            equations: self
                .equations
                .iter()
                .map(|e| EquationSpec {
                    name: e.name.clone(),
                    n_stages: e.n_stages,
                    covariates: e.covariates.clone(),
                })
                .collect(),
            outcome_columns: self.equations.iter().map(|e| e.outcome.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: usize,
    pub parameters: ParameterSet,
    pub covariates: Vec<GenColumn>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenColumn {
    pub name: String,
    pub dist: CovariateKind,
}

impl SimulateConfig {
    pub fn generator(&self) -> Result<CovariateGenerator> {
        Ok(CovariateGenerator::new(
            self.covariates
                .iter()
                .map(|c| (c.name.clone(), c.dist.clone()))
                .collect(),
        )?)
    }
}

fn default_resolution() -> usize {
    101
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    pub var_a: String,
    pub var_b: String,
    pub range_a: (f64, f64),
    pub range_b: (f64, f64),
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub baseline: BTreeMap<String, f64>,
    #[serde(default)]
    pub joint_argmax: bool,
    /// Also emit one SVG heat map per equation.
    #[serde(default)]
    pub svg: bool,
    /// Inline parameters; a `--params` fit result takes precedence.
    #[serde(default)]
    pub parameters: Option<ParameterSet>,
}

impl ContourConfig {
    pub fn request(&self) -> ContourRequest {
        ContourRequest {
            var_a: self.var_a.clone(),
            var_b: self.var_b.clone(),
            range_a: self.range_a,
            range_b: self.range_b,
            resolution: self.resolution,
            baseline: self.baseline.clone(),
            joint_argmax: self.joint_argmax,
        }
    }
}

/// Merge map selection: exactly one of a named preset or an explicit map.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergeMapConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub map: Option<BTreeMap<String, usize>>,
}

impl MergeMapConfig {
    pub fn resolve(&self) -> Result<MergeMap> {
        match (&self.preset, &self.map) {
            (Some(name), None) => Ok(MergeMap::preset(name)?),
            (None, Some(map)) => {
                let mut entries = Vec::new();
                for (label, stage) in map {
                    entries.push((StageLabel::parse(label)?, *stage));
                }
                Ok(MergeMap::new(entries)?)
            }
            _ => Err(CliError::Config {
                path: "merge_map".into(),
                message: "provide exactly one of `preset` or `map`".into(),
            }),
        }
    }
}

/// Parses and validates a strict JSON config; schema violations name the
/// offending path.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig =
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    validate_config(&config)?;
    Ok(config)
}

fn validate_config(config: &RunConfig) -> Result<()> {
    let spec = config.model.to_spec();
    spec.validate()?;
    config.fit.validate()?;
    if let Some(sim) = &config.simulate {
        sim.parameters.validate(&spec)?;
        let gen = sim.generator()?;
        gen.validate()?;
        if sim.n == 0 {
            return Err(CliError::Config {
                path: "simulate.n".into(),
                message: "at least one observation is required".into(),
            });
        }
    }
    if let Some(contour) = &config.contour {
        contour.request().validate(&spec)?;
        if let Some(p) = &contour.parameters {
            p.validate(&spec)?;
        }
    }
    if let Some(mm) = &config.merge_map {
        mm.resolve()?;
    }
    if let Some(bands) = &config.band_midpoints {
        let bm = BandMidpoints {
            bands: bands.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        };
        bm.validate()?;
    }
    Ok(())
}

/// The effective configuration with all defaults materialized, as JSON.
pub fn effective_config(config: &RunConfig) -> String {
    let mut s = serde_json::to_string_pretty(config).expect("config serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {"equations": [
            {"name": "walk", "n_stages": 3, "covariates": ["x"], "outcome": "y"}
        ]},
        "input": "data.csv"
    }"#;

    #[test]
    fn minimal_config_materializes_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.fit.max_iterations, 500);
        assert_eq!(cfg.fit.grad_tolerance, 1e-5);
        assert_eq!(cfg.fit.rel_ll_tolerance, 1e-9);
        assert!(!cfg.fit.fix_correlations);
        assert_eq!(cfg.seed, 0);
        let echo = effective_config(&cfg);
        assert!(echo.contains("\"max_iterations\": 500"));
        assert!(echo.contains("\"grad_tolerance\": 0.00001") || echo.contains("\"grad_tolerance\": 1e-5"), "{echo}");
        // Echo re-parses to the same config.
        let back = parse_config(&echo).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), serde_json::to_string(&cfg).unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let bad = MINIMAL.replace("\"input\"", "\"inptu\"");
        match parse_config(&bad) {
            Err(CliError::Config { message, .. }) => {
                assert!(message.contains("inptu"), "{message}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_covariates_are_rejected() {
        let bad = MINIMAL.replace("[\"x\"]", "[\"x\", \"x\"]");
        assert!(parse_config(&bad).is_err());
    }

    #[test]
    fn merge_map_violating_stage_order_is_rejected() {
        let cfg = r#"{
            "model": {"equations": [
                {"name": "walk", "n_stages": 3, "covariates": [], "outcome": "y"}
            ]},
            "merge_map": {"map": {"PC1": 1, "C": 0, "P": 2}}
        }"#;
        let err = parse_config(cfg).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("canonical stage order"), "{msg}");
        assert!(msg.contains("PC1") && msg.contains("C"), "{msg}");
    }

    #[test]
    fn simulate_block_round_trips() {
        let cfg = r#"{
            "model": {"equations": [
                {"name": "walk", "n_stages": 3, "covariates": ["x"], "outcome": "y"}
            ]},
            "output": "out/sim",
            "seed": 7,
            "simulate": {
                "n": 100,
                "parameters": {
                    "beta": [[0.5]],
                    "thresholds": [[-0.5, 0.5]],
                    "correlations": []
                },
                "covariates": [{"name": "x", "dist": {"type": "std_normal"}}]
            }
        }"#;
        let parsed = parse_config(cfg).unwrap();
        let sim = parsed.simulate.as_ref().unwrap();
        assert_eq!(sim.n, 100);
        sim.generator().unwrap();
    }
}
