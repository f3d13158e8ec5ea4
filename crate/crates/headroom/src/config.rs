//! Configuration ingestion: a strict JSON schema over the whole experiment
//! suite.
//!
//! Every omitted field takes its documented default, so `{}` is the canonical
//! full-default configuration. Unknown keys are errors, not warnings — a
//! silently ignored typo in an experiment parameter is the most dangerous
//! failure mode a reproduction harness can have. The master seed lives only
//! at the top level and cascades into each experiment during validation:
//! one seed, one source of truth.

use std::error::Error;
use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;
use serde_json::json;

use crate::control::{default_comparison_drift, ControllerConfig, CONTROL_EXPERIMENT_TAG};
use crate::drift::{default_sigma_grid, DriftConfig, SWEEP_EXPERIMENT_TAG};
use crate::model::{DegradationParams, LogisticModel};
use crate::study::StudyConfig;

/// Which artifact classes `run_suite` writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn writes_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn writes_json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Both => "both",
        }
    }
}

/// The noise sweep: one drift process swept over a grid of noise levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub drift: DriftConfig,
    pub sigmas: Vec<f64>,
}

/// The control comparison: one drift process, one controller, paired arms.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonConfig {
    pub drift: DriftConfig,
    pub controller: ControllerConfig,
    pub n_runs: u32,
}

/// Validated configuration of the full suite.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSuiteConfig {
    pub master_seed: u64,
    pub exp1: StudyConfig,
    pub exp2: SweepConfig,
    pub exp3: ComparisonConfig,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for ExperimentSuiteConfig {
    fn default() -> Self {
        ExperimentSuiteConfig {
            master_seed: crate::DEFAULT_MASTER_SEED,
            exp1: StudyConfig::default(),
            exp2: SweepConfig {
                drift: DriftConfig::default(),
                sigmas: default_sigma_grid(),
            },
            exp3: ComparisonConfig {
                drift: default_comparison_drift(),
                controller: ControllerConfig::default(),
                n_runs: 300,
            },
            output_dir: PathBuf::from("out"),
            format: OutputFormat::Both,
        }
    }
}

impl ExperimentSuiteConfig {
    /// Replaces the master seed everywhere it cascades (the CLI seed
    /// override).
    pub fn with_master_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self.exp1.master_seed = seed;
        self.exp2.drift.master_seed = seed;
        self.exp3.drift.master_seed = seed;
        self
    }

    /// The effective configuration rendered back into the input schema.
    /// Parsing the result reproduces `self` exactly.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "format": self.format.as_str(),
            "exp1": {
                "n_trials": self.exp1.n_trials,
                "u_lo": self.exp1.u_lo,
                "u_hi": self.exp1.u_hi,
                "k_lo": self.exp1.k_lo,
                "k_hi": self.exp1.k_hi,
                "capacity_c": self.exp1.capacity_c,
                "n_bins": self.exp1.n_bins,
                "degradation": {
                    "base_accuracy": self.exp1.degradation.base_accuracy,
                    "coef_u": self.exp1.degradation.coef_u,
                    "coef_k": self.exp1.degradation.coef_k,
                    "coef_interaction": self.exp1.degradation.coef_interaction,
                    "accuracy_noise_sd": self.exp1.degradation.accuracy_noise_sd,
                    "collapse_threshold": self.exp1.degradation.collapse_threshold,
                },
            },
            "exp2": {
                "u0": self.exp2.drift.u0,
                "delta_u": self.exp2.drift.delta_u,
                "k0": self.exp2.drift.k0,
                "delta_k": self.exp2.drift.delta_k,
                "horizon_t": self.exp2.drift.horizon_t,
                "initial_c": self.exp2.drift.initial_c,
                "clip_floor": self.exp2.drift.clip_floor,
                "n_runs": self.exp2.drift.n_runs,
                "collapse_model": {
                    "beta0": self.exp2.drift.collapse_model.beta0(),
                    "beta1": self.exp2.drift.collapse_model.beta1(),
                },
                "sigmas": self.exp2.sigmas,
            },
            "exp3": {
                "u0": self.exp3.drift.u0,
                "delta_u": self.exp3.drift.delta_u,
                "k0": self.exp3.drift.k0,
                "delta_k": self.exp3.drift.delta_k,
                "noise_sd": self.exp3.drift.noise_sd,
                "horizon_t": self.exp3.drift.horizon_t,
                "initial_c": self.exp3.drift.initial_c,
                "clip_floor": self.exp3.drift.clip_floor,
                "n_runs": self.exp3.n_runs,
                "collapse_model": {
                    "beta0": self.exp3.drift.collapse_model.beta0(),
                    "beta1": self.exp3.drift.collapse_model.beta1(),
                },
                "controller": {
                    "gain_kappa": self.exp3.controller.gain_kappa,
                    "target_ihr": self.exp3.controller.target_ihr,
                    "max_step": self.exp3.controller.max_step,
                    "c_min": self.exp3.controller.c_min,
                    "c_max": self.exp3.controller.c_max,
                },
            },
        })
    }
}

/// Errors from [`parse_config`].
#[derive(Debug)]
pub enum ConfigError {
    /// Malformed JSON or a schema violation (unknown key, wrong type); the
    /// underlying error carries line and column.
    Parse(serde_json::Error),
    /// Structurally valid input whose values break an invariant; the message
    /// names it.
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(e) => write!(f, "config parse error: {e}"),
            ConfigError::Invalid(msg) => write!(f, "invalid config: {msg}"),
        }
    }
}

impl Error for ConfigError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        match self {
            ConfigError::Parse(e) => Some(e),
            ConfigError::Invalid(_) => None,
        }
    }
}

// Raw deserialization layer: every field optional, unknown keys rejected.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSuite {
    master_seed: Option<u64>,
    exp1: RawStudy,
    exp2: RawSweep,
    exp3: RawComparison,
    output_dir: Option<PathBuf>,
    format: Option<OutputFormat>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawStudy {
    n_trials: Option<u32>,
    u_lo: Option<f64>,
    u_hi: Option<f64>,
    k_lo: Option<f64>,
    k_hi: Option<f64>,
    capacity_c: Option<f64>,
    degradation: RawDegradation,
    n_bins: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawDegradation {
    base_accuracy: Option<f64>,
    coef_u: Option<f64>,
    coef_k: Option<f64>,
    coef_interaction: Option<f64>,
    accuracy_noise_sd: Option<f64>,
    collapse_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSweep {
    u0: Option<f64>,
    delta_u: Option<f64>,
    k0: Option<f64>,
    delta_k: Option<f64>,
    horizon_t: Option<u32>,
    initial_c: Option<f64>,
    clip_floor: Option<f64>,
    n_runs: Option<u32>,
    collapse_model: Option<LogisticModel>,
    sigmas: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawComparison {
    u0: Option<f64>,
    delta_u: Option<f64>,
    k0: Option<f64>,
    delta_k: Option<f64>,
    noise_sd: Option<f64>,
    horizon_t: Option<u32>,
    initial_c: Option<f64>,
    clip_floor: Option<f64>,
    n_runs: Option<u32>,
    collapse_model: Option<LogisticModel>,
    controller: RawController,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawController {
    gain_kappa: Option<f64>,
    target_ihr: Option<f64>,
    max_step: Option<f64>,
    c_min: Option<f64>,
    c_max: Option<f64>,
}

fn invalid(msg: &str) -> ConfigError {
    ConfigError::Invalid(msg.to_string())
}

fn require(cond: bool, invariant: &str) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{invariant} violated")))
    }
}

/// Parses and validates a JSON configuration document.
///
/// `{}` yields the full default configuration; any subset of keys overrides
/// just those values. Errors distinguish malformed/unknown-key input from
/// structurally valid input with invariant-breaking values.
pub fn parse_config(source: &str) -> Result<ExperimentSuiteConfig, ConfigError> {
    let raw: RawSuite = serde_json::from_str(source).map_err(ConfigError::Parse)?;
    let defaults = ExperimentSuiteConfig::default();
    let master_seed = raw.master_seed.unwrap_or(defaults.master_seed);

    // Experiment 1.
    let d1 = defaults.exp1;
    let rd = raw.exp1.degradation;
    let dd = d1.degradation;
    let degradation = DegradationParams {
        base_accuracy: rd.base_accuracy.unwrap_or(dd.base_accuracy),
        coef_u: rd.coef_u.unwrap_or(dd.coef_u),
        coef_k: rd.coef_k.unwrap_or(dd.coef_k),
        coef_interaction: rd.coef_interaction.unwrap_or(dd.coef_interaction),
        accuracy_noise_sd: rd.accuracy_noise_sd.unwrap_or(dd.accuracy_noise_sd),
        collapse_threshold: rd.collapse_threshold.unwrap_or(dd.collapse_threshold),
    };
    let exp1 = StudyConfig {
        n_trials: raw.exp1.n_trials.unwrap_or(d1.n_trials),
        u_lo: raw.exp1.u_lo.unwrap_or(d1.u_lo),
        u_hi: raw.exp1.u_hi.unwrap_or(d1.u_hi),
        k_lo: raw.exp1.k_lo.unwrap_or(d1.k_lo),
        k_hi: raw.exp1.k_hi.unwrap_or(d1.k_hi),
        capacity_c: raw.exp1.capacity_c.unwrap_or(d1.capacity_c),
        degradation,
        n_bins: raw.exp1.n_bins.unwrap_or(d1.n_bins),
        master_seed,
    };
    require(exp1.u_lo < exp1.u_hi, "u_lo < u_hi")?;
    require(exp1.k_lo < exp1.k_hi, "k_lo < k_hi")?;
    require(exp1.n_trials >= 1, "n_trials >= 1")?;
    require(exp1.n_bins >= 1, "n_bins >= 1")?;
    require(exp1.n_bins <= exp1.n_trials, "n_bins <= n_trials")?;
    require(exp1.capacity_c > 0.0, "capacity_c > 0")?;
    require(
        exp1.degradation.accuracy_noise_sd >= 0.0,
        "accuracy_noise_sd >= 0",
    )?;
    require(
        exp1.degradation.collapse_threshold > 0.0
            && exp1.degradation.collapse_threshold < exp1.degradation.base_accuracy,
        "0 < collapse_threshold < base_accuracy",
    )?;

    // Experiment 2.
    let d2 = defaults.exp2;
    let exp2 = SweepConfig {
        drift: DriftConfig {
            u0: raw.exp2.u0.unwrap_or(d2.drift.u0),
            delta_u: raw.exp2.delta_u.unwrap_or(d2.drift.delta_u),
            k0: raw.exp2.k0.unwrap_or(d2.drift.k0),
            delta_k: raw.exp2.delta_k.unwrap_or(d2.drift.delta_k),
            noise_sd: 0.0, // per-level value comes from the sigma grid
            horizon_t: raw.exp2.horizon_t.unwrap_or(d2.drift.horizon_t),
            initial_c: raw.exp2.initial_c.unwrap_or(d2.drift.initial_c),
            clip_floor: raw.exp2.clip_floor.unwrap_or(d2.drift.clip_floor),
            n_runs: raw.exp2.n_runs.unwrap_or(d2.drift.n_runs),
            master_seed,
            collapse_model: raw.exp2.collapse_model.unwrap_or(d2.drift.collapse_model),
            experiment_tag: SWEEP_EXPERIMENT_TAG,
        },
        sigmas: raw.exp2.sigmas.unwrap_or(d2.sigmas),
    };
    require(!exp2.sigmas.is_empty(), "sigmas non-empty")?;
    require(exp2.sigmas.iter().all(|&s| s >= 0.0), "every sigma >= 0")?;
    // The sweep's plot data keys its x axis on sigma, so the grid must be a
    // proper ascending grid, not an arbitrary multiset.
    require(
        exp2.sigmas.windows(2).all(|pair| pair[0] < pair[1]),
        "sigmas strictly increasing",
    )?;
    require(exp2.drift.horizon_t >= 1, "horizon_t >= 1")?;
    require(exp2.drift.n_runs >= 1, "n_runs >= 1")?;
    require(exp2.drift.initial_c > 0.0, "initial_c > 0")?;
    require(exp2.drift.clip_floor > 0.0, "clip_floor > 0")?;

    // Experiment 3.
    let d3 = defaults.exp3;
    let rc = raw.exp3.controller;
    let dc = d3.controller;
    let controller = ControllerConfig {
        gain_kappa: rc.gain_kappa.unwrap_or(dc.gain_kappa),
        target_ihr: rc.target_ihr.unwrap_or(dc.target_ihr),
        max_step: rc.max_step.unwrap_or(dc.max_step),
        c_min: rc.c_min.unwrap_or(dc.c_min),
        c_max: rc.c_max.unwrap_or(dc.c_max),
    };
    let n_runs3 = raw.exp3.n_runs.unwrap_or(d3.n_runs);
    let exp3 = ComparisonConfig {
        drift: DriftConfig {
            u0: raw.exp3.u0.unwrap_or(d3.drift.u0),
            delta_u: raw.exp3.delta_u.unwrap_or(d3.drift.delta_u),
            k0: raw.exp3.k0.unwrap_or(d3.drift.k0),
            delta_k: raw.exp3.delta_k.unwrap_or(d3.drift.delta_k),
            noise_sd: raw.exp3.noise_sd.unwrap_or(d3.drift.noise_sd),
            horizon_t: raw.exp3.horizon_t.unwrap_or(d3.drift.horizon_t),
            initial_c: raw.exp3.initial_c.unwrap_or(d3.drift.initial_c),
            clip_floor: raw.exp3.clip_floor.unwrap_or(d3.drift.clip_floor),
            n_runs: n_runs3,
            master_seed,
            collapse_model: raw.exp3.collapse_model.unwrap_or(d3.drift.collapse_model),
            experiment_tag: CONTROL_EXPERIMENT_TAG,
        },
        controller,
        n_runs: n_runs3,
    };
    require(exp3.drift.noise_sd >= 0.0, "noise_sd >= 0")?;
    require(exp3.drift.horizon_t >= 1, "horizon_t >= 1")?;
    require(exp3.n_runs >= 1, "n_runs >= 1")?;
    require(exp3.drift.initial_c > 0.0, "initial_c > 0")?;
    require(exp3.drift.clip_floor > 0.0, "clip_floor > 0")?;
    require(exp3.controller.gain_kappa > 0.0, "gain_kappa > 0")?;
    require(exp3.controller.max_step > 0.0, "max_step > 0")?;
    require(exp3.controller.target_ihr > 0.0, "target_ihr > 0")?;
    require(
        exp3.controller.c_min < exp3.controller.c_max,
        "c_min < c_max",
    )?;
    require(
        exp3.drift.initial_c >= exp3.controller.c_min
            && exp3.drift.initial_c <= exp3.controller.c_max,
        "c_min <= initial_c <= c_max",
    )?;

    let output_dir = raw.output_dir.unwrap_or(defaults.output_dir);
    if output_dir.as_os_str().is_empty() {
        return Err(invalid("output_dir must not be empty"));
    }

    Ok(ExperimentSuiteConfig {
        master_seed,
        exp1,
        exp2,
        exp3,
        output_dir,
        format: raw.format.unwrap_or(defaults.format),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default_config() {
        let config = parse_config("{}").unwrap();
        assert_eq!(config, ExperimentSuiteConfig::default());
        assert_eq!(config.master_seed, 20_240_601);
        assert_eq!(config.exp1.n_trials, 400);
        assert_eq!(config.exp2.sigmas.len(), 13);
        assert_eq!(config.exp3.n_runs, 300);
        assert_eq!(config.format, OutputFormat::Both);
    }

    #[test]
    fn partial_override_keeps_sibling_defaults() {
        let config = parse_config(r#"{"exp1": {"n_trials": 100}}"#).unwrap();
        assert_eq!(config.exp1.n_trials, 100);
        assert_eq!(config.exp1.n_bins, 8);
        assert_eq!(config.exp1.u_hi, 1.80);
        let config =
            parse_config(r#"{"exp1": {"degradation": {"collapse_threshold": 0.5}}}"#).unwrap();
        assert_eq!(config.exp1.degradation.collapse_threshold, 0.5);
        assert_eq!(config.exp1.degradation.base_accuracy, 0.96);
    }

    #[test]
    fn master_seed_cascades_into_every_experiment() {
        let config = parse_config(r#"{"master_seed": 7}"#).unwrap();
        assert_eq!(config.exp1.master_seed, 7);
        assert_eq!(config.exp2.drift.master_seed, 7);
        assert_eq!(config.exp3.drift.master_seed, 7);
        let config = ExperimentSuiteConfig::default().with_master_seed(42);
        assert_eq!(config.exp1.master_seed, 42);
        assert_eq!(config.exp2.drift.master_seed, 42);
        assert_eq!(config.exp3.drift.master_seed, 42);
    }

    #[test]
    fn nested_master_seed_is_rejected() {
        let err = parse_config(r#"{"exp1": {"master_seed": 7}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("master_seed"), "message was: {msg}");
    }

    #[test]
    fn unknown_keys_are_errors_naming_the_key() {
        let err = parse_config(r#"{"exp1": {"n_trails": 400}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(msg.contains("n_trails"), "message was: {msg}");
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_config("{\n  \"exp1\": nope\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "message was: {msg}");
    }

    #[test]
    fn violated_invariants_are_named() {
        let err = parse_config(r#"{"exp1": {"u_hi": 0.05}}"#).unwrap_err();
        assert_eq!(err.to_string(), "invalid config: u_lo < u_hi violated");
        let err = parse_config(r#"{"exp1": {"n_trials": 4, "n_bins": 9}}"#).unwrap_err();
        assert!(err.to_string().contains("n_bins <= n_trials"));
        let err = parse_config(r#"{"exp3": {"controller": {"gain_kappa": 0.0}}}"#).unwrap_err();
        assert!(err.to_string().contains("gain_kappa > 0"));
        let err = parse_config(r#"{"exp2": {"sigmas": []}}"#).unwrap_err();
        assert!(err.to_string().contains("sigmas non-empty"));
        let err = parse_config(r#"{"exp2": {"sigmas": [0.1, 0.1]}}"#).unwrap_err();
        assert!(err.to_string().contains("sigmas strictly increasing"));
        let err = parse_config(r#"{"exp3": {"initial_c": 0.1}}"#).unwrap_err();
        assert!(err.to_string().contains("c_min <= initial_c <= c_max"));
    }

    #[test]
    fn collapse_model_slope_is_checked_at_parse_time() {
        let err = parse_config(r#"{"exp2": {"collapse_model": {"beta0": 1.0, "beta1": 0.5}}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("beta1"));
    }

    #[test]
    fn sweep_noise_is_grid_driven_not_a_key() {
        // The sweep's noise level comes from the sigma grid; a noise_sd key
        // in exp2 is an unknown key, not a silent no-op.
        let err = parse_config(r#"{"exp2": {"noise_sd": 0.1}}"#).unwrap_err();
        assert!(err.to_string().contains("noise_sd"));
    }

    #[test]
    fn format_values_parse() {
        for (text, expected) in [
            ("csv", OutputFormat::Csv),
            ("json", OutputFormat::Json),
            ("both", OutputFormat::Both),
        ] {
            let config = parse_config(&format!(r#"{{"format": "{text}"}}"#)).unwrap();
            assert_eq!(config.format, expected);
        }
        assert!(parse_config(r#"{"format": "xml"}"#).is_err());
    }

    #[test]
    fn round_trip_reproduces_the_config() {
        let config = parse_config("{}").unwrap();
        let rendered = config.to_json().to_string();
        let reparsed = parse_config(&rendered).unwrap();
        assert_eq!(config, reparsed);

        let custom = parse_config(
            r#"{
                "master_seed": 99,
                "format": "csv",
                "exp1": {"n_trials": 64, "n_bins": 4},
                "exp2": {"sigmas": [0.0, 0.1], "n_runs": 10},
                "exp3": {"n_runs": 20, "controller": {"gain_kappa": 0.05}}
            }"#,
        )
        .unwrap();
        let reparsed = parse_config(&custom.to_json().to_string()).unwrap();
        assert_eq!(custom, reparsed);
    }

    #[test]
    fn exp3_run_count_reaches_both_fields() {
        let config = parse_config(r#"{"exp3": {"n_runs": 12}}"#).unwrap();
        assert_eq!(config.exp3.n_runs, 12);
        assert_eq!(config.exp3.drift.n_runs, 12);
    }
}
