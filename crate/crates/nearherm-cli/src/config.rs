//! JSON run configuration.
//!
//! ```json
//! {
//!   "experiments": ["fig3", {"experiment": "outliers_wigner", "n": 200}],
//!   "master_seed": 7,
//!   "output_dir": "out",
//!   "emit": ["csv", "json"]
//! }
//! ```
//!
//! An entry is either a preset name or an experiment object. An object may
//! give `n` in place of `ensemble`; that selects GOE of size `n`, or the
//! square Gaussian sample covariance with `1/n` scaling for the covariance
//! experiments. Omitted fields take the library defaults: 10 trials,
//! `epsilon = 0.2`, `threshold = 0.95`, zero perturbation.

use crate::{CliError, Result};
use nearherm::ensembles::{EnsembleSpec, Normalization};
use nearherm::experiments::presets::{preset, PRESET_NAMES};
use nearherm::experiments::{ExperimentKind, ExperimentSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeSet;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiments: Vec<ExperimentSpec>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub emit: BTreeSet<EmitFormat>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiments: Vec<Value>,
    #[serde(default)]
    master_seed: u64,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
    #[serde(default = "default_emit")]
    emit: BTreeSet<EmitFormat>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

pub fn default_emit() -> BTreeSet<EmitFormat> {
    BTreeSet::from([EmitFormat::Csv, EmitFormat::Json])
}

fn covariance_kind(kind: &str) -> bool {
    matches!(kind, "outliers_mp" | "overlap_mp" | "nonreal_sampcov" | "global_law_mp")
}

/// Replaces a bare `n` with the default ensemble for the experiment kind.
fn expand_n(entry: &mut serde_json::Map<String, Value>, path: &str) -> Result<()> {
    let Some(n) = entry.remove("n") else {
        return Ok(());
    };
    if entry.contains_key("ensemble") {
        return Err(CliError::Config(format!("{path}: give either `n` or `ensemble`, not both")));
    }
    let n = n
        .as_u64()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{path}.n: expected a positive integer, got {n}")))? as usize;
    let kind = entry.get("experiment").and_then(Value::as_str).unwrap_or("");
    let ensemble = if covariance_kind(kind) {
        EnsembleSpec::gaussian_covariance(n, n, Normalization::OneOverN)
    } else {
        EnsembleSpec::goe(n)
    };
    entry.insert("ensemble".into(), serde_json::to_value(ensemble).expect("ensemble serializes"));
    Ok(())
}

fn parse_entry(value: Value, path: &str) -> Result<ExperimentSpec> {
    let spec = match value {
        Value::String(name) => preset(&name).ok_or_else(|| {
            CliError::Config(format!("{path}: unknown preset {name:?}, expected one of {}", PRESET_NAMES.join(", ")))
        })?,
        Value::Object(mut entry) => {
            expand_n(&mut entry, path)?;
            serde_path_to_error::deserialize::<_, ExperimentSpec>(Value::Object(entry))
                .map_err(|e| CliError::Config(format!("{path}.{}: {}", e.path(), e.inner())))?
        }
        other => return Err(CliError::Config(format!("{path}: expected a preset name or an object, got {other}"))),
    };
    spec.validate().map_err(|e| CliError::Config(format!("{path}: {e}")))?;
    Ok(spec)
}

pub fn parse_config(text: &[u8]) -> Result<RunConfig> {
    let text = std::str::from_utf8(text).map_err(|e| CliError::Config(format!("config is not UTF-8: {e}")))?;
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(if path == "." { e.inner().to_string() } else { format!("{path}: {}", e.inner()) })
    })?;
    if raw.experiments.is_empty() {
        return Err(CliError::Config("experiments: list is empty".into()));
    }
    let experiments = raw
        .experiments
        .into_iter()
        .enumerate()
        .map(|(i, v)| parse_entry(v, &format!("experiments[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunConfig { experiments, master_seed: raw.master_seed, output_dir: raw.output_dir, emit: raw.emit })
}

/// The single-experiment config behind `figure <name>`.
pub fn figure_config(name: &str, master_seed: u64, output_dir: PathBuf) -> Result<RunConfig> {
    let spec = parse_entry(Value::String(name.into()), "figure")?;
    Ok(RunConfig { experiments: vec![spec], master_seed, output_dir, emit: default_emit() })
}

impl RunConfig {
    pub fn kinds(&self) -> Vec<ExperimentKind> {
        self.experiments.iter().map(|e| e.experiment).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nearherm::perturbations::PerturbationSpec;

    fn err(text: &str) -> String {
        match parse_config(text.as_bytes()) {
            Err(CliError::Config(m)) => m,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_entry_gets_defaults() {
        let cfg = parse_config(br#"{"experiments": [{"experiment": "outliers_wigner", "n": 200}]}"#).unwrap();
        let e = &cfg.experiments[0];
        assert_eq!(e.ensemble, EnsembleSpec::goe(200));
        assert_eq!(e.trials, 10);
        assert_eq!(e.perturbation, PerturbationSpec::zero());
        assert_eq!(e.params.epsilon(), 0.2);
        assert_eq!(e.params.threshold(), 0.95);
        assert_eq!(cfg.master_seed, 0);
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
        assert_eq!(cfg.emit, default_emit());
    }

    #[test]
    fn covariance_kinds_get_square_covariance() {
        let cfg = parse_config(br#"{"experiments": [{"experiment": "global_law_mp", "n": 50}]}"#).unwrap();
        assert_eq!(cfg.experiments[0].ensemble, EnsembleSpec::gaussian_covariance(50, 50, Normalization::OneOverN));
    }

    #[test]
    fn preset_expands() {
        let cfg = parse_config(br#"{"experiments": ["fig3"], "master_seed": 3}"#).unwrap();
        let e = &cfg.experiments[0];
        assert_eq!(e.experiment, ExperimentKind::OutliersWigner);
        assert_eq!(e.ensemble.n, 2000);
        assert_eq!(cfg.master_seed, 3);
    }

    #[test]
    fn negative_trials_names_path() {
        let m = err(r#"{"experiments": [{"experiment": "interlacing", "n": 5, "trials": -1}]}"#);
        assert!(m.contains("experiments[0].trials"), "{m}");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(err(r#"{"experiments": ["fig1"], "seed": 1}"#).contains("seed"));
        let m = err(r#"{"experiments": [{"experiment": "interlacing", "n": 5, "params": {"eps": 1}}]}"#);
        assert!(m.contains("experiments[0].params"), "{m}");
    }

    #[test]
    fn bad_entries() {
        assert!(err(r#"{"experiments": []}"#).contains("empty"));
        assert!(err(r#"{"experiments": ["fig9"]}"#).contains("fig9"));
        assert!(err(r#"{"experiments": [{"experiment": "interlacing", "n": 0}]}"#).contains("experiments[0].n"));
        assert!(err(r#"{"experiments": [{"experiment": "interlacing", "n": 4, "trials": 0}]}"#).contains("trials"));
        assert!(err(r#"{"experiments": [{"experiment": "nope", "n": 4}]}"#).contains("experiments[0].experiment"));
        assert!(err(r#"{"experiments": ["fig1"], "emit": ["xml"]}"#).contains("emit"));
        assert!(parse_config(b"\xff").is_err());
    }
}
