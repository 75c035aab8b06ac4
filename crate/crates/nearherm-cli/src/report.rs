//! The machine-readable run report and the stdout summary table.

use nearherm::experiments::verify::{CriterionResult, VerifyReport};
use nearherm::experiments::ExperimentReport;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub pass_rate: f64,
    pub metrics: BTreeMap<String, f64>,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport<C: Serialize> {
    pub config_echo: C,
    pub per_experiment: Vec<ExperimentSummary>,
    pub wall_time_ms: Option<u64>,
    pub seed: u64,
}

impl<C: Serialize> RunReport<C> {
    pub fn passed(&self) -> bool {
        self.per_experiment.iter().all(|e| e.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn summarize(name: String, r: &ExperimentReport) -> ExperimentSummary {
    let mut metrics = r.summary.clone();
    for (k, v) in &r.aggregate.means {
        metrics.insert(format!("mean_{k}"), *v);
    }
    for (k, v) in &r.aggregate.maxima {
        metrics.insert(format!("max_{k}"), *v);
    }
    let failed: Vec<String> = r.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
    ExperimentSummary {
        name,
        pass_rate: r.aggregate.pass_rate,
        metrics,
        threshold: r.threshold,
        passed: r.passed,
        detail: (!failed.is_empty()).then(|| failed.join("; ")),
    }
}

pub fn summarize_criterion(c: &CriterionResult) -> ExperimentSummary {
    ExperimentSummary {
        name: format!("criterion_{:02}", c.id),
        pass_rate: if c.passed { 1.0 } else { 0.0 },
        metrics: c.metrics.clone(),
        threshold: 1.0,
        passed: c.passed,
        detail: Some(format!("{}: {}", c.name, c.detail)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyEcho {
    pub command: &'static str,
    pub seed: u64,
}

pub fn verify_report(v: &VerifyReport, wall_time_ms: Option<u64>) -> RunReport<VerifyEcho> {
    RunReport {
        config_echo: VerifyEcho { command: "verify", seed: v.seed },
        per_experiment: v.criteria.iter().map(summarize_criterion).collect(),
        wall_time_ms,
        seed: v.seed,
    }
}

pub fn status(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn table_header() -> String {
    format!("{:<28} {:>7} {:>10} {:>10} {:>6} {:>10}", "experiment", "trials", "pass_rate", "threshold", "result", "time_ms")
}

pub fn table_row(name: &str, r: &ExperimentReport, elapsed_ms: u128) -> String {
    format!(
        "{:<28} {:>7} {:>10.3} {:>10.3} {:>6} {:>10}",
        name,
        r.trials,
        r.aggregate.pass_rate,
        r.threshold,
        status(r.passed),
        elapsed_ms
    )
}

/// `criterion <id> <PASS|FAIL> <ms> ms <name>: <detail>`
pub fn criterion_line(c: &CriterionResult, elapsed_ms: u128) -> String {
    format!("criterion {:>2} {} {:>8} ms  {}: {}", c.id, status(c.passed), elapsed_ms, c.name, c.detail)
}
