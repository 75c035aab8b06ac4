//! Seeded experiment runners. Each runner turns an [`ExperimentSpec`] into an
//! [`ExperimentReport`]; trials run in parallel and are reduced in trial
//! order, so reports do not depend on scheduling.

mod critical;
mod global;
mod interlacing;
mod nonreal;
mod outliers;
pub mod presets;
mod suite;
pub mod verify;

pub use critical::{critical_points, run_critical_points};
pub use global::run_global_law;
pub use interlacing::{hermite_biehler_cases, interlace_margin, run_interlacing, HermiteBiehlerCase};
pub use nonreal::{nonreal_deterministic_check, run_nonreal_deterministic, run_nonreal_sampcov, run_nonreal_wigner, DeterministicOutcome};
pub use outliers::{classify, perturbation_eigenvalues, predictions, run_bulk_im_bound, run_outliers, run_overlap};
pub use suite::{run_bounds_suite, sharpness_pair};

use crate::bounds::kahan_order;
use crate::ensembles::{sample_covariance, sample_wigner, EnsembleSpec, Family, SeedPlan};
use crate::error::{Error, Result};
use crate::linalg::lowrank::hermitian_plus_low_rank;
use crate::linalg::{eig_general, hermitian_eigenvalues, ComplexMatrix};
use crate::perturbations::PerturbationSpec;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest dimension handled by the dense QR solver; above it the
/// diagonal-plus-low-rank solver is used.
pub const DENSE_LIMIT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    NonrealWigner,
    NonrealSampcov,
    NonrealDeterministic,
    Interlacing,
    GlobalLawWigner,
    GlobalLawMp,
    OutliersWigner,
    OutliersMp,
    BulkImBound,
    OverlapWigner,
    OverlapMp,
    CriticalPoints,
    BoundsSuite,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::NonrealWigner => "nonreal_wigner",
            ExperimentKind::NonrealSampcov => "nonreal_sampcov",
            ExperimentKind::NonrealDeterministic => "nonreal_deterministic",
            ExperimentKind::Interlacing => "interlacing",
            ExperimentKind::GlobalLawWigner => "global_law_wigner",
            ExperimentKind::GlobalLawMp => "global_law_mp",
            ExperimentKind::OutliersWigner => "outliers_wigner",
            ExperimentKind::OutliersMp => "outliers_mp",
            ExperimentKind::BulkImBound => "bulk_im_bound",
            ExperimentKind::OverlapWigner => "overlap_wigner",
            ExperimentKind::OverlapMp => "overlap_mp",
            ExperimentKind::CriticalPoints => "critical_points",
            ExperimentKind::BoundsSuite => "bounds_suite",
        }
    }
}

/// Which limiting law an experiment compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    Wigner,
    Mp,
}

/// Tunable parameters. Missing values take the documented defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Gap `δ` around the unit circle for eigenvalues of `P` (0.4).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Exponent slack `ε` in the bulk bounds (0.2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Required pass rate (0.95).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Sign and size of the imaginary perturbation (1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Spike for overlap experiments (2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Complex64>,
    /// Number of eigenvalues moved off the axis (all of them).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Mixing coefficients `z_j` (all 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<Complex64>>,
    /// Weights `a_j` (all `γ`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    /// Distance allowed between an outlier and its prediction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_tol: Option<f64>,
    /// Largest accepted Kolmogorov distance (0.05).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kolmogorov_tol: Option<f64>,
    /// Largest accepted `|Im|` of non-outlier critical points (0.05).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im_tol: Option<f64>,
    /// `|Im|` above which an eigenvalue counts as nonreal in global-law runs (0.05).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_im_tol: Option<f64>,
    /// Allowed nonreal mass beyond `rank(P)/n` (0.01).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonreal_mass_slack: Option<f64>,
    /// Allowed distance of the mean overlap from its limit (0.05).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap_tol: Option<f64>,
    /// Relative size below which an eigenvalue counts as zero (1e-8).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_tol: Option<f64>,
    /// Polynomial pairs for the Hermite–Biehler cross-check (50).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hb_pairs: Option<usize>,
    /// Largest dimension in the inequality suite (100).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_n: Option<usize>,
    /// Keep eigenvalues and predictions for figure output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump: Option<bool>,
}

impl Params {
    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.4)
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(0.2)
    }
    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or(0.95)
    }
    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(1.0)
    }
    pub fn theta(&self) -> Complex64 {
        self.theta.unwrap_or(Complex64::new(2.0, 0.0))
    }
    pub fn kolmogorov_tol(&self) -> f64 {
        self.kolmogorov_tol.unwrap_or(0.05)
    }
    pub fn im_tol(&self) -> f64 {
        self.im_tol.unwrap_or(0.05)
    }
    pub fn weak_im_tol(&self) -> f64 {
        self.weak_im_tol.unwrap_or(0.05)
    }
    pub fn nonreal_mass_slack(&self) -> f64 {
        self.nonreal_mass_slack.unwrap_or(0.01)
    }
    pub fn overlap_tol(&self) -> f64 {
        self.overlap_tol.unwrap_or(0.05)
    }
    pub fn zero_tol(&self) -> f64 {
        self.zero_tol.unwrap_or(1e-8)
    }
    pub fn hb_pairs(&self) -> usize {
        self.hb_pairs.unwrap_or(50)
    }
    pub fn max_n(&self) -> usize {
        self.max_n.unwrap_or(100)
    }
    pub fn dump(&self) -> bool {
        self.dump.unwrap_or(false)
    }
}

fn zero_perturbation() -> PerturbationSpec {
    PerturbationSpec::zero()
}

fn default_trials() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub ensemble: EnsembleSpec,
    #[serde(default = "zero_perturbation")]
    pub perturbation: PerturbationSpec,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub params: Params,
}

impl ExperimentSpec {
    pub fn new(experiment: ExperimentKind, ensemble: EnsembleSpec, perturbation: PerturbationSpec, trials: usize) -> Self {
        Self { experiment, ensemble, perturbation, trials, params: Params::default() }
    }

    pub fn with_params(mut self, params: Params) -> Self {
        self.params = params;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        let t = self.params.threshold();
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Config(format!("threshold {t} outside [0, 1]")));
        }
        if !(self.params.delta() > 0.0 && self.params.delta() < 1.0) {
            return Err(Error::Config(format!("delta {} outside (0, 1)", self.params.delta())));
        }
        if !(self.params.epsilon() > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        self.ensemble.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub pass: bool,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub pass_rate: f64,
    pub means: BTreeMap<String, f64>,
    pub maxima: BTreeMap<String, f64>,
}

/// An experiment-level condition beyond the per-trial pass rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Eigenvalue,
    CriticalPoint,
    Prediction,
    CircleCenter,
}

impl PointKind {
    pub fn name(self) -> &'static str {
        match self {
            PointKind::Eigenvalue => "eigenvalue",
            PointKind::CriticalPoint => "critical_point",
            PointKind::Prediction => "prediction",
            PointKind::CircleCenter => "circle_center",
        }
    }
}

/// `index` counts points of one kind within a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DumpPoint {
    pub trial: u64,
    pub index: usize,
    pub re: f64,
    pub im: f64,
    pub kind: PointKind,
}

/// Split of a spectrum into outliers and bulk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierClassification {
    pub outliers: Vec<Complex64>,
    pub bulk: Vec<Complex64>,
    pub delta_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub trials: usize,
    pub master_seed: u64,
    pub threshold: f64,
    pub per_trial: Vec<TrialRecord>,
    pub aggregate: Aggregate,
    pub summary: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classifications: Vec<OutlierClassification>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eigenvalue_dump: Vec<DumpPoint>,
}

impl ExperimentReport {
    pub fn pass_rate(&self) -> f64 {
        self.aggregate.pass_rate
    }
}

/// What one trial hands back to the reducer.
#[derive(Debug, Clone, Default)]
pub(crate) struct TrialOutcome {
    pub pass: bool,
    pub metrics: BTreeMap<String, f64>,
    pub note: Option<String>,
    pub dump: Vec<(PointKind, Complex64)>,
    pub classification: Option<OutlierClassification>,
}

impl TrialOutcome {
    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn dump_points(&mut self, kind: PointKind, points: &[Complex64]) {
        self.dump.extend(points.iter().map(|&z| (kind, z)));
    }
}

/// Runs `trials` independent trials and collects them in index order. The
/// first failing trial (by index) determines the error.
pub(crate) fn run_trials<F>(trials: usize, master_seed: u64, f: F) -> Result<Vec<(SeedPlan, TrialOutcome)>>
where
    F: Fn(SeedPlan) -> Result<TrialOutcome> + Sync,
{
    let results: Vec<(SeedPlan, Result<TrialOutcome>)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let plan = SeedPlan::new(master_seed, t);
            (plan, f(plan))
        })
        .collect();
    results.into_iter().map(|(p, r)| r.map(|o| (p, o))).collect()
}

pub(crate) fn assemble(
    spec: &ExperimentSpec,
    master_seed: u64,
    outcomes: Vec<(SeedPlan, TrialOutcome)>,
    summary: BTreeMap<String, f64>,
    checks: Vec<Check>,
) -> ExperimentReport {
    let keep_dump = spec.params.dump();
    let mut per_trial = Vec::with_capacity(outcomes.len());
    let mut dump = Vec::new();
    let mut classifications = Vec::new();
    for (plan, o) in outcomes {
        if keep_dump {
            let mut counters: BTreeMap<&'static str, usize> = BTreeMap::new();
            for (kind, z) in &o.dump {
                let c = counters.entry(kind.name()).or_default();
                dump.push(DumpPoint { trial: plan.trial_index, index: *c, re: z.re, im: z.im, kind: *kind });
                *c += 1;
            }
        }
        if let Some(c) = o.classification {
            classifications.push(c);
        }
        per_trial.push(TrialRecord {
            trial: plan.trial_index,
            seed: plan.stream_seed(),
            pass: o.pass,
            metrics: o.metrics,
            note: o.note,
        });
    }
    per_trial.sort_by_key(|r| r.trial);
    let aggregate = aggregate(&per_trial);
    let threshold = spec.params.threshold();
    let passed = aggregate.pass_rate >= threshold && checks.iter().all(|c| c.passed);
    ExperimentReport {
        experiment: spec.experiment,
        trials: per_trial.len(),
        master_seed,
        threshold,
        per_trial,
        aggregate,
        summary,
        checks,
        passed,
        classifications,
        eigenvalue_dump: dump,
    }
}

fn aggregate(records: &[TrialRecord]) -> Aggregate {
    let passes = records.iter().filter(|r| r.pass).count();
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut maxima: BTreeMap<String, f64> = BTreeMap::new();
    for r in records {
        for (k, &v) in &r.metrics {
            if !v.is_finite() {
                continue;
            }
            let e = sums.entry(k.clone()).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
            let m = maxima.entry(k.clone()).or_insert(v);
            *m = m.max(v);
        }
    }
    Aggregate {
        pass_rate: if records.is_empty() { 0.0 } else { passes as f64 / records.len() as f64 },
        means: sums.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect(),
        maxima,
    }
}

/// Samples the unperturbed Hermitian matrix of an ensemble.
pub fn sample_hermitian(ensemble: &EnsembleSpec, seed: SeedPlan) -> Result<ComplexMatrix> {
    match ensemble.expanded_family() {
        Family::Wigner { .. } => sample_wigner(ensemble, seed),
        Family::SampleCovariance { .. } => sample_covariance(ensemble, seed),
        Family::Goe => unreachable!("expanded"),
    }
}

/// Spectrum of `M + P` or `M (I + P)` for Hermitian `M`, sorted by
/// descending real part. Uses dense QR up to [`DENSE_LIMIT`] and the
/// structured solver beyond.
pub fn perturbed_spectrum(m: &ComplexMatrix, p: &PerturbationSpec) -> Result<Vec<Complex64>> {
    let n = m.rows();
    let mut ev = if p.declared_rank() == 0 {
        hermitian_eigenvalues(m)?.into_iter().map(|x| Complex64::new(x, 0.0)).collect()
    } else if n <= DENSE_LIMIT {
        eig_general(&p.apply(m)?)?.eigenvalues
    } else {
        let (l, r) = p.factors(n)?;
        let (d, _) = hermitian_plus_low_rank(m, &l, &r, p.is_multiplicative(), None)?;
        d.eigenvalues()?.eigenvalues
    };
    ev.sort_by(kahan_order);
    Ok(ev)
}

/// `‖L R^T‖_F` without forming the product.
pub(crate) fn low_rank_frobenius(l: &ComplexMatrix, r: &ComplexMatrix) -> f64 {
    let k = l.cols();
    let n = l.rows();
    let gram = |m: &ComplexMatrix, a: usize, b: usize, conj_first: bool| -> Complex64 {
        (0..n)
            .map(|i| if conj_first { m[(i, a)].conj() * m[(i, b)] } else { m[(i, a)] * m[(i, b)].conj() })
            .sum()
    };
    let mut s = Complex64::new(0.0, 0.0);
    for a in 0..k {
        for b in 0..k {
            s += gram(l, a, b, true) * gram(r, b, a, false);
        }
    }
    s.re.max(0.0).sqrt()
}

pub(crate) fn require_wigner(spec: &ExperimentSpec) -> Result<()> {
    if !spec.ensemble.is_wigner() {
        return Err(Error::Config(format!("{} needs a wigner or goe ensemble", spec.experiment.name())));
    }
    Ok(())
}

pub(crate) fn require_covariance(spec: &ExperimentSpec) -> Result<()> {
    if spec.ensemble.is_wigner() {
        return Err(Error::Config(format!("{} needs a sample_covariance ensemble", spec.experiment.name())));
    }
    Ok(())
}

/// Runs any experiment.
pub fn run(spec: &ExperimentSpec, master_seed: u64) -> Result<ExperimentReport> {
    spec.validate()?;
    match spec.experiment {
        ExperimentKind::NonrealWigner => run_nonreal_wigner(spec, master_seed),
        ExperimentKind::NonrealSampcov => run_nonreal_sampcov(spec, master_seed),
        ExperimentKind::NonrealDeterministic => run_nonreal_deterministic(spec, master_seed),
        ExperimentKind::Interlacing => run_interlacing(spec, master_seed),
        ExperimentKind::GlobalLawWigner => run_global_law(spec, master_seed, Law::Wigner),
        ExperimentKind::GlobalLawMp => run_global_law(spec, master_seed, Law::Mp),
        ExperimentKind::OutliersWigner => run_outliers(spec, master_seed, Law::Wigner),
        ExperimentKind::OutliersMp => run_outliers(spec, master_seed, Law::Mp),
        ExperimentKind::BulkImBound => run_bulk_im_bound(spec, master_seed),
        ExperimentKind::OverlapWigner => run_overlap(spec, master_seed, Law::Wigner),
        ExperimentKind::OverlapMp => run_overlap(spec, master_seed, Law::Mp),
        ExperimentKind::CriticalPoints => run_critical_points(spec, master_seed),
        ExperimentKind::BoundsSuite => run_bounds_suite(spec, master_seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbations::PerturbationMode;

    #[test]
    fn spec_json_defaults() {
        let s: ExperimentSpec = serde_json::from_str(
            r#"{"experiment":"outliers_wigner","ensemble":{"family":{"kind":"goe"},"n":20,"normalization":"one_over_sqrt_n"}}"#,
        )
        .unwrap();
        assert_eq!(s.trials, 10);
        assert_eq!(s.params.threshold(), 0.95);
        assert_eq!(s.params.epsilon(), 0.2);
        assert_eq!(s.perturbation, PerturbationSpec::zero());
        let bad = r#"{"experiment":"outliers_wigner","ensemble":{"family":{"kind":"goe"},"n":20,"normalization":"raw"},"params":{"detla":0.1}}"#;
        assert!(serde_json::from_str::<ExperimentSpec>(bad).is_err());
    }

    #[test]
    fn zero_trials_rejected() {
        let s = ExperimentSpec::new(ExperimentKind::OutliersWigner, EnsembleSpec::goe(10), PerturbationSpec::zero(), 0);
        assert!(matches!(run(&s, 1), Err(Error::Config(_))));
    }

    #[test]
    fn low_rank_frobenius_matches_dense() {
        let vals = vec![Complex64::new(0.0, 1.5), Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0)];
        let p = PerturbationSpec::diagonal(vals, PerturbationMode::Additive);
        let (l, r) = p.factors(7).unwrap();
        let dense = crate::linalg::frobenius_norm(&p.build(7).unwrap());
        assert!((low_rank_frobenius(&l, &r) - dense).abs() < 1e-14);
    }

    #[test]
    fn structured_and_dense_spectra_agree() {
        let n = DENSE_LIMIT + 20;
        let m = sample_hermitian(&EnsembleSpec::goe(n), SeedPlan::new(3, 0)).unwrap();
        let vals = vec![Complex64::new(0.0, 1.5), Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0)];
        let p = PerturbationSpec::diagonal(vals, PerturbationMode::Additive);
        let fast = perturbed_spectrum(&m, &p).unwrap();
        let dense = eig_general(&p.apply(&m).unwrap()).unwrap().eigenvalues;
        let mr = crate::bounds::match_points(&fast, &dense, 1).unwrap();
        assert!(mr.pair_costs.iter().all(|&d| d < 1e-9), "{}", mr.total_cost);
    }

    #[test]
    fn aggregate_counts_exactly() {
        let mk = |pass, v| TrialRecord {
            trial: 0,
            seed: 0,
            pass,
            metrics: [("x".to_string(), v)].into_iter().collect(),
            note: None,
        };
        let a = aggregate(&[mk(true, 1.0), mk(false, 3.0), mk(true, f64::NAN)]);
        assert_eq!(a.pass_rate, 2.0 / 3.0);
        assert_eq!(a.means["x"], 2.0);
        assert_eq!(a.maxima["x"], 3.0);
    }
}
