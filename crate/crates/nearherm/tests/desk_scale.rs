//! Limiting laws at n = 2000.

use nearherm::bounds::kolmogorov_distance;
use nearherm::ensembles::{sample_covariance, sample_wigner, EnsembleSpec, Normalization, SeedPlan};
use nearherm::experiments::presets::{four_spikes, three_spikes};
use nearherm::experiments::{run, ExperimentKind, ExperimentSpec};
use nearherm::laws::semicircle_cdf;
use nearherm::linalg::hermitian_eigenvalues;
use nearherm::perturbations::{PerturbationMode, PerturbationSpec};

#[test]
fn goe_semicircle_kolmogorov() {
    let m = sample_wigner(&EnsembleSpec::goe(2000), SeedPlan::new(11, 0)).unwrap();
    let ev = hermitian_eigenvalues(&m).unwrap();
    let k = kolmogorov_distance(&ev, semicircle_cdf).unwrap();
    assert!(k <= 0.05, "K = {k}");
}

#[test]
fn covariance_top_edge() {
    let spec = EnsembleSpec::gaussian_covariance(2000, 2000, Normalization::OneOverN);
    let ev = hermitian_eigenvalues(&sample_covariance(&spec, SeedPlan::new(12, 0)).unwrap()).unwrap();
    let top = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(top <= 4.1, "largest eigenvalue {top}");
    assert!(ev.iter().all(|&x| x > -1e-9));
}

#[test]
fn global_law_wigner_rank_three() {
    let p = PerturbationSpec::diagonal(three_spikes(), PerturbationMode::Additive);
    let spec = ExperimentSpec::new(ExperimentKind::GlobalLawWigner, EnsembleSpec::goe(2000), p, 1);
    let r = run(&spec, 13).unwrap();
    assert!(r.passed, "{:?}", r.per_trial);
}

#[test]
fn global_law_mp_multiplicative() {
    let p = PerturbationSpec::diagonal(four_spikes(), PerturbationMode::Multiplicative);
    let ens = EnsembleSpec::gaussian_covariance(2000, 2000, Normalization::OneOverN);
    let r = run(&ExperimentSpec::new(ExperimentKind::GlobalLawMp, ens, p, 1), 14).unwrap();
    assert!(r.passed, "{:?}", r.per_trial);
}

#[test]
fn critical_points_without_perturbation() {
    let spec = ExperimentSpec::new(ExperimentKind::CriticalPoints, EnsembleSpec::goe(2000), PerturbationSpec::zero(), 1);
    let r = run(&spec, 15).unwrap();
    assert!(r.per_trial[0].metrics["kolmogorov"] <= 0.05, "{:?}", r.per_trial);
}
