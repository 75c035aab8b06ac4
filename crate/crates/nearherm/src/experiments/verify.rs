//! The acceptance suite: one result per criterion, each derived from a
//! seeded experiment or an exact check.

use super::presets::{four_spikes, last_diagonal_i, three_spikes};
use super::{run, ExperimentKind, ExperimentReport, ExperimentSpec, Params};
use crate::bounds::match_points;
use crate::ensembles::{EnsembleSpec, Normalization};
use crate::error::Result;
use crate::laws::{
    integrate_mp, m_mp, m_sc, mp_density, outlier_mp, outlier_wigner, overlap_wigner, semicircle_density, adaptive_simpson,
};
use crate::linalg::{critical_companion, eig_general, poly_derivative, poly_from_roots, poly_roots};
use crate::perturbations::{PerturbationMode, PerturbationSpec};
use crate::rng::{mix_seed, Xoshiro256pp};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

/// Criterion ids and names in suite order.
pub const CRITERIA: [(u32, &str); 10] = [
    (1, "exact inequality suite"),
    (2, "wigner outliers at n=2000"),
    (3, "sample covariance outliers at n=2000"),
    (4, "all eigenvalues nonreal after a diagonal spike"),
    (5, "sample covariance nonreal and zero counts"),
    (6, "bulk imaginary and real part bounds"),
    (7, "eigenvector overlap"),
    (8, "critical points"),
    (9, "strict interlacing and hermite-biehler"),
    (10, "analytic layer"),
];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn params(threshold: f64) -> Params {
    Params { threshold: Some(threshold), ..Params::default() }
}

fn result(id: u32, passed: bool, detail: String, metrics: BTreeMap<String, f64>) -> CriterionResult {
    let name = CRITERIA.iter().find(|(i, _)| *i == id).map_or("", |(_, n)| n).to_string();
    CriterionResult { id, name, passed, detail, metrics }
}

fn experiment_metrics(r: &ExperimentReport) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::from([("pass_rate".to_string(), r.aggregate.pass_rate)]);
    for (k, v) in &r.aggregate.maxima {
        m.insert(format!("max_{k}"), *v);
    }
    for (k, v) in &r.summary {
        m.insert(k.clone(), *v);
    }
    m
}

fn pass_line(r: &ExperimentReport) -> String {
    let passes = r.per_trial.iter().filter(|t| t.pass).count();
    format!("{passes}/{} trials pass (threshold {})", r.trials, r.threshold)
}

fn fig3_spec(n: usize, kind: ExperimentKind, trials: usize) -> ExperimentSpec {
    ExperimentSpec::new(kind, EnsembleSpec::goe(n), PerturbationSpec::diagonal(three_spikes(), PerturbationMode::Additive), trials)
}

fn criterion_1(seed: u64) -> Result<CriterionResult> {
    let spec = ExperimentSpec::new(ExperimentKind::BoundsSuite, EnsembleSpec::goe(2), PerturbationSpec::zero(), 500)
        .with_params(Params { threshold: Some(1.0), max_n: Some(100), ..Params::default() });
    let r = run(&spec, seed)?;
    let violations = r.summary["total_violations"];
    let detail = format!(
        "{} violations over 500 instances; sharp case lhs = {:.15}, rhs = {:.15}",
        violations, r.summary["sharp_lhs"], r.summary["sharp_rhs"]
    );
    Ok(result(1, r.passed && violations == 0.0, detail, experiment_metrics(&r)))
}

fn criterion_2(seed: u64) -> Result<CriterionResult> {
    let spec = fig3_spec(2000, ExperimentKind::OutliersWigner, 10)
        .with_params(Params { match_tol: Some(0.1), ..params(0.9) });
    let r = run(&spec, seed)?;
    Ok(result(2, r.passed, pass_line(&r), experiment_metrics(&r)))
}

fn criterion_3(seed: u64) -> Result<CriterionResult> {
    let spec = ExperimentSpec::new(
        ExperimentKind::OutliersMp,
        EnsembleSpec::gaussian_covariance(2000, 2000, Normalization::OneOverN),
        PerturbationSpec::diagonal(four_spikes(), PerturbationMode::Multiplicative),
        10,
    )
    .with_params(Params { match_tol: Some(0.2), ..params(0.9) });
    let r = run(&spec, seed)?;
    Ok(result(3, r.passed, pass_line(&r), experiment_metrics(&r)))
}

fn criterion_4(seed: u64) -> Result<CriterionResult> {
    let spec = ExperimentSpec::new(ExperimentKind::NonrealWigner, EnsembleSpec::goe(100), last_diagonal_i(100), 20)
        .with_params(params(1.0));
    let r = run(&spec, seed)?;
    let min_im = r.per_trial.iter().map(|t| t.metrics["min_abs_im"]).fold(f64::INFINITY, f64::min);
    let detail = format!("{}; smallest |Im| over trials {min_im:.4e}", pass_line(&r));
    let mut m = experiment_metrics(&r);
    m.insert("min_abs_im".into(), min_im);
    Ok(result(4, r.passed && min_im > 0.0, detail, m))
}

fn criterion_5(seed: u64) -> Result<CriterionResult> {
    let spec = ExperimentSpec::new(
        ExperimentKind::NonrealSampcov,
        EnsembleSpec::gaussian_covariance(30, 100, Normalization::Raw),
        PerturbationSpec::diagonal(vec![c(0.0, 1.0)], PerturbationMode::Multiplicative),
        20,
    )
    .with_params(Params { zero_tol: Some(1e-8), ..params(1.0) });
    let r = run(&spec, seed)?;
    let min_im = r.per_trial.iter().map(|t| t.metrics["min_signed_im"]).fold(f64::INFINITY, f64::min);
    let detail = format!("{}; smallest positive Im {min_im:.4e}", pass_line(&r));
    Ok(result(5, r.passed, detail, experiment_metrics(&r)))
}

fn criterion_6(seed: u64) -> Result<CriterionResult> {
    let spec = fig3_spec(1000, ExperimentKind::BulkImBound, 10).with_params(Params { epsilon: Some(0.2), ..params(0.9) });
    let r = run(&spec, seed)?;
    let detail = format!(
        "{}; max bulk |Im| {:.4e} vs bound {:.4e}, max bulk |Re| {:.6} vs bound {:.6}",
        pass_line(&r),
        r.aggregate.maxima["max_bulk_im"],
        r.summary["im_bound"],
        r.aggregate.maxima["max_bulk_abs_re"],
        r.summary["re_bound"],
    );
    Ok(result(6, r.passed, detail, experiment_metrics(&r)))
}

fn criterion_7(seed: u64) -> Result<CriterionResult> {
    let theta = c(2.0, 0.0);
    let spec = ExperimentSpec::new(ExperimentKind::OverlapWigner, EnsembleSpec::goe(1000), PerturbationSpec::zero(), 10)
        .with_params(Params { theta: Some(theta), overlap_tol: Some(0.05), ..params(0.0) });
    let r = run(&spec, seed)?;
    let quad = overlap_wigner(theta)?.value.re;
    let closed = 1.0 - 1.0 / (theta.re * theta.re);
    let quad_ok = (quad - closed).abs() <= 1e-6;
    let detail = format!(
        "mean overlap {:.6} vs {closed}; quadrature {quad:.12} (closed form gap {:.2e}); {}",
        r.summary["mean_overlap"],
        (quad - closed).abs(),
        pass_line(&r)
    );
    let mut m = experiment_metrics(&r);
    m.insert("quadrature".into(), quad);
    Ok(result(7, r.passed && quad_ok, detail, m))
}

/// Companion spectrum against derivative roots plus the adjoined zero.
fn companion_exact(seed: u64, instances: usize) -> Result<(usize, f64)> {
    let mut rng = Xoshiro256pp::new(seed);
    let mut worst = 0.0f64;
    let mut ok = 0;
    for _ in 0..instances {
        let n = 2 + (rng.next_u64() % 11) as usize;
        let roots: Vec<Complex64> = (0..n).map(|_| c(rng.next_gaussian(), rng.next_gaussian())).collect();
        let comp = eig_general(&critical_companion(&roots)?)?.eigenvalues;
        let mut brute = poly_roots(&poly_derivative(&poly_from_roots(&roots))?)?;
        brute.push(c(0.0, 0.0));
        let mr = match_points(&comp, &brute, 1)?;
        let err = mr.pair_costs.iter().fold(0.0f64, |a, &b| a.max(b));
        worst = worst.max(err);
        if err <= 1e-7 {
            ok += 1;
        }
    }
    Ok((ok, worst))
}

fn criterion_8(seed: u64) -> Result<CriterionResult> {
    let (ok, worst) = companion_exact(mix_seed(seed, 80), 100)?;
    let spec = fig3_spec(2000, ExperimentKind::CriticalPoints, 3)
        .with_params(Params { kolmogorov_tol: Some(0.05), im_tol: Some(0.05), ..Params::default() });
    let r = run(&spec, seed)?;
    let detail = format!(
        "companion {ok}/100 within 1e-7 (worst {worst:.2e}); n=2000: {}, max Kolmogorov {:.4}, max non-outlier |Im| {:.4}",
        pass_line(&r),
        r.aggregate.maxima["kolmogorov"],
        r.aggregate.maxima["max_inner_im"],
    );
    let mut m = experiment_metrics(&r);
    m.insert("companion_exact".into(), ok as f64);
    m.insert("companion_worst".into(), worst);
    Ok(result(8, ok == 100 && r.passed, detail, m))
}

fn criterion_9(seed: u64) -> Result<CriterionResult> {
    let spec = ExperimentSpec::new(ExperimentKind::Interlacing, EnsembleSpec::goe(50), PerturbationSpec::zero(), 100)
        .with_params(Params { hb_pairs: Some(50), ..params(1.0) });
    let r = run(&spec, seed)?;
    let detail = format!("{}; {}", pass_line(&r), r.checks.iter().map(|c| c.detail.clone()).collect::<Vec<_>>().join("; "));
    Ok(result(9, r.passed, detail, experiment_metrics(&r)))
}

/// Points off both cuts, spread over `[-6, 6] x [-6, 6]`.
fn probe_points(seed: u64, count: usize) -> Vec<Complex64> {
    let mut rng = Xoshiro256pp::new(seed);
    (0..count)
        .map(|_| {
            let x = 12.0 * rng.next_f64() - 6.0;
            let y = (0.01 + 6.0 * rng.next_f64()) * if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
            c(x, y)
        })
        .collect()
}

fn criterion_10(seed: u64) -> Result<CriterionResult> {
    let sc = adaptive_simpson(|phi| semicircle_density(2.0 * phi.cos()) * 2.0 * phi.sin(), 0.0, PI, 1e-12);
    let mp = adaptive_simpson(
        |phi| {
            let phi = phi.max(1e-100);
            let x = 4.0 * (0.5 * phi).sin().powi(2);
            mp_density(x, 1.0).unwrap_or(f64::NAN) * 2.0 * phi.sin()
        },
        0.0,
        PI,
        1e-12,
    );
    let mp_weighted = integrate_mp(|_| 1.0);
    let pts = probe_points(mix_seed(seed, 100), 1000);
    let mut res_sc = 0.0f64;
    let mut res_mp = 0.0f64;
    let mut max_msc = 0.0f64;
    let mut max_mp = 0.0f64;
    for &z in &pts {
        let a = m_sc(z)?;
        let b = m_mp(z)?;
        res_sc = res_sc.max((a * a + z * a + 1.0).norm() / (1.0 + z.norm()));
        res_mp = res_mp.max((z * b * b + z * b + 1.0).norm() / (1.0 + z.norm()));
        max_msc = max_msc.max(a.norm());
        max_mp = max_mp.max((1.0 + z * b).norm());
    }
    let mut identical = true;
    let mut rng = Xoshiro256pp::new(mix_seed(seed, 101));
    for _ in 0..1000 {
        let l = Complex64::from_polar(1.0 + 1e-3 + 5.0 * rng.next_f64(), 2.0 * PI * rng.next_f64());
        let (w, m) = (outlier_wigner(l), outlier_mp(l));
        identical &= match (w, m) {
            (Some(w), Some(m)) => m.value == 2.0 + w.value,
            _ => false,
        };
    }
    let passed = (sc - 1.0).abs() <= 1e-10
        && (mp - 1.0).abs() <= 1e-10
        && (mp_weighted - 1.0).abs() <= 1e-10
        && res_sc <= 1e-12
        && res_mp <= 1e-12
        && max_msc <= 1.0
        && max_mp <= 1.0
        && identical;
    let detail = format!(
        "integrals {:.2e}, {:.2e}; residuals {res_sc:.2e}, {res_mp:.2e}; max |m_sc| {max_msc:.6}, max |1+z m_mp| {max_mp:.6}; outlier identity {}",
        (sc - 1.0).abs(),
        (mp - 1.0).abs(),
        if identical { "exact" } else { "broken" }
    );
    let metrics = BTreeMap::from([
        ("semicircle_mass".to_string(), sc),
        ("mp_mass".to_string(), mp),
        ("m_sc_residual".to_string(), res_sc),
        ("m_mp_residual".to_string(), res_mp),
        ("max_abs_m_sc".to_string(), max_msc),
        ("max_abs_one_plus_z_m_mp".to_string(), max_mp),
    ]);
    Ok(result(10, passed, detail, metrics))
}

/// Runs one criterion with the stream for `seed`.
pub fn run_criterion(id: u32, seed: u64) -> Result<CriterionResult> {
    let s = mix_seed(seed, id as u64);
    match id {
        1 => criterion_1(s),
        2 => criterion_2(s),
        3 => criterion_3(s),
        4 => criterion_4(s),
        5 => criterion_5(s),
        6 => criterion_6(s),
        7 => criterion_7(s),
        8 => criterion_8(s),
        9 => criterion_9(s),
        10 => criterion_10(s),
        _ => Err(crate::Error::Config(format!("no acceptance criterion {id}"))),
    }
}

/// Runs every criterion in order.
pub fn verify(seed: u64) -> Result<VerifyReport> {
    let criteria = CRITERIA.iter().map(|(id, _)| run_criterion(*id, seed)).collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport { seed, passed: criteria.iter().all(|c| c.passed), criteria })
}
