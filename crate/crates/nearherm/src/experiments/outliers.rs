use super::{
    assemble, require_covariance, require_wigner, run_trials, sample_hermitian, Check, ExperimentReport, ExperimentSpec, Law,
    OutlierClassification, PointKind, TrialOutcome, DENSE_LIMIT,
};
use crate::bounds::{kahan_order, match_points};
use crate::ensembles::{sample_unit_sphere, Field};
use crate::error::{Error, Result};
use crate::laws::{delta_prime, outlier_mp, outlier_wigner, overlap_mp, overlap_wigner, region_contains, Prediction, Region};
use crate::linalg::lowrank::hermitian_plus_low_rank;
use crate::linalg::{eig_general, frobenius_norm, inverse_iteration, ComplexMatrix};
use crate::perturbations::{PerturbationKind, PerturbationMode, PerturbationSpec};
use num_complex::Complex64;
use std::collections::BTreeMap;

const RESIDUAL_GATE: f64 = 1e-8;

fn law_of(spec: &ExperimentSpec) -> Law {
    if spec.ensemble.is_wigner() {
        Law::Wigner
    } else {
        Law::Mp
    }
}

fn require_mode(p: &PerturbationSpec, law: Law) -> Result<()> {
    let want = match law {
        Law::Wigner => PerturbationMode::Additive,
        Law::Mp => PerturbationMode::Multiplicative,
    };
    if p.mode != want && p.declared_rank() > 0 {
        return Err(Error::Config(format!("{law:?} experiments need a {want:?} perturbation")));
    }
    Ok(())
}

/// Nonzero eigenvalues of `P = L R^T`, read off the small matrix `R^T L`.
pub fn perturbation_eigenvalues(p: &PerturbationSpec, n: usize) -> Result<Vec<Complex64>> {
    if let PerturbationKind::Diagonal { values } = &p.kind {
        p.factors(n)?;
        return Ok(values.iter().copied().filter(|v| v.norm() > 0.0).collect());
    }
    let (l, r) = p.factors(n)?;
    let k = l.cols();
    if k == 0 {
        return Ok(Vec::new());
    }
    let small = ComplexMatrix::from_fn(k, k, |a, b| (0..n).map(|i| r[(i, a)] * l[(i, b)]).sum());
    let scale = small.max_abs();
    Ok(eig_general(&small)?.eigenvalues.into_iter().filter(|z| z.norm() > 1e-14 * scale).collect())
}

/// Outlier predictions for the eigenvalues of `P` outside the `δ`-annulus
/// around the unit circle. Eigenvalues inside the annulus are rejected.
pub fn predictions(law: Law, p_eigs: &[Complex64], delta: f64) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for &l in p_eigs {
        if (l.norm() - 1.0).abs() < delta {
            return Err(Error::Config(format!("eigenvalue {l} of P lies within {delta} of the unit circle")));
        }
        if l.norm() >= 1.0 + delta {
            let p = match law {
                Law::Wigner => outlier_wigner(l),
                Law::Mp => outlier_mp(l),
            };
            out.extend(p);
        }
    }
    Ok(out)
}

/// Splits a spectrum at the `δ'`-neighbourhood of the limiting support; the
/// MP bulk also keeps the disk `|z| <= δ'`.
pub fn classify(eigs: &[Complex64], law: Law, delta: f64) -> Result<OutlierClassification> {
    let dp = delta_prime(delta)?;
    let mut outliers = Vec::new();
    let mut bulk = Vec::new();
    for &z in eigs {
        let inside = match law {
            Law::Wigner => region_contains(Region::SemicircleNbhd { delta: dp }, z)?,
            Law::Mp => {
                region_contains(Region::MpNbhd { delta: dp }, z)? || region_contains(Region::Disk { radius: dp }, z)?
            }
        };
        if inside {
            bulk.push(z);
        } else {
            outliers.push(z);
        }
    }
    Ok(OutlierClassification { outliers, bulk, delta_prime: dp })
}

fn spectrum(spec: &ExperimentSpec, seed: crate::ensembles::SeedPlan) -> Result<Vec<Complex64>> {
    let m = sample_hermitian(&spec.ensemble, seed.child(0))?;
    super::perturbed_spectrum(&m, &spec.perturbation)
}

fn max_match_error(found: &[Complex64], predicted: &[Complex64]) -> Result<f64> {
    if found.is_empty() {
        return Ok(0.0);
    }
    let mr = match_points(found, predicted, 1)?;
    Ok(mr.pair_costs.iter().fold(0.0, |a: f64, &b| a.max(b)))
}

fn check_law_matches(spec: &ExperimentSpec, law: Law) -> Result<()> {
    match law {
        Law::Wigner => require_wigner(spec)?,
        Law::Mp => require_covariance(spec)?,
    }
    require_mode(&spec.perturbation, law)
}

/// Counts outliers and matches them to the predicted locations.
pub fn run_outliers(spec: &ExperimentSpec, master_seed: u64, law: Law) -> Result<ExperimentReport> {
    check_law_matches(spec, law)?;
    let n = spec.ensemble.n;
    let delta = spec.params.delta();
    let preds = predictions(law, &perturbation_eigenvalues(&spec.perturbation, n)?, delta)?;
    let targets: Vec<Complex64> = preds.iter().map(|p| p.value).collect();
    let tol = spec.params.match_tol.unwrap_or(match law {
        Law::Wigner => 0.1,
        Law::Mp => 0.2,
    });
    let outcomes = run_trials(spec.trials, master_seed, |seed| {
        let ev = spectrum(spec, seed)?;
        let cls = classify(&ev, law, delta)?;
        let mut o = TrialOutcome::default();
        o.metric("outlier_count", cls.outliers.len() as f64);
        o.metric("bulk_count", cls.bulk.len() as f64);
        if cls.outliers.len() == targets.len() {
            let err = max_match_error(&cls.outliers, &targets)?;
            o.metric("max_match_error", err);
            o.pass = err <= tol;
        } else {
            o.note = Some(format!("found {} outliers, expected {}", cls.outliers.len(), targets.len()));
        }
        o.dump_points(PointKind::Eigenvalue, &ev);
        o.dump_points(PointKind::Prediction, &targets);
        o.classification = Some(cls);
        Ok(o)
    })?;
    let mut summary = BTreeMap::from([
        ("expected_outliers".to_string(), targets.len() as f64),
        ("match_tol".to_string(), tol),
        ("delta_prime".to_string(), delta_prime(delta)?),
    ]);
    for (i, t) in targets.iter().enumerate() {
        summary.insert(format!("prediction_{i}_re"), t.re);
        summary.insert(format!("prediction_{i}_im"), t.im);
    }
    Ok(assemble(spec, master_seed, outcomes, summary, Vec::new()))
}

/// Bulk bounds: `|Im| <= n^(-1+ε)` and `|Re| <= 2 + n^(-2/3+ε)` for Wigner;
/// for MP each bulk point lies in `|z| <= δ'` or has `|Im| <= n^(-1+ε)` and
/// `0 < Re <= 4 + n^(-2/3+ε)`.
pub fn run_bulk_im_bound(spec: &ExperimentSpec, master_seed: u64) -> Result<ExperimentReport> {
    let law = law_of(spec);
    check_law_matches(spec, law)?;
    let n = spec.ensemble.n as f64;
    let delta = spec.params.delta();
    let eps = spec.params.epsilon();
    predictions(law, &perturbation_eigenvalues(&spec.perturbation, spec.ensemble.n)?, delta)?;
    let im_bound = n.powf(-1.0 + eps);
    let edge = n.powf(-2.0 / 3.0 + eps);
    let outcomes = run_trials(spec.trials, master_seed, |seed| {
        let ev = spectrum(spec, seed)?;
        let cls = classify(&ev, law, delta)?;
        let mut o = TrialOutcome::default();
        match law {
            Law::Wigner => {
                let max_im = cls.bulk.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                let max_re = cls.bulk.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
                o.metric("max_bulk_im", max_im);
                o.metric("max_bulk_abs_re", max_re);
                o.pass = max_im <= im_bound && max_re <= 2.0 + edge;
            }
            Law::Mp => {
                let rest: Vec<&Complex64> = cls.bulk.iter().filter(|z| z.norm() > cls.delta_prime).collect();
                let max_im = rest.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                let max_re = rest.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
                let min_re = rest.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
                o.metric("max_bulk_im", max_im);
                o.metric("max_bulk_re", max_re);
                o.metric("min_bulk_re", min_re);
                o.metric("disk_count", (cls.bulk.len() - rest.len()) as f64);
                o.pass = max_im <= im_bound && (rest.is_empty() || (min_re > 0.0 && max_re <= 4.0 + edge));
            }
        }
        o.metric("outlier_count", cls.outliers.len() as f64);
        o.dump_points(PointKind::Eigenvalue, &ev);
        o.classification = Some(cls);
        Ok(o)
    })?;
    let summary = BTreeMap::from([
        ("im_bound".to_string(), im_bound),
        ("re_bound".to_string(), match law {
            Law::Wigner => 2.0 + edge,
            Law::Mp => 4.0 + edge,
        }),
        ("epsilon".to_string(), eps),
    ]);
    Ok(assemble(spec, master_seed, outcomes, summary, Vec::new()))
}

struct OverlapTrial {
    outliers: Vec<Complex64>,
    overlap: Option<f64>,
    residual: f64,
}

fn overlap_trial(m: &ComplexMatrix, u: &[Complex64], theta: Complex64, law: Law, delta: f64) -> Result<OverlapTrial> {
    let n = m.rows();
    let multiplicative = law == Law::Mp;
    let l = ComplexMatrix::from_fn(n, 1, |i, _| theta * u[i]);
    let r = ComplexMatrix::from_fn(n, 1, |i, _| u[i].conj());
    let mut ev;
    let vector: Box<dyn Fn(Complex64) -> Result<(f64, f64)>>;
    if n <= DENSE_LIMIT {
        let p = PerturbationSpec {
            kind: PerturbationKind::RankOne { theta, u: u.to_vec(), v: u.to_vec() },
            mode: if multiplicative { PerturbationMode::Multiplicative } else { PerturbationMode::Additive },
        };
        let a = p.apply(m)?;
        ev = eig_general(&a)?.eigenvalues;
        let scale = frobenius_norm(&a);
        let uu = u.to_vec();
        vector = Box::new(move |z| {
            let (v, res) = inverse_iteration(&a, z)?;
            let dot: Complex64 = uu.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            Ok((dot.norm_sqr(), res / scale.max(f64::MIN_POSITIVE)))
        });
    } else {
        let x = ComplexMatrix::from_fn(n, 1, |i, _| u[i]);
        let (d, proj) = hermitian_plus_low_rank(m, &l, &r, multiplicative, Some(&x))?;
        let uh = proj.expect("extra block requested").column(0);
        ev = d.eigenvalues()?.eigenvalues;
        let scale = d.poles().iter().fold(0.0f64, |a, p| a.max(p.norm())).max(theta.norm());
        vector = Box::new(move |z| {
            let (v, res) = d.eigenvector(z)?;
            let dot: Complex64 = uh.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            let un: f64 = uh.iter().map(|a| a.norm_sqr()).sum();
            Ok((dot.norm_sqr() / un, res / scale.max(f64::MIN_POSITIVE)))
        });
    }
    ev.sort_by(kahan_order);
    let cls = classify(&ev, law, delta)?;
    if cls.outliers.len() != 1 {
        return Ok(OverlapTrial { outliers: cls.outliers, overlap: None, residual: f64::NAN });
    }
    let (ov, res) = vector(cls.outliers[0])?;
    Ok(OverlapTrial { outliers: cls.outliers, overlap: Some(ov), residual: res })
}

/// `|u* v|^2` for the outlier eigenvector of a rank-one spike along a fresh
/// uniform unit vector `u`, compared with its limit.
pub fn run_overlap(spec: &ExperimentSpec, master_seed: u64, law: Law) -> Result<ExperimentReport> {
    match law {
        Law::Wigner => require_wigner(spec)?,
        Law::Mp => require_covariance(spec)?,
    }
    let theta = spec.params.theta();
    let delta = spec.params.delta();
    let n = spec.ensemble.n;
    let limit = match law {
        Law::Wigner => overlap_wigner(theta)?,
        Law::Mp => overlap_mp(theta)?,
    }
    .value
    .re;
    let pred = predictions(law, &[theta], delta)?;
    let location = pred.first().map(|p| p.value).ok_or_else(|| Error::Config("theta gives no outlier".into()))?;
    let tol = spec.params.match_tol.unwrap_or(match law {
        Law::Wigner => 0.1,
        Law::Mp => 0.2,
    });
    let outcomes = run_trials(spec.trials, master_seed, |seed| {
        let m = sample_hermitian(&spec.ensemble, seed.child(0))?;
        let u = sample_unit_sphere(n, Field::Real, seed.child(1))?;
        let t = overlap_trial(&m, &u, theta, law, delta)?;
        let mut o = TrialOutcome::default();
        o.metric("outlier_count", t.outliers.len() as f64);
        if let Some(ov) = t.overlap {
            let z = t.outliers[0];
            o.metric("overlap", ov);
            o.metric("outlier_re", z.re);
            o.metric("outlier_im", z.im);
            o.metric("location_error", (z - location).norm());
            o.metric("residual", t.residual);
            o.pass = (z - location).norm() <= tol && t.residual <= RESIDUAL_GATE;
            if t.residual > RESIDUAL_GATE {
                o.note = Some(format!("eigenvector residual {:e} above gate", t.residual));
            }
        } else {
            o.note = Some(format!("found {} outliers, expected 1", t.outliers.len()));
        }
        o.dump_points(PointKind::Prediction, &[location]);
        Ok(o)
    })?;
    let overlaps: Vec<f64> = outcomes.iter().filter_map(|(_, o)| o.metrics.get("overlap").copied()).collect();
    let mean = if overlaps.is_empty() { f64::NAN } else { overlaps.iter().sum::<f64>() / overlaps.len() as f64 };
    let otol = spec.params.overlap_tol();
    let checks = vec![Check {
        name: "mean_overlap".into(),
        passed: (mean - limit).abs() <= otol,
        detail: format!("mean |u*v|^2 = {mean:.6} vs limit {limit:.6} (tolerance {otol})"),
    }];
    let summary = BTreeMap::from([
        ("mean_overlap".to_string(), mean),
        ("predicted_overlap".to_string(), limit),
        ("predicted_location_re".to_string(), location.re),
        ("predicted_location_im".to_string(), location.im),
    ]);
    Ok(assemble(spec, master_seed, outcomes, summary, checks))
}
