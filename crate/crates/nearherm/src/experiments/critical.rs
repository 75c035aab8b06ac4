use super::outliers::{classify, perturbation_eigenvalues, predictions};
use super::{assemble, require_wigner, run_trials, sample_hermitian, ExperimentReport, ExperimentSpec, Law, PointKind, TrialOutcome, DENSE_LIMIT};
use crate::bounds::{kahan_order, kolmogorov_distance};
use crate::error::{Error, Result};
use crate::laws::{region_contains, semicircle_cdf, Region};
use crate::linalg::lowrank::DiagonalPlusLowRank;
use crate::linalg::{critical_companion, eig_general, ComplexMatrix};
use crate::perturbations::PerturbationMode;
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Critical points of `∏ (z - x_i)` as the spectrum of `D (I - J/n)` with
/// the adjoined zero removed (the single eigenvalue of smallest modulus).
pub fn critical_points(roots: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = roots.len();
    if n < 2 {
        return Err(Error::Config("critical points need at least two roots".into()));
    }
    let mut ev = if n <= DENSE_LIMIT {
        eig_general(&critical_companion(roots)?)?.eigenvalues
    } else {
        let nf = n as f64;
        let left = ComplexMatrix::from_fn(n, 1, |i, _| -roots[i] / nf);
        let right = ComplexMatrix::from_fn(n, 1, |_, _| Complex64::new(1.0, 0.0));
        DiagonalPlusLowRank::new(roots.to_vec(), left, right)?.eigenvalues()?.eigenvalues
    };
    let smallest = (0..n).min_by(|&a, &b| ev[a].norm().total_cmp(&ev[b].norm())).expect("n >= 2");
    ev.remove(smallest);
    ev.sort_by(kahan_order);
    Ok(ev)
}

/// Critical points against the semicircle: Kolmogorov distance of their real
/// parts, `|Im|` of the non-outlier ones, and proximity of outlier critical
/// points to outlier eigenvalues.
pub fn run_critical_points(spec: &ExperimentSpec, master_seed: u64) -> Result<ExperimentReport> {
    require_wigner(spec)?;
    if spec.perturbation.mode != PerturbationMode::Additive && spec.perturbation.declared_rank() > 0 {
        return Err(Error::Config("critical_points needs an additive perturbation".into()));
    }
    let n = spec.ensemble.n;
    let delta = spec.params.delta();
    let preds = predictions(Law::Wigner, &perturbation_eigenvalues(&spec.perturbation, n)?, delta)?;
    let centers: Vec<Complex64> = preds.iter().map(|p| p.value).collect();
    let ktol = spec.params.kolmogorov_tol();
    let itol = spec.params.im_tol();
    let mtol = spec.params.match_tol.unwrap_or(0.5);
    let outcomes = run_trials(spec.trials, master_seed, |seed| {
        let m = sample_hermitian(&spec.ensemble, seed.child(0))?;
        let ev = super::perturbed_spectrum(&m, &spec.perturbation)?;
        let crit = critical_points(&ev)?;
        let cls = classify(&ev, Law::Wigner, delta)?;
        let nbhd = Region::SemicircleNbhd { delta: cls.delta_prime };
        let mut inner = Vec::new();
        let mut outer = Vec::new();
        for &z in &crit {
            if region_contains(nbhd, z)? {
                inner.push(z);
            } else {
                outer.push(z);
            }
        }
        let re: Vec<f64> = crit.iter().map(|z| z.re).collect();
        let kd = kolmogorov_distance(&re, semicircle_cdf)?;
        let max_im = inner.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let worst = outer
            .iter()
            .map(|z| cls.outliers.iter().map(|o| (z - o).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        let mut o = TrialOutcome::default();
        o.metric("kolmogorov", kd);
        o.metric("max_inner_im", max_im);
        o.metric("outlier_critical_count", outer.len() as f64);
        o.metric("outlier_eigenvalue_count", cls.outliers.len() as f64);
        o.metric("max_outlier_critical_distance", worst);
        o.pass = kd <= ktol && max_im <= itol && worst <= mtol;
        o.dump_points(PointKind::Eigenvalue, &ev);
        o.dump_points(PointKind::CriticalPoint, &crit);
        o.dump_points(PointKind::CircleCenter, &centers);
        Ok(o)
    })?;
    let summary = BTreeMap::from([
        ("kolmogorov_tol".to_string(), ktol),
        ("im_tol".to_string(), itol),
        ("match_tol".to_string(), mtol),
    ]);
    Ok(assemble(spec, master_seed, outcomes, summary, Vec::new()))
}
