use super::{assemble, low_rank_frobenius, require_covariance, require_wigner, run_trials, sample_hermitian, ExperimentReport, ExperimentSpec, Law, PointKind, TrialOutcome};
use crate::bounds::kolmogorov_distance;
use crate::ensembles::Family;
use crate::error::{Error, Result};
use crate::laws::{mp_cdf, semicircle_cdf};
use std::collections::BTreeMap;

/// Kolmogorov distance of the real parts to the limiting CDF and the mass of
/// eigenvalues with `|Im|` above the weak tolerance.
pub fn run_global_law(spec: &ExperimentSpec, master_seed: u64, law: Law) -> Result<ExperimentReport> {
    match law {
        Law::Wigner => require_wigner(spec)?,
        Law::Mp => {
            require_covariance(spec)?;
            if let Family::SampleCovariance { m, n, .. } = spec.ensemble.expanded_family() {
                if m != n {
                    return Err(Error::Config("global_law_mp compares against the ratio-one law and needs m = n".into()));
                }
            }
        }
    }
    let n = spec.ensemble.n;
    let (l, r) = spec.perturbation.factors(n)?;
    let gate = low_rank_frobenius(&l, &r) / (n as f64).sqrt();
    let rank = spec.perturbation.declared_rank();
    let ktol = spec.params.kolmogorov_tol();
    let wtol = spec.params.weak_im_tol();
    let mass_tol = rank as f64 / n as f64 + spec.params.nonreal_mass_slack();
    let cdf: fn(f64) -> f64 = match law {
        Law::Wigner => semicircle_cdf,
        Law::Mp => mp_cdf,
    };
    let outcomes = run_trials(spec.trials, master_seed, |seed| {
        let m = sample_hermitian(&spec.ensemble, seed.child(0))?;
        let ev = super::perturbed_spectrum(&m, &spec.perturbation)?;
        let re: Vec<f64> = ev.iter().map(|z| z.re).collect();
        let kd = kolmogorov_distance(&re, cdf)?;
        let mass = ev.iter().filter(|z| z.im.abs() > wtol).count() as f64 / n as f64;
        let mut o = TrialOutcome::default();
        o.metric("kolmogorov", kd);
        o.metric("nonreal_mass", mass);
        o.pass = kd <= ktol && mass <= mass_tol;
        o.dump_points(PointKind::Eigenvalue, &ev);
        Ok(o)
    })?;
    let summary = BTreeMap::from([
        ("p_frobenius_over_sqrt_n".to_string(), gate),
        ("nonreal_mass_tol".to_string(), mass_tol),
        ("kolmogorov_tol".to_string(), ktol),
    ]);
    Ok(assemble(spec, master_seed, outcomes, summary, Vec::new()))
}
