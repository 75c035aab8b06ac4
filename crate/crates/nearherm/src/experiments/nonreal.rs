use super::{assemble, perturbed_spectrum, require_covariance, require_wigner, run_trials, sample_hermitian, Check, ExperimentReport, ExperimentSpec, PointKind, TrialOutcome};
use crate::bounds::match_points;
use crate::ensembles::Family;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix};
use crate::perturbations::{construct_nonreal_vector, PerturbationKind, PerturbationMode, PerturbationSpec};
use num_complex::Complex64;
use std::collections::BTreeMap;

const TRACE_TOL: f64 = 1e-8;
const SHARED_TOL: f64 = 1e-7;
const SIDE_TOL: f64 = 1e-9;

/// The single nonzero diagonal entry `iγ` of a perturbation, with its index.
fn single_imaginary_entry(p: &PerturbationSpec, n: usize) -> Result<(usize, f64)> {
    let dense = p.build(n)?;
    let nz: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| dense[(i, j)] != Complex64::new(0.0, 0.0))
        .collect();
    match nz.as_slice() {
        [(i, j)] if i == j && dense[(*i, *i)].re == 0.0 => Ok((*i, dense[(*i, *i)].im)),
        _ => Err(Error::Config("perturbation must be a single diagonal entry iγ with γ real and nonzero".into())),
    }
}

fn trace_defect(m: &ComplexMatrix, p: &PerturbationSpec, ev: &[Complex64]) -> Result<f64> {
    let tr = p.apply(m)?.trace().im;
    Ok((ev.iter().map(|z| z.im).sum::<f64>() - tr).abs())
}

/// All eigenvalues of `W/√n + diag(0, …, iγ)` lie on the side of `γ`.
pub fn run_nonreal_wigner(spec: &ExperimentSpec, master_seed: u64) -> Result<ExperimentReport> {
    require_wigner(spec)?;
    let n = spec.ensemble.n;
    if spec.perturbation.mode != PerturbationMode::Additive {
        return Err(Error::Config("nonreal_wigner needs an additive perturbation".into()));
    }
    let (_, gamma) = single_imaginary_entry(&spec.perturbation, n)?;
    let sign = gamma.signum();
    let outcomes = run_trials(spec.trials, master_seed, |seed| {
        let m = sample_hermitian(&spec.ensemble, seed.child(0))?;
        let ev = perturbed_spectrum(&m, &spec.perturbation)?;
        let signed_min = ev.iter().map(|z| z.im * sign).fold(f64::INFINITY, f64::min);
        let min_abs = ev.iter().map(|z| z.im.abs()).fold(f64::INFINITY, f64::min);
        let wrong = ev.iter().filter(|z| z.im * sign <= 0.0).count();
        let defect = trace_defect(&m, &spec.perturbation, &ev)?;
        let mut o = TrialOutcome::default();
        o.metric("min_abs_im", min_abs);
        o.metric("min_signed_im", signed_min);
        o.metric("wrong_side", wrong as f64);
        o.metric("trace_defect", defect);
        o.pass = wrong == 0 && defect <= TRACE_TOL * n as f64;
        o.dump_points(PointKind::Eigenvalue, &ev);
        Ok(o)
    })?;
    let summary = BTreeMap::from([("gamma".to_string(), gamma)]);
    Ok(assemble(spec, master_seed, outcomes, summary, Vec::new()))
}

/// `S (I + iγ v v*)` with `v` a standard basis vector has `min(m, n)`
/// eigenvalues on the side of `γ` and the rest at zero.
pub fn run_nonreal_sampcov(spec: &ExperimentSpec, master_seed: u64) -> Result<ExperimentReport> {
    require_covariance(spec)?;
    let (atom, m_rows) = match spec.ensemble.expanded_family() {
        Family::SampleCovariance { atom, m, .. } => (atom, m),
        _ => unreachable!("checked"),
    };
    if !atom.is_absolutely_continuous() {
        return Err(Error::Precondition("nonreal_sampcov needs an absolutely continuous atom".into()));
    }
    if spec.perturbation.mode != PerturbationMode::Multiplicative {
        return Err(Error::Config("nonreal_sampcov needs a multiplicative perturbation".into()));
    }
    let n = spec.ensemble.n;
    let (_, gamma) = single_imaginary_entry(&spec.perturbation, n)?;
    let sign = gamma.signum();
    let r = m_rows.min(n);
    let zero_rel = spec.params.zero_tol();
    let outcomes = run_trials(spec.trials, master_seed, |seed| {
        let s = sample_hermitian(&spec.ensemble, seed.child(0))?;
        let norm = hermitian_eigenvalues(&s)?.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let tol = zero_rel * norm;
        let ev = perturbed_spectrum(&s, &spec.perturbation)?;
        let zeros: Vec<&Complex64> = ev.iter().filter(|z| z.norm() <= tol).collect();
        let side: Vec<&Complex64> = ev.iter().filter(|z| z.norm() > tol && z.im * sign > 0.0).collect();
        let mut o = TrialOutcome::default();
        o.metric("zero_count", zeros.len() as f64);
        o.metric("side_count", side.len() as f64);
        o.metric("min_signed_im", side.iter().map(|z| z.im * sign).fold(f64::INFINITY, f64::min));
        o.metric("max_zero_abs", zeros.iter().map(|z| z.norm()).fold(0.0, f64::max));
        o.metric("norm_s", norm);
        o.pass = zeros.len() == n - r && side.len() == r;
        o.dump_points(PointKind::Eigenvalue, &ev);
        Ok(o)
    })?;
    let summary = BTreeMap::from([("gamma".to_string(), gamma), ("r".to_string(), r as f64)]);
    Ok(assemble(spec, master_seed, outcomes, summary, Vec::new()))
}

/// Result of the deterministic construction on one Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicOutcome {
    pub additive_side: usize,
    pub additive_shared_error: f64,
    pub additive_trace_defect: f64,
    /// `None` when the selected eigenvalues are not all positive.
    pub multiplicative_side: Option<usize>,
    pub multiplicative_shared_error: Option<f64>,
    pub k: usize,
    pub norm: f64,
    pub eigenvalues: Vec<Complex64>,
}

impl DeterministicOutcome {
    pub fn passed(&self) -> bool {
        let add = self.additive_side == self.k && self.additive_shared_error <= SHARED_TOL * self.norm;
        let mult = match (self.multiplicative_side, self.multiplicative_shared_error) {
            (Some(s), Some(e)) => s == self.k && e <= SHARED_TOL * self.norm,
            _ => true,
        };
        add && mult
    }
}

fn side_and_shared(ev: &[Complex64], shared: &[f64], sign: f64, norm: f64) -> Result<(usize, f64)> {
    let tol = SIDE_TOL * norm.max(f64::MIN_POSITIVE);
    let side = ev.iter().filter(|z| z.im * sign > tol).count();
    let rest: Vec<Complex64> = ev.iter().copied().filter(|z| z.im * sign <= tol).collect();
    if rest.len() != shared.len() {
        return Ok((side, f64::INFINITY));
    }
    if rest.is_empty() {
        return Ok((side, 0.0));
    }
    let want: Vec<Complex64> = shared.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mr = match_points(&rest, &want, 1)?;
    Ok((side, mr.pair_costs.iter().fold(0.0, |a: f64, &b| a.max(b))))
}

/// Moves the top `k` eigenvalues of `m` off the real axis with `M + i u v*`
/// and, when they are positive, with `M (I + iγ v v*)`; counts the
/// eigenvalues on each side and matches the rest against `M`.
pub fn nonreal_deterministic_check(
    m: &ComplexMatrix,
    k: usize,
    z: &[Complex64],
    a: &[f64],
    gamma: f64,
) -> Result<DeterministicOutcome> {
    let n = m.rows();
    let nv = construct_nonreal_vector(m, k, z, a)?;
    let norm = nv.selected.iter().chain(&nv.shared).fold(0.0f64, |s, x| s.max(x.abs()));
    let sign = a[0].signum();
    let iu: Vec<Complex64> = nv.u.iter().map(|x| x * Complex64::i()).collect();
    let add = PerturbationSpec {
        kind: PerturbationKind::RankOne { theta: Complex64::new(1.0, 0.0), u: iu, v: nv.v.clone() },
        mode: PerturbationMode::Additive,
    };
    let ev = perturbed_spectrum(m, &add)?;
    let (additive_side, additive_shared_error) = side_and_shared(&ev, &nv.shared, sign, norm)?;
    let additive_trace_defect = trace_defect(m, &add, &ev)?;
    let positive = nv.selected.iter().all(|&x| x > SIDE_TOL * norm);
    let (multiplicative_side, multiplicative_shared_error) = if positive && gamma != 0.0 {
        let mult = PerturbationSpec {
            kind: PerturbationKind::RankOne { theta: Complex64::new(0.0, gamma), u: nv.v.clone(), v: nv.v.clone() },
            mode: PerturbationMode::Multiplicative,
        };
        let ev = perturbed_spectrum(m, &mult)?;
        let (s, e) = side_and_shared(&ev, &nv.shared, gamma.signum(), norm)?;
        (Some(s), Some(e))
    } else {
        (None, None)
    };
    debug_assert_eq!(ev.len(), n);
    Ok(DeterministicOutcome {
        additive_side,
        additive_shared_error,
        additive_trace_defect,
        multiplicative_side,
        multiplicative_shared_error,
        k,
        norm,
        eigenvalues: ev,
    })
}

pub fn run_nonreal_deterministic(spec: &ExperimentSpec, master_seed: u64) -> Result<ExperimentReport> {
    let n = spec.ensemble.n;
    let k = spec.params.k.unwrap_or(n);
    let gamma = spec.params.gamma();
    if gamma == 0.0 {
        return Err(Error::Config("gamma must be nonzero".into()));
    }
    let z = spec.params.z.clone().unwrap_or_else(|| vec![Complex64::new(1.0, 0.0); k]);
    let a = spec.params.a.clone().unwrap_or_else(|| vec![gamma; k]);
    let outcomes = run_trials(spec.trials, master_seed, |seed| {
        let m = sample_hermitian(&spec.ensemble, seed.child(0))?;
        let d = nonreal_deterministic_check(&m, k, &z, &a, gamma)?;
        let mut o = TrialOutcome::default();
        o.metric("additive_side", d.additive_side as f64);
        o.metric("additive_shared_error", d.additive_shared_error);
        o.metric("additive_trace_defect", d.additive_trace_defect);
        if let (Some(s), Some(e)) = (d.multiplicative_side, d.multiplicative_shared_error) {
            o.metric("multiplicative_side", s as f64);
            o.metric("multiplicative_shared_error", e);
        }
        o.pass = d.passed() && d.additive_trace_defect <= TRACE_TOL * n as f64;
        o.dump_points(PointKind::Eigenvalue, &d.eigenvalues);
        Ok(o)
    })?;
    let summary = BTreeMap::from([("k".to_string(), k as f64), ("gamma".to_string(), gamma)]);
    Ok(assemble(spec, master_seed, outcomes, summary, Vec::<Check>::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{AtomSpec, EnsembleSpec, Normalization};
    use crate::experiments::{run, ExperimentKind};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn last_entry(n: usize, gamma: f64) -> PerturbationSpec {
        let mut v = vec![c(0.0, 0.0); n];
        v[n - 1] = c(0.0, gamma);
        PerturbationSpec::diagonal(v, PerturbationMode::Additive)
    }

    #[test]
    fn goe_all_upper_and_reflected() {
        for gamma in [1.0, -1.0] {
            let spec = ExperimentSpec::new(ExperimentKind::NonrealWigner, EnsembleSpec::goe(60), last_entry(60, gamma), 5);
            let r = run(&spec, 11).unwrap();
            assert_eq!(r.pass_rate(), 1.0);
            assert!(r.per_trial.iter().all(|t| t.metrics["min_signed_im"] > 0.0));
        }
    }

    #[test]
    fn rejects_non_imaginary_perturbation() {
        let p = PerturbationSpec::diagonal(vec![c(1.0, 0.0)], PerturbationMode::Additive);
        let spec = ExperimentSpec::new(ExperimentKind::NonrealWigner, EnsembleSpec::goe(5), p, 1);
        assert!(matches!(run(&spec, 1), Err(Error::Config(_))));
    }

    #[test]
    fn degenerate_atom_rejected() {
        let ens = EnsembleSpec {
            family: Family::Wigner {
                offdiag: AtomSpec::Gaussian { mean: 0.0, variance: 0.0 },
                diag: AtomSpec::STANDARD_GAUSSIAN,
            },
            n: 5,
            normalization: Normalization::OneOverSqrtN,
        };
        let spec = ExperimentSpec::new(ExperimentKind::NonrealWigner, ens, last_entry(5, 1.0), 1);
        assert!(run(&spec, 1).is_err());
    }

    #[test]
    fn sampcov_counts() {
        let ens = EnsembleSpec::gaussian_covariance(6, 15, Normalization::Raw);
        for gamma in [1.0, -1.0] {
            let p = PerturbationSpec::diagonal(vec![c(0.0, gamma)], PerturbationMode::Multiplicative);
            let spec = ExperimentSpec::new(ExperimentKind::NonrealSampcov, ens, p, 4);
            let r = run(&spec, 5).unwrap();
            assert_eq!(r.pass_rate(), 1.0);
            assert!(r.per_trial.iter().all(|t| t.metrics["zero_count"] == 9.0 && t.metrics["side_count"] == 6.0));
        }
    }

    #[test]
    fn sampcov_rejects_discrete_atom() {
        let ens = EnsembleSpec {
            family: Family::SampleCovariance { atom: AtomSpec::Rademacher, m: 3, n: 5 },
            n: 5,
            normalization: Normalization::Raw,
        };
        let p = PerturbationSpec::diagonal(vec![c(0.0, 1.0)], PerturbationMode::Multiplicative);
        let spec = ExperimentSpec::new(ExperimentKind::NonrealSampcov, ens, p, 1);
        assert!(matches!(run(&spec, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn explicit_diagonal_matrix() {
        let m = ComplexMatrix::from_diag(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        let d = nonreal_deterministic_check(&m, 2, &[c(1.0, 0.0); 2], &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(d.additive_side, 2);
        assert!(d.additive_shared_error < 1e-12);
        assert_eq!(d.multiplicative_side, Some(2));
        assert!(d.passed());
        let d = nonreal_deterministic_check(&m, 2, &[c(1.0, 0.0); 2], &[-1.0, -1.0], -1.0).unwrap();
        assert!(d.passed());
        assert!(d.eigenvalues.iter().filter(|z| z.im < -1e-12).count() == 2);
    }

    #[test]
    fn deterministic_full_k() {
        let mut p = crate::experiments::Params::default();
        p.k = Some(12);
        let spec = ExperimentSpec::new(ExperimentKind::NonrealDeterministic, EnsembleSpec::goe(12), PerturbationSpec::zero(), 3)
            .with_params(p);
        let r = run(&spec, 2).unwrap();
        assert_eq!(r.pass_rate(), 1.0);
        let mut p = crate::experiments::Params::default();
        p.k = Some(3);
        p.gamma = Some(-0.5);
        let spec = ExperimentSpec::new(ExperimentKind::NonrealDeterministic, EnsembleSpec::goe(30), PerturbationSpec::zero(), 3)
            .with_params(p);
        let r = run(&spec, 2).unwrap();
        assert_eq!(r.pass_rate(), 1.0);
        assert!(r.per_trial.iter().all(|t| t.metrics.contains_key("multiplicative_side")));
    }
}
