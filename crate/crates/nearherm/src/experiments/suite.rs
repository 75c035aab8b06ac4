use super::{assemble, run_trials, Check, ExperimentReport, ExperimentSpec, TrialOutcome};
use crate::bounds::{hoffman_wielandt_check, kahan_check, sun_check, BoundReport};
use crate::error::Result;
use crate::linalg::{eig_hermitian, ComplexMatrix};
use crate::rng::Xoshiro256pp;
use num_complex::Complex64;
use std::collections::BTreeMap;

const SHARP_TOL: f64 = 1e-12;

/// `M = [[0, 1], [1, 0]]` and `P = [[0, 0], [-1, 0]]`: the paired Kahan
/// bound holds with equality.
pub fn sharpness_pair() -> (ComplexMatrix, ComplexMatrix) {
    let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).expect("finite");
    let p = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, -1.0, 0.0]).expect("finite");
    (m, p)
}

fn gaussian_matrix(n: usize, rng: &mut Xoshiro256pp, s: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(s * rng.next_gaussian(), s * rng.next_gaussian()))
}

fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    a.add(&a.adjoint()).expect("square").scale(Complex64::new(0.5, 0.0))
}

/// Normal matrix `U diag(d) U*` with `U` unitary and complex `d`.
fn random_normal(n: usize, rng: &mut Xoshiro256pp) -> Result<ComplexMatrix> {
    let h = hermitian_part(&gaussian_matrix(n, rng, 1.0));
    let vecs = eig_hermitian(&h)?.eigenvectors.expect("vectors");
    let d: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.next_gaussian(), rng.next_gaussian())).collect();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| (0..n).map(|k| vecs[k][i] * d[k] * vecs[k][j].conj()).sum()))
}

fn ratio(r: &BoundReport) -> f64 {
    if r.rhs > 0.0 {
        r.lhs / r.rhs
    } else if r.lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Kahan, Hoffman–Wielandt and Sun inequalities on random instances of size
/// up to `max_n`, one instance per trial, plus the equality case.
pub fn run_bounds_suite(spec: &ExperimentSpec, master_seed: u64) -> Result<ExperimentReport> {
    let max_n = spec.params.max_n().max(1);
    let outcomes = run_trials(spec.trials, master_seed, |seed| {
        let mut rng = seed.rng();
        let n = 1 + (rng.next_u64() % max_n as u64) as usize;
        let s = 1.0 / (n as f64).sqrt();
        let m = hermitian_part(&gaussian_matrix(n, &mut rng, s));
        let scale = s * (0.1 + rng.next_f64());
        let p = gaussian_matrix(n, &mut rng, scale);
        let (k1, k2, k3) = kahan_check(&m, &p)?;
        let hw = hoffman_wielandt_check(&m, &hermitian_part(&p))?;
        let sun = sun_check(&random_normal(n, &mut rng)?, &p)?;
        let reports = [("kahan_sup", &k1), ("kahan_sum", &k2), ("kahan_paired", &k3), ("hoffman_wielandt", &hw), ("sun", &sun)];
        let mut o = TrialOutcome::default();
        o.metric("n", n as f64);
        let mut violated = Vec::new();
        for (name, r) in reports {
            o.metric(&format!("{name}_ratio"), ratio(r));
            if !r.satisfied {
                violated.push(name);
            }
        }
        o.metric("violations", violated.len() as f64);
        o.pass = violated.is_empty();
        if !violated.is_empty() {
            o.note = Some(format!("violated: {}", violated.join(", ")));
        }
        Ok(o)
    })?;
    let (m, p) = sharpness_pair();
    let (sup, _, paired) = kahan_check(&m, &p)?;
    let sun = sun_check(&m, &p)?;
    let equal = (paired.lhs - 2.0).abs() <= SHARP_TOL && (paired.rhs - 2.0).abs() <= SHARP_TOL;
    let checks = vec![Check {
        name: "kahan_equality".into(),
        passed: equal && sup.satisfied && sun.satisfied,
        detail: format!("paired lhs = {:.15}, rhs = {:.15}", paired.lhs, paired.rhs),
    }];
    let violations: f64 = outcomes.iter().map(|(_, o)| o.metrics["violations"]).sum();
    let summary = BTreeMap::from([
        ("sharp_lhs".to_string(), paired.lhs),
        ("sharp_rhs".to_string(), paired.rhs),
        ("sharp_sup_lhs".to_string(), sup.lhs),
        ("sharp_sup_rhs".to_string(), sup.rhs),
        ("total_violations".to_string(), violations),
    ]);
    Ok(assemble(spec, master_seed, outcomes, summary, checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::EnsembleSpec;
    use crate::experiments::{run, ExperimentKind, Params};
    use crate::perturbations::PerturbationSpec;

    #[test]
    fn small_suite_has_no_violations() {
        let spec = ExperimentSpec::new(ExperimentKind::BoundsSuite, EnsembleSpec::goe(2), PerturbationSpec::zero(), 40)
            .with_params(Params { max_n: Some(12), ..Params::default() });
        let r = run(&spec, 77).unwrap();
        assert_eq!(r.pass_rate(), 1.0);
        assert!(r.passed, "{:?}", r.checks);
        assert_eq!(r.summary["total_violations"], 0.0);
    }

    #[test]
    fn normal_generator_is_normal() {
        let mut rng = Xoshiro256pp::new(1);
        let a = random_normal(6, &mut rng).unwrap();
        let c = a.matmul(&a.adjoint()).unwrap().sub(&a.adjoint().matmul(&a).unwrap()).unwrap();
        assert!(c.max_abs() < 1e-12);
    }
}
