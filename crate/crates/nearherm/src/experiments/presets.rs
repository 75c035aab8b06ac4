//! Figure presets: the captions' ensembles and perturbations with one trial
//! and eigenvalue dumps enabled. Seeds are chosen by the caller.

use super::{ExperimentKind, ExperimentSpec, Params};
use crate::ensembles::{AtomSpec, EnsembleSpec, Family, Normalization};
use crate::perturbations::{PerturbationKind, PerturbationMode, PerturbationSpec};
use num_complex::Complex64;

pub const PRESET_NAMES: [&str; 5] = ["fig1", "fig2", "fig3", "fig4", "fig5"];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn dump() -> Params {
    Params { dump: Some(true), ..Params::default() }
}

/// `diag(3i/2, 1 + i, 2, 0, …)`.
pub fn three_spikes() -> Vec<Complex64> {
    vec![c(0.0, 1.5), c(1.0, 1.0), c(2.0, 0.0)]
}

/// `diag(-3/2, 3i/2, 1 + i, 2, 0, …)`.
pub fn four_spikes() -> Vec<Complex64> {
    vec![c(-1.5, 0.0), c(0.0, 1.5), c(1.0, 1.0), c(2.0, 0.0)]
}

/// `diag(0, …, 0, i)` of size `n`.
pub fn last_diagonal_i(n: usize) -> PerturbationSpec {
    PerturbationSpec {
        kind: PerturbationKind::CornerEntry { row: n - 1, col: n - 1, value: c(0.0, 1.0) },
        mode: PerturbationMode::Additive,
    }
}

pub fn preset(name: &str) -> Option<ExperimentSpec> {
    let spec = match name {
        "fig1" => {
            let n = 100;
            ExperimentSpec::new(ExperimentKind::NonrealWigner, EnsembleSpec::goe(n), last_diagonal_i(n), 1)
        }
        "fig2" => ExperimentSpec::new(
            ExperimentKind::NonrealSampcov,
            EnsembleSpec::gaussian_covariance(30, 100, Normalization::Raw),
            PerturbationSpec::diagonal(vec![c(0.0, 1.0)], PerturbationMode::Multiplicative),
            1,
        ),
        "fig3" => ExperimentSpec::new(
            ExperimentKind::OutliersWigner,
            EnsembleSpec::goe(2000),
            PerturbationSpec::diagonal(three_spikes(), PerturbationMode::Additive),
            1,
        ),
        "fig4" => {
            let ens = EnsembleSpec {
                family: Family::Wigner { offdiag: AtomSpec::STANDARD_GAUSSIAN, diag: AtomSpec::STANDARD_GAUSSIAN },
                n: 50,
                normalization: Normalization::OneOverSqrtN,
            };
            let spec = ExperimentSpec::new(
                ExperimentKind::CriticalPoints,
                ens,
                PerturbationSpec::diagonal(three_spikes(), PerturbationMode::Additive),
                1,
            );
            return Some(spec.with_params(Params {
                kolmogorov_tol: Some(0.2),
                im_tol: Some(0.3),
                match_tol: Some(0.5),
                ..dump()
            }));
        }
        "fig5" => ExperimentSpec::new(
            ExperimentKind::OutliersMp,
            EnsembleSpec::gaussian_covariance(2000, 2000, Normalization::OneOverN),
            PerturbationSpec::diagonal(four_spikes(), PerturbationMode::Multiplicative),
            1,
        ),
        _ => return None,
    };
    Some(spec.with_params(dump()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_resolve_and_validate() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            p.validate().unwrap();
            assert!(p.params.dump());
        }
        assert!(preset("fig6").is_none());
    }

    #[test]
    fn fig3_shape() {
        let p = preset("fig3").unwrap();
        assert_eq!(p.ensemble.n, 2000);
        assert_eq!(p.perturbation.declared_rank(), 3);
    }
}
