use super::{assemble, require_wigner, run_trials, sample_hermitian, Check, ExperimentReport, ExperimentSpec, TrialOutcome};
use crate::ensembles::{Family, SeedPlan};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, poly_from_roots, poly_roots, Polynomial};
use num_complex::Complex64;
use std::collections::BTreeMap;

const HB_STREAM: u64 = 0x4842;

/// Smallest gap in `a_1 > b_1 > a_2 > … > b_{n-1} > a_n` for descending
/// `a` (length `n`) and `b` (length `n - 1`). Positive iff the interlacing
/// is strict.
pub fn interlace_margin(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() + 1 {
        return Err(Error::Contract(format!("interlacing needs lengths n and n-1, got {} and {}", a.len(), b.len())));
    }
    let mut margin = f64::INFINITY;
    for i in 0..b.len() {
        margin = margin.min(a[i] - b[i]).min(b[i] - a[i + 1]);
    }
    Ok(margin)
}

/// One polynomial pair `P + iQ` with known interlacing status.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteBiehlerCase {
    pub p_roots: Vec<f64>,
    pub q_roots: Vec<f64>,
    pub interlacing: bool,
    /// All roots of `P + iQ` strictly inside one open half-plane.
    pub one_half_plane: bool,
}

fn one_half_plane(roots: &[Complex64]) -> bool {
    let tol = |z: &Complex64| 1e-9 * (1.0 + z.norm());
    let up = roots.iter().all(|z| z.im > tol(z));
    let down = roots.iter().all(|z| z.im < -tol(z));
    up || down
}

/// Evaluates `P + iγQ` for monic `P`, `Q` with the given real roots.
pub fn hermite_biehler_case(p_roots: &[f64], q_roots: &[f64], gamma: f64) -> Result<HermiteBiehlerCase> {
    let to_c = |r: &[f64]| r.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
    let p = poly_from_roots(&to_c(p_roots));
    let q = poly_from_roots(&to_c(q_roots)).scale(Complex64::new(0.0, gamma))?;
    let f: Polynomial = p.add(&q).ok_or_else(|| Error::Contract("P + iQ vanished".into()))?;
    let roots = poly_roots(&f)?;
    let mut a = p_roots.to_vec();
    let mut b = q_roots.to_vec();
    a.sort_by(|x, y| y.total_cmp(x));
    b.sort_by(|x, y| y.total_cmp(x));
    let interlacing = a.len() == b.len() + 1 && interlace_margin(&a, &b)? > 0.0;
    Ok(HermiteBiehlerCase { p_roots: a, q_roots: b, interlacing, one_half_plane: one_half_plane(&roots) })
}

/// Alternates interlacing and non-interlacing root sets of degree 2 to 8.
pub fn hermite_biehler_cases(seed: SeedPlan, pairs: usize) -> Result<Vec<HermiteBiehlerCase>> {
    let mut rng = seed.rng();
    let mut out = Vec::with_capacity(pairs);
    for i in 0..pairs {
        let d = 2 + (rng.next_u64() % 7) as usize;
        let mut a = vec![rng.next_gaussian()];
        for _ in 1..d {
            let last = *a.last().expect("nonempty");
            a.push(last + 0.2 + rng.next_f64());
        }
        let mut b: Vec<f64> = (0..d - 1).map(|j| a[j] + (0.2 + 0.6 * rng.next_f64()) * (a[j + 1] - a[j])).collect();
        if i % 2 == 1 {
            if d == 2 || i % 4 == 1 {
                let j = d - 2;
                b[j] = a[d - 1] + 0.3 + rng.next_f64();
            } else {
                // Two roots of Q in the first gap.
                b[1] = a[0] + (0.2 + 0.6 * rng.next_f64()) * (a[1] - a[0]);
                if (b[1] - b[0]).abs() < 1e-3 {
                    b[1] = 0.5 * (b[0] + a[1]);
                }
            }
        }
        let gamma = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 } * (0.5 + rng.next_f64());
        out.push(hermite_biehler_case(&a, &b, gamma)?);
    }
    Ok(out)
}

/// Strict interlacing of a Wigner matrix with its leading minor, plus the
/// Hermite–Biehler equivalence on constructed polynomial pairs.
pub fn run_interlacing(spec: &ExperimentSpec, master_seed: u64) -> Result<ExperimentReport> {
    require_wigner(spec)?;
    if let Family::Wigner { offdiag, diag } = spec.ensemble.expanded_family() {
        if !(offdiag.is_absolutely_continuous() && diag.is_absolutely_continuous()) {
            return Err(Error::Precondition("interlacing needs absolutely continuous atoms".into()));
        }
    }
    let n = spec.ensemble.n;
    if n < 2 {
        return Err(Error::Config("interlacing needs n >= 2".into()));
    }
    let outcomes = run_trials(spec.trials, master_seed, |seed| {
        let w = sample_hermitian(&spec.ensemble, seed.child(0))?;
        let a = hermitian_eigenvalues(&w)?;
        let b = hermitian_eigenvalues(&w.leading_minor(n - 1))?;
        let margin = interlace_margin(&a, &b)?;
        let mut o = TrialOutcome::default();
        o.metric("min_margin", margin);
        o.pass = margin > 0.0;
        Ok(o)
    })?;
    let pairs = spec.params.hb_pairs();
    let cases = hermite_biehler_cases(SeedPlan::new(master_seed, HB_STREAM), pairs)?;
    let agree = cases.iter().filter(|c| c.interlacing == c.one_half_plane).count();
    let inter = cases.iter().filter(|c| c.interlacing).count();
    let summary = BTreeMap::from([
        ("hb_pairs".to_string(), pairs as f64),
        ("hb_agreements".to_string(), agree as f64),
        ("hb_interlacing_pairs".to_string(), inter as f64),
    ]);
    let checks = vec![Check {
        name: "hermite_biehler".into(),
        passed: agree == pairs && inter > 0 && inter < pairs.max(2),
        detail: format!("{agree}/{pairs} pairs agree ({inter} interlacing)"),
    }];
    Ok(assemble(spec, master_seed, outcomes, summary, checks))
}
