//! Deterministic perturbations and the all-nonreal vector construction.

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationKind {
    /// Leading diagonal entries; the rest of the diagonal is zero.
    Diagonal { values: Vec<Complex64> },
    /// `θ u v*`.
    RankOne { theta: Complex64, u: Vec<Complex64>, v: Vec<Complex64> },
    /// `A B` with `A` given as `n` rows of length `k` and `B` as `k` rows of length `n`.
    LowRankFactors { a: Vec<Vec<Complex64>>, b: Vec<Vec<Complex64>> },
    CornerEntry { row: usize, col: usize, value: Complex64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationMode {
    #[default]
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    #[serde(flatten)]
    pub kind: PerturbationKind,
    #[serde(default)]
    pub mode: PerturbationMode,
}

impl PerturbationSpec {
    pub fn zero() -> Self {
        Self::diagonal(Vec::new(), PerturbationMode::Additive)
    }

    pub fn diagonal(values: Vec<Complex64>, mode: PerturbationMode) -> Self {
        Self { kind: PerturbationKind::Diagonal { values }, mode }
    }

    pub fn rank_one(theta: Complex64, u: Vec<Complex64>, v: Vec<Complex64>, mode: PerturbationMode) -> Self {
        Self { kind: PerturbationKind::RankOne { theta, u, v }, mode }
    }

    pub fn is_multiplicative(&self) -> bool {
        self.mode == PerturbationMode::Multiplicative
    }

    /// Upper bound on the rank of the realized matrix.
    pub fn declared_rank(&self) -> usize {
        match &self.kind {
            PerturbationKind::Diagonal { values } => values.iter().filter(|v| **v != ZERO).count(),
            PerturbationKind::RankOne { .. } | PerturbationKind::CornerEntry { .. } => 1,
            PerturbationKind::LowRankFactors { b, .. } => b.len(),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match &self.kind {
            PerturbationKind::Diagonal { values } => {
                if values.len() > n {
                    return bad(format!("diagonal has {} values for n = {n}", values.len()));
                }
            }
            PerturbationKind::RankOne { u, v, .. } => {
                if u.len() != n || v.len() != n {
                    return bad(format!("rank-one vectors have lengths {}, {} for n = {n}", u.len(), v.len()));
                }
            }
            PerturbationKind::LowRankFactors { a, b } => {
                let k = b.len();
                if a.len() != n || a.iter().any(|r| r.len() != k) || b.iter().any(|r| r.len() != n) {
                    return bad(format!("low-rank factors are not n x k and k x n with n = {n}, k = {k}"));
                }
            }
            PerturbationKind::CornerEntry { row, col, .. } => {
                if *row >= n || *col >= n {
                    return bad(format!("entry ({row}, {col}) out of range for n = {n}"));
                }
            }
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        let all_finite = match &self.kind {
            PerturbationKind::Diagonal { values } => values.iter().all(finite),
            PerturbationKind::RankOne { theta, u, v } => finite(theta) && u.iter().chain(v).all(finite),
            PerturbationKind::LowRankFactors { a, b } => a.iter().chain(b).flatten().all(finite),
            PerturbationKind::CornerEntry { value, .. } => finite(value),
        };
        if !all_finite {
            return bad("perturbation has non-finite entries".into());
        }
        Ok(())
    }

    /// Factors with `P = L R^T`, both `n x r`.
    pub fn factors(&self, n: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
        self.check(n)?;
        Ok(match &self.kind {
            PerturbationKind::Diagonal { values } => {
                let idx: Vec<usize> = (0..values.len()).filter(|&i| values[i] != ZERO).collect();
                let l = ComplexMatrix::from_fn(n, idx.len(), |i, j| if i == idx[j] { values[i] } else { ZERO });
                let r = ComplexMatrix::from_fn(n, idx.len(), |i, j| if i == idx[j] { ONE } else { ZERO });
                (l, r)
            }
            PerturbationKind::RankOne { theta, u, v } => (
                ComplexMatrix::from_fn(n, 1, |i, _| theta * u[i]),
                ComplexMatrix::from_fn(n, 1, |i, _| v[i].conj()),
            ),
            PerturbationKind::LowRankFactors { a, b } => {
                let k = b.len();
                (ComplexMatrix::from_fn(n, k, |i, j| a[i][j]), ComplexMatrix::from_fn(n, k, |i, j| b[j][i]))
            }
            PerturbationKind::CornerEntry { row, col, value } => (
                ComplexMatrix::from_fn(n, 1, |i, _| if i == *row { *value } else { ZERO }),
                ComplexMatrix::from_fn(n, 1, |i, _| if i == *col { ONE } else { ZERO }),
            ),
        })
    }

    /// Dense `n x n` realization of `P`.
    pub fn build(&self, n: usize) -> Result<ComplexMatrix> {
        let (l, r) = self.factors(n)?;
        Ok(ComplexMatrix::from_fn(n, n, |i, j| (0..l.cols()).map(|c| l[(i, c)] * r[(j, c)]).sum()))
    }

    /// `M + P` (additive) or `M (I + P)` (multiplicative).
    pub fn apply(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        if !m.is_square() {
            return Err(Error::Config(format!("matrix is {} x {}, not square", m.rows(), m.cols())));
        }
        let p = self.build(m.rows())?;
        match self.mode {
            PerturbationMode::Additive => m.add(&p),
            PerturbationMode::Multiplicative => m.add(&m.matmul(&p)?),
        }
    }
}

/// Vectors for `M + i u v*` together with the eigenvalues of `M` they leave
/// fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct NonrealVectors {
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    /// Eigenvalues carried off the real line, descending.
    pub selected: Vec<f64>,
    /// Eigenvalues shared by `M` and `M + i u v*`, descending.
    pub shared: Vec<f64>,
}

/// Unit eigenvector with its largest-magnitude coordinate rotated onto the
/// positive real axis.
fn canonical_phase(mut w: Vec<Complex64>) -> Vec<Complex64> {
    let mut best = 0;
    for i in 1..w.len() {
        if w[i].norm() > w[best].norm() {
            best = i;
        }
    }
    let p = w[best];
    if p != ZERO {
        let rot = p.conj() / p.norm();
        for x in &mut w {
            *x *= rot;
        }
    }
    w
}

/// Builds `v = Σ z_j w_j` and `u = Σ a_j z_j w_j` over the `k` largest
/// eigenvalues of the Hermitian `m`.
pub fn construct_nonreal_vector(m: &ComplexMatrix, k: usize, z: &[Complex64], a: &[f64]) -> Result<NonrealVectors> {
    let n = m.rows();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k = {k} outside 1..={n}")));
    }
    if z.len() != k || a.len() != k {
        return Err(Error::Config(format!("need {k} mixing coefficients, got z: {}, a: {}", z.len(), a.len())));
    }
    if z.iter().any(|x| *x == ZERO || !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::Precondition("mixing coefficients z_j must be nonzero".into()));
    }
    let pos = a.iter().all(|&x| x > 0.0);
    let neg = a.iter().all(|&x| x < 0.0);
    if !(pos || neg) || a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition("weights a_j must share one strict sign".into()));
    }
    let spec = eig_hermitian(m)?;
    let values: Vec<f64> = spec.eigenvalues.iter().map(|x| x.re).collect();
    let norm = values.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    let gap_tol = 1e-9 * norm;
    for i in 0..k {
        for j in i + 1..k {
            if (values[i] - values[j]).abs() <= gap_tol {
                return Err(Error::Precondition(format!(
                    "selected eigenvalues {} and {} are not distinct (gap tolerance {gap_tol:e})",
                    values[i], values[j]
                )));
            }
        }
    }
    let vectors = spec.eigenvectors.expect("eig_hermitian returns vectors");
    let mut u = vec![ZERO; n];
    let mut v = vec![ZERO; n];
    for j in 0..k {
        let w = canonical_phase(vectors[j].clone());
        for i in 0..n {
            v[i] += z[j] * w[i];
            u[i] += a[j] * z[j] * w[i];
        }
    }
    Ok(NonrealVectors { u, v, selected: values[..k].to_vec(), shared: values[k..].to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::match_points;
    use crate::linalg::{determinant, eig_general};
    use crate::rng::Xoshiro256pp;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut Xoshiro256pp) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(rng.next_gaussian(), 0.0);
            for j in i + 1..n {
                let x = c(rng.next_gaussian(), rng.next_gaussian());
                m[(i, j)] = x;
                m[(j, i)] = x.conj();
            }
        }
        m
    }

    fn plus_iuv(m: &ComplexMatrix, nv: &NonrealVectors) -> ComplexMatrix {
        let iu: Vec<Complex64> = nv.u.iter().map(|x| x * c(0.0, 1.0)).collect();
        m.add(&ComplexMatrix::outer(&iu, &nv.v)).unwrap()
    }

    #[test]
    fn build_basic_kinds() {
        let p = PerturbationSpec::diagonal(vec![ZERO, ZERO, c(0.0, 1.0)], PerturbationMode::Additive);
        assert_eq!(p.build(3).unwrap(), ComplexMatrix::from_diag(&[ZERO, ZERO, c(0.0, 1.0)]));
        let e1 = vec![ONE, ZERO];
        let p = PerturbationSpec::rank_one(ONE, e1.clone(), e1, PerturbationMode::Additive);
        assert_eq!(p.build(2).unwrap(), ComplexMatrix::from_diag(&[ONE, ZERO]));
        let p = PerturbationSpec {
            kind: PerturbationKind::CornerEntry { row: 0, col: 2, value: c(0.5, 0.0) },
            mode: PerturbationMode::Additive,
        };
        let b = p.build(3).unwrap();
        assert_eq!(b[(0, 2)], c(0.5, 0.0));
        assert_eq!(b.data().iter().filter(|x| **x != ZERO).count(), 1);
    }

    #[test]
    fn fig3_diagonal_has_rank_three_and_norm_two() {
        let vals = vec![c(0.0, 1.5), c(1.0, 1.0), c(2.0, 0.0)];
        let p = PerturbationSpec::diagonal(vals, PerturbationMode::Additive);
        assert_eq!(p.declared_rank(), 3);
        let (l, r) = p.factors(2000).unwrap();
        assert_eq!((l.cols(), r.cols()), (3, 3));
        let b = p.build(50).unwrap();
        let norm = b.data().iter().fold(0.0f64, |s, x| s.max(x.norm()));
        assert_eq!(norm, 2.0);
    }

    #[test]
    fn dimension_errors() {
        let p = PerturbationSpec::diagonal(vec![ONE; 4], PerturbationMode::Additive);
        assert!(matches!(p.build(3), Err(Error::Config(_))));
        let p = PerturbationSpec {
            kind: PerturbationKind::CornerEntry { row: 3, col: 0, value: ONE },
            mode: PerturbationMode::Additive,
        };
        assert!(matches!(p.build(3), Err(Error::Config(_))));
        let p = PerturbationSpec::rank_one(ONE, vec![ONE], vec![ONE, ONE], PerturbationMode::Additive);
        assert!(p.build(2).is_err());
    }

    #[test]
    fn low_rank_factors_match_product() {
        let a = vec![vec![ONE, c(0.0, 1.0)], vec![c(2.0, 0.0), ZERO], vec![ZERO, ONE]];
        let b = vec![vec![ONE, ZERO, c(1.0, -1.0)], vec![ZERO, c(3.0, 0.0), ONE]];
        let p = PerturbationSpec { kind: PerturbationKind::LowRankFactors { a: a.clone(), b: b.clone() }, mode: PerturbationMode::Additive };
        let dense = p.build(3).unwrap();
        let am = ComplexMatrix::from_rows(&a).unwrap();
        let bm = ComplexMatrix::from_rows(&b).unwrap();
        assert_eq!(dense, am.matmul(&bm).unwrap());
    }

    #[test]
    fn apply_zero_and_sharpness_pair() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 5.0]).unwrap();
        assert_eq!(PerturbationSpec::zero().apply(&m).unwrap(), m);
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let p = PerturbationSpec {
            kind: PerturbationKind::CornerEntry { row: 1, col: 0, value: c(-1.0, 0.0) },
            mode: PerturbationMode::Additive,
        };
        let got = p.apply(&m).unwrap();
        assert_eq!(got, ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap());
    }

    #[test]
    fn multiplicative_matches_dense_product() {
        let mut rng = Xoshiro256pp::new(5);
        let s = random_hermitian(6, &mut rng);
        let e1: Vec<Complex64> = (0..6).map(|i| if i == 0 { ONE } else { ZERO }).collect();
        let p = PerturbationSpec::rank_one(c(0.0, 1.0), e1.clone(), e1, PerturbationMode::Multiplicative);
        let got = p.apply(&s).unwrap();
        let want = s.matmul(&ComplexMatrix::identity(6).add(&p.build(6).unwrap()).unwrap()).unwrap();
        assert!(got.sub(&want).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn multiplicative_keeps_zero_eigenspace() {
        let mut rng = Xoshiro256pp::new(9);
        let (m, n) = (3, 8);
        let x: Vec<f64> = (0..m * n).map(|_| rng.next_gaussian()).collect();
        let s = ComplexMatrix::from_fn(n, n, |i, j| c((0..m).map(|r| x[r * n + i] * x[r * n + j]).sum(), 0.0));
        let e1: Vec<Complex64> = (0..n).map(|i| if i == 0 { ONE } else { ZERO }).collect();
        let p = PerturbationSpec::rank_one(c(0.0, 1.0), e1.clone(), e1, PerturbationMode::Multiplicative);
        let ev = eig_general(&p.apply(&s).unwrap()).unwrap().eigenvalues;
        let scale = s.max_abs() * n as f64;
        let zeros = ev.iter().filter(|z| z.norm() <= 1e-10 * scale).count();
        let upper = ev.iter().filter(|z| z.norm() > 1e-10 * scale && z.im > 0.0).count();
        assert_eq!((zeros, upper), (n - m, m));
    }

    #[test]
    fn bordered_determinant_identity() {
        let mut rng = Xoshiro256pp::new(17);
        let n = 7;
        let m = random_hermitian(n, &mut rng);
        let gamma = 0.8;
        let mut vals = vec![ZERO; n];
        vals[n - 1] = c(0.0, gamma);
        let a = PerturbationSpec::diagonal(vals, PerturbationMode::Additive).apply(&m).unwrap();
        let b = m.leading_minor(n - 1);
        for _ in 0..20 {
            let z = c(2.0 * rng.next_gaussian(), 2.0 * rng.next_gaussian());
            let shift = |x: &ComplexMatrix| {
                let k = x.rows();
                x.sub(&ComplexMatrix::identity(k).scale(z)).unwrap()
            };
            let lhs = determinant(&shift(&a)).unwrap();
            let rhs = determinant(&shift(&m)).unwrap() + c(0.0, gamma) * determinant(&shift(&b)).unwrap();
            assert!((lhs - rhs).norm() <= 1e-8 * lhs.norm().max(rhs.norm()));
        }
    }

    #[test]
    fn nonreal_two_by_two() {
        let m = ComplexMatrix::from_diag(&[ONE, c(2.0, 0.0)]);
        let nv = construct_nonreal_vector(&m, 2, &[ONE, ONE], &[1.0, 1.0]).unwrap();
        let ev = eig_general(&plus_iuv(&m, &nv)).unwrap().eigenvalues;
        assert!(ev.iter().all(|z| z.im > 0.0));
    }

    #[test]
    fn nonreal_three_by_three_top_two() {
        let m = ComplexMatrix::from_diag(&[ONE, c(2.0, 0.0), c(3.0, 0.0)]);
        let nv = construct_nonreal_vector(&m, 2, &[ONE, ONE], &[1.0, 1.0]).unwrap();
        assert_eq!(nv.shared, vec![1.0]);
        let ev = eig_general(&plus_iuv(&m, &nv)).unwrap().eigenvalues;
        assert_eq!(ev.iter().filter(|z| z.im > 1e-12).count(), 2);
        assert!(ev.iter().any(|z| (z - ONE).norm() < 1e-12));
    }

    #[test]
    fn nonreal_random_counts_and_sharing() {
        let mut rng = Xoshiro256pp::new(23);
        for (n, k, sign) in [(6, 1, 1.0), (8, 3, -1.0), (5, 5, 1.0), (10, 4, 1.0)] {
            let m = random_hermitian(n, &mut rng);
            let z: Vec<Complex64> = (0..k).map(|_| c(rng.next_gaussian(), rng.next_gaussian())).collect();
            let a: Vec<f64> = (0..k).map(|_| sign * (0.5 + rng.next_f64())).collect();
            let nv = construct_nonreal_vector(&m, k, &z, &a).unwrap();
            let pm = plus_iuv(&m, &nv);
            let ev = eig_general(&pm).unwrap().eigenvalues;
            let norm = m.max_abs() * n as f64;
            let off: Vec<Complex64> = ev.iter().copied().filter(|z| z.im * sign > 1e-9 * norm).collect();
            assert_eq!(off.len(), k, "n={n} k={k}");
            let rest: Vec<Complex64> = ev.iter().copied().filter(|z| z.im * sign <= 1e-9 * norm).collect();
            let shared: Vec<Complex64> = nv.shared.iter().map(|&x| c(x, 0.0)).collect();
            let mr = match_points(&rest, &shared, 1).unwrap();
            assert!(mr.pair_costs.iter().all(|&d| d <= 1e-7 * norm));
            let tr = pm.trace().im;
            let sum: f64 = ev.iter().map(|z| z.im).sum();
            assert!((tr - sum).abs() <= 1e-9 * n as f64);
        }
    }

    #[test]
    fn nonreal_preconditions() {
        let m = ComplexMatrix::from_diag(&[ONE, ONE, c(3.0, 0.0)]);
        let err = construct_nonreal_vector(&m, 3, &[ONE; 3], &[1.0; 3]).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let m = ComplexMatrix::from_diag(&[ONE, c(2.0, 0.0)]);
        assert!(matches!(construct_nonreal_vector(&m, 2, &[ONE, ZERO], &[1.0, 1.0]), Err(Error::Precondition(_))));
        assert!(matches!(construct_nonreal_vector(&m, 2, &[ONE, ONE], &[1.0, -1.0]), Err(Error::Precondition(_))));
    }

    #[test]
    fn eigenvector_phase_is_canonical() {
        let m = ComplexMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(2.0, 0.0)]]).unwrap();
        let nv = construct_nonreal_vector(&m, 1, &[ONE], &[1.0]).unwrap();
        let big = nv.v.iter().copied().fold(ZERO, |b, x| if x.norm() > b.norm() + 1e-15 { x } else { b });
        assert!(big.im.abs() < 1e-15 && big.re > 0.0);
    }

    #[test]
    fn serde_round_trip() {
        let p = PerturbationSpec::diagonal(vec![c(0.0, 1.5), c(1.0, 1.0)], PerturbationMode::Multiplicative);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<PerturbationSpec>(&s).unwrap(), p);
        let bad = r#"{"kind":"diagonal","values":[],"bogus":1}"#;
        assert!(serde_json::from_str::<PerturbationSpec>(bad).is_err());
        let d: PerturbationSpec = serde_json::from_str(r#"{"kind":"diagonal","values":[[0,1]]}"#).unwrap();
        assert_eq!(d.mode, PerturbationMode::Additive);
    }
}
