//! Classical eigenvalue perturbation inequalities and the matching machinery
//! they need.
//!
//! Every check returns a [`BoundReport`]. The inequalities are unconditional,
//! so a report with `satisfied == false` on valid input indicates a solver
//! defect rather than a counterexample.

use crate::error::{Error, Result};
use crate::linalg::{eig_general, frobenius_norm, hermitian_eigenvalues, re_im_parts, ComplexMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

const REPORT_TOL: f64 = 1e-9;
const NORMALITY_TOL: f64 = 1e-10;

/// Optimal assignment: row `i` is matched to column `permutation[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub permutation: Vec<usize>,
    pub total_cost: f64,
    pub pair_costs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub slack: f64,
}

impl BoundReport {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            satisfied: lhs <= rhs + REPORT_TOL * (1.0 + rhs),
            slack: rhs - lhs,
        }
    }
}

/// Hungarian method with row/column potentials, `O(n^3)`.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Result<MatchResult> {
    let n = cost.len();
    if cost.iter().any(|r| r.len() != n) {
        return Err(Error::Contract("cost matrix must be square".into()));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::Contract("cost matrix has a non-finite entry".into()));
    }
    if cost.iter().flatten().any(|&c| c < 0.0) {
        return Err(Error::Contract("cost matrix has a negative entry".into()));
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut permutation = vec![0; n];
    for j in 1..=n {
        permutation[p[j] - 1] = j - 1;
    }
    let pair_costs: Vec<f64> = permutation.iter().enumerate().map(|(i, &j)| cost[i][j]).collect();
    Ok(MatchResult {
        total_cost: pair_costs.iter().sum(),
        permutation,
        pair_costs,
    })
}

/// Assignment of `a` onto `b` minimizing the sum of `|a_i - b_j|^power`.
pub fn match_points(a: &[Complex64], b: &[Complex64], power: i32) -> Result<MatchResult> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "cannot match multisets of sizes {} and {}",
            a.len(),
            b.len()
        )));
    }
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| (x - y).norm().powi(power)).collect())
        .collect();
    min_cost_assignment(&cost)
}

fn require_hermitian(m: &ComplexMatrix, name: &str) -> Result<()> {
    if !m.is_square() || !m.is_hermitian() {
        return Err(Error::Contract(format!("{name} must be Hermitian")));
    }
    Ok(())
}

fn require_same_size(m: &ComplexMatrix, p: &ComplexMatrix) -> Result<()> {
    if m.rows() != p.rows() || m.cols() != p.cols() || !p.is_square() {
        return Err(Error::Contract("matrices must be square and of equal size".into()));
    }
    Ok(())
}

fn real_points(x: Vec<f64>) -> Vec<Complex64> {
    x.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
}

/// `min_pi sum |λ_pi(j)(M) - λ_j(M + P)|^2 <= |P|_F^2` for Hermitian `M`, `P`.
pub fn hoffman_wielandt_check(m: &ComplexMatrix, p: &ComplexMatrix) -> Result<BoundReport> {
    require_same_size(m, p)?;
    require_hermitian(m, "M")?;
    require_hermitian(p, "P")?;
    let a = real_points(hermitian_eigenvalues(m)?);
    let b = real_points(hermitian_eigenvalues(&m.add(p)?)?);
    let lhs = match_points(&a, &b, 2)?.total_cost;
    Ok(BoundReport::new(lhs, frobenius_norm(p).powi(2)))
}

/// Descending real part, ties by descending imaginary part.
pub fn kahan_order(a: &Complex64, b: &Complex64) -> Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

/// The three inequalities for Hermitian `M` and arbitrary `P`:
/// `sup |ν_k| <= |Im P|`, `sum ν_k^2 <= |Im P|_F^2`, and
/// `sum |(μ_k + iν_k) - λ_k|^2 <= 2 |P|_F^2` with both spectra ordered by
/// [`kahan_order`].
pub fn kahan_check(m: &ComplexMatrix, p: &ComplexMatrix) -> Result<(BoundReport, BoundReport, BoundReport)> {
    require_same_size(m, p)?;
    require_hermitian(m, "M")?;
    let lambda = hermitian_eigenvalues(m)?;
    let mut mu = eig_general(&m.add(p)?)?.eigenvalues;
    mu.sort_by(kahan_order);
    let (_, im) = re_im_parts(p)?;
    let im_spec = hermitian_eigenvalues(&im)?;
    let im_norm = im_spec.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let sup_nu = mu.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    let sum_nu2: f64 = mu.iter().map(|z| z.im * z.im).sum();
    let paired: f64 = mu
        .iter()
        .zip(&lambda)
        .map(|(z, &l)| (z - l).norm_sqr())
        .sum();
    Ok((
        BoundReport::new(sup_nu, im_norm),
        BoundReport::new(sum_nu2, frobenius_norm(&im).powi(2)),
        BoundReport::new(paired, 2.0 * frobenius_norm(p).powi(2)),
    ))
}

/// `min_pi sum |λ_pi(j)(M) - λ_j(M + P)|^2 <= n |P|_F^2` for normal `M`.
pub fn sun_check(m: &ComplexMatrix, p: &ComplexMatrix) -> Result<BoundReport> {
    require_same_size(m, p)?;
    let mh = m.adjoint();
    let commutator = m.matmul(&mh)?.sub(&mh.matmul(m)?)?;
    let fm = frobenius_norm(m);
    if frobenius_norm(&commutator) > NORMALITY_TOL * fm * fm {
        return Err(Error::Contract("M must be normal".into()));
    }
    let a = eig_general(m)?.eigenvalues;
    let b = eig_general(&m.add(p)?)?.eigenvalues;
    let lhs = match_points(&a, &b, 2)?.total_cost;
    Ok(BoundReport::new(lhs, m.rows() as f64 * frobenius_norm(p).powi(2)))
}

/// `sup_x |F_emp(x) - F(x)|`, evaluated on both sides of every jump of the
/// empirical distribution. Left limits of `cdf` are taken one ulp below.
pub fn kolmogorov_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Contract("Kolmogorov distance of an empty sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Contract("NaN sample".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let mut j = i;
        while j < s.len() && s[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let at = j as f64 / n;
        d = d.max((at - cdf(x)).abs());
        d = d.max((below - cdf(x.next_down())).abs());
        i = j;
    }
    Ok(d)
}
