//! Hermitian eigensolver: Householder tridiagonalization plus implicit QL.
//!
//! Real symmetric input runs the same code over `f64`. The QL rotations can be
//! replayed on any block `X`, which yields `V* X` without forming `V`.

use super::matrix::{ComplexMatrix, SolverKind, Spectrum};
use super::scalar::Scalar;
use crate::error::{Error, Result};
use num_complex::Complex64;

const MAX_QL_ITERS: usize = 60;

struct Reflector<T> {
    /// First row the reflector acts on.
    start: usize,
    v: Vec<T>,
    tau: f64,
}

struct Tridiagonal<T> {
    d: Vec<f64>,
    /// `e[i]` couples `i` and `i + 1`; `e[n - 1] = 0`.
    e: Vec<f64>,
    reflectors: Vec<Reflector<T>>,
    phases: Vec<T>,
}

/// Reduces a Hermitian matrix, read from its lower triangle, to real
/// symmetric tridiagonal form `A = (Q D) T (Q D)*`.
fn tridiagonalize<T: Scalar>(mut a: Vec<T>, n: usize) -> Tridiagonal<T> {
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut p = vec![T::ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let mut v: Vec<T> = (0..m).map(|i| a[(k + 1 + i) * n + k]).collect();
        let tail: f64 = v[1..].iter().map(|x| x.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = (tail + v[0].norm_sqr()).sqrt();
        let alpha = -(v[0].phase().scale(xnorm));
        v[0] -= alpha;
        let vnorm2 = tail + v[0].norm_sqr();
        let tau = 2.0 / vnorm2;

        // p = tau * B v with B the trailing block, read from its lower triangle.
        let p = &mut p[..m];
        p.iter_mut().for_each(|x| *x = T::ZERO);
        for ii in 0..m {
            let row = &a[(k + 1 + ii) * n + k + 1..(k + 1 + ii) * n + k + 1 + ii + 1];
            let vi = v[ii];
            let mut acc = row[ii] * vi;
            for jj in 0..ii {
                acc += row[jj] * v[jj];
                p[jj] += row[jj].conj() * vi;
            }
            p[ii] += acc;
        }
        let mut vp = 0.0;
        for (pi, vi) in p.iter_mut().zip(&v) {
            *pi = pi.scale(tau);
            vp += (vi.conj() * *pi).re();
        }
        let half = 0.5 * tau * vp;
        for (pi, vi) in p.iter_mut().zip(&v) {
            *pi -= vi.scale(half);
        }
        for ii in 0..m {
            let (vi, wi) = (v[ii], p[ii]);
            let row = &mut a[(k + 1 + ii) * n + k + 1..(k + 1 + ii) * n + k + 1 + ii + 1];
            for jj in 0..=ii {
                row[jj] -= vi * p[jj].conj() + wi * v[jj].conj();
            }
        }
        a[(k + 1) * n + k] = alpha;
        reflectors.push(Reflector { start: k + 1, v, tau });
    }

    let d: Vec<f64> = (0..n).map(|i| a[i * n + i].re()).collect();
    let mut e = vec![0.0; n];
    let mut phases = vec![T::ONE; n];
    for i in 0..n.saturating_sub(1) {
        let sub = a[(i + 1) * n + i];
        e[i] = sub.abs();
        phases[i + 1] = phases[i] * sub.phase();
    }
    Tridiagonal { d, e, reflectors, phases }
}

/// Overwrites the `n x m` block `w` with `D* Q* w`.
fn apply_basis_adjoint<T: Scalar>(t: &Tridiagonal<T>, w: &mut [Complex64], m: usize) {
    let mut s = vec![Complex64::new(0.0, 0.0); m];
    for r in &t.reflectors {
        let v: Vec<Complex64> = r.v.iter().map(|x| x.to_c64()).collect();
        s.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for (i, vi) in v.iter().enumerate() {
            let row = &w[(r.start + i) * m..(r.start + i + 1) * m];
            let cv = vi.conj();
            for (sj, x) in s.iter_mut().zip(row) {
                *sj += cv * x;
            }
        }
        for sj in s.iter_mut() {
            *sj *= r.tau;
        }
        for (i, vi) in v.iter().enumerate() {
            let row = &mut w[(r.start + i) * m..(r.start + i + 1) * m];
            for (x, sj) in row.iter_mut().zip(&s) {
                *x -= vi * sj;
            }
        }
    }
    for (i, ph) in t.phases.iter().enumerate() {
        let c = ph.to_c64().conj();
        if c != Complex64::new(1.0, 0.0) {
            for x in &mut w[i * m..(i + 1) * m] {
                *x *= c;
            }
        }
    }
}

/// Implicit QL on the symmetric tridiagonal `(d, e)`. Every rotation is also
/// applied to rows `i, i + 1` of the `n x m` block `w`, which turns `w` into
/// `U^T w` where `T = U diag(d) U^T`.
fn tql2(d: &mut [f64], e: &mut [f64], mut w: Option<(&mut [Complex64], usize)>) -> Result<usize> {
    let n = d.len();
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    let mut total = 0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                total += 1;
                if iter > MAX_QL_ITERS {
                    let mut partial: Vec<Complex64> =
                        d[..l].iter().map(|&x| Complex64::new(x, 0.0)).collect();
                    partial.shrink_to_fit();
                    return Err(Error::NoConvergence { iterations: total, n, partial });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some((w, mcols)) = w.as_mut() {
                        let (lo, hi) = w.split_at_mut((i + 1) * *mcols);
                        let wi = &mut lo[i * *mcols..];
                        let wi1 = &mut hi[..*mcols];
                        for (a, b) in wi.iter_mut().zip(wi1.iter_mut()) {
                            let hb = *b;
                            *b = *a * s + hb * c;
                            *a = *a * c - hb * s;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(total)
}

fn check_hermitian(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Contract(format!(
            "Hermitian eigensolver needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let defect = a.hermitian_defect();
    if defect > 1e-12 * a.max_abs() {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian (max |A - A*| = {defect:e})"
        )));
    }
    Ok(())
}

/// Lower triangle of `a` as `f64` (real input) or `Complex64`.
enum Lower {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

fn lower(a: &ComplexMatrix) -> Lower {
    if a.is_real() {
        Lower::Real(a.data().iter().map(|z| z.re).collect())
    } else {
        Lower::Complex(a.data().to_vec())
    }
}

/// Runs the solver; when `block` is given it is replaced by `V* block`.
/// Returns ascending-unsorted eigenvalues and the QL iteration count.
fn solve(a: &ComplexMatrix, block: Option<(&mut [Complex64], usize)>) -> Result<(Vec<f64>, usize)> {
    fn run<T: Scalar>(
        data: Vec<T>,
        n: usize,
        block: Option<(&mut [Complex64], usize)>,
    ) -> Result<(Vec<f64>, usize)> {
        let mut t = tridiagonalize(data, n);
        let mut d = std::mem::take(&mut t.d);
        let mut e = std::mem::take(&mut t.e);
        let iters = match block {
            Some((w, m)) => {
                apply_basis_adjoint(&t, w, m);
                tql2(&mut d, &mut e, Some((w, m)))?
            }
            None => tql2(&mut d, &mut e, None)?,
        };
        Ok((d, iters))
    }
    let n = a.rows();
    match lower(a) {
        Lower::Real(x) => run(x, n, block),
        Lower::Complex(x) => run(x, n, block),
    }
}

/// Indices that sort `d` in descending order (ties by index).
fn descending_order(d: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&i, &j| d[j].total_cmp(&d[i]).then(i.cmp(&j)));
    idx
}

/// Eigenvalues of a Hermitian matrix, sorted descending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian(a)?;
    let (d, _) = solve(a, None)?;
    let mut d = d;
    d.sort_by(|x, y| y.total_cmp(x));
    Ok(d)
}

/// Full eigendecomposition: real eigenvalues sorted descending and
/// orthonormal eigenvectors.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<Spectrum> {
    check_hermitian(a)?;
    let n = a.rows();
    let mut w = ComplexMatrix::identity(n).into_data();
    let (d, iters) = solve(a, Some((&mut w, n)))?;
    let order = descending_order(&d);
    let eigenvalues: Vec<Complex64> = order.iter().map(|&i| Complex64::new(d[i], 0.0)).collect();
    // Row j of V* I is v_j*.
    let vectors: Vec<Vec<Complex64>> = order
        .iter()
        .map(|&i| w[i * n..(i + 1) * n].iter().map(|z| z.conj()).collect())
        .collect();
    let residual = vectors
        .iter()
        .zip(&eigenvalues)
        .map(|(v, &lam)| {
            let av = a.matvec(v);
            av.iter()
                .zip(v)
                .map(|(x, y)| (x - lam * y).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: Some(vectors),
        residual: Some(residual),
        iterations: iters,
        solver: SolverKind::Hermitian,
    })
}

/// Eigenvalues of `A` together with `V* X` for an `n x k` block `X`.
#[derive(Debug, Clone)]
pub struct HermitianProjection {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Row `j` is `v_j* X`, in the same order as `values`.
    pub projected: ComplexMatrix,
    pub iterations: usize,
}

/// Computes eigenvalues and the projection `V* X` in `O(n^2 k)` beyond the
/// tridiagonalization, without forming the eigenvectors.
pub fn hermitian_project(a: &ComplexMatrix, x: &ComplexMatrix) -> Result<HermitianProjection> {
    check_hermitian(a)?;
    if x.rows() != a.rows() {
        return Err(Error::Config(format!(
            "projection block has {} rows, matrix has {}",
            x.rows(),
            a.rows()
        )));
    }
    let (n, k) = (x.rows(), x.cols());
    let mut w = x.data().to_vec();
    let (d, iterations) = solve(a, Some((&mut w, k)))?;
    let order = descending_order(&d);
    let values = order.iter().map(|&i| d[i]).collect();
    let mut sorted = Vec::with_capacity(n * k);
    for &i in &order {
        sorted.extend_from_slice(&w[i * k..(i + 1) * k]);
    }
    Ok(HermitianProjection {
        values,
        projected: ComplexMatrix::from_vec_unchecked(n, k, sorted),
        iterations,
    })
}
