//! General complex eigensolver: balancing, Householder reduction to upper
//! Hessenberg form, then single-shift QR with Wilkinson shifts and deflation.

use super::lu::Lu;
use super::matrix::{ComplexMatrix, SolverKind, Spectrum};
use crate::error::{Error, Result};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Radix-2 diagonal similarity that equalizes row and column norms.
fn balance(h: &mut [Complex64], n: usize) {
    let l1 = |z: Complex64| z.re.abs() + z.im.abs();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += l1(h[j * n + i]);
                    r += l1(h[i * n + j]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            g = r * 2.0;
            while c > g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    h[i * n + j] *= g;
                    h[j * n + i] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

fn hessenberg(h: &mut [Complex64], n: usize) {
    let mut s = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let mut v: Vec<Complex64> = (0..m).map(|i| h[(k + 1 + i) * n + k]).collect();
        let tail: f64 = v[1..].iter().map(|x| x.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = (tail + v[0].norm_sqr()).sqrt();
        let ph = if v[0].norm() == 0.0 { Complex64::new(1.0, 0.0) } else { v[0] / v[0].norm() };
        let alpha = -ph * xnorm;
        v[0] -= alpha;
        let tau = 2.0 / (tail + v[0].norm_sqr());

        // Left: rows k+1.., columns k...
        let s = &mut s[..n - k];
        s.iter_mut().for_each(|x| *x = ZERO);
        for (i, vi) in v.iter().enumerate() {
            let row = &h[(k + 1 + i) * n + k..(k + 2 + i) * n];
            let cv = vi.conj();
            for (sj, x) in s.iter_mut().zip(row) {
                *sj += cv * x;
            }
        }
        for (i, vi) in v.iter().enumerate() {
            let t = vi * tau;
            let row = &mut h[(k + 1 + i) * n + k..(k + 2 + i) * n];
            for (x, sj) in row.iter_mut().zip(s.iter()) {
                *x -= t * sj;
            }
        }
        // Right: all rows, columns k+1...
        for r in 0..n {
            let row = &mut h[r * n + k + 1..(r + 1) * n];
            let t: Complex64 = row.iter().zip(&v).map(|(x, vi)| x * vi).sum::<Complex64>() * tau;
            for (x, vi) in row.iter_mut().zip(&v) {
                *x -= t * vi.conj();
            }
        }
        for i in k + 2..n {
            h[i * n + k] = ZERO;
        }
    }
}

/// Eigenvalue of the trailing 2x2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let p = (a - d) * 0.5;
    let bc = b * c;
    let r = (p * p + bc).sqrt();
    let den = if (p + r).norm() >= (p - r).norm() { p + r } else { p - r };
    if den.norm() == 0.0 {
        d
    } else {
        d - bc / den
    }
}

/// Shifted QR on an upper Hessenberg matrix; returns eigenvalues in diagonal
/// order and the number of sweeps.
fn hessenberg_qr(h: &mut [Complex64], n: usize) -> Result<(Vec<Complex64>, usize)> {
    let eps = f64::EPSILON;
    let max_sweeps = 30 * n;
    let mut eig = vec![ZERO; n];
    let mut rot: Vec<(f64, Complex64)> = Vec::with_capacity(n);
    let norm = h.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut hi = n as isize - 1;
    let mut its = 0usize;
    let mut total = 0usize;
    while hi >= 0 {
        let hiu = hi as usize;
        let mut l = hiu;
        while l > 0 {
            let sub = h[l * n + l - 1].norm();
            let mut scale = h[(l - 1) * n + l - 1].norm() + h[l * n + l].norm();
            if scale == 0.0 {
                scale = norm;
            }
            if sub <= eps * scale {
                h[l * n + l - 1] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hiu {
            eig[hiu] = h[hiu * n + hiu];
            hi -= 1;
            its = 0;
            continue;
        }
        if total >= max_sweeps {
            return Err(Error::NoConvergence {
                iterations: total,
                n,
                partial: eig[hiu + 1..].to_vec(),
            });
        }
        its += 1;
        total += 1;

        let mu = if its % 10 == 0 {
            let extra = h[hiu * n + hiu - 1].norm()
                + if hiu >= 2 { h[(hiu - 1) * n + hiu - 2].norm() } else { 0.0 };
            h[hiu * n + hiu] + Complex64::new(0.75 * extra, 0.5 * extra)
        } else {
            wilkinson_shift(
                h[(hiu - 1) * n + hiu - 1],
                h[(hiu - 1) * n + hiu],
                h[hiu * n + hiu - 1],
                h[hiu * n + hiu],
            )
        };

        for k in l..=hiu {
            h[k * n + k] -= mu;
        }
        rot.clear();
        for k in l..hiu {
            let a = h[k * n + k];
            let b = h[(k + 1) * n + k];
            let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if rho == 0.0 {
                (1.0, ZERO)
            } else {
                let an = a.norm();
                let ph = if an == 0.0 { Complex64::new(1.0, 0.0) } else { a / an };
                (an / rho, ph * b.conj() / rho)
            };
            rot.push((c, s));
            for j in k..=hiu {
                let x = h[k * n + j];
                let y = h[(k + 1) * n + j];
                h[k * n + j] = x * c + s * y;
                h[(k + 1) * n + j] = -s.conj() * x + y * c;
            }
        }
        for (idx, &(c, s)) in rot.iter().enumerate() {
            let k = l + idx;
            for r in l..=(k + 2).min(hiu) {
                let x = h[r * n + k];
                let y = h[r * n + k + 1];
                h[r * n + k] = x * c + s.conj() * y;
                h[r * n + k + 1] = -s * x + y * c;
            }
        }
        for k in l..=hiu {
            h[k * n + k] += mu;
        }
    }
    Ok((eig, total))
}

fn check_square_finite(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Contract(format!(
            "eigensolver needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Contract("non-finite matrix entry".into()));
    }
    Ok(())
}

/// Eigenvalues of a general complex matrix, counted with multiplicity.
pub fn eig_general(a: &ComplexMatrix) -> Result<Spectrum> {
    check_square_finite(a)?;
    let n = a.rows();
    let mut h = a.data().to_vec();
    balance(&mut h, n);
    hessenberg(&mut h, n);
    let (eigenvalues, iterations) = hessenberg_qr(&mut h, n)?;
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: None,
        residual: None,
        iterations,
        solver: SolverKind::DenseQr,
    })
}

/// Unit eigenvector for an approximate eigenvalue `lambda` by inverse
/// iteration. Returns the vector and its residual `|A v - lambda v|`.
pub fn inverse_iteration(a: &ComplexMatrix, lambda: Complex64) -> Result<(Vec<Complex64>, f64)> {
    check_square_finite(a)?;
    let n = a.rows();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= lambda;
    }
    let lu = Lu::factor_with_floor(&shifted, f64::EPSILON * scale)?;
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.1 * ((i * 7919) % 13) as f64, 0.05 * (i % 5) as f64))
        .collect();
    normalize(&mut v);
    let mut residual = f64::INFINITY;
    for _ in 0..3 {
        v = lu.solve(&v);
        normalize(&mut v);
        let av = a.matvec(&v);
        residual = av
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - lambda * y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual <= 1e-12 * scale * n as f64 {
            break;
        }
    }
    Ok((v, residual))
}

fn normalize(v: &mut [Complex64]) {
    let s = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if s > 0.0 && s.is_finite() {
        v.iter_mut().for_each(|z| *z /= s);
    }
}

/// Eigenvalues plus unit eigenvectors from inverse iteration.
pub fn eig_general_with_vectors(a: &ComplexMatrix) -> Result<Spectrum> {
    let mut s = eig_general(a)?;
    let mut vecs = Vec::with_capacity(s.len());
    let mut worst: f64 = 0.0;
    for &lam in &s.eigenvalues {
        let (v, r) = inverse_iteration(a, lam)?;
        worst = worst.max(r);
        vecs.push(v);
    }
    s.eigenvectors = Some(vecs);
    s.residual = Some(worst);
    Ok(s)
}
