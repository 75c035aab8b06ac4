//! LU factorization with partial pivoting.

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use num_complex::Complex64;

const TOL_SING: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    piv: Vec<usize>,
    odd_swaps: bool,
}

impl Lu {
    pub fn factor(a: &ComplexMatrix) -> Result<Self> {
        Self::factor_with_floor(a, 0.0)
    }

    /// Factors `a`, replacing any pivot smaller than `floor` in modulus by
    /// `floor`. Inverse iteration uses this to survive exactly singular shifts.
    pub fn factor_with_floor(a: &ComplexMatrix, floor: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Contract(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.data().to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut odd_swaps = false;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].norm();
            for i in k + 1..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
                odd_swaps = !odd_swaps;
            }
            if lu[k * n + k].norm() < floor {
                lu[k * n + k] = Complex64::new(floor, 0.0);
            }
            let pivot = lu[k * n + k];
            if pivot.norm() == 0.0 {
                continue;
            }
            let (top, bottom) = lu.split_at_mut((k + 1) * n);
            let prow = &top[k * n + k + 1..k * n + n];
            for i in 0..n - k - 1 {
                let row = &mut bottom[i * n..(i + 1) * n];
                let l = row[k] / pivot;
                row[k] = l;
                if l.re == 0.0 && l.im == 0.0 {
                    continue;
                }
                for (x, &u) in row[k + 1..].iter_mut().zip(prow) {
                    *x -= l * u;
                }
            }
        }
        Ok(Self { n, lu, piv, odd_swaps })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Pivot moduli `|U_kk|`.
    pub fn pivots(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.lu[k * self.n + k].norm()).collect()
    }

    /// Crude condition estimate `max |U_kk| / min |U_kk|`.
    pub fn pivot_ratio(&self) -> f64 {
        let p = self.pivots();
        let max = p.iter().cloned().fold(0.0, f64::max);
        let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(b.len(), n, "LU solve dimension mismatch");
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: Complex64 = row.iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: Complex64 = row.iter().zip(&x[i + 1..]).map(|(u, y)| u * y).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// `(log |det|, det / |det|)`; the phase is one for a singular matrix.
    pub fn log_det(&self) -> (f64, Complex64) {
        let mut log_mag = 0.0;
        let mut phase = Complex64::new(if self.odd_swaps { -1.0 } else { 1.0 }, 0.0);
        for k in 0..self.n {
            let u = self.lu[k * self.n + k];
            let r = u.norm();
            if r == 0.0 {
                return (f64::NEG_INFINITY, Complex64::new(1.0, 0.0));
            }
            log_mag += r.ln();
            phase *= u / r;
        }
        (log_mag, phase)
    }

    pub fn det(&self) -> Complex64 {
        let (l, ph) = self.log_det();
        if l == f64::NEG_INFINITY {
            Complex64::new(0.0, 0.0)
        } else {
            ph * l.exp()
        }
    }
}

pub fn determinant(a: &ComplexMatrix) -> Result<Complex64> {
    Ok(Lu::factor(a)?.det())
}

/// `(log |det A|, phase)`, safe against overflow for large `n`.
pub fn log_determinant(a: &ComplexMatrix) -> Result<(f64, Complex64)> {
    Ok(Lu::factor(a)?.log_det())
}

/// `u* (A - zI)^{-1} v` through an LU solve.
pub fn resolvent_form(
    a: &ComplexMatrix,
    z: Complex64,
    u: &[Complex64],
    v: &[Complex64],
) -> Result<Complex64> {
    if !a.is_square() || u.len() != a.rows() || v.len() != a.rows() {
        return Err(Error::Config("resolvent_form dimension mismatch".into()));
    }
    let mut shifted = a.clone();
    for i in 0..a.rows() {
        shifted[(i, i)] -= z;
    }
    let lu = Lu::factor(&shifted)?;
    let min_pivot = lu.pivots().into_iter().fold(f64::INFINITY, f64::min);
    if min_pivot <= TOL_SING * shifted.max_abs().max(1.0) {
        return Err(Error::SingularShift { condition: lu.pivot_ratio() });
    }
    let x = lu.solve(v);
    Ok(u.iter().zip(&x).map(|(a, b)| a.conj() * b).sum())
}
