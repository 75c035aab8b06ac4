use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use num_complex::Complex64;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 20_000;

/// `sqrt(tr(A A*))`.
pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.data().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value by power iteration on `A* A`.
pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    let n = a.cols();
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.37 * ((i * 31) % 17) as f64, 0.11 * ((i * 7) % 5) as f64))
        .collect();
    let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= vn);
    let ah = a.adjoint();
    let mut sigma2 = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = a.matvec(&v);
        let next = w.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let x = ah.matvec(&w);
        let xn = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xn == 0.0 {
            return next.sqrt();
        }
        v = x.into_iter().map(|z| z / xn).collect();
        let done = (next - sigma2).abs() <= POWER_TOL * next;
        sigma2 = next;
        if done {
            break;
        }
    }
    sigma2.sqrt()
}

/// Hermitian parts `Re A = (A + A*)/2` and `Im A = (A - A*)/(2i)`.
pub fn re_im_parts(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if !a.is_square() {
        return Err(Error::Contract("re_im_parts needs a square matrix".into()));
    }
    let n = a.rows();
    let re = ComplexMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let im = ComplexMatrix::from_fn(n, n, |i, j| {
        (a[(i, j)] - a[(j, i)].conj()) / Complex64::new(0.0, 2.0)
    });
    Ok((re, im))
}
