use super::general::eig_general;
use super::lu::determinant;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Complex polynomial with coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    /// Trims trailing zeros; the zero polynomial is rejected.
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self> {
        while coeffs.last().is_some_and(|c| c.re == 0.0 && c.im == 0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::Contract("zero polynomial".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Sum of two polynomials, `None` when they cancel exactly.
    pub fn add(&self, other: &Polynomial) -> Option<Polynomial> {
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        let c = (0..len)
            .map(|i| *self.coeffs.get(i).unwrap_or(&zero) + *other.coeffs.get(i).unwrap_or(&zero))
            .collect();
        Polynomial::new(c).ok()
    }

    pub fn scale(&self, s: Complex64) -> Result<Polynomial> {
        Polynomial::new(self.coeffs.iter().map(|&c| c * s).collect())
    }
}

/// Monic polynomial `prod (z - r_i)` by exact coefficient convolution.
pub fn poly_from_roots(roots: &[Complex64]) -> Polynomial {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= r * ci;
        }
        c = next;
    }
    Polynomial { coeffs: c }
}

pub fn poly_derivative(p: &Polynomial) -> Result<Polynomial> {
    if p.degree() == 0 {
        return Err(Error::Contract("derivative of a constant polynomial".into()));
    }
    Polynomial::new(
        p.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(i, &c)| c * (i + 1) as f64)
            .collect(),
    )
}

/// Roots as eigenvalues of the companion matrix.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    let d = p.degree();
    if d == 0 {
        return Err(Error::Contract("roots of a constant polynomial".into()));
    }
    let lead = p.coeffs[d];
    let mut c = ComplexMatrix::zeros(d, d);
    for i in 1..d {
        c[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..d {
        c[(i, d - 1)] = -p.coeffs[i] / lead;
    }
    Ok(eig_general(&c)?.eigenvalues)
}

/// `D (I - J/n)` with `D = diag(x)` and `J` the all-ones matrix. Its spectrum
/// is the critical points of `prod (z - x_j)` together with one extra zero.
pub fn critical_companion(eigenvalues: &[Complex64]) -> Result<ComplexMatrix> {
    let n = eigenvalues.len();
    if n < 2 {
        return Err(Error::Contract("critical companion needs at least two points".into()));
    }
    let inv = 1.0 / n as f64;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        eigenvalues[i] * (delta - inv)
    }))
}

/// `(det(I_n + A B), det(I_k + B A))` for `A` of size `n x k` and `B` of
/// size `k x n`.
pub fn sylvester_det_check(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<(Complex64, Complex64)> {
    if a.cols() != b.rows() || a.rows() != b.cols() {
        return Err(Error::Config(format!(
            "non-conformable shapes {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let big = ComplexMatrix::identity(a.rows()).add(&a.matmul(b)?)?;
    let small = ComplexMatrix::identity(a.cols()).add(&b.matmul(a)?)?;
    Ok((determinant(&big)?, determinant(&small)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xoshiro256pp;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re));
        v
    }

    #[test]
    fn cubic_critical_points() {
        let p = poly_from_roots(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(p.coeffs(), &[c(-6.0, 0.0), c(11.0, 0.0), c(-6.0, 0.0), c(1.0, 0.0)]);
        let r = sorted_re(poly_roots(&poly_derivative(&p).unwrap()).unwrap());
        let s = 1.0 / 3f64.sqrt();
        assert!((r[0] - c(2.0 - s, 0.0)).norm() < 1e-13);
        assert!((r[1] - c(2.0 + s, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn double_root_at_origin() {
        let p = poly_from_roots(&[c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(p.degree(), 2);
        let r = poly_roots(&poly_derivative(&p).unwrap()).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].norm() < 1e-15);
    }

    #[test]
    fn zero_polynomial_rejected() {
        assert!(Polynomial::new(vec![c(0.0, 0.0)]).is_err());
        let k = Polynomial::new(vec![c(2.0, 0.0)]).unwrap();
        assert!(poly_derivative(&k).is_err());
        assert!(poly_roots(&k).is_err());
    }

    #[test]
    fn toeplitz_plus_i_has_no_real_roots() {
        // Characteristic polynomial of the 3x3 path matrix: z^3 - 2z.
        let t = Polynomial::new(vec![c(0.0, 0.0), c(-2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let shifted = t.add(&Polynomial::new(vec![c(0.0, 1.0)]).unwrap()).unwrap();
        let r = poly_roots(&shifted).unwrap();
        let min_im = r.iter().map(|z| z.im.abs()).fold(f64::INFINITY, f64::min);
        assert!(min_im > 1e-3, "{min_im}");
    }

    #[test]
    fn critical_companion_small_cases() {
        let m = critical_companion(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        let mut e = sorted_re(eig_general(&m).unwrap().eigenvalues);
        assert!(e[0].norm() < 1e-13);
        e.remove(0);
        let s = 1.0 / 3f64.sqrt();
        assert!((e[0] - c(2.0 - s, 0.0)).norm() < 1e-12);
        assert!((e[1] - c(2.0 + s, 0.0)).norm() < 1e-12);

        let cc = c(0.7, -0.2);
        let e2 = sorted_re(eig_general(&critical_companion(&[cc, cc]).unwrap()).unwrap().eigenvalues);
        assert!(e2[0].norm() < 1e-14 && (e2[1] - cc).norm() < 1e-14);

        let z = critical_companion(&[c(0.0, 0.0); 4]).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn sylvester_identity_cases() {
        let u = ComplexMatrix::from_rows(&[vec![c(1.0, 1.0)], vec![c(2.0, 0.0)], vec![c(0.0, -1.0)]]).unwrap();
        let v = ComplexMatrix::from_rows(&[vec![c(0.5, 0.0), c(-1.0, 0.5), c(1.0, 0.0)]]).unwrap();
        let (big, small) = sylvester_det_check(&u, &v).unwrap();
        let scalar: Complex64 = c(1.0, 0.0) + (0..3).map(|i| v[(0, i)] * u[(i, 0)]).sum::<Complex64>();
        assert!((big - scalar).norm() < 1e-13 && (small - scalar).norm() < 1e-13);

        let zero = ComplexMatrix::zeros(1, 3);
        let (b1, s1) = sylvester_det_check(&u, &zero).unwrap();
        assert_eq!((b1, s1), (c(1.0, 0.0), c(1.0, 0.0)));

        let mut r = Xoshiro256pp::new(8);
        let a = ComplexMatrix::from_fn(5, 2, |_, _| c(2.0 * r.next_f64() - 1.0, 0.0));
        let b = ComplexMatrix::from_fn(2, 5, |_, _| c(2.0 * r.next_f64() - 1.0, 0.0));
        let (x, y) = sylvester_det_check(&a, &b).unwrap();
        assert!((x - y).norm() <= 1e-10 * x.norm().max(1.0));
    }
}
