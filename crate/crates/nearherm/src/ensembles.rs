//! Seeded random matrix ensembles: Wigner (GOE included), sample covariance,
//! and uniform unit vectors.

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::rng::{mix_seed, Xoshiro256pp};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Distribution of a single matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AtomSpec {
    Gaussian { mean: f64, variance: f64 },
    Rademacher,
    Uniform { a: f64, b: f64 },
    /// `hi` with probability `p`, otherwise `lo`.
    TwoPoint { p: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl AtomSpec {
    pub const STANDARD_GAUSSIAN: AtomSpec = AtomSpec::Gaussian { mean: 0.0, variance: 1.0 };

    pub fn moments(&self) -> Moments {
        match *self {
            AtomSpec::Gaussian { mean, variance } => Moments { mean, variance },
            AtomSpec::Rademacher => Moments { mean: 0.0, variance: 1.0 },
            AtomSpec::Uniform { a, b } => Moments {
                mean: 0.5 * (a + b),
                variance: (b - a) * (b - a) / 12.0,
            },
            AtomSpec::TwoPoint { p, lo, hi } => Moments {
                mean: p * hi + (1.0 - p) * lo,
                variance: p * (1.0 - p) * (hi - lo) * (hi - lo),
            },
        }
    }

    /// Parameter sanity independent of the atom's role.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            AtomSpec::Gaussian { mean, variance } => mean.is_finite() && variance.is_finite() && variance >= 0.0,
            AtomSpec::Rademacher => true,
            AtomSpec::Uniform { a, b } => a.is_finite() && b.is_finite() && a <= b,
            AtomSpec::TwoPoint { p, lo, hi } => (0.0..=1.0).contains(&p) && lo.is_finite() && hi.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid atom parameters {self:?}")))
        }
    }

    /// Off-diagonal atoms must have positive variance.
    pub fn validate_offdiag(&self) -> Result<()> {
        self.validate()?;
        if self.moments().variance <= 0.0 {
            return Err(Error::Config(format!("off-diagonal atom {self:?} has zero variance")));
        }
        Ok(())
    }

    /// True for atoms with a density (the nonreal-spectrum experiments need
    /// absolute continuity).
    pub fn is_absolutely_continuous(&self) -> bool {
        match *self {
            AtomSpec::Gaussian { variance, .. } => variance > 0.0,
            AtomSpec::Uniform { a, b } => b > a,
            AtomSpec::Rademacher | AtomSpec::TwoPoint { .. } => false,
        }
    }

    /// A point mass, including `two_point(p, x, x)`.
    pub fn is_degenerate(&self) -> bool {
        self.moments().variance == 0.0
    }

    pub fn sample(&self, rng: &mut Xoshiro256pp) -> f64 {
        match *self {
            AtomSpec::Gaussian { mean, variance } => mean + variance.sqrt() * rng.next_gaussian(),
            AtomSpec::Rademacher => {
                if rng.next_u64() >> 63 == 0 {
                    -1.0
                } else {
                    1.0
                }
            }
            AtomSpec::Uniform { a, b } => a + (b - a) * rng.next_f64(),
            AtomSpec::TwoPoint { p, lo, hi } => {
                if rng.next_f64() < p {
                    hi
                } else {
                    lo
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Wigner { offdiag: AtomSpec, diag: AtomSpec },
    /// Wigner with gaussian(0, 1) off the diagonal and gaussian(0, 2) on it.
    Goe,
    SampleCovariance { atom: AtomSpec, m: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    OneOverSqrtN,
    OneOverN,
    OneOverSqrtMn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub family: Family,
    pub n: usize,
    pub normalization: Normalization,
}

impl EnsembleSpec {
    pub fn goe(n: usize) -> Self {
        Self { family: Family::Goe, n, normalization: Normalization::OneOverSqrtN }
    }

    /// Gaussian `X^T X / n` with `X` of size `m x n`.
    pub fn gaussian_covariance(m: usize, n: usize, normalization: Normalization) -> Self {
        Self {
            family: Family::SampleCovariance { atom: AtomSpec::STANDARD_GAUSSIAN, m, n },
            n,
            normalization,
        }
    }

    /// GOE expands to its Wigner atoms.
    pub fn expanded_family(&self) -> Family {
        match self.family {
            Family::Goe => Family::Wigner {
                offdiag: AtomSpec::STANDARD_GAUSSIAN,
                diag: AtomSpec::Gaussian { mean: 0.0, variance: 2.0 },
            },
            f => f,
        }
    }

    pub fn is_wigner(&self) -> bool {
        matches!(self.family, Family::Wigner { .. } | Family::Goe)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("ensemble dimension n must be positive".into()));
        }
        match self.expanded_family() {
            Family::Wigner { offdiag, diag } => {
                offdiag.validate_offdiag()?;
                diag.validate()
            }
            Family::SampleCovariance { atom, m, n } => {
                if m == 0 || n == 0 {
                    return Err(Error::Config("sample covariance needs m, n >= 1".into()));
                }
                if n != self.n {
                    return Err(Error::Config(format!(
                        "sample covariance n = {n} disagrees with ensemble n = {}",
                        self.n
                    )));
                }
                atom.validate_offdiag()
            }
            Family::Goe => unreachable!("expanded above"),
        }
    }

    /// Multiplier applied to the raw matrix.
    pub fn scale(&self) -> f64 {
        let n = self.n as f64;
        let m = match self.family {
            Family::SampleCovariance { m, .. } => m as f64,
            _ => n,
        };
        match self.normalization {
            Normalization::Raw => 1.0,
            Normalization::OneOverSqrtN => 1.0 / n.sqrt(),
            Normalization::OneOverN => 1.0 / n,
            Normalization::OneOverSqrtMn => 1.0 / (m * n).sqrt(),
        }
    }
}

/// Identifies one trial's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl SeedPlan {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self { master_seed, trial_index }
    }

    pub fn stream_seed(&self) -> u64 {
        mix_seed(self.master_seed, self.trial_index)
    }

    pub fn rng(&self) -> Xoshiro256pp {
        Xoshiro256pp::new(self.stream_seed())
    }

    /// An independent stream for another object of the same trial.
    pub fn child(&self, tag: u64) -> SeedPlan {
        SeedPlan { master_seed: self.stream_seed(), trial_index: tag }
    }
}

/// Real symmetric Wigner matrix. Entries are drawn row by row over the upper
/// triangle (diagonal first in each row) and mirrored.
pub fn sample_wigner(spec: &EnsembleSpec, seed: SeedPlan) -> Result<ComplexMatrix> {
    spec.validate()?;
    let (offdiag, diag) = match spec.expanded_family() {
        Family::Wigner { offdiag, diag } => (offdiag, diag),
        _ => return Err(Error::Config("sample_wigner needs a wigner or goe family".into())),
    };
    let n = spec.n;
    let s = spec.scale();
    let mut rng = seed.rng();
    let mut a = vec![0.0f64; n * n];
    for i in 0..n {
        a[i * n + i] = diag.sample(&mut rng) * s;
        for j in i + 1..n {
            let x = offdiag.sample(&mut rng) * s;
            a[i * n + j] = x;
            a[j * n + i] = x;
        }
    }
    ComplexMatrix::from_real(n, n, &a)
}

/// `X^T X` for an `m x n` matrix `X` of iid atoms drawn row by row.
pub fn sample_covariance(spec: &EnsembleSpec, seed: SeedPlan) -> Result<ComplexMatrix> {
    spec.validate()?;
    let (atom, m, n) = match spec.family {
        Family::SampleCovariance { atom, m, n } => (atom, m, n),
        _ => return Err(Error::Config("sample_covariance needs a sample_covariance family".into())),
    };
    let mut rng = seed.rng();
    let mut xt = vec![0.0f64; n * m];
    for r in 0..m {
        for c in 0..n {
            xt[c * m + r] = atom.sample(&mut rng);
        }
    }
    let s = spec.scale();
    let g = gram_upper(&xt, n, m);
    let mut out = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let v = g[i * n + j] * s;
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    ComplexMatrix::from_real(n, n, &out)
}

/// Upper triangle of `Y Y^T` for `Y` of size `n x m`, row-major. Rows are
/// processed in blocks so each block stays cache resident.
fn gram_upper(y: &[f64], n: usize, m: usize) -> Vec<f64> {
    const BLOCK: usize = 32;
    let mut g = vec![0.0f64; n * n];
    for i0 in (0..n).step_by(BLOCK) {
        let i1 = (i0 + BLOCK).min(n);
        for j in i0..n {
            let yj = &y[j * m..(j + 1) * m];
            for i in i0..i1.min(j + 1) {
                g[i * n + j] = dot(&y[i * m..(i + 1) * m], yj);
            }
        }
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * c + l] * b[4 * c + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    Complex,
}

/// Uniform unit vector: a normalized iid standard Gaussian vector.
pub fn sample_unit_sphere(n: usize, field: Field, seed: SeedPlan) -> Result<Vec<Complex64>> {
    if n == 0 {
        return Err(Error::Config("unit sphere dimension must be positive".into()));
    }
    let mut rng = seed.rng();
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| match field {
            Field::Real => Complex64::new(rng.next_gaussian(), 0.0),
            Field::Complex => Complex64::new(rng.next_gaussian(), rng.next_gaussian()),
        })
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigenvalues;

    #[test]
    fn degenerate_diagonal_atom() {
        let spec = EnsembleSpec {
            family: Family::Wigner {
                offdiag: AtomSpec::Rademacher,
                diag: AtomSpec::TwoPoint { p: 1.0, lo: 5.0, hi: 5.0 },
            },
            n: 1,
            normalization: Normalization::Raw,
        };
        let m = sample_wigner(&spec, SeedPlan::new(0, 0)).unwrap();
        assert_eq!(m[(0, 0)], Complex64::new(5.0, 0.0));
    }

    #[test]
    fn wigner_exactly_symmetric_and_reproducible() {
        let spec = EnsembleSpec::goe(7);
        let a = sample_wigner(&spec, SeedPlan::new(3, 1)).unwrap();
        assert_eq!(a, a.transpose());
        assert_eq!(a, sample_wigner(&spec, SeedPlan::new(3, 1)).unwrap());
        assert_ne!(a, sample_wigner(&spec, SeedPlan::new(3, 2)).unwrap());
    }

    #[test]
    fn zero_variance_offdiag_rejected() {
        let spec = EnsembleSpec {
            family: Family::Wigner {
                offdiag: AtomSpec::TwoPoint { p: 0.5, lo: 1.0, hi: 1.0 },
                diag: AtomSpec::Rademacher,
            },
            n: 3,
            normalization: Normalization::Raw,
        };
        assert!(matches!(sample_wigner(&spec, SeedPlan::new(0, 0)), Err(Error::Config(_))));
    }

    #[test]
    fn scalar_covariance() {
        let spec = EnsembleSpec::gaussian_covariance(1, 1, Normalization::Raw);
        let s = sample_covariance(&spec, SeedPlan::new(1, 0)).unwrap();
        let mut rng = SeedPlan::new(1, 0).rng();
        let x = rng.next_gaussian();
        assert_eq!(s[(0, 0)].re, x * x);
    }

    #[test]
    fn covariance_rank_and_psd() {
        let spec = EnsembleSpec::gaussian_covariance(30, 100, Normalization::Raw);
        let s = sample_covariance(&spec, SeedPlan::new(5, 0)).unwrap();
        let e = hermitian_eigenvalues(&s).unwrap();
        let tol = 1e-10 * e[0];
        assert!(e.iter().all(|&x| x >= -tol));
        assert_eq!(e.iter().filter(|&&x| x.abs() <= 1e-8 * e[0]).count(), 70);
        assert_eq!(e.iter().filter(|&&x| x > 1e-8 * e[0]).count(), 30);
    }

    #[test]
    fn unit_vectors() {
        let v = sample_unit_sphere(1, Field::Real, SeedPlan::new(0, 0)).unwrap();
        assert!((v[0].re.abs() - 1.0).abs() < 1e-15 && v[0].im == 0.0);
        for (i, f) in [Field::Real, Field::Complex].into_iter().enumerate() {
            let v = sample_unit_sphere(500, f, SeedPlan::new(9, i as u64)).unwrap();
            let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn quadratic_form_concentration() {
        // A = diag of alternating ones and zeros, |A| = 1, tr A / n = 1/2.
        let n = 1000;
        let mut hits = 0;
        for t in 0..200 {
            let u = sample_unit_sphere(n, Field::Real, SeedPlan::new(17, t)).unwrap();
            let q: f64 = u.iter().step_by(2).map(|z| z.norm_sqr()).sum();
            if (q - 0.5).abs() <= 0.1 {
                hits += 1;
            }
        }
        assert!(hits as f64 / 200.0 >= 0.95);
    }

    #[test]
    fn atom_empirical_moments() {
        let atoms = [
            AtomSpec::Gaussian { mean: 1.0, variance: 2.0 },
            AtomSpec::Rademacher,
            AtomSpec::Uniform { a: -1.0, b: 3.0 },
            AtomSpec::TwoPoint { p: 0.3, lo: -1.0, hi: 2.0 },
        ];
        for (k, atom) in atoms.iter().enumerate() {
            let mut rng = SeedPlan::new(11, k as u64).rng();
            let n = 1_000_000;
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let x = atom.sample(&mut rng);
                s1 += x;
                s2 += x * x;
            }
            let mean = s1 / n as f64;
            let var = s2 / n as f64 - mean * mean;
            let mm = atom.moments();
            assert!((var - mm.variance).abs() <= 0.01 * mm.variance, "{atom:?}");
            let mean_tol = if mm.mean == 0.0 { 0.01 * mm.variance.sqrt() } else { 0.01 * mm.mean.abs() };
            assert!((mean - mm.mean).abs() <= mean_tol, "{atom:?} {mean}");
        }
    }
}
