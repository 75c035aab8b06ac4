//! Limiting laws and predictions: semicircle and Marchenko–Pastur densities,
//! their Stieltjes transforms, spectral regions, outlier locations and
//! eigenvector overlaps.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const BRANCH_CUT_TOL: f64 = 1e-9;
const QUAD_TOL: f64 = 1e-10;
const QUAD_MAX_DEPTH: u32 = 50;

pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        return 0.0;
    }
    if x >= 2.0 {
        return 1.0;
    }
    let v = 0.5 + (x * (4.0 - x * x).sqrt() + 4.0 * (x / 2.0).asin()) / (4.0 * PI);
    v.clamp(0.0, 1.0)
}

/// Support edges `λ± = √y (1 ± 1/√y)^2`.
pub fn mp_edges(y: f64) -> (f64, f64) {
    let s = y.sqrt();
    (s * (1.0 - 1.0 / s).powi(2), s * (1.0 + 1.0 / s).powi(2))
}

/// Absolutely continuous part of the Marchenko–Pastur law with ratio `y`.
/// For `y < 1` the law also carries an atom of mass `1 - y` at the origin,
/// which [`mp_atom`] reports.
pub fn mp_density(x: f64, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("ratio y must be positive, got {y}")));
    }
    let (lo, hi) = mp_edges(y);
    if x <= lo || x >= hi || x <= 0.0 {
        return Ok(0.0);
    }
    Ok(y.sqrt() / (2.0 * PI * x) * ((x - lo) * (hi - x)).sqrt())
}

pub fn mp_atom(y: f64) -> f64 {
    (1.0 - y).max(0.0)
}

/// CDF of the `y = 1` law on `[0, 4]`: with `x = 4 sin^2(φ/2)` it equals
/// `(φ + sin φ) / π`.
pub fn mp_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 4.0 {
        return 1.0;
    }
    let phi = 2.0 * (x / 4.0).sqrt().asin();
    ((phi + phi.sin()) / PI).clamp(0.0, 1.0)
}

fn dist_to_segment(z: Complex64, a: f64, b: f64) -> f64 {
    let x = z.re.clamp(a, b);
    Complex64::new(z.re - x, z.im).norm()
}

/// Stieltjes transform of the semicircle law: the root of `m^2 + zm + 1 = 0`
/// with `|m| <= 1`.
pub fn m_sc(z: Complex64) -> Result<Complex64> {
    if dist_to_segment(z, -2.0, 2.0) <= BRANCH_CUT_TOL {
        return Err(Error::Domain(format!("m_sc evaluated on the cut at {z}")));
    }
    let r = (z * z - 4.0).sqrt();
    let a = (-z + r) * 0.5;
    let b = (-z - r) * 0.5;
    // Roots multiply to one; invert the large one to avoid cancellation.
    let big = if a.norm() >= b.norm() { a } else { b };
    Ok(1.0 / big)
}

/// Stieltjes transform of the `y = 1` Marchenko–Pastur law: the root of
/// `z m^2 + z m + 1 = 0` with `|1 + z m| <= 1`. Uses `1 + z m_mp(z) = m_sc(z - 2)`.
pub fn m_mp(z: Complex64) -> Result<Complex64> {
    if dist_to_segment(z, 0.0, 4.0) <= BRANCH_CUT_TOL {
        return Err(Error::Domain(format!("m_mp evaluated on the cut at {z}")));
    }
    let w = m_sc(z - 2.0)?;
    Ok((w - 1.0) / z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionSource {
    WignerAdditive,
    MpMultiplicative,
    OverlapWigner,
    OverlapMp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: Complex64,
    pub source: PredictionSource,
    pub inputs: Vec<Complex64>,
}

/// `λ + 1/λ`, or `None` when `|λ| <= 1` (no outlier).
pub fn outlier_wigner(lambda: Complex64) -> Option<Prediction> {
    (lambda.norm() > 1.0).then(|| Prediction {
        value: lambda + 1.0 / lambda,
        source: PredictionSource::WignerAdditive,
        inputs: vec![lambda],
    })
}

/// `λ (1 + 1/λ)^2 = 2 + λ + 1/λ`, or `None` when `|λ| <= 1`.
pub fn outlier_mp(lambda: Complex64) -> Option<Prediction> {
    (lambda.norm() > 1.0).then(|| Prediction {
        value: 2.0 + (lambda + 1.0 / lambda),
        source: PredictionSource::MpMultiplicative,
        inputs: vec![lambda],
    })
}

/// Distance from the ellipse `E_r` (semi-axes `r + 1/r`, `r - 1/r`) to the
/// segment `[-2, 2]`, by sampling the boundary and refining the best sample.
pub fn ellipse_segment_distance(r: f64) -> Result<f64> {
    if !(r > 1.0) {
        return Err(Error::Config(format!("ellipse parameter must exceed 1, got {r}")));
    }
    let (a, b) = (r + 1.0 / r, r - 1.0 / r);
    let d = |t: f64| dist_to_segment(Complex64::new(a * t.cos(), b * t.sin()), -2.0, 2.0);
    let samples = 4096;
    let step = 2.0 * PI / samples as f64;
    let (mut best_t, mut best) = (0.0, f64::INFINITY);
    for i in 0..samples {
        let t = i as f64 * step;
        let v = d(t);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    // Golden-section refinement around the best sample.
    let (mut lo, mut hi) = (best_t - step, best_t + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if d(m1) < d(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok(best.min(d(0.5 * (lo + hi))))
}

/// `δ' = δ^2 / (2 (1 + δ))`, checked to lie strictly below the distance from
/// `E_{1+δ}` to `[-2, 2]`.
pub fn delta_prime(delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    let dp = delta * delta / (2.0 * (1.0 + delta));
    let dist = ellipse_segment_distance(1.0 + delta)?;
    if !(dp < dist) {
        return Err(Error::Contract(format!(
            "delta' = {dp} does not separate E_(1+delta) (distance {dist})"
        )));
    }
    Ok(dp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    /// Closed `δ`-neighbourhood of `[-2, 2]`.
    SemicircleNbhd { delta: f64 },
    /// Closed `δ`-neighbourhood of `[0, 4]`.
    MpNbhd { delta: f64 },
    /// Closed filled ellipse with semi-axes `r + 1/r`, `r - 1/r`.
    Ellipse { r: f64 },
    /// Open half-plane `sign * Im z > 0`.
    HalfPlane { sign: i8 },
    /// Closed disk about the origin.
    Disk { radius: f64 },
}

/// `Re(z)^2 / (r + 1/r)^2 + Im(z)^2 / (r - 1/r)^2`; equals one on `E_r`.
pub fn ellipse_form(r: f64, z: Complex64) -> Result<f64> {
    if !(r > 1.0) {
        return Err(Error::Config(format!("ellipse parameter must exceed 1, got {r}")));
    }
    let (a, b) = (r + 1.0 / r, r - 1.0 / r);
    Ok((z.re / a).powi(2) + (z.im / b).powi(2))
}

pub fn region_contains(region: Region, z: Complex64) -> Result<bool> {
    match region {
        Region::SemicircleNbhd { delta } => Ok(dist_to_segment(z, -2.0, 2.0) <= delta),
        Region::MpNbhd { delta } => Ok(dist_to_segment(z, 0.0, 4.0) <= delta),
        Region::Ellipse { r } => Ok(ellipse_form(r, z)? <= 1.0),
        Region::HalfPlane { sign } => match sign {
            1 => Ok(z.im > 0.0),
            -1 => Ok(z.im < 0.0),
            s => Err(Error::Config(format!("half-plane sign must be +1 or -1, got {s}"))),
        },
        Region::Disk { radius } => Ok(z.norm() <= radius),
    }
}

fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let h = b - a;
    let left = h / 12.0 * (fa + 4.0 * flm + fm);
    let right = h / 12.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature with Richardson correction. The interval is
/// pre-split into 16 panels so smooth periodic integrands are not
/// mistaken for converged on the first step.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let panels = 16;
    let h = (b - a) / panels as f64;
    let f: &dyn Fn(f64) -> f64 = &f;
    (0..panels)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, f1, fm) = (f(x0), f(x1), f(0.5 * (x0 + x1)));
            let whole = h / 6.0 * (f0 + 4.0 * fm + f1);
            simpson_rec(f, x0, x1, f0, fm, f1, whole, tol / panels as f64, QUAD_MAX_DEPTH)
        })
        .sum()
}

/// `∫ g dμ_sc` through `x = 2 cos φ`, which turns the weight into
/// `(2/π) sin^2 φ dφ` on `[0, π]`.
pub fn integrate_semicircle(g: impl Fn(f64) -> f64) -> f64 {
    adaptive_simpson(
        |phi| {
            let s = phi.sin();
            2.0 / PI * s * s * g(2.0 * phi.cos())
        },
        0.0,
        PI,
        QUAD_TOL,
    )
}

/// `∫ g dμ_MP,1` through `x = 4 sin^2(φ/2)`, which turns the weight into
/// `(1 + cos φ)/π dφ` on `[0, π]`.
pub fn integrate_mp(g: impl Fn(f64) -> f64) -> f64 {
    adaptive_simpson(
        |phi| (1.0 + phi.cos()) / PI * g(2.0 - 2.0 * phi.cos()),
        0.0,
        PI,
        QUAD_TOL,
    )
}

fn overlap_domain(theta: Complex64) -> Result<()> {
    if !(theta.norm() > 1.0) {
        return Err(Error::Domain(format!("overlap needs |θ| > 1, got {theta}")));
    }
    Ok(())
}

/// Limit of `|u* v|^2` for `W/√n + θ u u*`:
/// `|m_sc(θ̃)|^2 / ∫ ρ_sc(x) / |x - θ̃|^2 dx` with `θ̃ = θ + 1/θ`.
pub fn overlap_wigner(theta: Complex64) -> Result<Prediction> {
    overlap_domain(theta)?;
    let t = theta + 1.0 / theta;
    let num = m_sc(t)?.norm_sqr();
    let den = integrate_semicircle(|x| 1.0 / (Complex64::new(x, 0.0) - t).norm_sqr());
    Ok(Prediction {
        value: Complex64::new(num / den, 0.0),
        source: PredictionSource::OverlapWigner,
        inputs: vec![theta],
    })
}

/// Limit of `|u* v|^2` for `S/n (I + θ u u*)`:
/// `|∫ x ρ / (x - θ̂)|^2 / ∫ x^2 ρ / |x - θ̂|^2` with `θ̂ = θ (1 + 1/θ)^2`.
pub fn overlap_mp(theta: Complex64) -> Result<Prediction> {
    overlap_domain(theta)?;
    let t = theta * (1.0 + 1.0 / theta).powi(2);
    let num = mp_first_moment_transform(t);
    let den = integrate_mp(|x| x * x / (Complex64::new(x, 0.0) - t).norm_sqr());
    Ok(Prediction {
        value: Complex64::new(num.norm_sqr() / den, 0.0),
        source: PredictionSource::OverlapMp,
        inputs: vec![theta],
    })
}

/// `∫ x ρ_MP,1(x) / (x - t) dx` by quadrature.
pub fn mp_first_moment_transform(t: Complex64) -> Complex64 {
    let re = integrate_mp(|x| (x / (Complex64::new(x, 0.0) - t)).re);
    let im = integrate_mp(|x| (x / (Complex64::new(x, 0.0) - t)).im);
    Complex64::new(re, im)
}
