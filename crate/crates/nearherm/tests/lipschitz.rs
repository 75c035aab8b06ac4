//! `|∫f dμ_M - ∫f dμ_{M+P}| <= sqrt(2) Lip(f) ||P||_2 / sqrt(n)` for a
//! clipped real part.

use nearherm::ensembles::{sample_wigner, EnsembleSpec, SeedPlan};
use nearherm::linalg::{eig_general, frobenius_norm, hermitian_eigenvalues, ComplexMatrix};
use nearherm::rng::Xoshiro256pp;
use num_complex::Complex64;

fn f(z: Complex64) -> f64 {
    z.re.clamp(-1.0, 1.0)
}

fn perturbation(n: usize, rng: &mut Xoshiro256pp) -> ComplexMatrix {
    let scale = 0.05 + 2.0 * rng.next_f64();
    match rng.next_u64() % 3 {
        0 => ComplexMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.next_gaussian(), rng.next_gaussian()) * (scale / n as f64)
        }),
        1 => {
            let rank = 1 + (rng.next_u64() % 4) as usize;
            let mut d = vec![Complex64::new(0.0, 0.0); n];
            for x in d.iter_mut().take(rank) {
                *x = Complex64::new(rng.next_gaussian(), rng.next_gaussian()) * scale;
            }
            ComplexMatrix::from_diag(&d)
        }
        _ => {
            let u: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.next_gaussian(), 0.0)).collect();
            let v: Vec<Complex64> = (0..n).map(|_| Complex64::new(0.0, rng.next_gaussian())).collect();
            ComplexMatrix::outer(&u, &v).scale(Complex64::new(scale / n as f64, 0.0))
        }
    }
}

#[test]
fn lipschitz_functional_moves_by_at_most_the_bound() {
    let n = 200;
    let mut rng = Xoshiro256pp::new(0x4c49);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let m = sample_wigner(&EnsembleSpec::goe(n), SeedPlan::new(77, trial)).unwrap();
        let p = perturbation(n, &mut rng);
        let a: f64 = hermitian_eigenvalues(&m).unwrap().into_iter().map(|x| f(Complex64::new(x, 0.0))).sum();
        let b: f64 = eig_general(&m.add(&p).unwrap()).unwrap().eigenvalues.into_iter().map(f).sum();
        let lhs = (a - b).abs() / n as f64;
        let rhs = 2f64.sqrt() * frobenius_norm(&p) / (n as f64).sqrt();
        assert!(lhs <= rhs * (1.0 + 1e-9), "trial {trial}: {lhs} > {rhs}");
        worst = worst.max(lhs / rhs);
    }
    assert!(worst > 0.0);
}
