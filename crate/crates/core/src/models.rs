//! Ready-made coefficient sets: free, constant (Borg) and seeded random.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{validate_jacobi, JacobiCoefficients, MatrixSeq};
use crate::linalg::{eye, op_norm, re_part, zeros, CMat, C64};

/// `A = I`, `B = 0`.
pub fn free(m: usize) -> JacobiCoefficients {
    validate_jacobi(MatrixSeq::constant(eye(m), 0, 0), MatrixSeq::constant(zeros(m), 0, 0))
        .expect("free coefficients are valid")
}

/// The constant coefficients with spectrum `[E-, E+]`:
/// `A = ((E+ - E-)/4) I`, `B = ((E+ + E-)/2) I`.
pub fn borg_jacobi(e_minus: f64, e_plus: f64, m: usize) -> Result<JacobiCoefficients> {
    if !(e_minus < e_plus) || !e_minus.is_finite() || !e_plus.is_finite() {
        return Err(Error::BadInterval(format!("need E- < E+, got [{e_minus}, {e_plus}]")));
    }
    let a = eye(m) * C64::new((e_plus - e_minus) / 4.0, 0.0);
    let b = eye(m) * C64::new((e_plus + e_minus) / 2.0, 0.0);
    validate_jacobi(MatrixSeq::constant(a, 0, 0), MatrixSeq::constant(b, 0, 0))
}

/// Random complex `m x m` matrix with entries uniform in the unit square.
pub fn random_matrix(rng: &mut impl Rng, m: usize) -> CMat {
    CMat::from_fn(m, m, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Random Hermitian matrix of operator norm `scale`.
pub fn random_hermitian(rng: &mut impl Rng, m: usize, scale: f64) -> CMat {
    let h = re_part(&random_matrix(rng, m));
    let n = op_norm(&h);
    if n == 0.0 {
        return zeros(m);
    }
    h * C64::new(scale / n, 0.0)
}

/// Random Hermitian positive definite matrix with spectrum in `[1, 1 + amplitude]`.
pub fn random_positive(rng: &mut impl Rng, m: usize, amplitude: f64) -> CMat {
    let g = random_matrix(rng, m);
    let p = re_part(&(&g * g.adjoint()));
    let n = op_norm(&p).max(f64::MIN_POSITIVE);
    eye(m) + p * C64::new(amplitude / n, 0.0)
}

fn random_pair(rng: &mut ChaCha8Rng, m: usize, amplitude: f64, len: usize) -> (Vec<CMat>, Vec<CMat>) {
    let mut a = Vec::with_capacity(len);
    let mut b = Vec::with_capacity(len);
    for _ in 0..len {
        a.push(random_positive(rng, m, amplitude));
        b.push(random_hermitian(rng, m, amplitude));
    }
    (a, b)
}

/// Random coefficients on `[lo, hi]` with constant tails; fully determined by `seed`.
pub fn random_jacobi(m: usize, seed: u64, amplitude: f64, lo: i64, hi: i64) -> Result<JacobiCoefficients> {
    if hi < lo {
        return Err(Error::WindowTooSmall { lo, hi });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = random_pair(&mut rng, m, amplitude, (hi - lo + 1) as usize);
    validate_jacobi(MatrixSeq::new(lo, a, Default::default())?, MatrixSeq::new(lo, b, Default::default())?)
}

/// Random `period`-periodic coefficients, one period stored from site 0.
pub fn random_periodic_jacobi(m: usize, seed: u64, amplitude: f64, period: usize) -> Result<JacobiCoefficients> {
    if period == 0 {
        return Err(Error::InvalidSequence("period must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = random_pair(&mut rng, m, amplitude, period);
    validate_jacobi(MatrixSeq::periodic(0, a)?, MatrixSeq::periodic(0, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{herm_eigenvalues, max_abs_diff};

    #[test]
    fn borg_constants() {
        let c = borg_jacobi(-1.0, 3.0, 2).unwrap();
        assert!(max_abs_diff(c.a(7).unwrap(), &eye(2)) < 1e-15);
        assert!(max_abs_diff(c.b(-4).unwrap(), &eye(2)) < 1e-15);
        assert!(borg_jacobi(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn random_is_reproducible_and_valid() {
        let c1 = random_jacobi(3, 11, 0.8, -5, 5).unwrap();
        let c2 = random_jacobi(3, 11, 0.8, -5, 5).unwrap();
        assert_eq!(c1, c2);
        for k in -5..=5 {
            let ev = herm_eigenvalues(c1.a(k).unwrap());
            assert!(ev[0] >= 1.0 - 1e-12 && ev[2] <= 1.8 + 1e-12);
        }
        let p = random_periodic_jacobi(2, 3, 0.5, 4).unwrap();
        assert_eq!(p.a(1).unwrap(), p.a(9).unwrap());
    }
}
