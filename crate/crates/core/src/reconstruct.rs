//! Half-line spectral measures, matrix orthogonal polynomials and recovery of
//! `(A, B)` from a measure by block Lanczos.

use crate::error::{Error, Result};
use crate::herglotz::{gamma_density, MatrixMeasure};
use crate::lattice::{truncate_jacobi, Extension, JacobiCoefficients, MatrixSeq};
use crate::linalg::{eye, herm_eig, herm_eigenvalues, inverse, op_norm, pd_inv_sqrt, psd_sqrt, re_part, CMat, C64};
use crate::quadrature::gauss_legendre;
use crate::weyl::{fundamental_solutions, Side};

/// Polynomial with matrix coefficients acting from the left:
/// `P(z) = Σ_j coeffs[j] z^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    pub coeffs: Vec<CMat>,
}

impl MatrixPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: C64) -> CMat {
        let m = self.coeffs[0].nrows();
        self.coeffs.iter().rev().fold(CMat::zeros(m, m), |acc, c| acc * z + c)
    }
}

/// Orthonormal polynomials of a normalized matrix measure together with the
/// recurrence coefficients they define.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoPolySystem {
    pub measure: MatrixMeasure,
    pub k0: i64,
    pub side: Side,
    /// `P_0 = I, P_1, ...`, satisfying `∫ P_i dν P_j* = δ_ij I`.
    pub polys: Vec<MatrixPolynomial>,
    pub recovered_a: MatrixSeq,
    pub recovered_b: MatrixSeq,
}

impl OrthoPolySystem {
    /// `max_{i,j} ‖∫ P_i dν P_j* − δ_ij I‖` evaluated from the coefficient form.
    pub fn orthonormality_defect(&self) -> f64 {
        let m = self.measure.dim();
        let values: Vec<Vec<CMat>> =
            self.polys.iter().map(|p| self.measure.nodes.iter().map(|&x| p.eval(C64::new(x, 0.0))).collect()).collect();
        let mut worst: f64 = 0.0;
        for i in 0..values.len() {
            for j in 0..=i {
                let mut g = inner(&values[i], &values[j], &self.measure.weights);
                if i == j {
                    g -= eye(m);
                }
                worst = worst.max(op_norm(&g));
            }
        }
        worst
    }
}

/// `∫ F dν G* = Σ_i F(λ_i) W_i G(λ_i)*`.
fn inner(f: &[CMat], g: &[CMat], w: &[CMat]) -> CMat {
    let m = w[0].nrows();
    f.iter().zip(g).zip(w).fold(CMat::zeros(m, m), |acc, ((f, g), w)| acc + f * w * g.adjoint())
}

/// Spectral measure `dν±(·, k0)` of the `N`-site Dirichlet truncation of the
/// half-line operator `H±,k0` (sites `[k0, k0+N-1]` or `[k0-N+1, k0]`).
/// Degenerate eigenvalues are merged into one node.
pub fn spectral_measure_halfline(c: &JacobiCoefficients, k0: i64, side: Side, n: usize) -> Result<MatrixMeasure> {
    if n == 0 {
        return Err(Error::WindowTooSmall { lo: k0, hi: k0 - 1 });
    }
    let (lo, hi) = match side {
        Side::Plus => (k0, k0 + n as i64 - 1),
        Side::Minus => (k0 - n as i64 + 1, k0),
    };
    let t = truncate_jacobi(c, lo, hi)?;
    let (vals, vecs) = herm_eig(&t.to_dense());
    let m = c.dim();
    let off = t.offset(k0).expect("k0 lies in the truncation");
    let weights = (0..vals.len())
        .map(|i| {
            let v = vecs.view((off, i), (m, 1)).into_owned();
            &v * v.adjoint()
        })
        .collect();
    let scale = vals.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    Ok(MatrixMeasure::discrete(vals, weights, true).merged(1e-12 * scale))
}

/// Normalized measure `½dΓ / ∫½dΓ · I` of the constant coefficients with
/// spectrum `[E-, E+]`, discretized by Gauss-Legendre quadrature.
pub fn borg_measure(e_minus: f64, e_plus: f64, m: usize, n_nodes: usize) -> Result<MatrixMeasure> {
    if !(e_minus < e_plus) {
        return Err(Error::BadInterval(format!("[{e_minus}, {e_plus}]")));
    }
    let (x, w) = gauss_legendre(n_nodes, e_minus, e_plus);
    let dens: Vec<f64> = x.iter().zip(&w).map(|(&l, &wt)| 0.5 * wt * gamma_density(l, e_minus, e_plus)).collect();
    let total: f64 = dens.iter().sum();
    let weights = dens.iter().map(|d| eye(m) * C64::new(d / total, 0.0)).collect();
    Ok(MatrixMeasure::discrete(x, weights, true))
}

/// Block Lanczos with full reorthogonalization on the nodes of `measure`.
///
/// Produces `P_0..P_n` and the coefficients
/// `A_j = ∫ λ P_j dν P_{j+1}*` (`j < n`), `B_j = ∫ λ P_j dν P_j*` (`j ≤ n`),
/// with `A_j` the positive square root of the residual Gram block. The
/// coefficients are placed at the sites the measure of `H±,k0` describes:
/// `A(k0+j), B(k0+j)` for `Plus`, `A(k0-j-1), B(k0-j)` for `Minus`.
pub fn block_lanczos(measure: &MatrixMeasure, n_steps: usize, k0: i64, side: Side) -> Result<OrthoPolySystem> {
    let m = measure.dim();
    if m == 0 || measure.nodes.is_empty() {
        return Err(Error::Breakdown(0));
    }
    let mass = measure.total_mass();
    if op_norm(&(&mass - eye(m))) > 1e-8 {
        return Err(Error::Numerical("block Lanczos needs a normalized measure".into()));
    }
    let w = &measure.weights;
    let lam: Vec<C64> = measure.nodes.iter().map(|&x| C64::new(x, 0.0)).collect();
    let spread = measure.nodes.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let breakdown_tol = 1e-12 * spread * spread;

    // P_0 = mass^{-1/2}, which is I up to the normalization tolerance.
    let p0 = pd_inv_sqrt(&re_part(&mass)).map_err(|_| Error::Breakdown(0))?;
    let mut values: Vec<Vec<CMat>> = vec![vec![p0.clone(); lam.len()]];
    let mut polys = vec![MatrixPolynomial { coeffs: vec![p0] }];
    let mut a_out: Vec<CMat> = Vec::new();
    let mut b_out: Vec<CMat> = Vec::new();

    for j in 0..=n_steps {
        let pj = &values[j];
        let lp: Vec<CMat> = pj.iter().zip(&lam).map(|(p, &l)| p * l).collect();
        let b = re_part(&inner(&lp, pj, w));
        b_out.push(b.clone());
        if j == n_steps {
            break;
        }
        let mut r: Vec<CMat> = lp.iter().zip(pj).map(|(x, p)| x - &b * p).collect();
        if j > 0 {
            let a_prev = &a_out[j - 1];
            for (x, p) in r.iter_mut().zip(&values[j - 1]) {
                *x -= a_prev * p;
            }
        }
        // Two passes of full reorthogonalization against all earlier P_i.
        for _ in 0..2 {
            for pi in &values {
                let h = inner(&r, pi, w);
                for (x, p) in r.iter_mut().zip(pi) {
                    *x -= &h * p;
                }
            }
        }
        let gram = re_part(&inner(&r, &r, w));
        let ev = herm_eigenvalues(&gram);
        if ev[0] <= breakdown_tol {
            return Err(Error::Breakdown(j));
        }
        let a = psd_sqrt(&gram);
        let a_inv = inverse(&a).ok_or(Error::Breakdown(j))?;
        values.push(r.iter().map(|x| &a_inv * x).collect());

        // Same recurrence in coefficient form.
        let prev = &polys[j].coeffs;
        let mut next = vec![CMat::zeros(m, m); prev.len() + 1];
        for (i, c) in prev.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= &b * c;
        }
        if j > 0 {
            for (i, c) in polys[j - 1].coeffs.iter().enumerate() {
                next[i] -= &a_out[j - 1] * c;
            }
        }
        let next = next.into_iter().map(|c| &a_inv * c).collect();
        polys.push(MatrixPolynomial { coeffs: next });
        a_out.push(a);
    }

    let (recovered_a, recovered_b) = match side {
        Side::Plus => {
            (MatrixSeq::new(k0, a_out, Extension::Forbidden), MatrixSeq::new(k0, b_out, Extension::Forbidden))
        }
        Side::Minus => {
            let na = a_out.len() as i64;
            let nb = b_out.len() as i64;
            a_out.reverse();
            b_out.reverse();
            (
                MatrixSeq::new(k0 - na, a_out, Extension::Forbidden),
                MatrixSeq::new(k0 - nb + 1, b_out, Extension::Forbidden),
            )
        }
    };
    let recovered_a = match recovered_a {
        Ok(s) => s,
        // n_steps == 0: no off-diagonal block is determined.
        Err(_) => MatrixSeq::new(k0, vec![CMat::zeros(m, m)], Extension::Forbidden)?,
    };
    Ok(OrthoPolySystem { measure: measure.clone(), k0, side, polys, recovered_a, recovered_b: recovered_b? })
}

/// Largest deviation between the orthonormal polynomials of the half-line
/// measures (built from `n_sites`-site truncations) and the fundamental
/// solutions: `P+,k(z) = φ(z, k0+k, k0-1)` and `P-,k(z) = θ(z, k0-k, k0)`.
pub fn poly_solution_identity(c: &JacobiCoefficients, k0: i64, z: C64, k: usize, n_sites: usize) -> Result<f64> {
    let kk = k as i64;
    let plus = block_lanczos(&spectral_measure_halfline(c, k0, Side::Plus, n_sites)?, k, k0, Side::Plus)?;
    let minus = block_lanczos(&spectral_measure_halfline(c, k0, Side::Minus, n_sites)?, k, k0, Side::Minus)?;
    let fs_phi = fundamental_solutions(c, z, k0 - 1, k0 - 1, k0 + kk)?;
    let fs_theta = fundamental_solutions(c, z, k0, k0 - kk, k0 + 1)?;
    let rp = op_norm(&(plus.polys[k].eval(z) - fs_phi.phi_at(k0 + kk)?));
    let rm = op_norm(&(minus.polys[k].eval(z) - fs_theta.theta_at(k0 - kk)?));
    Ok(rp.max(rm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::validate_jacobi;
    use crate::linalg::{c, max_abs_diff, zeros};
    use crate::models::{borg_jacobi, free, random_jacobi};

    #[test]
    fn two_site_free_measure() {
        let c = validate_jacobi(MatrixSeq::constant(eye(1), 0, 0), MatrixSeq::constant(zeros(1), 0, 0)).unwrap();
        let mu = spectral_measure_halfline(&c, 0, Side::Plus, 2).unwrap();
        assert_eq!(mu.nodes.len(), 2);
        assert!((mu.nodes[0] + 1.0).abs() < 1e-14 && (mu.nodes[1] - 1.0).abs() < 1e-14);
        assert!((mu.weights[0][(0, 0)].re - 0.5).abs() < 1e-14);
        let sys = block_lanczos(&mu, 1, 0, Side::Plus).unwrap();
        assert!(sys.recovered_b.at(0).unwrap()[(0, 0)].norm() < 1e-14);
        assert!((sys.recovered_a.at(0).unwrap()[(0, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn one_site_measure_is_projection() {
        let r = random_jacobi(2, 5, 0.7, 0, 3).unwrap();
        let mu = spectral_measure_halfline(&r, 1, Side::Plus, 1).unwrap();
        assert!(max_abs_diff(&mu.total_mass(), &eye(2)) < 1e-12);
        let first: CMat = mu.nodes.iter().zip(&mu.weights).fold(zeros(2), |acc, (x, w)| acc + w * c(*x, 0.0));
        assert!(max_abs_diff(&first, r.b(1).unwrap()) < 1e-12);
    }

    #[test]
    fn round_trip_both_sides() {
        let c = random_jacobi(2, 42, 0.8, -20, 20).unwrap();
        for side in [Side::Plus, Side::Minus] {
            let mu = spectral_measure_halfline(&c, 0, side, 12).unwrap();
            assert!(max_abs_diff(&mu.total_mass(), &eye(2)) < 1e-12);
            let sys = block_lanczos(&mu, 5, 0, side).unwrap();
            assert!(sys.orthonormality_defect() < 1e-8);
            for k in 0..5i64 {
                let (ka, kb) = match side {
                    Side::Plus => (k, k),
                    Side::Minus => (-k - 1, -k),
                };
                assert!(max_abs_diff(sys.recovered_a.at(ka).unwrap(), c.a(ka).unwrap()) < 1e-8);
                assert!(max_abs_diff(sys.recovered_b.at(kb).unwrap(), c.b(kb).unwrap()) < 1e-8);
            }
        }
    }

    #[test]
    fn polynomials_match_solutions() {
        let f = free(1);
        let sys = block_lanczos(&spectral_measure_halfline(&f, 0, Side::Plus, 10).unwrap(), 2, 0, Side::Plus).unwrap();
        let z = c(0.0, 2.0);
        assert!((sys.polys[1].eval(z)[(0, 0)] - z).norm() < 1e-12);
        assert!((sys.polys[2].eval(z)[(0, 0)] - (z * z - 1.0)).norm() < 1e-12);
        let r = random_jacobi(2, 9, 0.6, -15, 15).unwrap();
        for k in 0..=4 {
            assert!(poly_solution_identity(&r, 0, c(0.3, 0.8), k, 12).unwrap() < 1e-8);
        }
    }

    #[test]
    fn borg_reconstruction() {
        let mu = borg_measure(-1.0, 3.0, 2, 10_000).unwrap();
        let sys = block_lanczos(&mu, 5, 0, Side::Plus).unwrap();
        let b = borg_jacobi(-1.0, 3.0, 2).unwrap();
        for k in 0..5 {
            assert!(max_abs_diff(sys.recovered_a.at(k).unwrap(), b.a(k).unwrap()) < 1e-6);
            assert!(max_abs_diff(sys.recovered_b.at(k).unwrap(), b.b(k).unwrap()) < 1e-6);
        }
    }
}
