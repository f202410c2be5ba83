//! Small dense complex matrix helpers built on `nalgebra`.
//!
//! Everything here works on `m x m` (or `2m x 2m`) blocks; large operators go
//! through [`crate::band`] instead.

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<Complex64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn scalar(n: usize, s: C64) -> CMat {
    CMat::from_diagonal_element(n, n, s)
}

pub fn from_real_diag(d: &[f64]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&x| c(x, 0.0))))
}

/// Build a complex matrix from real row-major data.
pub fn from_real_rows(n: usize, data: &[f64]) -> CMat {
    CMat::from_row_iterator(n, n, data.iter().map(|&x| c(x, 0.0)))
}

/// Largest singular value.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().iter().fold(0.0f64, |acc, &s| acc.max(s))
}

/// Smallest singular value.
pub fn min_singular(a: &CMat) -> f64 {
    a.clone().singular_values().iter().fold(f64::INFINITY, |acc, &s| acc.min(s))
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    let inv = a.clone().try_inverse()?;
    if inv.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
        Some(inv)
    } else {
        None
    }
}

/// `(M + M*)/2`.
pub fn re_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// `(M - M*)/(2i)`, Hermitian for every square `M`.
pub fn im_part(a: &CMat) -> CMat {
    (a - a.adjoint()) * c(0.0, -0.5)
}

pub fn hermitian_defect(a: &CMat) -> f64 {
    op_norm(&(a - a.adjoint()))
}

pub fn is_hermitian(a: &CMat, rel_tol: f64) -> bool {
    let scale = op_norm(a).max(f64::MIN_POSITIVE);
    hermitian_defect(a) <= rel_tol * scale
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Only the Hermitian part of `a` is used.
pub fn herm_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let h = re_part(a);
    let eig = SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn herm_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(re_part(a)).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_herm_eigenvalue(a: &CMat) -> f64 {
    herm_eigenvalues(a).first().copied().unwrap_or(f64::INFINITY)
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn herm_fn(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = herm_eig(a);
    let d = from_real_diag(&vals.iter().map(|&x| f(x)).collect::<Vec<_>>());
    &vecs * d * vecs.adjoint()
}

/// Principal square root of a Hermitian positive semidefinite matrix.
/// Slightly negative eigenvalues from roundoff are clamped to zero.
pub fn psd_sqrt(a: &CMat) -> CMat {
    herm_fn(a, |x| x.max(0.0).sqrt())
}

/// Inverse of the principal square root of a Hermitian positive definite matrix.
pub fn pd_inv_sqrt(a: &CMat) -> Result<CMat> {
    let (vals, vecs) = herm_eig(a);
    let top = vals.last().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    if vals.first().copied().unwrap_or(0.0) <= 1e-14 * top {
        return Err(Error::SingularInversion("inverse square root of a non-definite matrix".into()));
    }
    let d = from_real_diag(&vals.iter().map(|&x| 1.0 / x.sqrt()).collect::<Vec<_>>());
    Ok(&vecs * d * vecs.adjoint())
}

/// Principal square root of an upper triangular matrix (Björck-Hammarling).
fn sqrt_upper_triangular(t: &CMat) -> CMat {
    let n = t.nrows();
    let mut u = CMat::zeros(n, n);
    for i in 0..n {
        u[(i, i)] = t[(i, i)].sqrt();
    }
    for j in 0..n {
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in (i + 1)..j {
                s -= u[(i, k)] * u[(k, j)];
            }
            let den = u[(i, i)] + u[(j, j)];
            u[(i, j)] = if den.norm() > 0.0 { s / den } else { C64::new(0.0, 0.0) };
        }
    }
    u
}

fn schur(a: &CMat) -> (CMat, CMat) {
    let (q, mut t) = Schur::new(a.clone()).unpack();
    let n = t.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    (q, t)
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(a: &CMat) -> Vec<C64> {
    let (_, t) = schur(a);
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Principal matrix logarithm (branch cut on the negative real axis).
///
/// Schur form followed by inverse scaling and squaring; the final logarithm
/// of `I + X` with `||X|| <= 1/4` uses the `atanh` series, so repeated
/// eigenvalues need no special handling.
pub fn logm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let (q, mut t) = schur(a);
    for i in 0..n {
        let l = t[(i, i)];
        let on_cut = l.re <= 0.0 && l.im.abs() <= 1e-14 * l.norm().max(1e-300);
        if l.norm() == 0.0 || on_cut {
            return Err(Error::LogBranchFailure(format!("{l}")));
        }
    }
    let id = eye(n);
    let mut squarings = 0u32;
    while (&t - &id).norm() > 0.25 {
        t = sqrt_upper_triangular(&t);
        squarings += 1;
        if squarings > 80 {
            return Err(Error::Numerical("matrix log square-root iteration stalled".into()));
        }
    }
    let x = &t - &id;
    let denom = &x + &id * c(2.0, 0.0);
    let y = &x * inverse(&denom).ok_or_else(|| Error::Numerical("log series denominator".into()))?;
    let y2 = &y * &y;
    let mut term = y.clone();
    let mut sum = y.clone();
    for k in 1..200 {
        term = &term * &y2;
        let add = &term * c(1.0 / (2 * k + 1) as f64, 0.0);
        sum += &add;
        if add.norm() <= 1e-18 * sum.norm().max(1e-300) {
            break;
        }
    }
    let scale = 2.0 * 2f64.powi(squarings as i32);
    Ok(&q * (sum * c(scale, 0.0)) * q.adjoint())
}

/// Matrix sign function by scaled Newton iteration.
pub fn sign(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let mut x = a.clone();
    let mut last_diff = f64::INFINITY;
    let mut scaling = true;
    for _ in 0..200 {
        let inv = inverse(&x).ok_or_else(|| Error::Numerical("matrix sign: singular iterate".into()))?;
        let mu = if scaling {
            let det = x.determinant().norm();
            if det.is_finite() && det > 0.0 {
                det.powf(-1.0 / n as f64)
            } else {
                1.0
            }
        } else {
            1.0
        };
        let next = (&x * c(mu, 0.0) + inv * c(1.0 / mu, 0.0)) * c(0.5, 0.0);
        let diff = (&next - &x).norm() / next.norm();
        x = next;
        if diff < 1e-2 {
            // Close to convergence: plain Newton converges quadratically.
            scaling = false;
        }
        if diff <= 1e-14 || (diff < 1e-8 && diff >= last_diff) {
            return Ok(x);
        }
        last_diff = diff;
    }
    Err(Error::Numerical("matrix sign iteration did not converge".into()))
}

/// Orthonormal basis (as columns) of the dominant `rank`-dimensional column
/// space of `p`.
pub fn range_basis(p: &CMat, rank: usize) -> CMat {
    // Dominant eigenvectors of P P*; the complex SVD is unreliable for
    // rank-deficient input.
    let (_, vecs) = herm_eig(&(p * p.adjoint()));
    let n = vecs.ncols();
    vecs.columns(n - rank, rank).into_owned()
}

pub fn block(a: &CMat, r: usize, col: usize, n: usize) -> CMat {
    a.view((r, col), (n, n)).into_owned()
}

pub fn set_block(a: &mut CMat, r: usize, col: usize, b: &CMat) {
    a.view_mut((r, col), (b.nrows(), b.ncols())).copy_from(b);
}

/// Assemble a 2x2 block matrix.
pub fn block2(a11: &CMat, a12: &CMat, a21: &CMat, a22: &CMat) -> CMat {
    let m = a11.nrows();
    let mut out = CMat::zeros(2 * m, 2 * m);
    set_block(&mut out, 0, 0, a11);
    set_block(&mut out, 0, m, a12);
    set_block(&mut out, m, 0, a21);
    set_block(&mut out, m, m, a22);
    out
}

/// Max-abs entry difference.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn is_diagonal(a: &CMat, tol: f64) -> bool {
    let n = a.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)].norm() <= tol))
}
