//! Supersymmetric Dirac difference operators
//! `D = [[0, E*], [E, 0]]`, `E = ρ⁻ S⁻ + χ`, their Jacobi squares
//! `H1 = E*E`, `H2 = EE*`, Weyl matrices, the normal form and the
//! constant two-band family.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band::{assemble_band, SiteOrdering};
use crate::error::{Error, Result};
use crate::herglotz::{xi_grid_from, XiGrid, XiTarget};
use crate::lattice::{validate_jacobi, Extension, JacobiCoefficients, MatrixSeq};
use crate::linalg::{
    block2, eye, herm_eig, herm_eigenvalues, inverse, is_hermitian, min_singular, op_norm, zeros, CMat, C64,
};
use crate::models::random_positive;
use crate::weyl::{weyl_m_big, BigWeylMatrix, Side, WeylOptions, WeylValue};

const DENSE_LIMIT: usize = 256;

/// Validated `(ρ, χ)`: `ρ(k)` diagonal positive, `χ(k)` invertible,
/// `ρ(k)χ(k+1) > 0` and `χ(k)ρ(k) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracCoefficients {
    rho: MatrixSeq,
    chi: MatrixSeq,
    m: usize,
    bound: f64,
    h1: JacobiCoefficients,
    h2: JacobiCoefficients,
}

impl DiracCoefficients {
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn rho_seq(&self) -> &MatrixSeq {
        &self.rho
    }

    pub fn chi_seq(&self) -> &MatrixSeq {
        &self.chi
    }

    pub fn rho(&self, k: i64) -> Result<&CMat> {
        self.rho.at(k)
    }

    pub fn chi(&self, k: i64) -> Result<&CMat> {
        self.chi.at(k)
    }

    pub fn window(&self) -> (i64, i64) {
        let (a, b) = self.rho.window();
        let (c, d) = self.chi.window();
        (a.min(c), b.max(d))
    }

    pub fn h1(&self) -> &JacobiCoefficients {
        &self.h1
    }

    pub fn h2(&self) -> &JacobiCoefficients {
        &self.h2
    }

    /// `ρ(k)^{±1/2}`, entrywise on the diagonal.
    fn rho_pow(&self, k: i64, p: f64) -> Result<CMat> {
        let r = self.rho(k)?;
        Ok(CMat::from_fn(
            self.m,
            self.m,
            |i, j| {
                if i == j {
                    C64::new(r[(i, i)].re.powf(p), 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            },
        ))
    }
}

fn positive_definite(x: &CMat) -> bool {
    let scale = op_norm(x);
    is_hermitian(x, 1e-10) && herm_eigenvalues(x)[0] > 1e-12 * scale
}

pub fn validate_dirac(rho: MatrixSeq, chi: MatrixSeq) -> Result<DiracCoefficients> {
    let m = rho.dim();
    if chi.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: chi.dim() });
    }
    let (rlo, rhi) = rho.window();
    for k in rlo..=rhi {
        let r = rho.at(k)?;
        let scale = op_norm(r);
        for i in 0..m {
            for j in 0..m {
                let x = r[(i, j)];
                let bad = if i == j { !(x.re > 0.0) || x.im.abs() > 1e-14 * scale } else { x.norm() > 1e-14 * scale };
                if bad {
                    return Err(Error::NotDiagonalPositive(k));
                }
            }
        }
    }
    let (clo, chi_hi) = chi.window();
    for k in clo..=chi_hi {
        let x = chi.at(k)?;
        if !(min_singular(x) > 1e-12 * op_norm(x)) {
            return Err(Error::SingularChi(k));
        }
    }
    let (lo, hi) = (rlo.min(clo), rhi.max(chi_hi));
    let mut bound: f64 = 0.0;
    for k in lo..=hi {
        if let (Ok(r), Ok(c)) = (rho.at(k), chi.at(k)) {
            bound = bound.max(op_norm(r) + op_norm(c));
            if !positive_definite(&(c * r)) {
                return Err(Error::PositivityFail(k));
            }
            if let Ok(cn) = chi.at(k + 1) {
                if !positive_definite(&(r * cn)) {
                    return Err(Error::PositivityFail(k));
                }
            }
        }
    }
    let (h1, h2) = squares(&rho, &chi)?;
    Ok(DiracCoefficients { rho, chi, m, bound, h1, h2 })
}

fn period_of(s: &MatrixSeq) -> Option<usize> {
    match s.extension() {
        Extension::Periodic(p) => Some(p),
        _ => None,
    }
}

/// `(A1, B1, A2, B2)` as sequences sharing the extension of the inputs.
fn squares(rho: &MatrixSeq, chi: &MatrixSeq) -> Result<(JacobiCoefficients, JacobiCoefficients)> {
    let a1 = |k: i64| -> Result<CMat> { Ok(rho.at(k)? * chi.at(k + 1)?) };
    let b1 = |k: i64| -> Result<CMat> {
        let r = rho.at(k)?;
        let c = chi.at(k)?;
        Ok(r * r + c.adjoint() * c)
    };
    let a2 = |k: i64| -> Result<CMat> { Ok(chi.at(k)? * rho.at(k)?) };
    let b2 = |k: i64| -> Result<CMat> {
        let r = rho.at(k - 1)?;
        let c = chi.at(k)?;
        Ok(r * r + c * c.adjoint())
    };
    let collect = |f: &dyn Fn(i64) -> Result<CMat>, lo: i64, hi: i64, ext: Extension| -> Result<MatrixSeq> {
        let v = (lo..=hi).map(f).collect::<Result<Vec<_>>>()?;
        MatrixSeq::new(lo, v, ext)
    };
    let (lo, hi) = {
        let (a, b) = rho.window();
        let (c, d) = chi.window();
        (a.min(c), b.max(d))
    };
    let seqs = match (period_of(rho), period_of(chi)) {
        (Some(p), Some(q)) => {
            let l = p / gcd(p, q) * q;
            let ext = Extension::Periodic(l);
            let top = lo + l as i64 - 1;
            [
                collect(&a1, lo, top, ext)?,
                collect(&b1, lo, top, ext)?,
                collect(&a2, lo, top, ext)?,
                collect(&b2, lo, top, ext)?,
            ]
        }
        _ if rho.extension() == Extension::Forbidden || chi.extension() == Extension::Forbidden => {
            let ext = Extension::Forbidden;
            [
                collect(&a1, lo, hi - 1, ext)?,
                collect(&b1, lo, hi, ext)?,
                collect(&a2, lo, hi, ext)?,
                collect(&b2, lo + 1, hi, ext)?,
            ]
        }
        _ => {
            // Constant tails: widen by one site so both tails are constant.
            let ext = Extension::ConstantTail;
            [
                collect(&a1, lo - 1, hi, ext)?,
                collect(&b1, lo, hi, ext)?,
                collect(&a2, lo, hi, ext)?,
                collect(&b2, lo, hi + 1, ext)?,
            ]
        }
    };
    let [a1, b1, a2, b2] = seqs;
    Ok((validate_jacobi(a1, b1)?, validate_jacobi(a2, b2)?))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `H1 = E*E` with `A1 = ρχ⁺`, `B1 = ρ² + χ*χ`, and `H2 = EE*` with
/// `A2 = χρ`, `B2 = (ρ⁻)² + χχ*`.
pub fn factorize_susy(d: &DiracCoefficients) -> (JacobiCoefficients, JacobiCoefficients) {
    (d.h1.clone(), d.h2.clone())
}

/// Boundary treatment of a finite Dirac section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiracBoundary {
    /// `E` maps the window to itself; the coupling from site `lo-1` is dropped.
    Open,
    /// The window is closed into a ring; `ρ(hi)` couples site `hi` to `lo`.
    Periodic,
}

/// Finite section of `D` on the sites `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracTruncation {
    pub lo: i64,
    pub m: usize,
    pub boundary: DiracBoundary,
    rho: Vec<CMat>,
    chi: Vec<CMat>,
}

pub fn truncate_dirac(d: &DiracCoefficients, lo: i64, hi: i64, boundary: DiracBoundary) -> Result<DiracTruncation> {
    truncate_pair(&d.rho, &d.chi, lo, hi, boundary)
}

/// Truncation of an arbitrary (not necessarily normal-form) pair.
pub fn truncate_pair(
    rho: &MatrixSeq,
    chi: &MatrixSeq,
    lo: i64,
    hi: i64,
    boundary: DiracBoundary,
) -> Result<DiracTruncation> {
    let min_sites = if boundary == DiracBoundary::Periodic { 3 } else { 1 };
    if hi - lo + 1 < min_sites {
        return Err(Error::WindowTooSmall { lo, hi });
    }
    let grab = |r: Result<&CMat>| r.cloned().map_err(|_| Error::WindowTooSmall { lo, hi });
    let rho = (lo..=hi).map(|k| grab(rho.at(k))).collect::<Result<Vec<_>>>()?;
    let chi = (lo..=hi).map(|k| grab(chi.at(k))).collect::<Result<Vec<_>>>()?;
    Ok(DiracTruncation { lo, m: chi[0].nrows(), boundary, rho, chi })
}

impl DiracTruncation {
    pub fn sites(&self) -> usize {
        self.chi.len()
    }

    /// The finite `E`: `χ(k)` on the diagonal, `ρ(k-1)` below it.
    pub fn e_matrix(&self) -> CMat {
        let (n, m) = (self.sites(), self.m);
        let mut e = CMat::zeros(n * m, n * m);
        for i in 0..n {
            e.view_mut((i * m, i * m), (m, m)).copy_from(&self.chi[i]);
            if i > 0 {
                e.view_mut((i * m, (i - 1) * m), (m, m)).copy_from(&self.rho[i - 1]);
            }
        }
        if self.boundary == DiracBoundary::Periodic {
            e.view_mut((0, (n - 1) * m), (m, m)).copy_from(&self.rho[n - 1]);
        }
        e
    }

    /// `[[0, E*], [E, 0]]`, first all upper components, then all lower ones.
    pub fn to_dense(&self) -> CMat {
        let e = self.e_matrix();
        let z = CMat::zeros(e.nrows(), e.ncols());
        block2(&z, &e.adjoint(), &e, &z)
    }

    /// `E*E` and `EE*` assembled block by block from the coefficient formulas
    /// (not by multiplying out `E`), including the edge corrections of the
    /// open section.
    pub fn squares_from_coefficients(&self) -> (CMat, CMat) {
        let (n, m) = (self.sites(), self.m);
        let periodic = self.boundary == DiracBoundary::Periodic;
        let mut h1 = CMat::zeros(n * m, n * m);
        let mut h2 = CMat::zeros(n * m, n * m);
        let put = |h: &mut CMat, i: usize, j: usize, x: &CMat| {
            h.view_mut((i * m, j * m), (m, m)).copy_from(x);
            h.view_mut((j * m, i * m), (m, m)).copy_from(&x.adjoint());
        };
        for k in 0..n {
            let (r, c) = (&self.rho[k], &self.chi[k]);
            let mut b1 = c.adjoint() * c;
            if periodic || k + 1 < n {
                b1 += r * r;
            }
            let mut b2 = c * c.adjoint();
            if periodic || k > 0 {
                let rp = &self.rho[(k + n - 1) % n];
                b2 += rp * rp;
            }
            h1.view_mut((k * m, k * m), (m, m)).copy_from(&b1);
            h2.view_mut((k * m, k * m), (m, m)).copy_from(&b2);
            if k + 1 < n || periodic {
                let next = (k + 1) % n;
                put(&mut h1, k, next, &(r * &self.chi[next]));
                put(&mut h2, k, next, &(c * r));
            }
        }
        (h1, h2)
    }

    /// All eigenvalues of the section, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let (n, m) = (self.sites(), self.m);
        if 2 * n * m <= DENSE_LIMIT {
            return herm_eigenvalues(&self.to_dense());
        }
        // Site-interleaved layout: site k carries (u1(k), u2(k)).
        let zero = zeros(m);
        let diag: Vec<CMat> = self.chi.iter().map(|c| block2(&zero, &c.adjoint(), c, &zero)).collect();
        let hop: Vec<CMat> = self.rho.iter().map(|r| block2(&zero, r, &zero, &zero)).collect();
        let mut blocks: Vec<(usize, usize, &CMat)> = diag.iter().enumerate().map(|(i, x)| (i, i, x)).collect();
        for (i, x) in hop.iter().enumerate().take(n - 1) {
            blocks.push((i, i + 1, x));
        }
        let ordering = match self.boundary {
            DiracBoundary::Open => SiteOrdering::Natural,
            DiracBoundary::Periodic => {
                blocks.push((n - 1, 0, &hop[n - 1]));
                SiteOrdering::Folded
            }
        };
        assemble_band(n, 2 * m, ordering, blocks).eigenvalues()
    }
}

/// Paired eigenvector of `D = [[0, E*], [E, 0]]` from an eigenvector of one
/// of the squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SquareComponent {
    /// `u` satisfies `E*E u = z² u`; returns `(u, Eu/z)`.
    Upper,
    /// `u` satisfies `EE* u = z² u`; returns `(E*u/z, u)`.
    Lower,
}

/// Returns the stacked eigenvector and the residual `‖DU − zU‖`.
pub fn susy_eigen_map(e: &CMat, u: &CMat, z: f64, which: SquareComponent) -> Result<(CMat, f64)> {
    if z == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let inv_z = C64::new(1.0 / z, 0.0);
    let (u1, u2) = match which {
        SquareComponent::Upper => (u.clone(), e * u * inv_z),
        SquareComponent::Lower => (e.adjoint() * u * inv_z, u.clone()),
    };
    let mut stacked = CMat::zeros(u1.nrows() + u2.nrows(), u.ncols());
    stacked.view_mut((0, 0), (u1.nrows(), u.ncols())).copy_from(&u1);
    stacked.view_mut((u1.nrows(), 0), (u2.nrows(), u.ncols())).copy_from(&u2);
    let zc = CMat::zeros(e.nrows(), e.ncols());
    let d = block2(&zc, &e.adjoint(), e, &zc);
    let residual = op_norm(&(&d * &stacked - &stacked * C64::new(z, 0.0)));
    Ok((stacked, residual))
}

/// Output of the normal-form reduction of a pair with Hermitian invertible `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    /// `U(k) = diag(ε̃(k)Q(k), ε̃(k)Q(k-1))`.
    pub u: MatrixSeq,
    pub rho_hat: MatrixSeq,
    pub chi_hat: MatrixSeq,
    /// Sign matrices `ε̃(k)`.
    pub eps_tilde: MatrixSeq,
}

impl NormalForm {
    /// Validates `(ρ̂, χ̂)`; positivity of the products is a hypothesis on the
    /// input pair and may fail.
    pub fn into_coefficients(self) -> Result<DiracCoefficients> {
        validate_dirac(self.rho_hat, self.chi_hat)
    }
}

/// Unitary reduction of `(ρ, χ)` with `ρ(k)` Hermitian invertible to a pair
/// with `ρ̂(k)` diagonal positive. The sign recursion starts from
/// `ε̃(lo) = I` at the left end of the window of `ρ`.
pub fn normal_form(rho: &MatrixSeq, chi: &MatrixSeq) -> Result<NormalForm> {
    let m = rho.dim();
    if chi.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: chi.dim() });
    }
    let (lo, hi) = rho.window();
    let n = (hi - lo + 1) as usize;
    let diag = |k: i64| -> Result<(Vec<f64>, CMat)> {
        let r = rho.at(k)?;
        if !is_hermitian(r, 1e-12) {
            return Err(Error::SingularRho(k));
        }
        let (vals, vecs) = herm_eig(r);
        let scale = vals.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if vals.iter().any(|x| x.abs() <= 1e-12 * scale) || scale == 0.0 {
            return Err(Error::SingularRho(k));
        }
        Ok((vals, vecs.adjoint()))
    };
    let mut q = Vec::with_capacity(n);
    let mut rt = Vec::with_capacity(n);
    for k in lo..=hi {
        let (v, qk) = diag(k)?;
        rt.push(v);
        q.push(qk);
    }
    // Q(lo-1) only enters through χ̂(lo); without ρ(lo-1) any unitary will do.
    let q_left = match rho.at(lo - 1) {
        Ok(_) => diag(lo - 1)?.1,
        Err(_) => eye(m),
    };

    let mut eps = vec![vec![1.0; m]; n];
    for i in 0..n.saturating_sub(1) {
        for j in 0..m {
            eps[i + 1][j] = eps[i][j] * rt[i][j].signum();
        }
    }
    let dmat = |d: &[f64]| CMat::from_fn(m, m, |i, j| if i == j { C64::new(d[i], 0.0) } else { C64::new(0.0, 0.0) });
    let mut u = Vec::with_capacity(n);
    let mut rho_hat = Vec::with_capacity(n);
    let mut chi_hat = Vec::with_capacity(n);
    for i in 0..n {
        let k = lo + i as i64;
        let e = dmat(&eps[i]);
        let qm = if i == 0 { &q_left } else { &q[i - 1] };
        let abs: Vec<f64> = rt[i].iter().map(|x| x.abs()).collect();
        rho_hat.push(dmat(&abs));
        chi_hat.push(&e * qm * chi.at(k)? * q[i].adjoint() * &e);
        u.push(block2(&(&e * &q[i]), &zeros(m), &zeros(m), &(&e * qm)));
    }
    Ok(NormalForm {
        u: MatrixSeq::new(lo, u, Extension::Forbidden)?,
        rho_hat: MatrixSeq::new(lo, rho_hat, Extension::Forbidden)?,
        chi_hat: MatrixSeq::new(lo, chi_hat, Extension::Forbidden)?,
        eps_tilde: MatrixSeq::new(lo, eps.iter().map(|d| dmat(d)).collect(), Extension::Forbidden)?,
    })
}

/// Which Jacobi square the Dirac Weyl matrix is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiracRoute {
    H1,
    H2,
}

fn weyl_h1(d: &DiracCoefficients, z: C64, k: i64, side: Side, opts: &WeylOptions) -> Result<(CMat, WeylValue)> {
    let w = weyl_m_big(&d.h1, z * z, k, side, opts)?;
    let rs = d.rho_pow(k, -0.5)?;
    let v = (&rs * &w.value * &rs - d.rho(k)?) / z;
    Ok((v, w))
}

fn weyl_h2(d: &DiracCoefficients, z: C64, k: i64, side: Side, opts: &WeylOptions) -> Result<(CMat, WeylValue)> {
    let w = weyl_m_big(&d.h2, z * z, k, side, opts)?;
    let chi_inv = inverse(d.chi(k)?).ok_or(Error::SingularChi(k))?;
    // With X = ρ^{1/2} M^D ρ^{1/2} and Y = χ⁻¹ M^{H2} (χ*)⁻¹ the relation
    // X = Y (z + X) gives X = z (I − Y)⁻¹ Y.
    let y = &chi_inv * &w.value * chi_inv.adjoint();
    let m = d.m;
    let inner =
        inverse(&(eye(m) - &y)).ok_or_else(|| Error::SingularTransform(format!("I - Y at site {k}, z = {z}")))?;
    let x = inner * y * z;
    let rs = d.rho_pow(k, -0.5)?;
    Ok((&rs * x * &rs, w))
}

/// `M^D±(z,k)` along the chosen route; `cross_route` holds the distance to
/// the other route.
pub fn dirac_weyl(
    d: &DiracCoefficients,
    z: C64,
    k: i64,
    side: Side,
    route: DiracRoute,
    opts: &WeylOptions,
) -> Result<WeylValue> {
    let (v1, w1) = weyl_h1(d, z, k, side, opts)?;
    let (v2, w2) = weyl_h2(d, z, k, side, opts)?;
    let cross = op_norm(&(&v1 - &v2));
    let (value, w) = match route {
        DiracRoute::H1 => (v1, w1),
        DiracRoute::H2 => (v2, w2),
    };
    Ok(WeylValue { z, k, side, kind: w.kind, value, depth: w.depth, residual: w.residual, cross_route: Some(cross) })
}

/// The `H2` relation in its closed form `−zρ⁻¹ − zρ^{-1/2}[χ⁻¹M^{H2}(χ*)⁻¹]⁻¹ρ^{-1/2}`.
/// Kept as a diagnostic: it disagrees with the `H1` route (see
/// [`dirac_weyl`] for the consistent solution of the same relation).
pub fn dirac_weyl_h2_closed_form(
    d: &DiracCoefficients,
    z: C64,
    k: i64,
    side: Side,
    opts: &WeylOptions,
) -> Result<CMat> {
    let w = weyl_m_big(&d.h2, z * z, k, side, opts)?;
    let chi_inv = inverse(d.chi(k)?).ok_or(Error::SingularChi(k))?;
    let y = &chi_inv * &w.value * chi_inv.adjoint();
    let y_inv = inverse(&y).ok_or_else(|| Error::SingularTransform(format!("Y at site {k}")))?;
    let rs = d.rho_pow(k, -0.5)?;
    let rinv = d.rho_pow(k, -1.0)?;
    Ok(-(rinv * z) - &rs * y_inv * &rs * z)
}

/// `2m x 2m` Dirac Weyl matrix from `M^D±` (route `H1`).
pub fn dirac_big_weyl(d: &DiracCoefficients, z: C64, k: i64, opts: &WeylOptions) -> Result<BigWeylMatrix> {
    let p = weyl_h1(d, z, k, Side::Plus, opts)?.0;
    let m = weyl_h1(d, z, k, Side::Minus, opts)?.0;
    BigWeylMatrix::from_pair(z, k, &p, &m)
}

/// `Υ^D(λ,k)` on a λ-grid.
pub fn upsilon_grid(
    d: &DiracCoefficients,
    k: i64,
    lambdas: &[f64],
    epsilon: f64,
    opts: &WeylOptions,
) -> Result<XiGrid> {
    xi_grid_from(|z| Ok(dirac_big_weyl(d, z, k, opts)?.to_matrix()), k, lambdas, epsilon, XiTarget::UpsilonDirac)
}

/// One constant member of the two-band family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BorgFamilyMember {
    pub signs: Vec<i8>,
    pub rho_value: Vec<f64>,
    pub chi_value: Vec<f64>,
}

impl BorgFamilyMember {
    pub fn coefficients(&self) -> Result<DiracCoefficients> {
        let rho = CMat::from_fn(self.signs.len(), self.signs.len(), |i, j| {
            C64::new(if i == j { self.rho_value[i] } else { 0.0 }, 0.0)
        });
        let chi = CMat::from_fn(self.signs.len(), self.signs.len(), |i, j| {
            C64::new(if i == j { self.chi_value[i] } else { 0.0 }, 0.0)
        });
        validate_dirac(MatrixSeq::constant(rho, 0, 0), MatrixSeq::constant(chi, 0, 0))
    }
}

/// `ρ_j = ½(√E+ − ε_j√E-)`, `χ_j = ½(√E+ + ε_j√E-)`.
pub fn borg_family(e_minus: f64, e_plus: f64, signs: &[i8]) -> Result<BorgFamilyMember> {
    if !(e_minus >= 0.0) || !(e_plus > e_minus) || !e_plus.is_finite() {
        return Err(Error::BadInterval(format!("need 0 <= E- < E+, got [{e_minus}, {e_plus}]")));
    }
    if signs.is_empty() || signs.iter().any(|s| *s != 1 && *s != -1) {
        return Err(Error::InvalidSequence(format!("signs must be ±1, got {signs:?}")));
    }
    let (sp, sm) = (e_plus.sqrt(), e_minus.sqrt());
    Ok(BorgFamilyMember {
        signs: signs.to_vec(),
        rho_value: signs.iter().map(|&e| 0.5 * (sp - f64::from(e) * sm)).collect(),
        chi_value: signs.iter().map(|&e| 0.5 * (sp + f64::from(e) * sm)).collect(),
    })
}

/// All `2^m` sign patterns, in lexicographic order with `+1` first.
pub fn all_signs(m: usize) -> Vec<Vec<i8>> {
    (0..1usize << m).map(|bits| (0..m).map(|j| if bits >> (m - 1 - j) & 1 == 0 { 1 } else { -1 }).collect()).collect()
}

/// The whole family; members are evaluated in parallel.
pub fn borg_family_all(e_minus: f64, e_plus: f64, m: usize) -> Result<Vec<BorgFamilyMember>> {
    all_signs(m).par_iter().map(|s| borg_family(e_minus, e_plus, s)).collect()
}

/// Random periodic pair with `ρ = r(k)I`, `r ∈ [0.5, 1.5]`, and `χ(k)`
/// Hermitian positive definite, which satisfies the positivity hypothesis.
pub fn random_dirac(m: usize, seed: u64, period: usize, amplitude: f64) -> Result<DiracCoefficients> {
    if period == 0 {
        return Err(Error::InvalidSequence("period must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rho = Vec::with_capacity(period);
    let mut chi = Vec::with_capacity(period);
    for _ in 0..period {
        rho.push(eye(m) * C64::new(rng.random_range(0.5..1.5), 0.0));
        chi.push(random_positive(&mut rng, m, amplitude));
    }
    validate_dirac(MatrixSeq::periodic(0, rho)?, MatrixSeq::periodic(0, chi)?)
}

/// Numerical reading of the reflectionless transfer from `D` to `H1`, `H2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionlessTransfer {
    pub k: i64,
    /// `max ‖Υ^D − ½I‖` over the middle 80% of both bands.
    pub upsilon_deviation: f64,
    /// `max ‖Ξ − ½I‖` of `H1` and `H2` over the middle 80% of `[E-, E+]`.
    pub xi_deviation_h1: f64,
    pub xi_deviation_h2: f64,
    /// Observed ratio `max(ξ deviations) / Υ deviation`.
    pub ratio: f64,
}

pub fn reflectionless_transfer(
    d: &DiracCoefficients,
    k: i64,
    e_minus: f64,
    e_plus: f64,
    epsilon: f64,
    n_nodes: usize,
    opts: &WeylOptions,
) -> Result<ReflectionlessTransfer> {
    use crate::herglotz::xi_grid;
    use crate::quadrature::uniform_grid;
    let (sm, sp) = (e_minus.sqrt(), e_plus.sqrt());
    let w = sp - sm;
    let (lo, hi) = (sm + 0.1 * w, sp - 0.1 * w);
    let band = uniform_grid(lo, hi, n_nodes);
    let both: Vec<f64> = band.iter().map(|x| -x).rev().chain(band.iter().copied()).collect();
    let ups = upsilon_grid(d, k, &both, epsilon, opts)?;
    let upsilon_deviation = ups.max_deviation_from_half(-hi, -lo).max(ups.max_deviation_from_half(lo, hi));
    let ew = e_plus - e_minus;
    let (elo, ehi) = (e_minus + 0.1 * ew, e_plus - 0.1 * ew);
    let lams = uniform_grid(elo, ehi, n_nodes);
    let x1 = xi_grid(&d.h1, k, &lams, epsilon, XiTarget::XiOfG, opts)?.max_deviation_from_half(elo, ehi);
    let x2 = xi_grid(&d.h2, k, &lams, epsilon, XiTarget::XiOfG, opts)?.max_deviation_from_half(elo, ehi);
    let ratio = if upsilon_deviation > 0.0 { x1.max(x2) / upsilon_deviation } else { f64::INFINITY };
    Ok(ReflectionlessTransfer { k, upsilon_deviation, xi_deviation_h1: x1, xi_deviation_h2: x2, ratio })
}
