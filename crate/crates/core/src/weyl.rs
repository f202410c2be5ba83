//! Fundamental solutions, Weyl-Titchmarsh matrices, Green's matrices and the
//! `2m x 2m` Weyl matrix of a matrix-valued Jacobi operator.
//!
//! `M+` is obtained by running its Riccati recursion downward (the stable
//! direction) from a seed far to the right, `M-` by running upward from a
//! seed far to the left. When the coefficient tails are periodic (the
//! default constant tails included) the seed is exact: it is read off the
//! stable/unstable subspace of the period monodromy. Otherwise the seed is
//! the leading large-`z` asymptotics and the depth is doubled until the
//! value settles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Extension, JacobiCoefficients, MatrixSeq};
use crate::linalg::{block2, eigenvalues, eye, inverse, op_norm, range_basis, sign, CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    BigM,
    SmallM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// Exact tail seeds when the coefficients are eventually periodic,
    /// asymptotic seeds otherwise.
    Auto,
    /// Always use asymptotic seeds with depth doubling.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylOptions {
    pub tol: f64,
    pub seed: SeedPolicy,
    pub max_depth: usize,
}

impl Default for WeylOptions {
    fn default() -> Self {
        Self { tol: 1e-10, seed: SeedPolicy::Auto, max_depth: 1 << 20 }
    }
}

impl WeylOptions {
    pub fn asymptotic() -> Self {
        Self { seed: SeedPolicy::Asymptotic, ..Self::default() }
    }
}

const FIRST_DEPTH: usize = 64;
const MIN_IM: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct WeylValue {
    pub z: C64,
    pub k: i64,
    pub side: Side,
    pub kind: Kind,
    pub value: CMat,
    /// Distance between `k` and the site where the recursion was seeded.
    pub depth: usize,
    /// Norm of the defining Riccati equation at the returned value.
    pub residual: f64,
    /// Distance to the value obtained along the other recursion route.
    pub cross_route: Option<f64>,
}

fn inv(x: &CMat, what: impl FnOnce() -> Error) -> Result<CMat> {
    inverse(x).ok_or_else(what)
}

fn zi(z: C64, m: usize) -> CMat {
    eye(m) * z
}

/// One step of the Riccati recursion of `(side, kind)`, moving from the
/// value at `from` to the neighbouring site (`from - 1` for `Plus`,
/// `from + 1` for `Minus`).
fn riccati_step(c: &JacobiCoefficients, z: C64, side: Side, kind: Kind, from: i64, x: &CMat) -> Result<CMat> {
    let m = c.dim();
    let sing = || Error::SingularInversion(format!("Riccati step at site {from}"));
    match (side, kind) {
        (Side::Plus, Kind::BigM) => {
            let a = c.a(from - 1)?;
            let t = inv(&(x + zi(z, m) - c.b(from)?), sing)?;
            Ok(-(a * t * a))
        }
        (Side::Plus, Kind::SmallM) => {
            let a = c.a(from - 1)?;
            let t = a * x * a + zi(z, m) - c.b(from - 1)?;
            Ok(-inv(&t, sing)?)
        }
        (Side::Minus, Kind::BigM) => {
            let a = c.a(from)?;
            let t = inv(x, sing)?;
            Ok(-(a * t * a) - zi(z, m) + c.b(from + 1)?)
        }
        (Side::Minus, Kind::SmallM) => {
            let a = c.a(from)?;
            let t = a * x * a + zi(z, m) - c.b(from + 1)?;
            Ok(-inv(&t, sing)?)
        }
    }
}

/// Residual of the defining equation linking the values at `k` and its
/// neighbour (`k+1` for `Plus`, `k-1` for `Minus`).
fn riccati_residual(
    c: &JacobiCoefficients,
    z: C64,
    side: Side,
    kind: Kind,
    k: i64,
    at_k: &CMat,
    neighbour: &CMat,
) -> Result<f64> {
    let m = c.dim();
    let id = eye(m);
    let r = match (side, kind) {
        (Side::Plus, Kind::BigM) => {
            let a = c.a(k)?;
            let inv_k = inv(at_k, || Error::SingularInversion("residual".into()))?;
            neighbour + a * inv_k * a + zi(z, m) - c.b(k + 1)?
        }
        (Side::Minus, Kind::BigM) => {
            let a = c.a(k - 1)?;
            let inv_n = inv(neighbour, || Error::SingularInversion("residual".into()))?;
            at_k + a * inv_n * a + zi(z, m) - c.b(k)?
        }
        (Side::Plus, Kind::SmallM) => {
            let a = c.a(k)?;
            a * neighbour * a * at_k + (zi(z, m) - c.b(k)?) * at_k + id
        }
        (Side::Minus, Kind::SmallM) => {
            let a = c.a(k - 1)?;
            a * neighbour * a * at_k + (zi(z, m) - c.b(k)?) * at_k + id
        }
    };
    Ok(op_norm(&r))
}

/// `T_k` maps `(psi(k-1), psi(k))` to `(psi(k), psi(k+1))`.
fn transfer(c: &JacobiCoefficients, z: C64, k: i64) -> Result<CMat> {
    let m = c.dim();
    let ainv = inv(c.a(k)?, || Error::SingularA(k))?;
    let lower_left = -(&ainv * c.a(k - 1)?);
    let lower_right = &ainv * (zi(z, m) - c.b(k)?);
    Ok(block2(&CMat::zeros(m, m), &eye(m), &lower_left, &lower_right))
}

/// Exact `M+(s)` (resp. `M-(s)`) when the coefficients are `p`-periodic to
/// the right (resp. left) of `s`.
fn floquet_seed(c: &JacobiCoefficients, z: C64, side: Side, s: i64, p: usize) -> Result<CMat> {
    let m = c.dim();
    let n = 2 * m;
    let first = match side {
        Side::Plus => s + 1,
        Side::Minus => s - p as i64 + 1,
    };
    let mut mono = eye(n);
    for j in 0..p as i64 {
        mono = transfer(c, z, first + j)? * mono;
    }
    // Cayley map about a unimodular point ζ: |mu| < 1  <->  Re w < 0. ζ is
    // chosen away from the multipliers, which crowd ±1 near band edges.
    let id = eye(n);
    let mus = eigenvalues(&mono);
    let zeta = (0..16)
        .map(|j| C64::from_polar(1.0, std::f64::consts::PI * (j as f64 + 0.5) / 8.0))
        .max_by(|a, b| {
            let score = |w: &C64| {
                mus.iter()
                    .map(|m| ((m - w).norm().min((m + w).norm())) / m.norm().max(1.0))
                    .fold(f64::INFINITY, f64::min)
            };
            score(a).total_cmp(&score(b))
        })
        .expect("non-empty candidate list");
    let cayley =
        inv(&(&mono + &id * zeta), || Error::Numerical("singular Cayley transform".into()))? * (&mono - &id * zeta);
    let sgn = sign(&cayley)?;
    let proj = match side {
        Side::Plus => (&id - sgn) * C64::new(0.5, 0.0),
        Side::Minus => (&id + sgn) * C64::new(0.5, 0.0),
    };
    let basis = range_basis(&proj, m);
    let v1 = basis.rows(0, m).into_owned();
    let v2 = basis.rows(m, m).into_owned();
    let v1inv = inv(&v1, || Error::Numerical("degenerate Floquet subspace".into()))?;
    Ok(-(c.a(s)? * v2 * v1inv))
}

fn asymptotic_seed(c: &JacobiCoefficients, z: C64, side: Side, kind: Kind, s: i64) -> Result<CMat> {
    let m = c.dim();
    Ok(match (side, kind) {
        (_, Kind::SmallM) => eye(m) * (-1.0 / z),
        (Side::Plus, Kind::BigM) => {
            let a = c.a(s)?;
            -(a * a) / z
        }
        (Side::Minus, Kind::BigM) => c.b(s)? - zi(z, m),
    })
}

fn big_to_small(c: &JacobiCoefficients, z: C64, side: Side, s: i64, big: &CMat) -> Result<CMat> {
    let m = c.dim();
    let sing = || Error::SingularInversion(format!("M at site {s}"));
    match side {
        Side::Plus => Ok(-inv(&(big + zi(z, m) - c.b(s)?), sing)?),
        Side::Minus => inv(big, sing),
    }
}

/// Where an exact tail seed is available for this side, if anywhere.
fn exact_seed_site(c: &JacobiCoefficients, side: Side, toward: i64) -> Option<(i64, usize)> {
    match side {
        Side::Plus => c.right_tail().map(|(s, p)| (s.max(toward), p)),
        Side::Minus => c.left_tail().map(|(s, p)| (s.min(toward), p)),
    }
}

/// Runs the recursion from `start` (holding `seed`) to `end`; the values are
/// returned in ascending site order.
fn sweep(
    c: &JacobiCoefficients,
    z: C64,
    side: Side,
    kind: Kind,
    start: i64,
    seed: CMat,
    end: i64,
) -> Result<Vec<CMat>> {
    let len = (start - end).unsigned_abs() as usize + 1;
    let mut out = Vec::with_capacity(len);
    let mut x = seed;
    let mut site = start;
    out.push(x.clone());
    let step: i64 = if side == Side::Plus { -1 } else { 1 };
    while site != end {
        x = riccati_step(c, z, side, kind, site, &x)?;
        site += step;
        out.push(x.clone());
    }
    if side == Side::Plus {
        out.reverse();
    }
    Ok(out)
}

fn check_z(z: C64) -> Result<()> {
    if z.im.abs() < MIN_IM {
        return Err(Error::NearRealAxis(z.im.abs()));
    }
    Ok(())
}

/// Values of `M±` or `m±` at every site of `[lo, hi]`, together with the
/// seeding depth measured from the far end of the range.
pub fn weyl_profile(
    c: &JacobiCoefficients,
    z: C64,
    side: Side,
    kind: Kind,
    lo: i64,
    hi: i64,
    opts: &WeylOptions,
) -> Result<(Vec<CMat>, usize)> {
    check_z(z)?;
    if hi < lo {
        return Err(Error::WindowTooSmall { lo, hi });
    }
    let (near, far) = match side {
        Side::Plus => (lo, hi),
        Side::Minus => (hi, lo),
    };
    if opts.seed == SeedPolicy::Auto {
        // An ill-conditioned Floquet splitting (z essentially at a band
        // edge) falls through to the asymptotic seed.
        if let Some((s, big)) =
            exact_seed_site(c, side, far).and_then(|(s, p)| floquet_seed(c, z, side, s, p).ok().map(|b| (s, b)))
        {
            let seed = match kind {
                Kind::BigM => big,
                Kind::SmallM => big_to_small(c, z, side, s, &big)?,
            };
            let mut vals = sweep(c, z, side, kind, s, seed, near)?;
            // Trim the part between the seed site and the requested range.
            match side {
                Side::Plus => vals.truncate((hi - lo + 1) as usize),
                Side::Minus => {
                    let skip = (lo - s) as usize;
                    vals.drain(..skip);
                }
            }
            return Ok((vals, (far - s).unsigned_abs() as usize));
        }
    }
    let dir: i64 = if side == Side::Plus { 1 } else { -1 };
    let mut depth = FIRST_DEPTH;
    let mut previous: Option<CMat> = None;
    loop {
        let s = far + dir * depth as i64;
        let seed = asymptotic_seed(c, z, side, kind, s).map_err(|_| window_error(c, side, s))?;
        let vals = sweep(c, z, side, kind, s, seed, near).map_err(|e| match e {
            Error::OutOfWindow(_) => window_error(c, side, s),
            other => other,
        })?;
        let at_far = match side {
            Side::Plus => vals[(far - near) as usize].clone(),
            Side::Minus => vals[vals.len() - 1 - (near - far) as usize].clone(),
        };
        if let Some(prev) = previous {
            let diff = op_norm(&(&at_far - &prev));
            if diff < opts.tol * op_norm(&at_far).max(1.0) {
                let mut vals = vals;
                match side {
                    Side::Plus => vals.truncate((hi - lo + 1) as usize),
                    Side::Minus => {
                        let skip = vals.len() - (hi - lo + 1) as usize;
                        vals.drain(..skip);
                    }
                }
                return Ok((vals, depth));
            }
        }
        previous = Some(at_far);
        if depth >= opts.max_depth {
            return Err(Error::NoConvergence { depth });
        }
        depth *= 2;
    }
}

fn window_error(c: &JacobiCoefficients, side: Side, s: i64) -> Error {
    let (lo, hi) = c.window();
    match side {
        Side::Plus => Error::WindowTooSmall { lo, hi: s },
        Side::Minus => Error::WindowTooSmall { lo: s, hi },
    }
}

fn single(c: &JacobiCoefficients, z: C64, k: i64, side: Side, kind: Kind, opts: &WeylOptions) -> Result<WeylValue> {
    let (lo, hi) = match side {
        Side::Plus => (k, k + 1),
        Side::Minus => (k - 1, k),
    };
    let (vals, depth) = weyl_profile(c, z, side, kind, lo, hi, opts)?;
    let (at_k, neighbour) = match side {
        Side::Plus => (&vals[0], &vals[1]),
        Side::Minus => (&vals[1], &vals[0]),
    };
    let residual = riccati_residual(c, z, side, kind, k, at_k, neighbour)?;
    Ok(WeylValue { z, k, side, kind, value: at_k.clone(), depth, residual, cross_route: None })
}

/// Half-line `m±(z, k)`.
pub fn weyl_m_small(c: &JacobiCoefficients, z: C64, k: i64, side: Side, opts: &WeylOptions) -> Result<WeylValue> {
    single(c, z, k, side, Kind::SmallM, opts)
}

/// `M±(z, k)` from `m±` through `M+ = -m+^{-1} - z + B`, `M- = m-^{-1}`,
/// cross-checked against the direct Riccati recursion for `M±`.
pub fn weyl_m_big(c: &JacobiCoefficients, z: C64, k: i64, side: Side, opts: &WeylOptions) -> Result<WeylValue> {
    let small = single(c, z, k, side, Kind::SmallM, opts)?;
    let m = c.dim();
    let sing = || Error::SingularInversion(format!("m at site {k} (z = {z} near a pole)"));
    let minv = inv(&small.value, sing)?;
    let value = match side {
        Side::Plus => -minv - zi(z, m) + c.b(k)?,
        Side::Minus => minv,
    };
    let (lo, hi) = match side {
        Side::Plus => (k, k + 1),
        Side::Minus => (k - 1, k),
    };
    let (direct, direct_depth) = weyl_profile(c, z, side, Kind::BigM, lo, hi, opts)?;
    let (direct_k, neighbour) = match side {
        Side::Plus => (&direct[0], &direct[1]),
        Side::Minus => (&direct[1], &direct[0]),
    };
    let cross = op_norm(&(&value - direct_k));
    let residual = riccati_residual(c, z, side, Kind::BigM, k, &value, neighbour)?;
    Ok(WeylValue {
        z,
        k,
        side,
        kind: Kind::BigM,
        value,
        depth: small.depth.max(direct_depth),
        residual,
        cross_route: Some(cross),
    })
}

/// `θ(z,·,k0)` and `φ(z,·,k0)` on a site range.
///
/// Long ranges are renormalized: the stored values at site `k` equal the
/// true ones times `exp(-log_scale(k))`, the same factor for `θ` and `φ`.
#[derive(Debug, Clone)]
pub struct FundamentalSolutions {
    pub z: C64,
    pub k0: i64,
    pub theta: MatrixSeq,
    pub phi: MatrixSeq,
    log_scale: Vec<f64>,
}

const RESCALE_AT: f64 = 1e100;

impl FundamentalSolutions {
    pub fn range(&self) -> (i64, i64) {
        self.theta.window()
    }

    pub fn log_scale(&self, k: i64) -> Result<f64> {
        let (lo, hi) = self.range();
        if k < lo || k > hi {
            return Err(Error::OutOfWindow(k));
        }
        Ok(self.log_scale[(k - lo) as usize])
    }

    /// True (unscaled) `θ(z,k,k0)`.
    pub fn theta_at(&self, k: i64) -> Result<CMat> {
        Ok(self.theta.at(k)? * C64::new(self.log_scale(k)?.exp(), 0.0))
    }

    /// True (unscaled) `φ(z,k,k0)`.
    pub fn phi_at(&self, k: i64) -> Result<CMat> {
        Ok(self.phi.at(k)? * C64::new(self.log_scale(k)?.exp(), 0.0))
    }
}

pub fn fundamental_solutions(
    c: &JacobiCoefficients,
    z: C64,
    k0: i64,
    lo: i64,
    hi: i64,
) -> Result<FundamentalSolutions> {
    let (lo, hi) = (lo.min(k0), hi.max(k0 + 1));
    let m = c.dim();
    let n = (hi - lo + 1) as usize;
    let zero = CMat::zeros(m, m);
    let mut theta = vec![zero.clone(); n];
    let mut phi = vec![zero.clone(); n];
    let mut scale = vec![0.0; n];
    let at = |k: i64| (k - lo) as usize;
    theta[at(k0)] = eye(m);
    phi[at(k0 + 1)] = eye(m);

    // Rightward: psi(k+1) = A(k)^{-1}[(z - B(k)) psi(k) - A(k-1) psi(k-1)].
    let mut log = 0.0;
    for k in (k0 + 1)..hi {
        let ainv = inv(c.a(k)?, || Error::SingularA(k))?;
        let zb = zi(z, m) - c.b(k)?;
        let am = c.a(k - 1)?;
        let mut t = &ainv * (&zb * &theta[at(k)] - am * &theta[at(k - 1)]);
        let mut p = &ainv * (&zb * &phi[at(k)] - am * &phi[at(k - 1)]);
        let big = op_norm(&t).max(op_norm(&p));
        if big > RESCALE_AT {
            let f = C64::new(1.0 / big, 0.0);
            t *= f;
            p *= f;
            theta[at(k)] *= f;
            phi[at(k)] *= f;
            log += big.ln();
            scale[at(k)] = log;
        }
        theta[at(k + 1)] = t;
        phi[at(k + 1)] = p;
        scale[at(k + 1)] = log;
    }
    // Leftward: psi(k-1) = A(k-1)^{-1}[(z - B(k)) psi(k) - A(k) psi(k+1)].
    let mut log = 0.0;
    for k in ((lo + 1)..=k0).rev() {
        let ainv = inv(c.a(k - 1)?, || Error::SingularA(k - 1))?;
        let zb = zi(z, m) - c.b(k)?;
        let ak = c.a(k)?;
        let mut t = &ainv * (&zb * &theta[at(k)] - ak * &theta[at(k + 1)]);
        let mut p = &ainv * (&zb * &phi[at(k)] - ak * &phi[at(k + 1)]);
        let big = op_norm(&t).max(op_norm(&p));
        if big > RESCALE_AT {
            let f = C64::new(1.0 / big, 0.0);
            t *= f;
            p *= f;
            theta[at(k)] *= f;
            phi[at(k)] *= f;
            log += big.ln();
            scale[at(k)] = log;
        }
        theta[at(k - 1)] = t;
        phi[at(k - 1)] = p;
        scale[at(k - 1)] = log;
    }
    Ok(FundamentalSolutions {
        z,
        k0,
        theta: MatrixSeq::new(lo, theta, Extension::Forbidden)?,
        phi: MatrixSeq::new(lo, phi, Extension::Forbidden)?,
        log_scale: scale,
    })
}

/// Finite-segment approximation `M_N(z,k0)`: the value of `M` for which the
/// Weyl combination `θ - φ A(k0)^{-1} M` vanishes at site `N`, i.e.
/// `A(k0) φ(z,N,k0)^{-1} θ(z,N,k0)`. Tends to `M±(z,k0)` as `N → ±∞`.
///
/// Evaluated by the Riccati recursion started from the Dirichlet condition
/// at `N`; forming `φ(N)^{-1} θ(N)` directly loses all accuracy once the
/// growth rates of the solutions separate.
pub fn m_finite(c: &JacobiCoefficients, z: C64, k0: i64, n: i64) -> Result<CMat> {
    if n == k0 {
        return Err(Error::SingularPhi(n));
    }
    let m = c.dim();
    let values = if n > k0 {
        sweep(c, z, Side::Plus, Kind::BigM, n - 1, CMat::zeros(m, m), k0)?
    } else {
        let seed = c.b(n + 1)? - zi(z, m);
        sweep(c, z, Side::Minus, Kind::BigM, n + 1, seed, k0)?
    };
    let at = if n > k0 { 0 } else { values.len() - 1 };
    Ok(values[at].clone())
}

/// Weyl solutions `ψ±(z,k,k0) = θ - φ A(k0)^{-1} M±(z,k0)` on `[lo, hi]`,
/// built literally from the fundamental solutions.
pub fn weyl_solutions(
    c: &JacobiCoefficients,
    z: C64,
    k0: i64,
    lo: i64,
    hi: i64,
    opts: &WeylOptions,
) -> Result<(MatrixSeq, MatrixSeq)> {
    let fs = fundamental_solutions(c, z, k0, lo, hi)?;
    let ainv = inv(c.a(k0)?, || Error::SingularA(k0))?;
    let mp = weyl_m_big(c, z, k0, Side::Plus, opts)?.value;
    let mm = weyl_m_big(c, z, k0, Side::Minus, opts)?.value;
    let (flo, fhi) = fs.range();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for k in flo..=fhi {
        let th = fs.theta_at(k)?;
        let ph = fs.phi_at(k)?;
        plus.push(&th - &ph * &ainv * &mp);
        minus.push(&th - &ph * &ainv * &mm);
    }
    Ok((MatrixSeq::new(flo, plus, Extension::Forbidden)?, MatrixSeq::new(flo, minus, Extension::Forbidden)?))
}

/// Both `M+` and `M-` over `[lo, hi]`.
fn both_profiles(
    c: &JacobiCoefficients,
    z: C64,
    lo: i64,
    hi: i64,
    opts: &WeylOptions,
) -> Result<(Vec<CMat>, Vec<CMat>)> {
    let (plus, _) = weyl_profile(c, z, Side::Plus, Kind::BigM, lo, hi, opts)?;
    let (minus, _) = weyl_profile(c, z, Side::Minus, Kind::BigM, lo, hi, opts)?;
    Ok((plus, minus))
}

/// Diagonal Green's matrix `g(z,k) = [M-(z,k) - M+(z,k)]^{-1}`.
pub fn diagonal_green(c: &JacobiCoefficients, z: C64, k: i64, opts: &WeylOptions) -> Result<CMat> {
    let (plus, minus) = both_profiles(c, z, k, k, opts)?;
    inv(&(&minus[0] - &plus[0]), || Error::SingularInversion(format!("M- - M+ at site {k}")))
}

/// Full-line Green's matrix `G(z,k,l)`.
///
/// The Weyl solutions are advanced through the ratios
/// `ψ±(k+1) = -A(k)^{-1} M±(z,k) ψ±(k)`, which is the same object as the
/// θ/φ combination but does not suffer from cancellation over long
/// distances.
pub fn greens_full(c: &JacobiCoefficients, z: C64, k: i64, l: i64, opts: &WeylOptions) -> Result<CMat> {
    let (lo, hi) = (k.min(l), k.max(l));
    let (plus, minus) = both_profiles(c, z, lo, hi, opts)?;
    let at = |s: i64| (s - lo) as usize;
    let g0 = inv(&(&minus[at(lo)] - &plus[at(lo)]), || Error::SingularInversion(format!("M- - M+ at site {lo}")))?;
    let mut out = g0;
    if l <= k {
        // psi+(z,k,l) g(l)
        for j in l..k {
            let ainv = inv(c.a(j)?, || Error::SingularA(j))?;
            out = -(ainv * &plus[at(j)]) * out;
        }
    } else {
        // g(k) psi+(z̄,l,k)^*
        for j in k..l {
            let ainv = inv(c.a(j)?, || Error::SingularA(j))?;
            out *= -(&plus[at(j)] * ainv);
        }
    }
    Ok(out)
}

/// Green's matrix of the half-line operator `H±,k0` (Dirichlet boundary at
/// `k0 ∓ 1`).
pub fn greens_halfline(
    c: &JacobiCoefficients,
    z: C64,
    k: i64,
    l: i64,
    k0: i64,
    side: Side,
    opts: &WeylOptions,
) -> Result<CMat> {
    check_z(z)?;
    for s in [k, l] {
        let wrong = match side {
            Side::Plus => s < k0,
            Side::Minus => s > k0,
        };
        if wrong {
            return Err(Error::WrongSide { site: s, boundary: k0 });
        }
    }
    let (lo, hi) = (k.min(l), k.max(l));
    match side {
        Side::Plus => {
            let r = k0 - 1;
            let ar_inv = inv(c.a(r)?, || Error::SingularA(r))?;
            let (mp, _) = weyl_profile(c, z, Side::Plus, Kind::BigM, r, hi, opts)?;
            let at = |s: i64| (s - r) as usize;
            let fz = fundamental_solutions(c, z, r, r, hi)?;
            let fzb = fundamental_solutions(c, z.conj(), r, r, hi)?;
            if l <= k {
                // -psi+(z,k,r) A(r)^{-1} phi(z̄,l,r)^*
                let mut psi = eye(c.dim());
                for j in r..k {
                    let ainv = inv(c.a(j)?, || Error::SingularA(j))?;
                    psi = -(ainv * &mp[at(j)]) * psi;
                }
                Ok(-(psi * ar_inv * fzb.phi_at(l)?.adjoint()))
            } else {
                // -phi(z,k,r) A(r)^{-1} psi+(z̄,l,r)^*
                let mut psi_adj = eye(c.dim());
                for j in r..l {
                    let ainv = inv(c.a(j)?, || Error::SingularA(j))?;
                    psi_adj *= -(&mp[at(j)] * ainv);
                }
                Ok(-(fz.phi_at(k)? * ar_inv * psi_adj))
            }
        }
        Side::Minus => {
            let r = k0 + 1;
            let ar_inv = inv(c.a(r)?, || Error::SingularA(r))?;
            let (mm, _) = weyl_profile(c, z, Side::Minus, Kind::BigM, lo, r, opts)?;
            let at = |s: i64| (s - lo) as usize;
            let fz = fundamental_solutions(c, z, r, lo, r)?;
            let fzb = fundamental_solutions(c, z.conj(), r, lo, r)?;
            let sing = |j: i64| move || Error::SingularInversion(format!("M- at site {j}"));
            if l <= k {
                // phi(z,k,r) A(r)^{-1} psi-(z̄,l,r)^*
                let mut psi_adj = eye(c.dim());
                for j in (l..r).rev() {
                    let minv = inv(&mm[at(j)], sing(j))?;
                    psi_adj *= -(c.a(j)? * minv);
                }
                Ok(fz.phi_at(k)? * ar_inv * psi_adj)
            } else {
                // psi-(z,k,r) A(r)^{-1} phi(z̄,l,r)^*
                let mut psi = eye(c.dim());
                for j in (k..r).rev() {
                    let minv = inv(&mm[at(j)], sing(j))?;
                    psi = -(minv * c.a(j)?) * psi;
                }
                Ok(psi * ar_inv * fzb.phi_at(l)?.adjoint())
            }
        }
    }
}

/// The `2m x 2m` Weyl-Titchmarsh matrix in block form.
#[derive(Debug, Clone, PartialEq)]
pub struct BigWeylMatrix {
    pub z: C64,
    pub k: i64,
    pub m11: CMat,
    pub m12: CMat,
    pub m21: CMat,
    pub m22: CMat,
    /// `‖M+ g M- − M- g M+‖`: the two orderings of the (2,2) block.
    pub m22_discrepancy: f64,
}

impl BigWeylMatrix {
    pub fn from_pair(z: C64, k: i64, m_plus: &CMat, m_minus: &CMat) -> Result<Self> {
        let g = inv(&(m_minus - m_plus), || Error::SingularInversion(format!("M- - M+ at site {k}")))?;
        let sum = m_minus + m_plus;
        let half = C64::new(0.5, 0.0);
        let m22 = m_plus * &g * m_minus;
        let alt = m_minus * &g * m_plus;
        Ok(Self {
            z,
            k,
            m12: &g * &sum * half,
            m21: &sum * &g * half,
            m22_discrepancy: op_norm(&(&m22 - &alt)),
            m22,
            m11: g,
        })
    }

    pub fn to_matrix(&self) -> CMat {
        block2(&self.m11, &self.m12, &self.m21, &self.m22)
    }
}

pub fn big_weyl(c: &JacobiCoefficients, z: C64, k: i64, opts: &WeylOptions) -> Result<BigWeylMatrix> {
    let (plus, minus) = both_profiles(c, z, k, k, opts)?;
    BigWeylMatrix::from_pair(z, k, &plus[0], &minus[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::validate_jacobi;
    use crate::linalg::{c as cx, max_abs_diff, zeros};

    fn free() -> JacobiCoefficients {
        validate_jacobi(MatrixSeq::constant(eye(1), 0, 0), MatrixSeq::constant(zeros(1), 0, 0)).unwrap()
    }

    fn sqrt_branch(z: C64) -> C64 {
        ((z - 2.0).ln() * 0.5 + (z + 2.0).ln() * 0.5).exp()
    }

    #[test]
    fn free_fundamental_solutions() {
        let z = cx(0.0, 2.0);
        let fs = fundamental_solutions(&free(), z, 0, -3, 5).unwrap();
        assert_eq!(fs.theta.at(0).unwrap()[(0, 0)], cx(1.0, 0.0));
        assert_eq!(fs.theta.at(1).unwrap()[(0, 0)], cx(0.0, 0.0));
        assert_eq!(fs.phi.at(0).unwrap()[(0, 0)], cx(0.0, 0.0));
        assert_eq!(fs.phi.at(1).unwrap()[(0, 0)], cx(1.0, 0.0));
        assert!((fs.phi.at(2).unwrap()[(0, 0)] - z).norm() < 1e-15);
        assert!((fs.phi.at(3).unwrap()[(0, 0)] - (z * z - 1.0)).norm() < 1e-15);
    }

    #[test]
    fn free_weyl_values_both_policies() {
        let z = cx(0.0, 2.0);
        let want_plus = (-z + sqrt_branch(z)) / 2.0;
        let want_minus = (-z - sqrt_branch(z)) / 2.0;
        for opts in [WeylOptions::default(), WeylOptions::asymptotic()] {
            let mp = weyl_m_big(&free(), z, 3, Side::Plus, &opts).unwrap();
            let mm = weyl_m_big(&free(), z, 3, Side::Minus, &opts).unwrap();
            assert!((mp.value[(0, 0)] - want_plus).norm() < 1e-10);
            assert!((mm.value[(0, 0)] - want_minus).norm() < 1e-10);
            assert!(mp.residual < 1e-9 && mm.residual < 1e-9);
            let sp = weyl_m_small(&free(), z, 3, Side::Plus, &opts).unwrap();
            assert!((sp.value[(0, 0)] - cx(0.0, 2f64.sqrt() - 1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn finite_approximation() {
        let z = cx(0.0, 2.0);
        assert!(m_finite(&free(), z, 0, 1).unwrap()[(0, 0)].norm() == 0.0);
        let v = m_finite(&free(), z, 0, 30).unwrap()[(0, 0)];
        assert!((v - cx(0.0, 2f64.sqrt() - 1.0)).norm() < 1e-9);
    }

    #[test]
    fn free_green_diagonal() {
        let z = cx(0.3, 0.7);
        let g = greens_full(&free(), z, 2, 2, &WeylOptions::default()).unwrap();
        assert!((g[(0, 0)] + 1.0 / sqrt_branch(z)).norm() < 1e-12);
        let a = greens_full(&free(), z, 1, 4, &WeylOptions::default()).unwrap();
        let b = greens_full(&free(), z.conj(), 4, 1, &WeylOptions::default()).unwrap();
        assert!(max_abs_diff(&a, &b.adjoint()) < 1e-12);
    }

    #[test]
    fn halfline_diagonal_is_small_m() {
        let z = cx(0.0, 2.0);
        let g = greens_halfline(&free(), z, 5, 5, 5, Side::Plus, &WeylOptions::default()).unwrap();
        assert!((g[(0, 0)] - cx(0.0, 2f64.sqrt() - 1.0)).norm() < 1e-12);
        let g = greens_halfline(&free(), z, 5, 5, 5, Side::Minus, &WeylOptions::default()).unwrap();
        assert!((g[(0, 0)] - cx(0.0, 2f64.sqrt() - 1.0)).norm() < 1e-12);
        assert!(matches!(
            greens_halfline(&free(), z, 4, 5, 5, Side::Plus, &WeylOptions::default()),
            Err(Error::WrongSide { .. })
        ));
    }

    #[test]
    fn free_big_weyl_blocks() {
        let z = cx(0.4, 1.1);
        let w = big_weyl(&free(), z, 0, &WeylOptions::default()).unwrap();
        let r = sqrt_branch(z);
        assert!((w.m11[(0, 0)] + 1.0 / r).norm() < 1e-12);
        assert!((w.m12[(0, 0)] - z / (2.0 * r)).norm() < 1e-12);
        assert!((w.m21[(0, 0)] - z / (2.0 * r)).norm() < 1e-12);
        assert!(w.m22_discrepancy < 1e-12);
    }

    #[test]
    fn near_axis_rejected() {
        assert!(matches!(
            weyl_m_small(&free(), cx(0.1, 1e-10), 0, Side::Plus, &WeylOptions::default()),
            Err(Error::NearRealAxis(_))
        ));
    }
}
