//! Formal matrix power series in `w = 1/z` and the large-`z` expansion
//! coefficients of `m±`, `M±`, `g` and `-d/dz ln g`.

use crate::error::{Error, Result};
use crate::herglotz::XiGrid;
use crate::lattice::JacobiCoefficients;
use crate::linalg::{eye, inverse, CMat, C64};
use crate::quadrature::simpson_weights;
use crate::weyl::Side;

/// Highest order the expansion routines accept.
pub const MAX_ORDER: usize = 16;

/// `S(z) = Σ_{n=v}^{J} c_n z^{-n}` with matrix coefficients; `v` may be
/// negative (e.g. `-z + ...` has `v = -1`).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSeries {
    m: usize,
    valuation: i64,
    coeffs: Vec<CMat>,
}

impl MatrixSeries {
    /// `coeffs[i]` multiplies `z^{-(valuation + i)}`.
    pub fn new(valuation: i64, coeffs: Vec<CMat>) -> Self {
        let m = coeffs.first().map(|c| c.nrows()).expect("series needs at least one coefficient");
        Self { m, valuation, coeffs }
    }

    pub fn identity(m: usize, order: i64) -> Self {
        let mut coeffs = vec![CMat::zeros(m, m); (order + 1).max(1) as usize];
        coeffs[0] = eye(m);
        Self { m, valuation: 0, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn valuation(&self) -> i64 {
        self.valuation
    }

    /// Highest power of `1/z` known exactly.
    pub fn order(&self) -> i64 {
        self.valuation + self.coeffs.len() as i64 - 1
    }

    /// Coefficient of `z^{-n}` (zero below the valuation).
    pub fn coeff(&self, n: i64) -> CMat {
        if n < self.valuation || n > self.order() {
            return CMat::zeros(self.m, self.m);
        }
        self.coeffs[(n - self.valuation) as usize].clone()
    }

    /// A finite sum `Σ coeffs[i] z^{-(valuation+i)}` regarded as exact
    /// through `z^{-order}`.
    pub fn polynomial(valuation: i64, coeffs: Vec<CMat>, order: i64) -> Self {
        let mut s = Self::new(valuation, coeffs);
        let m = s.m;
        while s.order() < order {
            s.coeffs.push(CMat::zeros(m, m));
        }
        s
    }

    pub fn truncate(&self, order: i64) -> Self {
        let order = order.min(self.order());
        let coeffs = (self.valuation..=order.max(self.valuation)).map(|n| self.coeff(n)).collect();
        Self { m: self.m, valuation: self.valuation, coeffs }
    }

    fn from_fn(m: usize, valuation: i64, order: i64, f: impl Fn(i64) -> CMat) -> Self {
        let coeffs = (valuation..=order.max(valuation)).map(f).collect();
        Self { m, valuation, coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let v = self.valuation.min(other.valuation);
        let j = self.order().min(other.order());
        Self::from_fn(self.m, v, j, |n| self.coeff(n) + other.coeff(n))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { m: self.m, valuation: self.valuation, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Left multiplication of every coefficient by `x`.
    pub fn left_mul(&self, x: &CMat) -> Self {
        Self { m: self.m, valuation: self.valuation, coeffs: self.coeffs.iter().map(|c| x * c).collect() }
    }

    pub fn right_mul(&self, x: &CMat) -> Self {
        Self { m: self.m, valuation: self.valuation, coeffs: self.coeffs.iter().map(|c| c * x).collect() }
    }

    /// Noncommutative product, exact through the order both factors allow.
    pub fn mul(&self, other: &Self) -> Self {
        let v = self.valuation + other.valuation;
        let j = (self.order() + other.valuation).min(other.order() + self.valuation);
        Self::from_fn(self.m, v, j, |n| {
            let mut acc = CMat::zeros(self.m, self.m);
            for p in self.valuation..=self.order() {
                let q = n - p;
                if q < other.valuation || q > other.order() {
                    continue;
                }
                acc += &self.coeffs[(p - self.valuation) as usize] * &other.coeffs[(q - other.valuation) as usize];
            }
            acc
        })
    }

    /// Two-sided inverse; the leading coefficient must be invertible.
    pub fn inverse(&self) -> Result<Self> {
        let lead =
            inverse(&self.coeffs[0]).ok_or_else(|| Error::SingularInversion("leading series coefficient".into()))?;
        let v = -self.valuation;
        let j = self.order() - 2 * self.valuation;
        let len = (j - v + 1) as usize;
        let mut d: Vec<CMat> = Vec::with_capacity(len);
        for i in 0..len {
            if i == 0 {
                d.push(lead.clone());
                continue;
            }
            let mut acc = CMat::zeros(self.m, self.m);
            for t in 1..=i.min(self.coeffs.len() - 1) {
                acc += &self.coeffs[t] * &d[i - t];
            }
            d.push(-(&lead * acc));
        }
        Ok(Self { m: self.m, valuation: v, coeffs: d })
    }

    /// `d/dz`, using `d/dz z^{-n} = -n z^{-n-1}`.
    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * C64::new(-((self.valuation + i as i64) as f64), 0.0))
            .collect();
        Self { m: self.m, valuation: self.valuation + 1, coeffs }
    }

    /// Formal `log(I + C)` for a series `C` with positive valuation.
    pub fn log_one_plus(&self) -> Result<Self> {
        if self.valuation < 1 && self.coeffs.iter().take((1 - self.valuation) as usize).any(|c| c.norm() > 0.0) {
            return Err(Error::Numerical("formal log needs I + O(1/z)".into()));
        }
        let c = self.truncate(self.order());
        let c = MatrixSeries::from_fn(self.m, 1, self.order(), |n| c.coeff(n));
        let j = c.order();
        let mut out = MatrixSeries::from_fn(self.m, 1, j, |_| CMat::zeros(self.m, self.m));
        let mut power = c.clone();
        for n in 1..=j {
            let sgn = if n % 2 == 1 { 1.0 } else { -1.0 };
            out = out.add(&power.scale(C64::new(sgn / n as f64, 0.0)));
            power = power.mul(&c).truncate(j);
            if power.valuation > j {
                break;
            }
        }
        Ok(out)
    }
}

fn check_order(j: usize) -> Result<()> {
    if j == 0 || j > MAX_ORDER {
        return Err(Error::InvalidSequence(format!("series order {j} outside 1..={MAX_ORDER}")));
    }
    Ok(())
}

fn window_err(k: i64, j: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::OutOfWindow(_) => Error::WindowTooSmall { lo: k - j as i64, hi: k + j as i64 },
        other => other,
    }
}

/// `m±,1 .. m±,J` at site `k`.
fn m_coeffs(c: &JacobiCoefficients, k: i64, side: Side, j: usize) -> Result<Vec<CMat>> {
    let m = c.dim();
    let b = c.b(k)?;
    let mut out = vec![-eye(m)];
    if j >= 2 {
        out.push(-b.clone());
    }
    if j <= 2 {
        return Ok(out);
    }
    let (a, nb) = match side {
        Side::Plus => (c.a(k)?, k + 1),
        Side::Minus => (c.a(k - 1)?, k - 1),
    };
    let shifted = m_coeffs(c, nb, side, j - 2)?;
    for n in 2..j {
        // m_{n+1} = B m_n - Σ_{l=1}^{n-1} A m^{shift}_{n-l} A m_l
        let mut next = b * &out[n - 1];
        for l in 1..n {
            next -= a * &shifted[n - l - 1] * a * &out[l - 1];
        }
        out.push(next);
    }
    Ok(out)
}

pub fn m_series(c: &JacobiCoefficients, k: i64, side: Side, j: usize) -> Result<MatrixSeries> {
    check_order(j)?;
    let coeffs = m_coeffs(c, k, side, j).map_err(window_err(k, j))?;
    Ok(MatrixSeries::new(1, coeffs))
}

/// `M+,1 .. M+,J` at site `k`.
fn m_big_plus(c: &JacobiCoefficients, k: i64, j: usize) -> Result<Vec<CMat>> {
    let a = c.a(k)?;
    let ainv = inverse(a).ok_or(Error::SingularA(k))?;
    let bp = c.b(k + 1)?;
    let mut out = vec![-(a * a)];
    if j == 1 {
        return Ok(out);
    }
    let shifted = if j >= 3 { m_big_plus(c, k + 1, j - 2)? } else { Vec::new() };
    let abai = a * bp * &ainv;
    for n in 1..j {
        // M_{n+1} = A B+ A^{-1} M_n - Σ_{l=1}^{n-1} A M+_{n-l} A^{-1} M_l
        let mut next = &abai * &out[n - 1];
        for l in 1..n {
            next -= a * &shifted[n - l - 1] * &ainv * &out[l - 1];
        }
        out.push(next);
    }
    Ok(out)
}

/// `M-,0 .. M-,J` at site `k` (the `-z` term is implicit).
fn m_big_minus(c: &JacobiCoefficients, k: i64, j: usize) -> Result<Vec<CMat>> {
    let am = c.a(k - 1)?;
    let aminv = inverse(am).ok_or(Error::SingularA(k - 1))?;
    let b = c.b(k)?;
    let mut out = vec![b.clone()];
    if j >= 1 {
        out.push(am * am);
    }
    if j <= 1 {
        return Ok(out);
    }
    let shifted = m_big_minus(c, k - 1, j - 1)?;
    // Y_l = A-^{-1} M-_l A-
    let y: Vec<CMat> = shifted.iter().map(|x| &aminv * x * am).collect();
    for n in 1..j {
        // M_{n+1} = -B Y_n + Σ_{l=0}^{n} M_{n-l} Y_l
        let mut next = -(b * &y[n]);
        for l in 0..=n {
            next += &out[n - l] * &y[l];
        }
        out.push(next);
    }
    Ok(out)
}

/// `M±(z,k)` expansion: `M+` starts at `z^{-1}`, `M-` carries `-z + B(k) + ...`.
#[allow(non_snake_case)]
pub fn M_series(c: &JacobiCoefficients, k: i64, side: Side, j: usize) -> Result<MatrixSeries> {
    check_order(j)?;
    match side {
        Side::Plus => Ok(MatrixSeries::new(1, m_big_plus(c, k, j).map_err(window_err(k, j))?)),
        Side::Minus => {
            let mut coeffs = vec![-eye(c.dim())];
            coeffs.extend(m_big_minus(c, k, j).map_err(window_err(k, j))?);
            Ok(MatrixSeries::new(-1, coeffs))
        }
    }
}

/// `g(z,k) = [M-(z,k) - M+(z,k)]^{-1} = Σ_{j≥1} r_j(k) z^{-j}` through `z^{-J}`.
pub fn g_series(c: &JacobiCoefficients, k: i64, j: usize) -> Result<MatrixSeries> {
    check_order(j)?;
    if j == 1 {
        return Ok(MatrixSeries::new(1, vec![-eye(c.dim())]));
    }
    let inner = j - 2;
    let plus = if inner == 0 {
        MatrixSeries::new(1, vec![CMat::zeros(c.dim(), c.dim())]).truncate(0)
    } else {
        M_series(c, k, Side::Plus, inner)?
    };
    let minus = if inner == 0 {
        MatrixSeries::new(-1, vec![-eye(c.dim()), c.b(k)?.clone()])
    } else {
        M_series(c, k, Side::Minus, inner)?
    };
    let diff = minus.sub(&plus).truncate(inner as i64);
    Ok(diff.inverse()?.truncate(j as i64))
}

/// Coefficients `s_j(k)` of `-d/dz ln g(z,k) = Σ_{j≥1} s_j(k) z^{-j}`, with
/// `ln g = -ln(z) I + log(I + C(z))` for `g = -z^{-1}(I + C(z))`.
pub fn s_series(c: &JacobiCoefficients, k: i64, j: usize) -> Result<MatrixSeries> {
    check_order(j)?;
    let m = c.dim();
    // g through z^{-J} gives C through z^{-(J-1)}.
    let g = g_series(c, k, j)?;
    let cser = MatrixSeries::from_fn(m, 1, j as i64 - 1, |n| -g.coeff(n + 1));
    let mut coeffs = vec![eye(m)];
    if j > 1 {
        let log = cser.log_one_plus()?;
        let dlog = log.derivative();
        for n in 2..=j as i64 {
            coeffs.push(-dlog.coeff(n));
        }
    }
    Ok(MatrixSeries::new(1, coeffs))
}

/// Right-hand side of the trace formula,
/// `½(E-^{j-1} + E+^{j-1}) I + ½(j-1) ∫_{E-}^{E+} λ^{j-2} [I - 2Ξ(λ)] dλ`,
/// integrated by composite Simpson over the grid nodes. The grid must be
/// uniform with its first and last nodes at `E-` and `E+`.
pub fn trace_rhs(j: usize, xi: &XiGrid, e_minus: f64, e_plus: f64) -> Result<CMat> {
    let n = xi.lambdas.len();
    if n < 16 {
        return Err(Error::GridTooCoarse { nodes: n, min: 16 });
    }
    if j == 0 {
        return Err(Error::InvalidSequence("trace formula index starts at 1".into()));
    }
    let m = xi.values[0].nrows();
    let jf = j as i32;
    let mut out = eye(m) * C64::new(0.5 * (e_minus.powi(jf - 1) + e_plus.powi(jf - 1)), 0.0);
    if j == 1 {
        return Ok(out);
    }
    let (first, last) = (xi.lambdas[0], xi.lambdas[n - 1]);
    let h = (last - first) / (n - 1) as f64;
    let tol = 1e-9 * (e_plus - e_minus).abs().max(1.0);
    if (first - e_minus).abs() > tol || (last - e_plus).abs() > tol {
        return Err(Error::BadInterval(format!(
            "grid spans [{first}, {last}] but the trace formula needs [{e_minus}, {e_plus}]"
        )));
    }
    let w = simpson_weights(n, h)?;
    let id = eye(m);
    let mut integral = CMat::zeros(m, m);
    for ((lam, x), wt) in xi.lambdas.iter().zip(&xi.values).zip(&w) {
        integral += (&id - x * C64::new(2.0, 0.0)) * C64::new(wt * lam.powi(jf - 2), 0.0);
    }
    out += integral * C64::new(0.5 * (j - 1) as f64, 0.0);
    Ok(out)
}
