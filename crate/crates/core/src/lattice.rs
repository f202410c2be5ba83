//! Lattice-indexed matrix sequences, Jacobi coefficients and their Dirichlet
//! truncations.

use serde::{Deserialize, Serialize};

use crate::band::{assemble_band, SiteOrdering};
use crate::error::{Error, Result};
use crate::linalg::{herm_eigenvalues, is_hermitian, op_norm, re_part, CMat};

/// Above this many rows spectra go through the band reduction.
const DENSE_LIMIT: usize = 256;

/// How a sequence is continued outside its stored window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    Periodic(usize),
    #[default]
    ConstantTail,
    Forbidden,
}

/// A sequence of `m x m` matrices indexed by lattice sites.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSeq {
    m: usize,
    lo: i64,
    entries: Vec<CMat>,
    extension: Extension,
}

impl MatrixSeq {
    pub fn new(lo: i64, entries: Vec<CMat>, extension: Extension) -> Result<Self> {
        let first = entries.first().ok_or_else(|| Error::InvalidSequence("empty window".into()))?;
        let m = first.nrows();
        if m == 0 {
            return Err(Error::InvalidSequence("zero matrix dimension".into()));
        }
        for e in &entries {
            if e.nrows() != m || e.ncols() != m {
                return Err(Error::DimensionMismatch { expected: m, found: e.nrows().max(e.ncols()) });
            }
        }
        if let Extension::Periodic(p) = extension {
            if p == 0 || entries.len() < p {
                return Err(Error::InvalidSequence(format!(
                    "period {p} needs at least {p} stored entries, found {}",
                    entries.len()
                )));
            }
            for i in p..entries.len() {
                if entries[i] != entries[i - p] {
                    return Err(Error::InvalidSequence(format!(
                        "entry at site {} differs from its period-{p} image",
                        lo + i as i64
                    )));
                }
            }
        }
        Ok(Self { m, lo, entries, extension })
    }

    /// The same matrix at every site of `[lo, hi]`, constant tails.
    pub fn constant(value: CMat, lo: i64, hi: i64) -> Self {
        let len = (hi - lo + 1).max(1) as usize;
        Self::new(lo, vec![value; len], Extension::ConstantTail).expect("constant sequence is valid")
    }

    /// One period `values` starting at site `lo`, extended periodically.
    pub fn periodic(lo: i64, values: Vec<CMat>) -> Result<Self> {
        let p = values.len();
        Self::new(lo, values, Extension::Periodic(p))
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.entries.len() as i64 - 1
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi())
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn entries(&self) -> &[CMat] {
        &self.entries
    }

    pub fn with_extension(&self, extension: Extension) -> Result<Self> {
        Self::new(self.lo, self.entries.clone(), extension)
    }

    pub fn at(&self, k: i64) -> Result<&CMat> {
        let (lo, hi) = self.window();
        if (lo..=hi).contains(&k) {
            return Ok(&self.entries[(k - lo) as usize]);
        }
        match self.extension {
            Extension::Forbidden => Err(Error::OutOfWindow(k)),
            Extension::ConstantTail => {
                Ok(if k < lo { &self.entries[0] } else { &self.entries[self.entries.len() - 1] })
            }
            Extension::Periodic(p) => Ok(&self.entries[(k - lo).rem_euclid(p as i64) as usize]),
        }
    }

    pub fn map(&self, f: impl Fn(i64, &CMat) -> CMat) -> Self {
        let entries = self.entries.iter().enumerate().map(|(i, e)| f(self.lo + i as i64, e)).collect();
        Self { m: self.m, lo: self.lo, entries, extension: self.extension }
    }

    /// Smallest `s` such that the sequence is `period`-periodic on `[s, inf)`,
    /// together with that period.
    pub fn right_tail(&self) -> Option<(i64, usize)> {
        match self.extension {
            Extension::Forbidden => None,
            Extension::ConstantTail => Some((self.hi(), 1)),
            Extension::Periodic(p) => Some((self.lo, p)),
        }
    }

    /// Largest `s` such that the sequence is `period`-periodic on `(-inf, s]`.
    pub fn left_tail(&self) -> Option<(i64, usize)> {
        match self.extension {
            Extension::Forbidden => None,
            Extension::ConstantTail => Some((self.lo, 1)),
            Extension::Periodic(p) => Some((self.hi(), p)),
        }
    }
}

/// Coefficients `(A, B)` of `H = A S+ + A- S- + B` with `A > 0`, `B = B*`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiCoefficients {
    a: MatrixSeq,
    b: MatrixSeq,
    m: usize,
    bound: f64,
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

pub fn validate_jacobi(a: MatrixSeq, b: MatrixSeq) -> Result<JacobiCoefficients> {
    let m = a.dim();
    if b.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: b.dim() });
    }
    let mut bound: f64 = 0.0;
    let (alo, ahi) = a.window();
    let (blo, bhi) = b.window();
    for k in alo..=ahi {
        let x = a.at(k)?;
        let scale = op_norm(x);
        if !is_hermitian(x, 1e-12) {
            return Err(Error::NotPositiveDefinite(k));
        }
        let min = herm_eigenvalues(x)[0];
        if !(min > 1e-12 * scale) {
            return Err(Error::NotPositiveDefinite(k));
        }
    }
    for k in blo..=bhi {
        if !is_hermitian(b.at(k)?, 1e-12) {
            return Err(Error::NotHermitian(k));
        }
    }
    for k in alo.min(blo)..=ahi.max(bhi) {
        let na = a.at(k).map(op_norm).unwrap_or(0.0);
        let nb = b.at(k).map(op_norm).unwrap_or(0.0);
        bound = bound.max(na + nb);
    }
    Ok(JacobiCoefficients { a: a.map(|_, x| re_part(x)), b: b.map(|_, x| re_part(x)), m, bound })
}

impl JacobiCoefficients {
    pub fn dim(&self) -> usize {
        self.m
    }

    /// Uniform bound `sup_k ||A(k)|| + ||B(k)||` over the stored windows.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn a_seq(&self) -> &MatrixSeq {
        &self.a
    }

    pub fn b_seq(&self) -> &MatrixSeq {
        &self.b
    }

    pub fn a(&self, k: i64) -> Result<&CMat> {
        self.a.at(k)
    }

    pub fn b(&self, k: i64) -> Result<&CMat> {
        self.b.at(k)
    }

    /// Smallest window containing every stored entry.
    pub fn window(&self) -> (i64, i64) {
        let (alo, ahi) = self.a.window();
        let (blo, bhi) = self.b.window();
        (alo.min(blo), ahi.max(bhi))
    }

    /// `(s, p)`: coefficients are `p`-periodic on `[s, inf)`.
    pub fn right_tail(&self) -> Option<(i64, usize)> {
        let (sa, pa) = self.a.right_tail()?;
        let (sb, pb) = self.b.right_tail()?;
        Some((sa.max(sb), lcm(pa, pb)))
    }

    /// `(s, p)`: coefficients are `p`-periodic on `(-inf, s]`.
    pub fn left_tail(&self) -> Option<(i64, usize)> {
        let (sa, pa) = self.a.left_tail()?;
        let (sb, pb) = self.b.left_tail()?;
        Some((sa.min(sb), lcm(pa, pb)))
    }
}

/// Dirichlet section of `H` on the sites `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    lo: i64,
    m: usize,
    diag: Vec<CMat>,
    upper: Vec<CMat>,
}

pub fn truncate_jacobi(c: &JacobiCoefficients, lo: i64, hi: i64) -> Result<TruncatedOperator> {
    if hi < lo {
        return Err(Error::WindowTooSmall { lo, hi });
    }
    let grab = |r: Result<&CMat>| r.cloned().map_err(|_| Error::WindowTooSmall { lo: lo - 1, hi });
    let diag = (lo..=hi).map(|k| grab(c.b(k))).collect::<Result<Vec<_>>>()?;
    let upper = (lo..hi).map(|k| grab(c.a(k))).collect::<Result<Vec<_>>>()?;
    Ok(TruncatedOperator { lo, m: c.dim(), diag, upper })
}

impl TruncatedOperator {
    /// Build directly from diagonal blocks and the couplings between
    /// consecutive sites (`upper[i]` couples site `i` to `i+1`).
    pub fn from_blocks(lo: i64, diag: Vec<CMat>, upper: Vec<CMat>) -> Result<Self> {
        let m = diag.first().map(|d| d.nrows()).ok_or(Error::WindowTooSmall { lo, hi: lo - 1 })?;
        if upper.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch { expected: diag.len() - 1, found: upper.len() });
        }
        Ok(Self { lo, m, diag, upper })
    }

    pub fn sites(&self) -> (i64, i64) {
        (self.lo, self.lo + self.diag.len() as i64 - 1)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag_blocks(&self) -> &[CMat] {
        &self.diag
    }

    pub fn upper_blocks(&self) -> &[CMat] {
        &self.upper
    }

    /// Row offset of lattice site `k` in the dense matrix.
    pub fn offset(&self, k: i64) -> Option<usize> {
        let (lo, hi) = self.sites();
        (lo..=hi).contains(&k).then(|| (k - lo) as usize * self.m)
    }

    pub fn to_dense(&self) -> CMat {
        let m = self.m;
        let n = self.diag.len() * m;
        let mut h = CMat::zeros(n, n);
        for (i, d) in self.diag.iter().enumerate() {
            h.view_mut((i * m, i * m), (m, m)).copy_from(d);
        }
        for (i, a) in self.upper.iter().enumerate() {
            h.view_mut((i * m, (i + 1) * m), (m, m)).copy_from(a);
            h.view_mut(((i + 1) * m, i * m), (m, m)).copy_from(&a.adjoint());
        }
        h
    }

    fn band(&self) -> crate::band::HermitianBand {
        let diag = self.diag.iter().enumerate().map(|(i, d)| (i, i, d));
        let sub = self.upper.iter().enumerate().map(|(i, a)| (i, i + 1, a));
        assemble_band(self.diag.len(), self.m, SiteOrdering::Natural, diag.chain(sub).collect::<Vec<_>>())
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.diag.len() * self.m <= DENSE_LIMIT {
            herm_eigenvalues(&self.to_dense())
        } else {
            self.band().eigenvalues()
        }
    }
}

pub fn spectrum_estimate(t: &TruncatedOperator) -> Vec<f64> {
    t.eigenvalues()
}

/// `W(f, g)(k) = f(k) A(k) g(k+1) - f(k+1) A(k) g(k)`.
pub fn wronskian(f: &MatrixSeq, g: &MatrixSeq, a: &MatrixSeq, k: i64) -> Result<CMat> {
    let ak = a.at(k)?;
    Ok(f.at(k)? * ak * g.at(k + 1)? - f.at(k + 1)? * ak * g.at(k)?)
}
