//! Eigenvalues of large Hermitian band matrices.
//!
//! Truncated Jacobi and Dirac operators are block-banded; a dense complex
//! eigensolve of a few thousand rows is needlessly slow, so the band is
//! reduced to tridiagonal form by Givens bulge chasing and the tridiagonal
//! problem is finished with implicit QL.

use crate::linalg::{CMat, C64};

/// Hermitian matrix stored by diagonals, with one spare diagonal for bulges.
#[derive(Debug, Clone)]
pub struct HermitianBand {
    n: usize,
    w: usize,
    stride: usize,
    data: Vec<C64>,
}

impl HermitianBand {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let cap = bandwidth + 1;
        let stride = 2 * cap + 1;
        Self { n, w: bandwidth, stride, data: vec![C64::new(0.0, 0.0); n * stride] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.w
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let cap = self.w + 1;
        debug_assert!(i.abs_diff(j) <= cap);
        i * self.stride + (j + cap - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i.abs_diff(j) > self.w + 1 {
            return C64::new(0.0, 0.0);
        }
        self.data[self.idx(i, j)]
    }

    /// Sets `H(i,j)` and its mirror `H(j,i)`.
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(i.abs_diff(j) <= self.w, "entry ({i},{j}) outside bandwidth {}", self.w);
        let a = self.idx(i, j);
        self.data[a] = v;
        let b = self.idx(j, i);
        self.data[b] = v.conj();
    }

    pub fn to_dense(&self) -> CMat {
        let mut out = CMat::zeros(self.n, self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.w);
            let hi = (i + self.w).min(self.n - 1);
            for j in lo..=hi {
                out[(i, j)] = self.get(i, j);
            }
        }
        out
    }

    /// Applies `H <- G H G*` where `G` acts on coordinates `p < q` as
    /// `[[c, s], [-conj(s), c]]`.
    fn rotate(&mut self, p: usize, q: usize, c: f64, s: C64) {
        let cap = self.w + 1;
        let lo = q.saturating_sub(cap);
        let hi = (p + cap).min(self.n - 1);
        // rows
        for t in lo..=hi {
            let (ip, iq) = (self.idx(p, t), self.idx(q, t));
            let (xp, xq) = (self.data[ip], self.data[iq]);
            self.data[ip] = xp * c + s * xq;
            self.data[iq] = -s.conj() * xp + xq * c;
        }
        // columns
        for t in lo..=hi {
            let (ip, iq) = (self.idx(t, p), self.idx(t, q));
            let (xp, xq) = (self.data[ip], self.data[iq]);
            self.data[ip] = xp * c + xq * s.conj();
            self.data[iq] = -xp * s + xq * c;
        }
    }

    /// Rotation in rows `(q-1, q)` zeroing entry `(q, col)`.
    fn annihilate(&mut self, q: usize, col: usize) {
        let p = q - 1;
        let xp = self.get(p, col);
        let xq = self.get(q, col);
        let aq = xq.norm();
        if aq == 0.0 {
            return;
        }
        let ap = xp.norm();
        let r = ap.hypot(aq);
        let (c, s) = if ap == 0.0 { (0.0, C64::new(1.0, 0.0)) } else { (ap / r, (xp / ap) * xq.conj() / r) };
        self.rotate(p, q, c, s);
        let (a, b) = (self.idx(q, col), self.idx(col, q));
        self.data[a] = C64::new(0.0, 0.0);
        self.data[b] = C64::new(0.0, 0.0);
    }

    /// Unitary reduction to real symmetric tridiagonal form `(diag, |offdiag|)`.
    pub fn tridiagonalize(mut self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut b = self.w;
        while b > 1 {
            for j in 0..n.saturating_sub(1) {
                let mut row = j + b;
                let mut col = j;
                while row < n {
                    self.annihilate(row, col);
                    col = row - 1;
                    row += b;
                }
            }
            b -= 1;
        }
        let d = (0..n).map(|i| self.get(i, i).re).collect();
        let e = (1..n).map(|i| self.get(i, i - 1).norm()).collect();
        (d, e)
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(self) -> Vec<f64> {
        let (d, e) = self.tridiagonalize();
        tridiagonal_eigenvalues(d, e)
    }
}

/// Eigenvalues of a real symmetric tridiagonal matrix by implicit QL with
/// Wilkinson shifts; `e` holds the `n-1` off-diagonal entries.
pub fn tridiagonal_eigenvalues(mut d: Vec<f64>, e_in: Vec<f64>) -> Vec<f64> {
    let n = d.len();
    if n == 0 {
        return d;
    }
    let mut e = e_in;
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

/// How lattice sites are laid out along the matrix diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteOrdering {
    Natural,
    /// Interleaves the two halves of the window so that a wrap-around
    /// coupling between the first and last site stays close to the diagonal.
    Folded,
}

impl SiteOrdering {
    pub fn position(self, site: usize, n_sites: usize) -> usize {
        match self {
            SiteOrdering::Natural => site,
            SiteOrdering::Folded => {
                let half = n_sites.div_ceil(2);
                if site < half {
                    2 * site
                } else {
                    2 * (n_sites - 1 - site) + 1
                }
            }
        }
    }
}

/// Assembles a block-structured Hermitian matrix into band storage.
///
/// `blocks` lists `(i, j, X)` meaning the `(i, j)` block equals `X` (and the
/// `(j, i)` block equals `X*`); diagonal blocks must be Hermitian.
pub fn assemble_band<'a>(
    n_sites: usize,
    bs: usize,
    ordering: SiteOrdering,
    blocks: impl IntoIterator<Item = (usize, usize, &'a CMat)> + Clone,
) -> HermitianBand {
    let pos = |s: usize| ordering.position(s, n_sites);
    let mut width = bs.saturating_sub(1);
    for (i, j, _) in blocks.clone() {
        let d = pos(i).abs_diff(pos(j));
        width = width.max((d + 1) * bs - 1);
    }
    let mut band = HermitianBand::zeros(n_sites * bs, width);
    for (i, j, x) in blocks {
        let (pi, pj) = (pos(i) * bs, pos(j) * bs);
        for r in 0..bs {
            for c in 0..bs {
                if i == j && r < c {
                    continue;
                }
                let v = x[(r, c)];
                if i == j && r == c {
                    band.set(pi + r, pj + c, C64::new(v.re, 0.0));
                } else {
                    band.set(pi + r, pj + c, v);
                }
            }
        }
    }
    band
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, herm_eigenvalues};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, w: usize, seed: u64) -> HermitianBand {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = HermitianBand::zeros(n, w);
        for i in 0..n {
            for j in i.saturating_sub(w)..=i {
                let v = if i == j {
                    c(rng.random_range(-1.0..1.0), 0.0)
                } else {
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                };
                h.set(i, j, v);
            }
        }
        h
    }

    #[test]
    fn band_matches_dense() {
        for (n, w, seed) in [(1, 0, 1), (7, 1, 2), (30, 3, 3), (41, 7, 4), (12, 11, 5)] {
            let h = random_band(n, w, seed);
            let dense = herm_eigenvalues(&h.to_dense());
            let band = h.eigenvalues();
            for (a, b) in dense.iter().zip(&band) {
                assert!((a - b).abs() < 1e-12, "n={n} w={w}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn path_graph() {
        let n = 50;
        let mut h = HermitianBand::zeros(n, 1);
        for i in 1..n {
            h.set(i, i - 1, c(1.0, 0.0));
        }
        let ev = h.eigenvalues();
        for (j, v) in ev.iter().enumerate() {
            let exact = -2.0 * (((j + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn folded_ordering_is_a_permutation() {
        for n in 1..9 {
            let mut seen: Vec<usize> = (0..n).map(|s| SiteOrdering::Folded.position(s, n)).collect();
            seen.sort();
            assert_eq!(seen, (0..n).collect::<Vec<_>>());
        }
    }
}
