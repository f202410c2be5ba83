//! Brute-force reference computations. Everything here is built directly
//! from the coefficient accessors and dense linear algebra, never from the
//! recursions being checked.

use jborg::linalg::{c, CMat, C64};
use jborg::{JacobiCoefficients, Result};

/// Dense block-tridiagonal matrix of `H` restricted to sites `lo..=hi`.
pub fn dense_jacobi(cf: &JacobiCoefficients, lo: i64, hi: i64) -> Result<CMat> {
    let m = cf.dim();
    let n = (hi - lo + 1) as usize;
    let mut h = CMat::zeros(n * m, n * m);
    for i in 0..n {
        let k = lo + i as i64;
        h.view_mut((i * m, i * m), (m, m)).copy_from(cf.b(k)?);
        if i + 1 < n {
            let a = cf.a(k)?;
            h.view_mut((i * m, (i + 1) * m), (m, m)).copy_from(a);
            h.view_mut(((i + 1) * m, i * m), (m, m)).copy_from(&a.adjoint());
        }
    }
    Ok(h)
}

/// `(H^p)(k,k)` on the window `lo..=hi`; exact for the whole line (or the
/// half-line with a Dirichlet wall at the window end) as long as the
/// window reaches `p/2 + 1` sites past `k` on each open side.
pub fn power_moment(cf: &JacobiCoefficients, lo: i64, hi: i64, k: i64, p: usize) -> Result<CMat> {
    let h = dense_jacobi(cf, lo, hi)?;
    let mut x = CMat::identity(h.nrows(), h.nrows());
    for _ in 0..p {
        x = &h * x;
    }
    let (m, i) = (cf.dim(), (k - lo) as usize * cf.dim());
    Ok(x.view((i, i), (m, m)).into_owned())
}

/// Columns of `(H - z)^{-1}` on the window `lo..=hi` belonging to a few
/// sites, from one dense LU factorization.
pub struct DenseResolvent {
    lo: i64,
    m: usize,
    sites: Vec<i64>,
    cols: CMat,
}

impl DenseResolvent {
    pub fn new(cf: &JacobiCoefficients, lo: i64, hi: i64, z: C64, sites: &[i64]) -> Result<Self> {
        let m = cf.dim();
        if let Some(&k) = sites.iter().find(|&&k| k < lo || k > hi) {
            return Err(jborg::Error::OutOfWindow(k));
        }
        let h = dense_jacobi(cf, lo, hi)?;
        let n = h.nrows();
        let mut rhs = CMat::zeros(n, m * sites.len());
        for (j, &l) in sites.iter().enumerate() {
            for i in 0..m {
                rhs[((l - lo) as usize * m + i, j * m + i)] = C64::new(1.0, 0.0);
            }
        }
        let cols = (h - CMat::identity(n, n) * z)
            .lu()
            .solve(&rhs)
            .ok_or_else(|| jborg::Error::SingularInversion("dense resolvent".into()))?;
        Ok(DenseResolvent { lo, m, sites: sites.to_vec(), cols })
    }

    /// Block `(k, l)`; `l` must be one of the sites given to [`Self::new`].
    pub fn block(&self, k: i64, l: i64) -> Option<CMat> {
        let j = self.sites.iter().position(|&s| s == l)?;
        let i = usize::try_from(k - self.lo).ok()?;
        if (i + 1) * self.m > self.cols.nrows() {
            return None;
        }
        Some(self.cols.view((i * self.m, j * self.m), (self.m, self.m)).into_owned())
    }
}

/// `[(z-E-)(z-E+)]^{1/2}` with positive imaginary part in the upper half-plane.
pub fn two_band_root(z: C64, e_minus: f64, e_plus: f64) -> C64 {
    let w = ((z - e_minus) * (z - e_plus)).sqrt();
    if w.im * z.im < 0.0 {
        -w
    } else {
        w
    }
}

pub fn borg_g(z: C64, e_minus: f64, e_plus: f64) -> C64 {
    -1.0 / two_band_root(z, e_minus, e_plus)
}

/// Half-line Weyl function of the constant two-band operator; `sign = ±1`.
pub fn borg_m(z: C64, e_minus: f64, e_plus: f64, sign: f64) -> C64 {
    -z / 2.0 + (e_minus + e_plus) / 4.0 + sign * two_band_root(z, e_minus, e_plus) / 2.0
}

/// Expansion coefficients `r_1..r_4` of the diagonal Green's matrix.
pub fn green_coefficients(cf: &JacobiCoefficients, k: i64) -> Result<[CMat; 4]> {
    let (a, am, b) = (cf.a(k)?, cf.a(k - 1)?, cf.b(k)?);
    let (bm, bp) = (cf.b(k - 1)?, cf.b(k + 1)?);
    let m = cf.dim();
    let a2 = a * a;
    let am2 = am * am;
    let r4 = b * b * b + am * bm * am + a * bp * a + b * &a2 + b * &am2 + &a2 * b + &am2 * b;
    Ok([-CMat::identity(m, m), -b.clone(), -(am2 + a2 + b * b), -r4])
}

/// `s_1..s_3` of the logarithmic derivative of the diagonal Green's matrix.
pub fn trace_coefficients(cf: &JacobiCoefficients, k: i64) -> Result<[CMat; 3]> {
    let (a, am, b) = (cf.a(k)?, cf.a(k - 1)?, cf.b(k)?);
    let m = cf.dim();
    Ok([CMat::identity(m, m), b.clone(), am * am * c(2.0, 0.0) + a * a * c(2.0, 0.0) + b * b])
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(x: &[f64], y: &[f64]) -> f64 {
    let one_way = |p: &[f64], q: &[f64]| {
        p.iter().map(|a| q.iter().map(|b| (a - b).abs()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one_way(x, y).max(one_way(y, x))
}

/// Distance from `x` to the set `[-hi,-lo] ∪ [lo,hi]`.
pub fn distance_to_symmetric_bands(x: f64, lo: f64, hi: f64) -> f64 {
    let a = x.abs();
    if a < lo {
        lo - a
    } else if a > hi {
        a - hi
    } else {
        0.0
    }
}

/// Entrywise maximum of `|x - y|`.
pub fn max_diff(x: &CMat, y: &CMat) -> f64 {
    (x - y).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use jborg::models::free;

    #[test]
    fn free_oracles() {
        // Free path graph: (H^2)(0,0) = 2 on the line, 1 on a half-line.
        let cf = free(1);
        assert_eq!(power_moment(&cf, -3, 3, 0, 2).unwrap()[(0, 0)], c(2.0, 0.0));
        assert_eq!(power_moment(&cf, 0, 3, 0, 2).unwrap()[(0, 0)], c(1.0, 0.0));
        let g = borg_g(c(0.0, 1.0), -2.0, 2.0);
        assert!((g - c(0.0, 1.0 / 5f64.sqrt())).norm() < 1e-15);
        assert_eq!(hausdorff(&[0.0, 1.0], &[0.0, 1.5]), 0.5);
        assert_eq!(distance_to_symmetric_bands(-0.5, 1.0, 2.0), 0.5);
    }
}
