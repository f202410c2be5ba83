//! Boundary values of Herglotz matrices, ξ-functions, Stieltjes inversion
//! and the closed-form reference functions of the constant (Borg)
//! coefficients.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::JacobiCoefficients;
use crate::linalg::{eye, herm_eigenvalues, im_part, logm, op_norm, re_part, CMat, C64};
use crate::quadrature::{simpson_weights, uniform_grid};
use crate::weyl::{big_weyl, diagonal_green, weyl_profile, Kind, Side, WeylOptions};

/// Which Herglotz object a ξ-grid was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiTarget {
    /// `Ξ(λ,k)` of the diagonal Green's matrix `g(z,k)`.
    XiOfG,
    /// `Ξ±(λ,k)` of `±M±(z,k)`.
    XiPM(Side),
    /// `Υ(λ,k)` of the `2m x 2m` Weyl matrix.
    UpsilonBig,
    /// `Υ^D(λ,k)` of the Dirac Weyl matrix.
    UpsilonDirac,
}

/// Hermitian matrices `Ξ(λ_i)` on a λ-grid, computed at `λ_i + iε`.
#[derive(Debug, Clone, PartialEq)]
pub struct XiGrid {
    pub k: i64,
    pub lambdas: Vec<f64>,
    pub values: Vec<CMat>,
    pub epsilon: f64,
    pub target: XiTarget,
}

impl XiGrid {
    /// Largest amount by which some `Ξ(λ_i)` leaves `[0, I]`.
    pub fn bounds_violation(&self) -> f64 {
        self.values
            .iter()
            .map(|x| {
                let ev = herm_eigenvalues(x);
                let lo = -ev.first().copied().unwrap_or(0.0);
                let hi = ev.last().copied().unwrap_or(0.0) - 1.0;
                lo.max(hi).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// `max ‖Ξ(λ) − ½I‖` over nodes with `λ ∈ [lo, hi]`.
    pub fn max_deviation_from_half(&self, lo: f64, hi: f64) -> f64 {
        self.lambdas
            .iter()
            .zip(&self.values)
            .filter(|(l, _)| **l >= lo && **l <= hi)
            .map(|(_, x)| {
                let m = x.nrows();
                op_norm(&(x - eye(m) * C64::new(0.5, 0.0)))
            })
            .fold(0.0, f64::max)
    }
}

/// `f(λ + iε)`.
pub fn boundary_value<F>(f: F, lambda: f64, epsilon: f64) -> Result<CMat>
where
    F: Fn(C64) -> Result<CMat>,
{
    if !(epsilon > 0.0) {
        return Err(Error::BadInterval(format!("smoothing offset must be positive, got {epsilon}")));
    }
    f(C64::new(lambda, epsilon))
}

/// `(1/π) Im log(X)` with the principal matrix logarithm.
pub fn xi_of_matrix(x: &CMat) -> Result<CMat> {
    let l = logm(x)?;
    Ok(re_part(&im_part(&l)) * C64::new(1.0 / PI, 0.0))
}

fn evaluate_target(c: &JacobiCoefficients, k: i64, z: C64, target: XiTarget, opts: &WeylOptions) -> Result<CMat> {
    match target {
        XiTarget::XiOfG => diagonal_green(c, z, k, opts),
        XiTarget::XiPM(side) => {
            let (v, _) = weyl_profile(c, z, side, Kind::BigM, k, k, opts)?;
            Ok(match side {
                Side::Plus => v[0].clone(),
                Side::Minus => -v[0].clone(),
            })
        }
        XiTarget::UpsilonBig => Ok(big_weyl(c, z, k, opts)?.to_matrix()),
        XiTarget::UpsilonDirac => Err(Error::Numerical("Dirac ξ-grids are built by the dirac module".into())),
    }
}

/// `Ξ(λ,k) = (1/π) Im log g(λ + iε, k)`.
pub fn xi(c: &JacobiCoefficients, k: i64, lambda: f64, epsilon: f64, opts: &WeylOptions) -> Result<CMat> {
    let g = boundary_value(|z| diagonal_green(c, z, k, opts), lambda, epsilon)?;
    xi_of_matrix(&g)
}

/// ξ-grid of an arbitrary evaluator, evaluated in parallel; node order is
/// preserved.
pub fn xi_grid_from<F>(f: F, k: i64, lambdas: &[f64], epsilon: f64, target: XiTarget) -> Result<XiGrid>
where
    F: Fn(C64) -> Result<CMat> + Sync,
{
    let values = lambdas
        .par_iter()
        .map(|&l| boundary_value(&f, l, epsilon).and_then(|x| xi_of_matrix(&x)))
        .collect::<Result<Vec<_>>>()?;
    Ok(XiGrid { k, lambdas: lambdas.to_vec(), values, epsilon, target })
}

pub fn xi_grid(
    c: &JacobiCoefficients,
    k: i64,
    lambdas: &[f64],
    epsilon: f64,
    target: XiTarget,
    opts: &WeylOptions,
) -> Result<XiGrid> {
    xi_grid_from(|z| evaluate_target(c, k, z, target, opts), k, lambdas, epsilon, target)
}

/// Discrete and/or densely sampled matrix measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMeasure {
    pub nodes: Vec<f64>,
    pub weights: Vec<CMat>,
    /// Sampled density `(λ_i, ρ(λ_i))` when the measure came from
    /// Stieltjes inversion; the node weights then hold the quadrature mass.
    pub density: Option<Vec<(f64, CMat)>>,
    pub normalized: bool,
}

impl MatrixMeasure {
    pub fn discrete(nodes: Vec<f64>, weights: Vec<CMat>, normalized: bool) -> Self {
        Self { nodes, weights, density: None, normalized }
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map(|w| w.nrows()).unwrap_or(0)
    }

    pub fn total_mass(&self) -> CMat {
        let m = self.dim();
        self.weights.iter().fold(CMat::zeros(m, m), |acc, w| acc + w)
    }

    /// Smallest eigenvalue over all weights (≥ 0 for a genuine measure).
    pub fn min_weight_eigenvalue(&self) -> f64 {
        self.weights.iter().map(|w| herm_eigenvalues(w)[0]).fold(f64::INFINITY, f64::min)
    }

    /// Merges nodes closer than `tol`, adding their weights.
    pub fn merged(&self, tol: f64) -> Self {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| self.nodes[a].total_cmp(&self.nodes[b]));
        let mut nodes: Vec<f64> = Vec::new();
        let mut weights: Vec<CMat> = Vec::new();
        let mut count: Vec<f64> = Vec::new();
        for i in order {
            let x = self.nodes[i];
            match nodes.last() {
                Some(&last) if (x - last).abs() <= tol => {
                    let n = count.last_mut().expect("parallel vectors");
                    *nodes.last_mut().expect("non-empty") = (last * *n + x) / (*n + 1.0);
                    *n += 1.0;
                    *weights.last_mut().expect("non-empty") += &self.weights[i];
                }
                _ => {
                    nodes.push(x);
                    weights.push(self.weights[i].clone());
                    count.push(1.0);
                }
            }
        }
        Self { nodes, weights, density: None, normalized: self.normalized }
    }
}

/// Density `(1/π) Im f(λ + iε)` on a uniform grid over `interval`, with
/// Simpson cell masses as node weights.
pub fn stieltjes_measure<F>(f: F, interval: (f64, f64), n_nodes: usize, epsilon: f64) -> Result<MatrixMeasure>
where
    F: Fn(C64) -> Result<CMat> + Sync,
{
    if n_nodes < 16 {
        return Err(Error::GridTooCoarse { nodes: n_nodes, min: 16 });
    }
    let (a, b) = interval;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::BadInterval(format!("[{a}, {b}]")));
    }
    let lambdas = uniform_grid(a, b, n_nodes);
    let dens = lambdas
        .par_iter()
        .map(|&l| boundary_value(&f, l, epsilon).map(|x| re_part(&im_part(&x)) * C64::new(1.0 / PI, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    let w = simpson_weights(n_nodes, lambdas[1] - lambdas[0])?;
    let weights = dens.iter().zip(&w).map(|(d, wt)| d * C64::new(*wt, 0.0)).collect();
    Ok(MatrixMeasure {
        nodes: lambdas.clone(),
        weights,
        density: Some(lambdas.into_iter().zip(dens).collect()),
        normalized: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionlessReport {
    pub e_minus: f64,
    pub e_plus: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// `(k, max ‖Ξ(λ,k) − ½I‖)` over the middle 80% of `[E-, E+]`.
    pub max_deviation: Vec<(i64, f64)>,
    pub verdict: bool,
}

/// Tests `Ξ(λ,k) ≈ ½I` on the middle 80% of `[E-, E+]` for each listed site.
#[allow(clippy::too_many_arguments)]
pub fn reflectionless_check(
    c: &JacobiCoefficients,
    e_minus: f64,
    e_plus: f64,
    k_list: &[i64],
    epsilon: f64,
    delta: f64,
    n_nodes: usize,
    opts: &WeylOptions,
) -> Result<ReflectionlessReport> {
    if !(e_minus < e_plus) {
        return Err(Error::BadInterval(format!("[{e_minus}, {e_plus}]")));
    }
    let width = e_plus - e_minus;
    let (lo, hi) = (e_minus + 0.1 * width, e_plus - 0.1 * width);
    let lambdas = uniform_grid(lo, hi, n_nodes.max(2));
    let mut max_deviation = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let grid = xi_grid(c, k, &lambdas, epsilon, XiTarget::XiOfG, opts)?;
        max_deviation.push((k, grid.max_deviation_from_half(lo, hi)));
    }
    let verdict = max_deviation.iter().all(|(_, d)| *d <= delta);
    Ok(ReflectionlessReport { e_minus, e_plus, epsilon, delta, max_deviation, verdict })
}

/// Diagnostic for the stronger notion of reflectionlessness:
/// `max_λ ‖M+(λ+iε,k) − M-(λ−iε,k)‖` over the grid.
pub fn strong_reflectionless_defect(
    c: &JacobiCoefficients,
    k: i64,
    lambdas: &[f64],
    epsilon: f64,
    opts: &WeylOptions,
) -> Result<f64> {
    let defects = lambdas
        .par_iter()
        .map(|&l| {
            let (p, _) = weyl_profile(c, C64::new(l, epsilon), Side::Plus, Kind::BigM, k, k, opts)?;
            let (m, _) = weyl_profile(c, C64::new(l, -epsilon), Side::Minus, Kind::BigM, k, k, opts)?;
            Ok(op_norm(&(&p[0] - &m[0])))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(defects.into_iter().fold(0.0, f64::max))
}

/// `[(z-E-)(z-E+)]^{1/2}` on the branch that behaves like `z` at infinity.
pub fn borg_root(z: C64, e_minus: f64, e_plus: f64) -> Result<C64> {
    if !(e_minus < e_plus) {
        return Err(Error::BadInterval(format!("[{e_minus}, {e_plus}]")));
    }
    if z.im.abs() <= 1e-12 && z.re >= e_minus - 1e-12 && z.re <= e_plus + 1e-12 {
        return Err(Error::OnCut { e_minus, e_plus });
    }
    Ok(((z - e_minus).ln() * 0.5 + (z - e_plus).ln() * 0.5).exp())
}

/// `g(z) = -[(z-E-)(z-E+)]^{-1/2} I`.
pub fn borg_reference_g(z: C64, e_minus: f64, e_plus: f64, m: usize) -> Result<CMat> {
    let w = borg_root(z, e_minus, e_plus)?;
    Ok(eye(m) * (-1.0 / w))
}

/// `M±(z) = {-z/2 + (E- + E+)/4 ± ½[(z-E-)(z-E+)]^{1/2}} I`.
pub fn borg_reference_m(z: C64, e_minus: f64, e_plus: f64, side: Side, m: usize) -> Result<CMat> {
    let w = borg_root(z, e_minus, e_plus)?;
    let sgn = if side == Side::Plus { 1.0 } else { -1.0 };
    Ok(eye(m) * (-z / 2.0 + (e_minus + e_plus) / 4.0 + sgn * w / 2.0))
}

/// `(1/π)[(λ-E-)(E+-λ)]^{1/2}` on the interval, zero outside.
pub fn gamma_density(lambda: f64, e_minus: f64, e_plus: f64) -> f64 {
    if lambda <= e_minus || lambda >= e_plus {
        return 0.0;
    }
    ((lambda - e_minus) * (e_plus - lambda)).sqrt() / PI
}
