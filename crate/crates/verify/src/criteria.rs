//! The acceptance criteria, each a self-contained run returning measured
//! values next to their pinned tolerances.

use std::time::{Duration, Instant};

use serde::Serialize;

use jborg::dirac::{
    borg_family_all, dirac_weyl, normal_form, random_dirac, susy_eigen_map, truncate_dirac, truncate_pair,
    DiracBoundary, DiracRoute, SquareComponent,
};
use jborg::herglotz::{reflectionless_check, xi_grid, XiTarget};
use jborg::linalg::{c, eye, from_real_diag, herm_eig, herm_eigenvalues, CMat, C64};
use jborg::models::{borg_jacobi, random_hermitian, random_jacobi, random_matrix, random_periodic_jacobi};
use jborg::quadrature::uniform_grid;
use jborg::reconstruct::{block_lanczos, borg_measure, poly_solution_identity, spectral_measure_halfline};
use jborg::series::{g_series, m_series, s_series, trace_rhs};
use jborg::weyl::{diagonal_green, greens_full, weyl_m_big, Side, WeylOptions};
use jborg::{spectrum_estimate, truncate_jacobi, Extension, MatrixSeq, Result};

use crate::oracles::*;

/// One measured quantity; it passes when `value <= tolerance`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(label: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { label: label.into(), value, tolerance, passed: value <= tolerance }
    }

    /// Yes/no condition, recorded as `0` (holds) or `1` (violated).
    pub fn holds(label: impl Into<String>, ok: bool) -> Self {
        Check { label: label.into(), value: if ok { 0.0 } else { 1.0 }, tolerance: 0.0, passed: ok }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Set when the run itself failed numerically.
    pub error: Option<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Criterion {
    /// First failing check, or the numerical error, for one-line reports.
    pub fn summary(&self) -> String {
        if let Some(e) = &self.error {
            return format!("error: {e}");
        }
        let shown = self.checks.iter().find(|c| !c.passed).or_else(|| self.checks.first());
        match shown {
            Some(c) => format!("{} = {:.3e} (tol {:.0e})", c.label, c.value, c.tolerance),
            None => String::new(),
        }
    }
}

pub const NAMES: [&str; 10] = [
    "moment oracles",
    "series constants",
    "green's matrix vs dense inverse",
    "jacobi borg forward",
    "trace formula",
    "reconstruction",
    "dirac structure",
    "dirac cross-route",
    "dirac borg family",
    "dirac normal form",
];

pub fn run(id: u32) -> Criterion {
    let start = Instant::now();
    let out = match id {
        1 => moments(),
        2 => series_constants(),
        3 => green_dense(),
        4 => borg_forward(),
        5 => trace_formula(),
        6 => reconstruction(),
        7 => dirac_structure(),
        8 => dirac_cross_route(),
        9 => dirac_family(),
        10 => dirac_normal_form(),
        _ => Err(jborg::Error::InvalidSequence(format!("no criterion {id}"))),
    };
    let elapsed = start.elapsed();
    let name = NAMES.get(id.wrapping_sub(1) as usize).copied().unwrap_or("unknown");
    match out {
        Ok(mut checks) => {
            if let Some(limit) = runtime_limit(id) {
                checks.push(Check::holds(format!("runtime < {} s", limit.as_secs()), elapsed < limit));
            }
            let passed = checks.iter().all(|c| c.passed);
            Criterion { id, name, passed, checks, error: None, elapsed }
        }
        Err(e) => Criterion { id, name, passed: false, checks: vec![], error: Some(e.to_string()), elapsed },
    }
}

pub fn run_all() -> Vec<Criterion> {
    (1..=10).map(run).collect()
}

fn runtime_limit(id: u32) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(10)),
        3 => Some(Duration::from_secs(30)),
        _ => None,
    }
}

fn worst(acc: &mut f64, x: f64) {
    if x > *acc || x.is_nan() {
        *acc = x;
    }
}

fn moments() -> Result<Vec<Check>> {
    let mut err_plus: f64 = 0.0;
    let mut err_minus: f64 = 0.0;
    let mut err_green: f64 = 0.0;
    let j = 8;
    for i in 0..20u64 {
        let m = 1 + (i % 3) as usize;
        let cf = random_jacobi(m, 1000 + i, 0.8, -12, 12)?;
        for k in [-2i64, 0, 3] {
            let mp = m_series(&cf, k, Side::Plus, j)?;
            let mm = m_series(&cf, k, Side::Minus, j)?;
            let g = g_series(&cf, k, j)?;
            for n in 1..=j {
                let p = n - 1;
                let w = p as i64 / 2 + 2;
                worst(&mut err_plus, max_diff(&mp.coeff(n as i64), &-power_moment(&cf, k, k + w, k, p)?));
                worst(&mut err_minus, max_diff(&mm.coeff(n as i64), &-power_moment(&cf, k - w, k, k, p)?));
                worst(&mut err_green, max_diff(&g.coeff(n as i64), &-power_moment(&cf, k - w, k + w, k, p)?));
            }
        }
    }
    Ok(vec![
        Check::at_most("max |m+_j + (H+^{j-1})(k,k)|", err_plus, 1e-10),
        Check::at_most("max |m-_j + (H-^{j-1})(k,k)|", err_minus, 1e-10),
        Check::at_most("max |r_j + (H^{j-1})(k,k)|", err_green, 1e-10),
    ])
}

fn series_constants() -> Result<Vec<Check>> {
    let mut err_s: f64 = 0.0;
    let mut err_r: f64 = 0.0;
    for seed in 0..10u64 {
        let m = 1 + (seed % 3) as usize;
        let cf = random_jacobi(m, 2000 + seed, 0.8, -6, 6)?;
        for k in [-1i64, 0, 2] {
            let s = s_series(&cf, k, 3)?;
            for (n, want) in trace_coefficients(&cf, k)?.iter().enumerate() {
                worst(&mut err_s, max_diff(&s.coeff(n as i64 + 1), want));
            }
            let g = g_series(&cf, k, 4)?;
            for (n, want) in green_coefficients(&cf, k)?.iter().enumerate() {
                worst(&mut err_r, max_diff(&g.coeff(n as i64 + 1), want));
            }
        }
    }
    Ok(vec![
        Check::at_most("max |s_j - closed form|, j<=3", err_s, 1e-12),
        Check::at_most("max |r_j - closed form|, j<=4", err_r, 1e-12),
    ])
}

fn green_dense() -> Result<Vec<Check>> {
    let cf = random_periodic_jacobi(2, 7, 0.6, 3)?;
    let opts = WeylOptions::default();
    let (lo, hi) = (-200, 199);
    let zs = [c(-1.0, 0.5), c(0.7, 0.5), c(2.5, 0.8), c(-3.0, 1.0), c(0.2, 2.0), c(4.0, 3.0)];
    let mut err: f64 = 0.0;
    let cols: Vec<i64> = (-7..=8).collect();
    for z in zs {
        let r = DenseResolvent::new(&cf, lo, hi, z, &cols)?;
        for k in [-2i64, 0, 3] {
            for l in k - 5..=k + 5 {
                let g = greens_full(&cf, z, k, l, &opts)?;
                let want = r.block(k, l).ok_or(jborg::Error::OutOfWindow(l))?;
                worst(&mut err, max_diff(&g, &want));
            }
        }
    }
    Ok(vec![Check::at_most("max |G(z,k,l) - dense 400-site inverse|", err, 1e-6)])
}

fn z_upper(i: usize) -> C64 {
    c(-3.0 + 0.37 * i as f64, 1.0 + 0.25 * (i % 5) as f64)
}

fn borg_forward() -> Result<Vec<Check>> {
    let (em, ep) = (-1.0, 3.0);
    let cf = borg_jacobi(em, ep, 2)?;
    let opts = WeylOptions::default();

    let ev = spectrum_estimate(&truncate_jacobi(&cf, 0, 1999)?);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    let outside = (em - lo).max(hi - ep).max(0.0);

    let sites = [-7i64, -1, 0, 4, 11];
    let mut err_g: f64 = 0.0;
    let mut err_m: f64 = 0.0;
    for i in 0..20 {
        let z = z_upper(i);
        let id = eye(2);
        for &k in &sites {
            worst(&mut err_g, max_diff(&diagonal_green(&cf, z, k, &opts)?, &(&id * borg_g(z, em, ep))));
            let p = weyl_m_big(&cf, z, k, Side::Plus, &opts)?.value;
            let m = weyl_m_big(&cf, z, k, Side::Minus, &opts)?.value;
            worst(&mut err_m, max_diff(&p, &(&id * borg_m(z, em, ep, 1.0))));
            worst(&mut err_m, max_diff(&m, &(&id * borg_m(z, em, ep, -1.0))));
        }
    }

    let report = reflectionless_check(&cf, em, ep, &[-3, 0, 5], 1e-3, 2e-2, 401, &opts)?;
    let xi_dev = report.max_deviation.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("2000-site spectrum outside [E-, E+]", outside, 1e-8),
        Check::at_most("gap at E-", lo - em, 1e-3),
        Check::at_most("gap at E+", ep - hi, 1e-3),
        Check::at_most("max |g - closed form|", err_g, 1e-8),
        Check::at_most("max |M± - closed form|", err_m, 1e-8),
        Check::at_most("max |Xi - I/2| on middle 80%, eps=1e-3", xi_dev, 2e-2),
    ])
}

/// Errors of the trace formula for `j = 2, 3` at one `ε`.
pub fn trace_errors(
    cf: &jborg::JacobiCoefficients,
    k: i64,
    e_minus: f64,
    e_plus: f64,
    epsilon: f64,
    nodes: usize,
    opts: &WeylOptions,
) -> Result<[f64; 2]> {
    let lambdas = uniform_grid(e_minus, e_plus, nodes);
    let grid = xi_grid(cf, k, &lambdas, epsilon, XiTarget::XiOfG, opts)?;
    let want = trace_coefficients(cf, k)?;
    Ok([
        max_diff(&trace_rhs(2, &grid, e_minus, e_plus)?, &want[1]),
        max_diff(&trace_rhs(3, &grid, e_minus, e_plus)?, &want[2]),
    ])
}

fn trace_formula() -> Result<Vec<Check>> {
    let cf = random_periodic_jacobi(2, 21, 0.5, 2)?;
    let opts = WeylOptions::default();
    let ev = spectrum_estimate(&truncate_jacobi(&cf, -500, 499)?);
    let (em, ep) = (ev[0], ev[ev.len() - 1]);
    let k = 0;
    let mut errs = Vec::new();
    for eps in [4e-3, 2e-3, 1e-3] {
        errs.push(trace_errors(&cf, k, em, ep, eps, 10_001, &opts)?);
    }
    let monotone = |j: usize| errs[0][j] > errs[1][j] && errs[1][j] > errs[2][j];
    Ok(vec![
        Check::at_most("|trace_rhs(2) - B(k)|, eps=1e-3", errs[2][0], 2e-2),
        Check::at_most("|trace_rhs(3) - s_3(k)|, eps=1e-3", errs[2][1], 5e-2),
        Check::holds("j=2 error decreases over eps = 4e-3, 2e-3, 1e-3", monotone(0)),
        Check::holds("j=3 error decreases over eps = 4e-3, 2e-3, 1e-3", monotone(1)),
    ])
}

fn reconstruction() -> Result<Vec<Check>> {
    let mut err_rt: f64 = 0.0;
    let cf = random_jacobi(2, 606, 0.8, -14, 14)?;
    for side in [Side::Plus, Side::Minus] {
        let mu = spectral_measure_halfline(&cf, 0, side, 12)?;
        let sys = block_lanczos(&mu, 5, 0, side)?;
        for (seq, truth) in [(&sys.recovered_a, cf.a_seq()), (&sys.recovered_b, cf.b_seq())] {
            let (lo, hi) = seq.window();
            for k in lo..=hi {
                worst(&mut err_rt, max_diff(seq.at(k)?, truth.at(k)?));
            }
        }
    }

    let (em, ep) = (-1.0, 3.0);
    let want = borg_jacobi(em, ep, 2)?;
    let mu = borg_measure(em, ep, 2, 10_000)?;
    let mut err_borg: f64 = 0.0;
    for side in [Side::Plus, Side::Minus] {
        let sys = block_lanczos(&mu, 5, 0, side)?;
        for (seq, truth) in [(&sys.recovered_a, want.a_seq()), (&sys.recovered_b, want.b_seq())] {
            let (lo, hi) = seq.window();
            for k in lo..=hi {
                worst(&mut err_borg, max_diff(seq.at(k)?, truth.at(k)?));
            }
        }
    }

    let mut err_poly: f64 = 0.0;
    for k in 0..=4 {
        for z in [c(0.3, 0.8), c(-1.2, 0.2), c(2.0, -0.5)] {
            worst(&mut err_poly, poly_solution_identity(&cf, 1, z, k, 12)?);
        }
    }
    Ok(vec![
        Check::at_most("12-site half-line round trip, first 5 sites", err_rt, 1e-8),
        Check::at_most("Borg measure -> constant coefficients", err_borg, 1e-6),
        Check::at_most("polynomial/solution identities", err_poly, 1e-8),
    ])
}

fn dirac_structure() -> Result<Vec<Check>> {
    let mut err_sq: f64 = 0.0;
    let mut err_sym: f64 = 0.0;
    let mut err_susy: f64 = 0.0;
    let mut pairing_ok = true;
    for seed in 0..3u64 {
        let d = random_dirac(2, 300 + seed, 3, 0.7)?;
        let (lo, hi) = (-3, 36);
        let t = truncate_dirac(&d, lo, hi, DiracBoundary::Open)?;
        let dm = t.to_dense();
        let e = t.e_matrix();
        let d2 = &dm * &dm;
        let n = e.nrows();
        let top = d2.view((0, 0), (n, n)).into_owned();
        let bottom = d2.view((n, n), (n, n)).into_owned();
        worst(&mut err_sq, d2.view((0, n), (n, n)).iter().map(|x| x.norm()).fold(0.0, f64::max));
        // Against the Jacobi coefficients of the two squares; the open
        // section only differs in the last diagonal block of H1 and the
        // first of H2.
        let h1 = dense_jacobi(d.h1(), lo, hi)?;
        let h2 = dense_jacobi(d.h2(), lo, hi)?;
        let sites = (hi - lo + 1) as usize;
        for i in 0..sites {
            for j in 0..sites {
                let skip1 = i == sites - 1 && j == sites - 1;
                let skip2 = i == 0 && j == 0;
                if !skip1 {
                    worst(&mut err_sq, max_diff(&block_of(&top, i, j), &block_of(&h1, i, j)));
                }
                if !skip2 {
                    worst(&mut err_sq, max_diff(&block_of(&bottom, i, j), &block_of(&h2, i, j)));
                }
            }
        }
        let (s1, s2) = t.squares_from_coefficients();
        worst(&mut err_sq, max_diff(&top, &s1));
        worst(&mut err_sq, max_diff(&bottom, &s2));

        let ev = herm_eigenvalues(&dm);
        let len = ev.len();
        for i in 0..len {
            worst(&mut err_sym, (ev[i] + ev[len - 1 - i]).abs());
        }

        let (w1, v1) = herm_eig(&(e.adjoint() * &e));
        let (w2, v2) = herm_eig(&(&e * e.adjoint()));
        for (w, v, which) in [(&w1, &v1, SquareComponent::Upper), (&w2, &v2, SquareComponent::Lower)] {
            for (i, &lam) in w.iter().enumerate() {
                if lam <= 1e-10 {
                    continue;
                }
                let u = CMat::from_column_slice(v.nrows(), 1, v.column(i).into_owned().as_slice());
                for z in [lam.sqrt(), -lam.sqrt()] {
                    let (_, r) = susy_eigen_map(&e, &u, z, which)?;
                    worst(&mut err_susy, r);
                }
            }
        }
        let nonzero = |w: &[f64]| w.iter().filter(|x| **x > 1e-10).count();
        pairing_ok &= nonzero(w1.as_slice()) == nonzero(w2.as_slice());
    }
    Ok(vec![
        Check::at_most("max |D^2 - diag(H1, H2)|", err_sq, 1e-12),
        Check::at_most("spectrum symmetry", err_sym, 1e-12),
        Check::at_most("susy eigen-pairing residual (40 sites)", err_susy, 1e-10),
        Check::holds("E*E and EE* have the same nonzero multiplicities", pairing_ok),
    ])
}

fn block_of(x: &CMat, i: usize, j: usize) -> CMat {
    x.view((2 * i, 2 * j), (2, 2)).into_owned()
}

fn dirac_cross_route() -> Result<Vec<Check>> {
    let d = random_dirac(2, 8, 3, 0.6)?;
    let opts = WeylOptions::default();
    let mut err: f64 = 0.0;
    for i in 0..20 {
        let t = i as f64;
        let re = (0.3 + 0.11 * t) * if i % 2 == 0 { 1.0 } else { -1.0 };
        let im = (0.5 + 0.06 * t) * if i % 3 == 0 { 1.0 } else { -1.0 };
        let z = c(re, im);
        let k = i as i64 % 4 - 1;
        for side in [Side::Plus, Side::Minus] {
            let a = dirac_weyl(&d, z, k, side, DiracRoute::H1, &opts)?.value;
            let b = dirac_weyl(&d, z, k, side, DiracRoute::H2, &opts)?.value;
            worst(&mut err, max_diff(&a, &b));
        }
    }
    Ok(vec![Check::at_most("max |M^D via H1 - M^D via H2|", err, 1e-8)])
}

fn dirac_family() -> Result<Vec<Check>> {
    let (em, ep) = (1.0, 4.0);
    let family = borg_family_all(em, ep, 2)?;
    let mut valid = family.len() == 4;
    let mut spectra = Vec::new();
    for f in &family {
        match f.coefficients() {
            Ok(d) => spectra.push(truncate_dirac(&d, 0, 499, DiracBoundary::Periodic)?.eigenvalues()),
            Err(_) => valid = false,
        }
    }
    let mut haus: f64 = 0.0;
    let mut outside: f64 = 0.0;
    let (lo, hi) = (em.sqrt(), ep.sqrt());
    for (i, x) in spectra.iter().enumerate() {
        for y in &spectra[i + 1..] {
            worst(&mut haus, hausdorff(x, y));
        }
        for &v in x {
            worst(&mut outside, distance_to_symmetric_bands(v, lo, hi));
        }
    }

    let collapsed = borg_family_all(0.0, ep, 2)?;
    let first = &collapsed[0];
    let single = collapsed.iter().all(|f| f.rho_value == first.rho_value && f.chi_value == first.chi_value);
    let same_coefficients = collapsed.iter().all(|f| match (f.coefficients(), first.coefficients()) {
        (Ok(a), Ok(b)) => a.rho(0).ok() == b.rho(0).ok() && a.chi(0).ok() == b.chi(0).ok(),
        _ => false,
    });
    Ok(vec![
        Check::holds("4 members, all valid", valid),
        Check::at_most("pairwise Hausdorff distance of 500-site ring spectra", haus, 1e-3),
        Check::at_most("distance of spectra to [-2,-1] ∪ [1,2]", outside, 1e-3),
        Check::holds("E- = 0 collapses to a single member", single && same_coefficients),
    ])
}

fn dirac_normal_form() -> Result<Vec<Check>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
    let n = 30;
    let rho: Vec<CMat> = (0..n).map(|_| random_hermitian(&mut rng, 2, 1.0) + from_real_diag(&[0.05, -0.05])).collect();
    let chi: Vec<CMat> = (0..n).map(|_| eye(2) * c(1.5, 0.0) + random_matrix(&mut rng, 2) * c(0.3, 0.0)).collect();
    let rho = MatrixSeq::new(0, rho, Extension::Forbidden)?;
    let chi = MatrixSeq::new(0, chi, Extension::Forbidden)?;
    let nf = normal_form(&rho, &chi)?;
    let mut unitary: f64 = 0.0;
    let mut diag_pos = true;
    for k in 0..n as i64 {
        let u = nf.u.at(k)?;
        worst(&mut unitary, max_diff(&(u * u.adjoint()), &eye(4)));
        let r = nf.rho_hat.at(k)?;
        diag_pos &= (0..2).all(|i| r[(i, i)].re > 0.0 && r[(i, i)].im == 0.0)
            && r[(0, 1)] == c(0.0, 0.0)
            && r[(1, 0)] == c(0.0, 0.0);
    }
    let before = truncate_pair(&rho, &chi, 1, n as i64 - 1, DiracBoundary::Open)?.eigenvalues();
    let after = truncate_pair(&nf.rho_hat, &nf.chi_hat, 1, n as i64 - 1, DiracBoundary::Open)?.eigenvalues();
    let spec = before.iter().zip(&after).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("max |U U* - I|", unitary, 1e-12),
        Check::holds("rho-hat diagonal positive", diag_pos),
        Check::at_most("truncated spectra before/after", spec, 1e-10),
    ])
}
