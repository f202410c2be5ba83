use rayon::prelude::*;
use serde_json::{json, Value};

use jborg::dirac::{
    borg_family_all, dirac_big_weyl, dirac_weyl, truncate_dirac, upsilon_grid, DiracBoundary, DiracCoefficients,
    DiracRoute,
};
use jborg::herglotz::{xi_grid, XiGrid, XiTarget};
use jborg::io::{complex_to_json, matrix_to_json, measure_to_json, xi_grid_csv};
use jborg::linalg::{eye, herm_eigenvalues, im_part, CMat, C64};
use jborg::quadrature::uniform_grid;
use jborg::reconstruct::{block_lanczos, spectral_measure_halfline};
use jborg::series::{s_series, trace_rhs};
use jborg::weyl::{diagonal_green, greens_full, weyl_m_big, weyl_m_small, Side, WeylOptions, WeylValue};
use jborg::{spectrum_estimate, truncate_jacobi, JacobiCoefficients};
use jborg_verify::oracles::{borg_g, borg_m, distance_to_symmetric_bands, hausdorff, max_diff, DenseResolvent};
use jborg_verify::Check;

use crate::config::{ConfigError, Model, Operator, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] jborg::Error),
}

type Result<T> = std::result::Result<T, RunError>;

/// Everything a command produces: the report body, its assertions, and
/// extra artifact files (name, contents).
pub struct Outcome {
    pub results: Value,
    pub checks: Vec<Check>,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    fn new(results: Value, checks: Vec<Check>) -> Self {
        Outcome { results, checks, files: Vec::new() }
    }
}

pub fn run(command: &str, cfg: &RunConfig) -> Result<Outcome> {
    match command {
        "spectrum" => spectrum(cfg),
        "weyl" => weyl(cfg),
        "greens" => greens(cfg),
        "xi" => xi(cfg),
        "trace" => trace(cfg),
        "borg-jacobi" => borg_jacobi_check(cfg),
        "borg-dirac" => borg_dirac_check(cfg),
        "reconstruct" => reconstruct(cfg),
        "verify-all" => Ok(verify_all()),
        other => Err(ConfigError::Invalid(format!("unknown command {other}")).into()),
    }
}

fn jacobi(cfg: &RunConfig, command: &str) -> Result<JacobiCoefficients> {
    match cfg.operator()? {
        Operator::Jacobi(c) => Ok(c),
        Operator::Dirac(_) => Err(ConfigError::Invalid(format!("`{command}` needs a Jacobi model")).into()),
    }
}

fn window(cfg: &RunConfig, default: [i64; 2]) -> (i64, i64) {
    let [lo, hi] = cfg.truncation.unwrap_or(default);
    (lo, hi)
}

fn fold_max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |a, b| if b > a || b.is_nan() { b } else { a })
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Plus => "plus",
        Side::Minus => "minus",
    }
}

/// Smallest eigenvalue of `Im(s·X)`, with `s` the sign of `Im z`.
fn herglotz_margin(x: &CMat, z: C64) -> f64 {
    let s = if z.im >= 0.0 { 1.0 } else { -1.0 };
    herm_eigenvalues(&im_part(&(x * C64::new(s, 0.0))))[0]
}

fn spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let (lo, hi) = window(cfg, [-200, 199]);
    let tol = cfg.tolerances.default;
    let (ev, checks) = match cfg.operator()? {
        Operator::Jacobi(c) => {
            let ev = spectrum_estimate(&truncate_jacobi(&c, lo, hi)?);
            let excess = fold_max(ev.iter().map(|x| x.abs() - 2.0 * c.bound()));
            (ev, vec![Check::at_most("max |lambda| - 2 sup(|A| + |B|)", excess.max(0.0), tol)])
        }
        Operator::Dirac(d) => {
            let ev = truncate_dirac(&d, lo, hi, cfg.boundary.into())?.eigenvalues();
            let n = ev.len();
            let asym = fold_max((0..n).map(|i| (ev[i] + ev[n - 1 - i]).abs()));
            (ev, vec![Check::at_most("spectrum symmetry about 0", asym, tol)])
        }
    };
    let results = json!({
        "sites": [lo, hi],
        "count": ev.len(),
        "min": ev.first(),
        "max": ev.last(),
        "eigenvalues": ev,
    });
    Ok(Outcome::new(results, checks))
}

fn weyl_entry(v: &WeylValue, name: &str) -> Value {
    json!({
        "quantity": name,
        "k": v.k,
        "z": complex_to_json(v.z),
        "side": side_name(v.side),
        "value": matrix_to_json(&v.value),
        "residual": v.residual,
        "depth": v.depth,
        "cross_route": v.cross_route,
    })
}

fn weyl(cfg: &RunConfig) -> Result<Outcome> {
    let opts = cfg.weyl_options();
    let tol = cfg.tolerances.default;
    let pairs: Vec<(i64, C64)> =
        cfg.sites.iter().flat_map(|&k| cfg.z_points().into_iter().map(move |z| (k, z))).collect();
    match cfg.operator()? {
        Operator::Jacobi(c) => {
            let rows = pairs
                .par_iter()
                .map(|&(k, z)| {
                    let mut out = Vec::new();
                    let mut residual: f64 = 0.0;
                    let mut margin = f64::INFINITY;
                    for side in [Side::Plus, Side::Minus] {
                        let big = weyl_m_big(&c, z, k, side, &opts)?;
                        let small = weyl_m_small(&c, z, k, side, &opts)?;
                        residual = residual.max(big.residual).max(small.residual);
                        let signed = if side == Side::Plus { big.value.clone() } else { -big.value.clone() };
                        margin = margin.min(herglotz_margin(&signed, z)).min(herglotz_margin(&small.value, z));
                        out.push(weyl_entry(&big, "M"));
                        out.push(weyl_entry(&small, "m"));
                    }
                    Ok((out, residual, margin))
                })
                .collect::<std::result::Result<Vec<_>, jborg::Error>>()?;
            let residual = fold_max(rows.iter().map(|r| r.1));
            let margin = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
            let entries: Vec<Value> = rows.into_iter().flat_map(|r| r.0).collect();
            let checks = vec![
                Check::at_most("max Riccati residual", residual, tol),
                Check::at_most("Herglotz violation of M+, -M-, m+, m-", (-margin).max(0.0), tol),
            ];
            Ok(Outcome::new(json!({ "entries": entries }), checks))
        }
        Operator::Dirac(d) => {
            let rows = pairs
                .par_iter()
                .map(|&(k, z)| {
                    let mut out = Vec::new();
                    let mut cross: f64 = 0.0;
                    for side in [Side::Plus, Side::Minus] {
                        let a = dirac_weyl(&d, z, k, side, DiracRoute::H1, &opts)?;
                        let b = dirac_weyl(&d, z, k, side, DiracRoute::H2, &opts)?;
                        cross = cross.max(max_diff(&a.value, &b.value));
                        out.push(weyl_entry(&a, "M_dirac"));
                    }
                    let big = dirac_big_weyl(&d, z, k, &opts)?;
                    let margin = herglotz_margin(&big.to_matrix(), z);
                    Ok((out, cross, margin))
                })
                .collect::<std::result::Result<Vec<_>, jborg::Error>>()?;
            let cross = fold_max(rows.iter().map(|r| r.1));
            let margin = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
            let entries: Vec<Value> = rows.into_iter().flat_map(|r| r.0).collect();
            let checks = vec![
                Check::at_most("max |M via H1 - M via H2|", cross, tol),
                Check::at_most("Herglotz violation of the 2m x 2m Weyl matrix", (-margin).max(0.0), tol),
            ];
            Ok(Outcome::new(json!({ "entries": entries }), checks))
        }
    }
}

fn greens(cfg: &RunConfig) -> Result<Outcome> {
    let c = jacobi(cfg, "greens")?;
    let opts = cfg.weyl_options();
    let tol = cfg.tolerances.default;
    let (lo, hi) = window(cfg, [-200, 199]);
    if cfg.sites.iter().any(|&k| k <= lo || k >= hi) {
        return Err(ConfigError::Invalid(format!("sites must lie inside the truncation ({lo}, {hi})")).into());
    }
    let m = c.dim();
    let zs = cfg.z_points();
    let per_z = zs
        .par_iter()
        .map(|&z| {
            let dense = DenseResolvent::new(&c, lo, hi, z, &cfg.sites)?;
            let mut rows = Vec::new();
            for &k in &cfg.sites {
                for &l in &cfg.sites {
                    let g = greens_full(&c, z, k, l, &opts)?;
                    let dense_diff = max_diff(&g, &dense.block(k, l).ok_or(jborg::Error::OutOfWindow(l))?);
                    // (H - z) G(., l) = δ_l I, read off at site k.
                    let mut r = c.a(k)? * greens_full(&c, z, k + 1, l, &opts)?
                        + c.a(k - 1)?.adjoint() * greens_full(&c, z, k - 1, l, &opts)?
                        + (c.b(k)? - eye(m) * z) * &g;
                    if k == l {
                        r -= eye(m);
                    }
                    let residual = max_diff(&r, &CMat::zeros(m, m));
                    rows.push(json!({
                        "z": complex_to_json(z),
                        "k": k,
                        "l": l,
                        "value": matrix_to_json(&g),
                        "dense_difference": dense_diff,
                        "equation_residual": residual,
                    }));
                }
            }
            Ok(rows)
        })
        .collect::<std::result::Result<Vec<_>, jborg::Error>>()?;
    let rows: Vec<Value> = per_z.into_iter().flatten().collect();
    let dense = fold_max(rows.iter().map(|r| r["dense_difference"].as_f64().unwrap_or(f64::NAN)));
    let eq = fold_max(rows.iter().map(|r| r["equation_residual"].as_f64().unwrap_or(f64::NAN)));
    let checks = vec![
        Check::at_most(format!("max |G - dense inverse on [{lo}, {hi}]|"), dense, tol),
        Check::at_most("max |(H - z)G - delta|", eq, tol),
    ];
    Ok(Outcome::new(json!({ "truncation": [lo, hi], "entries": rows }), checks))
}

/// `[E-, E+]` from the configured λ-range, falling back to the extreme
/// eigenvalues of a finite section.
fn interval(cfg: &RunConfig, op: &Operator) -> Result<(f64, f64)> {
    if let (Some(lo), Some(hi)) = (cfg.grids.lambda.lo, cfg.grids.lambda.hi) {
        return Ok((lo, hi));
    }
    let (a, b) = window(cfg, [-200, 199]);
    let ev = match op {
        Operator::Jacobi(c) => spectrum_estimate(&truncate_jacobi(c, a, b)?),
        Operator::Dirac(d) => truncate_dirac(d, a, b, cfg.boundary.into())?.eigenvalues(),
    };
    Ok((cfg.grids.lambda.lo.unwrap_or(ev[0]), cfg.grids.lambda.hi.unwrap_or(ev[ev.len() - 1])))
}

fn xi(cfg: &RunConfig) -> Result<Outcome> {
    let op = cfg.operator()?;
    let opts = cfg.weyl_options();
    let (e_minus, e_plus) = interval(cfg, &op)?;
    let pad = if cfg.grids.lambda.lo.is_some() { 0.0 } else { 0.25 * (e_plus - e_minus) };
    // Dirac spectra are symmetric; an even default node count keeps λ = 0,
    // where z² is real, off the grid.
    let default_nodes = if matches!(op, Operator::Dirac(_)) { 400 } else { 401 };
    let lambdas = uniform_grid(e_minus - pad, e_plus + pad, cfg.grids.lambda.nodes.unwrap_or(default_nodes));
    let eps = cfg.grids.epsilon;
    let grids: Vec<XiGrid> = cfg
        .sites
        .iter()
        .map(|&k| match &op {
            Operator::Jacobi(c) => xi_grid(c, k, &lambdas, eps, XiTarget::XiOfG, &opts),
            Operator::Dirac(d) => upsilon_grid(d, k, &lambdas, eps, &opts),
        })
        .collect::<std::result::Result<_, _>>()?;
    let width = e_plus - e_minus;
    let (mid_lo, mid_hi) = (e_minus + 0.1 * width, e_plus - 0.1 * width);
    let summary: Vec<Value> = grids
        .iter()
        .map(|g| {
            json!({
                "k": g.k,
                "file": format!("xi_k{}.csv", g.k),
                "bounds_violation": g.bounds_violation(),
                "max_deviation_from_half": g.max_deviation_from_half(mid_lo, mid_hi),
            })
        })
        .collect();
    let violation = fold_max(grids.iter().map(|g| g.bounds_violation()));
    let mut out = Outcome::new(
        json!({ "interval": [e_minus, e_plus], "epsilon": eps, "nodes": lambdas.len(), "sites": summary }),
        vec![Check::at_most("values outside [0, I]", violation, cfg.tolerances.default)],
    );
    out.files = grids.iter().map(|g| (format!("xi_k{}.csv", g.k), xi_grid_csv(g))).collect();
    Ok(out)
}

fn trace(cfg: &RunConfig) -> Result<Outcome> {
    let c = jacobi(cfg, "trace")?;
    let opts = cfg.weyl_options();
    let (e_minus, e_plus) = interval(cfg, &Operator::Jacobi(c.clone()))?;
    let lambdas = uniform_grid(e_minus, e_plus, cfg.grids.lambda.nodes.unwrap_or(10_001));
    let eps = cfg.grids.epsilon;
    let mut rows = Vec::new();
    let (mut worst2, mut worst3): (f64, f64) = (0.0, 0.0);
    for &k in &cfg.sites {
        let grid = xi_grid(&c, k, &lambdas, eps, XiTarget::XiOfG, &opts)?;
        let s = s_series(&c, k, 3)?;
        let mut per_j = Vec::new();
        for j in 1..=3usize {
            let rhs = trace_rhs(j, &grid, e_minus, e_plus)?;
            let err = max_diff(&rhs, &s.coeff(j as i64));
            match j {
                2 => worst2 = worst2.max(err),
                3 => worst3 = worst3.max(err),
                _ => {}
            }
            per_j.push(json!({ "j": j, "s_j": matrix_to_json(&s.coeff(j as i64)), "trace_rhs": matrix_to_json(&rhs), "error": err }));
        }
        rows.push(json!({ "k": k, "orders": per_j }));
    }
    let checks = vec![
        Check::at_most("max |trace_rhs(2) - s_2|", worst2, cfg.tolerances.trace_j2),
        Check::at_most("max |trace_rhs(3) - s_3|", worst3, cfg.tolerances.trace_j3),
    ];
    Ok(Outcome::new(
        json!({ "interval": [e_minus, e_plus], "epsilon": eps, "nodes": lambdas.len(), "sites": rows }),
        checks,
    ))
}

fn borg_jacobi_check(cfg: &RunConfig) -> Result<Outcome> {
    let (e_minus, e_plus) = match cfg.model {
        Model::BorgJacobi { e_minus, e_plus, .. } => (e_minus, e_plus),
        _ => return Err(ConfigError::Invalid("`borg-jacobi` needs a borg-jacobi model".into()).into()),
    };
    let c = jacobi(cfg, "borg-jacobi")?;
    let opts = cfg.weyl_options();
    let tol = &cfg.tolerances;
    let m = c.dim();
    let (lo, hi) = window(cfg, [0, 1999]);
    let ev = spectrum_estimate(&truncate_jacobi(&c, lo, hi)?);
    let (first, last) = (ev[0], ev[ev.len() - 1]);
    let outside = (e_minus - first).max(last - e_plus).max(0.0);

    let pairs: Vec<(i64, C64)> =
        cfg.sites.iter().flat_map(|&k| cfg.z_points().into_iter().map(move |z| (k, z))).collect();
    let errs = pairs
        .par_iter()
        .map(|&(k, z)| {
            let id = eye(m);
            let g = max_diff(&diagonal_green(&c, z, k, &opts)?, &(&id * borg_g(z, e_minus, e_plus)));
            let p = max_diff(&weyl_m_big(&c, z, k, Side::Plus, &opts)?.value, &(&id * borg_m(z, e_minus, e_plus, 1.0)));
            let n =
                max_diff(&weyl_m_big(&c, z, k, Side::Minus, &opts)?.value, &(&id * borg_m(z, e_minus, e_plus, -1.0)));
            Ok((g, p.max(n)))
        })
        .collect::<std::result::Result<Vec<_>, jborg::Error>>()?;
    let err_g = fold_max(errs.iter().map(|e| e.0));
    let err_m = fold_max(errs.iter().map(|e| e.1));

    let width = e_plus - e_minus;
    let (mid_lo, mid_hi) = (e_minus + 0.1 * width, e_plus - 0.1 * width);
    let lambdas = uniform_grid(mid_lo, mid_hi, cfg.grids.lambda.nodes.unwrap_or(401));
    let mut xi_rows = Vec::new();
    let mut xi_dev: f64 = 0.0;
    for &k in &cfg.sites {
        let g = xi_grid(&c, k, &lambdas, cfg.grids.epsilon, XiTarget::XiOfG, &opts)?;
        let d = g.max_deviation_from_half(mid_lo, mid_hi);
        xi_dev = xi_dev.max(d);
        xi_rows.push(json!({ "k": k, "max_abs_xi_minus_half": d }));
    }
    let results = json!({
        "interval": [e_minus, e_plus],
        "spectrum": { "sites": [lo, hi], "min": first, "max": last, "outside": outside },
        "max_green_error": err_g,
        "max_weyl_error": err_m,
        "epsilon": cfg.grids.epsilon,
        "xi": xi_rows,
        "max_abs_xi_minus_half": xi_dev,
    });
    let checks = vec![
        Check::at_most("spectrum outside [E-, E+]", outside, tol.default),
        Check::at_most("gap at E-", first - e_minus, tol.endpoint_gap),
        Check::at_most("gap at E+", e_plus - last, tol.endpoint_gap),
        Check::at_most("max |g - closed form|", err_g, tol.default),
        Check::at_most("max |M± - closed form|", err_m, tol.default),
        Check::at_most("max |Xi - I/2| on middle 80%", xi_dev, tol.xi_half),
    ];
    Ok(Outcome::new(results, checks))
}

fn cross_route(d: &DiracCoefficients, cfg: &RunConfig, opts: &WeylOptions) -> Result<f64> {
    let pairs: Vec<(i64, C64)> =
        cfg.sites.iter().flat_map(|&k| cfg.z_points().into_iter().map(move |z| (k, z))).collect();
    let errs = pairs
        .par_iter()
        .map(|&(k, z)| {
            let mut e: f64 = 0.0;
            for side in [Side::Plus, Side::Minus] {
                let a = dirac_weyl(d, z, k, side, DiracRoute::H1, opts)?.value;
                let b = dirac_weyl(d, z, k, side, DiracRoute::H2, opts)?.value;
                e = e.max(max_diff(&a, &b));
            }
            Ok(e)
        })
        .collect::<std::result::Result<Vec<f64>, jborg::Error>>()?;
    Ok(fold_max(errs))
}

fn borg_dirac_check(cfg: &RunConfig) -> Result<Outcome> {
    let (e_minus, e_plus, m) = match &cfg.model {
        Model::BorgDirac { e_minus, e_plus, signs } => (*e_minus, *e_plus, signs.len()),
        _ => return Err(ConfigError::Invalid("`borg-dirac` needs a borg-dirac model".into()).into()),
    };
    cfg.operator()?;
    let opts = cfg.weyl_options();
    let tol = &cfg.tolerances;
    let (lo, hi) = window(cfg, [0, 499]);
    let family = borg_family_all(e_minus, e_plus, m)?;
    let mut members = Vec::new();
    let mut spectra = Vec::new();
    let mut valid = 0usize;
    let mut cross: f64 = 0.0;
    for f in &family {
        let d = f.coefficients();
        if let Ok(d) = &d {
            valid += 1;
            spectra.push(truncate_dirac(d, lo, hi, DiracBoundary::Periodic)?.eigenvalues());
            cross = cross.max(cross_route(d, cfg, &opts)?);
        }
        members.push(json!({
            "signs": f.signs,
            "rho": f.rho_value,
            "chi": f.chi_value,
            "valid": d.is_ok(),
        }));
    }
    let mut haus: f64 = 0.0;
    let mut outside: f64 = 0.0;
    for (i, x) in spectra.iter().enumerate() {
        for y in &spectra[i + 1..] {
            haus = haus.max(hausdorff(x, y));
        }
        outside =
            outside.max(fold_max(x.iter().map(|&v| distance_to_symmetric_bands(v, e_minus.sqrt(), e_plus.sqrt()))));
    }
    let distinct = {
        let mut seen: Vec<(&Vec<f64>, &Vec<f64>)> = Vec::new();
        for f in &family {
            if !seen.iter().any(|(r, c)| **r == f.rho_value && **c == f.chi_value) {
                seen.push((&f.rho_value, &f.chi_value));
            }
        }
        seen.len()
    };
    let expected = 1usize << m;
    let mut checks = vec![
        Check::holds(format!("{expected} members, all valid"), family.len() == expected && valid == expected),
        Check::at_most("pairwise Hausdorff distance of ring spectra", haus, tol.hausdorff),
        Check::at_most("distance of spectra to the two bands", outside, tol.hausdorff),
        Check::at_most("max |M via H1 - M via H2|", cross, tol.default),
    ];
    if e_minus == 0.0 {
        checks.push(Check::holds("E- = 0 collapses to a single member", distinct == 1));
    }
    let results = json!({
        "interval": [e_minus, e_plus],
        "members": members,
        "distinct_members": distinct,
        "ring_sites": [lo, hi],
        "max_hausdorff": haus,
        "max_distance_to_bands": outside,
        "max_cross_route": cross,
    });
    Ok(Outcome::new(results, checks))
}

fn reconstruct(cfg: &RunConfig) -> Result<Outcome> {
    let c = jacobi(cfg, "reconstruct")?;
    let (lo, hi) = window(cfg, [0, 11]);
    let n = (hi - lo + 1) as usize;
    let mut checks = Vec::new();
    let mut files = Vec::new();
    let mut rows = Vec::new();
    for (side, k0) in [(Side::Plus, lo), (Side::Minus, hi)] {
        let mu = spectral_measure_halfline(&c, k0, side, n)?;
        let sys = block_lanczos(&mu, cfg.steps, k0, side)?;
        let mut err: f64 = 0.0;
        let mut recovered = Vec::new();
        for (name, seq, truth) in [("a", &sys.recovered_a, c.a_seq()), ("b", &sys.recovered_b, c.b_seq())] {
            let (a, b) = seq.window();
            for k in a..=b {
                err = err.max(max_diff(seq.at(k)?, truth.at(k)?));
                recovered.push(json!({ "coefficient": name, "k": k, "value": matrix_to_json(seq.at(k)?) }));
            }
        }
        let file = format!("measure_{}.json", side_name(side));
        files.push((file.clone(), jborg::io::to_canonical_json(&measure_to_json(&mu))));
        checks.push(Check::at_most(format!("{} round trip", side_name(side)), err, cfg.tolerances.default));
        checks.push(Check::at_most(
            format!("{} orthonormality defect", side_name(side)),
            sys.orthonormality_defect(),
            cfg.tolerances.default,
        ));
        rows.push(json!({ "side": side_name(side), "k0": k0, "measure_file": file, "nodes": mu.nodes.len(), "max_error": err, "recovered": recovered }));
    }
    let mut out = Outcome::new(json!({ "sites": [lo, hi], "steps": cfg.steps, "sides": rows }), checks);
    out.files = files;
    Ok(out)
}

fn verify_all() -> Outcome {
    let criteria = jborg_verify::run_all();
    let checks = criteria
        .iter()
        .flat_map(|c| {
            let mut v: Vec<Check> =
                c.checks.iter().map(|k| Check { label: format!("[{}] {}", c.id, k.label), ..k.clone() }).collect();
            if let Some(e) = &c.error {
                v.push(Check::holds(format!("[{}] {}: {e}", c.id, c.name), false));
            }
            v
        })
        .collect();
    let results = json!({
        "criteria": criteria.iter().map(|c| json!({ "id": c.id, "name": c.name, "passed": c.passed })).collect::<Vec<_>>(),
    });
    Outcome::new(results, checks)
}
