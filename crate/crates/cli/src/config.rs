use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use jborg::dirac::{borg_family, random_dirac, validate_dirac, DiracBoundary, DiracCoefficients};
use jborg::io::matrix_from_json;
use jborg::linalg::{c, C64};
use jborg::models::{borg_jacobi, free, random_jacobi, random_periodic_jacobi};
use jborg::{validate_jacobi, Extension, JacobiCoefficients, MatrixSeq};

/// Problems with the configuration itself; reported before any output is
/// written.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid model: {0}")]
    Model(#[from] jborg::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    #[serde(default)]
    pub grids: Grids,
    /// Sites at which site-dependent quantities are evaluated.
    #[serde(default = "default_sites")]
    pub sites: Vec<i64>,
    /// Finite section `[lo, hi]`; each command has its own default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<[i64; 2]>,
    #[serde(default)]
    pub boundary: Boundary,
    /// Block Lanczos steps for `reconstruct`.
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_sites() -> Vec<i64> {
    vec![0]
}

fn default_steps() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Model {
    Explicit {
        #[serde(default)]
        lo: i64,
        #[serde(default)]
        extension: ExtensionSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<Vec<Value>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<Value>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<Vec<Value>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        chi: Option<Vec<Value>>,
    },
    BorgJacobi {
        e_minus: f64,
        e_plus: f64,
        m: usize,
    },
    BorgDirac {
        e_minus: f64,
        e_plus: f64,
        signs: Vec<i8>,
    },
    Free {
        m: usize,
    },
    Random {
        m: usize,
        seed: u64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        /// Periodic coefficients with this period instead of a random window
        /// with constant tails.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<usize>,
        #[serde(default = "default_window")]
        window: [i64; 2],
        /// Random Dirac pair (always periodic) instead of a Jacobi operator.
        #[serde(default)]
        dirac: bool,
    },
}

fn default_amplitude() -> f64 {
    0.8
}

fn default_window() -> [i64; 2] {
    [-10, 10]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionSpec {
    #[default]
    ConstantTail,
    Periodic,
    Forbidden,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl From<Boundary> for DiracBoundary {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::Open => DiracBoundary::Open,
            Boundary::Periodic => DiracBoundary::Periodic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Spectral parameters as `[re, im]`.
    #[serde(default = "default_z")]
    pub z: Vec<[f64; 2]>,
    #[serde(default)]
    pub lambda: LambdaGrid,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

impl Default for Grids {
    fn default() -> Self {
        Grids { z: default_z(), lambda: LambdaGrid::default(), epsilon: default_epsilon() }
    }
}

fn default_z() -> Vec<[f64; 2]> {
    (0..20).map(|i| [-3.0 + 0.37 * i as f64, 1.0 + 0.25 * (i % 5) as f64]).collect()
}

fn default_epsilon() -> f64 {
    1e-3
}

/// Uniform λ-grid; a missing end point is filled in from the spectrum.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Identities that hold up to roundoff or truncation error.
    #[serde(default = "tol_default")]
    pub default: f64,
    /// `max ‖Ξ − ½I‖` on the middle of a band.
    #[serde(default = "tol_xi")]
    pub xi_half: f64,
    #[serde(default = "tol_trace2")]
    pub trace_j2: f64,
    #[serde(default = "tol_trace3")]
    pub trace_j3: f64,
    /// Distance of truncated spectra to the band end points.
    #[serde(default = "tol_gap")]
    pub endpoint_gap: f64,
    /// Hausdorff distance between spectra of a Dirac family.
    #[serde(default = "tol_gap")]
    pub hausdorff: f64,
    /// Cauchy tolerance of the Weyl-function recursions.
    #[serde(default = "tol_weyl")]
    pub weyl: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            default: tol_default(),
            xi_half: tol_xi(),
            trace_j2: tol_trace2(),
            trace_j3: tol_trace3(),
            endpoint_gap: tol_gap(),
            hausdorff: tol_gap(),
            weyl: tol_weyl(),
        }
    }
}

fn tol_default() -> f64 {
    1e-8
}
fn tol_xi() -> f64 {
    2e-2
}
fn tol_trace2() -> f64 {
    2e-2
}
fn tol_trace3() -> f64 {
    5e-2
}
fn tol_gap() -> f64 {
    1e-3
}
fn tol_weyl() -> f64 {
    1e-10
}

/// The operator a model describes.
#[derive(Debug, Clone)]
pub enum Operator {
    Jacobi(JacobiCoefficients),
    Dirac(Box<DiracCoefficients>),
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    #[cfg(test)]
    pub fn canonical(&self) -> String {
        jborg::io::to_canonical_json(&self.to_json())
    }

    /// Everything that can be rejected without running a computation.
    pub fn check(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.sites.is_empty() {
            return bad("sites must not be empty".into());
        }
        if self.grids.z.iter().any(|z| !z[0].is_finite() || !z[1].is_finite()) {
            return bad("z grid contains non-finite values".into());
        }
        if self.grids.epsilon.is_nan() || self.grids.epsilon <= 0.0 {
            return bad(format!("epsilon must be positive, got {}", self.grids.epsilon));
        }
        if let Some([lo, hi]) = self.truncation {
            if hi <= lo {
                return bad(format!("truncation [{lo}, {hi}] is empty"));
            }
        }
        if let Some(n) = self.grids.lambda.nodes {
            if n < 2 {
                return bad("lambda grid needs at least 2 nodes".into());
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("default", t.default),
            ("xi_half", t.xi_half),
            ("trace_j2", t.trace_j2),
            ("trace_j3", t.trace_j3),
            ("endpoint_gap", t.endpoint_gap),
            ("hausdorff", t.hausdorff),
            ("weyl", t.weyl),
        ] {
            if v.is_nan() || v <= 0.0 {
                return bad(format!("tolerance {name} must be positive"));
            }
        }
        self.operator().map(|_| ())
    }

    pub fn z_points(&self) -> Vec<C64> {
        self.grids.z.iter().map(|z| c(z[0], z[1])).collect()
    }

    pub fn operator(&self) -> Result<Operator, ConfigError> {
        Ok(match &self.model {
            Model::Free { m } => Operator::Jacobi(free(nonzero(*m)?)),
            Model::BorgJacobi { e_minus, e_plus, m } => Operator::Jacobi(borg_jacobi(*e_minus, *e_plus, nonzero(*m)?)?),
            Model::BorgDirac { e_minus, e_plus, signs } => {
                Operator::Dirac(Box::new(borg_family(*e_minus, *e_plus, signs)?.coefficients()?))
            }
            Model::Random { m, seed, amplitude, period, window, dirac } => {
                let m = nonzero(*m)?;
                if *dirac {
                    Operator::Dirac(Box::new(random_dirac(m, *seed, period.unwrap_or(3), *amplitude)?))
                } else if let Some(p) = period {
                    Operator::Jacobi(random_periodic_jacobi(m, *seed, *amplitude, *p)?)
                } else {
                    Operator::Jacobi(random_jacobi(m, *seed, *amplitude, window[0], window[1])?)
                }
            }
            Model::Explicit { lo, extension, a, b, rho, chi } => {
                let seq = |v: &[Value]| -> Result<MatrixSeq, ConfigError> {
                    let entries = v.iter().map(matrix_from_json).collect::<Result<Vec<_>, _>>()?;
                    let ext = match extension {
                        ExtensionSpec::ConstantTail => Extension::ConstantTail,
                        ExtensionSpec::Forbidden => Extension::Forbidden,
                        ExtensionSpec::Periodic => Extension::Periodic(entries.len()),
                    };
                    Ok(MatrixSeq::new(*lo, entries, ext)?)
                };
                match (a, b, rho, chi) {
                    (Some(a), Some(b), None, None) => Operator::Jacobi(validate_jacobi(seq(a)?, seq(b)?)?),
                    (None, None, Some(r), Some(x)) => Operator::Dirac(Box::new(validate_dirac(seq(r)?, seq(x)?)?)),
                    _ => {
                        return Err(ConfigError::Invalid(
                            "explicit model needs either `a` and `b` or `rho` and `chi`".into(),
                        ))
                    }
                }
            }
        })
    }

    /// Replaces the seed of a random model.
    pub fn override_seed(&mut self, new: u64) {
        if let Model::Random { seed, .. } = &mut self.model {
            *seed = new;
        }
    }

    pub fn weyl_options(&self) -> jborg::weyl::WeylOptions {
        jborg::weyl::WeylOptions { tol: self.tolerances.weyl, ..Default::default() }
    }
}

fn nonzero(m: usize) -> Result<usize, ConfigError> {
    if m == 0 {
        Err(ConfigError::Invalid("matrix dimension m must be positive".into()))
    } else {
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let text = r#"{"model": {"type": "random", "m": 2, "seed": 5, "period": 3},
                       "grids": {"epsilon": 0.002, "lambda": {"nodes": 11}}, "sites": [0, 2]}"#;
        let cfg = RunConfig::parse(text).unwrap();
        let again = RunConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.canonical(), again.canonical());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(RunConfig::parse("{"), Err(ConfigError::Parse(_))));
        assert!(RunConfig::parse(r#"{"model": {"type": "free", "m": 1}, "extra": 1}"#).is_err());
        assert!(RunConfig::parse(r#"{"model": {"type": "free", "m": 1, "seed": 1}}"#).is_err());
        assert!(RunConfig::parse(r#"{"model": {"type": "borg-jacobi", "e_minus": 3, "e_plus": 1, "m": 2}}"#).is_err());
        assert!(RunConfig::parse(r#"{"model": {"type": "explicit", "a": [[[1]]]}}"#).is_err());
        let explicit = r#"{"model": {"type": "explicit", "a": [[[1]]], "b": [[[0]]]}}"#;
        assert!(matches!(RunConfig::parse(explicit).unwrap().operator().unwrap(), Operator::Jacobi(_)));
    }
}
