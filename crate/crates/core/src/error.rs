use thiserror::Error;

/// Errors raised by the lattice, Weyl, series, Herglotz, reconstruction and
/// Dirac routines. Site indices are lattice sites, not storage offsets.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("site {0} lies outside the stored window")]
    OutOfWindow(i64),
    #[error("coefficient window too small: need sites [{lo}, {hi}]")]
    WindowTooSmall { lo: i64, hi: i64 },

    #[error("A({0}) is not positive definite")]
    NotPositiveDefinite(i64),
    #[error("B({0}) is not Hermitian")]
    NotHermitian(i64),

    #[error("A({0}) is numerically singular")]
    SingularA(i64),
    #[error("phi(z, {0}, k0) is numerically singular")]
    SingularPhi(i64),
    #[error("singular inversion: {0}")]
    SingularInversion(String),
    #[error("Riccati iteration did not converge by depth {depth}")]
    NoConvergence { depth: usize },
    #[error("|Im z| = {0:e} is too close to the real axis")]
    NearRealAxis(f64),
    #[error("site {site} is on the wrong side of the half-line boundary {boundary}")]
    WrongSide { site: i64, boundary: i64 },

    #[error("matrix logarithm undefined: eigenvalue {0} on the closed negative real axis")]
    LogBranchFailure(String),
    #[error("grid too coarse: {nodes} nodes (need at least {min})")]
    GridTooCoarse { nodes: usize, min: usize },
    #[error("z lies on the cut [{e_minus}, {e_plus}]")]
    OnCut { e_minus: f64, e_plus: f64 },
    #[error("bad interval: {0}")]
    BadInterval(String),

    #[error("block Lanczos breakdown at step {0}")]
    Breakdown(usize),

    #[error("rho({0}) is not diagonal with positive entries")]
    NotDiagonalPositive(i64),
    #[error("chi({0}) is numerically singular")]
    SingularChi(i64),
    #[error("positivity of rho(k)chi(k+1) or chi(k)rho(k) fails at site {0}")]
    PositivityFail(i64),
    #[error("rho({0}) is numerically singular")]
    SingularRho(i64),
    #[error("singular transform in the H2 route: {0}")]
    SingularTransform(String),
    #[error("supersymmetric eigenvector map undefined at z = 0")]
    ZeroEnergy,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
