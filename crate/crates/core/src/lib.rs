//! Spectral toolkit for matrix-valued Jacobi operators
//! `H = A S+ + A- S- + B` and supersymmetric Dirac difference operators.

// Negated comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod band;
pub mod dirac;
pub mod error;
pub mod herglotz;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod models;
pub mod quadrature;
pub mod reconstruct;
pub mod series;
pub mod weyl;

pub use error::{Error, Result};
pub use lattice::{
    spectrum_estimate, truncate_jacobi, validate_jacobi, wronskian, Extension, JacobiCoefficients, MatrixSeq,
    TruncatedOperator,
};
pub use linalg::{CMat, C64};
