//! Independent oracles and the acceptance criteria for `jborg`.

pub mod criteria;
pub mod oracles;

pub use criteria::{run, run_all, Check, Criterion};
