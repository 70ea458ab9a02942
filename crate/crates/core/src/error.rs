use thiserror::Error;

/// Errors produced by the solvers and models in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("root not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("no convergence after {iters} iterations (best iterate {best})")]
    Convergence { iters: usize, best: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no primary link: normalized PT-PR channel is zero")]
    NoPrimaryLink,

    #[error("no backscatter link: normalized cascaded channel is zero")]
    NoBackscatterLink,

    #[error("initial point is not strictly feasible: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
