//! Numerical layer: elliptic functions, ODE integration, sampled residuals,
//! constant fitting and finite-difference commutator studies.

pub mod fit;
pub mod grid;
pub mod numfn;
pub mod ode;
pub mod pipeline;
pub mod quadrature;
pub mod residuals;
pub mod stencil;
pub mod weierstrass;

use thiserror::Error;

use crate::diffop::DiffOpError;
use crate::expr::eval::EvalError;
use crate::expr::ExprError;

#[derive(Debug, Clone, Error)]
pub enum NumericError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ode(#[from] ode::OdeError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    DiffOp(#[from] DiffOpError),
    #[error("residual is not affine in the fitted constants: {0}")]
    NonAffine(String),
    #[error("rank-deficient fit; null space has dimension {}", null_space.len())]
    RankDeficient { null_space: Vec<Vec<f64>> },
    #[error("precondition failed: {0}")]
    Precondition(String),
}
