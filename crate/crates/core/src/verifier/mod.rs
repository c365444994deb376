//! Verification of candidate third-order symmetries against the catalog.

pub mod branch;
pub mod forms;
pub mod linsolve;
pub mod matching;
pub mod reduce;
pub mod rules;

use thiserror::Error;

use crate::catalog::CatalogError;
use crate::diffop::DiffOpError;
use crate::expr::ExprError;

pub use branch::{branch_eliminate, BranchOutcome};
pub use forms::{check_weierstrass_form, identify_constants, match_expected, verify_p_closure, FormMatch};
pub use matching::{match_conditions, ConditionMatch, MatchReport, PrintedCheck};
pub use reduce::{reduce_with_candidate, Piece, PieceStatus, Reduction};
pub use rules::{Rule, RuleSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    DiffOp(#[from] DiffOpError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("condition still depends on u1: {0}")]
    NotU2Only(String),
    #[error("branch is infeasible: {0}")]
    Infeasible(String),
    #[error("elimination did not finish within {0} steps")]
    Depth(usize),
    #[error("no final equation: {0}")]
    NoFinalEquation(String),
    #[error("linear system: {0}")]
    Linear(String),
}

pub type Result<T> = std::result::Result<T, VerifyError>;
