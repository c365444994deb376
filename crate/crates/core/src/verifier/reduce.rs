//! Substitution of a candidate solution into the determining system and
//! extraction of the conditions on the functions of `u2`.

use serde::{Deserialize, Serialize};

use super::matching::proportional;
use super::rules::{RuleSet, UNKNOWNS};
use super::{Result, VerifyError};
use crate::catalog::{CandidateSolution, Condition, ConditionSet};
use crate::determining::{DeterminingSystem, Source};
use crate::expr::{Bindings, Coeff, Expr, Splitter, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PieceStatus {
    Kept,
    /// Reduces to zero modulo the rules of the other pieces.
    Consequence,
}

/// Coefficient of one `u1`-structure monomial in one residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub source: Source,
    pub origin: (u32, u32),
    /// The `u1`-dependent factor, e.g. `exp(-u1)` or `u1^2`.
    pub basis: String,
    pub expr: Expr,
    pub status: PieceStatus,
}

impl Piece {
    pub fn label(&self) -> String {
        format!("{}{:?}[{}]", self.source.name(), self.origin, self.basis)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    /// Kept pieces, in residual order.
    pub conditions: ConditionSet,
    pub pieces: Vec<Piece>,
    /// Residuals that vanish identically after substitution.
    pub vanished: Vec<(Source, (u32, u32))>,
}

pub fn candidate_bindings(c: &CandidateSolution) -> Bindings {
    Bindings::new().with_fn("F0", [0, 0], c.f0.clone()).with_fn("G0", [0, 0], c.g0.clone()).with_fn("GH", [0, 0], c.gh.clone()).with_fn(
        "GL",
        [0, 0],
        c.gl.clone(),
    )
}

/// Splits a residual free of denominators into coefficients of its
/// `u1`-structure (exponentials and powers of `u1`).
pub fn split_u1(e: &Expr) -> Result<Vec<(String, Expr)>> {
    let pred = |a: &crate::expr::Atom| a.depends_on(Var::U1);
    let s = Splitter { exp_vars: [true, false], atom: &pred };
    let mut out = Vec::new();
    for (m, c) in e.split_by(&s) {
        let c = c.normalize();
        if c.depends_on(Var::U1) {
            return Err(VerifyError::NotU2Only(c.to_text()));
        }
        if c.is_empty() {
            continue;
        }
        out.push((Expr::term(m, Coeff::one()).to_text(), c.primitive()));
    }
    Ok(out)
}

/// Substitutes the candidate into every residual and returns the independent
/// conditions on `U1, U2, v2`.
pub fn reduce_with_candidate(sys: &DeterminingSystem, cand: &CandidateSolution) -> Result<Reduction> {
    let b = candidate_bindings(cand);
    let mut pieces = Vec::new();
    let mut vanished = Vec::new();
    for r in &sys.residuals {
        let n = r.expr.substitute(&b)?.numerator();
        if n.is_empty() {
            vanished.push((r.source, r.origin));
            continue;
        }
        for (basis, expr) in split_u1(&n)? {
            pieces.push(Piece { source: r.source, origin: r.origin, basis, expr, status: PieceStatus::Kept });
        }
    }
    autoreduce(&mut pieces)?;
    let conditions = ConditionSet {
        conditions: pieces.iter().filter(|p| p.status == PieceStatus::Kept).map(|p| Condition::new(&p.label(), p.expr.clone())).collect(),
    };
    Ok(Reduction { conditions, pieces, vanished })
}

/// Marks pieces that reduce to zero modulo the others, latest first.
fn autoreduce(pieces: &mut [Piece]) -> Result<()> {
    for i in (0..pieces.len()).rev() {
        let others: Vec<Expr> =
            pieces.iter().enumerate().filter(|(j, p)| *j != i && p.status == PieceStatus::Kept).map(|(_, p)| p.expr.clone()).collect();
        let rs = RuleSet::build(&others, None, &UNKNOWNS)?;
        let r = rs.reduce(&pieces[i].expr)?;
        if r.is_zero()? {
            pieces[i].status = PieceStatus::Consequence;
            continue;
        }
        for o in &others {
            if proportional(&r, &rs.reduce(o)?)?.is_some() {
                pieces[i].status = PieceStatus::Consequence;
                break;
            }
        }
    }
    Ok(())
}
