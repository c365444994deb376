//! Comparison of a derived condition set with a reference set, modulo the
//! differential consequences of the other conditions.

use serde::{Deserialize, Serialize};

use super::rules::{RuleSet, UNKNOWNS};
use super::Result;
use crate::catalog::ConditionSet;
use crate::expr::{Coeff, Expr};

/// `a = s * b` for a constant `s`, if such `s` exists (both nonzero).
pub fn proportional(a: &Expr, b: &Expr) -> Result<Option<Coeff>> {
    let (Some((ma, ca)), Some((mb, cb))) = (a.lead(), b.lead()) else {
        return Ok(None);
    };
    if ma != mb {
        return Ok(None);
    }
    let Some(s) = ca.div(cb) else { return Ok(None) };
    Ok(if (a - &b.scale(&s)).is_zero()? { Some(s) } else { None })
}

/// `a - s * b` with `s` chosen among the coefficient ratios of shared
/// monomials so that the difference has the fewest terms.
pub fn best_difference(a: &Expr, b: &Expr) -> Expr {
    let mut best = (a - b).normalize();
    for (m, cb) in b.terms() {
        let Some(ca) = a.terms().find(|(n, _)| *n == m).map(|(_, c)| c.clone()) else { continue };
        let Some(s) = ca.div(cb) else { continue };
        let d = (a - &b.scale(&s)).normalize();
        if d.len() < best.len() {
            best = d;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionMatch {
    pub reference: String,
    pub got: String,
    /// `reference = scale * got` modulo the other reference conditions.
    pub scale: Coeff,
}

/// Comparison of a reference condition with its printed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrintedCheck {
    pub name: String,
    pub matches: bool,
    /// Residual difference after the best constant rescaling.
    pub difference: Expr,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub matched: Vec<ConditionMatch>,
    pub unmatched_reference: Vec<String>,
    pub unmatched_got: Vec<(String, Expr)>,
    /// Derived conditions implied by the reference set.
    pub consequences: Vec<String>,
    pub printed: Vec<PrintedCheck>,
    pub full: bool,
}

/// Pairs each reference condition with a derived one that agrees up to a
/// constant factor modulo the rules built from the remaining references.
pub fn match_conditions(got: &ConditionSet, reference: &ConditionSet) -> Result<MatchReport> {
    let refs = reference.exprs();
    let mut used = vec![false; got.len()];
    let mut matched = Vec::new();
    let mut unmatched_reference = Vec::new();
    let mut printed = Vec::new();
    for (j, rc) in reference.conditions.iter().enumerate() {
        let rs = RuleSet::build(&refs, Some(j), &UNKNOWNS)?;
        let r = rs.reduce(&rc.expr)?;
        let mut found = false;
        for (i, gc) in got.conditions.iter().enumerate() {
            if used[i] {
                continue;
            }
            if let Some(s) = proportional(&r, &rs.reduce(&gc.expr)?)? {
                used[i] = true;
                matched.push(ConditionMatch { reference: rc.name.clone(), got: gc.name.clone(), scale: s });
                found = true;
                break;
            }
        }
        if !found {
            unmatched_reference.push(rc.name.clone());
        }
        if let Some(p) = &rc.printed {
            let pr = rs.reduce(p)?;
            let ok = proportional(&r, &pr)?.is_some();
            let difference = if ok { Expr::zero() } else { best_difference(&r, &pr) };
            printed.push(PrintedCheck { name: rc.name.clone(), matches: ok, difference, note: rc.note.clone() });
        }
    }
    let all = RuleSet::build(&refs, None, &UNKNOWNS)?;
    let reduced_refs: Vec<Expr> = refs.iter().map(|r| all.reduce(r)).collect::<Result<_>>()?;
    let mut consequences = Vec::new();
    let mut unmatched_got = Vec::new();
    for (i, gc) in got.conditions.iter().enumerate() {
        if used[i] {
            continue;
        }
        let g = all.reduce(&gc.expr)?;
        let implied =
            g.is_zero()? || reduced_refs.iter().map(|r| proportional(&g, r)).collect::<Result<Vec<_>>>()?.iter().any(|s| s.is_some());
        if implied {
            consequences.push(gc.name.clone());
        } else {
            unmatched_got.push((gc.name.clone(), g));
        }
    }
    let full = unmatched_reference.is_empty() && unmatched_got.is_empty();
    Ok(MatchReport { matched, unmatched_reference, unmatched_got, consequences, printed, full })
}
