//! Rewriting of ODE conditions: each condition with a constant leading
//! coefficient in some unknown is turned into a rule for that unknown's
//! highest derivative.

use super::Result;
use crate::expr::{Bindings, Expr, FnAtom, Monomial};

/// Unknown functions eliminated by the rules, in priority order.
pub const UNKNOWNS: [&str; 2] = ["U1", "U2"];

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub name: String,
    /// Derivative order in `u2` of the rewritten atom.
    pub order: u32,
    pub rhs: Expr,
    /// Index of the condition the rule was built from.
    pub source: usize,
}

#[derive(Clone, Debug, Default)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    bindings: Bindings,
}

/// Highest `u2`-derivative of `name` in `e`.
pub fn top_atom(e: &Expr, name: &str) -> Option<FnAtom> {
    e.fn_atoms().into_iter().filter(|f| &*f.name == name).max_by_key(|f| f.d[1])
}

/// Highest-ranked unknown derivative in `e`: by order, then by position in
/// `unknowns`.
pub fn leader(e: &Expr, unknowns: &[&str]) -> Option<FnAtom> {
    e.fn_atoms()
        .into_iter()
        .filter_map(|f| unknowns.iter().position(|n| *n == &*f.name).map(|p| (f.d[1], std::cmp::Reverse(p), f)))
        .max_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)))
        .map(|t| t.2)
}

/// Splits `e = c * atom + rest` when `e` is linear in `atom` and `c` is a
/// single constant monomial; returns `(c, rest)`.
pub fn linear_constant_split(e: &Expr, atom: &FnAtom) -> Option<((Monomial, crate::expr::Coeff), Expr)> {
    let a = crate::expr::Atom::Fn(atom.clone());
    let poly = e.as_poly_in(&a);
    if poly.keys().any(|k| *k != 0 && *k != 1) {
        return None;
    }
    let c = poly.get(&1)?;
    if c.len() != 1 || !c.fn_atoms().is_empty() || c.depends_on(crate::expr::Var::U1) || c.depends_on(crate::expr::Var::U2) || c.has_recip()
    {
        return None;
    }
    let (m, k) = c.lead()?;
    Some(((m.clone(), k.clone()), poly.get(&0).cloned().unwrap_or_default()))
}

/// `atom = -rest / c`.
pub fn solve_linear(c: &(Monomial, crate::expr::Coeff), rest: &Expr) -> Expr {
    let inv = Expr::term(c.0.inv(), c.1.inv().expect("nonzero coefficient"));
    (&(-rest) * &inv).normalize()
}

impl RuleSet {
    pub fn new() -> Self {
        RuleSet::default()
    }

    /// Builds rules from `conds` (skipping `skip`), repeatedly orienting the
    /// reduced condition whose leader has the lowest order (then the shortest
    /// right-hand side). A leader is
    /// rewritable when its unknown has no rule yet and it appears linearly
    /// with a constant coefficient.
    pub fn build(conds: &[Expr], skip: Option<usize>, unknowns: &[&str]) -> Result<RuleSet> {
        let mut rs = RuleSet::new();
        let mut open: Vec<usize> = (0..conds.len()).filter(|i| Some(*i) != skip).collect();
        loop {
            let mut best: Option<((u32, usize), usize, Rule)> = None;
            for (pos, &i) in open.iter().enumerate() {
                let r = rs.reduce(&conds[i])?;
                if let Some(rule) = rs.candidate_rule(&r, i, unknowns) {
                    let key = (rule.order, rule.rhs.len());
                    if best.as_ref().map_or(true, |b| key < b.0) {
                        best = Some((key, pos, rule));
                    }
                }
            }
            let Some((_, pos, rule)) = best else { break };
            open.remove(pos);
            rs.push(rule)?;
        }
        Ok(rs)
    }

    fn candidate_rule(&self, e: &Expr, source: usize, unknowns: &[&str]) -> Option<Rule> {
        let top = leader(e, unknowns)?;
        if self.has_rule_for(&top.name) {
            return None;
        }
        let (c, rest) = linear_constant_split(e, &top)?;
        Some(Rule { name: top.name.to_string(), order: top.d[1], rhs: solve_linear(&c, &rest), source })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn has_rule_for(&self, name: &str) -> bool {
        self.rules.iter().any(|r| r.name == name)
    }

    /// Adds a rule built from `e` if possible; returns whether one was added.
    pub fn orient(&mut self, e: &Expr, source: usize, unknowns: &[&str]) -> Result<bool> {
        match self.candidate_rule(e, source, unknowns) {
            Some(r) => {
                self.push(r)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    pub fn push(&mut self, r: Rule) -> Result<()> {
        self.bindings.bind_fn(&r.name, [0, r.order], r.rhs.clone())?;
        self.rules.push(r);
        Ok(())
    }

    pub fn bindings(&self) -> &Bindings {
        &self.bindings
    }

    /// Normal form of `e` under the rules.
    pub fn reduce(&self, e: &Expr) -> Result<Expr> {
        if self.rules.is_empty() {
            return Ok(e.normalize());
        }
        Ok(e.substitute_fixpoint(&self.bindings, 32)?.normalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn orients_on_constant_lead() {
        let c = parse("a4*D[v2,u2,1] + 2*D[U2,u2,2]").unwrap();
        let rs = RuleSet::build(&[c], None, &UNKNOWNS).unwrap();
        assert_eq!(rs.rules.len(), 1);
        assert_eq!(rs.rules[0].order, 2);
        assert_eq!(rs.rules[0].rhs, parse("-a4*D[v2,u2,1]/2").unwrap());
        let e = parse("D[U2,u2,4] + D[U2,u2,1]").unwrap();
        assert_eq!(rs.reduce(&e).unwrap(), parse("-a4*D[v2,u2,3]/2 + D[U2,u2,1]").unwrap());
    }

    #[test]
    fn skips_non_constant_leads() {
        let c = parse("D[v2,u2,1]*D[U1,u2,1] - 2*v2*U1").unwrap();
        assert!(RuleSet::build(&[c], None, &UNKNOWNS).unwrap().is_empty());
        let c = parse("4*U1 + 4*D[U2,u2,2] + v2").unwrap();
        let rs = RuleSet::build(&[c], None, &UNKNOWNS).unwrap();
        assert_eq!((rs.rules[0].name.as_str(), rs.rules[0].order), ("U2", 2));
    }

    #[test]
    fn reduces_before_orienting() {
        let a = parse("D[U2,u2,2] - v2").unwrap();
        let b = parse("D[U2,u2,4] + D[U2,u2,1]").unwrap();
        let rs = RuleSet::build(&[a, b], None, &UNKNOWNS).unwrap();
        assert_eq!(rs.rules.len(), 1);
        assert_eq!(rs.rules[0].order, 2);
        let rs = RuleSet::build(&[parse("D[U2,u2,4] + D[U2,u2,1]").unwrap(), parse("D[U2,u2,2] - v2").unwrap()], None, &UNKNOWNS).unwrap();
        assert_eq!((rs.rules[0].order, rs.rules[0].source), (2, 1));
    }
}
