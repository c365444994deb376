use std::collections::BTreeMap;

use super::{Atom, Expr, ExprError, LinForm, Monomial, Result, Var};

/// Left-hand side of a substitution rule.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Pattern {
    Const(String),
    Var(Var),
    /// Unknown function at derivative multi-index `d`; also rewrites every
    /// higher derivative by differentiating the bound expression.
    Fn {
        name: String,
        d: [u32; 2],
    },
}

#[derive(Clone, Default, Debug)]
pub struct Bindings {
    map: BTreeMap<Pattern, Expr>,
}

impl Bindings {
    pub fn new() -> Self {
        Bindings::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pattern, &Expr)> {
        self.map.iter()
    }

    pub fn insert(&mut self, p: Pattern, e: Expr) -> Result<()> {
        let clash = self.map.keys().any(|q| match (q, &p) {
            (Pattern::Fn { name: a, .. }, Pattern::Fn { name: b, .. }) => a == b,
            _ => *q == p,
        });
        if clash {
            return Err(ExprError::InconsistentBinding(format!("{p:?} bound twice")));
        }
        self.map.insert(p, e);
        Ok(())
    }

    pub fn bind_const(&mut self, name: &str, e: Expr) -> Result<()> {
        self.insert(Pattern::Const(name.to_string()), e)
    }

    pub fn bind_fn(&mut self, name: &str, d: [u32; 2], e: Expr) -> Result<()> {
        self.insert(Pattern::Fn { name: name.to_string(), d }, e)
    }

    pub fn bind_var(&mut self, v: Var, e: Expr) -> Result<()> {
        self.insert(Pattern::Var(v), e)
    }

    /// Builder-style constant binding for literals known to be distinct.
    pub fn with_const(mut self, name: &str, e: Expr) -> Self {
        self.map.insert(Pattern::Const(name.to_string()), e);
        self
    }

    pub fn with_fn(mut self, name: &str, d: [u32; 2], e: Expr) -> Self {
        self.map.insert(Pattern::Fn { name: name.to_string(), d }, e);
        self
    }

    fn lookup(&self, a: &Atom) -> Result<Option<Expr>> {
        match a {
            Atom::Var(v) => Ok(self.map.get(&Pattern::Var(*v)).cloned()),
            Atom::Const(n) => Ok(self.map.get(&Pattern::Const(n.to_string())).cloned()),
            Atom::Fn(f) => {
                for (p, e) in &self.map {
                    if let Pattern::Fn { name, d } = p {
                        if name.as_str() == &*f.name && d[0] <= f.d[0] && d[1] <= f.d[1] {
                            return Ok(Some(e.diff_mixed(f.d[0] - d[0], f.d[1] - d[1])));
                        }
                    }
                }
                Ok(None)
            }
            Atom::Wp(_) => Ok(None),
            Atom::Recip(p) => {
                let q = p.substitute(self)?;
                if q == **p {
                    Ok(None)
                } else {
                    Ok(Some(q.recip()?))
                }
            }
        }
    }
}

impl Expr {
    /// Single-pass substitution; the result is normalized.
    pub fn substitute(&self, b: &Bindings) -> Result<Expr> {
        if b.is_empty() {
            return Ok(self.clone());
        }
        let var_bound = [b.map.contains_key(&Pattern::Var(Var::U1)), b.map.contains_key(&Pattern::Var(Var::U2))];
        let mut repl: BTreeMap<Atom, Option<Expr>> = BTreeMap::new();
        let mut powers: BTreeMap<(Atom, i32), Expr> = BTreeMap::new();
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let mut kept = Monomial { exp: m.exp.clone(), pows: Vec::new() };
            let mut factor: Option<Expr> = None;
            if (var_bound[0] && m.exp.depends_on(Var::U1)) || (var_bound[1] && m.exp.depends_on(Var::U2)) {
                kept.exp = LinForm::zero();
                let mut arg = Expr::zero();
                for v in Var::ALL {
                    let k = m.exp.coeff(v);
                    if k.is_zero() {
                        continue;
                    }
                    let val = match b.map.get(&Pattern::Var(v)) {
                        Some(e) => e.clone(),
                        None => Expr::var(v),
                    };
                    arg = &arg + &val.scale(&k);
                }
                factor = Some(Expr::exp(&arg)?);
            }
            for (a, e) in &m.pows {
                if !repl.contains_key(a) {
                    let r = b.lookup(a)?;
                    repl.insert(a.clone(), r);
                }
                match &repl[a] {
                    None => kept.pows.push((a.clone(), *e)),
                    Some(r) => {
                        let key = (a.clone(), *e);
                        if !powers.contains_key(&key) {
                            powers.insert(key.clone(), r.powi(*e)?);
                        }
                        let pe = &powers[&key];
                        factor = Some(match factor {
                            None => pe.clone(),
                            Some(f) => &f * pe,
                        });
                    }
                }
            }
            match factor {
                None => out.push(kept, c.clone()),
                Some(f) => out = &out + &f.mul_monomial(&kept, c),
            }
        }
        Ok(out.normalize())
    }

    /// Repeats substitution until the expression stops changing.
    pub fn substitute_fixpoint(&self, b: &Bindings, max_passes: usize) -> Result<Expr> {
        let mut cur = self.clone();
        for _ in 0..max_passes {
            let next = cur.substitute(b)?;
            if next == cur {
                return Ok(cur);
            }
            cur = next;
        }
        Err(ExprError::Internal(format!("substitution did not reach a fixpoint in {max_passes} passes")))
    }

    /// Replaces a named constant by an expression.
    pub fn subs_const(&self, name: &str, e: &Expr) -> Result<Expr> {
        self.substitute(&Bindings::new().with_const(name, e.clone()))
    }

    pub fn subs_fn(&self, name: &str, d: [u32; 2], e: &Expr) -> Result<Expr> {
        self.substitute(&Bindings::new().with_fn(name, d, e.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn constant_and_function_bindings() {
        let e = parse("a4*D[v2,u2,1] + 2*D[U2,u2,2]").unwrap();
        let r = e.subs_const("a4", &Expr::zero()).unwrap();
        assert_eq!(r, parse("2*D[U2,u2,2]").unwrap());
        let u = parse("D[U2,u2,2]").unwrap();
        assert!(u.subs_fn("U2", [0, 0], &parse("b0 + b1*u2").unwrap()).unwrap().is_empty());
    }

    #[test]
    fn duplicate_binding_rejected() {
        let mut b = Bindings::new();
        b.bind_fn("U1", [0, 0], Expr::zero()).unwrap();
        assert!(b.bind_fn("U1", [0, 2], Expr::zero()).is_err());
    }

    #[test]
    fn higher_orders_follow_binding() {
        let e = parse("D[U1,u2,3]").unwrap();
        let r = e.subs_fn("U1", [0, 1], &parse("sin(u2)").unwrap()).unwrap();
        assert_eq!(r, parse("-sin(u2)").unwrap());
    }

    #[test]
    fn variable_binding_through_exponential() {
        let e = parse("exp(2*u1)*u1").unwrap();
        let mut b = Bindings::new();
        b.bind_var(Var::U1, parse("u2").unwrap()).unwrap();
        assert_eq!(e.substitute(&b).unwrap(), parse("exp(2*u2)*u2").unwrap());
    }
}
