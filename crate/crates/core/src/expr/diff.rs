use std::collections::BTreeMap;

use super::{Atom, Coeff, Expr, Var};

impl Expr {
    /// First partial derivative, normalized.
    pub fn diff(&self, v: Var) -> Expr {
        let mut cache = BTreeMap::new();
        self.diff_raw(v, &mut cache).normalize()
    }

    /// n-th partial derivative.
    pub fn diff_n(&self, v: Var, n: u32) -> Expr {
        let mut e = self.clone();
        let mut cache = BTreeMap::new();
        for _ in 0..n {
            if e.is_empty() {
                break;
            }
            e = e.diff_raw(v, &mut cache);
        }
        e.normalize()
    }

    /// Mixed partial `d^a/du1^a d^b/du2^b`.
    pub fn diff_mixed(&self, a: u32, b: u32) -> Expr {
        self.diff_n(Var::U1, a).diff_n(Var::U2, b)
    }

    fn diff_raw(&self, v: Var, cache: &mut BTreeMap<Atom, Expr>) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let lam = m.exp.coeff(v);
            if !lam.is_zero() {
                out.push(m.clone(), c * &lam);
            }
            for (idx, (a, p)) in m.pows.iter().enumerate() {
                if !a.depends_on(v) {
                    continue;
                }
                let da = cache.entry(a.clone()).or_insert_with(|| atom_derivative(a, v)).clone();
                if da.is_empty() {
                    continue;
                }
                let mut rest = m.clone();
                if *p == 1 {
                    rest.pows.remove(idx);
                } else {
                    rest.pows[idx].1 = p - 1;
                }
                let k = c * &Coeff::int(*p as i64);
                for (dm, dc) in &da.terms {
                    out.push(rest.mul(dm), &k * dc);
                }
            }
        }
        out
    }
}

fn atom_derivative(a: &Atom, v: Var) -> Expr {
    match a {
        Atom::Var(w) => {
            if *w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Atom::Const(_) => Expr::zero(),
        Atom::Fn(f) => {
            if !f.deps.contains(v) {
                return Expr::zero();
            }
            let mut d = f.d;
            d[v.index()] += 1;
            Expr::atom(Atom::Fn(f.with_d(d)))
        }
        Atom::Wp(w) => {
            if w.var != v {
                return Expr::zero();
            }
            if w.deriv == 0 {
                Expr::atom(Atom::Wp(w.with_deriv(1)))
            } else {
                // wp'' = 6 wp^2 - g2/2
                let p = Expr::atom(Atom::Wp(w.with_deriv(0)));
                &(&p * &p).scale(&Coeff::int(6)) - &Expr::constant(&w.g2).scale(&Coeff::ratio(1, 2))
            }
        }
        Atom::Recip(p) => {
            let dp = p.diff_raw(v, &mut BTreeMap::new());
            if dp.is_empty() {
                return Expr::zero();
            }
            let r2 = super::Monomial::atom(a.clone(), 2);
            -dp.mul_monomial(&r2, &Coeff::one())
        }
    }
}
