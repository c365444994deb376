use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;

use super::{Atom, Coeff, Expr, ExprError, Monomial, Result};

impl Expr {
    /// Reciprocal atoms present at top level with their maximal exponent.
    pub(crate) fn recip_powers(&self) -> BTreeMap<Arc<Expr>, i32> {
        let mut out: BTreeMap<Arc<Expr>, i32> = BTreeMap::new();
        for m in self.terms.keys() {
            for (a, e) in &m.pows {
                if let Atom::Recip(p) = a {
                    let slot = out.entry(p.clone()).or_insert(0);
                    *slot = (*slot).max(*e);
                }
            }
        }
        out
    }

    /// Writes `self = N * prod_j P_j^(-E_j)` and returns `(N, [(P_j, E_j)])`
    /// with N free of top-level reciprocals.
    pub fn split_fraction(&self) -> (Expr, Vec<(Arc<Expr>, i32)>) {
        let den = self.recip_powers();
        if den.is_empty() {
            return (self.clone(), Vec::new());
        }
        let mut cache: BTreeMap<(Arc<Expr>, i32), Expr> = BTreeMap::new();
        let mut num = Expr::zero();
        for (m, c) in &self.terms {
            let mut rest = Monomial { exp: m.exp.clone(), pows: Vec::with_capacity(m.pows.len()) };
            let mut factor = Expr::one();
            let mut seen: BTreeMap<&Arc<Expr>, i32> = BTreeMap::new();
            for (a, e) in &m.pows {
                if let Atom::Recip(p) = a {
                    seen.insert(p, *e);
                } else {
                    rest.pows.push((a.clone(), *e));
                }
            }
            for (p, emax) in &den {
                let k = emax - seen.get(p).copied().unwrap_or(0);
                if k > 0 {
                    let pk = cache.entry((p.clone(), k)).or_insert_with(|| p.powu(k as u32)).clone();
                    factor = &factor * &pk;
                }
            }
            num = &num + &factor.mul_monomial(&rest, c);
        }
        (num, den.into_iter().collect())
    }

    /// Numerator after clearing all top-level denominators.
    pub fn numerator(&self) -> Expr {
        self.split_fraction().0
    }

    /// Canonical form: common denominator, exact cancellation of reciprocal
    /// factors, then re-expansion. Idempotent.
    pub fn normalize(&self) -> Expr {
        if !self.has_recip() {
            return self.clone();
        }
        let (mut num, den) = self.split_fraction();
        let mut rmono = Monomial::one();
        for (p, mut e) in den {
            while e > 0 {
                match num.exact_div_monic(&p) {
                    Some(q) => {
                        num = q;
                        e -= 1;
                    }
                    None => break,
                }
            }
            if e > 0 {
                rmono = rmono.mul(&Monomial::atom(Atom::Recip(p), e));
            }
        }
        if rmono.is_one() {
            num
        } else {
            num.mul_monomial(&rmono, &Coeff::one())
        }
    }

    /// Multiplicative inverse.
    pub fn recip(&self) -> Result<Expr> {
        let (num, den) = self.split_fraction();
        if num.is_empty() {
            return Err(ExprError::DivisionByZero);
        }
        let mut out = if num.len() == 1 {
            let (m, c) = num.terms.iter().next().unwrap();
            Expr::term(m.inv(), c.inv().expect("nonzero coefficient"))
        } else {
            let (lm, lc) = num.lead().map(|(m, c)| (m.clone(), c.clone())).unwrap();
            let lm_inv = lm.inv();
            let lc_inv = lc.inv().expect("nonzero coefficient");
            let phat = num.mul_monomial(&lm_inv, &lc_inv);
            let m = lm_inv.mul(&Monomial::atom(Atom::Recip(Arc::new(phat)), 1));
            Expr::term(m, lc_inv)
        };
        for (p, e) in den {
            out = &out * &p.powu(e as u32);
        }
        Ok(out)
    }

    /// Quotient `self / d`, normalized.
    pub fn div(&self, d: &Expr) -> Result<Expr> {
        if d.len() == 1 && !d.has_recip() {
            let (m, c) = d.terms.iter().next().unwrap();
            let inv = c.inv().ok_or(ExprError::DivisionByZero)?;
            return Ok(self.mul_monomial(&m.inv(), &inv).normalize());
        }
        Ok((self * &d.recip()?).normalize())
    }

    /// Exact quotient by an arbitrary nonzero reciprocal-free polynomial, if it divides.
    pub fn exact_div(&self, p: &Expr) -> Option<Expr> {
        let (lm, lc) = p.lead()?;
        let lm_inv = lm.inv();
        let lc_inv = lc.inv()?;
        let phat = p.mul_monomial(&lm_inv, &lc_inv);
        let q = self.exact_div_monic(&phat)?;
        Some(q.mul_monomial(&lm_inv, &lc_inv))
    }

    /// Division by `phat` whose leading term is exactly 1. Succeeds only if
    /// the remainder vanishes. Every quotient monomial must lie in the box
    /// `[min_a - min_p, max_a - max_p]` in each exponent coordinate (Newton
    /// polytopes add under multiplication), which bounds the search.
    pub(crate) fn exact_div_monic(&self, phat: &Expr) -> Option<Expr> {
        if self.is_empty() {
            return Some(Expr::zero());
        }
        let mut atoms: Vec<Atom> = self.atoms().into_iter().collect();
        atoms.extend(phat.atoms());
        atoms.sort();
        atoms.dedup();
        let (alo, ahi) = coord_box(self, &atoms);
        let (plo, phi) = coord_box(phat, &atoms);
        let lo: Vec<BigRational> = alo.iter().zip(&plo).map(|(a, p)| a - p).collect();
        let hi: Vec<BigRational> = ahi.iter().zip(&phi).map(|(a, p)| a - p).collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return None;
        }
        let cap = 4096 + 64 * self.len() * phat.len().max(1);
        let mut q = Expr::zero();
        let mut r = self.clone();
        for _ in 0..cap {
            let (m, c) = match r.lead() {
                None => return Some(q),
                Some((m, c)) => (m.clone(), c.clone()),
            };
            let x = coords(&m, &atoms);
            if x.iter().zip(lo.iter().zip(&hi)).any(|(v, (l, h))| v < l || v > h) {
                return None;
            }
            q.push_raw(m.clone(), c.clone());
            for (pm, pc) in &phat.terms {
                r.push_raw(pm.mul(&m), -(pc * &c));
            }
        }
        None
    }
}

fn coords(m: &Monomial, atoms: &[Atom]) -> Vec<BigRational> {
    let mut out: Vec<BigRational> = m.exp.c.to_vec();
    out.extend(atoms.iter().map(|a| BigRational::from_integer(m.power_of(a).into())));
    out
}

fn coord_box(e: &Expr, atoms: &[Atom]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut it = e.terms.keys().map(|m| coords(m, atoms));
    let first = it.next().expect("nonempty");
    let (mut lo, mut hi) = (first.clone(), first);
    for x in it {
        for k in 0..x.len() {
            if x[k] < lo[k] {
                lo[k] = x[k].clone();
            }
            if x[k] > hi[k] {
                hi[k] = x[k].clone();
            }
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    #[test]
    fn exact_division_cancels() {
        let a = parse("u1^2 - 1").unwrap();
        let b = parse("u1 - 1").unwrap();
        assert_eq!(a.div(&b).unwrap(), parse("u1 + 1").unwrap());
    }

    #[test]
    fn reciprocal_roundtrip() {
        let a = parse("cosh(u1)").unwrap();
        let r = a.recip().unwrap();
        let prod = (&a * &r).normalize();
        assert_eq!(prod, parse("1").unwrap());
        assert!(r.has_recip());
    }

    #[test]
    fn normalize_is_idempotent_with_denominators() {
        let e = parse("cosh(u1)^(-2)*u2 + sinh(u1)/cosh(u1)").unwrap();
        let n = e.normalize();
        assert_eq!(n.normalize(), n);
    }

    #[test]
    fn sech_squared_plus_tanh_squared() {
        let e = parse("cosh(u1)^(-2) + sinh(u1)^2*cosh(u1)^(-2) - 1").unwrap();
        assert!(e.is_zero().unwrap());
    }
}
