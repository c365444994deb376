use std::collections::BTreeMap;

use super::{Atom, Coeff, Expr, ExprError, Monomial, Result};

/// Selects the "structural" part of each monomial for [`Expr::split_by`].
pub struct Splitter<'a> {
    /// Which variables' exponential components count as structural.
    pub exp_vars: [bool; 2],
    pub atom: &'a dyn Fn(&Atom) -> bool,
}

impl Expr {
    /// Coefficients of the formal parameters, keyed by their exponent vector.
    pub fn collect_params(&self, params: &[&str]) -> Result<BTreeMap<Vec<u32>, Expr>> {
        let mut out: BTreeMap<Vec<u32>, Expr> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut key = vec![0u32; params.len()];
            let mut rest = Monomial { exp: m.exp.clone(), pows: Vec::new() };
            for (a, e) in &m.pows {
                let pos = a.const_name().and_then(|n| params.iter().position(|p| *p == n));
                match pos {
                    Some(i) => {
                        if *e < 0 {
                            return Err(ExprError::NonPolynomial(params[i].to_string()));
                        }
                        key[i] = *e as u32;
                    }
                    None => {
                        if let Atom::Recip(p) = a {
                            let inner = p.const_names();
                            if let Some(bad) = params.iter().find(|q| inner.contains(**q)) {
                                return Err(ExprError::NonPolynomial(bad.to_string()));
                            }
                        }
                        rest.pows.push((a.clone(), *e));
                    }
                }
            }
            out.entry(key).or_default().push(rest, c.clone());
        }
        out.retain(|_, e| !e.is_empty());
        for e in out.values_mut() {
            *e = e.normalize();
        }
        Ok(out)
    }

    /// Coefficients of `H^j L^k`.
    pub fn collect_hl(&self) -> Result<BTreeMap<(u32, u32), Expr>> {
        Ok(self.collect_params(&["H", "L"])?.into_iter().map(|(k, v)| ((k[0], k[1]), v)).collect())
    }

    /// Groups terms by their structural part; returns structural monomial -> coefficient.
    pub fn split_by(&self, s: &Splitter<'_>) -> BTreeMap<Monomial, Expr> {
        let mut out: BTreeMap<Monomial, Expr> = BTreeMap::new();
        for (m, c) in &self.terms {
            let key_exp = m.exp.restrict(s.exp_vars);
            let rest_exp = m.exp.sub(&key_exp);
            let mut key = Monomial { exp: key_exp, pows: Vec::new() };
            let mut rest = Monomial { exp: rest_exp, pows: Vec::new() };
            for (a, e) in &m.pows {
                if (s.atom)(a) {
                    key.pows.push((a.clone(), *e));
                } else {
                    rest.pows.push((a.clone(), *e));
                }
            }
            out.entry(key).or_default().push(rest, c.clone());
        }
        out.retain(|_, e| !e.is_empty());
        out
    }

    /// Coefficients as a Laurent polynomial in one atom.
    pub fn as_poly_in(&self, atom: &Atom) -> BTreeMap<i32, Expr> {
        let mut out: BTreeMap<i32, Expr> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.power_of(atom);
            let rest = m.with_power(atom, 0);
            out.entry(e).or_default().push(rest, c.clone());
        }
        out.retain(|_, e| !e.is_empty());
        out
    }

    /// Coefficient of `atom^k`.
    pub fn coeff_of(&self, atom: &Atom, k: i32) -> Expr {
        self.as_poly_in(atom).remove(&k).unwrap_or_default()
    }

    /// Divides by the rational content and fixes the sign so the leading
    /// coefficient is positive (real part first).
    pub fn primitive(&self) -> Expr {
        let mut g: Option<num_rational::BigRational> = None;
        for c in self.terms.values() {
            let k = c.content();
            g = Some(match g {
                None => k,
                Some(h) => super::coeff::rat_gcd(&h, &k),
            });
        }
        let Some(g) = g else { return Expr::zero() };
        let mut k = Coeff::real(num_traits::One::one()).div(&Coeff::real(g)).unwrap();
        if self.lead().map(|(_, c)| c.is_negative()).unwrap_or(false) {
            k = -k;
        }
        self.scale(&k)
    }
}
