use super::{Atom, Coeff, Expr, ExprError, Result, Var};

impl Expr {
    /// Antiderivative in `v` for terms `c * v^n * exp(l*v) * (factors free of v)`.
    pub fn integrate_var(&self, v: Var) -> Result<Expr> {
        let x = Atom::Var(v);
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            if m.pows.iter().any(|(a, _)| *a != x && a.depends_on(v)) {
                return Err(ExprError::NotIntegrable(format!(
                    "term depends on {v} through an opaque atom: {}",
                    Expr::term(m.clone(), c.clone())
                )));
            }
            let n = m.power_of(&x);
            let lam = m.exp.coeff(v);
            let base = m.with_power(&x, 0);
            if lam.is_zero() {
                if n == -1 {
                    return Err(ExprError::NotIntegrable(format!("logarithmic antiderivative in {v}")));
                }
                let k = c.div(&Coeff::int(n as i64 + 1)).unwrap();
                out.push(base.with_power(&x, n + 1), k);
            } else {
                if n < 0 {
                    return Err(ExprError::NotIntegrable(format!("exponential integral in {v}")));
                }
                // x^n e^{lx}: sum_k (-1)^k n!/(n-k)! x^(n-k) / l^(k+1)
                let mut falling = Coeff::one();
                for k in 0..=n {
                    let sign = if k % 2 == 0 { Coeff::one() } else { Coeff::int(-1) };
                    let lk = lam.powi(k + 1).unwrap();
                    let coef = (&(c * &sign) * &falling).div(&lk).unwrap();
                    out.push(base.with_power(&x, n - k), coef);
                    falling = &falling * &Coeff::int((n - k) as i64);
                }
            }
        }
        Ok(out.normalize())
    }

    /// Finds P with dP/dv = self, treating unknowns of v as opaque; fails if
    /// self is not a total derivative in the supported class.
    pub fn integrate_total(&self, v: Var) -> Result<Expr> {
        let vi = v.index();
        let mut rem = self.clone();
        let mut p = Expr::zero();
        for _ in 0..256 {
            if rem.is_empty() {
                break;
            }
            let top = rem.fn_atoms().into_iter().filter(|f| f.deps.contains(v)).max_by(|a, b| (a.d[vi], a).cmp(&(b.d[vi], b)));
            let Some(f) = top else {
                p = &p + &rem.integrate_var(v)?;
                rem = Expr::zero();
                break;
            };
            if f.d[vi] == 0 {
                return Err(ExprError::NotIntegrable(format!("undifferentiated {} remains", f.name)));
            }
            let atom = Atom::Fn(f.clone());
            let poly = rem.as_poly_in(&atom);
            if poly.keys().any(|k| *k != 0 && *k != 1) {
                return Err(ExprError::NotIntegrable(format!("nonlinear in the highest derivative of {}", f.name)));
            }
            let a = poly.get(&1).cloned().unwrap_or_default();
            let mut lower_d = f.d;
            lower_d[vi] -= 1;
            let lower = Atom::Fn(f.with_d(lower_d));
            let mut q = Expr::zero();
            for (k, ck) in a.as_poly_in(&lower) {
                if k == -1 {
                    return Err(ExprError::NotIntegrable(format!("logarithm of a derivative of {}", f.name)));
                }
                let piece = &ck * &Expr::atom(lower.clone()).powi(k + 1)?;
                q = &q + &piece.scale(&Coeff::ratio(1, k as i64 + 1));
            }
            p = &p + &q;
            rem = (&rem - &q.diff(v)).normalize();
        }
        if !rem.is_empty() || !(&p.diff(v) - self).is_zero()? {
            return Err(ExprError::NotIntegrable("total-derivative search did not terminate".into()));
        }
        Ok(p.normalize())
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Var};

    #[test]
    fn polynomial_times_exponential() {
        let e = parse("u1^2*exp(-u1)*D[U2,u2,1]").unwrap();
        let p = e.integrate_var(Var::U1).unwrap();
        assert_eq!(p.diff(Var::U1), e);
    }

    #[test]
    fn total_derivative_with_unknowns() {
        let e = parse("(2*a10 - 2*a9*u2)*D[W,u2,2] - 4*a9*D[W,u2,1] + 4*c1 + 4*D[U2,u2,2]").unwrap();
        let p = e.integrate_total(Var::U2).unwrap();
        assert_eq!(p.diff(Var::U2), e);
        assert!(parse("W*D[W,u2,2]").unwrap().integrate_total(Var::U2).is_err());
    }
}
