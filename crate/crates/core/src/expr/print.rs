use std::fmt::{self, Write};

use super::{Atom, Coeff, Expr, LinForm, Monomial, Var};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let c = if neg { -c } else { c.clone() };
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            write_term(f, m, &c)?;
        }
        Ok(())
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, m: &Monomial, c: &Coeff) -> fmt::Result {
    let factors = monomial_factors(m);
    if factors.is_empty() {
        return write!(f, "{c}");
    }
    if !c.is_one() {
        write!(f, "{c}*")?;
    }
    f.write_str(&factors.join("*"))
}

pub(crate) fn monomial_factors(m: &Monomial) -> Vec<String> {
    let mut out = Vec::new();
    if !m.exp.is_zero() {
        out.push(format!("exp({})", linform_text(&m.exp)));
    }
    for (a, e) in &m.pows {
        let base = atom_text(a);
        let shown = if let Atom::Recip(_) = a { -e } else { *e };
        if shown == 1 {
            out.push(base);
        } else if shown > 0 {
            out.push(format!("{base}^{shown}"));
        } else {
            out.push(format!("{base}^({shown})"));
        }
    }
    out
}

pub(crate) fn linform_text(l: &LinForm) -> String {
    let mut s = String::new();
    for v in Var::ALL {
        let k = l.coeff(v);
        if k.is_zero() {
            continue;
        }
        let neg = k.is_negative();
        let k = if neg { -k } else { k };
        if s.is_empty() {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        if !k.is_one() {
            let _ = write!(s, "{k}*");
        }
        s.push_str(v.name());
    }
    s
}

pub(crate) fn atom_text(a: &Atom) -> String {
    match a {
        Atom::Var(v) => v.name().to_string(),
        Atom::Const(n) => n.to_string(),
        Atom::Fn(fa) => {
            if fa.d == [0, 0] {
                return fa.name.to_string();
            }
            let mut s = format!("D[{}", fa.name);
            for v in Var::ALL {
                let n = fa.d[v.index()];
                if n > 0 {
                    let _ = write!(s, ",{},{}", v.name(), n);
                }
            }
            s.push(']');
            s
        }
        Atom::Wp(w) => {
            let mut s = String::from(if w.deriv == 1 { "wpd(" } else { "wp(" });
            s.push_str(w.var.name());
            if let Some(sh) = &w.shift {
                let _ = write!(s, "-{sh}");
            }
            if &*w.g2 != "g2" || &*w.g3 != "g3" {
                let _ = write!(s, "; {}, {}", w.g2, w.g3);
            }
            s.push(')');
            s
        }
        Atom::Recip(p) => format!("({p})"),
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    #[test]
    fn text_roundtrip() {
        for s in [
            "4*hbar^2*exp(-u1)*sin(u2)",
            "cosh(u1)^(-2)*D[v2,u2,1] - 3/4*u1^(-2)",
            "a4*D[v2,u2,1] + 2*D[U2,u2,2]",
            "wpd(u2-u20)*wp(u2) + I*u1",
            "exp(u1 + 2*I*u2)*(1 + u2)^(-1)",
        ] {
            let e = parse(s).unwrap();
            let t = e.to_string();
            let back = parse(&t).unwrap();
            assert_eq!(back, e, "{s} -> {t}");
            assert_eq!(back.to_string(), t);
        }
    }
}
