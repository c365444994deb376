//! LaTeX rendering of expressions.
//!
//! Exponentials with conjugate imaginary arguments are folded back into
//! `\sin`/`\cos`, and pairs `exp(+x)`, `exp(-x)` into `\sinh`/`\cosh`.
//! One-variable unknowns use primes, two-variable unknowns subscripts.

use std::collections::BTreeMap;
use std::fmt::Write;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Atom, Coeff, Deps, Expr, LinForm, Monomial, Var};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Fold {
    Cos,
    Sin,
    Cosh,
    Sinh,
}

/// Folded function applied to a real linear form.
type FoldFactor = (Fold, [BigRational; 2]);

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    rest: Monomial,
    re: [BigRational; 2],
    im: [BigRational; 2],
    folds: Vec<FoldFactor>,
}

/// LaTeX for an expression.
pub fn expr_latex(e: &Expr) -> String {
    if e.is_empty() {
        return "0".into();
    }
    let mut terms: BTreeMap<Key, Coeff> = BTreeMap::new();
    for (m, c) in e.terms() {
        let re = [m.exp.c[0].clone(), m.exp.c[1].clone()];
        let im = [m.exp.c[2].clone(), m.exp.c[3].clone()];
        let rest = Monomial { exp: LinForm::zero(), pows: m.pows.clone() };
        add(&mut terms, Key { rest, re, im, folds: Vec::new() }, c.clone());
    }
    let terms = fold_pairs(terms, true);
    let terms = fold_pairs(terms, false);
    let mut out = String::new();
    for (k, c) in terms.iter().rev() {
        write_term(&mut out, k, c);
    }
    if let Some(rest) = out.strip_prefix(" + ") {
        rest.to_string()
    } else if let Some(rest) = out.strip_prefix(" - ") {
        format!("-{rest}")
    } else {
        out
    }
}

fn add(map: &mut BTreeMap<Key, Coeff>, k: Key, c: Coeff) {
    let slot = map.entry(k).or_insert_with(Coeff::zero);
    *slot = &*slot + &c;
}

/// Folds `c+ e^{x} + c- e^{-x}` into cos/sin (imaginary `x`) or cosh/sinh.
fn fold_pairs(terms: BTreeMap<Key, Coeff>, imaginary: bool) -> BTreeMap<Key, Coeff> {
    let mut pending = terms;
    pending.retain(|_, c| !c.is_zero());
    let mut out = BTreeMap::new();
    while let Some((k, c)) = pending.pop_first() {
        let arg = if imaginary { &k.im } else { &k.re };
        if arg.iter().all(|x| x.is_zero()) {
            add(&mut out, k, c);
            continue;
        }
        let mut partner = k.clone();
        let neg = [-arg[0].clone(), -arg[1].clone()];
        if imaginary {
            partner.im = neg;
        } else {
            partner.re = neg;
        }
        let Some(cm) = pending.remove(&partner) else {
            add(&mut out, k, c);
            continue;
        };
        // Orient the argument so its first nonzero component is positive.
        let (plus_arg, cp, cm) = if arg.iter().find(|x| !x.is_zero()).map(|x| x.is_positive()).unwrap_or(true) {
            (arg.clone(), c, cm)
        } else {
            (partner_arg(&partner, imaginary), cm, c)
        };
        let mut base = k.clone();
        if imaginary {
            base.im = [BigRational::zero(), BigRational::zero()];
        } else {
            base.re = [BigRational::zero(), BigRational::zero()];
        }
        let (even, odd, ce, co) = if imaginary {
            (Fold::Cos, Fold::Sin, &cp + &cm, &Coeff::i() * &(&cp - &cm))
        } else {
            (Fold::Cosh, Fold::Sinh, &cp + &cm, &cp - &cm)
        };
        for (f, cf) in [(even, ce), (odd, co)] {
            if cf.is_zero() {
                continue;
            }
            let mut kk = base.clone();
            kk.folds.push((f, plus_arg.clone()));
            kk.folds.sort();
            add(&mut out, kk, cf);
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn partner_arg(k: &Key, imaginary: bool) -> [BigRational; 2] {
    if imaginary {
        k.im.clone()
    } else {
        k.re.clone()
    }
}

fn write_term(out: &mut String, k: &Key, c: &Coeff) {
    let mut factors = Vec::new();
    if k.re.iter().any(|x| !x.is_zero()) || k.im.iter().any(|x| !x.is_zero()) {
        factors.push(format!("e^{{{}}}", exp_arg(&k.re, &k.im)));
    }
    for (f, arg) in &k.folds {
        let name = match f {
            Fold::Cos => "\\cos",
            Fold::Sin => "\\sin",
            Fold::Cosh => "\\cosh",
            Fold::Sinh => "\\sinh",
        };
        factors.push(format!("{name}({})", lin_latex(arg)));
    }
    let mut denominators = Vec::new();
    for (a, e) in &k.rest.pows {
        if let Atom::Recip(p) = a {
            let inner = expr_latex(p);
            denominators.push(if *e == 1 { format!("({inner})") } else { format!("({inner})^{{{e}}}") });
            continue;
        }
        let base = atom_latex(a);
        if *e == 1 {
            factors.push(base);
        } else if base.ends_with('}') || base.contains('\'') || base.contains('(') {
            factors.push(format!("\\left({base}\\right)^{{{e}}}"));
        } else {
            factors.push(format!("{base}^{{{e}}}"));
        }
    }
    let neg = c.is_negative();
    let mag = if neg { -c } else { c.clone() };
    out.push_str(if neg { " - " } else { " + " });
    let body = factors.join(" ");
    let coeff = coeff_latex(&mag);
    if factors.is_empty() && denominators.is_empty() {
        out.push_str(&coeff);
        return;
    }
    let num = if mag.is_one() {
        body
    } else if body.is_empty() {
        coeff
    } else {
        format!("{coeff} {body}")
    };
    if denominators.is_empty() {
        out.push_str(&num);
    } else {
        let num = if num.is_empty() { "1".to_string() } else { num };
        let _ = write!(out, "\\frac{{{num}}}{{{}}}", denominators.join(""));
    }
}

fn exp_arg(re: &[BigRational; 2], im: &[BigRational; 2]) -> String {
    let mut s = lin_latex(re);
    let i = lin_latex(im);
    if i != "0" {
        if s == "0" {
            s = format!("i({i})");
        } else {
            let _ = write!(s, "+i({i})");
        }
    }
    s
}

fn lin_latex(c: &[BigRational; 2]) -> String {
    let mut s = String::new();
    for v in Var::ALL {
        let k = &c[v.index()];
        if k.is_zero() {
            continue;
        }
        if k.is_negative() {
            s.push('-');
        } else if !s.is_empty() {
            s.push('+');
        }
        let a = k.abs();
        if !a.is_one() {
            s.push_str(&rat_latex(&a));
        }
        s.push_str(var_latex(v));
    }
    if s.is_empty() {
        "0".into()
    } else {
        s
    }
}

fn var_latex(v: Var) -> &'static str {
    match v {
        Var::U1 => "u_1",
        Var::U2 => "u_2",
    }
}

fn rat_latex(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        let sign = if r.is_negative() { "-" } else { "" };
        format!("{sign}\\frac{{{}}}{{{}}}", r.numer().abs(), r.denom())
    }
}

fn coeff_latex(c: &Coeff) -> String {
    if c.im.is_zero() {
        return rat_latex(&c.re);
    }
    if c.re.is_zero() {
        let m = c.im.abs();
        let sign = if c.im.is_negative() { "-" } else { "" };
        return if m.is_one() { format!("{sign}i") } else { format!("{sign}{} i", rat_latex(&m)) };
    }
    let sign = if c.im.is_negative() { "-" } else { "+" };
    format!("\\left({}{sign}{} i\\right)", rat_latex(&c.re), rat_latex(&c.im.abs()))
}

/// LaTeX name of a constant or unknown.
pub fn name_latex(name: &str) -> String {
    match name {
        "hbar" => return "\\hbar".into(),
        "u20" => return "u_{2,0}".into(),
        "F0" => return "F^0".into(),
        "G0" => return "G^0".into(),
        "GH" => return "G^H".into(),
        "GL" => return "G^L".into(),
        "H" => return "H".into(),
        "L" => return "L_2".into(),
        _ => {}
    }
    let split = name.find(|ch: char| ch.is_ascii_digit());
    match split {
        Some(i) if i > 0 => {
            let (head, digits) = name.split_at(i);
            let head = if head == "beta" { "\\beta" } else { head };
            if digits.len() == 1 {
                format!("{head}_{digits}")
            } else {
                format!("{head}_{{{digits}}}")
            }
        }
        _ => name.to_string(),
    }
}

fn atom_latex(a: &Atom) -> String {
    match a {
        Atom::Var(v) => var_latex(*v).into(),
        Atom::Const(n) => name_latex(n),
        Atom::Fn(f) => {
            let base = name_latex(&f.name);
            if f.d == [0, 0] {
                return base;
            }
            match f.deps {
                Deps::Both => {
                    let mut sub = String::new();
                    for v in Var::ALL {
                        for _ in 0..f.d[v.index()] {
                            sub.push(if v == Var::U1 { '1' } else { '2' });
                        }
                    }
                    if base.contains('_') {
                        format!("\\partial^{{{sub}}}{base}")
                    } else {
                        format!("{base}_{{{sub}}}")
                    }
                }
                _ => {
                    let n = f.order();
                    if n <= 3 {
                        format!("{base}{}", "'".repeat(n as usize))
                    } else {
                        format!("{base}^{{({n})}}")
                    }
                }
            }
        }
        Atom::Wp(w) => {
            let mut arg = var_latex(w.var).to_string();
            if let Some(s) = &w.shift {
                let _ = write!(arg, "-{}", name_latex(s));
            }
            let prime = if w.deriv == 1 { "'" } else { "" };
            if &*w.g2 != "g2" || &*w.g3 != "g3" {
                format!("\\wp{prime}({arg};{},{})", name_latex(&w.g2), name_latex(&w.g3))
            } else {
                format!("\\wp{prime}({arg})")
            }
        }
        Atom::Recip(p) => format!("\\frac{{1}}{{{}}}", expr_latex(p)),
    }
}
