//! Symbolic expressions.
//!
//! An [`Expr`] is always stored fully expanded: a map from Laurent monomials
//! (an exponential factor `exp(l(u1,u2))` times integer powers of atoms) to
//! exact Gaussian-rational coefficients. Trigonometric and hyperbolic
//! functions are rewritten into exponentials at construction time, so the
//! zero test reduces to comparing coefficients. Division by a polynomial that
//! is not a monomial introduces a [`Atom::Recip`] atom holding the canonical
//! divisor; [`Expr::normalize`] cancels such divisors where possible.

pub mod atom;
pub mod coeff;
mod collect;
mod diff;
pub mod eval;
mod integrate;
pub mod latex;
pub mod parse;
mod print;
mod rational;
mod subst;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;

pub use atom::{Atom, Deps, FnAtom, LinForm, Monomial, Var, WpAtom};
pub use coeff::Coeff;
pub use collect::Splitter;
pub use parse::{parse, parse_with, ParseContext};
pub use subst::{Bindings, Pattern};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at offset {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("unsupported expression: {0}")]
    Unsupported(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("inconsistent bindings: {0}")]
    InconsistentBinding(String),
    #[error("non-polynomial dependence on parameter `{0}`")]
    NonPolynomial(String),
    #[error("not integrable in closed form: {0}")]
    NotIntegrable(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, ExprError>;

static GUARD_SEED: AtomicU64 = AtomicU64::new(0x5eed_2d5c);

/// Seed used by the numeric sampling guard inside [`Expr::is_zero`].
pub fn set_guard_seed(seed: u64) {
    GUARD_SEED.store(seed, AtomicOrdering::Relaxed);
}

pub fn guard_seed() -> u64 {
    GUARD_SEED.load(AtomicOrdering::Relaxed)
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Expr {
    terms: BTreeMap<Monomial, Coeff>,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::default()
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn int(n: i64) -> Expr {
        Expr::from_coeff(Coeff::int(n))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::from_coeff(Coeff::ratio(n, d))
    }

    pub fn i() -> Expr {
        Expr::from_coeff(Coeff::i())
    }

    pub fn from_coeff(c: Coeff) -> Expr {
        Expr::term(Monomial::one(), c)
    }

    pub fn term(m: Monomial, c: Coeff) -> Expr {
        let mut e = Expr::zero();
        e.push(m, c);
        e
    }

    pub fn atom(a: Atom) -> Expr {
        Expr::term(Monomial::atom(a, 1), Coeff::one())
    }

    pub fn var(v: Var) -> Expr {
        Expr::atom(Atom::Var(v))
    }

    pub fn constant(name: &str) -> Expr {
        Expr::atom(Atom::constant(name))
    }

    pub fn func(name: &str, deps: Deps) -> Expr {
        Expr::atom(Atom::Fn(FnAtom::new(name, deps)))
    }

    pub fn fn_deriv(name: &str, deps: Deps, d: [u32; 2]) -> Expr {
        Expr::atom(Atom::Fn(FnAtom { name: Arc::from(name), deps, d }))
    }

    pub fn exp_lin(l: LinForm) -> Expr {
        Expr::term(Monomial::exp_only(l), Coeff::one())
    }

    pub fn wp(var: Var, shift: Option<&str>, g2: &str, g3: &str, deriv: u8) -> Expr {
        Expr::atom(Atom::Wp(WpAtom { var, shift: shift.map(Arc::from), g2: Arc::from(g2), g3: Arc::from(g3), deriv }))
    }

    /// `exp(arg)` for `arg` linear in u1, u2 with no constant term.
    pub fn exp(arg: &Expr) -> Result<Expr> {
        let mut l = LinForm::zero();
        for (m, c) in &arg.terms {
            match (m.exp.is_zero(), m.pows.as_slice()) {
                (true, [(Atom::Var(v), 1)]) => l = l.add(&LinForm::of(*v, c)),
                _ => {
                    return Err(ExprError::Unsupported(format!(
                        "exponential argument must be linear in u1, u2 without constant term: {arg}"
                    )))
                }
            }
        }
        Ok(Expr::exp_lin(l))
    }

    pub fn sin(arg: &Expr) -> Result<Expr> {
        let ia = arg * &Expr::i();
        let d = &Expr::exp(&ia)? - &Expr::exp(&-&ia)?;
        Ok(d.scale(&(&Coeff::i() * &Coeff::ratio(-1, 2))))
    }

    pub fn cos(arg: &Expr) -> Result<Expr> {
        let ia = arg * &Expr::i();
        let s = &Expr::exp(&ia)? + &Expr::exp(&-&ia)?;
        Ok(s.scale(&Coeff::ratio(1, 2)))
    }

    pub fn sinh(arg: &Expr) -> Result<Expr> {
        let d = &Expr::exp(arg)? - &Expr::exp(&-arg)?;
        Ok(d.scale(&Coeff::ratio(1, 2)))
    }

    pub fn cosh(arg: &Expr) -> Result<Expr> {
        let s = &Expr::exp(arg)? + &Expr::exp(&-arg)?;
        Ok(s.scale(&Coeff::ratio(1, 2)))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> BTreeMap<Monomial, Coeff> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Structural emptiness (no terms). Use [`Expr::is_zero`] for the guarded test.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Constant numeric value, if the expression has no atoms.
    pub fn as_coeff(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn lead(&self) -> Option<(&Monomial, &Coeff)> {
        self.terms.iter().next_back()
    }

    pub fn trail(&self) -> Option<(&Monomial, &Coeff)> {
        self.terms.iter().next()
    }

    /// Add a term in place; applies monomial rewrite rules.
    pub fn push(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        if needs_fixup(&m) {
            let fixed = fixup(&m, &c);
            for (m2, c2) in fixed.terms {
                self.push_raw(m2, c2);
            }
        } else {
            self.push_raw(m, c);
        }
    }

    fn push_raw(&mut self, m: Monomial, c: Coeff) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn scale(&self, k: &Coeff) -> Expr {
        if k.is_zero() {
            return Expr::zero();
        }
        Expr { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul_monomial(&self, m: &Monomial, k: &Coeff) -> Expr {
        let mut out = Expr::zero();
        for (m1, c1) in &self.terms {
            out.push(m1.mul(m), c1 * k);
        }
        out
    }

    pub fn powu(&self, n: u32) -> Expr {
        let mut acc = Expr::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn powi(&self, n: i32) -> Result<Expr> {
        if n >= 0 {
            Ok(self.powu(n as u32))
        } else {
            Ok(self.recip()?.powu(n.unsigned_abs()))
        }
    }

    /// Top-level atoms (not descending into reciprocals).
    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut s = BTreeSet::new();
        for m in self.terms.keys() {
            for (a, _) in &m.pows {
                s.insert(a.clone());
            }
        }
        s
    }

    /// All atoms including those inside reciprocal atoms.
    pub fn atoms_deep(&self) -> BTreeSet<Atom> {
        let mut s = BTreeSet::new();
        self.collect_atoms_deep(&mut s);
        s
    }

    fn collect_atoms_deep(&self, s: &mut BTreeSet<Atom>) {
        for m in self.terms.keys() {
            for (a, _) in &m.pows {
                if let Atom::Recip(p) = a {
                    p.collect_atoms_deep(s);
                }
                s.insert(a.clone());
            }
        }
    }

    pub fn fn_atoms(&self) -> BTreeSet<FnAtom> {
        self.atoms_deep().into_iter().filter_map(|a| if let Atom::Fn(f) = a { Some(f) } else { None }).collect()
    }

    pub fn const_names(&self) -> BTreeSet<String> {
        self.atoms_deep().into_iter().filter_map(|a| if let Atom::Const(n) = a { Some(n.to_string()) } else { None }).collect()
    }

    pub fn has_fn(&self, name: &str) -> bool {
        self.fn_atoms().iter().any(|f| &*f.name == name)
    }

    /// Highest derivative order of the named one-variable unknown present.
    pub fn max_order(&self, name: &str) -> Option<u32> {
        self.fn_atoms().iter().filter(|f| &*f.name == name).map(|f| f.single_order()).max()
    }

    pub fn min_order(&self, name: &str) -> Option<u32> {
        self.fn_atoms().iter().filter(|f| &*f.name == name).map(|f| f.single_order()).min()
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.depends_on(v))
    }

    pub fn has_recip(&self) -> bool {
        self.terms.keys().any(|m| m.pows.iter().any(|(a, _)| matches!(a, Atom::Recip(_))))
    }

    pub fn has_exp(&self) -> bool {
        self.terms.keys().any(|m| !m.exp.is_zero())
    }

    /// Maximum total degree over terms in atoms matching `pred`.
    pub fn degree_in(&self, pred: impl Fn(&Atom) -> bool) -> i32 {
        self.terms.keys().map(|m| m.pows.iter().filter(|(a, _)| pred(a)).map(|(_, e)| *e).sum::<i32>()).max().unwrap_or(0)
    }

    /// Guarded zero test: exact comparison after clearing denominators,
    /// double-checked by numeric sampling at random points.
    pub fn is_zero(&self) -> Result<bool> {
        let symbolic = self.numerator().is_empty();
        if symbolic {
            eval::guard_zero(self, guard_seed())?;
        }
        Ok(symbolic)
    }

    /// Canonical text (byte-stable).
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

fn needs_fixup(m: &Monomial) -> bool {
    m.pows.iter().any(|(a, e)| match a {
        Atom::Wp(w) => w.deriv == 1 && *e >= 2,
        Atom::Recip(_) => *e < 0,
        _ => false,
    })
}

/// Applies `wp'^2 = 4 wp^3 - g2 wp - g3` and `Recip(P)^(-k) = P^k`.
fn fixup(m: &Monomial, c: &Coeff) -> Expr {
    let mut rest = Monomial { exp: m.exp.clone(), pows: Vec::new() };
    let mut extra = Vec::new();
    for (a, e) in &m.pows {
        match a {
            Atom::Wp(w) if w.deriv == 1 && *e >= 2 => {
                if e % 2 == 1 {
                    rest.pows.push((a.clone(), 1));
                }
                let p = Expr::atom(Atom::Wp(w.with_deriv(0)));
                let g2 = Expr::constant(&w.g2);
                let g3 = Expr::constant(&w.g3);
                let cubic = &(&(&p.powu(3) * &Expr::int(4)) - &(&g2 * &p)) - &g3;
                extra.push(cubic.powu((*e / 2) as u32));
            }
            Atom::Recip(p) if *e < 0 => extra.push(p.powu(e.unsigned_abs())),
            _ => rest.pows.push((a.clone(), *e)),
        }
    }
    let mut out = Expr::term(rest, c.clone());
    for x in extra {
        out = &out * &x;
    }
    out
}

impl<'a> Add<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn add(self, o: &Expr) -> Expr {
        let (big, small) = if self.terms.len() >= o.terms.len() { (self, o) } else { (o, self) };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.push_raw(m.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn sub(self, o: &Expr) -> Expr {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.push_raw(m.clone(), -c);
        }
        out
    }
}

impl<'a> Mul<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn mul(self, o: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                out.push(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

macro_rules! owned_ops {
    ($tr:ident, $f:ident) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $f(self, o: Expr) -> Expr {
                (&self).$f(&o)
            }
        }
        impl<'a> $tr<&'a Expr> for Expr {
            type Output = Expr;
            fn $f(self, o: &Expr) -> Expr {
                (&self).$f(o)
            }
        }
        impl<'a> $tr<Expr> for &'a Expr {
            type Output = Expr;
            fn $f(self, o: Expr) -> Expr {
                self.$f(&o)
            }
        }
    };
}

owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        let mut acc = Expr::zero();
        for e in iter {
            acc = &acc + &e;
        }
        acc
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Expr, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

impl serde::Serialize for Coeff {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Coeff {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Coeff, D::Error> {
        let s = String::deserialize(d)?;
        let e = parse(&s).map_err(serde::de::Error::custom)?;
        e.as_coeff().ok_or_else(|| serde::de::Error::custom(format!("`{s}` is not a constant")))
    }
}
