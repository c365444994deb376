use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::coeff::Coeff;
use super::Expr;

/// Independent variable.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Var {
    #[serde(rename = "u1")]
    U1,
    #[serde(rename = "u2")]
    U2,
}

impl Var {
    pub fn index(self) -> usize {
        match self {
            Var::U1 => 0,
            Var::U2 => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::U1 => "u1",
            Var::U2 => "u2",
        }
    }

    pub fn other(self) -> Var {
        match self {
            Var::U1 => Var::U2,
            Var::U2 => Var::U1,
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        match s {
            "u1" => Some(Var::U1),
            "u2" => Some(Var::U2),
            _ => None,
        }
    }

    pub const ALL: [Var; 2] = [Var::U1, Var::U2];
}

/// Variables an unknown function depends on.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Deps {
    U1,
    U2,
    Both,
}

impl Deps {
    pub fn contains(self, v: Var) -> bool {
        matches!((self, v), (Deps::Both, _) | (Deps::U1, Var::U1) | (Deps::U2, Var::U2))
    }

    pub fn single(v: Var) -> Deps {
        match v {
            Var::U1 => Deps::U1,
            Var::U2 => Deps::U2,
        }
    }
}

/// Unknown function with a derivative multi-index `[d/du1 order, d/du2 order]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FnAtom {
    pub name: Arc<str>,
    pub deps: Deps,
    pub d: [u32; 2],
}

impl FnAtom {
    pub fn new(name: &str, deps: Deps) -> Self {
        FnAtom { name: Arc::from(name), deps, d: [0, 0] }
    }

    pub fn with_d(&self, d: [u32; 2]) -> Self {
        FnAtom { name: self.name.clone(), deps: self.deps, d }
    }

    pub fn order(&self) -> u32 {
        self.d[0] + self.d[1]
    }

    /// Single-variable derivative order (for one-variable unknowns).
    pub fn single_order(&self) -> u32 {
        match self.deps {
            Deps::U1 => self.d[0],
            Deps::U2 => self.d[1],
            Deps::Both => self.d[0] + self.d[1],
        }
    }
}

/// Weierstrass function atom `wp(var - shift; g2, g3)` or its first derivative.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct WpAtom {
    pub var: Var,
    pub shift: Option<Arc<str>>,
    pub g2: Arc<str>,
    pub g3: Arc<str>,
    pub deriv: u8,
}

impl WpAtom {
    pub fn with_deriv(&self, deriv: u8) -> Self {
        WpAtom { deriv, ..self.clone() }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Atom {
    Var(Var),
    Const(Arc<str>),
    Fn(FnAtom),
    Wp(WpAtom),
    /// `1/P` for a canonical polynomial P (leading term exactly 1, no nested reciprocals).
    Recip(Arc<Expr>),
}

impl Atom {
    pub fn constant(name: &str) -> Atom {
        Atom::Const(Arc::from(name))
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Atom::Var(w) => *w == v,
            Atom::Const(_) => false,
            Atom::Fn(f) => f.deps.contains(v),
            Atom::Wp(w) => w.var == v,
            Atom::Recip(p) => p.depends_on(v),
        }
    }

    pub fn as_fn(&self) -> Option<&FnAtom> {
        match self {
            Atom::Fn(f) => Some(f),
            _ => None,
        }
    }

    pub fn const_name(&self) -> Option<&str> {
        match self {
            Atom::Const(n) => Some(n),
            _ => None,
        }
    }
}

/// Exponent `sum_k (re_k + i*im_k) * u_k` of an exponential factor.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct LinForm {
    /// Ordered as (re u1, re u2, im u1, im u2).
    pub c: [BigRational; 4],
}

impl Default for LinForm {
    fn default() -> Self {
        LinForm::zero()
    }
}

impl LinForm {
    pub fn zero() -> Self {
        LinForm { c: std::array::from_fn(|_| BigRational::zero()) }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    pub fn of(v: Var, k: &Coeff) -> Self {
        let mut l = LinForm::zero();
        l.c[v.index()] = k.re.clone();
        l.c[2 + v.index()] = k.im.clone();
        l
    }

    pub fn coeff(&self, v: Var) -> Coeff {
        Coeff::new(self.c[v.index()].clone(), self.c[2 + v.index()].clone())
    }

    pub fn add(&self, o: &LinForm) -> LinForm {
        LinForm { c: std::array::from_fn(|k| &self.c[k] + &o.c[k]) }
    }

    pub fn sub(&self, o: &LinForm) -> LinForm {
        LinForm { c: std::array::from_fn(|k| &self.c[k] - &o.c[k]) }
    }

    pub fn neg(&self) -> LinForm {
        LinForm { c: std::array::from_fn(|k| -self.c[k].clone()) }
    }

    pub fn scale(&self, k: &Coeff) -> LinForm {
        let mut out = LinForm::zero();
        for v in Var::ALL {
            let c = &self.coeff(v) * k;
            out.c[v.index()] = c.re;
            out.c[2 + v.index()] = c.im;
        }
        out
    }

    pub fn depends_on(&self, v: Var) -> bool {
        !(self.c[v.index()].is_zero() && self.c[2 + v.index()].is_zero())
    }

    /// Restriction to a subset of variables.
    pub fn restrict(&self, keep: [bool; 2]) -> LinForm {
        let mut out = self.clone();
        for v in Var::ALL {
            if !keep[v.index()] {
                out.c[v.index()] = BigRational::zero();
                out.c[2 + v.index()] = BigRational::zero();
            }
        }
        out
    }
}

/// Laurent monomial: exponential factor times integer powers of atoms.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Monomial {
    pub exp: LinForm,
    /// Sorted by atom, no zero exponents.
    pub pows: Vec<(Atom, i32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn is_one(&self) -> bool {
        self.exp.is_zero() && self.pows.is_empty()
    }

    pub fn atom(a: Atom, p: i32) -> Self {
        if p == 0 {
            return Monomial::one();
        }
        Monomial { exp: LinForm::zero(), pows: vec![(a, p)] }
    }

    pub fn exp_only(l: LinForm) -> Self {
        Monomial { exp: l, pows: Vec::new() }
    }

    pub fn power_of(&self, a: &Atom) -> i32 {
        match self.pows.binary_search_by(|(x, _)| x.cmp(a)) {
            Ok(i) => self.pows[i].1,
            Err(_) => 0,
        }
    }

    /// Product with exponent merging (no rewrite rules applied).
    pub fn mul(&self, o: &Monomial) -> Monomial {
        let mut pows = Vec::with_capacity(self.pows.len() + o.pows.len());
        let (mut i, mut j) = (0, 0);
        while i < self.pows.len() || j < o.pows.len() {
            if j == o.pows.len() || (i < self.pows.len() && self.pows[i].0 < o.pows[j].0) {
                pows.push(self.pows[i].clone());
                i += 1;
            } else if i == self.pows.len() || o.pows[j].0 < self.pows[i].0 {
                pows.push(o.pows[j].clone());
                j += 1;
            } else {
                let e = self.pows[i].1 + o.pows[j].1;
                if e != 0 {
                    pows.push((self.pows[i].0.clone(), e));
                }
                i += 1;
                j += 1;
            }
        }
        Monomial { exp: self.exp.add(&o.exp), pows }
    }

    pub fn inv(&self) -> Monomial {
        Monomial { exp: self.exp.neg(), pows: self.pows.iter().map(|(a, e)| (a.clone(), -e)).collect() }
    }

    pub fn div(&self, o: &Monomial) -> Monomial {
        self.mul(&o.inv())
    }

    pub fn powi(&self, k: i32) -> Monomial {
        if k == 0 {
            return Monomial::one();
        }
        Monomial { exp: self.exp.scale(&Coeff::int(k as i64)), pows: self.pows.iter().map(|(a, e)| (a.clone(), e * k)).collect() }
    }

    /// Copy with the power of `a` replaced by `p`.
    pub fn with_power(&self, a: &Atom, p: i32) -> Monomial {
        let mut pows = self.pows.clone();
        match pows.binary_search_by(|(x, _)| x.cmp(a)) {
            Ok(i) => {
                if p == 0 {
                    pows.remove(i);
                } else {
                    pows[i].1 = p;
                }
            }
            Err(i) => {
                if p != 0 {
                    pows.insert(i, (a.clone(), p));
                }
            }
        }
        Monomial { exp: self.exp.clone(), pows }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.exp.depends_on(v) || self.pows.iter().any(|(a, _)| a.depends_on(v))
    }

    pub fn has_negative_powers(&self) -> bool {
        self.pows.iter().any(|(_, e)| *e < 0)
    }
}

fn cmp_pows(a: &[(Atom, i32)], b: &[(Atom, i32)]) -> Ordering {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some((_, e)), None) => return e.cmp(&0),
            (None, Some((_, f))) => return 0.cmp(f),
            (Some((x, e)), Some((y, f))) => match x.cmp(y) {
                Ordering::Equal => {
                    if e != f {
                        return e.cmp(f);
                    }
                    i += 1;
                    j += 1;
                }
                Ordering::Less => return e.cmp(&0),
                Ordering::Greater => return 0.cmp(f),
            },
        }
    }
}

/// Lexicographic order on exponent vectors: a group order, so it is
/// compatible with multiplication (needed by exact Laurent division).
impl Ord for Monomial {
    fn cmp(&self, o: &Self) -> Ordering {
        self.exp.cmp(&o.exp).then_with(|| cmp_pows(&self.pows, &o.pows))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
