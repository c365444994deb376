//! Differential operators in `u1, u2` with formal right parameters `H`, `L`.
//!
//! A term `(a, b, j, k) -> c` stands for `c(u1,u2) d1^a d2^b H^j L^k`: the
//! coefficient acts first from the left, the parameters are applied first to
//! the argument.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::eval::{EvalError, NumEnv};
use crate::expr::latex::expr_latex;
use crate::expr::{parse, Bindings, Deps, Expr, ExprError, Var};
use crate::numeric::numfn::FnTable;
use crate::numeric::quadrature;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffOpError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot compose: {0}")]
    NotComposable(String),
    #[error("operator carries H/L parameters; expand it first")]
    NotPlain,
    #[error("reduction did not terminate: {0}")]
    NonTermination(String),
    #[error("integrability violated: {0}")]
    IntegrabilityViolated(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
}

pub type Result<T> = std::result::Result<T, DiffOpError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OpKey {
    pub a: u32,
    pub b: u32,
    pub j: u32,
    pub k: u32,
}

impl OpKey {
    pub const fn new(a: u32, b: u32, j: u32, k: u32) -> Self {
        OpKey { a, b, j, k }
    }

    pub fn order(&self) -> u32 {
        self.a + self.b
    }

    pub fn is_plain(&self) -> bool {
        self.j == 0 && self.k == 0
    }
}

/// Metric data `ds^2 = (f1 + f2)(du1^2 + du2^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub name: String,
    pub f1: Expr,
    pub f2: Expr,
    pub metadata: Vec<String>,
    /// Loci where `f1 + f2` vanishes or blows up.
    #[serde(default)]
    pub excluded: Vec<String>,
}

impl Geometry {
    pub fn new(name: &str, f1: Expr, f2: Expr) -> Result<Self> {
        let g = Geometry { name: name.into(), f1, f2, metadata: Vec::new(), excluded: Vec::new() };
        g.validate()?;
        Ok(g)
    }

    /// Unknown `f1(u1)`, `f2(u2)`.
    pub fn generic() -> Self {
        Geometry {
            name: "generic".into(),
            f1: Expr::func("f1", Deps::single(Var::U1)),
            f2: Expr::func("f2", Deps::single(Var::U2)),
            metadata: Vec::new(),
            excluded: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.f1.depends_on(Var::U2) {
            return Err(DiffOpError::InvalidGeometry(format!("{}: f1 depends on u2", self.name)));
        }
        if self.f2.depends_on(Var::U1) {
            return Err(DiffOpError::InvalidGeometry(format!("{}: f2 depends on u1", self.name)));
        }
        if (&self.f1 + &self.f2).numerator().is_empty() {
            return Err(DiffOpError::InvalidGeometry(format!("{}: f1 + f2 vanishes", self.name)));
        }
        Ok(())
    }

    pub fn f(&self, v: Var) -> &Expr {
        match v {
            Var::U1 => &self.f1,
            Var::U2 => &self.f2,
        }
    }

    /// `1/(f1 + f2)`.
    pub fn conformal_inverse(&self) -> Result<Expr> {
        Ok((&self.f1 + &self.f2).recip()?.normalize())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparablePotential {
    pub v1: Expr,
    pub v2: Expr,
}

impl SeparablePotential {
    /// Unknown `v1(u1)`, `v2(u2)`.
    pub fn generic() -> Self {
        SeparablePotential { v1: Expr::func("v1", Deps::single(Var::U1)), v2: Expr::func("v2", Deps::single(Var::U2)) }
    }

    /// `v1 = 0`, unknown `v2(u2)`.
    pub fn angular() -> Self {
        SeparablePotential { v1: Expr::zero(), v2: Expr::func("v2", Deps::single(Var::U2)) }
    }

    pub fn zero() -> Self {
        SeparablePotential { v1: Expr::zero(), v2: Expr::zero() }
    }

    pub fn v(&self, v: Var) -> &Expr {
        match v {
            Var::U1 => &self.v1,
            Var::U2 => &self.v2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiffOp {
    terms: BTreeMap<OpKey, Expr>,
    standard: bool,
}

/// Serialized form of one operator term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpTerm {
    pub a: u32,
    pub b: u32,
    pub j: u32,
    pub k: u32,
    pub coeff: String,
}

/// Order in which [`to_standard_form`] picks terms to rewrite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionOrder {
    /// Highest total derivative order first; `d1^2` before `d2^2`.
    HighestFirst,
    /// Lowest reducible total order first; `d2^2` before `d1^2`.
    LowestFirst,
}

fn binom(n: u32, k: u32) -> i64 {
    let mut r: i64 = 1;
    for i in 0..k as i64 {
        r = r * (n as i64 - i) / (i + 1);
    }
    r
}

fn hbar() -> Expr {
    Expr::constant("hbar")
}

impl DiffOp {
    pub fn zero() -> Self {
        DiffOp::default()
    }

    /// Multiplication by `c`.
    pub fn mul(c: Expr) -> Self {
        DiffOp::zero().with(OpKey::new(0, 0, 0, 0), c)
    }

    /// `d1^a d2^b`.
    pub fn deriv(a: u32, b: u32) -> Self {
        DiffOp::zero().with(OpKey::new(a, b, 0, 0), Expr::one())
    }

    /// `c H^j L^k`.
    pub fn param(j: u32, k: u32, c: Expr) -> Self {
        DiffOp::zero().with(OpKey::new(0, 0, j, k), c)
    }

    pub fn with(mut self, key: OpKey, c: Expr) -> Self {
        self.add_term(key, c);
        self
    }

    pub fn from_terms(it: impl IntoIterator<Item = (OpKey, Expr)>) -> Self {
        let mut out = DiffOp::zero();
        for (k, c) in it {
            out.add_term(k, c);
        }
        out
    }

    /// Adds `c` to the coefficient at `key` (no normalization).
    pub fn add_term(&mut self, key: OpKey, c: Expr) {
        if c.is_empty() {
            return;
        }
        let slot = self.terms.entry(key).or_default();
        *slot = &*slot + &c;
        if slot.is_empty() {
            self.terms.remove(&key);
        }
        self.standard = false;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OpKey, &Expr)> {
        self.terms.iter()
    }

    pub fn get(&self, key: OpKey) -> Expr {
        self.terms.get(&key).cloned().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.numerator().is_empty())
    }

    pub fn is_standard(&self) -> bool {
        self.standard
    }

    pub fn is_plain(&self) -> bool {
        self.terms.keys().all(|k| k.is_plain())
    }

    pub fn has_standard_shape(&self) -> bool {
        self.terms.keys().all(|k| k.a <= 1 && k.b <= 1)
    }

    pub fn order(&self) -> u32 {
        self.terms.keys().map(|k| k.order()).max().unwrap_or(0)
    }

    /// Normalizes coefficients and drops zeros.
    pub fn normalized(&self) -> DiffOp {
        let terms = self
            .terms
            .iter()
            .filter_map(|(k, c)| {
                let n = c.normalize();
                if n.numerator().is_empty() {
                    None
                } else {
                    Some((*k, n))
                }
            })
            .collect();
        DiffOp { terms, standard: self.standard }
    }

    pub fn add(&self, o: &DiffOp) -> DiffOp {
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.add_term(*k, c.clone());
        }
        out.standard = self.standard && o.standard;
        out
    }

    pub fn sub(&self, o: &DiffOp) -> DiffOp {
        self.add(&o.scale(&Expr::int(-1)))
    }

    /// Left multiplication of every coefficient by `c`.
    pub fn scale(&self, c: &Expr) -> DiffOp {
        let terms = self.terms.iter().map(|(k, e)| (*k, e * c)).filter(|(_, e)| !e.is_empty()).collect();
        DiffOp { terms, standard: self.standard }
    }

    /// Substitutes into every coefficient.
    pub fn substitute(&self, b: &Bindings) -> Result<DiffOp> {
        let mut out = DiffOp::zero();
        for (k, c) in &self.terms {
            out.add_term(*k, c.substitute(b)?);
        }
        out.standard = self.standard;
        Ok(out.normalized())
    }

    /// Coefficient operators `S_jk` with `self = sum S_jk H^j L^k`.
    pub fn by_parameters(&self) -> BTreeMap<(u32, u32), DiffOp> {
        let mut out: BTreeMap<(u32, u32), DiffOp> = BTreeMap::new();
        for (k, c) in &self.terms {
            out.entry((k.j, k.k)).or_default().add_term(OpKey::new(k.a, k.b, 0, 0), c.clone());
        }
        out
    }

    /// Symbolic application to a function of `u1, u2` (plain operators only).
    pub fn apply(&self, psi: &Expr) -> Result<Expr> {
        if !self.is_plain() {
            return Err(DiffOpError::NotPlain);
        }
        let mut out = Expr::zero();
        for (k, c) in &self.terms {
            out = &out + &(c * &psi.diff_mixed(k.a, k.b));
        }
        Ok(out.normalize())
    }

    pub fn to_terms(&self) -> Vec<OpTerm> {
        self.terms.iter().map(|(k, c)| OpTerm { a: k.a, b: k.b, j: k.j, k: k.k, coeff: c.to_text() }).collect()
    }

    pub fn from_op_terms(ts: &[OpTerm]) -> Result<DiffOp> {
        let mut out = DiffOp::zero();
        for t in ts {
            out.add_term(OpKey::new(t.a, t.b, t.j, t.k), parse(&t.coeff)?);
        }
        Ok(out)
    }

    /// LaTeX grouped by parameter powers; standard-shape groups use the
    /// `A d12 - B d1 - C d2 + D` layout.
    pub fn latex(&self) -> String {
        if self.is_empty() {
            return "0".into();
        }
        let mut groups = Vec::new();
        for ((j, k), op) in self.by_parameters() {
            let mut parts = Vec::new();
            if op.has_standard_shape() {
                for (key, sign, d) in [
                    (OpKey::new(1, 1, 0, 0), 1, "\\partial_{u_1u_2}"),
                    (OpKey::new(1, 0, 0, 0), -1, "\\partial_{u_1}"),
                    (OpKey::new(0, 1, 0, 0), -1, "\\partial_{u_2}"),
                    (OpKey::new(0, 0, 0, 0), 1, ""),
                ] {
                    let c = op.get(key);
                    if c.is_empty() {
                        continue;
                    }
                    let c = if sign < 0 { -c } else { c };
                    let s = if sign < 0 { "-" } else { "+" };
                    parts.push(format!("{s}\\left({}\\right){d}", expr_latex(&c)));
                }
            } else {
                for (key, c) in op.terms() {
                    let mut d = String::new();
                    for (n, v) in [(key.a, "u_1"), (key.b, "u_2")] {
                        match n {
                            0 => {}
                            1 => d.push_str(&format!("\\partial_{{{v}}}")),
                            _ => d.push_str(&format!("\\partial_{{{v}}}^{{{n}}}")),
                        }
                    }
                    parts.push(format!("+\\left({}\\right){d}", expr_latex(c)));
                }
            }
            let mut body = parts.join(" ");
            if let Some(rest) = body.strip_prefix('+') {
                body = rest.to_string();
            }
            let mut params = String::new();
            match j {
                0 => {}
                1 => params.push_str(" H"),
                _ => params.push_str(&format!(" H^{{{j}}}")),
            }
            match k {
                0 => {}
                1 => params.push_str(" L_2"),
                _ => params.push_str(&format!(" L_2^{{{k}}}")),
            }
            if params.is_empty() {
                groups.push(body);
            } else {
                groups.push(format!("\\left({body}\\right){params}"));
            }
        }
        groups.join(" + ")
    }
}

/// Accumulates `c d1^a d2^b (g .) P` into `out`, where `P = H^j L^k`.
fn leibniz_into(out: &mut BTreeMap<OpKey, Expr>, c: &Expr, (a, b): (u32, u32), g: &Expr, rest: OpKey) {
    for m in 0..=a {
        for n in 0..=b {
            let dg = g.diff_mixed(m, n);
            if dg.is_empty() {
                continue;
            }
            let w = binom(a, m) * binom(b, n);
            let coeff = &(c * &dg) * &Expr::int(w);
            let key = OpKey::new(a - m + rest.a, b - n + rest.b, rest.j, rest.k);
            let slot = out.entry(key).or_default();
            *slot = &*slot + &coeff;
        }
    }
}

/// Normal-ordered product `x o y`.
///
/// `x` may carry parameters only where the matching `y` term is a constant
/// parameter monomial, since `H`, `L` do not commute with functions.
pub fn compose(x: &DiffOp, y: &DiffOp) -> Result<DiffOp> {
    let mut out: BTreeMap<OpKey, Expr> = BTreeMap::new();
    for (kx, cx) in &x.terms {
        for (ky, cy) in &y.terms {
            if !kx.is_plain() && (ky.order() > 0 || cy.depends_on(Var::U1) || cy.depends_on(Var::U2)) {
                return Err(DiffOpError::NotComposable(format!(
                    "left factor carries H^{}L^{} in front of a non-constant term",
                    kx.j, kx.k
                )));
            }
            let rest = OpKey::new(ky.a, ky.b, kx.j + ky.j, kx.k + ky.k);
            leibniz_into(&mut out, cx, (kx.a, kx.b), cy, rest);
        }
    }
    Ok(DiffOp::from_terms(out).normalized())
}

/// `x o y - y o x`.
pub fn commutator(x: &DiffOp, y: &DiffOp) -> Result<DiffOp> {
    Ok(compose(x, y)?.sub(&compose(y, x)?).normalized())
}

/// `(1/(f1+f2)) (-hbar^2/2 d1^2 - hbar^2/2 d2^2 + v1 + v2)`.
pub fn build_hamiltonian(g: &Geometry, p: &SeparablePotential) -> Result<DiffOp> {
    let w = g.conformal_inverse()?;
    let kin = &(&hbar().powu(2) * &Expr::ratio(-1, 2)) * &w;
    let pot = &(&p.v1 + &p.v2) * &w;
    Ok(DiffOp::from_terms([(OpKey::new(2, 0, 0, 0), kin.clone()), (OpKey::new(0, 2, 0, 0), kin), (OpKey::new(0, 0, 0, 0), pot)])
        .normalized())
}

/// `-hbar^2/2 d_v^2 + v_v`.
fn separated_part(p: &SeparablePotential, v: Var) -> DiffOp {
    let (a, b) = if v == Var::U1 { (2, 0) } else { (0, 2) };
    DiffOp::from_terms([(OpKey::new(a, b, 0, 0), &hbar().powu(2) * &Expr::ratio(-1, 2)), (OpKey::new(0, 0, 0, 0), p.v(v).clone())])
}

/// `(f2 T1 - f1 T2)/(f1+f2)` with `T_i = -hbar^2/2 d_i^2 + v_i`.
pub fn build_l2(g: &Geometry, p: &SeparablePotential) -> Result<DiffOp> {
    let w = g.conformal_inverse()?;
    let t1 = separated_part(p, Var::U1).scale(&(&g.f2 * &w));
    let t2 = separated_part(p, Var::U2).scale(&(&g.f1 * &w));
    Ok(t1.sub(&t2).normalized())
}

/// Rewrites a plain operator into the unique form with `a, b <= 1`.
///
/// Each `d1^2` (resp. `d2^2`) is moved next to the parameter block and
/// replaced via `-hbar^2/2 d1^2 + v1 = f1 H + L` (resp. `f2 H - L`); the
/// introduced parameters then already sit rightmost. Every rewrite strictly
/// lowers the total derivative order of the rewritten term.
pub fn to_standard_form(x: &DiffOp, g: &Geometry, p: &SeparablePotential) -> Result<DiffOp> {
    to_standard_form_with(x, g, p, ReductionOrder::HighestFirst)
}

pub fn to_standard_form_with(x: &DiffOp, g: &Geometry, p: &SeparablePotential, order: ReductionOrder) -> Result<DiffOp> {
    let two_over = &Expr::int(2) * &hbar().powi(-2)?;
    let minus_two_over = -two_over.clone();
    // d1^2 = -2/hbar^2 f1 H - 2/hbar^2 L + 2/hbar^2 v1, and the d2^2 analogue.
    let subst = |v: Var| -> [(Expr, (u32, u32)); 3] {
        let lsign = if v == Var::U1 { minus_two_over.clone() } else { two_over.clone() };
        [(&minus_two_over * g.f(v), (1, 0)), (lsign, (0, 1)), (&two_over * p.v(v), (0, 0))]
    };
    let rules = [subst(Var::U1), subst(Var::U2)];
    let mut work: BTreeMap<OpKey, Expr> = x.terms.clone();
    let mut steps = 0usize;
    let limit = 10_000 + 1000 * work.len();
    loop {
        let pick = {
            let it = work.keys().filter(|k| k.a >= 2 || k.b >= 2);
            match order {
                ReductionOrder::HighestFirst => it.max_by_key(|k| (k.order(), k.a, k.b, k.j, k.k)).copied(),
                ReductionOrder::LowestFirst => it.min_by_key(|k| (k.order(), k.b, k.a, k.j, k.k)).copied(),
            }
        };
        let Some(key) = pick else { break };
        steps += 1;
        if steps > limit {
            return Err(DiffOpError::NonTermination(format!("{steps} rewrites")));
        }
        let c = work.remove(&key).expect("picked key present");
        let use_u1 = match order {
            ReductionOrder::HighestFirst => key.a >= 2,
            ReductionOrder::LowestFirst => key.b < 2,
        };
        let (rest, rule) = if use_u1 { ((key.a - 2, key.b), &rules[0]) } else { ((key.a, key.b - 2), &rules[1]) };
        let mut produced = BTreeMap::new();
        for (g_, (dj, dk)) in rule {
            if g_.is_empty() {
                continue;
            }
            leibniz_into(&mut produced, &c, rest, g_, OpKey::new(0, 0, key.j + dj, key.k + dk));
        }
        for (k, e) in produced {
            if k.order() >= key.order() {
                return Err(DiffOpError::NonTermination(format!("order did not decrease at {key:?}")));
            }
            let slot = work.entry(k).or_default();
            *slot = &*slot + &e;
            if slot.is_empty() {
                work.remove(&k);
            }
        }
    }
    let mut out = DiffOp::from_terms(work).normalized();
    out.standard = true;
    Ok(out)
}

/// Replaces every `H^j L^k` by the explicit composed operators.
pub fn expand_standard(x: &DiffOp, g: &Geometry, p: &SeparablePotential) -> Result<DiffOp> {
    let h = build_hamiltonian(g, p)?;
    let l = build_l2(g, p)?;
    let mut hpow = vec![DiffOp::mul(Expr::one())];
    let mut lpow = vec![DiffOp::mul(Expr::one())];
    let mut out = DiffOp::zero();
    for (key, c) in &x.terms {
        while hpow.len() <= key.j as usize {
            let next = compose(hpow.last().unwrap(), &h)?;
            hpow.push(next);
        }
        while lpow.len() <= key.k as usize {
            let next = compose(lpow.last().unwrap(), &l)?;
            lpow.push(next);
        }
        let head = DiffOp::zero().with(OpKey::new(key.a, key.b, 0, 0), c.clone());
        let params = compose(&hpow[key.j as usize], &lpow[key.k as usize])?;
        out = out.add(&compose(&head, &params)?);
    }
    Ok(out.normalized())
}

/// `(A, B, C) = (F, F_2/2 + G_1, F_1/2 - G_2)`.
pub fn abc_from_fg(f: &Expr, g: &Expr) -> (Expr, Expr, Expr) {
    let half = Expr::ratio(1, 2);
    let b = &(&f.diff(Var::U2) * &half) + &g.diff(Var::U1);
    let c = &(&f.diff(Var::U1) * &half) - &g.diff(Var::U2);
    (f.clone(), b.normalize(), c.normalize())
}

/// Residual `A_11 + A_22 - 2 B_2 - 2 C_1`.
pub fn abc_constraint(a: &Expr, b: &Expr, c: &Expr) -> Expr {
    let r = &(&a.diff_n(Var::U1, 2) + &a.diff_n(Var::U2, 2)) - &(&(&b.diff(Var::U2) + &c.diff(Var::U1)) * &Expr::int(2));
    r.normalize()
}

/// Standard-form operator `sum (A d12 - B d1 - C d2 + D) H^j L^k` from
/// `H, L`-polynomial coefficients.
pub fn standard_from_abcd(a: &Expr, b: &Expr, c: &Expr, d: &Expr) -> Result<DiffOp> {
    let mut out = DiffOp::zero();
    for ((ka, kb), e, sign) in [((1, 1), a, 1), ((1, 0), b, -1), ((0, 1), c, -1), ((0, 0), d, 1)] {
        for ((j, k), coeff) in e.collect_hl()? {
            out.add_term(OpKey::new(ka, kb, j, k), &coeff * &Expr::int(sign));
        }
    }
    let mut out = out.normalized();
    out.standard = true;
    Ok(out)
}

/// Right-hand sides `(d1 D, d2 D)` as polynomials in `H, L`.
pub fn d_gradient(f: &Expr, g: &Expr, geo: &Geometry, p: &SeparablePotential) -> Result<(Expr, Expr)> {
    let (a, b, c) = abc_from_fg(f, g);
    let h = Expr::constant("H");
    let l = Expr::constant("L");
    let hb2 = hbar().powu(2);
    let half_hb2 = &hb2 * &Expr::ratio(1, 2);
    let inv = hbar().powi(-2)?;
    let two = Expr::int(2);
    let a1 = a.diff(Var::U1);
    let a2 = a.diff(Var::U2);
    let lap = |e: &Expr| &e.diff_n(Var::U1, 2) + &e.diff_n(Var::U2, 2);
    let px = {
        let mut s = &half_hb2 * &lap(&b);
        s = &s - &(&(&two * &a2) * &p.v2);
        s = &s - &(&a * &p.v2.diff(Var::U2));
        s = &s + &(&(&(&(&two * &a2) * &geo.f2) + &(&a * &geo.f2.diff(Var::U2))) * &h);
        s = &s - &(&(&two * &a2) * &l);
        s
    };
    let py = {
        let mut s = &half_hb2 * &lap(&c);
        s = &s - &(&(&two * &a1) * &p.v1);
        s = &s - &(&a * &p.v1.diff(Var::U1));
        s = &s + &(&(&(&(&two * &a1) * &geo.f1) + &(&a * &geo.f1.diff(Var::U1))) * &h);
        s = &s + &(&(&two * &a1) * &l);
        s
    };
    Ok(((&px * &inv).normalize(), (&py * &inv).normalize()))
}

/// How [`recover_d`] produces `D`.
#[derive(Clone, Debug)]
pub enum DMode {
    Symbolic,
    Numeric(NumericDConfig),
}

#[derive(Clone, Debug)]
pub struct NumericDConfig {
    pub base: [f64; 2],
    pub consts: BTreeMap<String, f64>,
    pub fns: FnTable,
    /// Points at which integrability and path independence are checked.
    pub check_points: Vec<[f64; 2]>,
    pub tolerance: f64,
}

pub enum RecoveredD {
    Symbolic(Expr),
    Numeric(NumericD),
}

/// `D` by quadrature of its gradient along axis-parallel paths from a base
/// point, separately for each `H^j L^k` component.
#[derive(Clone, Debug)]
pub struct NumericD {
    pub base: [f64; 2],
    pub components: BTreeMap<(u32, u32), (Expr, Expr)>,
    pub consts: BTreeMap<String, f64>,
    pub fns: FnTable,
    rule: (Vec<f64>, Vec<f64>),
}

/// Gauss nodes per unit length used by the path integrals.
const SEGMENTS_PER_UNIT: f64 = 8.0;

impl NumericD {
    pub fn new(px: &Expr, py: &Expr, base: [f64; 2], consts: BTreeMap<String, f64>, fns: FnTable) -> Result<Self> {
        let cx = px.collect_hl()?;
        let cy = py.collect_hl()?;
        let mut components = BTreeMap::new();
        for key in cx.keys().chain(cy.keys()) {
            let x = cx.get(key).cloned().unwrap_or_default();
            let y = cy.get(key).cloned().unwrap_or_default();
            components.insert(*key, (x, y));
        }
        Ok(NumericD { base, components, consts, fns, rule: quadrature::gauss_legendre(10) })
    }

    fn grad(&self, e: &Expr, u: [f64; 2]) -> std::result::Result<f64, EvalError> {
        e.eval_real(&NumEnv { u, consts: &self.consts, fns: &self.fns })
    }

    fn line(&self, e: &Expr, fixed: [f64; 2], v: Var, from: f64, to: f64) -> std::result::Result<f64, EvalError> {
        if from == to {
            return Ok(0.0);
        }
        let segs = ((to - from).abs() * SEGMENTS_PER_UNIT).ceil().max(1.0) as usize;
        quadrature::integrate(
            |t| {
                let mut u = fixed;
                u[v.index()] = t;
                self.grad(e, u)
            },
            from,
            to,
            segs,
            &self.rule,
        )
    }

    /// Component `(j,k)` at `u`: first along `u1`, then along `u2`.
    pub fn eval(&self, jk: (u32, u32), u: [f64; 2]) -> std::result::Result<f64, EvalError> {
        Ok(self.eval_paths(jk, u)?.0)
    }

    /// Values along the two axis-parallel paths (`u1` first, `u2` first).
    pub fn eval_paths(&self, jk: (u32, u32), u: [f64; 2]) -> std::result::Result<(f64, f64), EvalError> {
        let Some((px, py)) = self.components.get(&jk) else { return Ok((0.0, 0.0)) };
        let b = self.base;
        let p1 = self.line(px, b, Var::U1, b[0], u[0])? + self.line(py, [u[0], b[1]], Var::U2, b[1], u[1])?;
        let p2 = self.line(py, b, Var::U2, b[1], u[1])? + self.line(px, [b[0], u[1]], Var::U1, b[0], u[0])?;
        Ok((p1, p2))
    }

    /// Largest two-path discrepancy over the given points and components.
    pub fn path_discrepancy(&self, pts: &[[f64; 2]]) -> std::result::Result<f64, EvalError> {
        let mut worst: f64 = 0.0;
        for jk in self.components.keys() {
            for u in pts {
                let (a, b) = self.eval_paths(*jk, *u)?;
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }

    /// Component values on a tensor grid, by cumulative integration from the
    /// grid corner followed by a shift so that the base point maps to 0.
    pub fn eval_grid(&self, jk: (u32, u32), u1s: &[f64], u2s: &[f64]) -> std::result::Result<Vec<Vec<f64>>, EvalError> {
        let mut out = vec![vec![0.0; u2s.len()]; u1s.len()];
        let Some((px, py)) = self.components.get(&jk) else { return Ok(out) };
        let corner = [u1s[0], u2s[0]];
        let mut along = vec![0.0; u1s.len()];
        for i in 1..u1s.len() {
            along[i] = along[i - 1] + self.line(px, corner, Var::U1, u1s[i - 1], u1s[i])?;
        }
        for (i, &x) in u1s.iter().enumerate() {
            let mut acc = along[i];
            out[i][0] = acc;
            for jdx in 1..u2s.len() {
                acc += self.line(py, [x, 0.0], Var::U2, u2s[jdx - 1], u2s[jdx])?;
                out[i][jdx] = acc;
            }
        }
        let shift = self.line(px, corner, Var::U1, corner[0], self.base[0])?
            + self.line(py, [self.base[0], 0.0], Var::U2, corner[1], self.base[1])?;
        for row in &mut out {
            for v in row.iter_mut() {
                *v -= shift;
            }
        }
        Ok(out)
    }
}

/// Integrability residual `d2(d1 D) - d1(d2 D)` after applying `rules`.
pub fn d_integrability(px: &Expr, py: &Expr) -> Expr {
    (&px.diff(Var::U2) - &py.diff(Var::U1)).normalize()
}

/// Recovers `D` (gauge `D(base) = 0` numerically, no constant term
/// symbolically) from `F`, `G`. `rules` are applied to the gradient before
/// use, e.g. to impose solved conditions on unknown functions.
pub fn recover_d(f: &Expr, g: &Expr, geo: &Geometry, p: &SeparablePotential, rules: &Bindings, mode: &DMode) -> Result<RecoveredD> {
    let (px, py) = d_gradient(f, g, geo, p)?;
    let px = px.substitute_fixpoint(rules, 16)?.normalize();
    let py = py.substitute_fixpoint(rules, 16)?.normalize();
    let resid = d_integrability(&px, &py);
    match mode {
        DMode::Symbolic => {
            if !resid.numerator().is_empty() {
                return Err(DiffOpError::IntegrabilityViolated(resid.to_text()));
            }
            let part = px.integrate_var(Var::U1)?;
            let rest = (&py - &part.diff(Var::U2)).normalize();
            if rest.depends_on(Var::U1) {
                return Err(DiffOpError::IntegrabilityViolated(rest.to_text()));
            }
            let tail = rest.integrate_total(Var::U2)?;
            Ok(RecoveredD::Symbolic((&part + &tail).normalize()))
        }
        DMode::Numeric(cfg) => {
            let nd = NumericD::new(&px, &py, cfg.base, cfg.consts.clone(), cfg.fns.clone())?;
            for (jk, _) in resid.collect_hl()? {
                let comp = resid.collect_hl()?.remove(&jk).unwrap_or_default();
                for u in &cfg.check_points {
                    let v = comp.eval_real(&NumEnv { u: *u, consts: &cfg.consts, fns: &cfg.fns })?;
                    if v.abs() > cfg.tolerance {
                        return Err(DiffOpError::IntegrabilityViolated(format!("component H^{}L^{} residual {v:e} at {u:?}", jk.0, jk.1)));
                    }
                }
            }
            let gap = nd.path_discrepancy(&cfg.check_points)?;
            if gap > cfg.tolerance {
                return Err(DiffOpError::IntegrabilityViolated(format!("two-path discrepancy {gap:e}")));
            }
            Ok(RecoveredD::Numeric(nd))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> Geometry {
        Geometry::new("flat", Expr::one(), Expr::zero()).unwrap()
    }

    fn polar() -> Geometry {
        Geometry::new("polar-flat", parse("exp(2*u1)").unwrap(), Expr::zero()).unwrap()
    }

    #[test]
    fn canonical_commutation() {
        let x = compose(&DiffOp::deriv(1, 0), &DiffOp::mul(Expr::var(Var::U1))).unwrap();
        let want = DiffOp::from_terms([(OpKey::new(1, 0, 0, 0), Expr::var(Var::U1)), (OpKey::new(0, 0, 0, 0), Expr::one())]);
        assert_eq!(x, want);
    }

    #[test]
    fn leibniz_second_order() {
        let c = Expr::func("c", Deps::single(Var::U2));
        let x = compose(&DiffOp::deriv(0, 2), &DiffOp::mul(c.clone())).unwrap();
        assert_eq!(x.get(OpKey::new(0, 2, 0, 0)), c);
        assert_eq!(x.get(OpKey::new(0, 1, 0, 0)), &c.diff(Var::U2) * &Expr::int(2));
        assert_eq!(x.get(OpKey::new(0, 0, 0, 0)), c.diff_n(Var::U2, 2));
    }

    #[test]
    fn trivial_commutators() {
        let x = DiffOp::deriv(1, 0).add(&DiffOp::mul(parse("u1*u2").unwrap()));
        assert!(commutator(&x, &x).unwrap().is_zero());
        assert!(commutator(&DiffOp::deriv(1, 0), &DiffOp::deriv(0, 1)).unwrap().is_zero());
    }

    #[test]
    fn hamiltonian_shapes() {
        let h = build_hamiltonian(&flat(), &SeparablePotential::zero()).unwrap();
        let k = parse("-hbar^2/2").unwrap();
        assert_eq!(h, DiffOp::from_terms([(OpKey::new(2, 0, 0, 0), k.clone()), (OpKey::new(0, 2, 0, 0), k)]));
        let h = build_hamiltonian(&polar(), &SeparablePotential::generic()).unwrap();
        assert_eq!(h.get(OpKey::new(2, 0, 0, 0)), parse("-hbar^2/2*exp(-2*u1)").unwrap());
        let horo = Geometry::new("h", parse("u1^(-2)").unwrap(), Expr::zero()).unwrap();
        let h = build_hamiltonian(&horo, &SeparablePotential::zero()).unwrap();
        assert_eq!(h.get(OpKey::new(0, 2, 0, 0)), parse("-hbar^2/2*u1^2").unwrap());
    }

    #[test]
    fn l2_shapes() {
        let l = build_l2(&polar(), &SeparablePotential::generic()).unwrap();
        let want =
            DiffOp::from_terms([(OpKey::new(0, 2, 0, 0), parse("hbar^2/2").unwrap()), (OpKey::new(0, 0, 0, 0), parse("-v2").unwrap())]);
        assert_eq!(l, want);
        let half = Geometry::new("half", Expr::ratio(1, 2), Expr::ratio(1, 2)).unwrap();
        let l = build_l2(&half, &SeparablePotential::zero()).unwrap();
        let q = parse("-hbar^2/4").unwrap();
        assert_eq!(l, DiffOp::from_terms([(OpKey::new(2, 0, 0, 0), q.clone()), (OpKey::new(0, 2, 0, 0), -q)]));
    }

    #[test]
    fn h_and_l2_commute_generic() {
        let g = Geometry::generic();
        let p = SeparablePotential::generic();
        let c = commutator(&build_hamiltonian(&g, &p).unwrap(), &build_l2(&g, &p).unwrap()).unwrap();
        assert!(c.is_zero(), "{:?}", c.to_terms());
    }

    #[test]
    fn standard_form_of_h_and_l() {
        let g = Geometry::generic();
        let p = SeparablePotential::generic();
        let h = to_standard_form(&build_hamiltonian(&g, &p).unwrap(), &g, &p).unwrap();
        assert_eq!(h, {
            let mut d = DiffOp::param(1, 0, Expr::one());
            d.standard = true;
            d
        });
        let l = to_standard_form(&build_l2(&g, &p).unwrap(), &g, &p).unwrap();
        assert_eq!(l.to_terms(), DiffOp::param(0, 1, Expr::one()).to_terms());
        let t1 = separated_part(&p, Var::U1);
        let s = to_standard_form(&t1, &g, &p).unwrap();
        let want = DiffOp::from_terms([(OpKey::new(0, 0, 1, 0), g.f1.clone()), (OpKey::new(0, 0, 0, 1), Expr::one())]);
        assert_eq!(s.to_terms(), want.to_terms());
        assert!(s.is_standard());
    }

    #[test]
    fn expand_of_parameter_is_operator() {
        let g = polar();
        let p = SeparablePotential::angular();
        let e = expand_standard(&DiffOp::param(1, 0, Expr::one()), &g, &p).unwrap();
        assert_eq!(e, build_hamiltonian(&g, &p).unwrap());
        let a = parse("u1*u2").unwrap();
        let x = DiffOp::zero().with(OpKey::new(1, 1, 0, 0), a.clone());
        assert_eq!(expand_standard(&x, &g, &p).unwrap(), x);
    }

    #[test]
    fn both_reduction_orders_agree() {
        let g = Geometry::generic();
        let p = SeparablePotential::generic();
        let x = DiffOp::from_terms([
            (OpKey::new(3, 1, 0, 0), parse("u1*sin(u2)").unwrap()),
            (OpKey::new(2, 2, 0, 0), parse("exp(u1)").unwrap()),
            (OpKey::new(0, 3, 0, 0), parse("u2^2").unwrap()),
        ]);
        let a = to_standard_form_with(&x, &g, &p, ReductionOrder::HighestFirst).unwrap();
        let b = to_standard_form_with(&x, &g, &p, ReductionOrder::LowestFirst).unwrap();
        assert_eq!(a.to_terms(), b.to_terms());
        let back = expand_standard(&a, &g, &p).unwrap();
        assert!(back.sub(&x).normalized().is_zero());
    }

    #[test]
    fn abc_examples() {
        let (a, b, c) = abc_from_fg(&Expr::zero(), &Expr::zero());
        assert!(a.is_empty() && b.is_empty() && c.is_empty());
        let (a, b, c) = abc_from_fg(&parse("u1*u2").unwrap(), &Expr::zero());
        assert_eq!(b, parse("u1/2").unwrap());
        assert_eq!(c, parse("u2/2").unwrap());
        assert!(abc_constraint(&a, &b, &c).is_empty());
        let f = parse("4*hbar^2*exp(-u1)*sin(u2)").unwrap();
        let g = parse("-U1*exp(-u1) + U2").unwrap();
        let (a, b, c) = abc_from_fg(&f, &g);
        assert!(abc_constraint(&a, &b, &c).is_zero().unwrap());
    }

    #[test]
    fn d_is_constant_for_zero_data() {
        let r = recover_d(
            &Expr::zero(),
            &Expr::zero(),
            &Geometry::generic(),
            &SeparablePotential::generic(),
            &Bindings::new(),
            &DMode::Symbolic,
        )
        .unwrap();
        let RecoveredD::Symbolic(d) = r else { panic!() };
        assert!(d.is_empty());
    }

    #[test]
    fn integrability_violation_is_reported() {
        let r =
            recover_d(&parse("u2^2").unwrap(), &Expr::zero(), &flat(), &SeparablePotential::generic(), &Bindings::new(), &DMode::Symbolic);
        assert!(matches!(r, Err(DiffOpError::IntegrabilityViolated(_))));
    }

    #[test]
    fn symbolic_d_matches_gradient() {
        let f = Expr::var(Var::U1);
        let (px, py) = d_gradient(&f, &Expr::zero(), &flat(), &SeparablePotential::zero()).unwrap();
        let r = recover_d(&f, &Expr::zero(), &flat(), &SeparablePotential::zero(), &Bindings::new(), &DMode::Symbolic).unwrap();
        let RecoveredD::Symbolic(d) = r else { panic!() };
        assert_eq!(d, parse("2*u2*(H+L)/hbar^2").unwrap());
        assert!((&d.diff(Var::U1) - &px).is_zero().unwrap());
        assert!((&d.diff(Var::U2) - &py).is_zero().unwrap());
    }

    #[test]
    fn serialization_round_trip() {
        let h = build_hamiltonian(&polar(), &SeparablePotential::angular()).unwrap();
        let back = DiffOp::from_op_terms(&h.to_terms()).unwrap();
        assert_eq!(back, h);
        assert!(h.latex().contains("\\partial_{u_1}^{2}"));
    }
}
