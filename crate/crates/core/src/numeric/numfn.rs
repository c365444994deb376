//! Numerically realised one-variable functions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::ode::{self, Solution, Tolerances};
use super::weierstrass;
use super::NumericError;
use crate::expr::eval::{EvalError, FnEval, NoFns, NumEnv};
use crate::expr::{Bindings, Expr, FnAtom, Var};

type JetFn = dyn Fn(f64, u32) -> Result<Vec<f64>, EvalError> + Send + Sync;

/// A function of one variable with derivatives up to `max_order`.
#[derive(Clone)]
pub struct NumericFunction {
    pub name: String,
    pub var: Var,
    pub domain: (f64, f64),
    pub max_order: u32,
    pub poles: Vec<f64>,
    /// Queries closer than this to a registered pole are rejected.
    pub guard: f64,
    /// Estimated absolute interpolation error of the values.
    pub error_bound: f64,
    jet: Arc<JetFn>,
}

impl fmt::Debug for NumericFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericFunction")
            .field("name", &self.name)
            .field("var", &self.var)
            .field("domain", &self.domain)
            .field("max_order", &self.max_order)
            .field("poles", &self.poles)
            .finish()
    }
}

impl NumericFunction {
    /// `jet(u, k)` must return `[f(u), f'(u), ..., f^(k)(u)]`.
    pub fn new(
        name: &str,
        var: Var,
        domain: (f64, f64),
        max_order: u32,
        jet: impl Fn(f64, u32) -> Result<Vec<f64>, EvalError> + Send + Sync + 'static,
    ) -> Self {
        NumericFunction {
            name: name.to_string(),
            var,
            domain,
            max_order,
            poles: Vec::new(),
            guard: 0.0,
            error_bound: 0.0,
            jet: Arc::new(jet),
        }
    }

    pub fn with_poles(mut self, poles: Vec<f64>, guard: f64) -> Self {
        self.poles = poles;
        self.guard = guard;
        self
    }

    pub fn with_error_bound(mut self, e: f64) -> Self {
        self.error_bound = e;
        self
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    fn check(&self, u: f64, order: u32) -> Result<(), EvalError> {
        if order > self.max_order {
            return Err(EvalError::OrderTooHigh { name: self.name.clone(), order, max: self.max_order });
        }
        let (a, b) = self.domain;
        let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
        if !(u >= a - slack && u <= b + slack) {
            return Err(EvalError::Numeric(format!("`{}` queried at {u} outside [{a}, {b}]", self.name)));
        }
        if let Some(p) = self.poles.iter().find(|p| (u - **p).abs() < self.guard) {
            return Err(EvalError::NearPole { at: u, pole: *p });
        }
        Ok(())
    }

    /// Values of all derivatives up to `order`.
    pub fn jet(&self, u: f64, order: u32) -> Result<Vec<f64>, EvalError> {
        self.check(u, order)?;
        (self.jet)(u, order)
    }

    pub fn eval(&self, u: f64, order: u32) -> Result<f64, EvalError> {
        Ok(self.jet(u, order)?[order as usize])
    }

    /// Realises a closed-form expression of `var` alone; derivatives are symbolic.
    pub fn from_expr(
        name: &str,
        var: Var,
        e: &Expr,
        consts: &BTreeMap<String, f64>,
        domain: (f64, f64),
        max_order: u32,
    ) -> Result<Self, NumericError> {
        if e.depends_on(var.other()) || !e.fn_atoms().is_empty() {
            return Err(NumericError::Precondition(format!("`{e}` is not a closed-form function of {}", var.name())));
        }
        let mut ders = vec![e.clone()];
        for k in 0..max_order as usize {
            let next = ders[k].diff(var);
            ders.push(next);
        }
        let consts = consts.clone();
        let ders = Arc::new(ders);
        Ok(NumericFunction::new(name, var, domain, max_order, move |u, k| {
            let mut pt = [0.0; 2];
            pt[var.index()] = u;
            let env = NumEnv { u: pt, consts: &consts, fns: &NoFns };
            ders[..=k as usize].iter().map(|d| d.eval_real(&env)).collect()
        }))
    }

    /// `hbar^2 wp(u - u20; g2, g3) + a1` with exact derivative recursion.
    pub fn weierstrass_potential(name: &str, var: Var, p: WeierstrassParams, domain: (f64, f64), max_order: u32) -> Self {
        let poles = p.real_poles_in(domain);
        NumericFunction::new(name, var, domain, max_order, move |u, k| {
            let (w, dw) = weierstrass::wp(u - p.u20, p.g2, p.g3).map_err(|e| match e {
                weierstrass::WpError::NearPole { pole, .. } => EvalError::NearPole { at: u, pole: pole + p.u20 },
                other => EvalError::Numeric(other.to_string()),
            })?;
            let mut d = vec![w, dw];
            for n in 0..(k as usize).saturating_sub(1) {
                let next =
                    if n == 0 { 6.0 * w * w - p.g2 / 2.0 } else { 6.0 * (0..=n).map(|j| binom(n, j) * d[j] * d[n - j]).sum::<f64>() };
                d.push(next);
            }
            d.truncate(k as usize + 1);
            let h2 = p.hbar * p.hbar;
            let mut out: Vec<f64> = d.iter().map(|x| h2 * x).collect();
            out[0] += p.a1;
            Ok(out)
        })
        .with_poles(poles, 1e-6)
        .with_error_bound(1e-12)
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Parameters of a shifted and scaled Weierstrass potential.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct WeierstrassParams {
    pub hbar: f64,
    pub a1: f64,
    pub u20: f64,
    pub g2: f64,
    pub g3: f64,
}

impl WeierstrassParams {
    /// Real poles `u20 + n * omega` in the domain when a real period exists;
    /// the half-period is located by scanning for the zero of `wp'`.
    pub fn real_poles_in(&self, domain: (f64, f64)) -> Vec<f64> {
        let Some(period) = self.real_period() else { return Vec::new() };
        let (a, b) = domain;
        let n0 = ((a - self.u20) / period).floor() as i64;
        let n1 = ((b - self.u20) / period).ceil() as i64;
        (n0..=n1).map(|n| self.u20 + n as f64 * period).filter(|p| *p >= a - 1e-9 && *p <= b + 1e-9).collect()
    }

    /// Smallest real period, if the real axis carries one.
    pub fn real_period(&self) -> Option<f64> {
        // wp' < 0 on (0, omega) and changes sign at the half-period.
        let f = |z: f64| weierstrass::wp(z, self.g2, self.g3).map(|x| x.1);
        let mut z = 0.05;
        let mut prev = f(z).ok()?;
        while z < 50.0 {
            let z2 = z + 0.05;
            let cur = match f(z2) {
                Ok(v) => v,
                Err(_) => return Some(z2),
            };
            if prev < 0.0 && cur >= 0.0 {
                let (mut lo, mut hi) = (z, z2);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid).ok()? < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(lo + hi);
            }
            prev = cur;
            z = z2;
        }
        None
    }
}

/// Named numeric functions, usable as an evaluation environment.
#[derive(Clone, Debug, Default)]
pub struct FnTable {
    fns: BTreeMap<String, NumericFunction>,
}

impl FnTable {
    pub fn new() -> Self {
        FnTable::default()
    }

    pub fn insert(&mut self, f: NumericFunction) {
        self.fns.insert(f.name.clone(), f);
    }

    pub fn with(mut self, f: NumericFunction) -> Self {
        self.insert(f);
        self
    }

    pub fn get(&self, name: &str) -> Option<&NumericFunction> {
        self.fns.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fns.keys().map(|s| s.as_str())
    }

    pub fn poles(&self) -> Vec<f64> {
        self.fns.values().flat_map(|f| f.poles.iter().copied()).collect()
    }
}

impl FnEval for FnTable {
    fn eval_fn(&self, f: &FnAtom, u: [f64; 2]) -> Result<f64, EvalError> {
        let nf = self.fns.get(&*f.name).ok_or_else(|| EvalError::UnboundFn(f.name.to_string()))?;
        if f.d[nf.var.other().index()] > 0 {
            return Ok(0.0);
        }
        nf.eval(u[nf.var.index()], f.d[nf.var.index()])
    }
}

/// One unknown of an explicit ODE system `y^(n) = rhs`.
#[derive(Clone, Debug)]
pub struct OdeUnknown {
    pub name: String,
    pub order: u32,
    pub rhs: Expr,
}

/// Explicit ODE system written with expression right-hand sides.
#[derive(Clone, Debug)]
pub struct ExprOde {
    pub var: Var,
    pub unknowns: Vec<OdeUnknown>,
    pub consts: BTreeMap<String, f64>,
    /// Already-known functions appearing in the right-hand sides.
    pub known: FnTable,
}

struct StateFns<'a> {
    layout: &'a [(String, usize, u32)],
    state: &'a [f64],
    known: &'a FnTable,
}

impl FnEval for StateFns<'_> {
    fn eval_fn(&self, f: &FnAtom, u: [f64; 2]) -> Result<f64, EvalError> {
        if let Some((_, off, n)) = self.layout.iter().find(|(name, _, _)| **name == *f.name) {
            let k = f.order();
            if k < *n {
                return Ok(self.state[off + k as usize]);
            }
            return Err(EvalError::OrderTooHigh { name: f.name.to_string(), order: k, max: n - 1 });
        }
        self.known.eval_fn(f, u)
    }
}

/// Solution of an [`ExprOde`]: one numeric function per unknown.
pub struct OdeResult {
    pub functions: FnTable,
    pub solution: Arc<Solution>,
    /// `(name, state offset, order)` for each unknown.
    pub layout: Vec<(String, usize, u32)>,
}

impl ExprOde {
    fn layout(&self) -> Vec<(String, usize, u32)> {
        let mut off = 0;
        self.unknowns
            .iter()
            .map(|u| {
                let row = (u.name.clone(), off, u.order);
                off += u.order as usize;
                row
            })
            .collect()
    }

    /// Symbolic expressions for derivatives of orders `n .. n + extra` of each unknown,
    /// written in terms of orders below `n`.
    fn derivative_exprs(&self, extra: u32) -> Result<Vec<Vec<Expr>>, NumericError> {
        let mut b = Bindings::new();
        for u in &self.unknowns {
            let mut d = [0, 0];
            d[self.var.index()] = u.order;
            b.bind_fn(&u.name, d, u.rhs.clone())?;
        }
        let mut out = Vec::new();
        for u in &self.unknowns {
            let mut ders = vec![u.rhs.substitute_fixpoint(&b, 16)?];
            for k in 0..extra as usize {
                let next = ders[k].diff(self.var).substitute_fixpoint(&b, 16)?;
                ders.push(next);
            }
            out.push(ders);
        }
        Ok(out)
    }

    /// Integrates from `t_mid` over `[a, b]`; `y_mid` lists, per unknown,
    /// the values of derivatives `0 .. order-1`.
    pub fn solve(
        &self,
        t_mid: f64,
        y_mid: &[f64],
        (a, b): (f64, f64),
        tol: &Tolerances,
        extra_orders: u32,
    ) -> Result<OdeResult, NumericError> {
        let layout = self.layout();
        let dim: usize = layout.iter().map(|l| l.2 as usize).sum();
        if y_mid.len() != dim {
            return Err(NumericError::Precondition(format!("expected {dim} initial values, got {}", y_mid.len())));
        }
        let var = self.var;
        let rhs_exprs: Vec<Expr> = self.unknowns.iter().map(|u| u.rhs.clone()).collect();
        let f = |t: f64, y: &[f64], out: &mut [f64]| -> Result<(), String> {
            let sf = StateFns { layout: &layout, state: y, known: &self.known };
            let mut pt = [0.0; 2];
            pt[var.index()] = t;
            let env = NumEnv { u: pt, consts: &self.consts, fns: &sf };
            for ((_, off, n), rhs) in layout.iter().zip(&rhs_exprs) {
                for k in 0..(*n as usize - 1) {
                    out[off + k] = y[off + k + 1];
                }
                out[off + *n as usize - 1] = rhs.eval_real(&env).map_err(|e| e.to_string())?;
            }
            Ok(())
        };
        let sol = Arc::new(ode::integrate_two_sided(&f, t_mid, y_mid, a, b, tol)?);
        let ders = Arc::new(self.derivative_exprs(extra_orders)?);
        let layout_arc = Arc::new(layout.clone());
        let mut functions = FnTable::new();
        for (i, (name, off, n)) in layout.iter().enumerate() {
            let sol = sol.clone();
            let ders = ders.clone();
            let lay = layout_arc.clone();
            let known = self.known.clone();
            let consts = self.consts.clone();
            let (off, n) = (*off, *n);
            let nf = NumericFunction::new(name, var, (a, b), n + extra_orders, move |u, k| {
                let y = sol.eval(u).ok_or_else(|| EvalError::Numeric(format!("{u} outside the solution domain")))?;
                let mut out: Vec<f64> = y[off..off + (n as usize).min(k as usize + 1)].to_vec();
                if k >= n {
                    let sf = StateFns { layout: &lay, state: &y, known: &known };
                    let mut pt = [0.0; 2];
                    pt[var.index()] = u;
                    let env = NumEnv { u: pt, consts: &consts, fns: &sf };
                    for d in &ders[i][..=(k - n) as usize] {
                        out.push(d.eval_real(&env)?);
                    }
                }
                Ok(out)
            })
            .with_error_bound(10.0 * tol.rtol.max(tol.atol));
            functions.insert(nf);
        }
        Ok(OdeResult { functions, solution: sol, layout })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn weierstrass_potential_matches_degenerate_closed_form() {
        let p = WeierstrassParams { hbar: 1.0, a1: 1.0 / 3.0, u20: 0.0, g2: 4.0 / 3.0, g3: 8.0 / 27.0 };
        let v = NumericFunction::weierstrass_potential("v2", Var::U2, p, (0.2, 3.0), 4);
        for u in [0.5f64, 1.3, 2.2] {
            let s: f64 = u.sin();
            let j = v.jet(u, 2).unwrap();
            assert!((j[0] - 1.0 / (s * s)).abs() < 1e-11);
            let d2 = (6.0 - 4.0 * s * s) / s.powi(4);
            assert!((j[2] - d2).abs() < 1e-9, "{} vs {}", j[2], d2);
        }
        assert!((p.real_period().unwrap() - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn ode_realises_derivatives_beyond_the_state() {
        // W'' = -W with W(0) = 0, W'(0) = 1 is sin.
        let ode = ExprOde {
            var: Var::U2,
            unknowns: vec![OdeUnknown { name: "W".into(), order: 2, rhs: parse("-W").unwrap() }],
            consts: BTreeMap::new(),
            known: FnTable::new(),
        };
        let tol = Tolerances { rtol: 1e-12, atol: 1e-12, ..Tolerances::default() };
        let r = ode.solve(0.0, &[0.0, 1.0], (-1.0, 2.0), &tol, 3).unwrap();
        let w = r.functions.get("W").unwrap();
        let j = w.jet(1.2, 5).unwrap();
        let x: f64 = 1.2;
        let expect = [x.sin(), x.cos(), -x.sin(), -x.cos(), x.sin(), x.cos()];
        for (a, b) in j.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(w.eval(1.2, 6).is_err());
    }
}
