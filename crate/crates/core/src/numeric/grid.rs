//! Finite-difference evaluation of `[H, L]` on tensor grids and the
//! associated convergence study.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::numfn::FnTable;
use super::residuals::{condition_residuals, ResidualRow, DEFAULT_SAMPLES};
use super::stencil::{central, half_width};
use super::NumericError;
use crate::catalog::CatalogEntry;
use crate::diffop::{abc_from_fg, build_hamiltonian, build_l2, recover_d, DMode, DiffOp, NumericDConfig, RecoveredD};
use crate::expr::eval::NumEnv;
use crate::expr::{Bindings, Expr, Var};

/// Rectangle in `(u1, u2)` with node counts and finite-difference order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub u1: (f64, f64),
    pub u2: (f64, f64),
    pub nodes: [usize; 2],
    pub order: usize,
}

impl GridSpec {
    pub fn spacing(&self) -> [f64; 2] {
        [(self.u1.1 - self.u1.0) / (self.nodes[0] - 1) as f64, (self.u2.1 - self.u2.0) / (self.nodes[1] - 1) as f64]
    }

    fn axis(&self, k: usize) -> Vec<f64> {
        let (a, _) = if k == 0 { self.u1 } else { self.u2 };
        let h = self.spacing()[k];
        (0..self.nodes[k]).map(|i| a + h * i as f64).collect()
    }
}

/// Operator whose commutator with `H` is studied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridOperator {
    /// The third-order candidate in standard form with `D` by quadrature.
    Candidate,
    /// `H` itself: the discrete commutator vanishes to rounding.
    Hamiltonian,
    /// The separation operator `L2`.
    L2,
}

#[derive(Clone, Debug)]
pub struct GridCheckConfig {
    pub consts: BTreeMap<String, f64>,
    pub fns: FnTable,
    /// Conditions that must hold before the study is run.
    pub conditions: Vec<Expr>,
    pub precondition_tol: f64,
    pub test_functions: usize,
    pub seed: u64,
    /// Interior margin in nodes of the coarsest grid.
    pub margin: usize,
    /// Residuals below this are treated as exact zeros.
    pub rounding_floor: f64,
    /// Allowed relative deviation of the observed rate from the order.
    pub rate_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridLevel {
    pub nodes: [usize; 2],
    pub h: [f64; 2],
    /// Largest interior residual over all test functions.
    pub residual: f64,
    pub per_function: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub operator: GridOperator,
    pub order: usize,
    pub precondition: Vec<ResidualRow>,
    pub levels: Vec<GridLevel>,
    /// Rates between consecutive levels of the worst-case residual.
    pub rates: Vec<f64>,
    /// Per test function, rates between consecutive levels.
    pub function_rates: Vec<Vec<f64>>,
    pub monotone: bool,
    /// All residuals are below the rounding floor.
    pub exact: bool,
    pub passed: bool,
}

/// Grid function with the index box on which it is valid.
#[derive(Clone, Debug)]
struct Field {
    n: [usize; 2],
    data: Vec<f64>,
    lo: [usize; 2],
    hi: [usize; 2],
}

impl Field {
    fn full(n: [usize; 2], data: Vec<f64>) -> Self {
        Field { n, data, lo: [0, 0], hi: n }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n[1] + j]
    }

    fn deriv(&self, axis: usize, d: usize, p: usize, h: f64) -> Field {
        if d == 0 {
            return self.clone();
        }
        let w = central(d, p);
        let r = half_width(d, p);
        let scale = h.powi(d as i32);
        let mut lo = self.lo;
        let mut hi = self.hi;
        lo[axis] += r;
        hi[axis] = hi[axis].saturating_sub(r).max(lo[axis]);
        let mut data = vec![0.0; self.data.len()];
        for i in lo[0]..hi[0] {
            for j in lo[1]..hi[1] {
                let mut s = 0.0;
                for (k, wk) in w.iter().enumerate() {
                    let (ii, jj) = if axis == 0 { (i + k - r, j) } else { (i, j + k - r) };
                    s += wk * self.at(ii, jj);
                }
                data[i * self.n[1] + j] = s / scale;
            }
        }
        Field { n: self.n, data, lo, hi }
    }

    fn zero_like(&self) -> Field {
        Field { n: self.n, data: vec![0.0; self.data.len()], lo: [0, 0], hi: self.n }
    }

    /// `self + c * x` on the common valid box.
    fn add_scaled(&mut self, c: &[f64], x: &Field, sign: f64) {
        for k in 0..2 {
            self.lo[k] = self.lo[k].max(x.lo[k]);
            self.hi[k] = self.hi[k].min(x.hi[k]).max(self.lo[k]);
        }
        for i in self.lo[0]..self.hi[0] {
            for j in self.lo[1]..self.hi[1] {
                let idx = i * self.n[1] + j;
                self.data[idx] += sign * c[idx] * x.data[idx];
            }
        }
    }
}

fn eval_on_grid(e: &Expr, u1s: &[f64], u2s: &[f64], consts: &BTreeMap<String, f64>, fns: &FnTable) -> Result<Vec<f64>, NumericError> {
    let mut out = Vec::with_capacity(u1s.len() * u2s.len());
    for &x in u1s {
        for &y in u2s {
            out.push(e.eval_real(&NumEnv { u: [x, y], consts, fns })?);
        }
    }
    Ok(out)
}

/// Operator without `H, L` parameters, with coefficients sampled on a grid.
struct PlainOp {
    terms: Vec<((usize, usize), Vec<f64>)>,
}

impl PlainOp {
    fn new(op: &DiffOp, u1s: &[f64], u2s: &[f64], consts: &BTreeMap<String, f64>, fns: &FnTable) -> Result<Self, NumericError> {
        let mut terms = Vec::new();
        for (k, c) in op.terms() {
            if !k.is_plain() {
                return Err(NumericError::Precondition("operator carries H/L parameters".into()));
            }
            terms.push(((k.a as usize, k.b as usize), eval_on_grid(c, u1s, u2s, consts, fns)?));
        }
        Ok(PlainOp { terms })
    }

    fn apply(&self, f: &Field, p: usize, h: [f64; 2]) -> Field {
        let mut out = f.zero_like();
        for ((a, b), c) in &self.terms {
            let g = f.deriv(0, *a, p, h[0]).deriv(1, *b, p, h[1]);
            out.add_scaled(c, &g, 1.0);
        }
        out
    }
}

/// `sum_jk (A_jk d1 d2 - B_jk d1 - C_jk d2 + D_jk) H^j L^k`.
struct StandardOp {
    comps: Vec<((u32, u32), [Vec<f64>; 4])>,
    h: PlainOp,
    l: PlainOp,
}

impl StandardOp {
    fn apply(&self, f: &Field, p: usize, h: [f64; 2]) -> Field {
        let mut out = f.zero_like();
        for ((j, k), [a, b, c, d]) in &self.comps {
            let mut q = f.clone();
            for _ in 0..*k {
                q = self.l.apply(&q, p, h);
            }
            for _ in 0..*j {
                q = self.h.apply(&q, p, h);
            }
            let q1 = q.deriv(0, 1, p, h[0]);
            out.add_scaled(a, &q1.deriv(1, 1, p, h[1]), 1.0);
            out.add_scaled(b, &q1, -1.0);
            out.add_scaled(c, &q.deriv(1, 1, p, h[1]), -1.0);
            out.add_scaled(d, &q, 1.0);
        }
        out
    }
}

enum Tested {
    Plain(PlainOp),
    Standard(StandardOp),
}

impl Tested {
    fn apply(&self, f: &Field, p: usize, h: [f64; 2]) -> Field {
        match self {
            Tested::Plain(o) => o.apply(f, p, h),
            Tested::Standard(o) => o.apply(f, p, h),
        }
    }
}

/// Smooth test function `exp(a u1 + b u2) sin(c u1 + d u2 + phi)`.
#[derive(Clone, Copy, Debug)]
struct TestFn([f64; 5]);

impl TestFn {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        TestFn([
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(0.5..1.5),
            rng.gen_range(0.5..1.5),
            rng.gen_range(0.0..std::f64::consts::TAU),
        ])
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let [a, b, c, d, phi] = self.0;
        (a * x + b * y).exp() * (c * x + d * y + phi).sin()
    }
}

fn build_tested(
    entry: &CatalogEntry,
    cfg: &GridCheckConfig,
    which: GridOperator,
    spec: &GridSpec,
    u1s: &[f64],
    u2s: &[f64],
) -> Result<Tested, NumericError> {
    let geo = &entry.geometry;
    let pot = &entry.potential;
    let hop = build_hamiltonian(geo, pot)?;
    let lop = build_l2(geo, pot)?;
    let plain = |op: &DiffOp| PlainOp::new(op, u1s, u2s, &cfg.consts, &cfg.fns);
    match which {
        GridOperator::Hamiltonian => Ok(Tested::Plain(plain(&hop)?)),
        GridOperator::L2 => Ok(Tested::Plain(plain(&lop)?)),
        GridOperator::Candidate => {
            let ans = entry.candidate.ansatz();
            let (f, g) = (ans.f_poly(), ans.g_poly());
            let mid = [0.5 * (spec.u1.0 + spec.u1.1), 0.5 * (spec.u2.0 + spec.u2.1)];
            let check_points = vec![mid, [spec.u1.0, spec.u2.0], [spec.u1.1, spec.u2.1], [spec.u1.0, spec.u2.1], [spec.u1.1, spec.u2.0]];
            let mode = DMode::Numeric(NumericDConfig {
                base: mid,
                consts: cfg.consts.clone(),
                fns: cfg.fns.clone(),
                check_points,
                tolerance: cfg.precondition_tol,
            });
            let RecoveredD::Numeric(nd) = recover_d(&f, &g, geo, pot, &Bindings::new(), &mode)? else { unreachable!("numeric mode") };
            let (a, b, c) = abc_from_fg(&f, &g);
            let (a, b, c) = (a.collect_hl()?, b.collect_hl()?, c.collect_hl()?);
            let mut keys: Vec<(u32, u32)> = a.keys().chain(b.keys()).chain(c.keys()).chain(nd.components.keys()).copied().collect();
            keys.sort();
            keys.dedup();
            let mut comps = Vec::new();
            for jk in keys {
                let get = |m: &BTreeMap<(u32, u32), Expr>| m.get(&jk).cloned().unwrap_or_default();
                let dgrid = nd.eval_grid(jk, u1s, u2s)?;
                comps.push((
                    jk,
                    [
                        eval_on_grid(&get(&a), u1s, u2s, &cfg.consts, &cfg.fns)?,
                        eval_on_grid(&get(&b), u1s, u2s, &cfg.consts, &cfg.fns)?,
                        eval_on_grid(&get(&c), u1s, u2s, &cfg.consts, &cfg.fns)?,
                        dgrid.into_iter().flatten().collect(),
                    ],
                ));
            }
            Ok(Tested::Standard(StandardOp { comps, h: plain(&hop)?, l: plain(&lop)? }))
        }
    }
}

/// Applies `H(L psi) - L(H psi)` on each grid to random test functions and
/// reports interior residuals with empirical convergence rates. Residuals
/// are measured at the nodes that all levels share, at least `margin`
/// coarse nodes away from the boundary.
pub fn grid_commutator_check(
    entry: &CatalogEntry,
    cfg: &GridCheckConfig,
    grids: &[GridSpec],
    which: GridOperator,
) -> Result<ConvergenceReport, NumericError> {
    let Some(first) = grids.first() else { return Err(NumericError::Precondition("empty grid ladder".into())) };
    let order = first.order;
    if grids.iter().any(|g| g.order != order || g.u1 != first.u1 || g.u2 != first.u2) {
        return Err(NumericError::Precondition("grid ladder must share rectangle and order".into()));
    }
    let precondition = if cfg.conditions.is_empty() {
        Vec::new()
    } else {
        condition_residuals(&cfg.conditions, &cfg.consts, &cfg.fns, Var::U2, first.u2, DEFAULT_SAMPLES)?
    };
    if let Some(bad) = precondition.iter().find(|r| r.max_abs > cfg.precondition_tol) {
        return Err(NumericError::Precondition(format!("condition residual {:e} at u2 = {}", bad.max_abs, bad.at)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tests: Vec<TestFn> = (0..cfg.test_functions).map(|_| TestFn::random(&mut rng)).collect();
    // Coarse-grid interior nodes shared by every level, per axis.
    let common: Vec<Vec<usize>> = (0..2)
        .map(|ax| {
            let m0 = first.nodes[ax] - 1;
            (cfg.margin..=m0.saturating_sub(cfg.margin)).filter(|i| grids.iter().all(|g| (i * (g.nodes[ax] - 1)) % m0 == 0)).collect()
        })
        .collect();
    if common.iter().any(|c| c.is_empty()) {
        return Err(NumericError::Precondition("no interior nodes shared by all grid levels".into()));
    }
    let mut levels = Vec::new();
    for spec in grids {
        let (u1s, u2s) = (spec.axis(0), spec.axis(1));
        let h = spec.spacing();
        let tested = build_tested(entry, cfg, which, spec, &u1s, &u2s)?;
        let hop = PlainOp::new(&build_hamiltonian(&entry.geometry, &entry.potential)?, &u1s, &u2s, &cfg.consts, &cfg.fns)?;
        let mut per_function = Vec::new();
        for t in &tests {
            let data: Vec<f64> = u1s.iter().flat_map(|&x| u2s.iter().map(move |&y| t.eval(x, y))).collect();
            let psi = Field::full(spec.nodes, data);
            let hl = hop.apply(&tested.apply(&psi, order, h), order, h);
            let lh = tested.apply(&hop.apply(&psi, order, h), order, h);
            let mut worst: f64 = 0.0;
            for &i0 in &common[0] {
                for &j0 in &common[1] {
                    let i = i0 * (spec.nodes[0] - 1) / (first.nodes[0] - 1);
                    let j = j0 * (spec.nodes[1] - 1) / (first.nodes[1] - 1);
                    let valid = |f: &Field| i >= f.lo[0] && i < f.hi[0] && j >= f.lo[1] && j < f.hi[1];
                    if !valid(&hl) || !valid(&lh) {
                        return Err(NumericError::Precondition(format!("interior node ({}, {}) lacks stencil support", u1s[i], u2s[j])));
                    }
                    worst = worst.max((hl.at(i, j) - lh.at(i, j)).abs());
                }
            }
            per_function.push(worst);
        }
        let residual = per_function.iter().fold(0.0f64, |m, r| m.max(*r));
        levels.push(GridLevel { nodes: spec.nodes, h, residual, per_function });
    }
    let rate = |a: f64, b: f64, ha: f64, hb: f64| (a / b).ln() / (ha / hb).ln();
    let rates: Vec<f64> = levels.windows(2).map(|w| rate(w[0].residual, w[1].residual, w[0].h[1], w[1].h[1])).collect();
    let function_rates: Vec<Vec<f64>> = (0..tests.len())
        .map(|k| levels.windows(2).map(|w| rate(w[0].per_function[k], w[1].per_function[k], w[0].h[1], w[1].h[1])).collect())
        .collect();
    let monotone = levels.windows(2).all(|w| w[1].residual < w[0].residual);
    let exact = levels.iter().all(|l| l.residual <= cfg.rounding_floor);
    let p = order as f64;
    let in_band = |r: &f64| (r - p).abs() <= cfg.rate_tolerance * p;
    let converging = levels.len() >= 2 && monotone && function_rates.iter().flatten().all(in_band);
    let passed = match which {
        GridOperator::Hamiltonian => exact,
        GridOperator::L2 => exact || converging,
        GridOperator::Candidate => converging,
    };
    Ok(ConvergenceReport { operator: which, order, precondition, levels, rates, function_rates, monotone, exact, passed })
}
