//! End-to-end numeric realisations of the two polar-flat branches.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::fit::{fit_free_constants, FitResult};
use super::numfn::{ExprOde, FnTable, NumericFunction, OdeUnknown, WeierstrassParams};
use super::ode::Tolerances;
use super::residuals::{condition_residuals, ResidualRow};
use super::NumericError;
use crate::catalog::{expected_form_expr, ExpectedForm, COND1, COND2, COND3, COND4};
use crate::expr::eval::EvalError;
use crate::expr::{parse, Atom, Expr, Var};

/// Sampled residual of one named condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedResidual {
    pub name: String,
    pub row: ResidualRow,
}

fn named(names: &[&str], rows: Vec<ResidualRow>) -> Vec<NamedResidual> {
    names.iter().zip(rows).map(|(n, row)| NamedResidual { name: n.to_string(), row }).collect()
}

fn conds(src: &[&str]) -> Result<Vec<Expr>, NumericError> {
    src.iter().map(|s| parse(s).map_err(NumericError::from)).collect()
}

/// `k`-th derivative of `cos(u)` or `sin(u)`.
fn trig_derivative(sine: bool, u: f64, k: u32) -> f64 {
    let shift = if sine { 0.0 } else { std::f64::consts::FRAC_PI_2 };
    (u + shift + k as f64 * std::f64::consts::FRAC_PI_2).sin()
}

/// `base + c1 cos(u) + c2 sin(u)`, renamed to `name`.
fn add_homogeneous(name: &str, base: &NumericFunction, c1: f64, c2: f64) -> NumericFunction {
    let b = base.clone();
    NumericFunction::new(name, base.var, base.domain, base.max_order, move |u, k| {
        let mut j = b.jet(u, k)?;
        for (n, x) in j.iter_mut().enumerate() {
            *x += c1 * trig_derivative(false, u, n as u32) + c2 * trig_derivative(true, u, n as u32);
        }
        Ok(j)
    })
    .with_poles(base.poles.clone(), base.guard)
    .with_error_bound(base.error_bound)
}

/// `factor * base`.
pub fn scaled(base: &NumericFunction, factor: f64) -> NumericFunction {
    let b = base.clone();
    NumericFunction::new(&base.name, base.var, base.domain, base.max_order, move |u, k| {
        Ok(b.jet(u, k)?.into_iter().map(|x| factor * x).collect::<Vec<f64>>())
    })
    .with_poles(base.poles.clone(), base.guard)
    .with_error_bound(base.error_bound * factor.abs())
}

/// Residual of `hbar^2 v''' - 12 v v' + 12 a1 v' = 0` for
/// `v = hbar^2 wp(u2 - u20) + a1`.
pub fn weierstrass_ode_residual(p: &WeierstrassParams, domain: (f64, f64), samples: usize) -> Result<ResidualRow, NumericError> {
    let v2 = NumericFunction::weierstrass_potential("v2", Var::U2, *p, domain, 3);
    let consts = BTreeMap::from([("hbar".to_string(), p.hbar), ("a1".to_string(), p.a1)]);
    let ode = expected_form_expr(ExpectedForm::Weierstrass).map_err(|e| NumericError::Precondition(e.to_string()))?;
    Ok(condition_residuals(&[ode], &consts, &FnTable::new().with(v2), Var::U2, domain, samples)?.remove(0))
}

#[derive(Clone, Debug)]
pub struct WeierstrassBranchConfig {
    pub params: WeierstrassParams,
    pub a4: f64,
    pub domain: (f64, f64),
    pub samples: usize,
    /// Factor applied to `v2` after construction; `1` for the exact potential.
    pub perturb: f64,
    pub tol: Tolerances,
}

impl Default for WeierstrassBranchConfig {
    /// `hbar = 1`, `g2 = 4`, `g3 = 0`, `a1 = u20 = 0`, `a4 = 1` on the
    /// pole-free interval `[0.5, 1.5]`.
    fn default() -> Self {
        WeierstrassBranchConfig {
            params: WeierstrassParams { hbar: 1.0, a1: 0.0, u20: 0.0, g2: 4.0, g3: 0.0 },
            a4: 1.0,
            domain: (0.5, 1.5),
            samples: super::residuals::DEFAULT_SAMPLES,
            perturb: 1.0,
            tol: Tolerances::default(),
        }
    }
}

/// Realisation of the `a4 != 0` branch.
#[derive(Clone, Debug)]
pub struct WeierstrassBranchRun {
    pub ode: ResidualRow,
    /// `cond1`..`cond4` after fitting the homogeneous part of `U1`.
    pub conditions: Vec<NamedResidual>,
    pub fit: FitResult,
    pub consts: BTreeMap<String, f64>,
    pub fns: FnTable,
}

/// Builds `v2` from `wp`, `U2` from the once-integrated `cond1`
/// (`U2' = -(a4 v2 - 3 a4 a1)/2`), `U1` from `cond3` with its homogeneous
/// part fitted to `cond4`, and samples all four conditions.
pub fn weierstrass_branch(cfg: &WeierstrassBranchConfig) -> Result<WeierstrassBranchRun, NumericError> {
    let p = cfg.params;
    let exact = NumericFunction::weierstrass_potential("v2", Var::U2, p, cfg.domain, 6);
    let v2 = if cfg.perturb == 1.0 { exact } else { scaled(&exact, cfg.perturb) };
    let consts = BTreeMap::from([("hbar".to_string(), p.hbar), ("a1".to_string(), p.a1), ("a4".to_string(), cfg.a4)]);
    let ode_row = {
        let ode = expected_form_expr(ExpectedForm::Weierstrass).map_err(|e| NumericError::Precondition(e.to_string()))?;
        condition_residuals(&[ode], &consts, &FnTable::new().with(v2.clone()), Var::U2, cfg.domain, cfg.samples)?.remove(0)
    };
    let known = FnTable::new().with(v2.clone());
    let mid = 0.5 * (cfg.domain.0 + cfg.domain.1);
    let u2 = ExprOde {
        var: Var::U2,
        unknowns: vec![OdeUnknown { name: "U2".into(), order: 1, rhs: parse("-(a4*v2 - 3*a4*a1)/2")? }],
        consts: consts.clone(),
        known: known.clone(),
    }
    .solve(mid, &[0.0], cfg.domain, &cfg.tol, 3)?;
    let u1 = ExprOde {
        var: Var::U2,
        unknowns: vec![OdeUnknown { name: "U1".into(), order: 2, rhs: parse("8*v2*cos(u2) + 4*D[v2,u2,1]*sin(u2) - U1")? }],
        consts: consts.clone(),
        known: known.clone(),
    }
    .solve(mid, &[0.0, 0.0], cfg.domain, &cfg.tol, 1)?;
    let u1p = u1.functions.get("U1").expect("solved").clone();
    let mut fns = known.with(u2.functions.get("U2").expect("solved").clone()).with(u1p.clone());
    let (fit, rows) = fit_u1_and_sample(&conds(&[COND1, COND2, COND3, COND4])?, &consts, &mut fns, &u1p, cfg.domain, cfg.samples)?;
    Ok(WeierstrassBranchRun { ode: ode_row, conditions: named(&["cond1", "cond2", "cond3", "cond4"], rows), fit, consts, fns })
}

/// Fits `c1, c2` in `U1 + c1 cos + c2 sin` against the last condition,
/// installs the fitted `U1` in `fns` and samples every condition.
fn fit_u1_and_sample(
    all: &[Expr],
    consts: &BTreeMap<String, f64>,
    fns: &mut FnTable,
    u1p: &NumericFunction,
    domain: (f64, f64),
    samples: usize,
) -> Result<(FitResult, Vec<ResidualRow>), NumericError> {
    let shifted = parse("U1 + c1*cos(u2) + c2*sin(u2)")?;
    let target = all.last().expect("conditions").subs_fn("U1", [0, 0], &shifted)?;
    // A rank-deficient pair leaves one direction free; fit the other alone.
    let mut fit = None;
    for names in [&["c1", "c2"][..], &["c2"], &["c1"]] {
        let mut t = target.clone();
        for other in ["c1", "c2"].iter().filter(|n| !names.contains(n)) {
            t = t.subs_const(other, &Expr::zero())?;
        }
        match fit_free_constants(&[t], names, consts, fns, Var::U2, domain, samples) {
            Ok(f) => {
                fit = Some(f);
                break;
            }
            Err(NumericError::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let fit = fit.ok_or_else(|| NumericError::Precondition("homogeneous part of U1 is not identifiable".into()))?;
    let value = |n: &str| fit.names.iter().position(|m| m == n).map_or(0.0, |i| fit.values[i]);
    fns.insert(add_homogeneous("U1", u1p, value("c1"), value("c2")));
    let rows = condition_residuals(all, consts, fns, Var::U2, domain, samples)?;
    Ok((fit, rows))
}

/// `PVI` solved for its highest derivative of `W`.
pub fn pvi_explicit() -> Result<Expr, NumericError> {
    let e = expected_form_expr(ExpectedForm::Pvi).map_err(|e| NumericError::Precondition(e.to_string()))?;
    let top = e.fn_atoms().into_iter().find(|f| &*f.name == "W" && f.d[1] == 4).expect("fourth derivative present");
    let poly = e.as_poly_in(&Atom::Fn(top));
    let lead = poly.get(&1).cloned().unwrap_or_default();
    let rest = poly.get(&0).cloned().unwrap_or_default();
    Ok((&(-rest) * &lead.recip()?).normalize())
}

#[derive(Clone, Debug)]
pub struct PviBranchConfig {
    pub hbar: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Constant value of `U2`.
    pub u2_value: f64,
    pub domain: (f64, f64),
    pub t_mid: f64,
    /// `W, W', W'', W'''` at `t_mid`.
    pub w_mid: [f64; 4],
    pub samples: usize,
    pub tol: Tolerances,
}

impl PviBranchConfig {
    /// Seeded constants and initial data: `beta1, beta2` and `U2` uniform in
    /// `[-1, 1]`, the jet of `W` at `pi/2` uniform in `[-0.5, 0.5]`, on
    /// `[pi/4, 3 pi/4]`. The integration tolerance is `1e-12` because the
    /// top derivative of `W` is read from the interpolant.
    pub fn seeded(seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let quarter = std::f64::consts::FRAC_PI_4;
        PviBranchConfig {
            hbar: 1.0,
            beta1: rng.gen_range(-1.0..1.0),
            beta2: rng.gen_range(-1.0..1.0),
            u2_value: rng.gen_range(-1.0..1.0),
            domain: (quarter, 3.0 * quarter),
            t_mid: 2.0 * quarter,
            w_mid: std::array::from_fn(|_| rng.gen_range(-0.5..0.5)),
            samples: super::residuals::DEFAULT_SAMPLES,
            tol: Tolerances { rtol: 1e-12, atol: 1e-12, ..Tolerances::default() },
        }
    }
}

/// Realisation of the `a4 = 0` branch.
#[derive(Clone, Debug)]
pub struct PviBranchRun {
    /// Residual of the W-equation on the dense output, with the top
    /// derivative taken from the interpolant.
    pub equation: ResidualRow,
    pub conditions: Vec<NamedResidual>,
    pub fit: FitResult,
    /// Largest deviation of the fitted `U1` from
    /// `4 W sin + k3 cos + k4 sin` with `k3 = -4 (beta1 + hbar^2)`, `k4 = -4 beta2`.
    pub u1_closed_form_gap: f64,
    pub consts: BTreeMap<String, f64>,
    pub fns: FnTable,
}

/// Integrates the W-equation, builds `U1` from `cond3` with the homogeneous
/// part fitted to `cond4`, keeps `U2` constant and samples `cond1`..`cond4`
/// with `v2 = W'`.
pub fn pvi_branch(cfg: &PviBranchConfig) -> Result<PviBranchRun, NumericError> {
    let consts = BTreeMap::from([
        ("hbar".to_string(), cfg.hbar),
        ("beta1".to_string(), cfg.beta1),
        ("beta2".to_string(), cfg.beta2),
        ("a4".to_string(), 0.0),
        ("b0".to_string(), cfg.u2_value),
    ]);
    let w = ExprOde {
        var: Var::U2,
        unknowns: vec![OdeUnknown { name: "W".into(), order: 4, rhs: pvi_explicit()? }],
        consts: consts.clone(),
        known: FnTable::new(),
    }
    .solve(cfg.t_mid, &cfg.w_mid, cfg.domain, &cfg.tol, 1)?;
    let wf = w.functions.get("W").expect("solved").clone();
    let pvi = expected_form_expr(ExpectedForm::Pvi).map_err(|e| NumericError::Precondition(e.to_string()))?;
    // W'''' taken from the derivative of the dense interpolant, not the right-hand side.
    let sol = w.solution.clone();
    let dense = NumericFunction::new("W", Var::U2, cfg.domain, 4, move |u, k| {
        let (y, dy) = sol.eval_with_derivative(u).ok_or_else(|| EvalError::Numeric(format!("{u} outside the solution domain")))?;
        let mut out = y[..(k as usize + 1).min(4)].to_vec();
        if k == 4 {
            out.push(dy[3]);
        }
        Ok(out)
    });
    let equation = condition_residuals(&[pvi], &consts, &FnTable::new().with(dense), Var::U2, cfg.domain, cfg.samples)?.remove(0);
    let mut fns = FnTable::new().with(wf.clone());
    let u1 = ExprOde {
        var: Var::U2,
        unknowns: vec![OdeUnknown { name: "U1".into(), order: 2, rhs: parse("8*D[W,u2,1]*cos(u2) + 4*D[W,u2,2]*sin(u2) - U1")? }],
        consts: consts.clone(),
        known: fns.clone(),
    }
    .solve(cfg.t_mid, &[0.0, 0.0], cfg.domain, &cfg.tol, 1)?;
    let u1p = u1.functions.get("U1").expect("solved").clone();
    fns.insert(u1p.clone());
    let v2 = parse("D[W,u2,1]")?;
    let u2 = parse("b0")?;
    let all: Vec<Expr> = conds(&[COND1, COND2, COND3, COND4])?
        .into_iter()
        .map(|c| c.subs_fn("v2", [0, 0], &v2)?.subs_fn("U2", [0, 0], &u2))
        .collect::<Result<_, _>>()?;
    let (fit, rows) = fit_u1_and_sample(&all, &consts, &mut fns, &u1p, cfg.domain, cfg.samples)?;
    let k3 = -4.0 * (cfg.beta1 + cfg.hbar * cfg.hbar);
    let k4 = -4.0 * cfg.beta2;
    let u1f = fns.get("U1").expect("installed").clone();
    let mut gap: f64 = 0.0;
    for t in super::residuals::sample_points(cfg.domain, cfg.samples) {
        let closed = 4.0 * wf.eval(t, 0)? * t.sin() + k3 * t.cos() + k4 * t.sin();
        gap = gap.max((u1f.eval(t, 0)? - closed).abs());
    }
    Ok(PviBranchRun { equation, conditions: named(&["cond1", "cond2", "cond3", "cond4"], rows), fit, u1_closed_form_gap: gap, consts, fns })
}

/// Lattice `g2 = 4/3, g3 = 8/27` with `a1 = hbar^2/3`, where
/// `v2 = hbar^2 / sin^2(u2)` and all four polar conditions hold.
pub fn trigonometric_lattice(hbar: f64) -> WeierstrassParams {
    WeierstrassParams { hbar, a1: hbar * hbar / 3.0, u20: 0.0, g2: 4.0 / 3.0, g3: 8.0 / 27.0 }
}

/// Ladder of square grids on `u1 in [-0.75, 0.75]`, `u2 in [0.45, pi - 0.45]`.
/// Node counts `31, 41, 51` share 25 interior points.
pub fn default_ladder(order: usize) -> Vec<super::grid::GridSpec> {
    let u2 = (0.45, std::f64::consts::PI - 0.45);
    [31, 41, 51].iter().map(|&n| super::grid::GridSpec { u1: (-0.75, 0.75), u2, nodes: [n, n], order }).collect()
}

/// Grid-study configuration for a Weierstrass-branch realisation: the
/// candidate's free constants `a3, a5` are added and `cond1..cond4` are
/// the precondition.
pub fn weierstrass_grid_config(
    run: &WeierstrassBranchRun,
    a3: f64,
    a5: f64,
    seed: u64,
) -> Result<super::grid::GridCheckConfig, NumericError> {
    let mut consts = run.consts.clone();
    consts.insert("a3".into(), a3);
    consts.insert("a5".into(), a5);
    Ok(super::grid::GridCheckConfig {
        consts,
        fns: run.fns.clone(),
        conditions: conds(&[COND1, COND2, COND3, COND4])?,
        precondition_tol: 1e-6,
        test_functions: 10,
        seed,
        margin: 9,
        rounding_floor: 1e-8,
        rate_tolerance: 0.2,
    })
}

/// `f'` renamed to `name`.
fn derivative_of(base: &NumericFunction, name: &str) -> NumericFunction {
    let b = base.clone();
    NumericFunction::new(name, base.var, base.domain, base.max_order.saturating_sub(1), move |u, k| Ok(b.jet(u, k + 1)?[1..].to_vec()))
        .with_poles(base.poles.clone(), base.guard)
        .with_error_bound(base.error_bound)
}

fn constant_fn(name: &str, var: Var, domain: (f64, f64), value: f64) -> NumericFunction {
    NumericFunction::new(name, var, domain, 16, move |_, k| {
        let mut j = vec![0.0; k as usize + 1];
        j[0] = value;
        Ok(j)
    })
}

/// Grid-study configuration for a Painleve-branch realisation, with
/// `v2 = W'` and `U2` the constant `b0`.
pub fn pvi_grid_config(run: &PviBranchRun, a3: f64, a5: f64, seed: u64) -> Result<super::grid::GridCheckConfig, NumericError> {
    let w = run.fns.get("W").expect("solved");
    let mut fns = FnTable::new().with(derivative_of(w, "v2")).with(run.fns.get("U1").expect("solved").clone());
    fns.insert(constant_fn("U2", Var::U2, w.domain, run.consts["b0"]));
    let mut consts = run.consts.clone();
    consts.insert("a3".into(), a3);
    consts.insert("a5".into(), a5);
    Ok(super::grid::GridCheckConfig {
        consts,
        fns,
        conditions: conds(&[COND1, COND2, COND3, COND4])?,
        precondition_tol: 1e-6,
        test_functions: 10,
        seed,
        margin: 9,
        rounding_floor: 1e-8,
        rate_tolerance: 0.2,
    })
}

/// [`default_ladder`] with `u2` restricted to `u2`.
pub fn ladder_on(u2: (f64, f64), order: usize) -> Vec<super::grid::GridSpec> {
    default_ladder(order).into_iter().map(|g| super::grid::GridSpec { u2, ..g }).collect()
}
