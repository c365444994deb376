//! Case-by-case elimination of `U1, U2` from a condition set, ending in a
//! single nonlinear ODE for the potential.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::forms::{match_expected, FormMatch};
use super::linsolve::{solve_affine, solve_affine_general, structural_coefficients};
use super::rules::{leader, linear_constant_split, solve_linear, UNKNOWNS};
use super::{Result, VerifyError};
use crate::catalog::{BranchSpec, ConditionSet, ExpectedForm};
use crate::expr::{Atom, Bindings, Coeff, Deps, Expr, FnAtom, LinForm, Monomial, Var};

/// Bound on elimination steps.
pub const MAX_STEPS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchOutcome {
    pub branch: BranchSpec,
    /// Unknown of the final equation (`W` with `v2 = W'`, or `v2`).
    pub target: String,
    pub steps: Vec<String>,
    /// Explicit solutions such as `U1 -> ...`.
    pub solved: BTreeMap<String, Expr>,
    /// Rules `U^(k) -> ...` for unknowns that were not solved explicitly.
    pub rules: BTreeMap<String, (u32, Expr)>,
    pub integration_constants: Vec<String>,
    pub final_equation: Expr,
    /// Identification with the expected reference form, if it succeeds.
    pub form: Option<FormMatch>,
    /// Conditions left after the final equation was found.
    pub remaining: Vec<Expr>,
}

impl BranchOutcome {
    pub fn matched(&self) -> bool {
        self.form.is_some()
    }
}

pub fn target_for(form: ExpectedForm) -> &'static str {
    match form {
        ExpectedForm::Weierstrass => "v2",
        ExpectedForm::Pvi | ExpectedForm::HorocyclicNonlinear => "W",
    }
}

struct Elim {
    conds: Vec<Expr>,
    target: String,
    solved: BTreeMap<String, Expr>,
    rules: BTreeMap<String, (u32, Expr)>,
    introduced: Vec<String>,
    taken: BTreeSet<String>,
    steps: Vec<String>,
}

fn fn_named(a: &Atom, name: &str) -> bool {
    a.as_fn().map_or(false, |f| &*f.name == name)
}

fn has_unknowns(e: &Expr) -> bool {
    e.fn_atoms().iter().any(|f| UNKNOWNS.contains(&&*f.name))
}

fn u2_fn(name: &str, k: u32) -> Expr {
    Expr::fn_deriv(name, Deps::U2, [0, k])
}

impl Elim {
    fn fresh(&mut self) -> String {
        let mut i = 1;
        loop {
            let n = format!("k{i}");
            if !self.taken.contains(&n) {
                self.taken.insert(n.clone());
                self.introduced.push(n.clone());
                return n;
            }
            i += 1;
        }
    }

    fn apply(&mut self, b: &Bindings) -> Result<()> {
        let mut out = Vec::new();
        for c in &self.conds {
            let r = c.substitute_fixpoint(b, 32)?.numerator();
            if !r.is_empty() {
                out.push(r);
            }
        }
        self.conds = out;
        for (_, rhs) in self.rules.values_mut() {
            *rhs = rhs.substitute_fixpoint(b, 32)?.normalize();
        }
        for e in self.solved.values_mut() {
            *e = e.substitute_fixpoint(b, 32)?.normalize();
        }
        Ok(())
    }

    fn set_const(&mut self, name: &str, v: Expr) -> Result<()> {
        self.steps.push(format!("{name} = {v}"));
        let b = Bindings::new().with_const(name, v.clone());
        self.solved.insert(name.to_string(), v);
        self.apply(&b)
    }

    fn set_explicit(&mut self, name: &str, e: Expr) -> Result<()> {
        if let Some((k, rhs)) = self.rules.remove(name) {
            // the old rule becomes a condition on the explicit solution
            self.conds.push((&e.diff_n(Var::U2, k) - &rhs).numerator());
        }
        self.steps.push(format!("{name} = {e}"));
        let b = Bindings::new().with_fn(name, [0, 0], e.clone());
        self.solved.insert(name.to_string(), e);
        self.apply(&b)
    }

    fn add_rule(&mut self, name: &str, k: u32, rhs: Expr) -> Result<()> {
        self.steps.push(format!("D[{name},u2,{k}] -> {rhs}"));
        let b = Bindings::new().with_fn(name, [0, k], rhs.clone());
        self.apply(&b)?;
        self.rules.insert(name.to_string(), (k, rhs));
        Ok(())
    }

    fn is_target(&self, a: &Atom) -> bool {
        fn_named(a, &self.target)
    }

    /// A condition free of `U1, U2` and linear in the target: every
    /// coefficient must vanish, which fixes integration constants.
    fn vanish(&mut self, i: usize) -> Result<()> {
        let c = self.conds.remove(i);
        self.steps.push(format!("linear in {}: coefficients of {c} vanish", self.target));
        let eqs = structural_coefficients(&c);
        let names = self.introduced.clone();
        let fail = || VerifyError::Infeasible(format!("cannot make {c} vanish by integration constants"));
        let sol = match solve_affine_general(&eqs, &names) {
            Ok(Some(s)) => s,
            Ok(None) | Err(VerifyError::Linear(_)) => return Err(fail()),
            Err(e) => return Err(e),
        };
        if sol.is_empty() {
            return Err(fail());
        }
        for (k, v) in sol {
            self.set_const(&k, v)?;
        }
        Ok(())
    }

    fn try_u_step(&mut self, i: usize) -> Result<bool> {
        let c = self.conds[i].clone();
        let Some(lead) = leader(&c, &UNKNOWNS) else { return Ok(false) };
        let name = lead.name.to_string();
        let split = linear_constant_split(&c, &lead);
        if let Some((k, rest)) = &split {
            if lead.d[1] == 0 {
                let u = solve_linear(k, rest);
                self.conds.remove(i);
                return self.set_explicit(&name, u).map(|_| true);
            }
            if let Ok(p) = c.integrate_total(Var::U2) {
                let k = self.fresh();
                self.steps.push(format!("integrate {c} once, constant {k}"));
                self.conds[i] = (&p + &Expr::constant(&k)).normalize();
                return Ok(true);
            }
        }
        if let Some(u) = self.solve_linear_ode(&c, &name)? {
            self.conds.remove(i);
            return self.set_explicit(&name, u).map(|_| true);
        }
        if let Some((k, rest)) = split {
            if !self.rules.contains_key(&name) && !self.solved.contains_key(&name) {
                let rhs = solve_linear(&k, &rest);
                self.conds.remove(i);
                return self.add_rule(&name, lead.d[1], rhs).map(|_| true);
            }
        }
        Ok(false)
    }

    /// Solves `sum kappa_n U^(n) + R = 0` with constant `kappa_n` and `R`
    /// linear in the target, by undetermined coefficients plus the
    /// homogeneous solution.
    fn solve_linear_ode(&mut self, c: &Expr, name: &str) -> Result<Option<Expr>> {
        let is_u = |a: &Atom| fn_named(a, name);
        if c.degree_in(is_u) != 1 {
            return Ok(None);
        }
        let atoms: Vec<FnAtom> = c.fn_atoms().into_iter().filter(|f| &*f.name == name).collect();
        let mut kappa: BTreeMap<u32, Coeff> = BTreeMap::new();
        let mut rest = c.clone();
        for f in &atoms {
            let a = Atom::Fn(f.clone());
            let Some(k) = c.coeff_of(&a, 1).as_coeff() else { return Ok(None) };
            rest = (&rest - &(&Expr::atom(a) * &Expr::from_coeff(k.clone()))).normalize();
            kappa.insert(f.d[1], k);
        }
        if has_unknowns(&rest) || rest.degree_in(|a| self.is_target(a)) > 1 || rest.has_recip() {
            return Ok(None);
        }
        let lop = |e: &Expr| -> Expr { kappa.iter().map(|(n, k)| e.diff_n(Var::U2, *n).scale(k)).sum() };
        // ansatz basis
        let max_w = rest.max_order(&self.target);
        let mut exps: BTreeSet<LinForm> = BTreeSet::new();
        exps.insert(LinForm::zero());
        let mut max_pow = 0;
        for (m, _) in rest.terms() {
            exps.insert(m.exp.clone());
            max_pow = max_pow.max(m.power_of(&Atom::Var(Var::U2)));
        }
        let mut factors = vec![Expr::one()];
        if let Some(m) = max_w {
            factors.extend((0..=m).map(|j| u2_fn(&self.target, j)));
        }
        let mut basis = Vec::new();
        for e in &exps {
            for q in 0..=max_pow.max(0) {
                for f in &factors {
                    let t = Expr::term(Monomial::exp_only(e.clone()).with_power(&Atom::Var(Var::U2), q), Coeff::one());
                    basis.push(&t * f);
                }
            }
        }
        let gammas: Vec<String> = (0..basis.len()).map(|i| format!("gamma{i}")).collect();
        let ansatz: Expr = basis.iter().zip(&gammas).map(|(b, g)| b * &Expr::constant(g)).sum();
        let eq = (&lop(&ansatz) + &rest).normalize();
        let Some(sol) = solve_affine(&structural_coefficients(&eq), &gammas)? else { return Ok(None) };
        let particular: Expr = basis.iter().zip(&gammas).map(|(b, g)| b * &sol[g]).sum::<Expr>().normalize();
        if !(&lop(&particular) + &rest).is_zero()? {
            return Ok(None);
        }
        let Some(hom) = homogeneous_basis(&kappa) else { return Ok(None) };
        let mut u = particular;
        for h in hom {
            let k = self.fresh();
            u = &u + &(&h * &Expr::constant(&k));
        }
        self.steps.push(format!("solve {c} for {name} by undetermined coefficients"));
        Ok(Some(u.normalize()))
    }
}

fn rat_sqrt(r: &BigRational) -> Option<BigRational> {
    let (n, d) = (r.numer(), r.denom());
    if n < &BigInt::from(0) {
        return None;
    }
    let (sn, sd) = (n.sqrt(), d.sqrt());
    (&sn * &sn == *n && &sd * &sd == *d).then(|| BigRational::new(sn, sd))
}

/// Basis of solutions of `sum kappa_n y^(n) = 0` for pure derivatives and
/// orders one and two with rational roots or rational complex pairs.
pub fn homogeneous_basis(kappa: &BTreeMap<u32, Coeff>) -> Option<Vec<Expr>> {
    let kappa: BTreeMap<u32, Coeff> = kappa.iter().filter(|(_, k)| !k.is_zero()).map(|(n, k)| (*n, k.clone())).collect();
    let (&d, _) = kappa.iter().next_back()?;
    let u = Expr::var(Var::U2);
    if kappa.len() == 1 {
        return Some((0..d).map(|j| u.powu(j)).collect());
    }
    let get = |n: u32| kappa.get(&n).cloned().unwrap_or_else(Coeff::zero);
    let exp_of = |r: &Coeff| Expr::exp_lin(LinForm::of(Var::U2, r));
    match d {
        1 => Some(vec![exp_of(&(-get(0)).div(&get(1))?)]),
        2 => {
            let (a, b, c) = (get(2), get(1), get(0));
            if !(a.is_real() && b.is_real() && c.is_real()) {
                return None;
            }
            let two_a = &a * &Coeff::int(2);
            let disc = &(&b * &b) - &(&(&a * &c) * &Coeff::int(4));
            let alpha = (-b.clone()).div(&two_a)?;
            let dr = disc.re.clone();
            if dr == BigRational::from_integer(0.into()) {
                return Some(vec![exp_of(&alpha), &u * &exp_of(&alpha)]);
            }
            if let Some(s) = rat_sqrt(&dr) {
                let s = Coeff::real(s).div(&two_a)?;
                return Some(vec![exp_of(&(&alpha + &s)), exp_of(&(&alpha - &s))]);
            }
            let s = rat_sqrt(&-dr)?;
            let beta = Coeff::real(s).div(&two_a)?;
            let beta = if beta.re < BigRational::from_integer(0.into()) { -beta } else { beta };
            let arg = u.scale(&beta);
            let e = exp_of(&alpha);
            Some(vec![&e * &Expr::cos(&arg).ok()?, &e * &Expr::sin(&arg).ok()?])
        }
        _ => None,
    }
}

/// Eliminates `U1, U2` from `conds` under the case assumption of `branch`.
pub fn branch_eliminate(conds: &ConditionSet, branch: &BranchSpec) -> Result<BranchOutcome> {
    let target = target_for(branch.expected).to_string();
    let mut taken = BTreeSet::new();
    for c in &conds.conditions {
        taken.extend(c.expr.const_names());
    }
    let mut st = Elim {
        conds: conds.exprs(),
        target: target.clone(),
        solved: BTreeMap::new(),
        rules: BTreeMap::new(),
        introduced: Vec::new(),
        taken,
        steps: Vec::new(),
    };
    if branch.zero {
        st.steps.push(format!("{} = 0", branch.constant));
        st.apply(&Bindings::new().with_const(&branch.constant, Expr::zero()))?;
    } else {
        st.steps.push(format!("{} != 0", branch.constant));
    }
    if target == "W" {
        st.steps.push("v2 = D[W,u2,1]".into());
        st.apply(&Bindings::new().with_fn("v2", [0, 0], u2_fn("W", 1)))?;
    }
    for _ in 0..MAX_STEPS {
        let free: Vec<usize> = (0..st.conds.len()).filter(|&i| !has_unknowns(&st.conds[i])).collect();
        if let Some(&i) = free.iter().find(|&&i| st.conds[i].degree_in(|a| st.is_target(a)) <= 1) {
            st.vanish(i)?;
            continue;
        }
        if let Some(&i) = free.first() {
            let final_equation = st.conds.remove(i).primitive();
            st.steps.push(format!("final equation for {target}"));
            let form = match_expected(&final_equation, branch.expected)?;
            return Ok(BranchOutcome {
                branch: branch.clone(),
                target,
                steps: st.steps,
                solved: st.solved,
                rules: st.rules,
                integration_constants: st.introduced,
                final_equation,
                form,
                remaining: st.conds,
            });
        }
        // lowest leader first, shorter conditions breaking ties
        let mut order: Vec<(u32, usize, usize)> =
            (0..st.conds.len()).filter_map(|i| leader(&st.conds[i], &UNKNOWNS).map(|l| (l.d[1], st.conds[i].len(), i))).collect();
        order.sort();
        let mut progressed = false;
        for (_, _, i) in order {
            if st.try_u_step(i)? {
                progressed = true;
                break;
            }
        }
        if !progressed {
            return Err(VerifyError::NoFinalEquation(format!("{} conditions left with U1/U2 that no step applies to", st.conds.len())));
        }
    }
    Err(VerifyError::Depth(MAX_STEPS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn homogeneous_bases() {
        let k: BTreeMap<u32, Coeff> = [(2, Coeff::int(-1)), (0, Coeff::int(-1))].into();
        let h = homogeneous_basis(&k).unwrap();
        assert_eq!(h, vec![parse("cos(u2)").unwrap(), parse("sin(u2)").unwrap()]);
        let k: BTreeMap<u32, Coeff> = [(2, Coeff::int(2))].into();
        assert_eq!(homogeneous_basis(&k).unwrap(), vec![Expr::one(), Expr::var(Var::U2)]);
        let k: BTreeMap<u32, Coeff> = [(2, Coeff::int(1)), (0, Coeff::int(-4))].into();
        assert_eq!(homogeneous_basis(&k).unwrap().len(), 2);
        let k: BTreeMap<u32, Coeff> = [(2, Coeff::int(1)), (0, Coeff::int(-2))].into();
        assert!(homogeneous_basis(&k).is_none());
    }
}
