//! Recognition of final equations: Weierstrass, PVI-type and horocyclic forms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::linsolve::{solve_affine, structural_coefficients};
use super::Result;
use crate::catalog::{expected_form_constants, expected_form_expr, ExpectedForm};
use crate::expr::{Atom, Bindings, Expr, Var};

/// `derived = scale * reference` once the listed constants of the reference
/// take the reported values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormMatch {
    pub scale: Expr,
    pub values: BTreeMap<String, Expr>,
}

fn constant_monomial(e: &Expr) -> bool {
    e.len() == 1 && e.fn_atoms().is_empty() && !e.depends_on(Var::U1) && !e.depends_on(Var::U2) && !e.has_recip()
}

/// Finds a constant monomial `scale` and values of `solve_for` with
/// `derived - scale * reference = 0`.
pub fn identify_constants(derived: &Expr, reference: &Expr, solve_for: &[&str]) -> Result<Option<FormMatch>> {
    // the derived side may use the same constant names, so solve for fresh ones
    let taken = derived.const_names();
    let mut names = Vec::new();
    let mut rename = Bindings::new();
    let mut fixed = Bindings::new();
    for n in solve_for {
        let mut fresh = format!("{n}_ref");
        while taken.contains(&fresh) {
            fresh.push('_');
        }
        rename.bind_const(n, Expr::constant(&fresh))?;
        fixed.bind_const(&fresh, Expr::zero())?;
        names.push(fresh);
    }
    let reference = &reference.substitute(&rename)?;
    let pred = |a: &Atom| !matches!(a, Atom::Const(_));
    let split = crate::expr::Splitter { exp_vars: [true, true], atom: &pred };
    let r_parts = reference.split_by(&split);
    let d_parts = derived.split_by(&split);
    let mut tried = Vec::new();
    for (m, rc) in &r_parts {
        // a structural part whose reference coefficient does not involve the unknown constants
        if rc.substitute(&fixed)? != *rc || !constant_monomial(rc) {
            continue;
        }
        let Some(dc) = d_parts.get(m) else { continue };
        if !constant_monomial(dc) {
            continue;
        }
        let (rm, rk) = rc.lead().unwrap();
        let (dm, dk) = dc.lead().unwrap();
        let scale = Expr::term(dm.div(rm), dk.div(rk).unwrap());
        if tried.contains(&scale) {
            continue;
        }
        tried.push(scale.clone());
        let diff = (derived - &(&scale * reference)).normalize();
        let eqs = structural_coefficients(&diff);
        let Some(values) = solve_affine(&eqs, &names)? else { continue };
        let mut b = Bindings::new();
        for (k, v) in &values {
            b.bind_const(k, v.clone())?;
        }
        if (derived - &(&scale * &reference.substitute(&b)?)).is_zero()? {
            let values = solve_for.iter().zip(&names).map(|(n, f)| (n.to_string(), values[f].clone())).collect();
            return Ok(Some(FormMatch { scale, values }));
        }
    }
    Ok(None)
}

/// Matches `derived` against one of the reference final forms.
pub fn match_expected(derived: &Expr, form: ExpectedForm) -> Result<Option<FormMatch>> {
    identify_constants(derived, &expected_form_expr(form)?, expected_form_constants(form))
}

/// Checks `ode` has the form `hbar^2 v2''' - 12 v2' v2 + 12 a1 v2' = 0` up to
/// a constant factor and returns `a1`.
pub fn check_weierstrass_form(ode: &Expr) -> Result<Option<Expr>> {
    Ok(match_expected(ode, ExpectedForm::Weierstrass)?.map(|m| m.values["a1"].clone()))
}

/// `v2 = hbar^2 wp(u2 - u20; g2, g3) + a1` solves the Weierstrass-form
/// equation identically, using only the differential identities of `wp`.
pub fn verify_p_closure(a1: &Expr) -> Result<bool> {
    let ode = expected_form_expr(ExpectedForm::Weierstrass)?;
    let wp = Expr::wp(Var::U2, Some("u20"), "g2", "g3", 0);
    let v = &(&Expr::constant("hbar").powu(2) * &wp) + a1;
    let b = Bindings::new().with_fn("v2", [0, 0], v).with_const("a1", a1.clone());
    Ok(ode.substitute(&b)?.is_zero()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn weierstrass_recognized_with_scale() {
        let e = parse("-a4/2*(hbar^2*D[v2,u2,3] - 12*v2*D[v2,u2,1]) + 2*k1*D[v2,u2,1]").unwrap();
        let a1 = check_weierstrass_form(&e).unwrap().unwrap();
        assert_eq!(a1, parse("-k1/(3*a4)").unwrap());
        assert!(verify_p_closure(&a1).unwrap());
    }

    #[test]
    fn wrong_shape_rejected() {
        let e = parse("hbar^2*D[v2,u2,3] - 6*v2*D[v2,u2,1]").unwrap();
        assert!(check_weierstrass_form(&e).unwrap().is_none());
        let e = parse("hbar^2*D[v2,u2,3] - 12*v2*D[v2,u2,1] + u2*D[v2,u2,1]").unwrap();
        assert!(check_weierstrass_form(&e).unwrap().is_none());
    }

    #[test]
    fn pvi_betas_identified() {
        let pvi = expected_form_expr(ExpectedForm::Pvi).unwrap();
        let b = Bindings::new().with_const("beta1", parse("2 - k1").unwrap()).with_const("beta2", parse("k2/4").unwrap());
        let e = pvi.substitute(&b).unwrap().scale(&crate::expr::Coeff::int(-3));
        let m = match_expected(&e, ExpectedForm::Pvi).unwrap().unwrap();
        assert_eq!(m.scale, Expr::int(-3));
        assert_eq!(m.values["beta1"], parse("2 - k1").unwrap());
        assert_eq!(m.values["beta2"], parse("k2/4").unwrap());
    }

    #[test]
    fn wrong_lattice_relation_fails_closure() {
        assert!(verify_p_closure(&Expr::zero()).unwrap());
        let ode = expected_form_expr(ExpectedForm::Weierstrass).unwrap();
        let v = &(&Expr::constant("hbar").powu(2) * &Expr::wp(Var::U2, None, "g2", "g3", 0)).scale(&crate::expr::Coeff::int(2))
            + &Expr::constant("a1");
        let r = ode.subs_fn("v2", [0, 0], &v).unwrap();
        assert!(!r.is_zero().unwrap());
    }
}
