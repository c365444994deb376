//! Determining equations for symmetry operators given by an `F`/`G` ansatz
//! polynomial in the parameters `H`, `L`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diffop::{abc_from_fg, d_gradient, Geometry, SeparablePotential};
use crate::expr::latex::expr_latex;
use crate::expr::{parse, Bindings, Coeff, Deps, Expr, Result, Var};

/// One coefficient `expr H^j L^k` of an ansatz component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HlTerm {
    pub j: u32,
    pub k: u32,
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FGAnsatz {
    pub f: Vec<HlTerm>,
    pub g: Vec<HlTerm>,
    pub max_h: u32,
    pub max_l: u32,
}

fn unknown(name: &str) -> Expr {
    Expr::func(name, Deps::Both)
}

impl FGAnsatz {
    pub fn zero() -> Self {
        FGAnsatz { f: Vec::new(), g: Vec::new(), max_h: 0, max_l: 0 }
    }

    /// `F = F0`, `G = G0 + GH H + GL L`.
    pub fn third_order() -> Self {
        FGAnsatz {
            f: vec![HlTerm { j: 0, k: 0, expr: unknown("F0") }],
            g: vec![
                HlTerm { j: 0, k: 0, expr: unknown("G0") },
                HlTerm { j: 1, k: 0, expr: unknown("GH") },
                HlTerm { j: 0, k: 1, expr: unknown("GL") },
            ],
            max_h: 1,
            max_l: 1,
        }
    }

    /// `F = F0`, `G = G0`.
    pub fn second_order() -> Self {
        FGAnsatz {
            f: vec![HlTerm { j: 0, k: 0, expr: unknown("F0") }],
            g: vec![HlTerm { j: 0, k: 0, expr: unknown("G0") }],
            max_h: 0,
            max_l: 0,
        }
    }

    /// Ansatz with explicit component expressions (`F0`, `G0`, `GH`, `GL`).
    pub fn from_components(f0: Expr, g0: Expr, gh: Expr, gl: Expr) -> Self {
        FGAnsatz {
            f: vec![HlTerm { j: 0, k: 0, expr: f0 }],
            g: vec![HlTerm { j: 0, k: 0, expr: g0 }, HlTerm { j: 1, k: 0, expr: gh }, HlTerm { j: 0, k: 1, expr: gl }],
            max_h: 1,
            max_l: 1,
        }
    }

    fn poly(ts: &[HlTerm]) -> Expr {
        let h = Expr::constant("H");
        let l = Expr::constant("L");
        ts.iter().map(|t| &(&t.expr * &h.powu(t.j)) * &l.powu(t.k)).sum()
    }

    pub fn f_poly(&self) -> Expr {
        Self::poly(&self.f)
    }

    pub fn g_poly(&self) -> Expr {
        Self::poly(&self.g)
    }

    /// Substitutes into every component.
    pub fn substitute(&self, b: &Bindings) -> Result<FGAnsatz> {
        let sub = |ts: &[HlTerm]| -> Result<Vec<HlTerm>> {
            ts.iter().map(|t| Ok(HlTerm { j: t.j, k: t.k, expr: t.expr.substitute(b)? })).collect()
        };
        Ok(FGAnsatz { f: sub(&self.f)?, g: sub(&self.g)?, max_h: self.max_h, max_l: self.max_l })
    }
}

fn d(e: &Expr, a: u32, b: u32) -> Expr {
    e.diff_mixed(a, b)
}

fn hbar2() -> Expr {
    Expr::constant("hbar").powu(2)
}

/// LHS - RHS of the integrability condition for `d1 D`, `d2 D`.
pub fn integrability_residual(ans: &FGAnsatz, g: &Geometry, p: &SeparablePotential) -> Expr {
    integrability_from_fg(&ans.f_poly(), &ans.g_poly(), g, p)
}

pub fn integrability_from_fg(f: &Expr, gg: &Expr, g: &Geometry, p: &SeparablePotential) -> Expr {
    let h = Expr::constant("H");
    let l = Expr::constant("L");
    let q = Expr::ratio(1, 4);
    let (f1, f2, v1, v2) = (&g.f1, &g.f2, &p.v1, &p.v2);
    let dv = |e: &Expr, v: Var, n: u32| e.diff_n(v, n);
    let lhs = {
        let mut s = -(&hbar2() * &d(gg, 1, 3));
        s = &s - &(&(&q * &hbar2()) * &d(f, 0, 4));
        s = &s + &(&(&Expr::int(2) * &d(f, 0, 2)) * &(&(v2 - &(f2 * &h)) + &l));
        s = &s + &(&(&Expr::int(3) * &d(f, 0, 1)) * &(&dv(v2, Var::U2, 1) - &(&dv(f2, Var::U2, 1) * &h)));
        s = &s + &(f * &(&dv(v2, Var::U2, 2) - &(&dv(f2, Var::U2, 2) * &h)));
        s
    };
    let rhs = {
        let mut s = &hbar2() * &d(gg, 3, 1);
        s = &s - &(&(&q * &hbar2()) * &d(f, 4, 0));
        s = &s + &(&(&Expr::int(2) * &d(f, 2, 0)) * &(&(v1 - &(f1 * &h)) - &l));
        s = &s + &(&(&Expr::int(3) * &d(f, 1, 0)) * &(&dv(v1, Var::U1, 1) - &(&dv(f1, Var::U1, 1) * &h)));
        s = &s + &(f * &(&dv(v1, Var::U1, 2) - &(&dv(f1, Var::U1, 2) * &h)));
        s
    };
    (&lhs - &rhs).normalize()
}

/// LHS - RHS of the constant-term condition with `D` eliminated.
pub fn constant_term_residual(ans: &FGAnsatz, g: &Geometry, p: &SeparablePotential) -> Expr {
    constant_term_from_fg(&ans.f_poly(), &ans.g_poly(), g, p)
}

pub fn constant_term_from_fg(f: &Expr, gg: &Expr, g: &Geometry, p: &SeparablePotential) -> Expr {
    let h = Expr::constant("H");
    let l = Expr::constant("L");
    let q = &Expr::ratio(1, 4) * &hbar2();
    let two = Expr::int(2);
    let (f1, f2, v1, v2) = (&g.f1, &g.f2, &p.v1, &p.v2);
    let w1 = |e: &Expr, n: u32| e.diff_n(Var::U1, n);
    let w2 = |e: &Expr, n: u32| e.diff_n(Var::U2, n);
    let v1h = v1 - &(f1 * &h);
    let v2h = v2 - &(f2 * &h);
    let dv1h = &w1(v1, 1) - &(&w1(f1, 1) * &h);
    let dv2h = &w2(v2, 1) - &(&w2(f2, 1) * &h);
    let lhs = {
        let mut s = &q * &d(f, 3, 1);
        s = &s - &(&(&two * &d(f, 1, 1)) * &v1h);
        s = &s - &(&d(f, 1, 0) * &dv2h);
        s = &s + &(&q * &d(gg, 4, 0));
        s = &s - &(&(&two * &d(gg, 2, 0)) * &(&v1h - &l));
        s = &s - &(&d(gg, 1, 0) * &dv1h);
        s
    };
    let rhs = {
        let mut s = -(&q * &d(f, 1, 3));
        s = &s + &(&(&two * &d(f, 1, 1)) * &v2h);
        s = &s + &(&d(f, 0, 1) * &dv1h);
        s = &s + &(&q * &d(gg, 0, 4));
        s = &s - &(&(&two * &d(gg, 0, 2)) * &(&v2h + &l));
        s = &s - &(&d(gg, 0, 1) * &dv2h);
        s
    };
    (&lhs - &rhs).normalize()
}

/// Constant-term condition written directly in `A, B, C` with the second
/// derivatives of `D` taken from its gradient. Independent of
/// [`constant_term_from_fg`]; used to cross-check it.
pub fn constant_term_via_gradient(
    f: &Expr,
    gg: &Expr,
    g: &Geometry,
    p: &SeparablePotential,
) -> std::result::Result<Expr, crate::diffop::DiffOpError> {
    let (_, b, c) = abc_from_fg(f, gg);
    let (px, py) = d_gradient(f, gg, g, p)?;
    let h = Expr::constant("H");
    let l = Expr::constant("L");
    let two = Expr::int(2);
    let b1 = b.diff(Var::U1);
    let c2 = c.diff(Var::U2);
    let mut s = &(&hbar2() * &Expr::ratio(-1, 2)) * &(&px.diff(Var::U1) + &py.diff(Var::U2));
    s = &s + &(&(&two * &b1) * &p.v1);
    s = &s + &(&(&two * &c2) * &p.v2);
    s = &s + &(&b * &p.v1.diff(Var::U1));
    s = &s + &(&c * &p.v2.diff(Var::U2));
    let hc = &(&(&(&two * &b1) * &g.f1) + &(&(&two * &c2) * &g.f2)) + &(&(&b * &g.f1.diff(Var::U1)) + &(&c * &g.f2.diff(Var::U2)));
    s = &s - &(&hc * &h);
    s = &s + &(&(&(&two * &c2) - &(&two * &b1)) * &l);
    Ok(s.normalize())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Eqn1,
    Eqn2,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Eqn1 => "eqn1",
            Source::Eqn2 => "eqn2",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub origin: (u32, u32),
    pub source: Source,
    pub expr: Expr,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeterminingSystem {
    pub residuals: Vec<Residual>,
}

impl DeterminingSystem {
    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }

    pub fn get(&self, source: Source, origin: (u32, u32)) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.source == source && r.origin == origin)
    }

    /// `sum residual H^j L^k` for one source.
    pub fn reconstruct(&self, source: Source) -> Expr {
        let h = Expr::constant("H");
        let l = Expr::constant("L");
        self.residuals.iter().filter(|r| r.source == source).map(|r| &(&r.expr * &h.powu(r.origin.0)) * &l.powu(r.origin.1)).sum()
    }

    /// Aligned LaTeX block, one equation per residual.
    pub fn latex(&self) -> String {
        let rows: Vec<String> = self.residuals.iter().map(|r| format!("0 &= {}", expr_latex(&r.expr))).collect();
        format!("\\begin{{aligned}}\n{}\n\\end{{aligned}}", rows.join(" \\\\\n"))
    }
}

/// Both residuals split by powers of `H` and `L`; zero coefficients dropped.
pub fn determining_equations(ans: &FGAnsatz, g: &Geometry, p: &SeparablePotential) -> Result<DeterminingSystem> {
    let f = ans.f_poly();
    let gg = ans.g_poly();
    let mut residuals = Vec::new();
    for (source, e) in [(Source::Eqn1, integrability_from_fg(&f, &gg, g, p)), (Source::Eqn2, constant_term_from_fg(&f, &gg, g, p))] {
        for (origin, expr) in e.collect_hl()? {
            if expr.numerator().is_empty() {
                continue;
            }
            residuals.push(Residual { origin, source, expr });
        }
    }
    Ok(DeterminingSystem { residuals })
}

/// Reference forms of the nine third-order determining equations for
/// generic `f1, f2, v1, v2`, in source order: three integrability
/// coefficients `(0,0), (0,1), (1,0)`, then six constant-term coefficients
/// `(0,0), (0,1), (0,2), (1,0), (1,1), (2,0)`.
pub const THIRD_ORDER_DISPLAYS: [&str; 9] = [
    "-6*D[v1,u1,1]*D[F0,u1,1] + 6*D[v2,u2,1]*D[F0,u2,1] - 4*v1*D[F0,u1,2] + 4*v2*D[F0,u2,2] \
     - 2*hbar^2*D[G0,u1,3,u2,1] - 2*hbar^2*D[G0,u1,1,u2,3] + 2*F0*D[v2,u2,2] - 2*F0*D[v1,u1,2]",
    "D[F0,u1,2] + D[F0,u2,2]",
    "-hbar^2*D[GH,u1,3,u2,1] - hbar^2*D[GH,u1,1,u2,3] + 3*D[f1,u1,1]*D[F0,u1,1] - 3*D[f2,u2,1]*D[F0,u2,1] \
     + 2*f1*D[F0,u1,2] - 2*f2*D[F0,u2,2] - F0*D[f2,u2,2] + F0*D[f1,u1,2]",
    "D[v2,u2,1]*D[F0,u1,1] + D[v1,u1,1]*D[F0,u2,1] + D[v1,u1,1]*D[G0,u1,1] - D[v2,u2,1]*D[G0,u2,1] \
     + 2*D[F0,u1,1,u2,1]*v2 + 2*D[F0,u1,1,u2,1]*v1 + 2*v1*D[G0,u1,2] - 2*v2*D[G0,u2,2] \
     - 1/4*hbar^2*D[G0,u1,4] + 1/4*hbar^2*D[G0,u2,4]",
    "D[v1,u1,1]*D[GL,u1,1] - D[v2,u2,1]*D[GL,u2,1] + 2*v1*D[GL,u1,2] - 2*D[G0,u1,2] - 2*v2*D[GL,u2,2] - 2*D[G0,u2,2]",
    "D[GL,u1,2] + D[GL,u2,2]",
    "-D[f2,u2,1]*D[F0,u1,1] - D[f1,u1,1]*D[F0,u2,1] + D[v1,u1,1]*D[GH,u1,1] - D[f1,u1,1]*D[G0,u1,1] \
     - D[v2,u2,1]*D[GH,u2,1] + D[f2,u2,1]*D[G0,u2,1] - 2*D[F0,u1,1,u2,1]*f2 - 2*D[F0,u1,1,u2,1]*f1 \
     + 2*v1*D[GH,u1,2] - 2*f1*D[G0,u1,2] - 2*v2*D[GH,u2,2] + 2*f2*D[G0,u2,2] \
     - 1/4*hbar^2*D[GH,u1,4] + 1/4*hbar^2*D[GH,u2,4]",
    "-D[f1,u1,1]*D[GL,u1,1] + D[f2,u2,1]*D[GL,u2,1] + 2*f2*D[GL,u2,2] - 2*f1*D[GL,u1,2] - 2*D[GH,u1,2] - 2*D[GH,u2,2]",
    "-D[f1,u1,1]*D[GH,u1,1] + D[f2,u2,1]*D[GH,u2,1] + 2*f2*D[GH,u2,2] - 2*f1*D[GH,u1,2]",
];

/// `(source, (j, k))` of each reference display.
pub const THIRD_ORDER_ORIGINS: [(Source, (u32, u32)); 9] = [
    (Source::Eqn1, (0, 0)),
    (Source::Eqn1, (0, 1)),
    (Source::Eqn1, (1, 0)),
    (Source::Eqn2, (0, 0)),
    (Source::Eqn2, (0, 1)),
    (Source::Eqn2, (0, 2)),
    (Source::Eqn2, (1, 0)),
    (Source::Eqn2, (1, 1)),
    (Source::Eqn2, (2, 0)),
];

pub fn third_order_displays() -> Result<Vec<Expr>> {
    THIRD_ORDER_DISPLAYS.iter().map(|s| parse(s)).collect()
}

/// Harmonic rewriting `X_{a,b} -> -X_{a+2,b-2}` for `b >= 2`, i.e. the rule
/// `X_11 + X_22 = 0` oriented towards `u1`-derivatives.
pub fn harmonic_rule(name: &str) -> Bindings {
    Bindings::new().with_fn(name, [0, 2], -Expr::fn_deriv(name, Deps::Both, [2, 0]))
}

/// Result of comparing a generated residual with a reference form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplayMatch {
    pub matched: bool,
    /// `reference = scale * generated` (modulo the listed rules).
    pub scale: Option<Coeff>,
    /// Unknowns whose harmonic rule was used.
    pub modulo: Vec<String>,
    /// `reference - scale * generated` after reduction.
    pub difference: Expr,
}

fn reduce_mod(e: &Expr, names: &[String]) -> Result<Expr> {
    let mut out = e.clone();
    for n in names {
        out = out.substitute_fixpoint(&harmonic_rule(n), 32)?;
    }
    Ok(out.normalize())
}

/// Compares `generated` with `reference` up to a nonzero constant factor,
/// modulo the harmonic rules for `modulo`.
pub fn match_display(generated: &Expr, reference: &Expr, modulo: &[String]) -> Result<DisplayMatch> {
    let g = reduce_mod(generated, modulo)?;
    let r = reduce_mod(reference, modulo)?;
    let scale = match (g.lead(), r.lead()) {
        (Some((mg, cg)), Some((mr, cr))) if mg == mr => cr.div(cg),
        (None, None) => Some(Coeff::one()),
        _ => None,
    };
    let Some(s) = scale else {
        return Ok(DisplayMatch { matched: false, scale: None, modulo: modulo.to_vec(), difference: (&r - &g).normalize() });
    };
    let diff = (&r - &g.scale(&s)).normalize();
    let matched = diff.is_zero()?;
    Ok(DisplayMatch { matched, scale: Some(s), modulo: modulo.to_vec(), difference: diff })
}

/// Matches each residual of a third-order system with its reference form.
/// Rules used: harmonicity of `F0` and `GL`, except for the display that is
/// that rule itself.
pub fn match_third_order(sys: &DeterminingSystem) -> Result<Vec<(usize, Option<DisplayMatch>)>> {
    let refs = third_order_displays()?;
    let mut out = Vec::new();
    for (i, (src, origin)) in THIRD_ORDER_ORIGINS.iter().enumerate() {
        let modulo: Vec<String> = match i {
            1 => vec!["GL".into()],
            5 => vec!["F0".into()],
            _ => vec!["F0".into(), "GL".into()],
        };
        let m = match sys.get(*src, *origin) {
            Some(r) => Some(match_display(&r.expr, &refs[i], &modulo)?),
            None => None,
        };
        out.push((i + 1, m));
    }
    Ok(out)
}

/// Scales `e` so its leading monomial has coefficient 1.
pub fn monic(e: &Expr) -> Expr {
    match e.lead() {
        Some((_, c)) => e.scale(&c.inv().expect("nonzero lead")),
        None => e.clone(),
    }
}

/// Every unknown in `sys` is one of the ansatz or geometry functions.
pub fn unknown_closure(sys: &DeterminingSystem) -> BTreeMap<String, bool> {
    const ALLOWED: [&str; 8] = ["F0", "G0", "GH", "GL", "v1", "v2", "f1", "f2"];
    let mut out = BTreeMap::new();
    for r in &sys.residuals {
        for f in r.expr.fn_atoms() {
            out.insert(f.name.to_string(), ALLOWED.contains(&&*f.name));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffop::d_integrability;

    fn generic() -> (Geometry, SeparablePotential) {
        (Geometry::generic(), SeparablePotential::generic())
    }

    #[test]
    fn printed_residuals_agree_with_gradient_derivation() {
        let (g, p) = generic();
        let a = FGAnsatz::third_order();
        let (f, gg) = (a.f_poly(), a.g_poly());
        let (px, py) = d_gradient(&f, &gg, &g, &p).unwrap();
        let i = (&d_integrability(&px, &py) * &hbar2()).normalize();
        let m = match_display(&i, &integrability_from_fg(&f, &gg, &g, &p), &[]).unwrap();
        assert!(m.matched);
        assert_eq!(m.scale, Some(Coeff::int(-1)));
        let c = constant_term_via_gradient(&f, &gg, &g, &p).unwrap();
        let m = match_display(&c, &constant_term_from_fg(&f, &gg, &g, &p), &[]).unwrap();
        assert!(m.matched);
        assert_eq!(m.scale, Some(Coeff::int(-1)));
    }

    #[test]
    fn nine_equations_with_scales() {
        let (g, p) = generic();
        let sys = determining_equations(&FGAnsatz::third_order(), &g, &p).unwrap();
        assert_eq!(sys.len(), 9);
        assert_eq!(sys.residuals.iter().filter(|r| r.source == Source::Eqn1).count(), 3);
        let want = [
            Coeff::int(2),
            Coeff::ratio(1, 2),
            Coeff::one(),
            Coeff::int(-1),
            Coeff::int(-1),
            Coeff::ratio(1, 2),
            Coeff::int(-1),
            Coeff::int(-1),
            Coeff::int(-1),
        ];
        for ((i, m), s) in match_third_order(&sys).unwrap().into_iter().zip(want) {
            let m = m.unwrap();
            assert!(m.matched, "display {i}: {}", m.difference);
            assert_eq!(m.scale, Some(s), "display {i}");
        }
    }

    #[test]
    fn reconstruction_and_closure() {
        let (g, p) = generic();
        let a = FGAnsatz::third_order();
        let sys = determining_equations(&a, &g, &p).unwrap();
        let d1 = &sys.reconstruct(Source::Eqn1) - &integrability_residual(&a, &g, &p);
        let d2 = &sys.reconstruct(Source::Eqn2) - &constant_term_residual(&a, &g, &p);
        assert!(d1.is_zero().unwrap() && d2.is_zero().unwrap());
        assert!(unknown_closure(&sys).values().all(|ok| *ok));
    }

    #[test]
    fn zero_and_trivial_ansatz() {
        let (g, p) = generic();
        assert!(determining_equations(&FGAnsatz::zero(), &g, &p).unwrap().is_empty());
        let c = FGAnsatz::from_components(Expr::zero(), parse("7").unwrap(), Expr::zero(), Expr::zero());
        assert!(constant_term_residual(&c, &g, &p).is_empty());
        assert!(integrability_residual(&FGAnsatz::zero(), &g, &p).is_empty());
    }

    #[test]
    fn non_harmonic_f_is_flagged() {
        let (g, p) = generic();
        let a = FGAnsatz::from_components(parse("u1^2").unwrap(), Expr::zero(), Expr::zero(), Expr::zero());
        let sys = determining_equations(&a, &g, &p).unwrap();
        assert_eq!(sys.get(Source::Eqn1, (0, 1)).unwrap().expr, Expr::int(4));
    }

    #[test]
    fn ansatz_serde_round_trip() {
        let a = FGAnsatz::third_order();
        let back: FGAnsatz = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(a, back);
        let two = FGAnsatz::second_order();
        assert_eq!(two.g.len(), 1);
    }

    #[test]
    fn f2_zero_keeps_nine() {
        let g = Geometry { f2: Expr::zero(), ..Geometry::generic() };
        let sys = determining_equations(&FGAnsatz::third_order(), &g, &SeparablePotential::generic()).unwrap();
        let origins: Vec<_> = sys.residuals.iter().map(|r| (r.source, r.origin)).collect();
        assert_eq!(origins, THIRD_ORDER_ORIGINS.to_vec());
    }

    #[test]
    fn scale_factor_is_reported() {
        let e = parse("D[F0,u1,2]*v1 + u2").unwrap();
        let m = match_display(&e, &e.scale(&Coeff::int(-2)), &[]).unwrap();
        assert!(m.matched);
        assert_eq!(m.scale, Some(Coeff::int(-2)));
        assert_eq!(monic(&e.scale(&Coeff::int(5))).lead().unwrap().1, &Coeff::one());
    }
}
