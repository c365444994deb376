mod common;

use common::*;
use proptest::prelude::*;
use superint::expr::{parse, Expr, Var};

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, .. ProptestConfig::default() })]

    #[test]
    fn normalize_is_idempotent(e in rational_strategy()) {
        let n = e.normalize();
        prop_assert_eq!(n.normalize(), n.clone());
        prop_assert_eq!(n.to_text(), n.normalize().to_text());
    }

    #[test]
    fn canonical_text_roundtrips(e in expr_strategy()) {
        let t = e.to_text();
        let back = parse(&t).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(back.to_text(), t);
    }

    #[test]
    fn differentiation_is_linear_and_leibniz(a in expr_strategy(), b in expr_strategy(), x in any::<bool>()) {
        let v = if x { Var::U1 } else { Var::U2 };
        let lin = &(&a + &b).diff(v) - &(&a.diff(v) + &b.diff(v));
        prop_assert!(lin.is_zero().unwrap());
        let leib = &(&a * &b).diff(v) - &(&(&a.diff(v) * &b) + &(&a * &b.diff(v)));
        prop_assert!(leib.is_zero().unwrap());
    }

    #[test]
    fn derivative_matches_central_difference(e in rational_strategy(), x in any::<bool>(), s in 0u64..1000) {
        let v = if x { Var::U1 } else { Var::U2 };
        let d = e.diff(v);
        let fns = SmoothFns { seed: s };
        let consts = default_consts();
        let u = [0.4 + (s % 7) as f64 * 0.1, 0.3 + (s % 11) as f64 * 0.1];
        let h = 1e-5;
        let mut up = u;
        let mut dn = u;
        up[v.index()] += h;
        dn[v.index()] -= h;
        let fd = (eval_at(&e, up, &consts, &fns) - eval_at(&e, dn, &consts, &fns)) / (2.0 * h);
        let exact = eval_at(&d, u, &consts, &fns);
        let scale = exact.abs().max(eval_at(&e, u, &consts, &fns).abs()).max(1.0);
        prop_assert!((fd - exact).abs() < 1e-6 * scale, "fd {} exact {}", fd, exact);
    }

    #[test]
    fn zero_expressions_sample_to_zero(a in expr_strategy(), b in expr_strategy(), c in expr_strategy(), s in 0u64..1000) {
        let z = &(&(&a + &b) * &c) - &(&(&a * &c) + &(&b * &c));
        let trig = &(&parse("sin(u2)^2 + cos(u2)^2 - 1").unwrap() * &a) + &z;
        prop_assert!(trig.is_zero().unwrap());
        let fns = SmoothFns { seed: s };
        let consts = default_consts();
        for k in 0..20 {
            let u = [0.2 + 0.07 * k as f64, 1.5 - 0.05 * k as f64];
            let val = eval_at(&trig, u, &consts, &fns);
            prop_assert!(val.abs() < 1e-9, "value {}", val);
        }
    }

    #[test]
    fn collect_params_roundtrip(a in expr_strategy(), b in expr_strategy(), c in expr_strategy()) {
        let e = &(&a + &(&b * &parse("H").unwrap())) + &(&c * &parse("H*L^2 - L").unwrap());
        let parts = e.collect_hl().unwrap();
        let mut back = Expr::zero();
        for ((j, k), coeff) in &parts {
            prop_assert!(!coeff.const_names().contains("H") && !coeff.const_names().contains("L"));
            let hl = &parse("H").unwrap().powu(*j) * &parse("L").unwrap().powu(*k);
            back = &back + &(coeff * &hl);
        }
        prop_assert!((&back - &e).is_zero().unwrap());
    }
}

#[test]
fn parse_examples() {
    assert_eq!(
        parse("sin(u2)").unwrap(),
        (&(&parse("exp(I*u2)").unwrap() - &parse("exp(-I*u2)").unwrap())).div(&Expr::i().scale(&superint::expr::Coeff::int(2))).unwrap()
    );
    assert!(parse("sin(u2)^2 + cos(u2)^2 - 1").unwrap().is_zero().unwrap());
    assert!(parse("exp(u1)*exp(-u1) - 1").unwrap().is_zero().unwrap());
    assert!(parse("cosh(u1)^2 - sinh(u1)^2 - 1").unwrap().is_zero().unwrap());
    let f0 = parse("4*hbar^2*exp(-u1)*sin(u2)").unwrap();
    assert_eq!(f0.diff_n(Var::U2, 2), f0.scale(&superint::expr::Coeff::int(-1)));
    assert_eq!(parse("exp(2*u1)").unwrap().diff(Var::U1), parse("2*exp(2*u1)").unwrap());
    assert_eq!(parse("U2").unwrap().diff_n(Var::U2, 2), parse("D[U2,u2,2]").unwrap());
    assert_eq!(parse("U2").unwrap().diff(Var::U1), Expr::zero());
}

#[test]
fn substitution_examples() {
    use superint::expr::Bindings;
    let e = parse("a4*D[v2,u2,1] + 2*D[U2,u2,2]").unwrap();
    assert_eq!(e.subs_const("a4", &Expr::zero()).unwrap(), parse("2*D[U2,u2,2]").unwrap());
    let u2 = parse("D[U2,u2,2]").unwrap();
    let b = Bindings::new().with_fn("U2", [0, 0], parse("b0 + b1*u2").unwrap());
    assert_eq!(u2.substitute(&b).unwrap(), Expr::zero());
    let mut dup = Bindings::new();
    dup.bind_const("a4", Expr::zero()).unwrap();
    assert!(dup.bind_const("a4", Expr::one()).is_err());
}
