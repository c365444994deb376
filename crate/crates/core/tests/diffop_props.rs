mod common;

use common::leaf;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use superint::catalog;
use superint::diffop::{
    build_hamiltonian, build_l2, commutator, expand_standard, to_standard_form, DiffOp, Geometry, OpKey, SeparablePotential,
};
use superint::expr::Expr;

fn seeded(cases: u32, seed: u64) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: RngSeed::Fixed(seed), failure_persistence: None, ..ProptestConfig::default() }
}

/// Leaf or a product of two leaves.
fn coeff() -> impl Strategy<Value = Expr> {
    prop_oneof![leaf(), (leaf(), leaf()).prop_map(|(a, b)| &a * &b)]
}

/// Plain operator with up to four terms `c d1^a d2^b`, `a + b <= order`.
fn plain_op(order: u32) -> impl Strategy<Value = DiffOp> {
    let key = (0..=order).prop_flat_map(move |n| (0..=n).prop_map(move |a| OpKey::new(a, n - a, 0, 0)));
    prop::collection::vec((key, coeff()), 1..=4).prop_map(DiffOp::from_terms)
}

/// Operator already in standard shape: `a, b <= 1` and `j + k <= 1`.
fn standard_op() -> impl Strategy<Value = DiffOp> {
    let key = (0u32..=1, 0u32..=1, 0u32..=2).prop_map(|(a, b, p)| match p {
        0 => OpKey::new(a, b, 0, 0),
        1 => OpKey::new(a, b, 1, 0),
        _ => OpKey::new(a, b, 0, 1),
    });
    prop::collection::vec((key, coeff()), 1..=4).prop_map(DiffOp::from_terms)
}

fn generic() -> (Geometry, SeparablePotential) {
    (Geometry::generic(), SeparablePotential::generic())
}

proptest! {
    #![proptest_config(seeded(100, 0x5eed_0001))]

    #[test]
    fn expand_after_reduce_is_identity(x in plain_op(3)) {
        let (g, p) = generic();
        let s = to_standard_form(&x, &g, &p).unwrap();
        prop_assert!(s.has_standard_shape());
        let back = expand_standard(&s, &g, &p).unwrap();
        prop_assert!(back.sub(&x).normalized().is_zero(), "{x:?}");
    }

    #[test]
    fn reduce_after_expand_is_identity(s in standard_op()) {
        let (g, p) = generic();
        let e = expand_standard(&s, &g, &p).unwrap();
        let r = to_standard_form(&e, &g, &p).unwrap();
        prop_assert!(r.sub(&s).normalized().is_zero(), "{s:?}");
    }
}

proptest! {
    #![proptest_config(seeded(40, 0x5eed_0002))]

    #[test]
    fn jacobi_identity(x in plain_op(2), y in plain_op(2), z in plain_op(2)) {
        let c = |a: &DiffOp, b: &DiffOp| commutator(a, b).unwrap();
        let sum = c(&x, &c(&y, &z)).add(&c(&y, &c(&z, &x))).add(&c(&z, &c(&x, &y)));
        prop_assert!(sum.normalized().is_zero());
    }

    #[test]
    fn commutator_is_antisymmetric(x in plain_op(2), y in plain_op(3)) {
        let sum = commutator(&x, &y).unwrap().add(&commutator(&y, &x).unwrap());
        prop_assert!(sum.normalized().is_zero());
    }
}

#[test]
fn h_commutes_with_l2_on_catalog_geometries() {
    for entry in catalog::all().unwrap() {
        let g = &entry.geometry;
        let p = SeparablePotential::angular();
        let h = build_hamiltonian(g, &p).unwrap();
        let l = build_l2(g, &p).unwrap();
        assert!(commutator(&h, &l).unwrap().normalized().is_zero(), "{}", g.name);
    }
    let (g, p) = generic();
    let c = commutator(&build_hamiltonian(&g, &p).unwrap(), &build_l2(&g, &p).unwrap()).unwrap();
    assert!(c.normalized().is_zero());
}
