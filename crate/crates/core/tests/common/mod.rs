//! Shared test helpers: a random expression grammar and smooth stand-ins
//! for unknown functions.
#![allow(dead_code)]

pub mod oracles;

use std::collections::BTreeMap;

use proptest::prelude::*;
use superint::expr::eval::{EvalError, FnEval, NumEnv};
use superint::expr::{parse, Deps, Expr, FnAtom, Var};

/// Fuzzer grammar:
///
/// ```text
/// leaf  := u1 | u2 | a1 | hbar | U2 | v2 | F0 | exp(+-u1) | sin(u2) | cos(u2) | cosh(u1) | q
/// node  := leaf | node + node | node * node | node - node | node^2 | D[node, var]
/// ```
///
/// with `q` a small rational.
pub fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just("u1"),
        Just("u2"),
        Just("a1"),
        Just("hbar"),
        Just("U2"),
        Just("v2"),
        Just("F0"),
        Just("exp(u1)"),
        Just("exp(-u1)"),
        Just("sin(u2)"),
        Just("cos(u2)"),
        Just("cosh(u1)"),
        Just("D[F0,u1,1]"),
    ]
    .prop_map(|s| parse(s).unwrap())
    .boxed()
    .prop_union((-3i64..=3, 1i64..=3).prop_map(|(n, d)| Expr::ratio(n, d)).boxed())
}

pub fn expr_strategy() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| &a + &b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| &a * &b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| &a - &b),
            inner.clone().prop_map(|a| a.powu(2)),
            (inner.clone(), any::<bool>()).prop_map(|(a, x)| a.diff(if x { Var::U1 } else { Var::U2 })),
        ]
    })
}

/// Expression divided by a positive denominator, exercising reciprocals.
pub fn rational_strategy() -> impl Strategy<Value = Expr> {
    (expr_strategy(), prop_oneof![Just("1 + u1^2"), Just("cosh(u1)"), Just("2 + sin(u2)"), Just("u1")])
        .prop_map(|(e, d)| e.div(&parse(d).unwrap()).unwrap())
}

/// Smooth stand-ins: one-variable unknowns are `A sin(k u + p)`, two-variable
/// ones a product of such factors. All derivatives are exact.
pub struct SmoothFns {
    pub seed: u64,
}

fn params(name: &str, seed: u64, salt: u64) -> (f64, f64, f64) {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed ^ salt.wrapping_mul(0x9e37_79b9);
    for b in name.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x1000_0000_01b3);
    }
    let f = |k: u32| ((h >> (k * 16)) & 0xffff) as f64 / 65535.0;
    (0.5 + f(0), 0.6 + 0.8 * f(1), 2.0 * f(2))
}

fn sin_deriv(a: f64, k: f64, p: f64, u: f64, n: u32) -> f64 {
    a * k.powi(n as i32) * (k * u + p + n as f64 * std::f64::consts::FRAC_PI_2).sin()
}

impl FnEval for SmoothFns {
    fn eval_fn(&self, f: &FnAtom, u: [f64; 2]) -> Result<f64, EvalError> {
        let mut val = 1.0;
        for v in Var::ALL {
            if f.deps.contains(v) {
                let (a, k, p) = params(&f.name, self.seed, v.index() as u64);
                val *= sin_deriv(a, k, p, u[v.index()], f.d[v.index()]);
            }
        }
        if f.deps == Deps::Both || f.d.iter().sum::<u32>() <= 12 {
            Ok(val)
        } else {
            Err(EvalError::OrderTooHigh { name: f.name.to_string(), order: f.order(), max: 12 })
        }
    }
}

pub fn default_consts() -> BTreeMap<String, f64> {
    [("a1", 0.7), ("hbar", 1.1), ("H", 0.9), ("L", -0.4), ("a3", 0.3), ("a4", 1.3), ("a5", -0.8)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

pub fn eval_at(e: &Expr, u: [f64; 2], consts: &BTreeMap<String, f64>, fns: &SmoothFns) -> f64 {
    let env = NumEnv { u, consts, fns };
    e.eval_real(&env).unwrap()
}
