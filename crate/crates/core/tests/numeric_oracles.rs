mod common;

use common::oracles::{slope, wp_series_ode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superint::expr::{parse, Var};
use superint::numeric::numfn::{ExprOde, FnTable, NumericFunction, OdeUnknown, WeierstrassParams};
use superint::numeric::ode::{integrate, Tolerances};
use superint::numeric::pipeline::{pvi_branch, PviBranchConfig};
use superint::numeric::weierstrass::wp;

#[test]
fn oracle_reproduces_trigonometric_lattice() {
    let zs: Vec<f64> = (3..=14).map(|i| 0.1 * i as f64).collect();
    for (z, (p, dp)) in zs.iter().zip(wp_series_ode(&zs, 4.0 / 3.0, 8.0 / 27.0)) {
        let s = z.sin();
        assert!((p - (1.0 / (s * s) - 1.0 / 3.0)).abs() < 1e-11 * p.abs().max(1.0), "z={z}");
        assert!((dp + 2.0 * z.cos() / (s * s * s)).abs() < 1e-10 * dp.abs().max(1.0), "z={z}");
    }
}

#[test]
fn wp_matches_series_ode_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..8 {
        let g2 = rng.gen_range(-2.0..4.0);
        let g3 = rng.gen_range(-1.0..1.0);
        let mut zs: Vec<f64> = (0..20).map(|_| rng.gen_range(0.3..1.1)).collect();
        zs.sort_by(f64::total_cmp);
        for (z, (p, dp)) in zs.iter().zip(wp_series_ode(&zs, g2, g3)) {
            let (q, dq) = wp(*z, g2, g3).unwrap();
            assert!((p - q).abs() <= 1e-9 * p.abs().max(1.0), "g2={g2} g3={g3} z={z}: {p} vs {q}");
            assert!((dp - dq).abs() <= 1e-9 * dp.abs().max(1.0), "g2={g2} g3={g3} z={z}: {dp} vs {dq}");
        }
    }
}

#[test]
fn wp_differential_equation_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let g2 = rng.gen_range(-2.0..4.0);
        let g3 = rng.gen_range(-1.0..1.0);
        let z = rng.gen_range(0.3..1.1);
        let (p, dp) = wp(z, g2, g3).unwrap();
        let r = dp * dp - 4.0 * p * p * p + g2 * p + g3;
        assert!(r.abs() < 1e-9, "g2={g2} g3={g3} z={z}: {r}");
    }
}

#[test]
fn wp_near_origin_and_degenerate_lattice() {
    let z = 1e-3;
    assert!((z * z * wp(z, 4.0, 0.0).unwrap().0 - 1.0).abs() < 1e-5);
    for z in [0.2, 1.0, 3.0] {
        assert!((wp(z, 0.0, 0.0).unwrap().0 - 1.0 / (z * z)).abs() <= 1e-12 / (z * z));
    }
}

#[test]
fn integrator_order_on_harmonic_oscillator() {
    let f = |_t: f64, y: &[f64], out: &mut [f64]| {
        out[0] = y[1];
        out[1] = -y[0];
        Ok(())
    };
    let (mut log_steps, mut log_err, mut log_tol) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..12 {
        let t = 1e-5 / 2f64.powi(k);
        let tol = Tolerances { rtol: t, atol: t, ..Tolerances::default() };
        let sol = integrate(&f, 0.0, &[0.0, 1.0], 20.0, &tol).unwrap();
        let err = (sol.eval(20.0).unwrap()[0] - 20f64.sin()).abs();
        log_steps.push((sol.steps_accepted as f64).ln());
        log_err.push(err.ln());
        log_tol.push(t.ln());
    }
    // Fifth-order pair: error ~ steps^-5 and proportional to the tolerance.
    let order = -slope(&log_steps, &log_err);
    assert!((4.5..=5.5).contains(&order), "observed order {order}");
    let tol_slope = slope(&log_tol, &log_err);
    assert!((0.9..=1.1).contains(&tol_slope), "error/tolerance slope {tol_slope}");
}

#[test]
fn exponential_decay_error_tracks_tolerance() {
    let f = |_t: f64, y: &[f64], out: &mut [f64]| {
        out[0] = -y[0];
        Ok(())
    };
    for t in [1e-6, 1e-8, 1e-10] {
        let tol = Tolerances { rtol: t, atol: t, ..Tolerances::default() };
        let sol = integrate(&f, 0.0, &[1.0], 10.0, &tol).unwrap();
        let err = (0..=100).map(|i| 0.1 * i as f64).map(|x| (sol.eval(x).unwrap()[0] - (-x).exp()).abs()).fold(0.0, f64::max);
        assert!(err < 20.0 * t, "tol {t}: {err}");
    }
}

#[test]
fn second_derivative_zero_is_linear() {
    let ode = ExprOde {
        var: Var::U2,
        unknowns: vec![OdeUnknown { name: "W".into(), order: 2, rhs: parse("0").unwrap() }],
        consts: Default::default(),
        known: FnTable::new(),
    };
    let r = ode.solve(0.0, &[0.0, 1.0], (-1.0, 2.0), &Tolerances::default(), 0).unwrap();
    let w = r.functions.get("W").unwrap();
    for u in [-1.0, -0.3, 0.0, 0.8, 2.0] {
        assert!((w.eval(u, 0).unwrap() - u).abs() < 1e-14);
    }
}

#[test]
fn third_order_potential_equation_tracks_wp() {
    let p = WeierstrassParams { hbar: 1.0, a1: 0.0, u20: 0.0, g2: 4.0, g3: 0.0 };
    let exact = NumericFunction::weierstrass_potential("v2", Var::U2, p, (0.5, 1.5), 3);
    let ode = ExprOde {
        var: Var::U2,
        unknowns: vec![OdeUnknown { name: "v2".into(), order: 3, rhs: parse("12*hbar^(-2)*(v2 - a1)*D[v2,u2,1]").unwrap() }],
        consts: [("hbar".to_string(), 1.0), ("a1".to_string(), 0.0)].into(),
        known: FnTable::new(),
    };
    let y0 = exact.jet(0.5, 2).unwrap();
    let tol = Tolerances { rtol: 1e-12, atol: 1e-12, ..Tolerances::default() };
    let r = ode.solve(0.5, &y0, (0.5, 1.5), &tol, 0).unwrap();
    let v = r.functions.get("v2").unwrap();
    for i in 0..=100 {
        let u = 0.5 + 0.01 * i as f64;
        let (a, b) = (v.eval(u, 0).unwrap(), exact.eval(u, 0).unwrap());
        assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "u={u}: {a} vs {b}");
    }
}

#[test]
fn painleve_dense_output_self_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..3 {
        let cfg = PviBranchConfig {
            hbar: 1.0,
            beta1: rng.gen_range(-1.0..1.0),
            beta2: rng.gen_range(-1.0..1.0),
            u2_value: rng.gen_range(-1.0..1.0),
            domain: (std::f64::consts::FRAC_PI_4, 3.0 * std::f64::consts::FRAC_PI_4),
            t_mid: std::f64::consts::FRAC_PI_2,
            w_mid: std::array::from_fn(|_| rng.gen_range(-0.5..0.5)),
            samples: 201,
            // the top derivative comes from the interpolant, whose error is about 1e3 * tol here
            tol: Tolerances { rtol: 1e-12, atol: 1e-12, ..Tolerances::default() },
        };
        let run = pvi_branch(&cfg).unwrap();
        assert!(run.equation.max_abs < 1e-7, "{cfg:?}: {}", run.equation.max_abs);
    }
}
