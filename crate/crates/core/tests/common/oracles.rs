//! Independent reference values for the numeric kernel.
#![allow(dead_code)]

/// `(wp, wp')` at each of the increasing points `zs >= 0.25` by integrating
/// `wp'' = 6 wp^2 - g2/2` with classical RK4 from Laurent-series data at
/// `z0 = 0.25`. Steps are proportional to `z`.
pub fn wp_series_ode(zs: &[f64], g2: f64, g3: f64) -> Vec<(f64, f64)> {
    let z0: f64 = 0.25;
    // wp = z^-2 + sum_{k>=2} c_k z^(2k-2)
    let mut c = vec![0.0, 0.0, g2 / 20.0, g3 / 28.0];
    for k in 4..40 {
        let s: f64 = (2..=k - 2).map(|m| c[m] * c[k - m]).sum();
        c.push(3.0 * s / ((2 * k + 1) * (k - 3)) as f64);
    }
    let mut y = [z0.powi(-2), -2.0 * z0.powi(-3)];
    for (k, ck) in c.iter().enumerate().skip(2) {
        let e = 2 * k as i32 - 2;
        y[0] += ck * z0.powi(e);
        y[1] += ck * e as f64 * z0.powi(e - 1);
    }
    let f = |y: [f64; 2]| [y[1], 6.0 * y[0] * y[0] - g2 / 2.0];
    let mut z = z0;
    let mut out = Vec::with_capacity(zs.len());
    for &target in zs {
        assert!(target >= z, "oracle points must increase from {z0}");
        while z < target {
            let h = (2e-4 * z).min(target - z);
            let k1 = f(y);
            let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            z += h;
        }
        out.push((y[0], y[1]));
    }
    out
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
