//! Finite-difference weights.

/// Fornberg's algorithm: weights `w[m][j]` for the `m`-th derivative at `x0`
/// from values at `xs[j]`, for all `m <= max_deriv`.
pub fn fornberg(x0: f64, xs: &[f64], max_deriv: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_deriv + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Half-width of the centred stencil of accuracy `p` for derivative `d`.
pub fn half_width(d: usize, p: usize) -> usize {
    if d == 0 {
        0
    } else {
        (d + 1) / 2 - 1 + p / 2
    }
}

/// Centred weights on unit spacing for derivative `d` with accuracy `p`,
/// indexed by offset `-r..=r`.
pub fn central(d: usize, p: usize) -> Vec<f64> {
    let r = half_width(d, p) as i64;
    let xs: Vec<f64> = (-r..=r).map(|k| k as f64).collect();
    fornberg(0.0, &xs, d).swap_remove(d)
}
