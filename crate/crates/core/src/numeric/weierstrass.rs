//! Weierstrass elliptic function by Laurent series plus duplication.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WpError {
    #[error("argument {z} is within the guard radius of a lattice pole near {pole}")]
    NearPole { z: f64, pole: f64 },
    #[error("argument reduction failed for z = {0}")]
    NoConvergence(String),
}

const TERMS: usize = 48;
/// Relative distance to a pole below which evaluation is refused.
pub const POLE_GUARD: f64 = 1e-6;

/// Laurent coefficients `c_k` of `wp(z) = z^-2 + sum_{k>=2} c_k z^(2k-2)`.
pub fn laurent_coefficients(g2: f64, g3: f64, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n.max(4)];
    c[2] = g2 / 20.0;
    c[3] = g3 / 28.0;
    for k in 4..c.len() {
        let s: f64 = (2..=k - 2).map(|m| c[m] * c[k - m]).sum();
        c[k] = 3.0 / (((2 * k + 1) * (k - 3)) as f64) * s;
    }
    c
}

struct Series {
    c: Vec<f64>,
    radius: f64,
}

impl Series {
    fn new(g2: f64, g3: f64) -> Self {
        let c = laurent_coefficients(g2, g3, TERMS);
        let mut radius = f64::INFINITY;
        for (k, ck) in c.iter().enumerate().skip(2) {
            if *ck != 0.0 {
                radius = radius.min(ck.abs().powf(-1.0 / (2 * k) as f64));
            }
        }
        Series { c, radius: 0.4 * radius }
    }

    fn eval(&self, z: Complex64) -> (Complex64, Complex64) {
        let z2 = z * z;
        let mut p = z2.inv();
        let mut dp = -2.0 * p / z;
        let mut pow = Complex64::new(1.0, 0.0);
        // odd-index coefficients vanish when g3 = 0, so require two small terms in a row
        let mut small = 0;
        for k in 2..self.c.len() {
            if k > 2 {
                pow *= z2;
            }
            // pow = z^(2k-4): term c_k z^(2k-2), derivative (2k-2) c_k z^(2k-3)
            let t = self.c[k] * pow * z2;
            p += t;
            dp += (2 * k - 2) as f64 * self.c[k] * pow * z;
            small = if t.norm() < 1e-18 * p.norm() { small + 1 } else { 0 };
            if k > 6 && small >= 2 {
                break;
            }
        }
        (p, dp)
    }
}

/// `(wp(z), wp'(z))` for complex argument.
pub fn wp_complex(z: Complex64, g2: f64, g3: f64) -> Result<(Complex64, Complex64), WpError> {
    if z.norm() < POLE_GUARD {
        return Err(WpError::NearPole { z: z.re, pole: 0.0 });
    }
    let s = Series::new(g2, g3);
    let mut n = 0;
    let mut w = z;
    while w.norm() > s.radius {
        w /= 2.0;
        n += 1;
        if n > 60 {
            return Err(WpError::NoConvergence(z.to_string()));
        }
    }
    let (mut p, mut dp) = s.eval(w);
    for _ in 0..n {
        let ddp = 6.0 * p * p - g2 / 2.0;
        let dddp = 12.0 * p * dp;
        let r = ddp / dp;
        let p2 = 0.25 * r * r - 2.0 * p;
        let dp2 = 0.25 * ddp / (dp * dp * dp) * (dddp * dp - ddp * ddp) - dp;
        p = p2;
        dp = dp2;
        if !(p.is_finite() && dp.is_finite()) {
            return Err(WpError::NearPole { z: z.re, pole: z.re });
        }
    }
    // Near a pole wp ~ (z-p)^-2 and wp' ~ -2 (z-p)^-3, so z - p ~ -2 wp / wp'.
    let offset = -2.0 * p / dp;
    if p.norm() > 1.0 / (POLE_GUARD * POLE_GUARD) || offset.norm() < POLE_GUARD {
        return Err(WpError::NearPole { z: z.re, pole: (z - offset).re });
    }
    Ok((p, dp))
}

/// `(wp(z), wp'(z))` for real argument and real invariants.
pub fn wp(z: f64, g2: f64, g3: f64) -> Result<(f64, f64), WpError> {
    let (p, dp) = wp_complex(Complex64::new(z, 0.0), g2, g3)?;
    Ok((p.re, dp.re))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_laurent_term() {
        let (p, _) = wp(1e-3, 4.0, 0.0).unwrap();
        assert!((p * 1e-6 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn degenerate_lattice_is_inverse_square() {
        for z in [0.1, 0.7, 2.5, 10.0] {
            let (p, dp) = wp(z, 0.0, 0.0).unwrap();
            assert!((p - 1.0 / (z * z)).abs() <= 1e-12 * p.abs());
            assert!((dp + 2.0 / (z * z * z)).abs() <= 1e-12 * dp.abs());
        }
    }

    #[test]
    fn trigonometric_degeneration() {
        // g2 = 4/3, g3 = 8/27: wp(z) = 1/sin^2(z) - 1/3
        for z in [0.3, 1.0, 1.4, 2.0, 2.9] {
            let (p, dp) = wp(z, 4.0 / 3.0, 8.0 / 27.0).unwrap();
            let s: f64 = z.sin();
            assert!((p - (1.0 / (s * s) - 1.0 / 3.0)).abs() < 1e-11 * p.abs().max(1.0), "z={z}");
            assert!((dp + 2.0 * z.cos() / (s * s * s)).abs() < 1e-10 * dp.abs().max(1.0));
        }
    }

    #[test]
    fn lemniscatic_lattice_has_no_odd_terms() {
        // -1 + 2 / sn^2(sqrt(2) z | 1/2) at 30 digits
        for (z, want) in [(0.5, 4.050208734712060872), (1.04, 1.158375979995075142), (1.5, 1.074045534929053337)] {
            let (p, _) = wp(z, 4.0, 0.0).unwrap();
            assert!((p - want).abs() < 1e-12 * want, "z={z}: {p}");
        }
    }

    #[test]
    fn rejects_pole() {
        assert!(matches!(wp(0.0, 4.0, 0.0), Err(WpError::NearPole { .. })));
        assert!(matches!(wp(std::f64::consts::PI, 4.0 / 3.0, 8.0 / 27.0), Err(WpError::NearPole { .. })));
    }
}
