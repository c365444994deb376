//! Sampled residuals of condition sets.

use std::collections::BTreeMap;

use super::numfn::FnTable;
use super::NumericError;
use crate::expr::eval::NumEnv;
use crate::expr::{Expr, Var};

/// Default number of equispaced samples.
pub const DEFAULT_SAMPLES: usize = 201;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResidualRow {
    pub max_abs: f64,
    /// Sample point where the maximum occurs.
    pub at: f64,
    /// Largest sum of absolute term values seen (cancellation scale).
    pub scale: f64,
}

/// Equispaced sample points including both ends.
pub fn sample_points((a, b): (f64, f64), n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Maximum absolute residual of each condition over the samples.
pub fn condition_residuals(
    conds: &[Expr],
    consts: &BTreeMap<String, f64>,
    fns: &FnTable,
    var: Var,
    domain: (f64, f64),
    samples: usize,
) -> Result<Vec<ResidualRow>, NumericError> {
    if !(domain.0 < domain.1) {
        return Err(NumericError::Precondition("empty sampling domain".into()));
    }
    let pts = sample_points(domain, samples);
    let mut rows = Vec::with_capacity(conds.len());
    for c in conds {
        let mut row = ResidualRow { max_abs: 0.0, at: pts[0], scale: 0.0 };
        for &t in &pts {
            let mut u = [0.0; 2];
            u[var.index()] = t;
            let env = NumEnv { u, consts, fns };
            let (v, s) = c.eval_scaled(&env)?;
            if v.re.abs() >= row.max_abs {
                row.max_abs = v.re.abs();
                row.at = t;
            }
            row.scale = row.scale.max(s);
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn linear_condition_with_constant_u2_vanishes() {
        let c = parse("a4*D[v2,u2,1] + 2*D[U2,u2,2]").unwrap().subs_const("a4", &Expr::zero()).unwrap();
        let c = c.subs_fn("U2", [0, 0], &parse("b0").unwrap()).unwrap();
        let rows = condition_residuals(&[c], &BTreeMap::new(), &FnTable::new(), Var::U2, (0.5, 2.5), DEFAULT_SAMPLES).unwrap();
        assert_eq!(rows[0].max_abs, 0.0);
    }
}
