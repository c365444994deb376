//! Least-squares fitting of constants that enter residuals affinely.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::numfn::FnTable;
use super::residuals::sample_points;
use super::NumericError;
use crate::expr::eval::NumEnv;
use crate::expr::{Expr, Var};

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// Max residual with all fitted constants set to zero.
    pub initial_max_residual: f64,
    pub max_residual: f64,
    pub singular_values: Vec<f64>,
}

/// Splits each condition as `r0 + sum_i c_i r_i`; fails on non-affine dependence.
pub fn affine_parts(conds: &[Expr], names: &[&str]) -> Result<Vec<Vec<Expr>>, NumericError> {
    let mut out = Vec::new();
    for c in conds {
        let parts = c.collect_params(names)?;
        let mut row = vec![Expr::zero(); names.len() + 1];
        for (key, e) in parts {
            let deg: u32 = key.iter().sum();
            match deg {
                0 => row[0] = e,
                1 => row[1 + key.iter().position(|k| *k == 1).unwrap()] = e,
                _ => return Err(NumericError::NonAffine(format!("`{c}` has degree {deg} in the fitted constants"))),
            }
        }
        out.push(row);
    }
    Ok(out)
}

/// Fits `names` so the sampled residuals of `conds` are minimal in the
/// least-squares sense; reports the resulting maximum residual.
pub fn fit_free_constants(
    conds: &[Expr],
    names: &[&str],
    consts: &BTreeMap<String, f64>,
    fns: &FnTable,
    var: Var,
    domain: (f64, f64),
    samples: usize,
) -> Result<FitResult, NumericError> {
    let parts = affine_parts(conds, names)?;
    let pts = sample_points(domain, samples);
    let rows = pts.len() * conds.len();
    let mut a = DMatrix::<f64>::zeros(rows, names.len());
    let mut b = DVector::<f64>::zeros(rows);
    for (ci, row) in parts.iter().enumerate() {
        for (pi, &t) in pts.iter().enumerate() {
            let r = ci * pts.len() + pi;
            let mut u = [0.0; 2];
            u[var.index()] = t;
            let env = NumEnv { u, consts, fns };
            b[r] = -row[0].eval_real(&env)?;
            for j in 0..names.len() {
                a[(r, j)] = row[j + 1].eval_real(&env)?;
            }
        }
    }
    let initial = b.amax();
    let svd = a.clone().svd(true, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().fold(0.0f64, |m, x| m.max(*x));
    let cutoff = 1e-10 * smax.max(f64::MIN_POSITIVE);
    if sv.iter().any(|s| *s <= cutoff) || names.is_empty() && !conds.is_empty() && rows == 0 {
        let v_t = svd.v_t.as_ref().expect("requested");
        let null_space = sv.iter().enumerate().filter(|(_, s)| **s <= cutoff).map(|(k, _)| v_t.row(k).iter().copied().collect()).collect();
        return Err(NumericError::RankDeficient { null_space });
    }
    let x = svd.solve(&b, cutoff).map_err(|e| NumericError::Precondition(e.to_string()))?;
    let resid = &a * &x - &b;
    Ok(FitResult {
        names: names.iter().map(|s| s.to_string()).collect(),
        values: x.iter().copied().collect(),
        initial_max_residual: initial,
        max_residual: resid.amax(),
        singular_values: sv,
    })
}
