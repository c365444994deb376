use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Atom, Expr, ExprError, FnAtom, Var};
use crate::numeric::weierstrass;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound constant `{0}`")]
    UnboundConst(String),
    #[error("unbound function `{0}`")]
    UnboundFn(String),
    #[error("derivative order {order} of `{name}` exceeds the available order {max}")]
    OrderTooHigh { name: String, order: u32, max: u32 },
    #[error("evaluation point {at} lies within the guard radius of a pole at {pole}")]
    NearPole { at: f64, pole: f64 },
    #[error("expected a real value, imaginary part {im:e} at scale {scale:e}")]
    NotReal { im: f64, scale: f64 },
    #[error("{0}")]
    Numeric(String),
}

/// Supplies values of unknown-function atoms.
pub trait FnEval: Sync {
    fn eval_fn(&self, f: &FnAtom, u: [f64; 2]) -> Result<f64, EvalError>;
}

/// Function table with nothing bound.
pub struct NoFns;

impl FnEval for NoFns {
    fn eval_fn(&self, f: &FnAtom, _u: [f64; 2]) -> Result<f64, EvalError> {
        Err(EvalError::UnboundFn(f.name.to_string()))
    }
}

pub struct NumEnv<'a> {
    pub u: [f64; 2],
    pub consts: &'a BTreeMap<String, f64>,
    pub fns: &'a dyn FnEval,
}

impl Expr {
    pub fn eval_complex(&self, env: &NumEnv<'_>) -> Result<Complex64, EvalError> {
        Ok(self.eval_scaled(env)?.0)
    }

    /// Value together with the sum of absolute term values (a cancellation scale).
    pub fn eval_scaled(&self, env: &NumEnv<'_>) -> Result<(Complex64, f64), EvalError> {
        let mut av = |a: &Atom| -> Result<Complex64, EvalError> {
            match a {
                Atom::Var(v) => Ok(Complex64::new(env.u[v.index()], 0.0)),
                Atom::Const(n) => {
                    env.consts.get(&**n).map(|x| Complex64::new(*x, 0.0)).ok_or_else(|| EvalError::UnboundConst(n.to_string()))
                }
                Atom::Fn(f) => env.fns.eval_fn(f, env.u).map(|x| Complex64::new(x, 0.0)),
                Atom::Wp(w) => {
                    let get = |n: &str| env.consts.get(n).copied().ok_or_else(|| EvalError::UnboundConst(n.to_string()));
                    let shift = match &w.shift {
                        Some(s) => get(s)?,
                        None => 0.0,
                    };
                    let z = env.u[w.var.index()] - shift;
                    let (p, dp) = weierstrass::wp(z, get(&w.g2)?, get(&w.g3)?).map_err(|e| match e {
                        weierstrass::WpError::NearPole { z, pole } => EvalError::NearPole { at: z + shift, pole: pole + shift },
                        other => EvalError::Numeric(other.to_string()),
                    })?;
                    Ok(Complex64::new(if w.deriv == 0 { p } else { dp }, 0.0))
                }
                Atom::Recip(_) => unreachable!("reciprocals are evaluated structurally"),
            }
        };
        eval_generic(self, env.u, &mut av)
    }

    /// Real value; fails if the imaginary part exceeds 1e-12 relative to the term scale.
    pub fn eval_real(&self, env: &NumEnv<'_>) -> Result<f64, EvalError> {
        let (v, scale) = self.eval_scaled(env)?;
        if v.im.abs() > 1e-12 * scale.max(1.0) {
            return Err(EvalError::NotReal { im: v.im, scale });
        }
        Ok(v.re)
    }
}

fn eval_generic(e: &Expr, u: [f64; 2], av: &mut dyn FnMut(&Atom) -> Result<Complex64, EvalError>) -> Result<(Complex64, f64), EvalError> {
    let mut cache: BTreeMap<&Atom, Complex64> = BTreeMap::new();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (m, c) in e.terms() {
        let mut val = c.to_complex();
        if !m.exp.is_zero() {
            let mut arg = Complex64::new(0.0, 0.0);
            for v in Var::ALL {
                let k = m.exp.coeff(v).to_complex();
                arg += k * u[v.index()];
            }
            val *= arg.exp();
        }
        for (a, p) in &m.pows {
            let x = match cache.get(a) {
                Some(x) => *x,
                None => {
                    let x = match a {
                        Atom::Recip(inner) => {
                            let (d, _) = eval_generic(inner, u, av)?;
                            if d.norm() == 0.0 {
                                return Err(EvalError::Numeric("division by zero in reciprocal".into()));
                            }
                            d.inv()
                        }
                        _ => av(a)?,
                    };
                    cache.insert(a, x);
                    x
                }
            };
            val *= x.powi(*p);
        }
        scale += val.norm();
        sum += val;
    }
    Ok((sum, scale))
}

/// Numeric double-check for a symbolically zero expression: evaluates at
/// random points with independent random values for every opaque atom.
pub(crate) fn guard_zero(e: &Expr, seed: u64) -> Result<(), ExprError> {
    if e.is_empty() {
        return Ok(());
    }
    let atoms = e.atoms_deep();
    let mut const_names: Vec<String> = e.const_names().into_iter().collect();
    for a in &atoms {
        if let Atom::Wp(w) = a {
            for n in [&w.g2, &w.g3] {
                const_names.push(n.to_string());
            }
            if let Some(s) = &w.shift {
                const_names.push(s.to_string());
            }
        }
    }
    const_names.sort();
    const_names.dedup();
    for k in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        let u = [rng.gen_range(0.3..1.3), rng.gen_range(0.3..1.3)];
        let consts: BTreeMap<String, f64> = const_names.iter().map(|n| (n.clone(), rng.gen_range(0.5..1.5))).collect();
        let mut vals: BTreeMap<Atom, Complex64> = BTreeMap::new();
        for a in &atoms {
            let v = match a {
                Atom::Fn(_) => Complex64::new(rng.gen_range(-1.0..1.0), 0.0),
                Atom::Wp(w) if w.deriv == 0 => Complex64::new(rng.gen_range(0.5..1.5), 0.0),
                _ => continue,
            };
            vals.insert(a.clone(), v);
        }
        let mut av = |a: &Atom| -> Result<Complex64, EvalError> {
            match a {
                Atom::Var(v) => Ok(Complex64::new(u[v.index()], 0.0)),
                Atom::Const(n) => Ok(Complex64::new(consts[&**n], 0.0)),
                Atom::Fn(_) => Ok(vals[a]),
                Atom::Wp(w) if w.deriv == 0 => Ok(vals[a]),
                Atom::Wp(w) => {
                    let p = vals.get(&Atom::Wp(w.with_deriv(0))).copied().unwrap_or_else(|| Complex64::new(0.9, 0.0));
                    let cubic = p * p * p * 4.0 - p * consts[&*w.g2] - consts[&*w.g3];
                    Ok(cubic.sqrt())
                }
                Atom::Recip(_) => unreachable!(),
            }
        };
        let (v, scale) = eval_generic(e, u, &mut av).map_err(|err| ExprError::Internal(format!("zero-test sampling failed: {err}")))?;
        if v.norm() > 1e-8 * scale.max(1e-300) && v.norm() > 1e-300 {
            return Err(ExprError::Internal(format!(
                "symbolic zero test disagrees with sampling: |value| = {:e} at scale {:e} for {}",
                v.norm(),
                scale,
                e
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn elementary_values() {
        let consts = BTreeMap::new();
        let env = NumEnv { u: [0.0, std::f64::consts::FRAC_PI_2], consts: &consts, fns: &NoFns };
        assert!((parse("exp(2*u1)").unwrap().eval_real(&env).unwrap() - 1.0).abs() < 1e-15);
        assert!((parse("sin(u2)").unwrap().eval_real(&env).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(parse("a1").unwrap().eval_real(&env), Err(EvalError::UnboundConst(_))));
    }
}
