//! Exact solution of small affine systems in named constants.

use std::collections::BTreeMap;

use super::{Result, VerifyError};
use crate::expr::{Atom, Expr, Splitter, Var};

/// Splits `e` by everything that is not a constant: powers of `u1, u2`,
/// exponentials, unknown functions, Weierstrass atoms and reciprocals
/// depending on the coordinates. The coefficients are constant expressions.
pub fn structural_coefficients(e: &Expr) -> Vec<Expr> {
    let pred = |a: &Atom| match a {
        Atom::Const(_) => false,
        Atom::Recip(p) => p.depends_on(Var::U1) || p.depends_on(Var::U2) || !p.fn_atoms().is_empty(),
        _ => true,
    };
    let s = Splitter { exp_vars: [true, true], atom: &pred };
    e.split_by(&s).into_values().map(|c| c.normalize()).filter(|c| !c.is_empty()).collect()
}

fn invertible(e: &Expr) -> Option<Expr> {
    if e.len() != 1 || e.has_recip() {
        return None;
    }
    let (m, c) = e.lead()?;
    Some(Expr::term(m.inv(), c.inv()?))
}

/// Solves the affine equations `eqs = 0` for `unknowns`. Unknowns left free
/// by the system are set to zero. Returns `None` when the system is
/// inconsistent; fails when a pivot would require dividing by a sum.
pub fn solve_affine(eqs: &[Expr], unknowns: &[String]) -> Result<Option<BTreeMap<String, Expr>>> {
    let Some(general) = solve_affine_general(eqs, unknowns)? else { return Ok(None) };
    let mut zero = crate::expr::Bindings::new();
    for u in unknowns {
        zero.bind_const(u, Expr::zero())?;
    }
    let mut out: BTreeMap<String, Expr> = unknowns.iter().map(|u| (u.clone(), Expr::zero())).collect();
    for (k, v) in general {
        out.insert(k, v.substitute(&zero)?);
    }
    Ok(Some(out))
}

/// Like [`solve_affine`] but returns only the determined unknowns, expressed
/// through the free ones.
pub fn solve_affine_general(eqs: &[Expr], unknowns: &[String]) -> Result<Option<BTreeMap<String, Expr>>> {
    let names: Vec<&str> = unknowns.iter().map(|s| s.as_str()).collect();
    let n = names.len();
    let mut rows: Vec<(Vec<Expr>, Expr)> = Vec::new();
    for e in eqs {
        let mut a = vec![Expr::zero(); n];
        let mut b = Expr::zero();
        for (key, c) in e.collect_params(&names)? {
            let deg: u32 = key.iter().sum();
            match deg {
                0 => b = &b + &c,
                1 => {
                    let j = key.iter().position(|k| *k == 1).unwrap();
                    a[j] = &a[j] + &c;
                }
                _ => return Err(VerifyError::Linear(format!("equation is not affine in {unknowns:?}: {e}"))),
            }
        }
        rows.push((a, b));
    }
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| invertible(&rows[i].0[col]).is_some()) else {
            if (r..rows.len()).any(|i| !rows[i].0[col].is_empty()) {
                return Err(VerifyError::Linear(format!("no monomial pivot for {}", names[col])));
            }
            continue;
        };
        rows.swap(r, p);
        let inv = invertible(&rows[r].0[col]).unwrap();
        let (pa, pb) = rows[r].clone();
        let pa: Vec<Expr> = pa.iter().map(|x| (x * &inv).normalize()).collect();
        let pb = (&pb * &inv).normalize();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row.0[col].is_empty() {
                continue;
            }
            let f = row.0[col].clone();
            for (j, x) in row.0.iter_mut().enumerate() {
                *x = (&*x - &(&f * &pa[j])).normalize();
            }
            row.1 = (&row.1 - &(&f * &pb)).normalize();
        }
        rows[r] = (pa, pb);
        pivots.push((r, col));
        r += 1;
    }
    for row in &rows[r..] {
        if !row.1.is_zero()? {
            return Ok(None);
        }
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|p| p.1).collect();
    let mut sol = BTreeMap::new();
    for (ri, col) in pivots {
        let mut x = -rows[ri].1.clone();
        for j in (0..n).filter(|j| !pivot_cols.contains(j)) {
            x = &x - &(&rows[ri].0[j] * &Expr::constant(names[j]));
        }
        sol.insert(names[col].to_string(), x.normalize());
    }
    Ok(Some(sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn solves_two_by_two() {
        let eqs = [parse("2*beta1 + beta2 - 3").unwrap(), parse("beta1 - beta2 + k1").unwrap()];
        let sol = solve_affine(&eqs, &s(&["beta1", "beta2"])).unwrap().unwrap();
        assert_eq!(sol["beta1"], parse("1 - k1/3").unwrap());
        assert_eq!(sol["beta2"], parse("1 + 2*k1/3").unwrap());
    }

    #[test]
    fn detects_inconsistency() {
        let eqs = [parse("beta1 - 1").unwrap(), parse("2*beta1 - 3").unwrap()];
        assert!(solve_affine(&eqs, &s(&["beta1"])).unwrap().is_none());
    }

    #[test]
    fn monomial_pivots_and_free_unknowns() {
        let eqs = [parse("hbar^2*d1 - a9").unwrap()];
        let sol = solve_affine(&eqs, &s(&["d1", "d3"])).unwrap().unwrap();
        assert_eq!(sol["d1"], parse("a9*hbar^(-2)").unwrap());
        assert!(sol["d3"].is_empty());
    }

    #[test]
    fn general_solution_keeps_free_unknowns() {
        let eqs = [parse("k1 + 2*k2 - 1").unwrap()];
        let sol = solve_affine_general(&eqs, &s(&["k1", "k2"])).unwrap().unwrap();
        assert_eq!(sol.len(), 1);
        assert_eq!(sol["k1"], parse("1 - 2*k2").unwrap());
    }

    #[test]
    fn structural_split() {
        let e = parse("a1*D[v2,u2,1] + 3*D[v2,u2,1] + hbar^2*sin(u2)").unwrap();
        assert_eq!(structural_coefficients(&e).len(), 3);
    }
}
