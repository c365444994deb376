//! Dormand–Prince 5(4) integrator with the standard quartic dense output.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum OdeError {
    #[error("solution blows up near t = {at}; integration stopped at t = {}", partial.t_end())]
    PoleDetected { at: f64, partial: Box<Solution> },
    #[error("step size fell below the floor at t = {t}; integration stopped")]
    StepTooSmall { t: f64, partial: Box<Solution> },
    #[error("right-hand side is not finite at t = {t}")]
    NonFinite { t: f64, partial: Box<Solution> },
    #[error("invalid problem: {0}")]
    Invalid(String),
}

impl OdeError {
    /// Solution computed before the failure, if any.
    pub fn partial(&self) -> Option<&Solution> {
        match self {
            OdeError::PoleDetected { partial, .. } | OdeError::StepTooSmall { partial, .. } | OdeError::NonFinite { partial, .. } => {
                Some(partial)
            }
            OdeError::Invalid(_) => None,
        }
    }
}

/// Right-hand side `y' = f(t, y)` writing into the last argument.
pub type Rhs<'a> = dyn Fn(f64, &[f64], &mut [f64]) -> Result<(), String> + 'a;

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest step relative to `max(1, |t|)`.
    pub h_min: f64,
    /// State norm at which the solution is declared to have reached a pole.
    pub blowup: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-10, atol: 1e-10, h_min: 1e-12, blowup: 1e12, max_steps: 200_000 }
    }
}

/// One accepted step with its dense-output coefficients.
#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl Segment {
    fn eval(&self, t: f64, out: &mut [f64], dout: Option<&mut [f64]>) {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.r;
        for i in 0..out.len() {
            let q = r3[i] + th * (r4[i] + th1 * r5[i]);
            let r = r2[i] + th1 * q;
            out[i] = r1[i] + th * r;
        }
        if let Some(d) = dout {
            for i in 0..d.len() {
                let q = r3[i] + th * (r4[i] + th1 * r5[i]);
                let dq = r4[i] + (1.0 - 2.0 * th) * r5[i];
                let r = r2[i] + th1 * q;
                let dr = -q + th1 * dq;
                d[i] = (r + th * dr) / self.h;
            }
        }
    }

    fn lo(&self) -> f64 {
        self.t0.min(self.t0 + self.h)
    }

    fn hi(&self) -> f64 {
        self.t0.max(self.t0 + self.h)
    }
}

/// Dense solution on an interval, possibly assembled from two directions.
#[derive(Debug, Clone)]
pub struct Solution {
    dim: usize,
    /// Sorted by `lo()`, non-overlapping.
    segs: Vec<Segment>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl Solution {
    fn empty(dim: usize) -> Self {
        Solution { dim, segs: Vec::new(), steps_accepted: 0, steps_rejected: 0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> (f64, f64) {
        match (self.segs.first(), self.segs.last()) {
            (Some(a), Some(b)) => (a.lo(), b.hi()),
            _ => (f64::NAN, f64::NAN),
        }
    }

    fn t_end(&self) -> f64 {
        self.domain().1
    }

    /// Step sizes of the accepted steps.
    pub fn step_sizes(&self) -> impl Iterator<Item = f64> + '_ {
        self.segs.iter().map(|s| s.h.abs())
    }

    fn locate(&self, t: f64) -> Option<&Segment> {
        let (a, b) = self.domain();
        let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
        if !(t >= a - slack && t <= b + slack) {
            return None;
        }
        let i = self.segs.partition_point(|s| s.hi() < t);
        self.segs.get(i.min(self.segs.len() - 1))
    }

    /// State at `t`.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        let s = self.locate(t)?;
        let mut y = vec![0.0; self.dim];
        s.eval(t, &mut y, None);
        Some(y)
    }

    /// State and its time derivative of the interpolant at `t`.
    pub fn eval_with_derivative(&self, t: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let s = self.locate(t)?;
        let mut y = vec![0.0; self.dim];
        let mut d = vec![0.0; self.dim];
        s.eval(t, &mut y, Some(&mut d));
        Some((y, d))
    }

    /// Local step size near `t` (used for pole guard radii).
    pub fn local_step(&self, t: f64) -> Option<f64> {
        self.locate(t).map(|s| s.h.abs())
    }

    fn merge_backward(mut back: Solution, fwd: Solution) -> Solution {
        back.segs.reverse();
        for s in &mut back.segs {
            // Re-anchor so that every segment runs forward.
            let t0 = s.t0 + s.h;
            let h = -s.h;
            let [r1, r2, r3, r4, r5] = &s.r;
            // P(th) on the old parametrisation equals Q(1 - th) on the new one.
            let y1: Vec<f64> = r1.iter().zip(r2).map(|(a, b)| a + b).collect();
            let nr2: Vec<f64> = r2.iter().map(|x| -x).collect();
            let nr3: Vec<f64> = r3.iter().zip(r4).map(|(a, b)| a + b).collect();
            let nr4: Vec<f64> = r4.iter().map(|x| -x).collect();
            let nr5 = r5.clone();
            *s = Segment { t0, h, r: [y1, nr2, nr3, nr4, nr5] };
        }
        back.segs.extend(fwd.segs);
        back.steps_accepted += fwd.steps_accepted;
        back.steps_rejected += fwd.steps_rejected;
        back
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Integrates from `t0` to `t1` (either direction).
pub fn integrate(f: &Rhs<'_>, t0: f64, y0: &[f64], t1: f64, tol: &Tolerances) -> Result<Solution, OdeError> {
    let n = y0.len();
    if n == 0 || !(t0.is_finite() && t1.is_finite()) {
        return Err(OdeError::Invalid("empty state or non-finite interval".into()));
    }
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut sol = Solution::empty(n);
    if span == 0.0 {
        return Ok(sol);
    }
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let call = |t: f64, y: &[f64], out: &mut [f64], sol: &Solution| -> Result<(), OdeError> {
        f(t, y, out).map_err(|_| OdeError::NonFinite { t, partial: Box::new(sol.clone()) })?;
        if out.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(OdeError::NonFinite { t, partial: Box::new(sol.clone()) })
        }
    };
    call(t, &y, &mut k[0], &sol)?;
    let mut h = initial_step(&y, &k[0], span, tol);
    let mut last_err: f64 = 1e-4;
    let mut reject = false;
    for _ in 0..tol.max_steps {
        let remaining = (t1 - t) * dir;
        if remaining <= 1e-14 * (1.0 + t1.abs()) {
            return Ok(sol);
        }
        h = h.min(remaining);
        let h_floor = tol.h_min * (1.0 + t.abs());
        if h < h_floor {
            return Err(OdeError::StepTooSmall { t, partial: Box::new(sol) });
        }
        let hs = h * dir;
        let mut failed = None;
        for s in 1..7 {
            let (head, tail) = k.split_at_mut(s);
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in head.iter().enumerate() {
                    acc += hs * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            if let Err(e) = call(t + C[s] * hs, &tmp, &mut tail[0], &sol) {
                failed = Some(e);
                break;
            }
        }
        if let Some(e) = failed {
            // Retry with a smaller step; a persistent failure is reported.
            if h * 0.25 >= h_floor {
                h *= 0.25;
                reject = true;
                sol.steps_rejected += 1;
                continue;
            }
            return Err(e);
        }
        // tmp now holds the fifth-order solution (stage 7 uses the b weights).
        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let sc = tol.atol + tol.rtol * y[i].abs().max(tmp[i].abs());
            err += (hs * e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.2;
            sol.steps_rejected += 1;
            continue;
        }
        if err <= 1.0 {
            let ydiff: Vec<f64> = tmp.iter().zip(&y).map(|(a, b)| a - b).collect();
            let bspl: Vec<f64> = (0..n).map(|i| hs * k[0][i] - ydiff[i]).collect();
            let r4: Vec<f64> = (0..n).map(|i| ydiff[i] - hs * k[6][i] - bspl[i]).collect();
            let r5: Vec<f64> = (0..n).map(|i| hs * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>()).collect();
            sol.segs.push(Segment { t0: t, h: hs, r: [y.clone(), ydiff, bspl, r4, r5] });
            sol.steps_accepted += 1;
            t += hs;
            y.copy_from_slice(&tmp);
            let k6 = k[6].clone();
            k[0].copy_from_slice(&k6);
            let norm = y.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if norm > tol.blowup {
                return Err(OdeError::PoleDetected { at: t, partial: Box::new(sol) });
            }
            // PI step-size control.
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * last_err.powf(0.4 / 5.0);
            let fac = fac.clamp(0.2, 10.0);
            h *= if reject { fac.min(1.0) } else { fac };
            last_err = err.max(1e-4);
            reject = false;
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
            reject = true;
            sol.steps_rejected += 1;
        }
    }
    Err(OdeError::StepTooSmall { t, partial: Box::new(sol) })
}

fn initial_step(y: &[f64], dy: &[f64], span: f64, tol: &Tolerances) -> f64 {
    let sc = |i: usize| tol.atol + tol.rtol * y[i].abs();
    let d0 = (y.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let d1 = (dy.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span * 0.1).max(1e-10)
}

/// Integrates from `t_mid` to both ends of `[a, b]` and joins the halves.
pub fn integrate_two_sided(f: &Rhs<'_>, t_mid: f64, y_mid: &[f64], a: f64, b: f64, tol: &Tolerances) -> Result<Solution, OdeError> {
    if !(a <= t_mid && t_mid <= b) {
        return Err(OdeError::Invalid(format!("{t_mid} is outside [{a}, {b}]")));
    }
    let back = integrate(f, t_mid, y_mid, a, tol)?;
    let fwd = integrate(f, t_mid, y_mid, b, tol)?;
    Ok(Solution::merge_backward(back, fwd))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        let f = |_t: f64, y: &[f64], out: &mut [f64]| {
            out[0] = y[1];
            out[1] = 0.0;
            Ok(())
        };
        let sol = integrate(&f, 0.0, &[0.0, 1.0], 3.0, &Tolerances::default()).unwrap();
        for t in [0.0, 0.7, 1.9, 3.0] {
            assert!((sol.eval(t).unwrap()[0] - t).abs() < 1e-14);
        }
    }

    #[test]
    fn exponential_decay_and_dense_output() {
        let f = |_t: f64, y: &[f64], out: &mut [f64]| {
            out[0] = -y[0];
            Ok(())
        };
        let tol = Tolerances { rtol: 1e-11, atol: 1e-13, ..Tolerances::default() };
        let sol = integrate_two_sided(&f, 1.0, &[(-1.0f64).exp()], 0.0, 4.0, &tol).unwrap();
        for t in [0.0, 0.33, 1.0, 2.71, 4.0] {
            let (y, d) = sol.eval_with_derivative(t).unwrap();
            assert!((y[0] - (-t).exp()).abs() < 1e-10, "t={t}");
            assert!((d[0] + (-t).exp()).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn blowup_is_reported() {
        // y' = y^2, y(0) = 1 has a pole at t = 1.
        let f = |_t: f64, y: &[f64], out: &mut [f64]| {
            out[0] = y[0] * y[0];
            Ok(())
        };
        let err = integrate(&f, 0.0, &[1.0], 2.0, &Tolerances::default()).unwrap_err();
        let partial = err.partial().unwrap();
        assert!((partial.domain().1 - 1.0).abs() < 1e-3, "{err}");
    }
}
