//! The scalar eigenvalue ladder `λ_n = (2nπ_p/b)^p` of the periodic
//! p-Laplacian, with an independent shooting computation as its oracle.
//!
//! For `N > 1` the ladder is only part of the eigenvalue set; this module
//! treats the scalar problem alone.

use serde::Serialize;

use crate::energy::DEFAULT_EPS_REG;
use crate::error::{PlapError, Result};
use crate::real::Real;

/// Base number of integrator steps per period estimate.
const BASE_STEPS: usize = 1 << 14;
/// Refinement stops with an error beyond this many steps.
const MAX_STEPS: usize = 1 << 22;
/// Largest tabulated index.
pub const MAX_TABLE_N: usize = 8;

/// `π_p = 2(p−1)^{1/p}(π/p)/sin(π/p)`.
pub fn pi_p<S: Real>(p: S) -> Result<S> {
    if !(p > S::one()) || !p.is_finite() {
        return Err(PlapError::Domain(format!("π_p needs p > 1, got {p}")));
    }
    let a = S::PI() / p;
    Ok(S::lit(2.0) * (p - S::one()).powf(S::one() / p) * a / a.sin())
}

/// `(2n·π_p/b)^p`; zero for `n = 0`.
pub fn eigenvalue_formula<S: Real>(n: usize, p: S, b: S) -> Result<S> {
    if n == 0 {
        return Ok(S::zero());
    }
    if !(b > S::zero()) {
        return Err(PlapError::Domain(format!("period must be positive, got {b}")));
    }
    Ok((S::lit(2.0) * S::from_usize_lossy(n) * pi_p(p)? / b).powf(p))
}

struct Flow<S> {
    p: S,
    q: S,
    lambda: S,
    eps: S,
}

impl<S: Real> Flow<S> {
    /// `(x', y') = (σ⁻¹(y), −λ|x|^{p−2}x)`.
    #[inline]
    fn rhs(&self, x: S, y: S) -> (S, S) {
        let two = S::lit(2.0);
        let dx = (y * y + self.eps * self.eps).powf((self.q - two) / two) * y;
        let dy = if x == S::zero() { S::zero() } else { -self.lambda * x.abs().powf(self.p - S::one()) * x.signum() };
        (dx, dy)
    }

    fn rk4(&self, x: S, y: S, h: S) -> (S, S) {
        let half = S::lit(0.5) * h;
        let (k1x, k1y) = self.rhs(x, y);
        let (k2x, k2y) = self.rhs(x + half * k1x, y + half * k1y);
        let (k3x, k3y) = self.rhs(x + half * k2x, y + half * k2y);
        let (k4x, k4y) = self.rhs(x + h * k3x, y + h * k3y);
        let sixth = h / S::lit(6.0);
        (
            x + sixth * (k1x + S::lit(2.0) * (k2x + k3x) + k4x),
            y + sixth * (k1y + S::lit(2.0) * (k2y + k3y) + k4y),
        )
    }
}

/// First return time of the flow from `(0, 1)`: the second upward zero
/// crossing of `x`, located by cubic Hermite interpolation within the step.
fn return_time<S: Real>(p: S, lambda: S, h: S, max_steps: usize) -> Option<S> {
    let flow = Flow { p, q: p / (p - S::one()), lambda, eps: S::lit(DEFAULT_EPS_REG) };
    let (mut x, mut y) = (S::zero(), S::one());
    let mut went_negative = false;
    for k in 0..max_steps {
        let (xn, yn) = flow.rk4(x, y, h);
        if xn < S::zero() {
            went_negative = true;
        }
        if went_negative && x < S::zero() && xn >= S::zero() {
            let (d0, _) = flow.rhs(x, y);
            let (d1, _) = flow.rhs(xn, yn);
            let s = hermite_root(x, xn, d0 * h, d1 * h);
            return Some(h * (S::from_usize_lossy(k) + s));
        }
        x = xn;
        y = yn;
    }
    None
}

/// Root in `[0, 1]` of the cubic Hermite interpolant with end values
/// `f0 < 0 ≤ f1` and scaled end slopes `d0`, `d1`, by safeguarded Newton.
fn hermite_root<S: Real>(f0: S, f1: S, d0: S, d1: S) -> S {
    let two = S::lit(2.0);
    let three = S::lit(3.0);
    let eval = |s: S| {
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = two * s3 - three * s2 + S::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        let v = h00 * f0 + h10 * d0 + h01 * f1 + h11 * d1;
        let dv = (S::lit(6.0) * s2 - S::lit(6.0) * s) * (f0 - f1)
            + (three * s2 - S::lit(4.0) * s + S::one()) * d0
            + (three * s2 - two * s) * d1;
        (v, dv)
    };
    let (mut lo, mut hi) = (S::zero(), S::one());
    let mut s = f0 / (f0 - f1);
    for _ in 0..60 {
        let (v, dv) = eval(s);
        if v < S::zero() {
            lo = s;
        } else {
            hi = s;
        }
        let next = s - v / dv;
        s = if dv != S::zero() && next > lo && next < hi { next } else { S::lit(0.5) * (lo + hi) };
        if hi - lo < S::lit(1e-15) {
            break;
        }
    }
    s
}

/// Return time at the first resolution where doubling the steps changes it
/// by less than `tol/10`, along with that step count.
fn converged_return_time<S: Real>(p: S, lambda: S, period_estimate: S, tol: S) -> Result<(S, usize)> {
    let mut steps = BASE_STEPS;
    let run = |steps: usize| {
        let h = period_estimate / S::from_usize_lossy(steps);
        return_time(p, lambda, h, 8 * steps)
            .ok_or_else(|| PlapError::Numerical(format!("no return within eight period estimates at λ = {lambda}")))
    };
    let mut tau = run(steps)?;
    while steps < MAX_STEPS {
        let finer = run(2 * steps)?;
        steps *= 2;
        let change = (finer - tau).abs();
        tau = finer;
        if change < tol / S::lit(10.0) {
            return Ok((tau, steps));
        }
    }
    Err(PlapError::Numerical(format!("return time unresolved at {MAX_STEPS} steps for p = {p}")))
}

/// `λ` whose eigenfunction has minimal period `b/n`, by bisection on the
/// return time of the shooting problem.
pub fn shooting_eigenvalue<S: Real>(n: usize, p: S, b: S, tol: S) -> Result<S> {
    if n == 0 {
        return Err(PlapError::Domain("shooting needs n ≥ 1".into()));
    }
    if !(p > S::one()) || !p.is_finite() {
        return Err(PlapError::Domain(format!("p must exceed 1, got {p}")));
    }
    if !(b > S::zero()) {
        return Err(PlapError::Domain(format!("period must be positive, got {b}")));
    }
    if !(tol >= S::lit(1e-10)) {
        return Err(PlapError::Domain(format!("tolerance must be at least 1e-10, got {tol}")));
    }
    let target = b / S::from_usize_lossy(n);
    // the step is a fixed fraction of the target; no return within 64
    // targets counts as an infinitely long return
    let tau_at = |lambda: S, steps: usize| -> Result<S> {
        let h = target / S::from_usize_lossy(steps);
        Ok(return_time(p, lambda, h, 64 * steps).unwrap_or(S::infinity()))
    };
    // the return time decreases in λ; bracket geometrically at the base resolution
    let (mut lo, mut hi) = (S::one(), S::one());
    let mut grow = 0;
    while tau_at(lo, BASE_STEPS)? < target {
        lo /= S::lit(4.0);
        grow += 1;
        if grow > 200 {
            return Err(PlapError::Bracket("no λ with a long enough return".into()));
        }
    }
    grow = 0;
    while tau_at(hi, BASE_STEPS)? > target {
        hi *= S::lit(4.0);
        grow += 1;
        if grow > 200 {
            return Err(PlapError::Bracket("no λ with a short enough return".into()));
        }
    }
    let bisect = |mut lo: S, mut hi: S, steps: usize| -> Result<S> {
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            let tau = tau_at(mid, steps)?;
            if (tau - target).abs() <= tol * S::lit(1e-2) || hi / lo - S::one() < tol * S::lit(1e-2) {
                return Ok(mid);
            }
            if tau > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo * hi).sqrt())
    };
    let guess = bisect(lo, hi, BASE_STEPS)?;
    let (_, steps) = converged_return_time(p, guess, target, tol)?;
    // refine in a narrow bracket at the converged resolution
    let widen = S::one() + S::lit(1e-3);
    let (mut lo, mut hi) = (guess / widen, guess * widen);
    while tau_at(lo, steps)? < target {
        lo /= widen;
    }
    while tau_at(hi, steps)? > target {
        hi *= widen;
    }
    bisect(lo, hi, steps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumRow<S> {
    pub n: usize,
    pub lambda_formula: S,
    pub lambda_shooting: S,
    pub rel_err: S,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumResult<S> {
    pub rows: Vec<SpectrumRow<S>>,
    pub p: S,
    pub b: S,
}

impl<S: Real> SpectrumResult<S> {
    pub fn max_rel_err(&self) -> S {
        self.rows.iter().map(|r| r.rel_err).fold(S::zero(), S::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "lambda_formula", "lambda_shooting", "rel_err"])?;
        for r in &self.rows {
            out.write_record([
                r.n.to_string(),
                r.lambda_formula.to_string(),
                r.lambda_shooting.to_string(),
                r.rel_err.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Shooting tolerance used by [`verify_table`].
pub const TABLE_TOL: f64 = 1e-10;

/// Rows `0..=n_max` comparing the closed form with shooting.
pub fn verify_table<S: Real>(p: S, b: S, n_max: usize) -> Result<SpectrumResult<S>> {
    if n_max > MAX_TABLE_N {
        return Err(PlapError::Domain(format!("n_max must be at most {MAX_TABLE_N}, got {n_max}")));
    }
    let mut rows = vec![SpectrumRow { n: 0, lambda_formula: S::zero(), lambda_shooting: S::zero(), rel_err: S::zero() }];
    for n in 1..=n_max {
        let shooting = shooting_eigenvalue(n, p, b, S::lit(TABLE_TOL))?;
        let formula = eigenvalue_formula(n, p, b)?;
        let rel_err = (formula - shooting).abs() / formula.max(S::lit(1e-300));
        rows.push(SpectrumRow { n, lambda_formula: formula, lambda_shooting: shooting, rel_err });
    }
    let monotone = rows.windows(2).all(|w| w[1].lambda_formula > w[0].lambda_formula && w[0].lambda_formula >= S::zero());
    if !monotone {
        return Err(PlapError::Numerical("eigenvalue ladder is not strictly increasing".into()));
    }
    Ok(SpectrumResult { rows, p, b })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    #[test]
    fn pi_p_values() {
        assert!((pi_p(2.0).unwrap() - std::f64::consts::PI).abs() < 1e-15);
        let expected = 2.0 * 3f64.powf(0.25) * (std::f64::consts::PI / 4.0) / (std::f64::consts::PI / 4.0).sin();
        assert!((pi_p(4.0).unwrap() - expected).abs() < 1e-14);
        assert!((pi_p(4.0f64).unwrap() - 2.9236).abs() < 1e-4);
        for k in 0..=200 {
            let p = 1.01 * (100.0f64 / 1.01).powf(k as f64 / 200.0);
            assert!(pi_p(p).unwrap().is_finite(), "{p}");
        }
        assert!(pi_p(1.0).is_err() && pi_p(0.5).is_err());
    }

    #[test]
    fn formula_values() {
        assert_eq!(eigenvalue_formula(0, 3.0, 1.0).unwrap(), 0.0);
        assert!((eigenvalue_formula(1, 2.0, TAU).unwrap() - 1.0).abs() < 1e-14);
        assert!((eigenvalue_formula(3, 2.0, TAU).unwrap() - 9.0).abs() < 1e-13);
        for p in [1.5, 2.0, 3.0] {
            let a = eigenvalue_formula(2, p, 1.0).unwrap();
            let c = eigenvalue_formula(2, p, 3.7).unwrap() * 3.7f64.powf(p);
            assert!((a - c).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn shooting_classical_sines() {
        assert!((shooting_eigenvalue(1, 2.0, TAU, 1e-10).unwrap() - 1.0).abs() < 1e-6);
        assert!((shooting_eigenvalue(2, 2.0, TAU, 1e-10).unwrap() - 4.0).abs() < 4e-6);
    }

    #[test]
    fn shooting_matches_formula_off_two() {
        for p in [1.5f64, 3.0] {
            let s = shooting_eigenvalue(1, p, 1.0, 1e-10).unwrap();
            let f = eigenvalue_formula(1, p, 1.0).unwrap();
            assert!((s - f).abs() / f < 1e-6, "p={p}: {s} vs {f}");
        }
    }

    #[test]
    fn table_rows() {
        let t = verify_table(2.0, TAU, 3).unwrap();
        let formula: Vec<f64> = t.rows.iter().map(|r| r.lambda_formula).collect();
        for (a, b) in formula.iter().zip([0.0, 1.0, 4.0, 9.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(t.max_rel_err() <= 1e-6);
        assert!(verify_table(2.0, TAU, 9).is_err());
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,lambda_formula,lambda_shooting,rel_err\n0,"));
    }

    #[test]
    fn bad_inputs() {
        assert!(shooting_eigenvalue(0, 2.0, 1.0, 1e-8).is_err());
        assert!(shooting_eigenvalue(1, 2.0, 1.0, 1e-12).is_err());
        assert!(shooting_eigenvalue(1, 1.0, 1.0, 1e-8).is_err());
    }
}
