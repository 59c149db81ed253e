//! Scalar functions of time: coefficients `g(t)` and forcings `h(t)`.

use std::fmt;

use crate::error::{PlapError, Result};
use crate::grid_space::GridFn;
use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub enum TimeFn<S> {
    Const(S),
    /// `a + b·cos(2πt / period)`.
    Cos { a: S, b: S, period: S },
    /// `amp·sin(omega·t + phase)`.
    Sin { amp: S, omega: S, phase: S },
    /// Periodic linear interpolation of nodal samples.
    Table(GridFn<S>),
}

impl<S: Real> TimeFn<S> {
    pub fn eval(&self, t: S) -> S {
        match self {
            TimeFn::Const(v) => *v,
            TimeFn::Cos { a, b, period } => *a + *b * (S::lit(2.0) * S::PI() * t / *period).cos(),
            TimeFn::Sin { amp, omega, phase } => *amp * (*omega * t + *phase).sin(),
            TimeFn::Table(g) => {
                let mesh = g.mesh();
                let m = mesh.len();
                let tau = (t - mesh.origin()) / mesh.h();
                let span = S::from_usize_lossy(m);
                let tau = tau - (tau / span).floor() * span;
                let i0 = tau.floor().to_usize().unwrap_or(0).min(m - 1);
                let frac = tau - S::from_usize_lossy(i0);
                let v0 = g.row(i0)[0];
                let v1 = g.row((i0 + 1) % m)[0];
                v0 + frac * (v1 - v0)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, TimeFn::Const(v) if *v == S::zero())
    }

    /// Parses `const:v`, `cos:a,b` (period supplied by the caller) or
    /// `sin:amp[,omega[,phase]]`.
    pub fn parse(spec: &str, period: S) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let nums = || -> Result<Vec<S>> {
            rest.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map(S::lit)
                        .map_err(|e| PlapError::Domain(format!("bad number `{s}` in `{spec}`: {e}")))
                })
                .collect()
        };
        match kind.trim() {
            "const" => match nums()?.as_slice() {
                [v] => Ok(TimeFn::Const(*v)),
                _ => Err(PlapError::Domain(format!("`{spec}`: const takes one value"))),
            },
            "cos" => match nums()?.as_slice() {
                [a, b] => {
                    if !(*a > b.abs()) {
                        return Err(PlapError::Domain(format!(
                            "`{spec}`: cos:a,b needs a > |b| for positivity"
                        )));
                    }
                    Ok(TimeFn::Cos { a: *a, b: *b, period })
                }
                _ => Err(PlapError::Domain(format!("`{spec}`: cos takes a,b"))),
            },
            "sin" => match nums()?.as_slice() {
                [amp] => Ok(TimeFn::Sin { amp: *amp, omega: S::lit(2.0) * S::PI() / period, phase: S::zero() }),
                [amp, omega] => Ok(TimeFn::Sin { amp: *amp, omega: *omega, phase: S::zero() }),
                [amp, omega, phase] => Ok(TimeFn::Sin { amp: *amp, omega: *omega, phase: *phase }),
                _ => Err(PlapError::Domain(format!("`{spec}`: sin takes amp[,omega[,phase]]"))),
            },
            other => Err(PlapError::Domain(format!("unknown time function kind `{other}`"))),
        }
    }
}

impl<S: Real> fmt::Display for TimeFn<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFn::Const(v) => write!(f, "const:{v}"),
            TimeFn::Cos { a, b, .. } => write!(f, "cos:{a},{b}"),
            TimeFn::Sin { amp, omega, phase } => write!(f, "sin:{amp},{omega},{phase}"),
            TimeFn::Table(g) => write!(f, "table[{} nodes]", g.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_space::Mesh;

    #[test]
    fn parse_and_eval() {
        let g = TimeFn::<f64>::parse("const:2.5", 1.0).unwrap();
        assert_eq!(g.eval(0.3), 2.5);
        let c = TimeFn::<f64>::parse("cos:2,1", 4.0).unwrap();
        assert!((c.eval(0.0) - 3.0).abs() < 1e-15);
        assert!((c.eval(2.0) - 1.0).abs() < 1e-15);
        assert!(TimeFn::<f64>::parse("cos:1,2", 4.0).is_err());
        assert!(TimeFn::<f64>::parse("wave:1", 4.0).is_err());
        let s = TimeFn::<f64>::parse("sin:1,1", 4.0).unwrap();
        assert!((s.eval(0.5) - 0.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn table_interpolates_periodically() {
        let mesh = Mesh::<f64>::new(4.0, 8).unwrap();
        let tab = TimeFn::Table(GridFn::from_scalar_fn(mesh, |t| t));
        assert!((tab.eval(1.25) - 1.25).abs() < 1e-14);
        assert!((tab.eval(5.25) - 1.25).abs() < 1e-14);
        // between the last node (3.5) and the wrapped first node (0)
        assert!((tab.eval(3.75) - 1.75).abs() < 1e-14);
    }
}
