//! Locally Lipschitz potentials `j(t, x)`: evaluation, a measurable Clarke
//! subgradient selection, exact subdifferential sets for the built-ins, and
//! sampled estimates of the generalized directional derivative `j⁰`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{PlapError, Result};
use crate::grid_space::{dot, norm};
use crate::real::Real;
use crate::timefn::TimeFn;

/// A compact convex set of generalized gradients.
#[derive(Clone, Debug, PartialEq)]
pub enum SubgradSet<S> {
    Point(Vec<S>),
    /// Convex hull of two endpoints.
    Segment(Vec<S>, Vec<S>),
    Ball { center: Vec<S>, radius: S },
    /// Scalar interval `[lo, hi]`.
    Interval { lo: S, hi: S },
}

impl<S: Real> SubgradSet<S> {
    pub fn midpoint(&self) -> Vec<S> {
        let half = S::lit(0.5);
        match self {
            SubgradSet::Point(p) => p.clone(),
            SubgradSet::Segment(a, b) => a.iter().zip(b).map(|(&u, &v)| half * (u + v)).collect(),
            SubgradSet::Ball { center, .. } => center.clone(),
            SubgradSet::Interval { lo, hi } => vec![half * (*lo + *hi)],
        }
    }

    /// Euclidean distance from `w` to the set.
    pub fn distance(&self, w: &[S]) -> S {
        match self {
            SubgradSet::Point(p) => dist(w, p),
            SubgradSet::Segment(a, b) => {
                let ab: Vec<S> = b.iter().zip(a).map(|(&u, &v)| u - v).collect();
                let aw: Vec<S> = w.iter().zip(a).map(|(&u, &v)| u - v).collect();
                let len2 = dot(&ab, &ab);
                let s = if len2 > S::zero() {
                    (dot(&aw, &ab) / len2).max(S::zero()).min(S::one())
                } else {
                    S::zero()
                };
                let proj: Vec<S> = a.iter().zip(&ab).map(|(&u, &v)| u + s * v).collect();
                dist(w, &proj)
            }
            SubgradSet::Ball { center, radius } => (dist(w, center) - *radius).max(S::zero()),
            SubgradSet::Interval { lo, hi } => {
                let v = w[0];
                (*lo - v).max(v - *hi).max(S::zero())
            }
        }
    }

    /// The set `a·self`.
    pub fn scaled(&self, a: S) -> SubgradSet<S> {
        let sc = |v: &Vec<S>| v.iter().map(|&u| a * u).collect::<Vec<S>>();
        match self {
            SubgradSet::Point(p) => SubgradSet::Point(sc(p)),
            SubgradSet::Segment(u, v) => SubgradSet::Segment(sc(u), sc(v)),
            SubgradSet::Ball { center, radius } => {
                SubgradSet::Ball { center: sc(center), radius: a.abs() * *radius }
            }
            SubgradSet::Interval { lo, hi } => {
                let (l, h) = (a * *lo, a * *hi);
                SubgradSet::Interval { lo: l.min(h), hi: l.max(h) }
            }
        }
    }

    /// Support function `max_{u ∈ set} (u, dir)`, which equals `j⁰(x; dir)`.
    pub fn support(&self, d: &[S]) -> S {
        match self {
            SubgradSet::Point(p) => dot(p, d),
            SubgradSet::Segment(a, b) => dot(a, d).max(dot(b, d)),
            SubgradSet::Ball { center, radius } => dot(center, d) + *radius * norm(d),
            SubgradSet::Interval { lo, hi } => (*lo * d[0]).max(*hi * d[0]),
        }
    }

    /// Largest Euclidean norm of an element.
    pub fn max_norm(&self) -> S {
        match self {
            SubgradSet::Point(p) => norm(p),
            SubgradSet::Segment(a, b) => norm(a).max(norm(b)),
            SubgradSet::Ball { center, radius } => norm(center) + *radius,
            SubgradSet::Interval { lo, hi } => lo.abs().max(hi.abs()),
        }
    }

    /// Scalar bounds `(min, max)` of a one-dimensional set.
    pub fn scalar_bounds(&self) -> (S, S) {
        match self {
            SubgradSet::Point(p) => (p[0], p[0]),
            SubgradSet::Segment(a, b) => (a[0].min(b[0]), a[0].max(b[0])),
            SubgradSet::Ball { center, radius } => (center[0] - *radius, center[0] + *radius),
            SubgradSet::Interval { lo, hi } => (*lo, *hi),
        }
    }
}

fn dist<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&u, &v)| (u - v) * (u - v)).sum::<S>().sqrt()
}

/// Growth metadata: `‖u‖ ≤ a1 + c1·‖x‖^{r-1}` for `u ∈ ∂j(t, x)`, plus the
/// superlinearity exponent `mu` and the threshold `M` beyond which the
/// `μ`-condition holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Growth<S> {
    pub a1: S,
    pub c1: S,
    pub r: S,
    pub mu: Option<S>,
    pub m_thresh: S,
}

impl<S: Real> Growth<S> {
    pub fn bound(&self, norm_x: S) -> S {
        self.a1 + self.c1 * norm_x.powf(self.r - S::one())
    }
}

/// Component of the nonsmooth locus of an autonomous potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kink<S> {
    /// The sphere `‖x‖ = radius` (the origin when `radius = 0`).
    Sphere(S),
    /// An isolated scalar value (one-dimensional models only).
    Value(S),
}

impl<S: Real> Kink<S> {
    pub fn distance(&self, x: &[S]) -> S {
        match self {
            Kink::Sphere(r) => (norm(x) - *r).abs(),
            Kink::Value(v) => (x[0] - *v).abs(),
        }
    }
}

/// A potential `j(t, x)` locally Lipschitz in `x`.
pub trait Potential<S: Real>: Send + Sync {
    fn name(&self) -> String;

    /// Required component dimension, if fixed.
    fn dim(&self) -> Option<usize> {
        None
    }

    fn eval(&self, t: S, x: &[S]) -> S;

    /// A selection `u(t, x) ∈ ∂j(t, x)`; the midpoint of the set at kinks.
    fn subgrad(&self, t: S, x: &[S], out: &mut [S]);

    /// Exact `∂j(t, x)` when known. Smooth points give a `Point`.
    fn set_descriptor(&self, _t: S, _x: &[S]) -> Option<SubgradSet<S>> {
        None
    }

    /// True when `x` lies on the nonsmooth locus.
    fn is_kink(&self, _t: S, _x: &[S]) -> bool {
        false
    }

    fn growth(&self) -> Option<Growth<S>> {
        None
    }

    /// Nonsmooth locus (autonomous models only).
    fn kinks(&self) -> Vec<Kink<S>> {
        Vec::new()
    }

    /// Time period of the `t`-dependence; `None` for autonomous models.
    fn period(&self) -> Option<S> {
        None
    }

    /// Exact `j⁰(t, x; dir)` from the set descriptor, when available.
    fn j0_exact(&self, t: S, x: &[S], dir: &[S]) -> Option<S> {
        self.set_descriptor(t, x).map(|s| s.support(dir))
    }

    /// Jacobian of the selection, row-major `N×N`, by central differences.
    fn subgrad_jacobian(&self, t: S, x: &[S], out: &mut [S]) {
        let n = x.len();
        let step = S::epsilon().cbrt() * (S::one() + norm(x));
        let mut xp = x.to_vec();
        let mut up = vec![S::zero(); n];
        let mut um = vec![S::zero(); n];
        for b in 0..n {
            xp[b] = x[b] + step;
            self.subgrad(t, &xp, &mut up);
            xp[b] = x[b] - step;
            self.subgrad(t, &xp, &mut um);
            xp[b] = x[b];
            for a in 0..n {
                out[a * n + b] = (up[a] - um[a]) / (S::lit(2.0) * step);
            }
        }
    }

    /// Distance from `x` to the nonsmooth locus (`∞` for smooth models).
    fn kink_distance(&self, x: &[S]) -> S {
        self.kinks().iter().map(|k| k.distance(x)).fold(S::infinity(), S::min)
    }
}

/// The built-in potentials.
#[derive(Clone, Debug, PartialEq)]
pub enum Builtin<S> {
    /// `-‖x‖` for `‖x‖ ≤ 1`, `‖x‖^μ/μ - ‖x‖ln‖x‖ + c` beyond, `c = -(μ+1)/μ`.
    Thm1Example { mu: S, p: S, n: usize },
    /// `-‖x‖^p/p` for `‖x‖ < 1`, `‖x‖^r/r + cos‖x‖ + c` beyond,
    /// `c = -1/p - 1/r - cos 1`.
    Thm2Example { r: S, p: S, n: usize },
    /// `max{x^{1/3}, x^{1/2}} + ln(1+|x|) + cos x + |x|`, scalar, with the
    /// real cube root for `x < 0`.
    Prop8Example,
    /// `‖x‖⁴/4`.
    Quartic { n: usize },
    /// `|x|`, scalar.
    Abs,
    /// `h(t)·x`, scalar.
    LinearForced { h: TimeFn<S> },
    /// `‖x‖^q`.
    Power { q: S, n: usize },
    /// `j ≡ 0`.
    Zero { n: usize },
}

impl<S: Real> Builtin<S> {
    pub fn thm1_example(mu: S, p: S, n: usize) -> Result<Self> {
        if !(p > S::one()) {
            return Err(PlapError::InvalidPotential(format!("thm1_example needs p > 1, got {p}")));
        }
        if !(mu > p) {
            return Err(PlapError::InvalidPotential(format!(
                "thm1_example needs mu > p (got mu={mu}, p={p})"
            )));
        }
        Ok(Builtin::Thm1Example { mu, p, n: n.max(1) })
    }

    pub fn thm2_example(r: S, p: S, n: usize) -> Result<Self> {
        if !(r >= S::one()) || !(r < p) {
            return Err(PlapError::InvalidPotential(format!(
                "thm2_example needs 1 <= r < p (got r={r}, p={p})"
            )));
        }
        Ok(Builtin::Thm2Example { r, p, n: n.max(1) })
    }

    pub fn quartic(n: usize) -> Self {
        Builtin::Quartic { n: n.max(1) }
    }

    pub fn power(q: S, n: usize) -> Result<Self> {
        if !(q > S::one()) {
            return Err(PlapError::InvalidPotential(format!("power needs q > 1, got {q}")));
        }
        Ok(Builtin::Power { q, n: n.max(1) })
    }

    /// Continuity constant of the first example.
    pub fn thm1_constant(mu: S) -> S {
        -(mu + S::one()) / mu
    }

    /// Continuity constant of the second example.
    pub fn thm2_constant(r: S, p: S) -> S {
        -p.recip() - r.recip() - S::one().cos()
    }

    /// Parses `name` or `name:key=value,...`, e.g. `thm1_example:mu=3,p=2,N=1`.
    /// `period` is used by `linear_forced` forcings given as `sin:...`.
    pub fn parse(spec: &str, period: S) -> Result<Self> {
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut params: Vec<(String, String)> = Vec::new();
        if !rest.is_empty() {
            // `h=` for linear_forced swallows the remainder, which may contain commas
            if let Some(h) = rest.strip_prefix("h=") {
                params.push(("h".into(), h.to_string()));
            } else {
                for kv in rest.split(',') {
                    let (k, v) = kv.split_once('=').ok_or_else(|| {
                        PlapError::InvalidPotential(format!("expected key=value, got `{kv}`"))
                    })?;
                    params.push((k.trim().to_string(), v.trim().to_string()));
                }
            }
        }
        Self::from_params(name.trim(), &params, period)
    }

    pub fn from_params(name: &str, params: &[(String, String)], period: S) -> Result<Self> {
        let get = |key: &str| -> Result<Option<S>> {
            params
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| {
                    v.parse::<f64>().map(S::lit).map_err(|e| {
                        PlapError::InvalidPotential(format!("parameter {key}=`{v}`: {e}"))
                    })
                })
                .transpose()
        };
        let allowed: &[&str] = match name {
            "thm1_example" => &["mu", "p", "N"],
            "thm2_example" => &["r", "p", "N"],
            "quartic" | "zero" => &["N"],
            "power" => &["q", "N"],
            "linear_forced" => &["h"],
            "prop8_example" | "abs" => &[],
            other => {
                return Err(PlapError::InvalidPotential(format!("unknown potential `{other}`")))
            }
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(PlapError::InvalidPotential(format!("`{name}` has no parameter `{k}`")));
        }
        let dim = get("N")?.map(|v| v.to_usize().unwrap_or(1)).unwrap_or(1);
        let need = |key: &str| -> Result<S> {
            get(key)?.ok_or_else(|| PlapError::InvalidPotential(format!("`{name}` needs `{key}`")))
        };
        match name {
            "thm1_example" => Self::thm1_example(need("mu")?, need("p")?, dim),
            "thm2_example" => Self::thm2_example(need("r")?, need("p")?, dim),
            "quartic" => Ok(Self::quartic(dim)),
            "zero" => Ok(Builtin::Zero { n: dim }),
            "power" => Self::power(need("q")?, dim),
            "prop8_example" => Ok(Builtin::Prop8Example),
            "abs" => Ok(Builtin::Abs),
            "linear_forced" => {
                let h = params
                    .iter()
                    .find(|(k, _)| k == "h")
                    .map(|(_, v)| v.as_str())
                    .unwrap_or("sin:1,1");
                Ok(Builtin::LinearForced { h: TimeFn::parse(h, period)? })
            }
            _ => unreachable!(),
        }
    }

    fn radial_value(&self, r: S) -> S {
        let one = S::one();
        match self {
            Builtin::Thm1Example { mu, .. } => {
                if r <= one {
                    -r
                } else {
                    r.powf(*mu) / *mu - r * r.ln() + Self::thm1_constant(*mu)
                }
            }
            Builtin::Thm2Example { r: rr, p, .. } => {
                if r < one {
                    -r.powf(*p) / *p
                } else {
                    r.powf(*rr) / *rr + r.cos() + Self::thm2_constant(*rr, *p)
                }
            }
            Builtin::Quartic { .. } => r.powi(4) / S::lit(4.0),
            Builtin::Power { q, .. } => r.powf(*q),
            Builtin::Zero { .. } => S::zero(),
            _ => unreachable!("not a radial model"),
        }
    }

    /// Radial derivative `f'(r)` away from kinks.
    fn radial_slope(&self, r: S) -> S {
        let one = S::one();
        match self {
            Builtin::Thm1Example { mu, .. } => {
                if r < one {
                    -one
                } else {
                    r.powf(*mu - one) - r.ln() - one
                }
            }
            Builtin::Thm2Example { r: rr, p, .. } => {
                if r < one {
                    -r.powf(*p - one)
                } else {
                    r.powf(*rr - one) - r.sin()
                }
            }
            Builtin::Quartic { .. } => r.powi(3),
            Builtin::Power { q, .. } => *q * r.powf(*q - one),
            Builtin::Zero { .. } => S::zero(),
            _ => unreachable!("not a radial model"),
        }
    }

    fn is_radial(&self) -> bool {
        matches!(
            self,
            Builtin::Thm1Example { .. }
                | Builtin::Thm2Example { .. }
                | Builtin::Quartic { .. }
                | Builtin::Power { .. }
                | Builtin::Zero { .. }
        )
    }

    fn on_radius(r: S, radius: S) -> bool {
        (r - radius).abs() <= S::lit(4.0) * S::epsilon() * radius.max(S::one())
    }

    fn radial_set(&self, x: &[S]) -> SubgradSet<S> {
        let r = norm(x);
        let n = x.len();
        let one = S::one();
        match self {
            Builtin::Thm1Example { .. } if r == S::zero() => {
                SubgradSet::Ball { center: vec![S::zero(); n], radius: one }
            }
            Builtin::Thm1Example { .. } if Self::on_radius(r, one) => {
                let unit: Vec<S> = x.iter().map(|&v| v / r).collect();
                SubgradSet::Segment(unit.iter().map(|&v| -v).collect(), vec![S::zero(); n])
            }
            Builtin::Thm2Example { .. } if Self::on_radius(r, one) => {
                let unit: Vec<S> = x.iter().map(|&v| v / r).collect();
                let right = one - one.sin();
                SubgradSet::Segment(
                    unit.iter().map(|&v| -v).collect(),
                    unit.iter().map(|&v| right * v).collect(),
                )
            }
            _ => {
                let slope = if r > S::zero() { self.radial_slope(r) / r } else { S::zero() };
                SubgradSet::Point(x.iter().map(|&v| slope * v).collect())
            }
        }
    }

    fn prop8_value(x: S) -> S {
        let one = S::one();
        let root = if x >= S::zero() { x.cbrt().max(x.sqrt()) } else { x.cbrt() };
        root + (one + x.abs()).ln() + x.cos() + x.abs()
    }

    /// Derivative of the smooth remainder `ln(1+|x|) + cos x + |x|` for `x ≠ 0`.
    fn prop8_tail_slope(x: S) -> S {
        let one = S::one();
        let s = x.signum();
        s / (one + x.abs()) - x.sin() + s
    }

    fn prop8_set(x: S) -> Option<SubgradSet<S>> {
        let one = S::one();
        let third = S::lit(1.0 / 3.0);
        if x == S::zero() {
            return None;
        }
        if x == one {
            let tail = Self::prop8_tail_slope(x);
            return Some(SubgradSet::Interval { lo: third + tail, hi: S::lit(0.5) + tail });
        }
        let root_slope = if x > one {
            S::lit(0.5) / x.sqrt()
        } else {
            third * x.abs().powf(-S::lit(2.0) / S::lit(3.0))
        };
        Some(SubgradSet::Point(vec![root_slope + Self::prop8_tail_slope(x)]))
    }
}

impl<S: Real> fmt::Display for Builtin<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Thm1Example { mu, p, n } => write!(f, "thm1_example:mu={mu},p={p},N={n}"),
            Builtin::Thm2Example { r, p, n } => write!(f, "thm2_example:r={r},p={p},N={n}"),
            Builtin::Prop8Example => write!(f, "prop8_example"),
            Builtin::Quartic { n } => write!(f, "quartic:N={n}"),
            Builtin::Abs => write!(f, "abs"),
            Builtin::LinearForced { h } => write!(f, "linear_forced:h={h}"),
            Builtin::Power { q, n } => write!(f, "power:q={q},N={n}"),
            Builtin::Zero { n } => write!(f, "zero:N={n}"),
        }
    }
}

impl<S: Real> Potential<S> for Builtin<S> {
    fn name(&self) -> String {
        self.to_string()
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Builtin::Thm1Example { n, .. }
            | Builtin::Thm2Example { n, .. }
            | Builtin::Quartic { n }
            | Builtin::Power { n, .. }
            | Builtin::Zero { n } => Some(*n),
            Builtin::Prop8Example | Builtin::Abs | Builtin::LinearForced { .. } => Some(1),
        }
    }

    fn eval(&self, t: S, x: &[S]) -> S {
        match self {
            Builtin::Prop8Example => Self::prop8_value(x[0]),
            Builtin::Abs => x[0].abs(),
            Builtin::LinearForced { h } => h.eval(t) * x[0],
            _ => self.radial_value(norm(x)),
        }
    }

    fn subgrad(&self, t: S, x: &[S], out: &mut [S]) {
        match self {
            Builtin::LinearForced { h } => out[0] = h.eval(t),
            Builtin::Abs => out[0] = if x[0] == S::zero() { S::zero() } else { x[0].signum() },
            Builtin::Prop8Example => {
                // at the non-Lipschitz origin the finite parts' midpoint (0) is used
                out[0] = Self::prop8_set(x[0]).map(|s| s.midpoint()[0]).unwrap_or(S::zero());
            }
            _ => {
                let mid = self.radial_set(x).midpoint();
                out.copy_from_slice(&mid);
            }
        }
    }

    fn set_descriptor(&self, t: S, x: &[S]) -> Option<SubgradSet<S>> {
        match self {
            Builtin::LinearForced { h } => Some(SubgradSet::Point(vec![h.eval(t)])),
            Builtin::Abs => Some(if x[0] == S::zero() {
                SubgradSet::Interval { lo: -S::one(), hi: S::one() }
            } else {
                SubgradSet::Point(vec![x[0].signum()])
            }),
            Builtin::Prop8Example => Self::prop8_set(x[0]),
            _ => Some(self.radial_set(x)),
        }
    }

    fn is_kink(&self, _t: S, x: &[S]) -> bool {
        match self {
            Builtin::Abs => x[0] == S::zero(),
            Builtin::Prop8Example => x[0] == S::zero() || x[0] == S::one(),
            Builtin::LinearForced { .. } => false,
            _ => !matches!(self.radial_set(x), SubgradSet::Point(_)),
        }
    }

    fn growth(&self) -> Option<Growth<S>> {
        let one = S::one();
        match self {
            Builtin::Thm1Example { mu, .. } => Some(Growth {
                a1: S::lit(2.0),
                c1: one + one / ((*mu - one) * S::E()),
                r: *mu,
                mu: Some(*mu),
                m_thresh: one,
            }),
            Builtin::Thm2Example { r, .. } => {
                Some(Growth { a1: S::lit(2.0), c1: one, r: *r, mu: None, m_thresh: one })
            }
            Builtin::Quartic { .. } => Some(Growth {
                a1: S::zero(),
                c1: one,
                r: S::lit(4.0),
                mu: Some(S::lit(4.0)),
                m_thresh: one,
            }),
            Builtin::Power { q, .. } => {
                Some(Growth { a1: S::zero(), c1: *q, r: *q, mu: Some(*q), m_thresh: one })
            }
            Builtin::Zero { .. } => {
                Some(Growth { a1: S::zero(), c1: S::zero(), r: one, mu: None, m_thresh: one })
            }
            Builtin::Abs => Some(Growth { a1: one, c1: S::zero(), r: one, mu: None, m_thresh: one }),
            Builtin::LinearForced { h } => {
                let a1 = match h {
                    TimeFn::Const(v) => v.abs(),
                    TimeFn::Cos { a, b, .. } => a.abs() + b.abs(),
                    TimeFn::Sin { amp, .. } => amp.abs(),
                    TimeFn::Table(g) => g.sup_norm(),
                };
                Some(Growth { a1, c1: S::zero(), r: one, mu: None, m_thresh: one })
            }
            // x^{1/3} is not Lipschitz at the origin; no global bound exists.
            Builtin::Prop8Example => None,
        }
    }

    fn kinks(&self) -> Vec<Kink<S>> {
        let one = S::one();
        match self {
            Builtin::Thm1Example { .. } => vec![Kink::Sphere(S::zero()), Kink::Sphere(one)],
            Builtin::Thm2Example { .. } => vec![Kink::Sphere(one)],
            Builtin::Abs => vec![Kink::Value(S::zero())],
            Builtin::Prop8Example => vec![Kink::Value(S::zero()), Kink::Value(one)],
            _ => Vec::new(),
        }
    }

    fn period(&self) -> Option<S> {
        match self {
            Builtin::LinearForced { h: TimeFn::Cos { period, .. } } => Some(*period),
            Builtin::LinearForced { h: TimeFn::Sin { omega, .. } } if *omega != S::zero() => {
                Some(S::lit(2.0) * S::PI() / omega.abs())
            }
            Builtin::LinearForced { h: TimeFn::Table(g) } => Some(g.mesh().period()),
            _ => None,
        }
    }

    fn subgrad_jacobian(&self, t: S, x: &[S], out: &mut [S]) {
        let n = x.len();
        let r = norm(x);
        if !self.is_radial() || r == S::zero() {
            return default_jacobian(self, t, x, out);
        }
        // ∇(f(r)) = f'(r)/r·x ⇒ J = f'/r·I + (f'' - f'/r)·x̂x̂ᵀ
        let slope = self.radial_slope(r);
        let step = S::epsilon().cbrt() * (S::one() + r);
        let curv = if r > step {
            (self.radial_slope(r + step) - self.radial_slope(r - step)) / (S::lit(2.0) * step)
        } else {
            (self.radial_slope(r + step) - slope) / step
        };
        for a in 0..n {
            for b in 0..n {
                let xx = x[a] * x[b] / (r * r);
                let id = if a == b { S::one() } else { S::zero() };
                out[a * n + b] = slope / r * id + (curv - slope / r) * xx;
            }
        }
    }
}

fn default_jacobian<S: Real, P: Potential<S> + ?Sized>(model: &P, t: S, x: &[S], out: &mut [S]) {
    let n = x.len();
    let step = S::epsilon().cbrt() * (S::one() + norm(x));
    let mut xp = x.to_vec();
    let mut up = vec![S::zero(); n];
    let mut um = vec![S::zero(); n];
    for b in 0..n {
        xp[b] = x[b] + step;
        model.subgrad(t, &xp, &mut up);
        xp[b] = x[b] - step;
        model.subgrad(t, &xp, &mut um);
        xp[b] = x[b];
        for a in 0..n {
            out[a * n + b] = (up[a] - um[a]) / (S::lit(2.0) * step);
        }
    }
}

/// A potential given by closures; it has no set descriptor, so it is
/// treated as smooth wherever it is evaluated.
pub struct FnPotential<S, F, G> {
    pub label: String,
    pub value: F,
    pub gradient: G,
    pub growth: Option<Growth<S>>,
}

impl<S, F, G> Potential<S> for FnPotential<S, F, G>
where
    S: Real,
    F: Fn(S, &[S]) -> S + Send + Sync,
    G: Fn(S, &[S], &mut [S]) + Send + Sync,
{
    fn name(&self) -> String {
        self.label.clone()
    }

    fn eval(&self, t: S, x: &[S]) -> S {
        (self.value)(t, x)
    }

    fn subgrad(&self, t: S, x: &[S], out: &mut [S]) {
        (self.gradient)(t, x, out)
    }

    fn growth(&self) -> Option<Growth<S>> {
        self.growth
    }
}

pub fn eval_j<S: Real, P: Potential<S> + ?Sized>(model: &P, t: S, x: &[S]) -> S {
    model.eval(t, x)
}

pub fn select_subgrad<S: Real, P: Potential<S> + ?Sized>(model: &P, t: S, x: &[S]) -> Vec<S> {
    let mut u = vec![S::zero(); x.len()];
    model.subgrad(t, x, &mut u);
    u
}

/// Sampling parameters for [`j0_estimate`].
#[derive(Clone, Debug)]
pub struct J0Sampling<S> {
    /// Number of random base-point perturbations.
    pub perturbations: usize,
    /// Perturbation radius cap; the effective radius is
    /// `min(radius, 10·finest step)`.
    pub radius: S,
    pub seed: u64,
}

impl<S: Real> Default for J0Sampling<S> {
    fn default() -> Self {
        J0Sampling { perturbations: 16, radius: S::lit(1e-4), seed: 0 }
    }
}

pub fn default_j0_scales<S: Real>() -> Vec<S> {
    [1e-2, 1e-3, 1e-4, 1e-5].iter().map(|&v| S::lit(v)).collect()
}

/// Difference-quotient estimate of `j⁰(t, x; dir)`: the largest quotient
/// `(j(x' + λ·dir) - j(x'))/λ` over base points `x'` near `x`, at the finest
/// step `λ` of `scales`.
pub fn j0_estimate<S: Real, P: Potential<S> + ?Sized>(
    model: &P,
    t: S,
    x: &[S],
    dir: &[S],
    scales: &[S],
) -> S {
    j0_estimate_with(model, t, x, dir, scales, &J0Sampling::default())
}

pub fn j0_estimate_with<S: Real, P: Potential<S> + ?Sized>(
    model: &P,
    t: S,
    x: &[S],
    dir: &[S],
    scales: &[S],
    sampling: &J0Sampling<S>,
) -> S {
    if dir.iter().all(|&d| d == S::zero()) {
        return S::zero();
    }
    let step = scales.iter().copied().fold(S::infinity(), S::min);
    let step = if step.is_finite() && step > S::zero() { step } else { S::lit(1e-5) };
    let radius = sampling.radius.min(S::lit(10.0) * step);
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let dn = norm(dir);
    let mut bases: Vec<Vec<S>> = vec![x.to_vec()];
    for sign in [S::one(), -S::one()] {
        bases.push(x.iter().zip(dir).map(|(&a, &d)| a + sign * radius * d / dn).collect());
    }
    for _ in 0..sampling.perturbations {
        let v: Vec<S> = (0..n).map(|_| S::lit(rng.gen_range(-1.0..1.0))).collect();
        let vn = norm(&v).max(S::lit(1e-12));
        let s = S::lit(rng.gen_range(0.1..1.0));
        bases.push(x.iter().zip(&v).map(|(&a, &b)| a + radius * s * b / vn).collect());
    }
    let mut best = S::neg_infinity();
    let mut moved = vec![S::zero(); n];
    for base in &bases {
        for k in 0..n {
            moved[k] = base[k] + step * dir[k];
        }
        let q = (model.eval(t, &moved) - model.eval(t, base)) / step;
        best = best.max(q);
    }
    best
}

/// Distance from `w` to `∂j(t, x)`.
pub fn subgrad_distance<S: Real, P: Potential<S> + ?Sized>(
    model: &P,
    t: S,
    x: &[S],
    w: &[S],
) -> Result<S> {
    scaled_subgrad_distance(model, t, x, w, S::one())
}

/// Distance from `w` to `weight·∂j(t, x)`.
pub fn scaled_subgrad_distance<S: Real, P: Potential<S> + ?Sized>(
    model: &P,
    t: S,
    x: &[S],
    w: &[S],
    weight: S,
) -> Result<S> {
    match model.set_descriptor(t, x) {
        Some(set) => Ok(set.scaled(weight).distance(w)),
        None if !model.is_kink(t, x) => {
            let u = select_subgrad(model, t, x);
            Ok(w.iter().zip(&u).map(|(&a, &b)| (a - weight * b) * (a - weight * b)).sum::<S>().sqrt())
        }
        None => Err(PlapError::UnsupportedPotential(format!(
            "{} has no subdifferential descriptor at a kink (t={t})",
            model.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin1() -> f64 {
        1f64.sin()
    }

    #[test]
    fn thm1_branches_meet_at_unit_sphere() {
        let mu = 3.0;
        let m = Builtin::<f64>::thm1_example(mu, 2.0, 1).unwrap();
        let c = -(mu + 1.0) / mu;
        assert!((m.eval(0.0, &[1.0]) + 1.0).abs() < 1e-15);
        assert!((1.0 / mu - 0.0 + c + 1.0).abs() < 1e-15);
        let just_out = m.eval(0.0, &[1.0 + 1e-13]);
        assert!((just_out + 1.0).abs() < 1e-12);
    }

    #[test]
    fn thm2_branches_meet_at_unit_sphere() {
        let (r, p) = (2.0, 3.0);
        let m = Builtin::<f64>::thm2_example(r, p, 1).unwrap();
        let inside = m.eval(0.0, &[1.0 - 1e-13]);
        let outside = m.eval(0.0, &[1.0]);
        assert!((inside - outside).abs() < 1e-12);
        assert!((outside + 1.0 / p).abs() < 1e-15);
    }

    #[test]
    fn prop8_at_origin() {
        let m = Builtin::<f64>::Prop8Example;
        assert!((m.eval(0.0, &[0.0]) - 1.0).abs() < 1e-15);
        assert!(m.set_descriptor(0.0, &[0.0]).is_none());
        assert!(m.is_kink(0.0, &[0.0]));
    }

    #[test]
    fn thm1_selection_examples() {
        let m = Builtin::<f64>::thm1_example(3.0, 2.0, 2).unwrap();
        let x = [0.3, -0.4];
        let u = select_subgrad(&m, 0.0, &x);
        assert!((u[0] + 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        assert_eq!(select_subgrad(&m, 0.0, &[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn thm2_selection_at_kink_is_segment_midpoint() {
        let m = Builtin::<f64>::thm2_example(2.0, 3.0, 1).unwrap();
        let u = select_subgrad(&m, 0.0, &[1.0]);
        assert!((u[0] + sin1() / 2.0).abs() < 1e-15);
        let set = m.set_descriptor(0.0, &[1.0]).unwrap();
        assert_eq!(set.scalar_bounds(), (-1.0, 1.0 - sin1()));
    }

    #[test]
    fn j0_examples() {
        let q = Builtin::<f64>::quartic(2);
        let v = j0_estimate(&q, 0.0, &[1.0, 0.0], &[1.0, 0.0], &default_j0_scales());
        assert!((v - 1.0).abs() < 1e-3, "{v}");

        let neg_abs = FnPotential {
            label: "-|x|".into(),
            value: |_t: f64, x: &[f64]| -x[0].abs(),
            gradient: |_t: f64, x: &[f64], out: &mut [f64]| out[0] = -x[0].signum(),
            growth: None,
        };
        let v = j0_estimate(&neg_abs, 0.0, &[0.0], &[1.0], &default_j0_scales());
        assert!((v - 1.0).abs() < 1e-9, "{v}");

        assert_eq!(j0_estimate(&q, 0.0, &[0.3, 0.2], &[0.0, 0.0], &default_j0_scales()), 0.0);
    }

    #[test]
    fn j0_converges_for_smooth_models() {
        let q = Builtin::<f64>::quartic(2);
        let x = [0.7, -0.2];
        let d = [0.3, 1.1];
        let exact = dot(&select_subgrad(&q, 0.0, &x), &d);
        let scales: Vec<f64> = vec![1e-3, 1e-5, 1e-7];
        let v = j0_estimate(&q, 0.0, &x, &d, &scales);
        assert!((v - exact).abs() < 1e-4);
        assert!((q.j0_exact(0.0, &x, &d).unwrap() - exact).abs() < 1e-14);
    }

    #[test]
    fn subgrad_distance_examples() {
        let m = Builtin::<f64>::thm1_example(3.0, 2.0, 2).unwrap();
        assert_eq!(subgrad_distance(&m, 0.0, &[0.0, 0.0], &[0.5, 0.0]).unwrap(), 0.0);
        assert!((subgrad_distance(&m, 0.0, &[0.0, 0.0], &[2.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let q = Builtin::<f64>::quartic(2);
        let x = [0.4, 0.9];
        let g = select_subgrad(&q, 0.0, &x);
        assert_eq!(subgrad_distance(&q, 0.0, &x, &g).unwrap(), 0.0);
        let p8 = Builtin::<f64>::Prop8Example;
        assert!(matches!(
            subgrad_distance(&p8, 0.0, &[0.0], &[0.0]),
            Err(PlapError::UnsupportedPotential(_))
        ));
    }

    #[test]
    fn builtin_parsing_and_validation() {
        assert!(Builtin::<f64>::parse("thm1_example:mu=2,p=3", 1.0).is_err());
        let m = Builtin::<f64>::parse("thm2_example:r=2,p=3", 1.0).unwrap();
        assert_eq!(m.growth().unwrap().r, 2.0);
        assert!(Builtin::<f64>::parse("thm2_example:r=3,p=2", 1.0).is_err());
        let m = Builtin::<f64>::parse("thm1_example:mu=3,p=2,N=2", 1.0).unwrap();
        assert_eq!(m.dim(), Some(2));
        assert!(Builtin::<f64>::parse("quartic:mu=3", 1.0).is_err());
        assert!(Builtin::<f64>::parse("nope", 1.0).is_err());
        let lf = Builtin::<f64>::parse("linear_forced:h=sin:1,1", 1.0).unwrap();
        assert!((lf.eval(0.5, &[2.0]) - 2.0 * 0.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn selection_lies_in_described_set() {
        let models: Vec<Builtin<f64>> = vec![
            Builtin::<f64>::thm1_example(3.0, 2.0, 1).unwrap(),
            Builtin::<f64>::thm2_example(2.0, 3.0, 1).unwrap(),
            Builtin::Abs,
            Builtin::Prop8Example,
        ];
        for m in &models {
            for x in [-1.0, 0.0, 0.5, 1.0, 2.0] {
                if let Some(set) = m.set_descriptor(0.0, &[x]) {
                    let u = select_subgrad(m, 0.0, &[x]);
                    assert!(set.distance(&u) <= 1e-12, "{m} at {x}");
                }
            }
        }
    }

    #[test]
    fn set_geometry() {
        let seg = SubgradSet::<f64>::Segment(vec![0.0, 0.0], vec![2.0, 0.0]);
        assert!((seg.distance(&[1.0, 1.0]) - 1.0).abs() < 1e-15);
        assert!((seg.distance(&[3.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(seg.support(&[-1.0, 0.0]), 0.0);
        let iv = SubgradSet::Interval { lo: -1.0, hi: 2.0 }.scaled(-2.0);
        assert_eq!(iv.scalar_bounds(), (-4.0, 2.0));
        let ball = SubgradSet::Ball { center: vec![1.0], radius: 0.5 };
        assert_eq!(ball.support(&[-2.0]), -1.0);
    }
}
