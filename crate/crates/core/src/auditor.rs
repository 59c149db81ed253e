//! Sampled numerical checks of the hypotheses placed on `g` and `j`.
//!
//! Every verdict comes from deterministic sampling: a fixed seed, fixed
//! radii and fixed time samples. A `pass` means the inequality held at
//! every sample, never that it holds everywhere; a `fail` always carries
//! the sampled point and both sides of the violated inequality.
//!
//! The limit conditions (v) of the first two families are printed for
//! `‖x‖ → ∞` but used at the origin by the existence proofs; the auditor
//! checks the origin limit and says so in the report notes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{PlapError, Result};
use crate::grid_space::{dot, mode_coefficients, norm, GridFn};
use crate::potential::{j0_estimate, default_j0_scales, select_subgrad, Potential};
use crate::real::Real;
use crate::timefn::TimeFn;

/// Margins below this size are treated as sampling noise.
pub const NOISE: f64 = 1e-6;

/// Radii approaching the origin for the limit conditions (v).
const ORIGIN_RADII: [f64; 7] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

/// Bound on `|u|/|x|` at the largest radius for the `u/x → 0` checks.
const DECAY_BOUND: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Profile {
    Hg,
    Hg1,
    Hj1,
    Hj2,
    Hj3,
    Hj4,
    Hj5,
}

impl std::str::FromStr for Profile {
    type Err = PlapError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace(['(', ')', '_'], "").as_str() {
            "hg" => Profile::Hg,
            "hg1" => Profile::Hg1,
            "hj1" => Profile::Hj1,
            "hj2" => Profile::Hj2,
            "hj3" => Profile::Hj3,
            "hj4" => Profile::Hj4,
            "hj5" => Profile::Hj5,
            _ => return Err(PlapError::Domain(format!("unknown hypothesis profile `{s}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// The worst sample of a check: `lhs ≤ rhs` was tested and
/// `margin = rhs - lhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness<S> {
    pub t: S,
    pub x: Vec<S>,
    pub lhs: S,
    pub rhs: S,
    pub margin: S,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check<S> {
    pub label: String,
    /// The inequality in words, `lhs ≤ rhs` or `lhs < rhs`.
    pub inequality: String,
    pub verdict: Verdict,
    pub witness: Option<Witness<S>>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sampling<S> {
    pub radii: Vec<S>,
    pub directions: usize,
    pub times: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport<S> {
    pub profile: Profile,
    pub model: String,
    pub checks: Vec<Check<S>>,
    pub sampling: Sampling<S>,
    pub notes: Vec<String>,
}

impl<S> AuditReport<S> {
    pub fn check(&self, label: &str) -> Option<&Check<S>> {
        self.checks.iter().find(|c| c.label == label)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn any_fail(&self) -> bool {
        self.checks.iter().any(|c| c.verdict == Verdict::Fail)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditParams<S> {
    pub p: S,
    /// Base period `b`; the first three `j` families and `H(g)` integrate
    /// over `[0, b]`, the homoclinic family over `[-b, b]`.
    pub b: S,
    pub mu: Option<S>,
    pub m_thresh: Option<S>,
    pub x_star: Option<Vec<S>>,
    /// Ascending radii for the growth, `μ` and `u/x → 0` checks.
    pub radii: Vec<S>,
    /// Random directions per radius (in addition to `±e_k`) and time samples.
    pub samples: usize,
    pub seed: u64,
    /// Required for the `H(g)` profiles.
    pub g: Option<TimeFn<S>>,
    /// Forcing `h` and resonance index `m` for the Landesman–Lazer part of
    /// the fifth family; without them that check is inconclusive.
    pub forcing: Option<TimeFn<S>>,
    pub m: Option<usize>,
}

impl<S: Real> AuditParams<S> {
    pub fn new(p: S, b: S) -> Self {
        AuditParams {
            p,
            b,
            mu: None,
            m_thresh: None,
            x_star: None,
            radii: [1.0, 10.0, 1e2, 1e3, 1e4, 1e6, 1e8].iter().map(|&r| S::lit(r)).collect(),
            samples: 16,
            seed: 0,
            g: None,
            forcing: None,
            m: None,
        }
    }
}

/// Verdict for `lhs ≤ rhs` (or `<` when `strict`) from the worst margin.
fn judge<S: Real>(margin: S, strict: bool) -> Verdict {
    let noise = S::lit(NOISE);
    if !margin.is_finite() && margin > S::zero() {
        return Verdict::Pass;
    }
    if margin.is_nan() {
        return Verdict::Inconclusive;
    }
    if margin < -noise || (!margin.is_finite()) {
        Verdict::Fail
    } else if margin.abs() < noise && (strict || margin < S::zero()) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    }
}

/// Limits are estimates, so a margin within noise is never a pass.
fn judge_limit<S: Real>(margin: S) -> Verdict {
    match judge(margin, true) {
        Verdict::Pass if margin.abs() < S::lit(NOISE) => Verdict::Inconclusive,
        v => v,
    }
}

struct Sampler<S> {
    dirs: Vec<Vec<S>>,
    times: Vec<S>,
}

impl<S: Real> Sampler<S> {
    fn new(dim: usize, t0: S, span: S, samples: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4155_4449);
        let mut dirs = Vec::new();
        for k in 0..dim {
            for s in [S::one(), -S::one()] {
                let mut e = vec![S::zero(); dim];
                e[k] = s;
                dirs.push(e);
            }
        }
        if dim > 1 {
            for _ in 0..samples {
                let v: Vec<S> = (0..dim).map(|_| S::lit(rng.gen_range(-1.0..1.0))).collect();
                let n = norm(&v);
                if n > S::lit(1e-3) {
                    dirs.push(v.iter().map(|&a| a / n).collect());
                }
            }
        }
        let nt = samples.max(1);
        let times = (0..nt).map(|i| t0 + span * S::from_usize_lossy(i) / S::from_usize_lossy(nt)).collect();
        Sampler { dirs, times }
    }

    /// Every `(t, x)` with `x = r·dir`.
    fn points<'a>(&'a self, radii: &'a [S]) -> impl Iterator<Item = (S, Vec<S>)> + 'a {
        radii.iter().flat_map(move |&r| {
            self.times
                .iter()
                .flat_map(move |&t| self.dirs.iter().map(move |d| (t, d.iter().map(|&v| r * v).collect())))
        })
    }
}

/// Tracks the sample with the least margin.
struct Worst<S> {
    w: Option<Witness<S>>,
}

impl<S: Real> Worst<S> {
    fn new() -> Self {
        Worst { w: None }
    }

    fn see(&mut self, t: S, x: &[S], lhs: S, rhs: S) {
        let margin = rhs - lhs;
        let worse = match &self.w {
            None => true,
            Some(w) => margin < w.margin || margin.is_nan(),
        };
        if worse {
            self.w = Some(Witness { t, x: x.to_vec(), lhs, rhs, margin });
        }
    }

    fn finish(self, label: &str, inequality: &str, strict: bool, limit: bool) -> Check<S> {
        let verdict = match &self.w {
            None => Verdict::Inconclusive,
            Some(w) if limit => judge_limit(w.margin),
            Some(w) => judge(w.margin, strict),
        };
        Check { label: label.into(), inequality: inequality.into(), verdict, witness: self.w, note: None }
    }
}

fn with_note<S>(mut c: Check<S>, note: impl Into<String>) -> Check<S> {
    c.note = Some(note.into());
    c
}

fn inconclusive<S>(label: &str, inequality: &str, note: &str) -> Check<S> {
    Check {
        label: label.into(),
        inequality: inequality.into(),
        verdict: Verdict::Inconclusive,
        witness: None,
        note: Some(note.into()),
    }
}

/// Composite Simpson rule on `[a, a + span]`.
fn simpson<S: Real>(a: S, span: S, n: usize, f: impl Fn(S) -> S) -> S {
    let n = n + n % 2;
    let h = span / S::from_usize_lossy(n);
    let mut acc = f(a) + f(a + span);
    for i in 1..n {
        let w = if i % 2 == 1 { S::lit(4.0) } else { S::lit(2.0) };
        acc += w * f(a + h * S::from_usize_lossy(i));
    }
    acc * h / S::lit(3.0)
}

fn dim_of<S: Real, P: Potential<S> + ?Sized>(model: &P, params: &AuditParams<S>) -> usize {
    model
        .dim()
        .or_else(|| params.x_star.as_ref().map(|x| x.len()))
        .unwrap_or(1)
}

/// Largest `‖u‖` over `∂j(t, x)`, from the set descriptor when available.
fn max_subgrad_norm<S: Real, P: Potential<S> + ?Sized>(model: &P, t: S, x: &[S]) -> S {
    model
        .set_descriptor(t, x)
        .map(|s| s.max_norm())
        .unwrap_or_else(|| norm(&select_subgrad(model, t, x)))
}

/// `max_{u ∈ ∂j(t,x)} (u, x)`.
fn max_pairing<S: Real, P: Potential<S> + ?Sized>(model: &P, t: S, x: &[S]) -> S {
    model.j0_exact(t, x, x).unwrap_or_else(|| dot(&select_subgrad(model, t, x), x))
}

/// `-j⁰(t, x; -x)`, exactly when the model describes its sets.
fn minus_j0_minus_x<S: Real, P: Potential<S> + ?Sized>(model: &P, t: S, x: &[S]) -> S {
    let neg: Vec<S> = x.iter().map(|&v| -v).collect();
    match model.j0_exact(t, x, &neg) {
        Some(v) => -v,
        None => -j0_estimate(model, t, x, &neg, &default_j0_scales()),
    }
}

/// Sampled supremum of `p·j(t,x)/‖x‖^p` on shrinking spheres; the value at
/// the smallest radius estimates the lim sup at the origin.
fn origin_values<S: Real, P: Potential<S> + ?Sized>(model: &P, p: S, sampler: &Sampler<S>) -> Vec<(S, Witness<S>)> {
    ORIGIN_RADII
        .iter()
        .map(|&r| {
            let r = S::lit(r);
            let mut worst = Worst::new();
            for (t, x) in sampler.points(&[r]) {
                let v = p * model.eval(t, &x) / r.powf(p);
                worst.see(t, &x, v, S::zero());
            }
            let w = worst.w.expect("nonempty sample");
            (r, w)
        })
        .collect()
}

/// True unless the sampled `lim sup p·j(t,x)/‖x‖^p` at the origin is
/// clearly positive.
pub fn origin_condition_holds<S: Real, P: Potential<S> + ?Sized>(model: &P, p: S) -> bool {
    let sampler = Sampler::new(model.dim().unwrap_or(1), S::zero(), model.period().unwrap_or(S::one()), 8, 0);
    let vals = origin_values(model, p, &sampler);
    let last = &vals.last().expect("radii").1;
    judge_limit(last.margin) != Verdict::Fail
}

fn growth_check<S: Real, P: Potential<S> + ?Sized>(
    model: &P,
    sampler: &Sampler<S>,
    radii: &[S],
    label: &str,
    r_below: Option<S>,
) -> Check<S> {
    let ineq = "‖u‖ ≤ a₁ + c₁‖x‖^{r−1} for u ∈ ∂j(t,x)";
    let Some(g) = model.growth() else {
        return inconclusive(label, ineq, "the model declares no growth constants");
    };
    if let Some(p) = r_below {
        if !(g.r < p) {
            let mut c = Worst::new();
            c.see(S::zero(), &[], g.r, p);
            let mut out = c.finish(label, "r < p", true, false);
            out.verdict = Verdict::Fail;
            return with_note(out, format!("growth exponent r = {} is not below p = {p}", g.r));
        }
    }
    let mut worst = Worst::new();
    let mut rs: Vec<S> = radii.to_vec();
    // include the nonsmooth spheres and a few small radii
    rs.extend([S::zero(), S::lit(0.5), S::one(), S::lit(1.5)]);
    for (t, x) in sampler.points(&rs) {
        worst.see(t, &x, max_subgrad_norm(model, t, &x), g.bound(norm(&x)));
    }
    worst.finish(label, ineq, false, false)
}

fn mu_check<S: Real, P: Potential<S> + ?Sized>(
    model: &P,
    sampler: &Sampler<S>,
    params: &AuditParams<S>,
    label: &str,
) -> Result<Check<S>> {
    let growth = model.growth();
    let mu = params.mu.or(growth.and_then(|g| g.mu)).ok_or_else(|| missing("mu"))?;
    let m = params.m_thresh.or(growth.map(|g| g.m_thresh)).ok_or_else(|| missing("M_thresh"))?;
    if !(mu > params.p) {
        return Err(PlapError::Domain(format!("the μ-condition needs μ > p, got μ = {mu}")));
    }
    let rmax = params.radii.iter().copied().fold(m, S::max);
    let mut rs = vec![m];
    rs.extend(params.radii.iter().copied().filter(|&r| r > m));
    if rs.len() < 3 {
        // spread a few radii between M and the largest one
        rs = (0..=4).map(|k| m * (rmax / m).powf(S::from_usize_lossy(k) / S::lit(4.0))).collect();
    }
    let mut worst = Worst::new();
    for (t, x) in sampler.points(&rs) {
        worst.see(t, &x, mu * model.eval(t, &x), minus_j0_minus_x(model, t, &x));
    }
    Ok(with_note(
        worst.finish(label, "μ·j(t,x) ≤ −j⁰(t,x;−x) for ‖x‖ ≥ M", false, false),
        format!("μ = {mu}, M = {m}"),
    ))
}

fn origin_check<S: Real, P: Potential<S> + ?Sized>(
    model: &P,
    p: S,
    sampler: &Sampler<S>,
    label: &str,
    strict: bool,
) -> Check<S> {
    let vals = origin_values(model, p, sampler);
    let (r, w) = vals.last().expect("radii").clone();
    let ineq = if strict { "lim sup p·j(t,x)/‖x‖^p < 0 as ‖x‖ → 0" } else { "lim sup p·j(t,x)/‖x‖^p ≤ 0 as ‖x‖ → 0" };
    let trend: Vec<f64> = vals.iter().map(|(_, w)| w.lhs.as_f64()).collect();
    let verdict = judge_limit(w.margin);
    Check {
        label: label.into(),
        inequality: ineq.into(),
        verdict,
        witness: Some(w),
        note: Some(format!("sampled sup at radii 1e-2…{r}: {trend:?}")),
    }
}

/// `∫ j(t, x(t)) dt` over `[t0, t0 + span]` for a constant `x`.
fn integral_j<S: Real, P: Potential<S> + ?Sized>(model: &P, x: &[S], t0: S, span: S) -> S {
    simpson(t0, span, 512, |t| model.eval(t, x))
}

fn positivity_check<S: Real, P: Potential<S> + ?Sized>(
    model: &P,
    x: &[S],
    t0: S,
    span: S,
    label: &str,
) -> Check<S> {
    let v = integral_j(model, x, t0, span);
    let mut w = Worst::new();
    w.see(t0, x, S::zero(), v);
    w.finish(label, "0 < ∫ j(t, x₀) dt", true, false)
}

/// Constant `c·e₁` with the largest `∫ j`, over a geometric ladder.
fn best_constant<S: Real, P: Potential<S> + ?Sized>(model: &P, dim: usize, t0: S, span: S) -> Vec<S> {
    let mut best = (vec![S::zero(); dim], S::neg_infinity());
    for k in -8..=40 {
        let mut x = vec![S::zero(); dim];
        x[0] = S::lit(2f64.powf(k as f64 / 2.0));
        let v = integral_j(model, &x, t0, span);
        if v > best.1 {
            best = (x, v);
        }
    }
    best.0
}

fn zero_integral_check<S: Real, P: Potential<S> + ?Sized>(
    model: &P,
    dim: usize,
    b: S,
    label: &str,
    equality: bool,
) -> Check<S> {
    let zero = vec![S::zero(); dim];
    let v = integral_j(model, &zero, S::zero(), b);
    let mut w = Worst::new();
    if equality {
        let tol = S::lit(1e-12) * (S::one() + b);
        w.see(S::zero(), &zero, v.abs(), tol);
        let mut c = w.finish(label, "∫₀ᵇ j(t,0) dt = 0", false, false);
        c.verdict = if v.abs() <= tol { Verdict::Pass } else { Verdict::Fail };
        c
    } else {
        w.see(S::zero(), &zero, S::zero(), v);
        w.finish(label, "∫₀ᵇ j(t,0) dt ≥ 0", false, false)
    }
}

fn decay_check<S: Real, P: Potential<S> + ?Sized>(
    model: &P,
    sampler: &Sampler<S>,
    radii: &[S],
    label: &str,
) -> Check<S> {
    let ineq = "lim |u|/|x| = 0 as |x| → ∞";
    let top: Vec<S> = radii.iter().rev().take(2).copied().collect();
    let mut at = Vec::new();
    for &r in &top {
        let mut worst = Worst::new();
        for (t, x) in sampler.points(&[r]) {
            worst.see(t, &x, max_subgrad_norm(model, t, &x) / norm(&x), S::lit(DECAY_BOUND));
        }
        at.push(worst.w.expect("nonempty sample"));
    }
    let Some(last) = at.first().cloned() else {
        return inconclusive(label, ineq, "no radii");
    };
    let growing = at.len() == 2 && at[0].lhs > at[1].lhs * S::lit(1.0 + 1e-9) && at[0].lhs > S::lit(NOISE);
    let verdict = if last.margin < S::zero() || growing { Verdict::Fail } else { Verdict::Pass };
    Check {
        label: label.into(),
        inequality: ineq.into(),
        verdict,
        witness: Some(last),
        note: Some(format!("|u|/|x| at the two largest radii must be ≤ {DECAY_BOUND} and not growing")),
    }
}

fn missing(what: &str) -> PlapError {
    PlapError::Domain(format!("audit parameter `{what}` is required for this profile"))
}

fn g_checks<S: Real>(g: &TimeFn<S>, t0: S, span: S, periodic_label: &str, out: &mut Vec<Check<S>>) {
    let n = 1024;
    let mut low = Worst::new();
    let mut fin = true;
    for i in 0..=n {
        let t = t0 + span * S::from_usize_lossy(i) / S::from_usize_lossy(n);
        let v = g.eval(t);
        fin &= v.is_finite();
        low.see(t, &[v], S::zero(), v);
    }
    let mut c = low.finish("min g > 0", "0 < g(t)", true, false);
    if !fin {
        c.verdict = Verdict::Fail;
    }
    if let Some(w) = &c.witness {
        c.note = Some(format!("c = {} (sampled minimum)", w.rhs));
    }
    out.push(c);
    let mut per = Worst::new();
    let d = (g.eval(t0) - g.eval(t0 + span)).abs();
    per.see(t0, &[], d, S::lit(1e-10));
    let mut c = per.finish(periodic_label, "|g(start) − g(end)| ≤ 1e−10", false, false);
    c.verdict = if d <= S::lit(1e-10) { Verdict::Pass } else { Verdict::Fail };
    out.push(c);
}

/// Runs the sampled checks of one hypothesis family.
pub fn audit_hypotheses<S: Real, P: Potential<S> + ?Sized>(
    model: &P,
    profile: Profile,
    params: &AuditParams<S>,
) -> Result<AuditReport<S>> {
    let p = params.p;
    if !(p > S::one()) {
        return Err(PlapError::Domain(format!("p must exceed 1, got {p}")));
    }
    if !(params.b > S::zero()) {
        return Err(PlapError::Domain("the period b must be positive".into()));
    }
    if params.radii.is_empty() || params.radii.windows(2).any(|w| !(w[0] < w[1])) || !(params.radii[0] > S::zero()) {
        return Err(PlapError::Domain("audit radii must be positive and strictly ascending".into()));
    }
    let dim = dim_of(model, params);
    let b = params.b;
    let (t0, span) = match profile {
        Profile::Hj3 | Profile::Hg1 => (-b, S::lit(2.0) * b),
        _ => (S::zero(), b),
    };
    let sampler = Sampler::new(dim, t0, span, params.samples, params.seed);
    let scalar_only = matches!(profile, Profile::Hj4 | Profile::Hj5);
    if scalar_only && dim != 1 {
        return Err(PlapError::Domain(format!("{profile:?} concerns scalar potentials")));
    }
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let origin_note = "condition (v) is printed for ‖x‖ → ∞ but used at the origin by the existence proof; the origin limit is checked";
    match profile {
        Profile::Hg | Profile::Hg1 => {
            let g = params.g.as_ref().ok_or_else(|| missing("g"))?;
            let label = if profile == Profile::Hg { "g(0) = g(b)" } else { "g is 2b-periodic" };
            g_checks(g, t0, span, label, &mut checks);
        }
        Profile::Hj1 => {
            checks.push(zero_integral_check(model, dim, b, "∫j(t,0) ≥ 0", false));
            checks.push(growth_check(model, &sampler, &params.radii, "(iii) growth", None));
            checks.push(mu_check(model, &sampler, params, "(iv) μ-condition")?);
            checks.push(origin_check(model, p, &sampler, "(v) origin limit", false));
            let xs = params.x_star.as_ref().ok_or_else(|| missing("x_star"))?;
            let m = params.m_thresh.or(model.growth().map(|g| g.m_thresh)).ok_or_else(|| missing("M_thresh"))?;
            let mut c = positivity_check(model, xs, S::zero(), b, "(vi) ∫j(t,x*) > 0");
            if norm(xs) < m {
                c.verdict = Verdict::Fail;
                c.note = Some(format!("‖x*‖ = {} is below M = {m}", norm(xs)));
            }
            checks.push(c);
            notes.push(origin_note.into());
        }
        Profile::Hj2 => {
            checks.push(growth_check(model, &sampler, &params.radii, "(iii) growth", Some(p)));
            checks.push(zero_integral_check(model, dim, b, "(iv) ∫j(t,0) = 0", true));
            let x0 = params.x_star.clone().unwrap_or_else(|| best_constant(model, dim, S::zero(), b));
            checks.push(positivity_check(model, &x0, S::zero(), b, "(iv) ∫j(t,x₀) > 0"));
            checks.push(origin_check(model, p, &sampler, "(v) origin limit", true));
            notes.push(origin_note.into());
        }
        Profile::Hj3 => {
            let zero = vec![S::zero(); dim];
            let mut w = Worst::new();
            let mut worst_abs = S::zero();
            for &t in &sampler.times {
                let v = model.eval(t, &zero);
                worst_abs = worst_abs.max(v.abs());
                w.see(t, &zero, v.abs(), S::zero());
            }
            let mut c = w.finish("j(t,0) = 0", "|j(t,0)| = 0", false, false);
            c.verdict = if worst_abs == S::zero() { Verdict::Pass } else { Verdict::Fail };
            checks.push(c);
            if let Some(tp) = model.period() {
                let k = (S::lit(2.0) * b / tp).round();
                let c = if (k * tp - S::lit(2.0) * b).abs() <= S::lit(1e-9) * b && k >= S::one() {
                    Check { label: "(i) 2b-periodic".into(), inequality: "2b ∈ period·ℕ".into(), verdict: Verdict::Pass, witness: None, note: None }
                } else {
                    Check {
                        label: "(i) 2b-periodic".into(),
                        inequality: "2b ∈ period·ℕ".into(),
                        verdict: Verdict::Fail,
                        witness: None,
                        note: Some(format!("t-period {tp} does not divide 2b = {}", S::lit(2.0) * b)),
                    }
                };
                checks.push(c);
            }
            checks.push(with_note(
                growth_check(model, &sampler, &params.radii, "(iii) growth", None),
                "checked with the exponent r − 1 used by the existence proof",
            ));
            checks.push(mu_check(model, &sampler, params, "(iv) μ-condition")?);
            checks.push(origin_check(model, p, &sampler, "(v) origin limit", false));
            let x0 = params.x_star.clone().unwrap_or_else(|| best_constant(model, dim, -b, S::lit(2.0) * b));
            checks.push(positivity_check(model, &x0, -b, S::lit(2.0) * b, "(vi) ∫j(t,x₀) > 0"));
        }
        Profile::Hj4 | Profile::Hj5 => {
            checks.push(growth_check(model, &sampler, &params.radii, "(iii) growth", None));
            checks.push(decay_check(model, &sampler, &params.radii, "(iv) u/x → 0"));
            let rmax = *params.radii.last().expect("nonempty");
            let times = &sampler.times;
            let jp: Vec<S> = times.iter().map(|&t| pointwise_asymptotics(model, t, rmax, params.samples).0).collect();
            let jm: Vec<S> = times.iter().map(|&t| pointwise_asymptotics(model, t, rmax, params.samples).1).collect();
            if profile == Profile::Hj4 {
                let per = |v: &[S]| v.iter().copied().sum::<S>() * b / S::from_usize_lossy(v.len());
                let (ip, im) = (per(&jp), per(&jm));
                let mut w = Worst::new();
                w.see(S::zero(), &[rmax], im, S::zero());
                w.see(S::zero(), &[rmax], S::zero(), ip);
                checks.push(with_note(
                    w.finish("(v) ∫j₋ < 0 < ∫j₊", "∫j₋ < 0 < ∫j₊", true, false),
                    format!("∫j₊ = {ip}, ∫j₋ = {im} at radius {rmax}"),
                ));
            } else {
                match (&params.forcing, params.m) {
                    (Some(h), Some(m)) => {
                        let mesh = crate::grid_space::Mesh::new(b, 1024)?;
                        let hg = GridFn::from_scalar_fn(mesh, |t| h.eval(t));
                        let grid = default_theta_grid::<S>(64);
                        let ll = resonance_ll_check(model, &hg, m, b, &grid)?;
                        let mut w = Worst::new();
                        w.see(ll.worst_theta, &[], ll.lhs, ll.rhs);
                        let mut c = w.finish("(v) Landesman–Lazer", "∫h·sin(mωt+θ) < ∫j₊sin⁺ − j₋sin⁻", true, false);
                        c.verdict = if ll.ok { Verdict::Pass } else { Verdict::Fail };
                        checks.push(c);
                    }
                    _ => checks.push(inconclusive(
                        "(v) Landesman–Lazer",
                        "∫h·sin(mωt+θ) < ∫j₊sin⁺ − j₋sin⁻",
                        "needs the forcing h and the resonance index m",
                    )),
                }
            }
        }
    }
    Ok(AuditReport {
        profile,
        model: model.name(),
        checks,
        sampling: Sampling { radii: params.radii.clone(), directions: sampler.dirs.len(), times: sampler.times.len(), seed: params.seed },
        notes,
    })
}

/// Samples `x ∈ R·[1, 2]` plus one full period of `sin x` past `R`.
fn far_points<S: Real>(r: S, samples: usize) -> Vec<S> {
    let n = samples.max(8) * 4;
    let mut out = Vec::with_capacity(2 * n + 2);
    for k in 0..=n {
        let s = S::from_usize_lossy(k) / S::from_usize_lossy(n);
        out.push(r * (S::one() + s));
        out.push(r + S::lit(2.0) * S::PI() * s);
    }
    out
}

/// `(j₊(t), j₋(t))` at radius `r`: the least `j/x` over sampled `x ≥ r` and
/// the largest `j/x` over sampled `x ≤ -r`.
pub fn pointwise_asymptotics<S: Real, P: Potential<S> + ?Sized>(model: &P, t: S, r: S, samples: usize) -> (S, S) {
    let mut jp = S::infinity();
    let mut jm = S::neg_infinity();
    for x in far_points(r, samples) {
        jp = jp.min(model.eval(t, &[x]) / x);
        jm = jm.max(model.eval(t, &[-x]) / -x);
    }
    (jp, jm)
}

/// `(g₁, g₂) = (min ∂j, max ∂j)` at a scalar point.
fn g_bounds<S: Real, P: Potential<S> + ?Sized>(model: &P, t: S, x: S) -> (S, S) {
    match model.set_descriptor(t, &[x]) {
        Some(set) => set.scalar_bounds(),
        None => {
            let e = S::lit(1e-9);
            let a = select_subgrad(model, t, &[x * (S::one() - e)])[0];
            let b = select_subgrad(model, t, &[x * (S::one() + e)])[0];
            (a.min(b), a.max(b))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticsEstimate<S> {
    pub j_plus: S,
    pub j_minus: S,
    pub g1_minus: S,
    pub g2_plus: S,
    pub radii: Vec<S>,
    /// Largest change of the four estimates between the last two radii.
    pub trend: S,
    /// `G₂⁺ ≤ j₊ + 0.01` and `j₋ ≤ G₁⁻ + 0.01`.
    pub consistent: bool,
}

fn asymptotics_at<S: Real, P: Potential<S> + ?Sized>(model: &P, times: &[S], r: S, samples: usize) -> [S; 4] {
    let mut jp = S::infinity();
    let mut jm = S::neg_infinity();
    let mut g1m = S::neg_infinity();
    let mut g2p = S::infinity();
    let two = S::lit(2.0);
    for &t in times {
        let (a, b) = pointwise_asymptotics(model, t, r, samples);
        jp = jp.min(a);
        jm = jm.max(b);
        for x in far_points(r, samples) {
            let (_, g2) = g_bounds(model, t, x);
            g2p = g2p.min(two * model.eval(t, &[x]) / x - g2);
            let (g1, _) = g_bounds(model, t, -x);
            g1m = g1m.max(two * model.eval(t, &[-x]) / -x - g1);
        }
    }
    [jp, jm, g1m, g2p]
}

/// Estimates `j₊`, `j₋`, `G₁⁻` and `G₂⁺` at finite radii. For
/// `t`-dependent models the lim inf quantities take the minimum and the
/// lim sup quantities the maximum over a `t`-sample.
pub fn estimate_asymptotics<S: Real, P: Potential<S> + ?Sized>(
    model: &P,
    radii: &[S],
    samples: usize,
) -> Result<AsymptoticsEstimate<S>> {
    if model.dim().unwrap_or(1) != 1 {
        return Err(PlapError::Domain(format!("{} is not a scalar potential", model.name())));
    }
    if radii.is_empty() || radii.windows(2).any(|w| !(w[0] < w[1])) || !(radii[0] > S::zero()) {
        return Err(PlapError::Domain("radii must be positive and strictly ascending".into()));
    }
    let rmax = *radii.last().expect("nonempty");
    if !(rmax >= S::lit(1e4)) {
        return Err(PlapError::Domain(format!("the largest radius must be at least 1e4, got {rmax}")));
    }
    let times: Vec<S> = match model.period() {
        Some(tp) => (0..samples.max(1)).map(|i| tp * S::from_usize_lossy(i) / S::from_usize_lossy(samples.max(1))).collect(),
        None => vec![S::zero()],
    };
    let last = asymptotics_at(model, &times, rmax, samples);
    let trend = if radii.len() >= 2 {
        let prev = asymptotics_at(model, &times, radii[radii.len() - 2], samples);
        last.iter().zip(&prev).map(|(a, b)| (*a - *b).abs()).fold(S::zero(), S::max)
    } else {
        S::nan()
    };
    let [j_plus, j_minus, g1_minus, g2_plus] = last;
    let tol = S::lit(0.01);
    Ok(AsymptoticsEstimate {
        j_plus,
        j_minus,
        g1_minus,
        g2_plus,
        radii: radii.to_vec(),
        trend,
        consistent: g2_plus <= j_plus + tol && j_minus <= g1_minus + tol,
    })
}

pub fn default_theta_grid<S: Real>(n: usize) -> Vec<S> {
    (0..n).map(|k| S::lit(2.0) * S::PI() * S::from_usize_lossy(k) / S::from_usize_lossy(n)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LlCheck<S> {
    pub ok: bool,
    pub worst_theta: S,
    /// Least `rhs - lhs` over the grid.
    pub margin: S,
    pub lhs: S,
    pub rhs: S,
}

/// Radius at which `j₊(t)`, `j₋(t)` are read off for the resonance check.
const LL_RADIUS: f64 = 1e8;

/// The Landesman–Lazer inequality at every `θ` of the grid. The right side
/// is integrated piecewise between the zeros of `sin(mωt+θ)`.
pub fn resonance_ll_check<S: Real, P: Potential<S> + ?Sized>(
    model: &P,
    h: &GridFn<S>,
    m: usize,
    b: S,
    theta_grid: &[S],
) -> Result<LlCheck<S>> {
    if model.dim().unwrap_or(1) != 1 || h.dim() != 1 {
        return Err(PlapError::Domain("the resonance check is scalar".into()));
    }
    if theta_grid.len() < 64 {
        return Err(PlapError::Domain(format!("θ grid needs at least 64 points, got {}", theta_grid.len())));
    }
    if m == 0 {
        return Err(PlapError::Domain("resonance index m must be at least 1".into()));
    }
    let w = S::lit(2.0) * S::PI() / b;
    let mw = S::from_usize_lossy(m) * w;
    let r = S::lit(LL_RADIUS);
    let jpm = |t: S| pointwise_asymptotics(model, t, r, 8);
    let mesh = h.mesh();
    let mut best: Option<LlCheck<S>> = None;
    let mut all_ok = true;
    for &theta in theta_grid {
        let lhs = mesh
            .nodes()
            .enumerate()
            .map(|(i, t)| h.values()[i] * (mw * t + theta).sin())
            .sum::<S>()
            * mesh.h();
        // zeros of sin(mωt + θ) in [0, b] split the integrand into smooth pieces
        let mut cuts = vec![S::zero(), b];
        let k0 = (theta / S::PI()).ceil();
        let mut k = k0;
        loop {
            let t = (k * S::PI() - theta) / mw;
            if t >= b {
                break;
            }
            if t > S::zero() {
                cuts.push(t);
            }
            k += S::one();
        }
        cuts.sort_by(|a, c| a.partial_cmp(c).unwrap_or(std::cmp::Ordering::Equal));
        let mut rhs = S::zero();
        for c in cuts.windows(2) {
            let span = c[1] - c[0];
            if span <= S::zero() {
                continue;
            }
            rhs += simpson(c[0], span, 64, |t| {
                let s = (mw * t + theta).sin();
                let (jp, jm) = jpm(t);
                jp * s.max(S::zero()) - jm * (-s).max(S::zero())
            });
        }
        let margin = rhs - lhs;
        all_ok &= margin >= S::lit(1e-9);
        if best.as_ref().is_none_or(|b| margin < b.margin) {
            best = Some(LlCheck { ok: false, worst_theta: theta, margin, lhs, rhs });
        }
    }
    let mut out = best.expect("nonempty grid");
    out.ok = all_ok;
    Ok(out)
}

/// `min_{m<k≤k_max} (k²−m²)ω²/(1+k²ω²)`, the coercivity constant of the
/// resonant quadratic form on the modes above `m` in the `W^{1,2}` norm.
pub fn gap_constant<S: Real>(m: usize, b: S, k_max: usize) -> Result<S> {
    if k_max < m + 2 {
        return Err(PlapError::Domain(format!("k_max must be at least m + 2 = {}", m + 2)));
    }
    let w = S::lit(2.0) * S::PI() / b;
    let w2 = w * w;
    let mm = S::from_usize_lossy(m * m);
    Ok((m + 1..=k_max)
        .map(|k| {
            let kk = S::from_usize_lossy(k * k);
            (kk - mm) * w2 / (S::one() + kk * w2)
        })
        .fold(S::infinity(), S::min))
}

/// `(‖x'‖² − m²ω²‖x‖²)/‖x‖²_{W^{1,2}}` from the discrete Fourier
/// coefficients of a scalar grid function, with exact derivatives of the
/// trigonometric interpolant.
pub fn rayleigh_quotient<S: Real>(x: &GridFn<S>, m: usize) -> Result<S> {
    if x.dim() != 1 || !x.len().is_multiple_of(2) {
        return Err(PlapError::Domain("the Rayleigh quotient needs a scalar function on an even mesh".into()));
    }
    let w = x.mesh().omega();
    let mm = S::from_usize_lossy(m) * w;
    let half = x.len() / 2;
    let (mut num, mut den) = (S::zero(), S::zero());
    for k in 0..=half {
        let (a, b) = mode_coefficients(x, k);
        let power = if k == 0 {
            a * a
        } else if k == half {
            a * a / S::lit(4.0)
        } else {
            (a * a + b * b) / S::lit(2.0)
        };
        let kw = S::from_usize_lossy(k) * w;
        num += power * (kw * kw - mm * mm);
        den += power * (S::one() + kw * kw);
    }
    if !(den > S::zero()) {
        return Err(PlapError::Domain("the Rayleigh quotient of 0 is undefined".into()));
    }
    Ok(num / den)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Equivalence<S> {
    pub limit_v: S,
    pub limit_v_prime: S,
    pub agree: bool,
}

/// Sampled lim sups of `p·j/‖x‖^p` and `(u,x)/‖x‖^p` at the smallest radius,
/// with `u` ranging over `∂j(t,x)`; `agree` compares the sign verdicts.
pub fn equivalence_check<S: Real, P: Potential<S> + ?Sized>(model: &P, p: S, radii: &[S]) -> Result<Equivalence<S>> {
    let rmin = radii.iter().copied().fold(S::infinity(), S::min);
    if !(rmin <= S::lit(1e-6)) || !(rmin > S::zero()) {
        return Err(PlapError::Domain(format!("radii must descend to at most 1e-6, got {rmin}")));
    }
    let dim = model.dim().unwrap_or(1);
    let sampler = Sampler::new(dim, S::zero(), model.period().unwrap_or(S::one()), 8, 0);
    let mut v = S::neg_infinity();
    let mut vp = S::neg_infinity();
    for (t, x) in sampler.points(&[rmin]) {
        let rp = norm(&x).powf(p);
        v = v.max(p * model.eval(t, &x) / rp);
        vp = vp.max(max_pairing(model, t, &x) / rp);
    }
    let noise = S::lit(NOISE);
    Ok(Equivalence { limit_v: v, limit_v_prime: vp, agree: (v <= noise) == (vp <= noise) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Builtin;

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    #[test]
    fn thm1_example_passes_hj1() {
        let model = Builtin::<f64>::thm1_example(3.0, 2.0, 2).unwrap();
        let mut params = AuditParams::new(2.0, 1.0);
        params.mu = Some(3.0);
        params.m_thresh = Some(1.0);
        params.x_star = Some(vec![3.0, 0.0]);
        let rep = audit_hypotheses(&model, Profile::Hj1, &params).unwrap();
        for c in &rep.checks {
            assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        }
        assert!(!rep.notes.is_empty());
    }

    #[test]
    fn power_fails_mu_condition_with_witness() {
        let model = Builtin::<f64>::power(2.0, 1).unwrap();
        let mut params = AuditParams::new(2.0, 1.0);
        params.mu = Some(3.0);
        params.m_thresh = Some(1.0);
        params.x_star = Some(vec![2.0]);
        let rep = audit_hypotheses(&model, Profile::Hj1, &params).unwrap();
        let c = rep.check("(iv) μ-condition").unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        let w = c.witness.as_ref().unwrap();
        let r2 = w.x[0] * w.x[0];
        assert!((w.lhs - 3.0 * r2).abs() <= 1e-9 * w.lhs.abs());
        assert!((w.rhs - 2.0 * r2).abs() <= 1e-9 * w.rhs.abs());
        assert!(w.lhs > w.rhs);
    }

    #[test]
    fn missing_parameters_are_errors() {
        let model = Builtin::<f64>::thm1_example(3.0, 2.0, 1).unwrap();
        let params = AuditParams::new(2.0, 1.0);
        assert!(audit_hypotheses(&model, Profile::Hj1, &params).is_err());
        assert!(audit_hypotheses(&model, Profile::Hg, &params).is_err());
    }

    #[test]
    fn thm2_example_passes_hj2() {
        let model = Builtin::<f64>::thm2_example(2.0, 3.0, 1).unwrap();
        let rep = audit_hypotheses(&model, Profile::Hj2, &AuditParams::new(3.0, 1.0)).unwrap();
        for c in &rep.checks {
            assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        }
        assert!(rep.check("(iv) ∫j(t,0) = 0").is_some());
    }

    #[test]
    fn g_profiles() {
        let mut params = AuditParams::new(2.0, TAU);
        params.g = Some(TimeFn::Cos { a: 2.0, b: 1.0, period: TAU });
        let rep = audit_hypotheses(&Builtin::<f64>::quartic(1), Profile::Hg, &params).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        params.g = Some(TimeFn::Cos { a: 1.0, b: 1.5, period: TAU });
        let rep = audit_hypotheses(&Builtin::<f64>::quartic(1), Profile::Hg, &params).unwrap();
        assert!(rep.any_fail());
    }

    #[test]
    fn abs_satisfies_hj4_with_exact_limits() {
        let rep = audit_hypotheses(&Builtin::<f64>::Abs, Profile::Hj4, &AuditParams::new(2.0, TAU)).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        let est = estimate_asymptotics(&Builtin::<f64>::Abs, &[1e2, 1e4, 1e6], 8).unwrap();
        assert_eq!(est.j_plus, 1.0);
        assert_eq!(est.j_minus, -1.0);
        assert!(est.consistent);
    }

    #[test]
    fn prop8_limits() {
        let radii = [1e4, 1e6, 1e8];
        let est = estimate_asymptotics(&Builtin::<f64>::Prop8Example, &radii, 16).unwrap();
        assert!((est.j_plus - 1.0).abs() <= 0.1 && (est.j_minus + 1.0).abs() <= 0.1, "{est:?}");
        assert!(est.g1_minus.abs() <= 0.1 && est.g2_plus.abs() <= 0.1, "{est:?}");
        assert!(est.consistent);
    }

    #[test]
    fn linear_limits() {
        let model = Builtin::LinearForced { h: TimeFn::Const(1.0f64) };
        let est = estimate_asymptotics(&model, &[1e4, 1e5], 4).unwrap();
        assert!((est.j_plus - 1.0).abs() < 1e-12 && (est.j_minus - 1.0).abs() < 1e-12);
        assert!((est.g1_minus - 1.0).abs() < 1e-9 && (est.g2_plus - 1.0).abs() < 1e-9);
        assert!(est.consistent);
        assert!(estimate_asymptotics(&Builtin::<f64>::quartic(2), &[1e4], 4).is_err());
        assert!(estimate_asymptotics(&model, &[10.0], 4).is_err());
    }

    #[test]
    fn landesman_lazer_examples() {
        let mesh = crate::grid_space::Mesh::new(TAU, 512).unwrap();
        let grid = default_theta_grid(64);
        let zero = GridFn::zeros(mesh, 1);
        let ll = resonance_ll_check(&Builtin::<f64>::Abs, &zero, 1, TAU, &grid).unwrap();
        assert!(ll.ok);
        assert!((ll.margin - 4.0).abs() <= 1e-6, "{}", ll.margin);

        let big = GridFn::from_scalar_fn(mesh, |t: f64| 10.0 * t.sin());
        let ll = resonance_ll_check(&Builtin::<f64>::Abs, &big, 1, TAU, &grid).unwrap();
        assert!(!ll.ok && ll.margin < 0.0);

        let ll = resonance_ll_check(&Builtin::<f64>::Zero { n: 1 }, &zero, 1, TAU, &grid).unwrap();
        assert!(!ll.ok && ll.margin.abs() < 1e-12);
        assert!(resonance_ll_check(&Builtin::<f64>::Abs, &zero, 1, TAU, &grid[..10]).is_err());
    }

    #[test]
    fn gap_constants() {
        assert_eq!(gap_constant(1, TAU, 100).unwrap(), 0.6);
        assert_eq!(gap_constant(0, TAU, 100).unwrap(), 0.5);
        assert_eq!(gap_constant(1, TAU, 10).unwrap(), gap_constant(1, TAU, 100).unwrap());
        assert!(gap_constant::<f64>(1, TAU, 2).is_err());
    }

    #[test]
    fn rayleigh_quotient_of_single_modes() {
        let mesh = crate::grid_space::Mesh::new(TAU, 64).unwrap();
        let x = GridFn::from_scalar_fn(mesh, |t: f64| (2.0 * t).cos());
        assert!((rayleigh_quotient(&x, 1).unwrap() - 0.6).abs() < 1e-12);
        let y = GridFn::from_scalar_fn(mesh, |t: f64| (5.0 * t).sin());
        assert!((rayleigh_quotient(&y, 1).unwrap() - 24.0 / 26.0).abs() < 1e-12);
    }

    #[test]
    fn equivalence_examples() {
        let radii = [1e-2, 1e-4, 1e-6];
        let q = equivalence_check(&Builtin::<f64>::quartic(1), 2.0, &radii).unwrap();
        assert!(q.agree && q.limit_v.abs() < 1e-9 && q.limit_v_prime.abs() < 1e-9);
        let t1 = equivalence_check(&Builtin::<f64>::thm1_example(3.0, 2.0, 1).unwrap(), 2.0, &radii).unwrap();
        assert!(t1.agree && t1.limit_v < 0.0 && t1.limit_v_prime < 0.0);
        let a = equivalence_check(&Builtin::<f64>::Abs, 2.0, &radii).unwrap();
        assert!(a.agree && a.limit_v > 1e5 && a.limit_v_prime > 1e5);
        assert!(equivalence_check(&Builtin::<f64>::Abs, 2.0, &[1e-2]).is_err());
    }

    #[test]
    fn origin_condition() {
        assert!(origin_condition_holds(&Builtin::<f64>::quartic(1), 2.0));
        assert!(!origin_condition_holds(&Builtin::<f64>::Abs, 2.0));
    }

    #[test]
    fn reports_are_deterministic() {
        let model = Builtin::<f64>::thm2_example(2.0, 3.0, 2).unwrap();
        let a = audit_hypotheses(&model, Profile::Hj2, &AuditParams::new(3.0, 1.0)).unwrap();
        let b = audit_hypotheses(&model, Profile::Hj2, &AuditParams::new(3.0, 1.0)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
