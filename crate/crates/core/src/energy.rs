//! The discrete energy functionals, their nodal gradients and the weak and
//! strong residuals that certify a computed critical point.
//!
//! With forward differences `d_i = (x_{i+1} - x_i)/h` and the regularized
//! flux `σ(d) = (‖d‖² + ε²)^{(p-2)/2} d`, every variant has the form
//!
//! ```text
//! E(x) = h Σ_i [ (1/p)((‖d_i‖²+ε²)^{p/2} - ε^p) + (1/p) g_i ‖x_i‖^p
//!               - (m²ω²/2)‖x_i‖² + f_i·x_i - w j(t_i, x_i) ]
//! ```
//!
//! with the terms switched on per variant. Gradients are taken with respect
//! to the `h`-weighted inner product, so `G = (1/h) ∂E/∂x`.

use serde::Serialize;

use crate::error::{PlapError, Result};
use crate::grid_space::{norm, GridFn, Mesh};
use crate::potential::{scaled_subgrad_distance, Potential};
use crate::real::Real;
use crate::timefn::TimeFn;

pub const DEFAULT_EPS_REG: f64 = 1e-10;

/// Which functional is being assembled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variant {
    /// `-(‖x'‖^{p-2}x')' + g‖x‖^{p-2}x ∈ ∂j(t, x)`.
    Base,
    /// As `Base` with right side `λ∂j(t, x)`.
    Eigen,
    /// `Base` on the window `[-nb, nb]`.
    Window,
    /// `-(|x'|^{p-2}x')' ∈ ∂j(t, x)`, scalar.
    Scalar,
    /// `-x'' - m²ω²x ∈ ∂j(t, x) - h(t)`, scalar, `p = 2`.
    Resonant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec<S> {
    pub variant: Variant,
    pub p: S,
    /// Base period `b`.
    pub b: S,
    pub g: TimeFn<S>,
    pub c_lower: S,
    pub lambda: S,
    pub m: usize,
    pub forcing: TimeFn<S>,
    pub n: usize,
    pub eps_reg: S,
}

impl<S: Real> ProblemSpec<S> {
    fn blank(variant: Variant, p: S, b: S) -> Self {
        ProblemSpec {
            variant,
            p,
            b,
            g: TimeFn::Const(S::one()),
            c_lower: S::one(),
            lambda: S::one(),
            m: 0,
            forcing: TimeFn::Const(S::zero()),
            n: 1,
            eps_reg: S::lit(DEFAULT_EPS_REG),
        }
    }

    pub fn base(p: S, b: S, g: TimeFn<S>) -> Self {
        let c = lower_bound_guess(&g, b);
        ProblemSpec { g, c_lower: c, ..Self::blank(Variant::Base, p, b) }
    }

    pub fn eigen(p: S, b: S, g: TimeFn<S>, lambda: S) -> Self {
        let c = lower_bound_guess(&g, b);
        ProblemSpec { g, c_lower: c, lambda, ..Self::blank(Variant::Eigen, p, b) }
    }

    pub fn window(p: S, b: S, g: TimeFn<S>, n: usize) -> Self {
        let c = lower_bound_guess(&g, b);
        ProblemSpec { g, c_lower: c, n, ..Self::blank(Variant::Window, p, b) }
    }

    pub fn scalar(p: S, b: S) -> Self {
        Self::blank(Variant::Scalar, p, b)
    }

    pub fn resonant(b: S, m: usize, forcing: TimeFn<S>) -> Self {
        ProblemSpec { m, forcing, ..Self::blank(Variant::Resonant, S::lit(2.0), b) }
    }

    pub fn with_lambda(&self, lambda: S) -> Self {
        ProblemSpec { lambda, ..self.clone() }
    }

    pub fn with_window(&self, n: usize) -> Self {
        ProblemSpec { n, ..self.clone() }
    }

    pub fn omega(&self) -> S {
        S::lit(2.0) * S::PI() / self.b
    }

    /// `λ_m = m²ω²` of the resonant variant.
    pub fn lambda_m(&self) -> S {
        let mw = S::from_usize_lossy(self.m) * self.omega();
        mw * mw
    }

    /// Weight on the potential term.
    pub fn j_weight(&self) -> S {
        match self.variant {
            Variant::Eigen => self.lambda,
            _ => S::one(),
        }
    }

    fn has_g(&self) -> bool {
        matches!(self.variant, Variant::Base | Variant::Eigen | Variant::Window)
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.variant, Variant::Scalar | Variant::Resonant)
    }

    /// Domain `[origin, origin + length)` of admissible meshes.
    pub fn domain(&self) -> (S, S) {
        match self.variant {
            Variant::Window => {
                let nn = S::from_usize_lossy(self.n);
                (-nn * self.b, S::lit(2.0) * nn * self.b)
            }
            _ => (S::zero(), self.b),
        }
    }

    /// A mesh for this spec. For the window variant `m` is the node count of
    /// the first window, so the spacing is shared by every `n`.
    pub fn mesh(&self, m: usize) -> Result<Mesh<S>> {
        match self.variant {
            Variant::Window => Mesh::window(self.b, self.n, m),
            _ => Mesh::new(self.b, m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p;
        if !(p > S::one()) || !p.is_finite() {
            return Err(PlapError::Domain(format!("p must lie in (1, ∞), got {p}")));
        }
        if !(self.b > S::zero()) || !self.b.is_finite() {
            return Err(PlapError::Domain(format!("period must be positive, got {}", self.b)));
        }
        if !(self.eps_reg > S::zero()) {
            return Err(PlapError::Domain("eps_reg must be positive".into()));
        }
        if self.variant == Variant::Resonant && p != S::lit(2.0) {
            return Err(PlapError::Domain("the resonant variant requires p = 2".into()));
        }
        if self.variant == Variant::Window && self.n == 0 {
            return Err(PlapError::Domain("window index n must be at least 1".into()));
        }
        if self.has_g() {
            if !(self.c_lower > S::zero()) {
                return Err(PlapError::Domain(format!(
                    "g needs a positive lower bound, got c = {}",
                    self.c_lower
                )));
            }
            let (lo, span) = match self.variant {
                Variant::Window => (-self.b, S::lit(2.0) * self.b),
                _ => (S::zero(), self.b),
            };
            let samples = 256;
            for k in 0..=samples {
                let t = lo + span * S::from_usize_lossy(k) / S::from_usize_lossy(samples);
                let v = self.g.eval(t);
                if !(v >= self.c_lower) {
                    return Err(PlapError::Domain(format!(
                        "g({t}) = {v} is below the lower bound {}",
                        self.c_lower
                    )));
                }
            }
            let tol = S::lit(1e-10);
            if (self.g.eval(lo) - self.g.eval(lo + span)).abs() > tol {
                return Err(PlapError::Domain("g is not periodic on the base interval".into()));
            }
        }
        Ok(())
    }

    fn check_mesh<P: Potential<S> + ?Sized>(&self, model: &P, x: &GridFn<S>) -> Result<()> {
        let (origin, length) = self.domain();
        let mesh = x.mesh();
        let tol = S::lit(1e-9) * length.abs().max(S::one());
        if (mesh.origin() - origin).abs() > tol || (mesh.period() - length).abs() > tol {
            return Err(PlapError::MeshMismatch(format!(
                "{:?} problem lives on [{origin}, {}) but the grid function covers [{}, {})",
                self.variant,
                origin + length,
                mesh.origin(),
                mesh.origin() + mesh.period()
            )));
        }
        if self.is_scalar() && x.dim() != 1 {
            return Err(PlapError::MeshMismatch(format!(
                "{:?} problems are scalar, got N = {}",
                self.variant,
                x.dim()
            )));
        }
        if let Some(d) = model.dim() {
            if d != x.dim() {
                return Err(PlapError::MeshMismatch(format!(
                    "{} expects N = {d}, got N = {}",
                    model.name(),
                    x.dim()
                )));
            }
        }
        Ok(())
    }
}

fn lower_bound_guess<S: Real>(g: &TimeFn<S>, b: S) -> S {
    let samples = 256;
    (0..=samples)
        .map(|k| g.eval(S::lit(2.0) * b * S::from_usize_lossy(k) / S::from_usize_lossy(samples) - b))
        .fold(S::infinity(), S::min)
}

/// Per-node data shared by energy, gradient and Jacobian assembly.
pub(crate) struct Frame<S> {
    pub t: Vec<S>,
    pub g: Vec<S>,
    pub f: Vec<S>,
    pub shift: S,
    pub w: S,
    pub p: S,
    pub eps: S,
    pub h: S,
}

impl<S: Real> Frame<S> {
    pub fn new<P: Potential<S> + ?Sized>(spec: &ProblemSpec<S>, model: &P, x: &GridFn<S>) -> Result<Self> {
        spec.check_mesh(model, x)?;
        let mesh = x.mesh();
        let t: Vec<S> = mesh.nodes().collect();
        let g = if spec.has_g() {
            t.iter().map(|&s| spec.g.eval(s)).collect()
        } else {
            vec![S::zero(); t.len()]
        };
        let (f, shift) = if spec.variant == Variant::Resonant {
            (t.iter().map(|&s| spec.forcing.eval(s)).collect(), spec.lambda_m())
        } else {
            (vec![S::zero(); t.len()], S::zero())
        };
        Ok(Frame { t, g, f, shift, w: spec.j_weight(), p: spec.p, eps: spec.eps_reg, h: mesh.h() })
    }

    /// `(‖d‖² + ε²)^{(p-2)/2}`.
    #[inline]
    fn flux_coef(&self, d2: S) -> S {
        (d2 + self.eps * self.eps).powf((self.p - S::lit(2.0)) / S::lit(2.0))
    }

    /// `‖x‖^{p-2}`, with the value 0 at the origin.
    #[inline]
    fn power_coef(&self, r: S) -> S {
        if r == S::zero() {
            S::zero()
        } else {
            r.powf(self.p - S::lit(2.0))
        }
    }

    fn energy<P: Potential<S> + ?Sized>(&self, model: &P, x: &GridFn<S>) -> S {
        let m = x.len();
        let n = x.dim();
        let p = self.p;
        let inv_h = S::one() / self.h;
        let half = S::lit(0.5);
        let eps_p = self.eps.powf(p);
        let mut total = S::zero();
        for i in 0..m {
            let xi = x.row(i);
            let xn = x.row((i + 1) % m);
            let d2: S = (0..n).map(|k| ((xn[k] - xi[k]) * inv_h).powi(2)).sum();
            let mut e = ((d2 + self.eps * self.eps).powf(p / S::lit(2.0)) - eps_p) / p;
            let r = norm(xi);
            if self.g[i] != S::zero() {
                e += self.g[i] * r.powf(p) / p;
            }
            if self.shift != S::zero() {
                e -= half * self.shift * r * r;
            }
            if self.f[i] != S::zero() {
                e += self.f[i] * xi[0];
            }
            e -= self.w * model.eval(self.t[i], xi);
            total += e;
        }
        total * self.h
    }

    /// Nodal flux `σ(d_i)` with regularization `eps`.
    fn fluxes(&self, x: &GridFn<S>, eps: S) -> Vec<S> {
        let m = x.len();
        let n = x.dim();
        let inv_h = S::one() / self.h;
        let mut out = vec![S::zero(); m * n];
        let expo = (self.p - S::lit(2.0)) / S::lit(2.0);
        for i in 0..m {
            let xi = x.row(i);
            let xn = x.row((i + 1) % m);
            let d: Vec<S> = (0..n).map(|k| (xn[k] - xi[k]) * inv_h).collect();
            let d2: S = d.iter().map(|&v| v * v).sum();
            let base = d2 + eps * eps;
            let c = if base == S::zero() { S::zero() } else { base.powf(expo) };
            for k in 0..n {
                out[i * n + k] = c * d[k];
            }
        }
        out
    }

    /// Smooth part `S_i` of the gradient: everything except `-w u_i`.
    fn smooth_part(&self, x: &GridFn<S>, eps: S) -> Vec<S> {
        let m = x.len();
        let n = x.dim();
        let sigma = self.fluxes(x, eps);
        let inv_h = S::one() / self.h;
        let mut out = vec![S::zero(); m * n];
        for i in 0..m {
            let im = (i + m - 1) % m;
            let xi = x.row(i);
            let gc = if self.g[i] != S::zero() { self.g[i] * self.power_coef(norm(xi)) } else { S::zero() };
            for k in 0..n {
                let mut v = (sigma[im * n + k] - sigma[i * n + k]) * inv_h;
                v += gc * xi[k];
                v -= self.shift * xi[k];
                if k == 0 {
                    v += self.f[i];
                }
                out[i * n + k] = v;
            }
        }
        out
    }

    fn gradient<P: Potential<S> + ?Sized>(&self, model: &P, x: &GridFn<S>) -> Vec<S> {
        let n = x.dim();
        let mut out = self.smooth_part(x, self.eps);
        let mut u = vec![S::zero(); n];
        for i in 0..x.len() {
            model.subgrad(self.t[i], x.row(i), &mut u);
            for k in 0..n {
                out[i * n + k] -= self.w * u[k];
            }
        }
        out
    }

    /// Nodal distances `dist(S_i, w ∂j(t_i, x_i))`.
    fn nodal_distances<P: Potential<S> + ?Sized>(&self, model: &P, x: &GridFn<S>, eps: S) -> Result<Vec<S>> {
        let n = x.dim();
        let sm = self.smooth_part(x, eps);
        (0..x.len())
            .map(|i| scaled_subgrad_distance(model, self.t[i], x.row(i), &sm[i * n..(i + 1) * n], self.w))
            .collect()
    }

    /// `∂G/∂x` as a dense row-major matrix of size `MN × MN`.
    fn jacobian<P: Potential<S> + ?Sized>(&self, model: &P, x: &GridFn<S>) -> Vec<S> {
        let m = x.len();
        let n = x.dim();
        let dim = m * n;
        let inv_h = S::one() / self.h;
        let inv_h2 = inv_h * inv_h;
        let two = S::lit(2.0);
        let mut jac = vec![S::zero(); dim * dim];
        // Dσ(d_i) for every edge
        let mut dsig = vec![S::zero(); m * n * n];
        for i in 0..m {
            let xi = x.row(i);
            let xn = x.row((i + 1) % m);
            let d: Vec<S> = (0..n).map(|k| (xn[k] - xi[k]) * inv_h).collect();
            let d2: S = d.iter().map(|&v| v * v).sum();
            let c = self.flux_coef(d2);
            let c2 = (self.p - two) * (d2 + self.eps * self.eps).powf((self.p - S::lit(4.0)) / two);
            for a in 0..n {
                for b in 0..n {
                    let id = if a == b { c } else { S::zero() };
                    dsig[i * n * n + a * n + b] = id + c2 * d[a] * d[b];
                }
            }
        }
        let mut ju = vec![S::zero(); n * n];
        for i in 0..m {
            let im = (i + m - 1) % m;
            let ip = (i + 1) % m;
            for a in 0..n {
                let row = (i * n + a) * dim;
                for b in 0..n {
                    let prev = dsig[im * n * n + a * n + b] * inv_h2;
                    let cur = dsig[i * n * n + a * n + b] * inv_h2;
                    jac[row + i * n + b] += prev + cur;
                    jac[row + im * n + b] -= prev;
                    jac[row + ip * n + b] -= cur;
                }
            }
            let xi = x.row(i);
            if self.g[i] != S::zero() {
                // D(‖x‖^{p-2}x), regularized at the origin for p < 2
                let r2: S = xi.iter().map(|&v| v * v).sum::<S>() + self.eps * self.eps;
                let c = r2.powf((self.p - two) / two);
                let c2 = (self.p - two) * r2.powf((self.p - S::lit(4.0)) / two);
                for a in 0..n {
                    for b in 0..n {
                        let id = if a == b { c } else { S::zero() };
                        jac[(i * n + a) * dim + i * n + b] += self.g[i] * (id + c2 * xi[a] * xi[b]);
                    }
                }
            }
            for a in 0..n {
                jac[(i * n + a) * dim + i * n + a] -= self.shift;
            }
            if self.w != S::zero() {
                model.subgrad_jacobian(self.t[i], xi, &mut ju);
                for a in 0..n {
                    for b in 0..n {
                        jac[(i * n + a) * dim + i * n + b] -= self.w * ju[a * n + b];
                    }
                }
            }
        }
        jac
    }
}

/// Discrete energy of the variant selected by `spec`.
pub fn energy<S: Real, P: Potential<S> + ?Sized>(spec: &ProblemSpec<S>, model: &P, x: &GridFn<S>) -> Result<S> {
    Ok(Frame::new(spec, model, x)?.energy(model, x))
}

/// Gradient representative `A(x) + (variant terms) - w·u(t, x)` with the
/// subgradient selection `u`; the exact gradient where `j` is smooth.
pub fn gradient_selection<S: Real, P: Potential<S> + ?Sized>(
    spec: &ProblemSpec<S>,
    model: &P,
    x: &GridFn<S>,
) -> Result<GridFn<S>> {
    let frame = Frame::new(spec, model, x)?;
    Ok(x.with_values(frame.gradient(model, x)))
}

/// `sqrt(h Σ_i dist(S_i, w ∂j(t_i, x_i))²)`: the norm of the smallest
/// gradient obtainable by choosing nodewise subgradients.
pub fn residual_weak<S: Real, P: Potential<S> + ?Sized>(
    spec: &ProblemSpec<S>,
    model: &P,
    x: &GridFn<S>,
) -> Result<S> {
    let frame = Frame::new(spec, model, x)?;
    let d = frame.nodal_distances(model, x, frame.eps)?;
    Ok((d.iter().map(|&v| v * v).sum::<S>() * frame.h).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StrongResidual<S> {
    /// Largest nodal distance from the strong-form left side to `w ∂j`.
    pub inclusion_dist: S,
    /// The same with the unregularized flux `‖d‖^{p-2}d`.
    pub inclusion_dist_unreg: S,
    pub bc_primal: S,
    pub bc_deriv: S,
}

pub fn residual_strong<S: Real, P: Potential<S> + ?Sized>(
    spec: &ProblemSpec<S>,
    model: &P,
    x: &GridFn<S>,
) -> Result<StrongResidual<S>> {
    let frame = Frame::new(spec, model, x)?;
    let max = |v: Vec<S>| v.into_iter().fold(S::zero(), S::max);
    let inclusion_dist = max(frame.nodal_distances(model, x, frame.eps)?);
    let inclusion_dist_unreg = max(frame.nodal_distances(model, x, S::zero())?);
    let m = x.len();
    let inv_h = S::one() / frame.h;
    let first: Vec<S> = x.row(1).iter().zip(x.row(0)).map(|(&a, &b)| (a - b) * inv_h).collect();
    let last: Vec<S> = x.row(0).iter().zip(x.row(m - 1)).map(|(&a, &b)| (a - b) * inv_h).collect();
    let bc_deriv = first.iter().zip(&last).map(|(&a, &b)| (a - b) * (a - b)).sum::<S>().sqrt();
    Ok(StrongResidual { inclusion_dist, inclusion_dist_unreg, bc_primal: S::zero(), bc_deriv })
}

/// Energy, gradient and Jacobian of one problem bound to one mesh. Solvers
/// hold one of these to avoid re-sampling `g` and `h` on every call.
pub struct Functional<'a, S, P: ?Sized> {
    pub spec: &'a ProblemSpec<S>,
    pub model: &'a P,
    frame: Frame<S>,
    mesh: Mesh<S>,
    dim: usize,
}

impl<'a, S: Real, P: Potential<S> + ?Sized> Functional<'a, S, P> {
    pub fn new(spec: &'a ProblemSpec<S>, model: &'a P, mesh: Mesh<S>, dim: usize) -> Result<Self> {
        spec.validate()?;
        let probe = GridFn::zeros(mesh, dim);
        let frame = Frame::new(spec, model, &probe)?;
        Ok(Functional { spec, model, frame, mesh, dim })
    }

    pub fn mesh(&self) -> &Mesh<S> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn check(&self, x: &GridFn<S>) -> Result<()> {
        if !self.mesh.compatible(x.mesh()) || x.dim() != self.dim {
            return Err(PlapError::MeshMismatch("grid function does not match the problem mesh".into()));
        }
        Ok(())
    }

    pub fn energy(&self, x: &GridFn<S>) -> S {
        self.frame.energy(self.model, x)
    }

    pub fn gradient(&self, x: &GridFn<S>) -> GridFn<S> {
        x.with_values(self.frame.gradient(self.model, x))
    }

    pub fn smooth_part(&self, x: &GridFn<S>) -> Vec<S> {
        self.frame.smooth_part(x, self.frame.eps)
    }

    pub fn nodal_distances(&self, x: &GridFn<S>) -> Result<Vec<S>> {
        self.frame.nodal_distances(self.model, x, self.frame.eps)
    }

    pub fn residual_weak(&self, x: &GridFn<S>) -> Result<S> {
        let d = self.nodal_distances(x)?;
        Ok((d.iter().map(|&v| v * v).sum::<S>() * self.frame.h).sqrt())
    }

    pub fn residual_strong(&self, x: &GridFn<S>) -> Result<StrongResidual<S>> {
        residual_strong(self.spec, self.model, x)
    }

    pub fn jacobian(&self, x: &GridFn<S>) -> Vec<S> {
        self.frame.jacobian(self.model, x)
    }

    pub fn node_time(&self, i: usize) -> S {
        self.frame.t[i]
    }

    pub fn j_weight(&self) -> S {
        self.frame.w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Builtin;

    fn sin_grid(b: f64, m: usize) -> GridFn<f64> {
        GridFn::from_scalar_fn(Mesh::new(b, m).unwrap(), |t| t.sin())
    }

    #[test]
    fn constant_energy_base() {
        let spec = ProblemSpec::base(3.0, 2.0, TimeFn::Const(1.0));
        let mesh = Mesh::new(2.0, 64).unwrap();
        let x = GridFn::constant(mesh, &[1.5]);
        let e = energy(&spec, &Builtin::Zero { n: 1 }, &x).unwrap();
        assert!((e - 2.0 / 3.0 * 1.5f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn eigen_energy_at_zero() {
        let spec = ProblemSpec::eigen(3.0, 1.0, TimeFn::Const(1.0), 7.0);
        let model = Builtin::<f64>::thm2_example(2.0, 3.0, 1).unwrap();
        let x = GridFn::zeros(Mesh::new(1.0, 32).unwrap(), 1);
        assert_eq!(energy(&spec, &model, &x).unwrap(), 0.0);
    }

    #[test]
    fn resonant_quadratic_form_vanishes_on_kernel() {
        let b = 2.0 * std::f64::consts::PI;
        let spec = ProblemSpec::resonant(b, 1, TimeFn::Const(0.0));
        let x = sin_grid(b, 4096);
        let e = energy(&spec, &Builtin::Zero { n: 1 }, &x).unwrap();
        // forward differences see sin(ωt) with symbol 4sin²(h/2)/h² instead of 1
        let h = x.mesh().h();
        let defect = std::f64::consts::FRAC_PI_2 * (4.0 * (h / 2.0).sin().powi(2) / (h * h) - 1.0);
        assert!((e - defect).abs() < 1e-10, "{e} vs {defect}");
        assert!(e.abs() < 1e-6);
    }

    #[test]
    fn linear_gradient_matches_fourier() {
        let b = 2.0 * std::f64::consts::PI;
        let spec = ProblemSpec::base(2.0, b, TimeFn::Const(1.0));
        let x = sin_grid(b, 256);
        let g = gradient_selection(&spec, &Builtin::Zero { n: 1 }, &x).unwrap();
        for (i, t) in x.mesh().nodes().enumerate() {
            assert!((g.row(i)[0] - 2.0 * t.sin()).abs() < 5e-3);
        }
        let r = residual_weak(&spec, &Builtin::Zero { n: 1 }, &x).unwrap();
        assert!(r > 0.1);
    }

    #[test]
    fn abs_gradient_at_zero_vanishes() {
        let spec = ProblemSpec::scalar(2.0, 1.0);
        let x = GridFn::zeros(Mesh::new(1.0, 16).unwrap(), 1);
        let g = gradient_selection(&spec, &Builtin::Abs, &x).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_is_critical_for_thm1() {
        let spec = ProblemSpec::base(2.0, 1.0, TimeFn::Const(1.0));
        let model = Builtin::<f64>::thm1_example(3.0, 2.0, 2).unwrap();
        let x = GridFn::zeros(Mesh::new(1.0, 32).unwrap(), 2);
        assert_eq!(residual_weak(&spec, &model, &x).unwrap(), 0.0);
        let s = residual_strong(&spec, &model, &x).unwrap();
        assert_eq!(s.inclusion_dist, 0.0);
        assert_eq!(s.bc_primal, 0.0);
    }

    #[test]
    fn mesh_mismatch_is_reported() {
        let spec = ProblemSpec::base(2.0, 1.0, TimeFn::Const(1.0));
        let x = GridFn::zeros(Mesh::new(2.0, 32).unwrap(), 1);
        assert!(matches!(energy(&spec, &Builtin::Zero { n: 1 }, &x), Err(PlapError::MeshMismatch(_))));
    }

    #[test]
    fn validation() {
        assert!(ProblemSpec::base(2.0, 1.0, TimeFn::Const(-1.0)).validate().is_err());
        assert!(ProblemSpec::base(1.0, 1.0, TimeFn::Const(1.0)).validate().is_err());
        let mut r = ProblemSpec::resonant(1.0, 1, TimeFn::Const(0.0));
        assert!(r.validate().is_ok());
        r.p = 3.0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn jacobian_matches_gradient_differences() {
        let b = 3.0;
        let spec = ProblemSpec::base(3.0, b, TimeFn::Const(1.5));
        let model = Builtin::<f64>::quartic(2);
        let mesh = Mesh::new(b, 12).unwrap();
        let x = GridFn::from_fn(mesh, 2, |t: f64, out: &mut [f64]| {
            out[0] = 0.4 + t.sin();
            out[1] = (2.0 * t).cos();
        });
        let f = Functional::new(&spec, &model, mesh, 2).unwrap();
        let jac = f.jacobian(&x);
        let dim = 24;
        let step = 1e-6;
        for col in 0..dim {
            let mut vp = x.values().to_vec();
            vp[col] += step;
            let mut vm = x.values().to_vec();
            vm[col] -= step;
            let gp = f.gradient(&x.with_values(vp));
            let gm = f.gradient(&x.with_values(vm));
            for row in 0..dim {
                let fd = (gp.values()[row] - gm.values()[row]) / (2.0 * step);
                let an = jac[row * dim + col];
                assert!((fd - an).abs() < 1e-4 * (1.0 + an.abs()), "({row},{col}) {fd} vs {an}");
            }
        }
    }
}
