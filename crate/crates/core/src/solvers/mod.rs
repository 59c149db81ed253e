//! Critical point searches: descent to a minimizer, the string-method
//! mountain pass, extragradient saddle search on subspace splittings, and
//! the multiplicity sweep over `λ`.
//!
//! Every search finishes with an active-set Newton polish that pins nodes
//! onto kinks of `j` and checks the resulting inclusion against the exact
//! subdifferential sets, so the reported residuals are those of genuine
//! discrete critical points.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::energy::{Functional, StrongResidual};
use crate::error::PlapError;
use crate::grid_space::{GridFn, Mesh};
use crate::potential::Potential;
use crate::real::Real;

mod minimize;
pub(crate) mod mountain_pass;
mod polish;
mod saddle;
mod sweep;

pub use minimize::minimize;
pub use mountain_pass::{find_far_endpoint, mountain_pass, rim_estimate, FarEndpoint};
pub use polish::{polish, PolishOutcome};
pub use saddle::{saddle_search, Split};
pub use sweep::{lambda_star_sweep, summarize, sweep_row, SweepRow, SweepTable, DISTINCT};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveOptions<S> {
    pub tol_residual: S,
    pub max_iter: usize,
    /// Number of nodes on the mountain-pass path, endpoints included.
    pub path_points: usize,
    /// Initial step of the descent moves; adapted by doubling and halving.
    pub deform_step: S,
    /// Rim radius for the `ξ` estimate.
    pub rho: S,
    /// Random starts of the rim estimate.
    pub rim_samples: usize,
    /// Newton iterations per polish attempt.
    pub polish_iter: usize,
    pub seed: u64,
}

impl<S: Real> Default for SolveOptions<S> {
    fn default() -> Self {
        SolveOptions {
            tol_residual: S::lit(1e-6),
            max_iter: 20000,
            path_points: 64,
            deform_step: S::lit(1e-2),
            rho: S::lit(0.1),
            rim_samples: 4,
            polish_iter: 60,
            seed: 0,
        }
    }
}

impl<S: Real> SolveOptions<S> {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |what: &str| Err(PlapError::Domain(format!("solver option {what} must be positive")));
        if !(self.tol_residual > S::zero()) {
            return bad("tol_residual");
        }
        if !(self.deform_step > S::zero()) {
            return bad("deform_step");
        }
        if !(self.rho > S::zero()) {
            return bad("rho");
        }
        if self.max_iter == 0 {
            return bad("max_iter");
        }
        if self.path_points < 16 {
            return Err(PlapError::Domain(format!(
                "path_points must be at least 16, got {}",
                self.path_points
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Minimizer,
    MountainPass,
    Saddle,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Minimizer => "minimizer",
            Kind::MountainPass => "mountain_pass",
            Kind::Saddle => "saddle",
        })
    }
}

/// `ξ = inf{φ(x) : ‖x‖ = ρ}` as estimated by [`rim_estimate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rim<S> {
    pub rho: S,
    pub xi: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint<S> {
    pub x: GridFn<S>,
    pub energy: S,
    pub residual_weak: S,
    pub residual_strong: StrongResidual<S>,
    pub kind: Kind,
    pub rim: Option<Rim<S>>,
    /// Mountain-pass level.
    pub level: Option<S>,
    pub iterations: usize,
    /// Path-max energy after every deformation sweep (mountain pass only).
    pub path_max: Vec<S>,
    pub warnings: Vec<String>,
}

impl<S: Real> CriticalPoint<S> {
    pub(crate) fn assemble<P: Potential<S> + ?Sized>(
        f: &Functional<'_, S, P>,
        x: GridFn<S>,
        kind: Kind,
        iterations: usize,
    ) -> Result<Self, SolveError<S>> {
        let energy = f.energy(&x);
        let residual_weak = f.residual_weak(&x)?;
        let residual_strong = f.residual_strong(&x)?;
        Ok(CriticalPoint {
            x,
            energy,
            residual_weak,
            residual_strong,
            kind,
            rim: None,
            level: None,
            iterations,
            path_max: Vec::new(),
            warnings: Vec::new(),
        })
    }
}

/// Solver failure. Nonconvergence carries the best iterate found.
#[derive(Clone, Debug)]
pub enum SolveError<S> {
    Failed(PlapError),
    NonConvergence { reason: String, best: Box<CriticalPoint<S>> },
}

impl<S: Real> fmt::Display for SolveError<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Failed(e) => write!(f, "{e}"),
            SolveError::NonConvergence { reason, best } => write!(
                f,
                "no convergence: {reason} (best residual {}, energy {})",
                best.residual_weak, best.energy
            ),
        }
    }
}

impl<S: Real> std::error::Error for SolveError<S> {}

impl<S> From<PlapError> for SolveError<S> {
    fn from(e: PlapError) -> Self {
        SolveError::Failed(e)
    }
}

impl<S> SolveError<S> {
    pub fn is_nonconvergence(&self) -> bool {
        matches!(self, SolveError::NonConvergence { .. })
    }

    pub fn best(&self) -> Option<&CriticalPoint<S>> {
        match self {
            SolveError::NonConvergence { best, .. } => Some(best),
            SolveError::Failed(_) => None,
        }
    }
}

pub type SolveResult<T, S> = std::result::Result<T, SolveError<S>>;

/// A smooth pseudo-random grid function: a constant plus a few Fourier
/// modes with `1/k`-decaying random amplitudes.
pub(crate) fn random_smooth<S: Real, R: Rng>(mesh: Mesh<S>, dim: usize, modes: usize, rng: &mut R) -> GridFn<S> {
    let mut coef = Vec::with_capacity(dim * (2 * modes + 1));
    for _ in 0..dim * (2 * modes + 1) {
        coef.push(S::lit(rng.gen_range(-1.0..1.0)));
    }
    let w = S::lit(2.0) * S::PI() / mesh.period();
    let origin = mesh.origin();
    GridFn::from_fn(mesh, dim, |t, out| {
        let tau = t - origin;
        for (c, o) in out.iter_mut().enumerate() {
            let base = c * (2 * modes + 1);
            let mut v = coef[base];
            for k in 1..=modes {
                let kk = S::from_usize_lossy(k);
                v += (coef[base + 2 * k - 1] * (kk * w * tau).cos() + coef[base + 2 * k] * (kk * w * tau).sin()) / kk;
            }
            *o = v;
        }
    })
}

/// `W^{1,2}` inner product `h Σ (u·v + Du·Dv)`, the metric in which
/// [`riesz_solve`](crate::grid_space::riesz_solve) is the gradient map.
pub(crate) fn riesz_inner<S: Real>(u: &GridFn<S>, v: &GridFn<S>) -> S {
    let du = crate::grid_space::diff(u);
    let dv = crate::grid_space::diff(v);
    u.inner(v).unwrap_or(S::zero()) + du.inner(&dv).unwrap_or(S::zero())
}

/// One preconditioned descent move with Armijo backtracking. Returns the
/// accepted point and energy, or `None` when no decrease was found.
pub(crate) fn descent_move<S: Real, P: Potential<S> + ?Sized>(
    f: &Functional<'_, S, P>,
    x: &GridFn<S>,
    e: S,
    step: &mut S,
) -> Option<(GridFn<S>, S)> {
    constrained_descent_move(f, x, e, step, None, None)
}

/// As [`descent_move`], with the direction made `W^{1,2}`-orthogonal to
/// `tangent` when one is given, and the move capped at `max_move` in the
/// `W^{1,2}` norm.
pub(crate) fn constrained_descent_move<S: Real, P: Potential<S> + ?Sized>(
    f: &Functional<'_, S, P>,
    x: &GridFn<S>,
    e: S,
    step: &mut S,
    tangent: Option<&GridFn<S>>,
    max_move: Option<S>,
) -> Option<(GridFn<S>, S)> {
    let g = f.gradient(x);
    let mut d = crate::grid_space::riesz_solve(&g);
    if let Some(tau) = tangent {
        let tt = riesz_inner(tau, tau);
        if tt > S::zero() {
            d = d.axpy(-riesz_inner(&d, tau) / tt, tau).ok()?;
        }
    }
    let slope = g.inner(&d).ok()?;
    if !(slope > S::zero()) {
        return None;
    }
    let mut s = *step;
    if let Some(cap) = max_move {
        let dn = riesz_inner(&d, &d).sqrt();
        if dn > S::zero() {
            s = s.min(cap / dn);
        }
    }
    for _ in 0..40 {
        let trial = x.axpy(-s, &d).ok()?;
        let et = f.energy(&trial);
        if et <= e - S::lit(1e-4) * s * slope {
            *step = (s * S::lit(2.0)).min(S::lit(4.0));
            return Some((trial, et));
        }
        s *= S::lit(0.5);
    }
    *step = s;
    None
}

#[cfg(test)]
mod tests;
