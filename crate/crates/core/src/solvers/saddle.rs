use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::{Functional, ProblemSpec, Variant};
use crate::error::PlapError;
use crate::grid_space::{fourier_project, mean_zero_project, riesz_solve, GridFn, Mesh};
use crate::potential::Potential;
use crate::real::Real;

use super::{polish, random_smooth, CriticalPoint, Kind, SolveError, SolveOptions, SolveResult};

/// Splitting `X = X₁ ⊕ X₂`: the energy is maximized over `X₁` and
/// minimized over `X₂`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    /// `X₁` = constants, `X₂` = zero-mean functions.
    MeanZero,
    /// `X₁` = Fourier modes `0..=m`, `X₂` = modes above `m`.
    FourierUpTo(usize),
}

impl Split {
    /// Projection onto the ascent block `X₁`.
    pub fn project_ascent<S: Real>(&self, x: &GridFn<S>) -> crate::Result<GridFn<S>> {
        match *self {
            Split::MeanZero => {
                let (_, v) = mean_zero_project(x);
                x.sub(&v)
            }
            Split::FourierUpTo(m) => fourier_project(x, &(0..=m).collect::<Vec<_>>()),
        }
    }

    /// A basis of `X₁` sampled on the mesh.
    fn ascent_basis<S: Real>(&self, mesh: Mesh<S>) -> Vec<GridFn<S>> {
        let mut out = vec![GridFn::constant(mesh, &[S::one()])];
        if let Split::FourierUpTo(m) = *self {
            let w = S::lit(2.0) * S::PI() / mesh.period();
            let o = mesh.origin();
            for k in 1..=m {
                let kw = S::from_usize_lossy(k) * w;
                out.push(GridFn::from_scalar_fn(mesh, |t| (kw * (t - o)).cos()));
                out.push(GridFn::from_scalar_fn(mesh, |t| (kw * (t - o)).sin()));
            }
        }
        out
    }
}

fn check_split<S: Real>(spec: &ProblemSpec<S>, split: Split) -> crate::Result<()> {
    match (spec.variant, split) {
        (Variant::Scalar, Split::MeanZero) => Ok(()),
        (Variant::Resonant, Split::FourierUpTo(m)) if m == spec.m => Ok(()),
        (Variant::Resonant, Split::FourierUpTo(m)) => Err(PlapError::Domain(format!(
            "Fourier split up to {m} does not match the resonance index m = {}",
            spec.m
        ))),
        (v, s) => Err(PlapError::Domain(format!("split {s:?} is not defined for the {v:?} variant"))),
    }
}

/// Samples the two saddle signatures; returns warnings for the ones not seen.
fn signatures<S: Real, P: Potential<S> + ?Sized>(
    f: &Functional<'_, S, P>,
    split: Split,
    rng: &mut ChaCha8Rng,
) -> crate::Result<Vec<String>> {
    let scales = [S::lit(10.0), S::lit(100.0), S::lit(1000.0)];
    let mut warnings = Vec::new();
    for (i, e) in split.ascent_basis(*f.mesh()).iter().enumerate() {
        let vals: Vec<S> = scales.iter().map(|&s| f.energy(&e.scaled(s))).collect();
        let falling = vals.windows(2).all(|w| w[1] < w[0]) && vals[2] < S::zero();
        if !falling {
            warnings.push(format!(
                "energy along ascent direction #{i} does not fall as the amplitude grows (values {:?})",
                vals.iter().map(|v| v.as_f64()).collect::<Vec<_>>()
            ));
        }
    }
    for trial in 0..3 {
        let r = random_smooth(*f.mesh(), f.dim(), 6, rng);
        let v = r.sub(&split.project_ascent(&r)?)?;
        if v.sup_norm() == S::zero() {
            continue;
        }
        let vals: Vec<S> = scales.iter().map(|&s| f.energy(&v.scaled(s))).collect();
        if !vals.windows(2).all(|w| w[1] > w[0]) {
            warnings.push(format!(
                "energy along descent sample #{trial} does not grow with the amplitude (values {:?})",
                vals.iter().map(|v| v.as_f64()).collect::<Vec<_>>()
            ));
        }
    }
    Ok(warnings)
}

/// Extragradient saddle search with steps `η₀/√k`: ascent on `X₁`,
/// descent on `X₂`, in the `W^{1,2}` Riesz metric, finished by the
/// active-set Newton polish.
pub fn saddle_search<S: Real, P: Potential<S> + ?Sized>(
    spec: &ProblemSpec<S>,
    model: &P,
    mesh: Mesh<S>,
    split: Split,
    opts: &SolveOptions<S>,
) -> SolveResult<CriticalPoint<S>, S> {
    opts.validate()?;
    check_split(spec, split)?;
    let f = Functional::new(spec, model, mesh, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let warnings = signatures(&f, split, &mut rng)?;

    let start = random_smooth(mesh, 1, 3, &mut rng);
    let mut x = start.scaled(S::lit(1e-3) / start.sup_norm().max(S::lit(1e-12)));
    let field = |x: &GridFn<S>| -> crate::Result<GridFn<S>> {
        let r = riesz_solve(&f.gradient(x));
        let up = split.project_ascent(&r)?;
        // +P₁r − P₂r = 2P₁r − r
        up.scaled(S::lit(2.0)).sub(&r)
    };
    let eta0 = S::lit(0.5);
    let mut polish_gate = S::lit(1e-2);
    let finish = |x: GridFn<S>, iters: usize, warnings: Vec<String>| -> SolveResult<CriticalPoint<S>, S> {
        let mut cp = CriticalPoint::assemble(&f, x, Kind::Saddle, iters)?;
        cp.warnings = warnings;
        Ok(cp)
    };
    for k in 1..=opts.max_iter {
        let r = f.residual_weak(&x)?;
        if r <= opts.tol_residual {
            return finish(x, k, warnings);
        }
        if r <= polish_gate || k % 200 == 0 {
            let out = polish(&f, &x, opts.tol_residual * S::lit(0.01), opts.polish_iter)?;
            if out.converged {
                return finish(out.x, k + out.iterations, warnings);
            }
            polish_gate = r * S::lit(0.1);
        }
        let eta = eta0 / S::from_usize_lossy(k).sqrt();
        let y = x.axpy(eta, &field(&x)?)?;
        x = x.axpy(eta, &field(&y)?)?;
        let up = split.project_ascent(&x)?;
        if !(up.sup_norm() < S::lit(1e8)) {
            return Err(PlapError::AnticoercivityNotDetected(format!(
                "the ascent block diverged (sup norm {}) after {k} iterations",
                up.sup_norm()
            ))
            .into());
        }
    }
    let mut best = CriticalPoint::assemble(&f, x, Kind::Saddle, opts.max_iter)?;
    best.warnings = warnings;
    Err(SolveError::NonConvergence { reason: format!("max_iter = {} exceeded", opts.max_iter), best: Box::new(best) })
}
