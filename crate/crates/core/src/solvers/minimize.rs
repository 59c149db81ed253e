use crate::energy::{Functional, ProblemSpec};
use crate::grid_space::GridFn;
use crate::potential::Potential;
use crate::real::Real;

use super::{descent_move, polish, CriticalPoint, Kind, SolveError, SolveOptions, SolveResult};

/// Preconditioned subgradient descent from `x0`, finished by the active-set
/// Newton polish. The result never has more energy than `x0`.
pub fn minimize<S: Real, P: Potential<S> + ?Sized>(
    spec: &ProblemSpec<S>,
    model: &P,
    x0: &GridFn<S>,
    opts: &SolveOptions<S>,
) -> SolveResult<CriticalPoint<S>, S> {
    opts.validate()?;
    let f = Functional::new(spec, model, *x0.mesh(), x0.dim())?;
    let e0 = f.energy(x0);
    let mut x = x0.clone();
    let mut e = e0;
    let mut step = opts.deform_step;
    let mut polish_gate = S::lit(1e-2);
    let mut stalled = false;
    let slack = |v: S| S::lit(1e-10) * (S::one() + v.abs());
    for iter in 0..=opts.max_iter {
        let r = f.residual_weak(&x)?;
        if r <= opts.tol_residual {
            return CriticalPoint::assemble(&f, x, Kind::Minimizer, iter);
        }
        if r <= polish_gate || stalled || (iter > 0 && iter % 200 == 0) {
            let out = polish(&f, &x, opts.tol_residual * S::lit(0.01), opts.polish_iter)?;
            let ep = f.energy(&out.x);
            if out.converged && ep <= e + slack(e) && ep <= e0 + slack(e0) {
                return CriticalPoint::assemble(&f, out.x, Kind::Minimizer, iter + out.iterations);
            }
            polish_gate = r * S::lit(0.1);
            if stalled {
                break;
            }
        }
        match descent_move(&f, &x, e, &mut step) {
            Some((xn, en)) => {
                x = xn;
                e = en;
            }
            None => stalled = true,
        }
    }
    let best = CriticalPoint::assemble(&f, x, Kind::Minimizer, opts.max_iter)?;
    Err(SolveError::NonConvergence {
        reason: if stalled {
            "descent stalled above the residual tolerance".into()
        } else {
            format!("max_iter = {} exceeded", opts.max_iter)
        },
        best: Box::new(best),
    })
}
