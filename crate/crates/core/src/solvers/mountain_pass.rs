use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::{Functional, ProblemSpec};
use crate::error::PlapError;
use crate::grid_space::{riesz_solve, w1p_norm, GridFn, Mesh};
use crate::potential::Potential;
use crate::real::Real;

use super::{constrained_descent_move, polish, riesz_inner, random_smooth, CriticalPoint, Kind, Rim, SolveError, SolveOptions, SolveResult};

/// Upper estimate of `ξ = inf{φ(x) : ‖x‖_{W^{1,p}} = ρ}` by projected
/// descent on the sphere from `samples` seeded random starts.
pub fn rim_estimate<S: Real, P: Potential<S> + ?Sized>(
    spec: &ProblemSpec<S>,
    model: &P,
    mesh: Mesh<S>,
    dim: usize,
    rho: S,
    samples: usize,
    opts: &SolveOptions<S>,
) -> crate::Result<S> {
    if !(rho > S::zero()) {
        return Err(PlapError::Domain(format!("rim radius must be positive, got {rho}")));
    }
    let f = Functional::new(spec, model, mesh, dim)?;
    Ok(rim_on(&f, rho, samples, opts.seed))
}

fn to_sphere<S: Real>(x: &GridFn<S>, rho: S, p: S) -> Option<GridFn<S>> {
    let nrm = w1p_norm(x, p).ok()?;
    if nrm > S::zero() && nrm.is_finite() {
        Some(x.scaled(rho / nrm))
    } else {
        None
    }
}

pub(crate) fn rim_on<S: Real, P: Potential<S> + ?Sized>(f: &Functional<'_, S, P>, rho: S, samples: usize, seed: u64) -> S {
    let p = f.spec.p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5249_4d00);
    let mut best = S::infinity();
    for _ in 0..samples.max(1) {
        let start = random_smooth(*f.mesh(), f.dim(), 3, &mut rng);
        let Some(mut x) = to_sphere(&start, rho, p) else { continue };
        let mut e = f.energy(&x);
        let mut step = S::one();
        for _ in 0..300 {
            let d = riesz_solve(&f.gradient(&x));
            let mut moved = false;
            while step > S::lit(1e-12) {
                if let Some(y) = x.axpy(-step, &d).ok().and_then(|y| to_sphere(&y, rho, p)) {
                    let ey = f.energy(&y);
                    if ey < e {
                        x = y;
                        e = ey;
                        step = (step * S::lit(2.0)).min(S::lit(16.0));
                        moved = true;
                        break;
                    }
                }
                step *= S::lit(0.5);
            }
            if !moved {
                break;
            }
        }
        best = best.min(e);
    }
    best
}

#[derive(Clone, Debug)]
pub struct FarEndpoint<S> {
    pub lambda_scale: S,
    pub e: GridFn<S>,
}

pub const MAX_DOUBLINGS: usize = 60;

/// Doubles `λ` from 1 until `φ(λ·direction) < -1` with `‖λ·direction‖ > ρ`.
pub fn find_far_endpoint<S: Real, P: Potential<S> + ?Sized>(
    spec: &ProblemSpec<S>,
    model: &P,
    direction: &GridFn<S>,
    opts: &SolveOptions<S>,
) -> crate::Result<FarEndpoint<S>> {
    if direction.sup_norm() == S::zero() {
        return Err(PlapError::Domain("far-endpoint direction must be nonzero".into()));
    }
    let f = Functional::new(spec, model, *direction.mesh(), direction.dim())?;
    let mut lambda = S::one();
    let mut last = S::nan();
    for _ in 0..=MAX_DOUBLINGS {
        let y = direction.scaled(lambda);
        last = f.energy(&y);
        if last < -S::one() && w1p_norm(&y, spec.p)? > opts.rho {
            return Ok(FarEndpoint { lambda_scale: lambda, e: y });
        }
        lambda *= S::lit(2.0);
    }
    Err(PlapError::NoDescentDirection { doublings: MAX_DOUBLINGS, last_energy: last.as_f64() })
}

/// Mountain pass between `0` and `endpoint` by string deformation.
pub fn mountain_pass<S: Real, P: Potential<S> + ?Sized>(
    spec: &ProblemSpec<S>,
    model: &P,
    endpoint: &GridFn<S>,
    opts: &SolveOptions<S>,
) -> SolveResult<CriticalPoint<S>, S> {
    opts.validate()?;
    let f = Functional::new(spec, model, *endpoint.mesh(), endpoint.dim())?;
    let path = straight_path(&f, endpoint, opts);
    string_method(&f, path, opts).map(|(cp, _)| cp)
}

/// Straight segment `s ↦ s·endpoint` with a small seeded transverse bump
/// that vanishes at both ends, so the deformation can leave invariant
/// subspaces such as the constants.
pub(crate) fn straight_path<S: Real, P: Potential<S> + ?Sized>(
    f: &Functional<'_, S, P>,
    endpoint: &GridFn<S>,
    opts: &SolveOptions<S>,
) -> Vec<GridFn<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let bump = random_smooth(*f.mesh(), f.dim(), 4, &mut rng);
    let amp = S::lit(1e-2) * endpoint.sup_norm() / bump.sup_norm().max(S::lit(1e-12));
    let k = opts.path_points;
    (0..k)
        .map(|j| {
            let s = S::from_usize_lossy(j) / S::from_usize_lossy(k - 1);
            let w = amp * (S::PI() * s).sin();
            let mut v = endpoint.scaled(s);
            if j > 0 && j + 1 < k {
                v = v.axpy(w, &bump).expect("same mesh");
            }
            v
        })
        .collect()
}

/// Re-spaces the interior nodes to equal arclength.
fn reparametrize<S: Real>(path: &[GridFn<S>]) -> Vec<GridFn<S>> {
    let k = path.len();
    let mut cum = vec![S::zero(); k];
    for j in 1..k {
        let d = path[j].sub(&path[j - 1]).expect("same mesh");
        cum[j] = cum[j - 1] + d.flat_norm();
    }
    let total = cum[k - 1];
    if !(total > S::zero()) {
        return path.to_vec();
    }
    let mut out = Vec::with_capacity(k);
    out.push(path[0].clone());
    let mut seg = 0;
    for j in 1..k - 1 {
        let target = total * S::from_usize_lossy(j) / S::from_usize_lossy(k - 1);
        while seg + 1 < k - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let s = if len > S::zero() { (target - cum[seg]) / len } else { S::zero() };
        out.push(path[seg].lerp(&path[seg + 1], s).expect("same mesh"));
    }
    out.push(path[k - 1].clone());
    out
}

fn midpoint_energies<S: Real, P: Potential<S> + ?Sized>(f: &Functional<'_, S, P>, path: &[GridFn<S>]) -> Vec<S> {
    path.windows(2).map(|w| f.energy(&w[0].lerp(&w[1], S::lit(0.5)).expect("same mesh"))).collect()
}

/// Path maximum over nodes and segment midpoints.
fn top<S: Real>(nodes: &[S], mids: &[S]) -> S {
    nodes.iter().chain(mids).fold(S::neg_infinity(), |a, &b| a.max(b))
}

fn argmax<S: Real>(v: &[S]) -> usize {
    let mut best = 0;
    for (i, &e) in v.iter().enumerate() {
        if e > v[best] {
            best = i;
        }
    }
    best
}

/// The string iteration; returns the critical point and the final path.
pub(crate) fn string_method<S: Real, P: Potential<S> + ?Sized>(
    f: &Functional<'_, S, P>,
    mut path: Vec<GridFn<S>>,
    opts: &SolveOptions<S>,
) -> SolveResult<(CriticalPoint<S>, Vec<GridFn<S>>), S> {
    let k = path.len();
    let p = f.spec.p;
    let zero = GridFn::zeros(*f.mesh(), f.dim());
    let e_zero = f.energy(&zero);
    let endpoint = path[k - 1].clone();
    let e_end = f.energy(&endpoint);
    let rim = Rim { rho: opts.rho, xi: rim_on(f, opts.rho, opts.rim_samples, opts.seed) };

    if e_zero > S::lit(1e-12) {
        return Err(PlapError::GeometryViolated(format!("φ(0) = {e_zero} is positive")).into());
    }
    if !(w1p_norm(&endpoint, p)? > opts.rho) {
        return Err(PlapError::GeometryViolated(format!(
            "endpoint lies inside the rim ‖e‖ ≤ ρ = {}",
            opts.rho
        ))
        .into());
    }
    if !(e_end < rim.xi) {
        return Err(PlapError::GeometryViolated(format!(
            "endpoint energy {e_end} is not below the rim estimate ξ = {}",
            rim.xi
        ))
        .into());
    }
    if !(rim.xi > e_zero) {
        return Err(PlapError::GeometryViolated(format!(
            "rim estimate ξ = {} does not separate 0 from the endpoint",
            rim.xi
        ))
        .into());
    }

    let mut energies: Vec<S> = path.iter().map(|x| f.energy(x)).collect();
    let mut mids = midpoint_energies(f, &path);
    let mut steps = vec![opts.deform_step; k];
    let mut pm = top(&energies, &mids);
    let mut history = vec![pm];
    let mut polish_gate = S::lit(1e-2);
    let mut last_polish = 0usize;
    let floor = e_zero.max(e_end);
    let tol_e = |v: S| S::lit(1e-6) * (S::one() + v.abs());

    for sweep in 1..=opts.max_iter {
        for j in 1..k - 1 {
            // nodes already below both ends sit in a valley and are left alone,
            // otherwise they slide off towards -∞ on anticoercive problems
            if energies[j] <= floor {
                continue;
            }
            // move across the path, not along it, so the nodes keep their spacing
            let tangent = path[j + 1].sub(&path[j - 1])?;
            let cap = S::lit(0.25) * riesz_inner(&tangent, &tangent).sqrt();
            let Some((xn, en)) =
                constrained_descent_move(f, &path[j], energies[j], &mut steps[j], Some(&tangent), Some(cap))
            else {
                continue;
            };
            // the segments to the neighbours must stay below the current max,
            // or the string could hop across the ridge between two nodes
            let ml = f.energy(&path[j - 1].lerp(&xn, S::lit(0.5))?);
            let mr = f.energy(&xn.lerp(&path[j + 1], S::lit(0.5))?);
            if ml <= pm && mr <= pm {
                path[j] = xn;
                energies[j] = en;
                mids[j - 1] = ml;
                mids[j] = mr;
            } else {
                steps[j] *= S::lit(0.25);
            }
        }
        let cand = reparametrize(&path);
        let ce: Vec<S> = cand.iter().map(|x| f.energy(x)).collect();
        let cm = midpoint_energies(f, &cand);
        if top(&ce, &cm) <= top(&energies, &mids) + S::lit(1e-12) {
            path = cand;
            energies = ce;
            mids = cm;
        }
        pm = top(&energies, &mids);
        history.push(pm);
        if pm <= floor + S::lit(1e-12) {
            return Err(PlapError::GeometryViolated("the path collapsed below the endpoint levels".into()).into());
        }
        let imax = argmax(&energies);

        let r = f.residual_weak(&path[imax])?;
        let window = 20;
        let plateau = history.len() > window
            && history[history.len() - 1 - window] - pm <= S::lit(1e-9) * (S::one() + pm.abs());
        if !(r <= opts.tol_residual || r <= polish_gate || (plateau && sweep - last_polish >= window) || sweep % 250 == 0) {
            continue;
        }
        last_polish = sweep;
        polish_gate = r * S::lit(0.1);
        // the true path maximum can exceed the node maximum by the local energy swing
        let swing = (1..k)
            .filter(|&j| j + 1 >= imax && j <= imax + 1)
            .map(|j| (energies[j] - energies[j - 1]).abs())
            .fold(S::zero(), S::max);
        let mut order: Vec<usize> = (1..k - 1).collect();
        order.sort_by(|&a, &b| energies[b].partial_cmp(&energies[a]).unwrap_or(std::cmp::Ordering::Equal));
        for &j in order.iter().take(3) {
            let out = polish(f, &path[j], opts.tol_residual * S::lit(0.01), opts.polish_iter)?;
            if !out.converged {
                continue;
            }
            let e = f.energy(&out.x);
            let nontrivial = out.x.sup_norm() >= S::lit(1e-3);
            if nontrivial && e >= rim.xi - tol_e(rim.xi) && e <= pm + swing + tol_e(pm) {
                let mut cp = CriticalPoint::assemble(f, out.x, Kind::MountainPass, sweep)?;
                cp.rim = Some(rim);
                cp.level = Some(cp.energy);
                cp.path_max = history;
                return Ok((cp, path));
            }
        }
    }
    let imax = argmax(&energies);
    let mut best = CriticalPoint::assemble(f, path[imax].clone(), Kind::MountainPass, opts.max_iter)?;
    best.rim = Some(rim);
    best.level = Some(best.energy);
    best.path_max = history;
    Err(SolveError::NonConvergence { reason: format!("no certified saddle after {} sweeps", opts.max_iter), best: Box::new(best) })
}
