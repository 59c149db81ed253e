//! Active-set Newton / Levenberg–Marquardt refinement.
//!
//! Free nodes solve `G_i(x) = 0` with the dense Jacobian of the discrete
//! gradient. A free node whose update crosses a kink of `j` is pinned to the
//! kink; a pinned node stays only while its smooth part lies in `w·∂j` at
//! the kink, otherwise it is released on the side the residual points to.

use crate::energy::Functional;
use crate::error::Result;
use crate::grid_space::{norm, GridFn};
use crate::potential::{Kink, Potential};
use crate::real::Real;

const MAX_RELEASES: usize = 4;

#[derive(Clone, Debug)]
pub struct PolishOutcome<S> {
    pub x: GridFn<S>,
    pub residual: S,
    pub iterations: usize,
    pub converged: bool,
}

/// Kink points a node can be pinned to, for the given component dimension.
fn snap_points<S: Real>(kinks: &[Kink<S>], dim: usize) -> Vec<Vec<S>> {
    let mut out = Vec::new();
    for k in kinks {
        match *k {
            Kink::Sphere(r) if r == S::zero() => out.push(vec![S::zero(); dim]),
            Kink::Sphere(r) if dim == 1 => {
                out.push(vec![r]);
                out.push(vec![-r]);
            }
            Kink::Value(v) if dim == 1 => out.push(vec![v]),
            _ => {}
        }
    }
    out
}

/// First kink point met on the segment `from → to` (scalar nodes), or an
/// exact landing on the origin.
fn crossed<S: Real>(points: &[Vec<S>], from: &[S], to: &[S]) -> Option<usize> {
    let mut best: Option<(usize, S)> = None;
    for (idx, k) in points.iter().enumerate() {
        let hit = if from.len() == 1 {
            let a = from[0] - k[0];
            let b = to[0] - k[0];
            if a == S::zero() {
                None
            } else if a * b <= S::zero() {
                Some(a.abs() / (a - b).abs().max(S::min_positive_value()))
            } else {
                None
            }
        } else if to.iter().zip(k).all(|(&u, &v)| u == v) {
            Some(S::one())
        } else {
            None
        };
        if let Some(frac) = hit {
            if best.is_none_or(|(_, f)| frac < f) {
                best = Some((idx, frac));
            }
        }
    }
    best.map(|(i, _)| i)
}

struct State<S> {
    x: GridFn<S>,
    pinned: Vec<Option<usize>>,
}

fn residual_of<S: Real, P: Potential<S> + ?Sized>(f: &Functional<'_, S, P>, x: &GridFn<S>) -> Result<(S, Vec<S>)> {
    let d = f.nodal_distances(x)?;
    let h = f.mesh().h();
    Ok(((d.iter().map(|&v| v * v).sum::<S>() * h).sqrt(), d))
}

/// Refines `x0` towards a discrete critical point until the weak residual
/// drops to `target` or `max_iter` Newton iterations are spent.
pub fn polish<S: Real, P: Potential<S> + ?Sized>(
    f: &Functional<'_, S, P>,
    x0: &GridFn<S>,
    target: S,
    max_iter: usize,
) -> Result<PolishOutcome<S>> {
    f.check(x0)?;
    let n = x0.dim();
    let m = x0.len();
    let points = snap_points(&f.model.kinks(), n);
    let mut st = State { x: x0.clone(), pinned: vec![None; m] };
    // nodes already sitting on a kink start pinned
    for i in 0..m {
        if let Some(k) = points.iter().position(|k| k.as_slice() == st.x.row(i)) {
            st.pinned[i] = Some(k);
        }
    }
    let mut releases = vec![0usize; m];
    let (mut res, mut dist) = residual_of(f, &st.x)?;
    let mut best = (st.x.clone(), res);
    let h = f.mesh().h();
    let node_tol = target / (h * S::from_usize_lossy(m)).sqrt() * S::lit(0.5);
    let mut iterations = 0;
    while iterations < max_iter && res > target {
        iterations += 1;
        let free: Vec<usize> = (0..m).filter(|&i| st.pinned[i].is_none()).collect();
        let g = f.gradient(&st.x);
        let free_norm = (free.iter().map(|&i| norm(g.row(i)).powi(2)).sum::<S>() * h).sqrt();

        // free block converged but pinned nodes violate their inclusion
        if free_norm <= target * S::lit(0.5) || free.is_empty() {
            if !release(f, &mut st, &dist, &points, node_tol, &mut releases) {
                break;
            }
            let r = residual_of(f, &st.x)?;
            res = r.0;
            dist = r.1;
            if res < best.1 {
                best = (st.x.clone(), res);
            }
            continue;
        }

        let dim = m * n;
        let jac = f.jacobian(&st.x);
        let idx: Vec<usize> = free.iter().flat_map(|&i| (0..n).map(move |k| i * n + k)).collect();
        let nf = idx.len();
        let mut jff = vec![S::zero(); nf * nf];
        for (a, &ra) in idx.iter().enumerate() {
            for (b, &cb) in idx.iter().enumerate() {
                jff[a * nf + b] = jac[ra * dim + cb];
            }
        }
        let rhs: Vec<S> = idx.iter().map(|&r| -g.values()[r]).collect();
        let gf: Vec<S> = idx.iter().map(|&r| g.values()[r]).collect();

        let mut accepted = false;
        let scale = jff.iter().map(|&v| v * v).sum::<S>() / S::from_usize_lossy(nf);
        // attempt 0 is the Newton step, the rest Levenberg–Marquardt with growing damping
        'outer: for attempt in 0..7 {
            let z = if attempt == 0 {
                S::dense_solve(nf, &jff, &rhs)
            } else {
                let mu = S::lit(1e-6) * scale * S::lit(100.0).powi(attempt - 1);
                S::damped_normal_solve(nf, &jff, &gf, mu)
            };
            let Some(z) = z else { continue };
            let mut alpha = S::one();
            for _ in 0..12 {
                let trial = step(&st, &idx, &z, alpha, &points, n, &releases);
                let (r_new, d_new) = residual_of(f, &trial.x)?;
                if r_new < res * (S::one() - S::lit(1e-4) * alpha) {
                    st = trial;
                    res = r_new;
                    dist = d_new;
                    accepted = true;
                    break 'outer;
                }
                alpha *= S::lit(0.5);
            }
        }
        if !accepted {
            if !release(f, &mut st, &dist, &points, node_tol, &mut releases) {
                break;
            }
            let r = residual_of(f, &st.x)?;
            res = r.0;
            dist = r.1;
        }
        if res < best.1 {
            best = (st.x.clone(), res);
        }
    }
    let converged = best.1 <= target;
    Ok(PolishOutcome { x: best.0, residual: best.1, iterations, converged })
}

/// Applies `x_free += alpha·z`, pinning nodes whose move crosses a kink.
fn step<S: Real>(
    st: &State<S>,
    idx: &[usize],
    z: &[S],
    alpha: S,
    points: &[Vec<S>],
    n: usize,
    releases: &[usize],
) -> State<S> {
    let mut x = st.x.clone();
    let mut pinned = st.pinned.clone();
    {
        let vals = x.values_mut();
        for (a, &r) in idx.iter().enumerate() {
            vals[r] += alpha * z[a];
        }
    }
    for (node, slot) in pinned.iter_mut().enumerate() {
        // nodes that keep bouncing off a kink are left free
        if slot.is_some() || releases[node] >= MAX_RELEASES {
            continue;
        }
        if let Some(k) = crossed(points, st.x.row(node), &x.values()[node * n..(node + 1) * n]) {
            x.row_mut(node).copy_from_slice(&points[k]);
            *slot = Some(k);
        }
    }
    State { x, pinned }
}

/// Releases pinned nodes whose inclusion fails; returns whether any moved.
fn release<S: Real, P: Potential<S> + ?Sized>(
    f: &Functional<'_, S, P>,
    st: &mut State<S>,
    dist: &[S],
    points: &[Vec<S>],
    node_tol: S,
    releases: &mut [usize],
) -> bool {
    let smooth = f.smooth_part(&st.x);
    let n = st.x.dim();
    let mut any = false;
    for i in 0..st.x.len() {
        let Some(k) = st.pinned[i] else { continue };
        if dist[i] <= node_tol {
            continue;
        }
        // step against the part of S_i that the kink set cannot absorb
        let t = f.node_time(i);
        let s_i = &smooth[i * n..(i + 1) * n];
        let set = f.model.set_descriptor(t, &points[k]).map(|s| s.scaled(f.j_weight()));
        let mid = set.map(|s| nearest(&s, s_i)).unwrap_or_else(|| vec![S::zero(); n]);
        let v: Vec<S> = s_i.iter().zip(&mid).map(|(&a, &b)| a - b).collect();
        let vn = norm(&v);
        if vn == S::zero() {
            continue;
        }
        let delta = S::lit(1e-7) * (S::one() + norm(&points[k]));
        for c in 0..n {
            st.x.row_mut(i)[c] = points[k][c] - delta * v[c] / vn;
        }
        st.pinned[i] = None;
        releases[i] += 1;
        any = true;
    }
    any
}

/// Nearest point of a subgradient set to `w` (scalar sets exactly; other
/// shapes by their midpoint-to-`w` clamp).
fn nearest<S: Real>(set: &crate::potential::SubgradSet<S>, w: &[S]) -> Vec<S> {
    use crate::potential::SubgradSet;
    match set {
        SubgradSet::Interval { lo, hi } => vec![w[0].max(*lo).min(*hi)],
        SubgradSet::Ball { center, radius } => {
            let v: Vec<S> = w.iter().zip(center).map(|(&a, &b)| a - b).collect();
            let vn = norm(&v);
            if vn <= *radius {
                w.to_vec()
            } else {
                center.iter().zip(&v).map(|(&c, &d)| c + *radius * d / vn).collect()
            }
        }
        SubgradSet::Point(p) => p.clone(),
        SubgradSet::Segment(a, b) => {
            let ab: Vec<S> = b.iter().zip(a).map(|(&u, &v)| u - v).collect();
            let aw: Vec<S> = w.iter().zip(a).map(|(&u, &v)| u - v).collect();
            let len2: S = ab.iter().map(|&v| v * v).sum();
            let s = if len2 > S::zero() {
                (aw.iter().zip(&ab).map(|(&u, &v)| u * v).sum::<S>() / len2).max(S::zero()).min(S::one())
            } else {
                S::zero()
            };
            a.iter().zip(&ab).map(|(&u, &v)| u + s * v).collect()
        }
    }
}
