use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::{Functional, ProblemSpec, Variant};
use crate::error::PlapError;
use crate::grid_space::{GridFn, Mesh};
use crate::potential::Potential;
use crate::real::Real;

use super::{minimize, mountain_pass, random_smooth, CriticalPoint, SolveOptions};

/// Separation below which two solutions count as discretization twins.
pub const DISTINCT: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow<S> {
    pub lambda: S,
    /// `φ_λ(x₁)` of the minimizer.
    pub e1: Option<S>,
    /// `φ_λ(x₂)` of the mountain-pass point.
    pub e2: Option<S>,
    pub separation: Option<S>,
    pub residual1: Option<S>,
    pub residual2: Option<S>,
    /// Both solutions nontrivial, distinct and `φ_λ(x₁) < 0 < φ_λ(x₂)`.
    pub two_solutions: bool,
    pub status: String,
    #[serde(skip)]
    pub x1: Option<GridFn<S>>,
    #[serde(skip)]
    pub x2: Option<GridFn<S>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable<S> {
    pub rows: Vec<SweepRow<S>>,
    /// Least grid `λ` with two distinct nontrivial solutions.
    pub lambda_star: Option<S>,
}

/// Constant start `c·e₁` with the most negative energy among a geometric
/// ladder of amplitudes, if any is negative.
fn witness<S: Real, P: Potential<S> + ?Sized>(f: &Functional<'_, S, P>) -> Option<GridFn<S>> {
    let mut best: Option<(GridFn<S>, S)> = None;
    for k in -2..=20 {
        let c = S::lit(2f64.powf(k as f64 / 2.0));
        let mut row = vec![S::zero(); f.dim()];
        row[0] = c;
        let x = GridFn::constant(*f.mesh(), &row);
        let e = f.energy(&x);
        if e < S::zero() && best.as_ref().is_none_or(|(_, b)| e < *b) {
            best = Some((x, e));
        }
    }
    best.map(|(x, _)| x)
}

/// One `λ` of the multiplicity sweep.
pub fn sweep_row<S: Real, P: Potential<S> + ?Sized>(
    base: &ProblemSpec<S>,
    model: &P,
    mesh: Mesh<S>,
    dim: usize,
    lambda: S,
    opts: &SolveOptions<S>,
) -> SweepRow<S> {
    let mut row = SweepRow {
        lambda,
        e1: None,
        e2: None,
        separation: None,
        residual1: None,
        residual2: None,
        two_solutions: false,
        status: String::new(),
        x1: None,
        x2: None,
    };
    let spec = base.with_lambda(lambda);
    let f = match Functional::new(&spec, model, mesh, dim) {
        Ok(f) => f,
        Err(e) => {
            row.status = e.to_string();
            return row;
        }
    };
    let start = witness(&f).unwrap_or_else(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let r = random_smooth(mesh, dim, 3, &mut rng);
        r.scaled(S::lit(1e-2) / r.sup_norm().max(S::lit(1e-12)))
    });
    let x1: CriticalPoint<S> = match minimize(&spec, model, &start, opts) {
        Ok(cp) => cp,
        Err(e) => {
            row.status = format!("minimize: {e}");
            return row;
        }
    };
    row.e1 = Some(x1.energy);
    row.residual1 = Some(x1.residual_weak);
    let tiny = S::lit(DISTINCT);
    if x1.x.sup_norm() < tiny || !(x1.energy < S::zero()) {
        row.status = "only the trivial minimizer".into();
        row.x1 = Some(x1.x);
        return row;
    }
    match mountain_pass(&spec, model, &x1.x, opts) {
        Ok(x2) => {
            let sep = x1.x.sub(&x2.x).map(|d| d.sup_norm()).unwrap_or(S::zero());
            row.e2 = Some(x2.energy);
            row.residual2 = Some(x2.residual_weak);
            row.separation = Some(sep);
            row.two_solutions = x1.energy < S::zero() && x2.energy > S::zero() && sep >= tiny;
            row.status = if row.two_solutions { "two solutions".into() } else { "solutions not distinct".into() };
            row.x2 = Some(x2.x);
        }
        Err(e) => row.status = format!("mountain pass: {e}"),
    }
    row.x1 = Some(x1.x);
    row
}

/// Runs [`sweep_row`] over an ascending `λ` grid.
pub fn lambda_star_sweep<S: Real, P: Potential<S> + ?Sized>(
    base: &ProblemSpec<S>,
    model: &P,
    mesh: Mesh<S>,
    dim: usize,
    lambdas: &[S],
    opts: &SolveOptions<S>,
) -> crate::Result<SweepTable<S>> {
    if base.variant != Variant::Eigen {
        return Err(PlapError::Domain("the λ sweep needs an Eigen problem".into()));
    }
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(PlapError::Domain("λ grid must be strictly ascending".into()));
    }
    let rows: Vec<SweepRow<S>> = lambdas.iter().map(|&l| sweep_row(base, model, mesh, dim, l, opts)).collect();
    Ok(summarize(rows))
}

/// Builds the table and its empirical threshold from rows in grid order.
pub fn summarize<S: Real>(rows: Vec<SweepRow<S>>) -> SweepTable<S> {
    let lambda_star = rows.iter().find(|r| r.two_solutions).map(|r| r.lambda);
    SweepTable { rows, lambda_star }
}
