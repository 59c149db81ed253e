use super::*;
use crate::energy::ProblemSpec;
use crate::potential::Builtin;
use crate::timefn::TimeFn;
use crate::PlapError;

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn base(p: f64, b: f64) -> ProblemSpec<f64> {
    ProblemSpec::base(p, b, TimeFn::Const(1.0))
}

#[test]
fn linear_forcing_matches_fourier_solution() {
    let spec = base(2.0, TAU);
    let model = Builtin::LinearForced { h: TimeFn::Sin { amp: 1.0, omega: 1.0, phase: 0.0 } };
    let mesh = Mesh::new(TAU, 512).unwrap();
    let cp = minimize(&spec, &model, &GridFn::zeros(mesh, 1), &SolveOptions::default()).unwrap();
    assert_eq!(cp.kind, Kind::Minimizer);
    assert!(cp.residual_weak <= 1e-6);
    for (i, t) in mesh.nodes().enumerate() {
        assert!((cp.x.row(i)[0] - t.sin() / 2.0).abs() <= 1e-4);
    }
}

#[test]
fn zero_potential_minimizer_is_zero() {
    let spec = base(2.0, 1.0);
    let mesh = Mesh::new(1.0, 64).unwrap();
    let x0 = GridFn::from_scalar_fn(mesh, |t: f64| 0.3 + (6.0 * t).sin());
    let cp = minimize(&spec, &Builtin::Zero { n: 1 }, &x0, &SolveOptions::default()).unwrap();
    assert!(cp.x.sup_norm() < 1e-8, "{}", cp.x.sup_norm());
    assert!(cp.energy.abs() < 1e-12);
    // the p = 3 minimum is degenerate: residual ~ ‖x‖², so x is only small
    let cp = minimize(&base(3.0, 1.0), &Builtin::Zero { n: 1 }, &x0, &SolveOptions::default()).unwrap();
    assert!(cp.x.sup_norm() < 1e-2 && cp.energy < 1e-9);
}

#[test]
fn rim_estimates() {
    let spec = base(2.0, TAU);
    let mesh = Mesh::new(TAU, 128).unwrap();
    let opts = SolveOptions::default();
    let q = Builtin::quartic(1);
    let xi = rim_estimate(&spec, &q, mesh, 1, 0.1, 4, &opts).unwrap();
    assert!(xi > 0.0);
    let z = rim_estimate(&spec, &Builtin::Zero { n: 1 }, mesh, 1, 0.1, 4, &opts).unwrap();
    assert!(z > 0.0);
    let small = rim_estimate(&spec, &q, mesh, 1, 1e-4, 2, &opts).unwrap();
    assert!(small < 1e-7 && small < xi);
}

#[test]
fn far_endpoint() {
    let spec = base(2.0, TAU);
    let mesh = Mesh::new(TAU, 64).unwrap();
    let one = GridFn::constant(mesh, &[1.0]);
    let opts = SolveOptions::default();
    let far = find_far_endpoint(&spec, &Builtin::quartic(1), &one, &opts).unwrap();
    assert_eq!(far.lambda_scale, 2.0);
    let err = find_far_endpoint(&spec, &Builtin::Zero { n: 1 }, &one, &opts).unwrap_err();
    assert!(matches!(err, PlapError::NoDescentDirection { doublings: 60, .. }));
}

#[test]
fn quartic_mountain_pass_small_mesh() {
    let spec = base(2.0, TAU);
    let model = Builtin::quartic(1);
    let mesh = Mesh::new(TAU, 64).unwrap();
    let opts = SolveOptions::default();
    let far = find_far_endpoint(&spec, &model, &GridFn::constant(mesh, &[1.0]), &opts).unwrap();
    let cp = mountain_pass(&spec, &model, &far.e, &opts).unwrap();
    assert_eq!(cp.kind, Kind::MountainPass);
    assert!(cp.residual_weak <= 1e-6);
    assert!(cp.x.sup_norm() >= 1e-3);
    let level = cp.level.unwrap();
    assert!(level > 0.0 && level <= std::f64::consts::FRAC_PI_2 + 1e-6, "{level}");
    // the 2π-periodic orbit around x = 1 of x'' = x − x³, by shooting: 1.302175
    assert!((level - 1.302175).abs() < 2e-3, "{level}");
    assert!(cp.path_max.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(cp.energy >= cp.rim.unwrap().xi - 1e-6);
}

#[test]
fn endpoint_above_rim_is_rejected() {
    let spec = base(2.0, TAU);
    let mesh = Mesh::new(TAU, 64).unwrap();
    let e = GridFn::constant(mesh, &[0.5]);
    let err = mountain_pass(&spec, &Builtin::quartic(1), &e, &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, SolveError::Failed(PlapError::GeometryViolated(_))), "{err}");
}

#[test]
fn saddle_scalar_abs() {
    let spec = ProblemSpec::scalar(2.0, TAU);
    let mesh = Mesh::new(TAU, 128).unwrap();
    let cp = saddle_search(&spec, &Builtin::Abs, mesh, Split::MeanZero, &SolveOptions::default()).unwrap();
    assert!(cp.residual_weak <= 1e-6);
    assert!(cp.residual_strong.inclusion_dist <= 5.0 * mesh.h());
}

#[test]
fn saddle_resonant_abs() {
    let spec = ProblemSpec::resonant(TAU, 1, TimeFn::Const(0.0));
    let mesh = Mesh::new(TAU, 128).unwrap();
    let cp = saddle_search(&spec, &Builtin::Abs, mesh, Split::FourierUpTo(1), &SolveOptions::default()).unwrap();
    assert!(cp.residual_weak <= 1e-6);
}

#[test]
fn saddle_zero_potential() {
    let spec = ProblemSpec::scalar(2.0, 1.0);
    let mesh = Mesh::new(1.0, 64).unwrap();
    let cp = saddle_search(&spec, &Builtin::Zero { n: 1 }, mesh, Split::MeanZero, &SolveOptions::default()).unwrap();
    assert!(cp.residual_weak <= 1e-6);
    assert!(!cp.warnings.is_empty());
}

#[test]
fn saddle_split_mismatch() {
    let spec = ProblemSpec::scalar(2.0, 1.0);
    let mesh = Mesh::new(1.0, 64).unwrap();
    assert!(saddle_search(&spec, &Builtin::Abs, mesh, Split::FourierUpTo(1), &SolveOptions::default()).is_err());
}

#[test]
fn sweep_edge_cases() {
    let spec = ProblemSpec::eigen(3.0, 1.0, TimeFn::Const(1.0), 1.0);
    let model = Builtin::thm2_example(2.0, 3.0, 1).unwrap();
    let mesh = Mesh::new(1.0, 64).unwrap();
    let opts = SolveOptions::default();
    let empty = lambda_star_sweep(&spec, &model, mesh, 1, &[], &opts).unwrap();
    assert!(empty.rows.is_empty() && empty.lambda_star.is_none());
    let t = lambda_star_sweep(&spec, &model, mesh, 1, &[0.0], &opts).unwrap();
    assert!(!t.rows[0].two_solutions);
    assert!(t.rows[0].x1.as_ref().unwrap().sup_norm() < 1e-3);
}

#[test]
fn deterministic_minimize() {
    let spec = base(3.0, 1.0);
    let model = Builtin::LinearForced { h: TimeFn::Sin { amp: 2.0, omega: TAU, phase: 0.3 } };
    let mesh = Mesh::new(1.0, 64).unwrap();
    let x0 = GridFn::zeros(mesh, 1);
    let a = minimize(&spec, &model, &x0, &SolveOptions::default()).unwrap();
    let b = minimize(&spec, &model, &x0, &SolveOptions::default()).unwrap();
    assert_eq!(a.x.values(), b.x.values());
}
