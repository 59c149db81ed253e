//! Dispatch from a resolved configuration to the numerical core.

use std::path::Path;

use plap_core::auditor::{self, AuditParams, Profile};
use plap_core::homoclinic::{self, HomoclinicOptions};
use plap_core::solvers::{
    find_far_endpoint, minimize, mountain_pass, saddle_search, summarize, sweep_row, CriticalPoint, SolveError,
    SolveOptions, Split,
};
use plap_core::{spectrum, Builtin64, GridFn64, Potential, ProblemSpec64, TimeFn64};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, Method, RunConfig, VariantName};
use crate::svg::Panel;

/// Everything a successful or partially successful run produces.
pub struct Outcome {
    pub converged: bool,
    pub result: Value,
    pub diagnostics: Vec<String>,
    /// `(file name, function)` pairs written as CSV.
    pub solutions: Vec<(&'static str, GridFn64)>,
    /// Further CSV files, already rendered.
    pub tables: Vec<(&'static str, String)>,
    pub panels: Vec<Panel>,
}

impl Outcome {
    fn new(result: Value) -> Self {
        Outcome { converged: true, result, diagnostics: Vec::new(), solutions: Vec::new(), tables: Vec::new(), panels: Vec::new() }
    }
}

/// Configuration problems exit with 1, numerical failures with 2.
pub enum Failure {
    Config(String),
    Numerical(Box<Outcome>),
}

/// Errors that describe the input rather than the numerics.
fn is_input_error(e: &plap_core::PlapError) -> bool {
    use plap_core::PlapError::*;
    matches!(e, UnsupportedPotential(_) | InvalidPotential(_) | MissingParameter(_) | MeshMismatch(_))
}

impl From<plap_core::PlapError> for Failure {
    fn from(e: plap_core::PlapError) -> Self {
        Failure::Config(e.to_string())
    }
}

type Run = Result<Outcome, Failure>;

/// `const:`, `cos:` and `sin:` strings, or a `t,x1` CSV file.
pub fn time_fn(spec: &str, period: f64) -> Result<TimeFn64, Failure> {
    let kind = spec.split_once(':').map(|(k, _)| k.trim()).unwrap_or("");
    if matches!(kind, "const" | "cos" | "sin") {
        return Ok(TimeFn64::parse(spec, period)?);
    }
    let file = std::fs::File::open(Path::new(spec))
        .map_err(|e| Failure::Config(format!("`{spec}` is neither a time function nor a readable CSV file: {e}")))?;
    let table = GridFn64::read_csv(file)?;
    if table.dim() != 1 {
        return Err(Failure::Config(format!("{spec}: expected one value column")));
    }
    Ok(TimeFn64::Table(table))
}

pub fn model(cfg: &RunConfig) -> Result<Builtin64, Failure> {
    Ok(Builtin64::from_params(&cfg.potential.name, &cfg.potential.pairs(), cfg.problem.b)?)
}

/// The problem of the configured variant. The coefficient `g` is
/// `b`-periodic, or `2b`-periodic on windows.
pub fn problem(cfg: &RunConfig) -> Result<ProblemSpec64, Failure> {
    let c = &cfg.problem;
    let g_period = if c.variant == VariantName::Window { 2.0 * c.b } else { c.b };
    let g = time_fn(&c.g, g_period)?;
    let forcing = time_fn(&c.forcing, c.b)?;
    let mut spec = match c.variant {
        VariantName::Base => ProblemSpec64::base(c.p, c.b, g),
        VariantName::Eigen => ProblemSpec64::eigen(c.p, c.b, g, c.lambda),
        VariantName::Window => ProblemSpec64::window(c.p, c.b, g, c.n),
        VariantName::Scalar => ProblemSpec64::scalar(c.p, c.b),
        VariantName::Resonant => ProblemSpec64::resonant(c.b, c.m, forcing),
    };
    spec.eps_reg = c.eps_reg;
    spec.validate()?;
    Ok(spec)
}

fn options(cfg: &RunConfig) -> Result<SolveOptions<f64>, Failure> {
    let o = cfg.solver.options();
    o.validate()?;
    Ok(o)
}

fn start_point(cfg: &RunConfig, mesh: plap_core::Mesh64, dim: usize) -> Result<GridFn64, Failure> {
    let s = cfg.solver.start.trim();
    if let Some(v) = s.strip_prefix("const:") {
        let c: f64 = v.trim().parse().map_err(|e| Failure::Config(format!("start `{s}`: {e}")))?;
        let mut row = vec![0.0; dim];
        row[0] = c;
        return Ok(GridFn64::constant(mesh, &row));
    }
    let file = std::fs::File::open(s).map_err(|e| Failure::Config(format!("start `{s}`: {e}")))?;
    let x = GridFn64::read_csv(file)?;
    if x.dim() != dim || !x.mesh().compatible(&mesh) {
        return Err(Failure::Config(format!("start `{s}` does not match the configured mesh and dimension")));
    }
    Ok(x)
}

#[derive(Serialize)]
struct PointSummary<'a> {
    kind: String,
    energy: f64,
    sup_norm: f64,
    residual_weak: f64,
    residual_strong: &'a plap_core::energy::StrongResidual<f64>,
    rim: Option<plap_core::solvers::Rim<f64>>,
    level: Option<f64>,
    iterations: usize,
    path_max: &'a [f64],
    warnings: &'a [String],
}

fn summary(cp: &CriticalPoint<f64>) -> Value {
    serde_json::to_value(PointSummary {
        kind: cp.kind.to_string(),
        energy: cp.energy,
        sup_norm: cp.x.sup_norm(),
        residual_weak: cp.residual_weak,
        residual_strong: &cp.residual_strong,
        rim: cp.rim,
        level: cp.level,
        iterations: cp.iterations,
        path_max: &cp.path_max,
        warnings: &cp.warnings,
    })
    .expect("plain data serializes")
}

fn trajectory(title: &str, x: &GridFn64) -> Panel {
    let mesh = x.mesh();
    let series = (0..x.dim())
        .map(|k| (format!("x{}", k + 1), mesh.nodes().enumerate().map(|(i, t)| (t, x.row(i)[k])).collect()))
        .collect();
    Panel { title: title.into(), series }
}

/// Turns a solver result into an outcome, keeping the best iterate of a
/// nonconvergent run as a partial artefact.
fn point_outcome(res: Result<CriticalPoint<f64>, SolveError<f64>>, extra: Value) -> Run {
    match res {
        Ok(cp) => {
            let mut out = Outcome::new(json!({ "critical_point": summary(&cp), "details": extra }));
            out.panels.push(trajectory("solution", &cp.x));
            if cp.path_max.len() > 1 {
                let pts = cp.path_max.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
                out.panels.push(Panel { title: "path maximum per sweep".into(), series: vec![("max φ".into(), pts)] });
            }
            out.diagnostics.extend(cp.warnings.iter().cloned());
            out.solutions.push(("solution.csv", cp.x));
            Ok(out)
        }
        Err(SolveError::NonConvergence { reason, best }) => {
            let mut out = Outcome::new(json!({ "critical_point": summary(&best), "details": extra }));
            out.converged = false;
            out.diagnostics.push(reason);
            out.panels.push(trajectory("best iterate", &best.x));
            out.solutions.push(("solution.csv", best.x));
            Err(Failure::Numerical(Box::new(out)))
        }
        Err(SolveError::Failed(e)) if is_input_error(&e) => Err(Failure::Config(e.to_string())),
        Err(SolveError::Failed(e)) => Err(failed(e.to_string(), extra)),
    }
}

fn failed(message: String, result: Value) -> Failure {
    let mut out = Outcome::new(result);
    out.converged = false;
    out.diagnostics.push(message);
    Failure::Numerical(Box::new(out))
}

pub fn run(cfg: &RunConfig, jobs: usize) -> Run {
    match cfg.command {
        Command::Solve => solve(cfg),
        Command::Multiplicity => multiplicity(cfg, jobs),
        Command::Homoclinic => homoclinic_run(cfg),
        Command::Spectrum => spectrum_run(cfg),
        Command::Audit => audit(cfg),
        Command::Resonant => resonant(cfg),
    }
}

fn split_for(cfg: &RunConfig) -> Result<Split, Failure> {
    match cfg.problem.variant {
        VariantName::Scalar => Ok(Split::MeanZero),
        VariantName::Resonant => Ok(Split::FourierUpTo(cfg.problem.m)),
        v => Err(Failure::Config(format!("saddle search needs the scalar or resonant variant, not {v:?}").to_lowercase())),
    }
}

fn solve(cfg: &RunConfig) -> Run {
    let spec = problem(cfg)?;
    let model = model(cfg)?;
    let opts = options(cfg)?;
    let dim = model.dim().unwrap_or(1);
    let mesh = spec.mesh(cfg.problem.nodes)?;
    let method = match (cfg.solver.method, cfg.problem.variant) {
        (Method::Auto, VariantName::Base | VariantName::Window) => Method::MountainPass,
        (Method::Auto, VariantName::Eigen) => Method::Minimize,
        (Method::Auto, _) => Method::Saddle,
        (m, _) => m,
    };
    match method {
        Method::Minimize => {
            let x0 = start_point(cfg, mesh, dim)?;
            point_outcome(minimize(&spec, &model, &x0, &opts), json!({ "method": "minimize" }))
        }
        Method::MountainPass => {
            let x0 = start_point(cfg, mesh, dim)?;
            let far = match find_far_endpoint(&spec, &model, &x0, &opts) {
                Ok(f) => f,
                Err(e) => return Err(failed(e.to_string(), json!({ "method": "mountain_pass" }))),
            };
            point_outcome(
                mountain_pass(&spec, &model, &far.e, &opts),
                json!({ "method": "mountain_pass", "far_endpoint_scale": far.lambda_scale }),
            )
        }
        Method::Saddle => {
            let split = split_for(cfg)?;
            point_outcome(saddle_search(&spec, &model, mesh, split, &opts), json!({ "method": "saddle" }))
        }
        Method::Auto => unreachable!("resolved above"),
    }
}

fn multiplicity(cfg: &RunConfig, jobs: usize) -> Run {
    let spec = problem(cfg)?;
    if cfg.problem.variant != VariantName::Eigen {
        return Err(Failure::Config("the multiplicity sweep needs the eigen variant".into()));
    }
    let model = model(cfg)?;
    let opts = options(cfg)?;
    let lambdas = &cfg.sweep.lambdas;
    if lambdas.iter().any(|l| l.is_nan()) || lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Config("sweep lambdas must be strictly ascending".into()));
    }
    let dim = model.dim().unwrap_or(1);
    let mesh = spec.mesh(cfg.problem.nodes)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Failure::Config(format!("worker pool: {e}")))?;
    // par_iter keeps the grid order, so the worker count never changes the table
    let rows = pool.install(|| lambdas.par_iter().map(|&l| sweep_row(&spec, &model, mesh, dim, l, &opts)).collect());
    let table = summarize(rows);
    let mut out = Outcome::new(serde_json::to_value(&table).expect("plain data serializes"));
    let e1: Vec<(f64, f64)> = table.rows.iter().filter_map(|r| r.e1.map(|e| (r.lambda.log2(), e))).collect();
    let e2: Vec<(f64, f64)> = table.rows.iter().filter_map(|r| r.e2.map(|e| (r.lambda.log2(), e))).collect();
    out.panels.push(Panel { title: "energies over log2 λ".into(), series: vec![("φ(x₁)".into(), e1), ("φ(x₂)".into(), e2)] });
    match table.rows.iter().find(|r| r.two_solutions) {
        Some(row) => {
            if let Some(x2) = &row.x2 {
                out.panels.push(trajectory("mountain-pass solution at λ*", x2));
                out.solutions.push(("solution.csv", x2.clone()));
            }
            if let Some(x1) = &row.x1 {
                out.solutions.push(("minimizer.csv", x1.clone()));
            }
        }
        None => out.diagnostics.push("no grid λ produced two distinct nontrivial solutions".into()),
    }
    Ok(out)
}

fn homoclinic_run(cfg: &RunConfig) -> Run {
    if cfg.problem.variant != VariantName::Window {
        return Err(Failure::Config("homoclinic continuation runs on the window variant".into()));
    }
    problem(cfg)?;
    let model = model(cfg)?;
    let solve = options(cfg)?;
    let h = &cfg.homoclinic;
    let opts = HomoclinicOptions { solve, m_base: h.m_base, tol_decay: h.tol_decay, tol_profile: h.tol_profile };
    let g = time_fn(&cfg.problem.g, 2.0 * cfg.problem.b)?;
    let levels = |run: &homoclinic::HomoclinicRun<f64>| Panel {
        title: "levels c_n".into(),
        series: vec![("c_n".into(), run.entries.iter().map(|e| (e.n as f64, e.c_n)).collect())],
    };
    match homoclinic::continuation(&model, &g, cfg.problem.p, cfg.problem.b, h.n_max, &opts) {
        Ok(run) => {
            let guard = homoclinic::nontriviality_guard(&model, &run);
            let peak = run.candidate.as_ref().map(homoclinic::peak_time);
            let mut out = Outcome::new(json!({ "run": run, "guard": guard, "peak_time": peak }));
            out.converged = run.converged;
            if let Some(note) = &guard.note {
                out.diagnostics.push(note.clone());
            }
            if let Some(x) = &run.candidate {
                out.panels.push(trajectory("homoclinic candidate", x));
                out.solutions.push(("solution.csv", x.clone()));
            }
            out.panels.push(levels(&run));
            if run.converged {
                Ok(out)
            } else {
                out.diagnostics.push("rim decay or profile stabilization not reached".into());
                Err(Failure::Numerical(Box::new(out)))
            }
        }
        Err(e) => {
            if let plap_core::homoclinic::HomoclinicError { source: SolveError::Failed(plap_core::PlapError::Domain(msg)), n: 0, .. } = &e {
                return Err(Failure::Config(msg.clone()));
            }
            let mut out = Outcome::new(json!({ "run": e.run, "failed_window": e.n }));
            out.converged = false;
            out.diagnostics.push(e.to_string());
            out.panels.push(levels(&e.run));
            if let Some(x) = &e.run.candidate {
                out.solutions.push(("solution.csv", x.clone()));
            }
            Err(Failure::Numerical(Box::new(out)))
        }
    }
}

fn spectrum_run(cfg: &RunConfig) -> Run {
    let (p, b, n_max) = (cfg.problem.p, cfg.problem.b, cfg.spectrum.n_max);
    if n_max > spectrum::MAX_TABLE_N {
        return Err(Failure::Config(format!("n_max must be at most {}", spectrum::MAX_TABLE_N)));
    }
    spectrum::pi_p(p)?;
    if b.is_nan() || b <= 0.0 {
        return Err(Failure::Config(format!("period must be positive, got {b}")));
    }
    let table = match spectrum::verify_table(p, b, n_max) {
        Ok(t) => t,
        Err(e) => return Err(failed(e.to_string(), json!({ "p": p, "b": b }))),
    };
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    let mut out = Outcome::new(json!({ "table": table, "pi_p": spectrum::pi_p(p)?, "max_rel_err": table.max_rel_err() }));
    out.tables.push(("spectrum.csv", String::from_utf8(csv).expect("utf-8")));
    out.panels.push(Panel {
        title: "eigenvalues λ_n".into(),
        series: vec![
            ("formula".into(), table.rows.iter().map(|r| (r.n as f64, r.lambda_formula)).collect()),
            ("shooting".into(), table.rows.iter().map(|r| (r.n as f64, r.lambda_shooting)).collect()),
        ],
    });
    Ok(out)
}

fn audit(cfg: &RunConfig) -> Run {
    let model = model(cfg)?;
    let profile: Profile = cfg.audit.profile.parse()?;
    let c = &cfg.problem;
    let a = &cfg.audit;
    let mut params = AuditParams::new(c.p, c.b);
    params.mu = a.mu;
    params.m_thresh = a.m_thresh;
    params.x_star = a.x_star.clone();
    params.radii = a.radii.clone();
    params.samples = a.samples;
    params.seed = cfg.solver.seed;
    let g_period = if profile == Profile::Hg1 { 2.0 * c.b } else { c.b };
    params.g = Some(time_fn(&c.g, g_period)?);
    params.forcing = Some(time_fn(&c.forcing, c.b)?);
    params.m = Some(c.m);
    let report = auditor::audit_hypotheses(&model, profile, &params)?;
    let mut extra = serde_json::Map::new();
    let rmax = a.radii.iter().copied().fold(0.0, f64::max);
    if model.dim() == Some(1) && rmax >= 1e4 {
        if let Ok(est) = auditor::estimate_asymptotics(&model, &a.radii, a.samples) {
            extra.insert("asymptotics".into(), serde_json::to_value(est).expect("plain data serializes"));
        }
    }
    if matches!(profile, Profile::Hj1 | Profile::Hj2 | Profile::Hj3) {
        if let Ok(eq) = auditor::equivalence_check(&model, c.p, &[1e-2, 1e-4, 1e-6, 1e-8]) {
            extra.insert("origin_equivalence".into(), serde_json::to_value(eq).expect("plain data serializes"));
        }
    }
    let mut out = Outcome::new(json!({ "audit": report, "extra": extra }));
    out.diagnostics.extend(
        report
            .checks
            .iter()
            .filter(|c| c.verdict != auditor::Verdict::Pass)
            .map(|c| format!("{}: {:?}", c.label, c.verdict).to_lowercase()),
    );
    Ok(out)
}

fn resonant(cfg: &RunConfig) -> Run {
    if cfg.problem.variant != VariantName::Resonant {
        return Err(Failure::Config("the resonant command needs the resonant variant".into()));
    }
    let spec = problem(cfg)?;
    let model = model(cfg)?;
    let opts = options(cfg)?;
    let mesh = spec.mesh(cfg.problem.nodes)?;
    let h = GridFn64::from_scalar_fn(mesh, |t| spec.forcing.eval(t));
    let grid = auditor::default_theta_grid(cfg.resonant.theta_points);
    let ll = auditor::resonance_ll_check(&model, &h, cfg.problem.m, cfg.problem.b, &grid)?;
    let res = saddle_search(&spec, &model, mesh, Split::FourierUpTo(cfg.problem.m), &opts);
    let ll_value = serde_json::to_value(&ll).expect("plain data serializes");
    let mut out = point_outcome(res, json!({ "landesman_lazer": ll_value }));
    if !ll.ok {
        let note = format!("Landesman–Lazer condition fails at θ = {} (margin {})", ll.worst_theta, ll.margin);
        match &mut out {
            Ok(o) => o.diagnostics.push(note),
            Err(Failure::Numerical(o)) => o.diagnostics.push(note),
            Err(Failure::Config(_)) => {}
        }
    }
    out
}
