//! Run configuration: defaults, TOML/JSON files, command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use plap_core::solvers::SolveOptions;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Multiplicity,
    Homoclinic,
    Spectrum,
    Audit,
    Resonant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Base,
    Eigen,
    Window,
    Scalar,
    Resonant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Mountain pass for base and window problems, minimization for the
    /// eigen problem, saddle search for the scalar and resonant ones.
    Auto,
    Minimize,
    MountainPass,
    Saddle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Num(f64),
    Text(String),
}

impl Param {
    fn render(&self) -> String {
        match self {
            Param::Num(v) => v.to_string(),
            Param::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub variant: VariantName,
    pub p: f64,
    pub b: f64,
    /// `const:v`, `cos:a,b` or the path of a `t,x1` CSV file.
    pub g: String,
    pub lambda: f64,
    /// Resonance index.
    pub m: usize,
    pub forcing: String,
    /// Window index of the window variant.
    pub n: usize,
    pub eps_reg: f64,
    /// Mesh nodes (first-window nodes for the window variant).
    pub nodes: usize,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            variant: VariantName::Base,
            p: 2.0,
            b: 2.0 * std::f64::consts::PI,
            g: "const:1".into(),
            lambda: 1.0,
            m: 1,
            forcing: "const:0".into(),
            n: 1,
            eps_reg: plap_core::energy::DEFAULT_EPS_REG,
            nodes: 128,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub name: String,
    pub params: BTreeMap<String, Param>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig { name: "quartic".into(), params: BTreeMap::new() }
    }
}

impl PotentialConfig {
    /// Parses `name:key=value,…`.
    pub fn parse(spec: &str) -> Result<Self, String> {
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut params = BTreeMap::new();
        if let Some(h) = rest.strip_prefix("h=") {
            params.insert("h".to_string(), Param::Text(h.to_string()));
        } else {
            for kv in rest.split(',').filter(|s| !s.trim().is_empty()) {
                let (k, v) = kv.split_once('=').ok_or_else(|| format!("expected key=value in potential, got `{kv}`"))?;
                let v = v.trim();
                let value = v.parse::<f64>().map(Param::Num).unwrap_or_else(|_| Param::Text(v.to_string()));
                params.insert(k.trim().to_string(), value);
            }
        }
        Ok(PotentialConfig { name: name.trim().to_string(), params })
    }

    pub fn pairs(&self) -> Vec<(String, String)> {
        self.params.iter().map(|(k, v)| (k.clone(), v.render())).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: Method,
    /// Starting function: `const:c` (first component) or a CSV path.
    pub start: String,
    pub tol_residual: f64,
    pub max_iter: usize,
    pub path_points: usize,
    pub deform_step: f64,
    pub rho: f64,
    pub rim_samples: usize,
    pub polish_iter: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolveOptions::<f64>::default();
        SolverConfig {
            method: Method::Auto,
            start: "const:1".into(),
            tol_residual: o.tol_residual,
            max_iter: o.max_iter,
            path_points: o.path_points,
            deform_step: o.deform_step,
            rho: o.rho,
            rim_samples: o.rim_samples,
            polish_iter: o.polish_iter,
            seed: o.seed,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolveOptions<f64> {
        SolveOptions {
            tol_residual: self.tol_residual,
            max_iter: self.max_iter,
            path_points: self.path_points,
            deform_step: self.deform_step,
            rho: self.rho,
            rim_samples: self.rim_samples,
            polish_iter: self.polish_iter,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomoclinicConfig {
    pub n_max: usize,
    pub m_base: usize,
    pub tol_decay: f64,
    pub tol_profile: f64,
}

impl Default for HomoclinicConfig {
    fn default() -> Self {
        HomoclinicConfig { n_max: 8, m_base: 160, tol_decay: 1e-3, tol_profile: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub n_max: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { n_max: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { lambdas: (0..=8).map(|k| 2f64.powi(k)).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    pub profile: String,
    pub mu: Option<f64>,
    #[serde(rename = "M")]
    pub m_thresh: Option<f64>,
    pub x_star: Option<Vec<f64>>,
    pub radii: Vec<f64>,
    pub samples: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            profile: "Hj1".into(),
            mu: None,
            m_thresh: None,
            x_star: None,
            radii: vec![1.0, 10.0, 1e2, 1e3, 1e4, 1e6, 1e8],
            samples: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonantConfig {
    pub theta_points: usize,
}

impl Default for ResonantConfig {
    fn default() -> Self {
        ResonantConfig { theta_points: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    /// Embeds the wall time in `report.json`, at the cost of byte-identical
    /// reruns.
    pub wall_time: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("plap-out"), formats: vec![Format::Json, Format::Csv, Format::Svg], wall_time: false }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub homoclinic: HomoclinicConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub resonant: ResonantConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        let mut cfg = RunConfig {
            command,
            problem: ProblemConfig::default(),
            potential: PotentialConfig::default(),
            solver: SolverConfig::default(),
            homoclinic: HomoclinicConfig::default(),
            spectrum: SpectrumConfig::default(),
            sweep: SweepConfig::default(),
            audit: AuditConfig::default(),
            resonant: ResonantConfig::default(),
            output: OutputConfig::default(),
        };
        // command-specific defaults
        match command {
            Command::Homoclinic => {
                cfg.problem.variant = VariantName::Window;
                cfg.problem.b = 5.0;
            }
            Command::Multiplicity => {
                cfg.problem.variant = VariantName::Eigen;
                cfg.problem.p = 3.0;
                cfg.problem.b = 1.0;
                cfg.potential = PotentialConfig::parse("thm2_example:r=2,p=3").expect("static");
            }
            Command::Resonant => {
                cfg.problem.variant = VariantName::Resonant;
                cfg.potential = PotentialConfig::parse("abs").expect("static");
            }
            _ => {}
        }
        cfg
    }

    /// A file config for `command`: omitted sections take the command's
    /// defaults, and the file must name the same command.
    pub fn load_for(path: &Path, command: Command) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let value: serde_json::Value = if is_json {
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        } else {
            let t: toml::Value = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::to_value(t).map_err(|e| e.to_string())?
        };
        let serde_json::Value::Object(file) = value else {
            return Err(format!("{}: expected a table at the top level", path.display()));
        };
        if let Some(c) = file.get("command") {
            let named: Command = serde_json::from_value(c.clone()).map_err(|e| format!("{}: command: {e}", path.display()))?;
            if named != command {
                return Err(format!("{} is a `{named:?}` config, not `{command:?}`", path.display()).to_lowercase());
            }
        }
        // overlay the file's sections on the command defaults, key by key
        let serde_json::Value::Object(mut merged) = serde_json::to_value(RunConfig::new(command)).map_err(|e| e.to_string())? else {
            unreachable!("config serializes to an object");
        };
        for (section, v) in file {
            match (merged.get_mut(&section), v) {
                (Some(serde_json::Value::Object(dst)), serde_json::Value::Object(src)) => {
                    for (k, val) in src {
                        dst.insert(k, val);
                    }
                }
                (_, v) => {
                    merged.insert(section, v);
                }
            }
        }
        let cfg: RunConfig =
            serde_json::from_value(serde_json::Value::Object(merged)).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), String> {
        let p = &mut self.problem;
        set(&mut p.variant, o.variant);
        set(&mut p.p, o.p);
        set(&mut p.b, o.b);
        set(&mut p.g, o.g.clone());
        set(&mut p.lambda, o.lambda);
        set(&mut p.m, o.m);
        set(&mut p.forcing, o.forcing.clone());
        set(&mut p.n, o.window);
        set(&mut p.eps_reg, o.eps_reg);
        set(&mut p.nodes, o.nodes);
        if let Some(spec) = &o.potential {
            self.potential = PotentialConfig::parse(spec)?;
        }
        let s = &mut self.solver;
        set(&mut s.method, o.method);
        set(&mut s.start, o.start.clone());
        set(&mut s.tol_residual, o.tol);
        set(&mut s.max_iter, o.max_iter);
        set(&mut s.path_points, o.path_points);
        set(&mut s.seed, o.seed);
        if let Some(n) = o.n_max {
            self.homoclinic.n_max = n;
            self.spectrum.n_max = n;
        }
        set(&mut self.homoclinic.m_base, o.m_base);
        if let Some(l) = &o.lambdas {
            self.sweep.lambdas = l.clone();
        }
        let a = &mut self.audit;
        set(&mut a.profile, o.profile.clone());
        if o.mu.is_some() {
            a.mu = o.mu;
        }
        if o.m_thresh.is_some() {
            a.m_thresh = o.m_thresh;
        }
        if o.x_star.is_some() {
            a.x_star = o.x_star.clone();
        }
        set(&mut a.samples, o.samples);
        set(&mut self.resonant.theta_points, o.theta_points);
        set(&mut self.output.dir, o.out.clone());
        if let Some(f) = &o.formats {
            self.output.formats = f.clone();
        }
        if o.wall_time {
            self.output.wall_time = true;
        }
        Ok(())
    }

    /// `PLAP_SEED`, when set, replaces the configured seed.
    pub fn apply_env_seed(&mut self, value: Option<String>) -> Result<(), String> {
        if let Some(v) = value {
            self.solver.seed = v.trim().parse().map_err(|e| format!("PLAP_SEED=`{v}`: {e}"))?;
        }
        Ok(())
    }
}

fn set<T>(dst: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *dst = v;
    }
}

/// Flags overriding configuration values.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    #[arg(long, value_enum)]
    pub variant: Option<VariantName>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// `const:v`, `cos:a,b` or a CSV path.
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Resonance index.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub forcing: Option<String>,
    /// Window index of the window variant.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub eps_reg: Option<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
    /// `name:key=value,…`, e.g. `thm1_example:mu=3,p=2`.
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub path_points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub m_base: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long = "M")]
    pub m_thresh: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub x_star: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub theta_points: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub formats: Option<Vec<Format>>,
    #[arg(long)]
    pub wall_time: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_strings() {
        let p = PotentialConfig::parse("thm1_example:mu=3,p=2").unwrap();
        assert_eq!(p.name, "thm1_example");
        assert_eq!(p.pairs(), vec![("mu".into(), "3".into()), ("p".into(), "2".into())]);
        let l = PotentialConfig::parse("linear_forced:h=sin:1,1").unwrap();
        assert_eq!(l.params["h"], Param::Text("sin:1,1".into()));
        assert!(PotentialConfig::parse("quartic:N").is_err());
    }

    #[test]
    fn toml_sections_and_strictness() {
        let cfg: RunConfig = toml::from_str(
            "command = \"spectrum\"\n[problem]\np = 3.0\nb = 1.0\n[spectrum]\nn_max = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.problem.p, 3.0);
        assert_eq!(cfg.spectrum.n_max, 2);
        assert!(toml::from_str::<RunConfig>("command = \"spectrum\"\n[problem]\nq = 3.0\n").is_err());
        assert!(toml::from_str::<RunConfig>("command = \"spectrum\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn env_seed_overrides() {
        let mut cfg = RunConfig::new(Command::Solve);
        cfg.apply_env_seed(Some("42".into())).unwrap();
        assert_eq!(cfg.solver.seed, 42);
        assert!(cfg.apply_env_seed(Some("x".into())).is_err());
    }

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig::new(Command::Homoclinic);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
