//! Layered run settings: command-line flags, then the TOML config file, then
//! built-in defaults. The seed additionally falls back to `GRIDNLS_SEED`.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use gridnls::ground_state::{InitialGuess, Metric, ProbeKind, SolverConfig};
use gridnls::{Boundary, Execution, GridSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SEED_ENV: &str = "GRIDNLS_SEED";

/// Declares a group of optional settings shared by flags and a file section.
macro_rules! layered {
    ($(#[$m:meta])* pub struct $name:ident { $($(#[$fm:meta])* pub $field:ident: $ty:ty,)* }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Default, Args, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $($(#[$fm])* pub $field: Option<$ty>,)*
        }

        impl $name {
            /// Values set here win over `file`.
            pub fn or(self, file: Self) -> Self {
                Self { $($field: self.$field.or(file.$field),)* }
            }
        }
    };
}

/// Parse an enum through its snake_case serde names, so `--boundary neumann`
/// and `boundary = "neumann"` agree.
fn parse_named<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    let key = s.trim().to_ascii_lowercase().replace('-', "_");
    serde_json::from_value(serde_json::Value::String(key)).map_err(|_| format!("unrecognised value '{s}'"))
}

/// Reals, also written as fractions such as `10/3`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let bad = || format!("'{s}' is not a number");
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            Ok(a / b)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    parse_named(s)
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    parse_named(s)
}

fn parse_probe_kind(s: &str) -> Result<ProbeKind, String> {
    parse_named(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Gaussian,
    Random,
    File,
}

layered! {
    /// Grid and mesh.
    pub struct GridArgs {
        /// Grid dimension d ∈ {1, 2, 3} [default: 3]
        #[arg(long)]
        pub dim: usize,
        /// Truncation radius R; coordinates run over -R..=R [default: 2]
        #[arg(long)]
        pub radius: usize,
        /// Edge length ℓ [default: 1]
        #[arg(long, value_parser = parse_real)]
        pub ell: f64,
        /// dirichlet or neumann [default: dirichlet]
        #[arg(long, value_parser = parse_boundary)]
        pub boundary: Boundary,
        /// Samples per edge [default: 8]
        #[arg(long)]
        pub n: usize,
    }
}

layered! {
    /// Forms and powers for inequality runs.
    pub struct FormArgs {
        /// Comma-separated inequality forms [default: every form valid in the grid dimension]
        #[arg(long, value_delimiter = ',')]
        pub forms: Vec<String>,
        /// Comma-separated powers; fractions like 10/3 are accepted [default: 10/3,4,5,6]
        #[arg(long, value_delimiter = ',', value_parser = parse_real)]
        pub p: Vec<f64>,
    }
}

layered! {
    /// Random field suite.
    pub struct SuiteArgs {
        /// Number of random zero-boundary fields [default: 100]
        #[arg(long)]
        pub fields: usize,
        /// Path-estimate sample points per field, 3D only; 0 skips the check [default: 0]
        #[arg(long)]
        pub path_points: usize,
    }
}

layered! {
    /// Constant estimation.
    pub struct EstimateArgs {
        /// Comma-separated families: gaussian, tensor, soliton, random [default: gaussian,tensor,soliton]
        #[arg(long, value_delimiter = ',')]
        pub families: Vec<String>,
        /// Ascent starts per family [default: 8]
        #[arg(long)]
        pub starts: usize,
        /// Ratio evaluations per start [default: 200]
        #[arg(long)]
        pub max_evals: usize,
        /// Node-level ascent steps after the parameter search [default: 0]
        #[arg(long)]
        pub node_steps: usize,
    }
}

layered! {
    /// Target of a single ground-state run.
    pub struct StateArgs {
        /// Nonlinearity power p > 2 [default: 3]
        #[arg(long, value_parser = parse_real)]
        pub p: f64,
        /// Mass μ > 0 [default: 1]
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        pub mu: f64,
    }
}

layered! {
    /// Gradient-flow settings.
    pub struct SolverArgs {
        /// First start: gaussian, random or file [default: gaussian]
        #[arg(long, value_enum)]
        pub init: InitKind,
        /// Width of the Gaussian first start [default: 1]
        #[arg(long, value_parser = parse_real)]
        pub init_width: f64,
        /// Function document used when --init file
        #[arg(long, value_name = "PATH")]
        pub init_file: PathBuf,
        /// Initial step size τ₀ [default: 1e-3]
        #[arg(long, value_parser = parse_real)]
        pub step_size: f64,
        /// Backtracking factor in (0, 1) [default: 0.5]
        #[arg(long, value_parser = parse_real)]
        pub backtrack: f64,
        /// Iteration cap per start [default: 20000]
        #[arg(long)]
        pub max_iterations: usize,
        /// Relative energy-change tolerance [default: 1e-10]
        #[arg(long, value_parser = parse_real)]
        pub energy_tol: f64,
        /// Projected-gradient tolerance [default: 1e-5]
        #[arg(long, value_parser = parse_real)]
        pub gradient_tol: f64,
        /// Number of starts [default: 8]
        #[arg(long)]
        pub multistart: usize,
        /// Descent metric: h1 or l2 [default: h1]
        #[arg(long, value_parser = parse_metric)]
        pub metric: Metric,
    }
}

layered! {
    /// Phase-diagram sweep.
    pub struct SweepArgs {
        /// Comma-separated powers [default: 2.5,3,4,5,7]
        #[arg(long, value_delimiter = ',', value_parser = parse_real)]
        pub powers: Vec<f64>,
        /// Comma-separated masses [default: 0.01,0.5,1,2]
        #[arg(long, value_delimiter = ',', value_parser = parse_real)]
        pub masses: Vec<f64>,
        /// Samples per edge on the probe mesh [default: the solver mesh]
        #[arg(long)]
        pub probe_n: usize,
        /// Points in each probe schedule [default: 16]
        #[arg(long)]
        pub probe_points: usize,
        /// Largest λh reached by the concentration probe [default: 0.5]
        #[arg(long, value_parser = parse_real)]
        pub lambda_fraction: f64,
        /// Energy the concentration probe must fall below [default: -1000]
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        pub unbounded_threshold: f64,
        /// Sign threshold ε for negative energies [default: 1e-10]
        #[arg(long, value_parser = parse_real)]
        pub energy_eps: f64,
        /// Powers in [10/3, 6] to bisect for the critical mass [default: none]
        #[arg(long, value_delimiter = ',', value_parser = parse_real)]
        pub critical_powers: Vec<f64>,
        /// Bisection bracket lo,hi [default: 1,40]
        #[arg(long, value_delimiter = ',', value_parser = parse_real)]
        pub bracket: Vec<f64>,
        /// Bisection tolerance on μ [default: 1e-3]
        #[arg(long, value_parser = parse_real)]
        pub critical_tol: f64,
    }
}

layered! {
    /// A single probe family.
    pub struct ProbeArgs {
        /// concentration or spreading [default: concentration]
        #[arg(long, value_parser = parse_probe_kind)]
        pub kind: ProbeKind,
        /// Nonlinearity power [default: 7]
        #[arg(long, value_parser = parse_real)]
        pub p: f64,
        /// Mass [default: 1]
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        pub mu: f64,
        /// Points in the default schedule [default: 32]
        #[arg(long)]
        pub points: usize,
        /// Largest λh of the default concentration schedule [default: 0.5]
        #[arg(long, value_parser = parse_real)]
        pub lambda_fraction: f64,
        /// Explicit increasing schedule of λ or σ values
        #[arg(long, value_delimiter = ',', value_parser = parse_real)]
        pub schedule: Vec<f64>,
        /// Energy the concentration probe must fall below [default: -1000]
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        pub threshold: f64,
    }
}

/// Contents of a `--config` file. Every section is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub sequential: Option<bool>,
    #[serde(default)]
    pub grid: GridArgs,
    #[serde(default)]
    pub forms: FormArgs,
    #[serde(default)]
    pub suite: SuiteArgs,
    #[serde(default)]
    pub estimate: EstimateArgs,
    #[serde(default)]
    pub state: StateArgs,
    #[serde(default)]
    pub solver: SolverArgs,
    #[serde(default)]
    pub sweep: SweepArgs,
    #[serde(default)]
    pub probe: ProbeArgs,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        toml::from_str(&text).map_err(|source| CliError::ConfigFile { path: path.into(), source })
    }
}

/// Collects every invalid setting before reporting.
#[derive(Debug, Default)]
pub struct Problems(Vec<String>);

impl Problems {
    pub fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.0.push(msg());
        }
    }

    pub fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    /// Record a core validation failure, one entry per listed problem.
    pub fn core(&mut self, r: gridnls::Result<()>) {
        match r {
            Ok(()) => {}
            Err(gridnls::Error::InvalidConfig(msg)) => self.0.extend(msg.split("; ").map(String::from)),
            Err(e) => self.0.push(e.to_string()),
        }
    }

    pub fn finish(self) -> Result<(), CliError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(self.0))
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSettings {
    #[serde(flatten)]
    pub spec: GridSpec,
    pub samples_per_edge: usize,
}

pub fn resolve_grid(args: GridArgs, problems: &mut Problems) -> GridSettings {
    let spec = GridSpec::new(
        args.dim.unwrap_or(3),
        args.ell.unwrap_or(1.0),
        args.radius.unwrap_or(2),
        args.boundary.unwrap_or(Boundary::Dirichlet),
    );
    problems.core(spec.validate());
    let n = args.n.unwrap_or(8);
    problems.check(n >= 1, || "n must be at least 1".into());
    GridSettings { spec, samples_per_edge: n }
}

pub fn resolve_solver(
    args: SolverArgs,
    power: f64,
    mass: f64,
    seed: u64,
    execution: Execution,
    problems: &mut Problems,
) -> SolverConfig {
    let d = SolverConfig::default();
    let init = match args.init.unwrap_or(InitKind::Gaussian) {
        InitKind::Gaussian => InitialGuess::Gaussian { width: args.init_width.unwrap_or(1.0) },
        InitKind::Random => InitialGuess::Random,
        InitKind::File => match args.init_file {
            Some(path) => InitialGuess::File { path },
            None => {
                problems.push("--init file needs --init-file");
                InitialGuess::Random
            }
        },
    };
    let config = SolverConfig {
        power,
        mass,
        init,
        seed,
        step_size: args.step_size.unwrap_or(d.step_size),
        backtrack: args.backtrack.unwrap_or(d.backtrack),
        max_iterations: args.max_iterations.unwrap_or(d.max_iterations),
        energy_tol: args.energy_tol.unwrap_or(d.energy_tol),
        gradient_tol: args.gradient_tol.unwrap_or(d.gradient_tol),
        multistart: args.multistart.unwrap_or(d.multistart),
        metric: args.metric.unwrap_or(d.metric),
        execution,
        stop_below: None,
    };
    problems.core(config.validate());
    config
}

/// Seed precedence: flag, config file, `GRIDNLS_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>, env: Option<String>, problems: &mut Problems) -> u64 {
    if let Some(s) = flag.or(file) {
        return s;
    }
    match env {
        Some(v) => v.trim().parse().unwrap_or_else(|_| {
            problems.push(format!("{SEED_ENV}='{v}' is not an unsigned integer"));
            0
        }),
        None => 0,
    }
}
