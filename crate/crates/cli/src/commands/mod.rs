mod build_grid;
mod estimate;
mod ground_state;
mod inequalities;
mod phase;
mod probe;

use std::sync::Arc;

pub use build_grid::BuildGrid;
pub use estimate::EstimateConstants;
pub use ground_state::GroundState;
pub use inequalities::CheckInequalities;
pub use phase::PhaseDiagram;
pub use probe::Probe;

use gridnls::ground_state::SolverConfig;
use gridnls::inequalities::InequalityForm;
use gridnls::{Execution, Mesh, MetricGrid};
use serde::Serialize;

use crate::config::{FormArgs, GridSettings, Problems};
use crate::error::CliError;
use crate::output::Sink;

/// Settings every subcommand receives.
pub struct Context {
    pub sink: Sink,
    pub seed: u64,
    pub execution: Execution,
    pub problems: Problems,
}

pub fn build_mesh(g: &GridSettings) -> Result<Arc<Mesh>, CliError> {
    let grid = MetricGrid::build(g.spec)?;
    Ok(Mesh::new(Arc::new(grid), g.samples_per_edge)?)
}

/// Solver settings as recorded in output, without `keys` and without the
/// execution mode, which never changes results.
pub fn solver_record(config: &SolverConfig, keys: &[&str]) -> Result<serde_json::Value, CliError> {
    let mut v = serde_json::to_value(config)?;
    if let serde_json::Value::Object(m) = &mut v {
        for k in keys.iter().chain(&["execution"]) {
            m.remove(*k);
        }
    }
    Ok(v)
}

/// Serde name of a unit enum value.
pub fn name<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

const DEFAULT_POWERS: [f64; 4] = [10.0 / 3.0, 4.0, 5.0, 6.0];

#[derive(Debug, Clone, Serialize)]
pub struct FormPlan {
    pub forms: Vec<InequalityForm>,
    pub powers: Vec<f64>,
    /// Form and power pairs outside the form's admissible range.
    pub skipped: Vec<(InequalityForm, f64)>,
    #[serde(skip)]
    pub pairs: Vec<(InequalityForm, Option<f64>)>,
}

pub fn plan_forms(args: FormArgs, dimension: usize, problems: &mut Problems) -> FormPlan {
    let forms: Vec<InequalityForm> = match args.forms {
        Some(names) => names
            .iter()
            .filter_map(|s| s.parse().map_err(|e: gridnls::Error| problems.push(e.to_string())).ok())
            .collect(),
        None => {
            InequalityForm::ALL.into_iter().filter(|f| f.required_dimension().is_none_or(|d| d == dimension)).collect()
        }
    };
    let powers = args.p.unwrap_or_else(|| DEFAULT_POWERS.to_vec());
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for &form in &forms {
        if let Some(d) = form.required_dimension() {
            problems.check(d == dimension, || format!("{form} needs a {d}-dimensional grid (got {dimension})"));
        }
        if !form.takes_power() {
            pairs.push((form, None));
            continue;
        }
        let before = pairs.len();
        for &p in &powers {
            if form.power_admissible(p) {
                pairs.push((form, Some(p)));
            } else {
                skipped.push((form, p));
            }
        }
        problems.check(pairs.len() > before, || format!("no power in {powers:?} is admissible for {form}"));
    }
    problems.check(!forms.is_empty(), || "no inequality forms selected".into());
    FormPlan { forms, powers, skipped, pairs }
}
