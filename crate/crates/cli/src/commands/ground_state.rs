use clap::Args;
use gridnls::ground_state::{inequality_mass_threshold, minimize, GroundStateResult, DEFAULT_ENERGY_EPS};
use serde::Serialize;

use super::{build_mesh, solver_record, Context};
use crate::config::{resolve_grid, resolve_solver, FileConfig, GridArgs, GridSettings, SolverArgs, StateArgs};
use crate::error::CliError;
use crate::output::{num, Status, Summary, Table};

/// Largest tolerated relative mass drift over all iterates.
pub const MASS_DRIFT_TOL: f64 = 1e-10;

/// Minimize the NLS energy at fixed mass
#[derive(Debug, Args)]
pub struct GroundState {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Serialize)]
struct Config {
    grid: GridSettings,
    solver: serde_json::Value,
}

#[derive(Serialize)]
struct Output<'a> {
    energy: f64,
    /// Mass below which the inequalities force a nonnegative energy.
    inequality_mass_threshold: Option<f64>,
    anomalies: Vec<String>,
    #[serde(flatten)]
    result: &'a GroundStateResult,
}

impl GroundState {
    pub fn run(self, mut ctx: Context, file: FileConfig) -> Result<Status, CliError> {
        let grid = resolve_grid(self.grid.or(file.grid), &mut ctx.problems);
        let state = self.state.or(file.state);
        let solver = resolve_solver(
            self.solver.or(file.solver),
            state.p.unwrap_or(3.0),
            state.mu.unwrap_or(1.0),
            ctx.seed,
            ctx.execution,
            &mut ctx.problems,
        );
        ctx.problems.finish()?;

        let mesh = build_mesh(&grid)?;
        let result = minimize(&mesh, &solver)?;
        let threshold = inequality_mass_threshold(&grid.spec, solver.power);
        let energy = result.breakdown.energy;

        let mut anomalies = Vec::new();
        if result.max_mass_drift > MASS_DRIFT_TOL {
            anomalies.push(format!("mass drift {:e} exceeds {MASS_DRIFT_TOL:e}", result.max_mass_drift));
        }
        if !result.monotone {
            anomalies.push("energy increased on an accepted step".into());
        }
        if let Some(t) = threshold {
            if solver.mass < t && energy < -DEFAULT_ENERGY_EPS {
                anomalies.push(format!("negative energy {energy:e} below the inequality mass threshold {t}"));
            }
        }
        let status = if anomalies.is_empty() { Status::Ok } else { Status::Anomaly };
        let summary = Summary {
            status,
            message: format!(
                "E = {energy:.10e} after {} iterations (converged: {}, best start {})",
                result.iterations, result.converged, result.best_start
            ),
        };
        let out = Output { energy, inequality_mass_threshold: threshold, anomalies, result: &result };
        let table = || {
            let mut t = Table::new(&["node", "x", "y", "z", "value"]);
            for (i, &v) in result.minimizer.values().iter().enumerate() {
                let [x, y, z] = mesh.node_position(i);
                t.push(vec![i.to_string(), num(x), num(y), num(z), num(v)]);
            }
            t
        };
        let config = Config { grid, solver: solver_record(&solver, &[])? };
        ctx.sink.emit("ground-state", &config, &out, table, summary)
    }
}
