use clap::Args;
use gridnls::ground_state::{
    estimate_critical_mass, inequality_mass_threshold, phase_diagram, Classification, CriticalMassConfig,
    CriticalMassRecord, PhaseConfig, PhasePoint, DEFAULT_ENERGY_EPS, DEFAULT_UNBOUNDED_THRESHOLD,
};
use serde::Serialize;
use serde_json::Value;

use super::{build_mesh, name, solver_record, Context};
use crate::config::{resolve_grid, resolve_solver, FileConfig, GridArgs, GridSettings, SolverArgs, SweepArgs};
use crate::error::CliError;
use crate::output::{num, Status, Summary, Table};

const DEFAULT_POWERS: [f64; 5] = [2.5, 3.0, 4.0, 5.0, 7.0];
const DEFAULT_MASSES: [f64; 4] = [0.01, 0.5, 1.0, 2.0];

/// Classify a grid of (p, μ) cells and optionally bisect for critical masses
#[derive(Debug, Args)]
pub struct PhaseDiagram {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Serialize)]
struct Config {
    grid: GridSettings,
    powers: Vec<f64>,
    masses: Vec<f64>,
    solver: Value,
    energy_eps: f64,
    probe_samples_per_edge: Option<usize>,
    lambda_fraction: f64,
    probe_points: usize,
    unbounded_threshold: f64,
    critical: Vec<CriticalMassConfig>,
}

#[derive(Serialize)]
struct Critical {
    power: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    record: Option<CriticalMassRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct Output {
    cells: Vec<PhasePoint>,
    critical_masses: Vec<Critical>,
    anomalies: Vec<String>,
}

/// Flag cells that contradict the inequality mass threshold.
fn threshold_anomalies(grid: &GridSettings, cells: &[PhasePoint]) -> Vec<String> {
    cells
        .iter()
        .filter_map(|c| {
            let t = inequality_mass_threshold(&grid.spec, c.power)?;
            (c.mass < t && c.classification == Some(Classification::NegativeGroundState)).then(|| {
                format!("p = {}, mu = {}: negative energy below the inequality mass threshold {t}", c.power, c.mass)
            })
        })
        .collect()
}

impl PhaseDiagram {
    pub fn run(self, mut ctx: Context, file: FileConfig) -> Result<Status, CliError> {
        let problems = &mut ctx.problems;
        let grid = resolve_grid(self.grid.or(file.grid), problems);
        let sweep = self.sweep.or(file.sweep);
        let powers = sweep.powers.unwrap_or_else(|| DEFAULT_POWERS.to_vec());
        let masses = sweep.masses.unwrap_or_else(|| DEFAULT_MASSES.to_vec());
        problems.check(!powers.is_empty() && !masses.is_empty(), || "powers and masses must be non-empty".into());
        for &p in &powers {
            problems.check(p > 2.0 && p.is_finite(), || format!("p must exceed 2 (got {p})"));
        }
        for &m in &masses {
            problems.check(m > 0.0 && m.is_finite(), || format!("mass must be positive (got {m})"));
        }
        let solver = resolve_solver(self.solver.or(file.solver), 3.0, 1.0, ctx.seed, ctx.execution, problems);
        let phase = PhaseConfig {
            solver: solver.clone(),
            energy_eps: sweep.energy_eps.unwrap_or(DEFAULT_ENERGY_EPS),
            probe_samples_per_edge: sweep.probe_n,
            lambda_fraction: sweep.lambda_fraction.unwrap_or(0.5),
            probe_points: sweep.probe_points.unwrap_or(16),
            unbounded_threshold: sweep.unbounded_threshold.unwrap_or(DEFAULT_UNBOUNDED_THRESHOLD),
        };
        problems.check(phase.energy_eps > 0.0, || "energy eps must be positive".into());
        problems.check(phase.probe_points >= 2, || "probe points must be at least 2".into());
        let bracket = sweep.bracket.unwrap_or_else(|| vec![1.0, 40.0]);
        problems.check(bracket.len() == 2, || format!("bracket needs exactly two values (got {})", bracket.len()));
        let critical: Vec<CriticalMassConfig> = match bracket[..] {
            [lo, hi] => sweep
                .critical_powers
                .unwrap_or_default()
                .into_iter()
                .map(|p| CriticalMassConfig {
                    energy_eps: phase.energy_eps,
                    ..CriticalMassConfig::new(p, lo, hi, sweep.critical_tol.unwrap_or(1e-3))
                })
                .collect(),
            _ => Vec::new(),
        };
        for c in &critical {
            problems.core(c.validate());
        }
        ctx.problems.finish()?;

        let mesh = build_mesh(&grid)?;
        let cells = phase_diagram(&mesh, &powers, &masses, &phase)?;
        let mut anomalies = threshold_anomalies(&grid, &cells);
        for c in &cells {
            for e in &c.evidence.errors {
                anomalies.push(format!("p = {}, mu = {}: {e}", c.power, c.mass));
            }
        }
        let critical_masses: Vec<Critical> = critical
            .iter()
            .map(|c| match estimate_critical_mass(&mesh, c, &solver) {
                Ok(record) => {
                    anomalies.extend(record.anomalies.iter().map(|a| format!("critical mass p = {}: {a}", c.power)));
                    if let Some(t) = inequality_mass_threshold(&grid.spec, c.power) {
                        if record.estimate < t {
                            anomalies.push(format!(
                                "critical mass p = {}: estimate {} below the inequality mass threshold {t}",
                                c.power, record.estimate
                            ));
                        }
                    }
                    Critical { power: c.power, record: Some(record), error: None }
                }
                Err(e) => {
                    anomalies.push(format!("critical mass p = {}: {e}", c.power));
                    Critical { power: c.power, record: None, error: Some(e.to_string()) }
                }
            })
            .collect();

        let negative = cells.iter().filter(|c| c.classification == Some(Classification::NegativeGroundState)).count();
        let unbounded =
            cells.iter().filter(|c| c.classification == Some(Classification::UnboundedBelowSuspected)).count();
        let summary = Summary {
            status: if anomalies.is_empty() { Status::Ok } else { Status::Anomaly },
            message: format!(
                "{} cells: {negative} negative, {unbounded} unbounded below suspected, {} anomalies",
                cells.len(),
                anomalies.len()
            ),
        };
        let out = Output { cells, critical_masses, anomalies };
        let table = || {
            let mut t = Table::new(&[
                "power",
                "mass",
                "best_energy",
                "classification",
                "converged",
                "iterations",
                "concentration_min",
                "unbounded_below_suspected",
                "spreading_min",
                "errors",
            ]);
            let show = |x: Option<String>| x.unwrap_or_default();
            for c in &out.cells {
                let ev = &c.evidence;
                t.push(vec![
                    num(c.power),
                    num(c.mass),
                    show(c.best_energy.map(num)),
                    show(c.classification.map(|k| name(&k))),
                    show(ev.converged.map(|b| b.to_string())),
                    show(ev.iterations.map(|n| n.to_string())),
                    show(ev.concentration.as_ref().map(|r| num(r.min_energy))),
                    show(ev.concentration.as_ref().map(|r| r.unbounded_below_suspected.to_string())),
                    show(ev.spreading.as_ref().map(|r| num(r.min_energy))),
                    ev.errors.join("; "),
                ]);
            }
            t
        };
        let solver_value = solver_record(&solver, &["power", "mass"])?;
        let config = Config {
            grid,
            powers,
            masses,
            solver: solver_value,
            energy_eps: phase.energy_eps,
            probe_samples_per_edge: phase.probe_samples_per_edge,
            lambda_fraction: phase.lambda_fraction,
            probe_points: phase.probe_points,
            unbounded_threshold: phase.unbounded_threshold,
            critical,
        };
        ctx.sink.emit("phase-diagram", &config, &out, table, summary)
    }
}
