use clap::Args;
use gridnls::inequalities::{estimate_constant, AscentConfig, Family, InequalityForm, BOUND_TOLERANCE};
use serde::Serialize;

use super::{build_mesh, name, plan_forms, Context, FormPlan};
use crate::config::{resolve_grid, EstimateArgs, FileConfig, FormArgs, GridArgs, GridSettings};
use crate::error::CliError;
use crate::output::{opt, Status, Summary, Table};

const DEFAULT_FAMILIES: [Family; 3] = [Family::GaussianBump, Family::TensorBump, Family::LineSoliton];

/// Estimate best constants by ascent over structured families
#[derive(Debug, Args)]
pub struct EstimateConstants {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    forms: FormArgs,
    #[command(flatten)]
    estimate: EstimateArgs,
}

#[derive(Serialize)]
struct Config {
    grid: GridSettings,
    #[serde(flatten)]
    plan: FormPlan,
    families: Vec<Family>,
    ascent: AscentConfig,
}

#[derive(Serialize)]
struct Record {
    form: InequalityForm,
    power: Option<f64>,
    family: Family,
    best_ratio: Option<f64>,
    provable_bound: Option<f64>,
    best_start: Option<usize>,
    evaluations: Option<usize>,
    exceeds_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl EstimateConstants {
    pub fn run(self, mut ctx: Context, file: FileConfig) -> Result<Status, CliError> {
        let problems = &mut ctx.problems;
        let grid = resolve_grid(self.grid.or(file.grid), problems);
        let plan = plan_forms(self.forms.or(file.forms), grid.spec.dimension, problems);
        let est = self.estimate.or(file.estimate);
        let families: Vec<Family> = match est.families {
            Some(names) => names
                .iter()
                .filter_map(|s| s.parse().map_err(|e: gridnls::Error| problems.push(e.to_string())).ok())
                .collect(),
            None => DEFAULT_FAMILIES.to_vec(),
        };
        problems.check(!families.is_empty(), || "no families selected".into());
        let d = AscentConfig::default();
        let ascent = AscentConfig {
            multistart: est.starts.unwrap_or(d.multistart),
            max_evals: est.max_evals.unwrap_or(d.max_evals),
            node_steps: est.node_steps.unwrap_or(d.node_steps),
            ..d
        };
        problems.check(ascent.multistart >= 1, || "starts must be at least 1".into());
        problems.check(ascent.max_evals >= 1, || "max-evals must be at least 1".into());
        ctx.problems.finish()?;

        let mesh = build_mesh(&grid)?;
        let mut records = Vec::new();
        for &(form, power) in &plan.pairs {
            for &family in &families {
                let rec = match estimate_constant(&mesh, form, power, family, &ascent, ctx.seed, ctx.execution) {
                    Ok(e) => Record {
                        form,
                        power,
                        family,
                        best_ratio: Some(e.best_ratio),
                        provable_bound: e.provable_bound,
                        best_start: Some(e.best_start),
                        evaluations: Some(e.evaluations),
                        exceeds_bound: e.provable_bound.is_some_and(|b| e.best_ratio > b * (1.0 + BOUND_TOLERANCE)),
                        error: None,
                    },
                    Err(err) => Record {
                        form,
                        power,
                        family,
                        best_ratio: None,
                        provable_bound: None,
                        best_start: None,
                        evaluations: None,
                        exceeds_bound: false,
                        error: Some(err.to_string()),
                    },
                };
                records.push(rec);
            }
        }
        let exceeded = records.iter().filter(|r| r.exceeds_bound).count();
        let failed = records.iter().filter(|r| r.error.is_some()).count();
        let summary = Summary {
            status: if exceeded == 0 { Status::Ok } else { Status::Violation },
            message: format!(
                "{} estimates, {exceeded} above their provable bound, {failed} without a result",
                records.len()
            ),
        };
        let table = || {
            let mut t = Table::new(&[
                "form",
                "power",
                "family",
                "best_ratio",
                "provable_bound",
                "best_start",
                "evaluations",
                "exceeds_bound",
                "error",
            ]);
            for r in &records {
                t.push(vec![
                    r.form.tag().to_string(),
                    opt(r.power),
                    name(&r.family),
                    opt(r.best_ratio),
                    opt(r.provable_bound),
                    r.best_start.map(|s| s.to_string()).unwrap_or_default(),
                    r.evaluations.map(|s| s.to_string()).unwrap_or_default(),
                    r.exceeds_bound.to_string(),
                    r.error.clone().unwrap_or_default(),
                ]);
            }
            t
        };
        let config = Config { grid, plan, families, ascent };
        ctx.sink.emit("estimate-constants", &config, &records, table, summary)
    }
}
