use std::path::PathBuf;

use clap::Args;
use gridnls::grid::ValidationReport;
use gridnls::io::GridDocument;
use gridnls::MetricGrid;
use serde::Serialize;

use super::Context;
use crate::config::{resolve_grid, FileConfig, GridArgs};
use crate::error::CliError;
use crate::output::{num, Status, Summary, Table};

/// Build a truncated cubic grid and check its invariants
#[derive(Debug, Args)]
pub struct BuildGrid {
    #[command(flatten)]
    grid: GridArgs,
    /// Validate a stored grid document instead of building one
    #[arg(long, value_name = "GRID_JSON")]
    validate: Option<PathBuf>,
}

#[derive(Serialize)]
struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    validate: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<gridnls::GridSpec>,
}

#[derive(Serialize)]
struct Output {
    vertex_count: usize,
    edge_count: usize,
    validation: ValidationReport,
    grid: GridDocument,
}

impl BuildGrid {
    pub fn run(self, mut ctx: Context, file: FileConfig) -> Result<Status, CliError> {
        let (grid, config) = match self.validate {
            Some(path) => {
                ctx.problems.finish()?;
                let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
                let doc: GridDocument =
                    serde_json::from_str(&text).map_err(|source| CliError::Document { path: path.clone(), source })?;
                (doc.into_grid()?, Config { validate: Some(path), grid: None })
            }
            None => {
                let g = resolve_grid(self.grid.or(file.grid), &mut ctx.problems);
                ctx.problems.finish()?;
                (MetricGrid::build(g.spec)?, Config { validate: None, grid: Some(g.spec) })
            }
        };
        let validation = grid.validate();
        let failed = validation.failed().join(", ");
        let summary = if failed.is_empty() {
            Summary {
                status: Status::Ok,
                message: format!(
                    "{} vertices, {} edges, {} checks passed",
                    grid.vertices().len(),
                    grid.edges().len(),
                    validation.checks.len()
                ),
            }
        } else {
            Summary { status: Status::Violation, message: format!("failed checks: {failed}") }
        };
        let out = Output {
            vertex_count: grid.vertices().len(),
            edge_count: grid.edges().len(),
            validation,
            grid: GridDocument::from_grid(&grid),
        };
        let table = || {
            let mut t = Table::new(&["edge", "tail", "head", "axis", "length"]);
            for (i, e) in grid.edges().iter().enumerate() {
                t.push(vec![i.to_string(), e.tail.to_string(), e.head.to_string(), e.axis.to_string(), num(e.length)]);
            }
            t
        };
        ctx.sink.emit("build-grid", &config, &out, table, summary)
    }
}
