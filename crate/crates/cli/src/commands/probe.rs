use clap::Args;
use gridnls::ground_state::{
    concentration_probe, default_concentration_schedule, default_spreading_schedule, spreading_probe, ProbeKind,
    ProbeRecord, DEFAULT_UNBOUNDED_THRESHOLD,
};
use serde::Serialize;

use super::{build_mesh, Context};
use crate::config::{resolve_grid, FileConfig, GridArgs, GridSettings, ProbeArgs};
use crate::error::CliError;
use crate::output::{num, Status, Summary, Table};

/// Evaluate the energy along a concentration or spreading family
#[derive(Debug, Args)]
pub struct Probe {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    probe: ProbeArgs,
}

#[derive(Serialize)]
struct Config {
    grid: GridSettings,
    kind: ProbeKind,
    power: f64,
    mass: f64,
    schedule: Vec<f64>,
    threshold: f64,
}

impl Probe {
    pub fn run(self, mut ctx: Context, file: FileConfig) -> Result<Status, CliError> {
        let problems = &mut ctx.problems;
        let grid = resolve_grid(self.grid.or(file.grid), problems);
        let args = self.probe.or(file.probe);
        let kind = args.kind.unwrap_or(ProbeKind::Concentration);
        let points = args.points.unwrap_or(32);
        let fraction = args.lambda_fraction.unwrap_or(0.5);
        let threshold = args.threshold.unwrap_or(DEFAULT_UNBOUNDED_THRESHOLD);
        problems.check(kind == ProbeKind::Concentration || grid.spec.dimension == 3, || {
            "the spreading probe needs a 3-dimensional grid".into()
        });
        problems.check(points >= 2, || "points must be at least 2".into());
        problems.check(fraction > 0.0 && fraction <= 1.0, || {
            format!("lambda fraction must lie in (0, 1] (got {fraction})")
        });
        ctx.problems.finish()?;

        let mesh = build_mesh(&grid)?;
        let schedule = args.schedule.unwrap_or_else(|| match kind {
            ProbeKind::Concentration => default_concentration_schedule(&mesh, fraction, points),
            ProbeKind::Spreading => default_spreading_schedule(&mesh, points),
        });
        let (p, mu) = (args.p.unwrap_or(7.0), args.mu.unwrap_or(1.0));
        let record: ProbeRecord = match kind {
            ProbeKind::Concentration => concentration_probe(&mesh, p, mu, &schedule, threshold)?,
            ProbeKind::Spreading => spreading_probe(&mesh, p, mu, &schedule)?,
        };
        let summary = Summary {
            status: Status::Ok,
            message: format!(
                "min energy {:.6e} over {} points (decreasing tail: {}, unbounded below suspected: {})",
                record.min_energy,
                record.energies.len(),
                record.decreasing_tail,
                record.unbounded_below_suspected
            ),
        };
        let table = || {
            let mut t = Table::new(&["step", "parameter", "energy"]);
            for (i, (&s, &e)) in record.schedule.iter().zip(&record.energies).enumerate() {
                t.push(vec![i.to_string(), num(s), num(e)]);
            }
            t
        };
        let config = Config { grid, kind, power: p, mass: mu, schedule, threshold };
        ctx.sink.emit("probe", &config, &record, table, summary)
    }
}
