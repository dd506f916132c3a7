use clap::Args;
use gridnls::inequalities::{check_path_estimate, random_path_points, InequalityForm, InequalityReport, PathReport};
use gridnls::random::{random_zero_boundary_field, FieldKind};
use serde::Serialize;

use super::{build_mesh, name, plan_forms, Context, FormPlan};
use crate::config::{resolve_grid, FileConfig, FormArgs, GridSettings, SuiteArgs};
use crate::error::CliError;
use crate::output::{num, opt, Status, Summary, Table};

/// Check inequality forms on a suite of random zero-boundary fields
#[derive(Debug, Args)]
pub struct CheckInequalities {
    #[command(flatten)]
    grid: crate::config::GridArgs,
    #[command(flatten)]
    forms: FormArgs,
    #[command(flatten)]
    suite: SuiteArgs,
    /// Append a fabricated violating report
    #[arg(long, hide = true)]
    inject_violation: bool,
}

#[derive(Serialize)]
struct Config {
    grid: GridSettings,
    #[serde(flatten)]
    plan: FormPlan,
    fields: usize,
    path_points: usize,
}

#[derive(Serialize)]
struct Row {
    field: usize,
    kind: Option<FieldKind>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    injected: bool,
    #[serde(flatten)]
    report: InequalityReport,
}

#[derive(Serialize)]
struct PathRow {
    field: usize,
    #[serde(flatten)]
    report: PathReport,
}

#[derive(Serialize)]
struct Group {
    form: InequalityForm,
    power: Option<f64>,
    checks: usize,
    violations: usize,
    max_ratio: f64,
    provable_bound: Option<f64>,
}

#[derive(Serialize)]
struct Output {
    checks: usize,
    violations: usize,
    groups: Vec<Group>,
    path: Vec<PathRow>,
    reports: Vec<Row>,
}

impl CheckInequalities {
    pub fn run(self, mut ctx: Context, file: FileConfig) -> Result<Status, CliError> {
        let problems = &mut ctx.problems;
        let grid = resolve_grid(self.grid.or(file.grid), problems);
        let plan = plan_forms(self.forms.or(file.forms), grid.spec.dimension, problems);
        let suite = self.suite.or(file.suite);
        let fields = suite.fields.unwrap_or(100);
        let path_points = suite.path_points.unwrap_or(0);
        problems.check(fields >= 1, || "fields must be at least 1".into());
        problems.check(path_points == 0 || grid.spec.dimension == 3, || {
            "the path estimate needs a 3-dimensional grid".into()
        });
        ctx.problems.finish()?;

        let mesh = build_mesh(&grid)?;
        let seed = ctx.seed;
        let per_field = ctx.execution.map_indexed(fields, |i| -> Result<(Vec<Row>, Option<PathRow>), CliError> {
            let kind = FieldKind::for_index(i);
            let f = random_zero_boundary_field(&mesh, kind, seed, i);
            let mut rows = Vec::with_capacity(plan.pairs.len());
            for &(form, p) in &plan.pairs {
                rows.push(Row { field: i, kind: Some(kind), injected: false, report: form.check(&f, p)? });
            }
            let path = if path_points > 0 {
                let pts = random_path_points(&mesh, path_points, seed, i as u64);
                Some(PathRow { field: i, report: check_path_estimate(&f, &pts)? })
            } else {
                None
            };
            Ok((rows, path))
        });
        let mut reports = Vec::new();
        let mut path = Vec::new();
        for r in per_field {
            let (rows, p) = r?;
            reports.extend(rows);
            path.extend(p);
        }
        if self.inject_violation {
            let (form, p) = plan.pairs[0];
            let report = InequalityReport::new(form, p, 2.0, 1.0, Some(1.0));
            reports.push(Row { field: fields, kind: None, injected: true, report });
        }

        let groups: Vec<Group> = plan
            .pairs
            .iter()
            .map(|&(form, power)| {
                let mine = reports.iter().filter(|r| r.report.form == form && r.report.power == power);
                let mut g = Group { form, power, checks: 0, violations: 0, max_ratio: 0.0, provable_bound: None };
                for r in mine {
                    g.checks += 1;
                    g.violations += usize::from(r.report.is_violated());
                    g.max_ratio = g.max_ratio.max(r.report.ratio);
                    g.provable_bound = g.provable_bound.or(r.report.provable_bound);
                }
                g
            })
            .collect();
        let violations = reports.iter().filter(|r| r.report.is_violated()).count()
            + path.iter().map(|p| p.report.violations).sum::<usize>();
        let checks = reports.len() + path.iter().map(|p| p.report.points).sum::<usize>();
        let summary = Summary {
            status: if violations == 0 { Status::Ok } else { Status::Violation },
            message: format!("{checks} checks on {fields} fields, {violations} violations"),
        };
        let out = Output { checks, violations, groups, path, reports };
        let table = || {
            let mut t =
                Table::new(&["field", "kind", "form", "power", "left", "right", "ratio", "provable_bound", "verdict"]);
            for r in &out.reports {
                let rep = &r.report;
                t.push(vec![
                    r.field.to_string(),
                    r.kind.map(|k| name(&k)).unwrap_or_default(),
                    rep.form.tag().to_string(),
                    opt(rep.power),
                    num(rep.left),
                    num(rep.right),
                    num(rep.ratio),
                    opt(rep.provable_bound),
                    name(&rep.verdict),
                ]);
            }
            t
        };
        let config = Config { grid, plan, fields, path_points };
        ctx.sink.emit("check-inequalities", &config, &out, table, summary)
    }
}
