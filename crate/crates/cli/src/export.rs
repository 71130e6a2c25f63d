//! CSV, OBJ and JSON writers. Floats are printed with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use dressing_core::{CheckRecord, EgoroffMetric, Grid, ImmersionSample, VerificationReport, C64};
use serde::Serialize;

use crate::error::CliResult;

fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

fn coords_header(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("u{i}")).collect()
}

fn complex_header(prefix: &str, labels: impl IntoIterator<Item = String>) -> Vec<String> {
    labels
        .into_iter()
        .flat_map(|l| [format!("Re {prefix}{l}"), format!("Im {prefix}{l}")])
        .collect()
}

fn csv(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            num(&mut out, *v);
        }
        out.push('\n');
    }
    out
}

fn push_complex(row: &mut Vec<f64>, z: C64) {
    row.push(z.re);
    row.push(z.im);
}

/// Columns `u1..un, Re X1, Im X1, ...`, one row per grid point.
pub fn immersion_csv(sample: &ImmersionSample) -> String {
    let grid = &sample.grid;
    let n = grid.dim();
    let mut header = coords_header(n);
    header.extend(complex_header("X", (1..=n).map(|i| i.to_string())));
    csv(
        &header,
        sample.x.iter().enumerate().map(|(p, x)| {
            let mut row = grid.point(p);
            x.iter().for_each(|&z| push_complex(&mut row, z));
            row
        }),
    )
}

/// Columns `u`, `h_i`, `β_ij` (i < j), `φ`.
pub fn metric_csv(metric: &EgoroffMetric) -> String {
    let grid = &metric.grid;
    let n = grid.dim();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut header = coords_header(n);
    header.extend(complex_header("h", (1..=n).map(|i| i.to_string())));
    header.extend(complex_header("beta", pairs.iter().map(|(i, j)| format!("{}{}", i + 1, j + 1))));
    header.extend(complex_header("phi", [String::new()]));
    let phi = metric.phi_closed.as_ref().unwrap_or(&metric.phi);
    csv(
        &header,
        (0..grid.len()).map(|p| {
            let mut row = grid.point(p);
            metric.h[p].iter().for_each(|&z| push_complex(&mut row, z));
            pairs.iter().for_each(|&(i, j)| push_complex(&mut row, metric.beta[p][(i, j)]));
            push_complex(&mut row, phi[p]);
            row
        }),
    )
}

/// Regular-grid triangulation of a slice with exactly two axes of more
/// than one point; vertices `(Re X_a, Im X_a, Re X_b)`.
pub fn immersion_obj(sample: &ImmersionSample, embedding: [usize; 2]) -> String {
    let grid = &sample.grid;
    let shape: Vec<usize> = grid.shape().into_iter().filter(|&m| m > 1).collect();
    let (rows, cols) = match shape[..] {
        [r, c] => (r, c),
        [c] => (1, c),
        _ => (1, grid.len()),
    };
    let [a, b] = embedding;
    let mut out = format!("# lambda = {} {}\n", sample.lambda.re, sample.lambda.im);
    for x in &sample.x {
        out.push('v');
        for v in [x[a].re, x[a].im, x[b].re] {
            out.push(' ');
            num(&mut out, v);
        }
        out.push('\n');
    }
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols - 1 {
            let v00 = r * cols + c + 1;
            let (v01, v10, v11) = (v00 + 1, v00 + cols, v00 + cols + 1);
            let _ = writeln!(out, "f {v00} {v10} {v11}");
            let _ = writeln!(out, "f {v00} {v11} {v01}");
        }
    }
    out
}

#[derive(Serialize)]
struct GridMeta {
    axes: Vec<(f64, f64, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_step: Option<f64>,
    tol_scale: f64,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    schema_version: u32,
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<&'a str>,
    all_passed: bool,
    failed: Vec<&'a str>,
    grid: GridMeta,
    checks: &'a [CheckRecord],
}

pub struct ReportContext<'a> {
    pub command: &'a str,
    pub scenario: Option<&'a str>,
    pub grid: &'a Grid,
    pub oracle_step: Option<f64>,
    pub tol_scale: f64,
}

pub fn report_json(report: &VerificationReport, ctx: &ReportContext<'_>) -> String {
    let file = ReportFile {
        schema_version: crate::scenario::SCHEMA_VERSION,
        command: ctx.command,
        scenario: ctx.scenario,
        all_passed: report.all_passed(),
        failed: report.failures().iter().map(|c| c.name.as_str()).collect(),
        grid: GridMeta {
            axes: ctx.grid.axes.iter().map(|a| (a.min, a.max, a.points)).collect(),
            oracle_step: ctx.oracle_step,
            tol_scale: ctx.tol_scale,
        },
        checks: &report.checks,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("report serialization cannot fail");
    s.push('\n');
    s
}

/// Human-readable table of a report, one check per line.
pub fn report_table(report: &VerificationReport) -> String {
    let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in &report.checks {
        let status = serde_json::to_value(c.status).ok().and_then(|v| v.as_str().map(str::to_uppercase)).unwrap_or_default();
        let residual = c.max_residual.map_or_else(|| "-".to_string(), |r| format!("{r:.3e}"));
        let _ = writeln!(out, "{status:<7} {:<width$}  residual {residual:>10}  tol {:.1e}", c.name, c.tolerance);
    }
    out
}

pub fn write(dir: &Path, name: &str, contents: &str) -> CliResult<std::path::PathBuf> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, contents)?;
    Ok(path)
}
