//! Pipeline stages. Each stage writes its artifacts into the output
//! directory and returns the checks it ran (possibly none).

use std::path::{Path, PathBuf};

use dressing_core::algebra::{c64, max_abs};
use dressing_core::dressing::{is_spherical, SphericalSeedData};
use dressing_core::geometry::{
    check_darboux_egoroff, check_frame_reality, check_lagrangian, check_partial_invariance, check_position_equation,
    check_potential, check_rotation_consistency, check_sphere, limit_net, sample_immersion,
};
use dressing_core::oracle::frame_convergence;
use dressing_core::{
    check_reality, dress_permuted, frame_eval, metric_from_frame, CheckRecord, EgoroffMetric, Error, ExtendedFrame,
    Grid, PathSpec, VerificationReport, C64,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{CliError, CliResult};
use crate::export::{self, ReportContext};
use crate::scenario::{complex, ExportFormat, Scenario};

/// Command-line overrides.
#[derive(Clone, Debug)]
pub struct Options {
    pub out: PathBuf,
    /// Overrides the oracle step.
    pub step: Option<f64>,
    /// Multiplies every tolerance.
    pub tol_scale: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self { out: PathBuf::from("."), step: None, tol_scale: 1.0 }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub report: VerificationReport,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn absorb(&mut self, other: Outcome) {
        self.report.merge(other.report);
        self.files.extend(other.files);
    }

    /// `CheckFailure` listing the failed checks, if any.
    pub fn into_result(self) -> CliResult<Self> {
        if self.report.all_passed() {
            Ok(self)
        } else {
            Err(CliError::CheckFailure(self.report.failures().iter().map(|c| c.name.clone()).collect()))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Seed,
    Dress,
    Verify,
    Export,
    Sweep,
    PermuteCheck,
    Run,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Seed => "seed",
            Stage::Dress => "dress",
            Stage::Verify => "verify",
            Stage::Export => "export",
            Stage::Sweep => "sweep",
            Stage::PermuteCheck => "permute-check",
            Stage::Run => "run",
        }
    }
}

/// Parse, validate and run one stage. Writes `report.json` for every stage
/// that runs checks.
pub fn execute(stage: Stage, scenario_path: &Path, opts: &Options) -> CliResult<Outcome> {
    if !(opts.tol_scale.is_finite() && opts.tol_scale > 0.0) {
        return Err(CliError::Validation("--tol-scale must be a positive number".into()));
    }
    if let Some(h) = opts.step {
        if !(h.is_finite() && h > 0.0) {
            return Err(CliError::Validation("--step must be a positive number".into()));
        }
    }
    let scenario = crate::scenario::load(scenario_path)?;
    std::fs::create_dir_all(&opts.out)?;
    let mut outcome = match stage {
        Stage::Seed => seed(&scenario, opts)?,
        Stage::Dress => dress(&scenario, opts)?,
        Stage::Verify => verify(&scenario, opts)?,
        Stage::Export => export(&scenario, opts)?,
        Stage::Sweep => sweep(&scenario, opts)?,
        Stage::PermuteCheck => permute_check(&scenario, opts)?,
        Stage::Run => run(&scenario, opts)?,
    };
    if !outcome.report.checks.is_empty() {
        let grid = scenario.grid_spec()?;
        let ctx = ReportContext {
            command: stage.name(),
            scenario: scenario.name.as_deref(),
            grid: &grid,
            oracle_step: scenario.checks.pde_oracle.enabled.then(|| oracle_step(&scenario, opts)),
            tol_scale: opts.tol_scale,
        };
        let json = export::report_json(&outcome.report, &ctx);
        outcome.files.push(export::write(&opts.out, "report.json", &json)?);
    }
    Ok(outcome)
}

fn oracle_step(scenario: &Scenario, opts: &Options) -> f64 {
    opts.step.unwrap_or(scenario.checks.pde_oracle.step)
}

/// The metric, with a leave-the-chart diagnostic when some `h_i <= 0`.
fn metric(frame: &ExtendedFrame, grid: &Grid) -> CliResult<(EgoroffMetric, Option<CheckRecord>)> {
    match metric_from_frame(frame, grid) {
        Ok(m) => Ok((m, None)),
        Err(Error::NonPositive { count, min, metric }) => {
            let note = format!("h leaves the positive cone at {count} grid points");
            Ok((*metric, Some(CheckRecord::info("h_positive", min, note))))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn seed(scenario: &Scenario, opts: &Options) -> CliResult<Outcome> {
    let (m, _) = metric(&scenario.vacuum()?, &scenario.grid_spec()?)?;
    let file = export::write(&opts.out, "seed_metric.csv", &export::metric_csv(&m))?;
    Ok(Outcome { report: VerificationReport::new(), files: vec![file] })
}

pub fn dress(scenario: &Scenario, opts: &Options) -> CliResult<Outcome> {
    let (m, diag) = metric(&scenario.frame()?, &scenario.grid_spec()?)?;
    let file = export::write(&opts.out, "metric.csv", &export::metric_csv(&m))?;
    let mut report = VerificationReport::new();
    report.extend_info(diag);
    Ok(Outcome { report, files: vec![file] })
}

trait ReportExt {
    fn extend_info(&mut self, rec: Option<CheckRecord>);
}

impl ReportExt for VerificationReport {
    fn extend_info(&mut self, rec: Option<CheckRecord>) {
        if let Some(r) = rec {
            self.push(r);
        }
    }
}

fn lambda_tag(l: C64) -> String {
    format!("[λ={}{:+}i]", l.re, l.im)
}

pub fn verify(scenario: &Scenario, opts: &Options) -> CliResult<Outcome> {
    let s = opts.tol_scale;
    let checks = &scenario.checks;
    let frame = scenario.frame()?;
    let grid = scenario.grid_spec()?;
    let lambdas = scenario.lambda_values();
    let mut report = VerificationReport::new();

    if checks.reality.enabled {
        report.merge(reality(scenario, &frame, &grid, s)?);
    }

    let (m, diag) = metric(&frame, &grid)?;
    report.extend_info(diag);
    let de = checks.darboux_egoroff;
    let st = checks.structure;
    if de.enabled || st.enabled {
        let de_tol = if de.enabled { de.tol * s } else { f64::INFINITY };
        let st_tol = if st.enabled { st.tol * s } else { f64::INFINITY };
        let mut r = check_darboux_egoroff(&m, de_tol, st_tol);
        r.checks.retain(|c| if c.name.starts_with("beta_") { st.enabled } else { de.enabled });
        report.merge(r);
    }
    if checks.rotation_consistency.enabled {
        report.merge(check_rotation_consistency(&m, checks.rotation_consistency.tol * s));
    }
    if checks.potential.enabled {
        report.merge(check_potential(&m, checks.potential.tol * s));
    }
    for &l in &lambdas {
        if checks.lagrangian.enabled {
            let r = check_lagrangian(&frame, &grid, l, checks.lagrangian.tol * s)?;
            report.merge(prefix_lambda(r, l));
        }
        if checks.position_equation.enabled {
            let r = check_position_equation(&frame, &grid, l, checks.position_equation.tol * s)?;
            report.merge(prefix_lambda(r, l));
        }
    }

    let spherical = is_spherical(&frame);
    if checks.sphere.enabled {
        let tol = checks.sphere.tol * s;
        if !spherical {
            report.push(CheckRecord::skipped("sphere", tol, "frame is not ∂-invariant"));
        } else {
            let c = SphericalSeedData::from_frame(&frame)?.c;
            for &l in lambdas.iter().filter(|l| l.im == 0.0 && l.re != 0.0) {
                let sample = sample_immersion(&frame, &grid, l)?;
                report.merge(prefix_lambda(check_sphere(&sample, &c, tol), l));
            }
        }
    }
    if checks.partial_invariance.enabled {
        let tol = checks.partial_invariance.tol * s;
        if spherical {
            report.merge(check_partial_invariance(&m, tol));
        } else {
            report.push(CheckRecord::skipped("partial_invariance", tol, "frame is not ∂-invariant"));
        }
    }
    if checks.limit_net.enabled {
        let tol = checks.limit_net.tol * s;
        match limit_net(&frame, &grid, tol) {
            Ok(net) => {
                let meta = |r: CheckRecord| r.with_meta("grid_points", grid.len());
                report.push(meta(CheckRecord::measured("limit_net.imaginary", net.imaginary, tol)));
                if let Some(d) = net.derivative_mismatch {
                    report.push(meta(CheckRecord::measured("limit_net.derivative_form", d, tol)));
                }
            }
            Err(Error::NonReal(im)) => report.push(CheckRecord::measured("limit_net.imaginary", im, tol)),
            Err(e) => return Err(e.into()),
        }
    }
    if checks.pde_oracle.enabled {
        report.push(pde_oracle(scenario, &frame, &grid, opts)?);
    }
    Ok(Outcome { report, files: Vec::new() })
}

fn prefix_lambda(mut r: VerificationReport, l: C64) -> VerificationReport {
    for c in &mut r.checks {
        c.name = format!("{}{}", c.name, lambda_tag(l));
    }
    r
}

/// τ/σ reality of the frame at random `(u, λ)`, plus each chain factor.
fn reality(scenario: &Scenario, frame: &ExtendedFrame, grid: &Grid, s: f64) -> CliResult<VerificationReport> {
    let spec = scenario.checks.reality;
    let tol = spec.tol * s;
    let mut rng = StdRng::seed_from_u64(spec.rng_seed);
    let draw = |rng: &mut StdRng| -> (Vec<f64>, C64) {
        let u = grid
            .axes
            .iter()
            .map(|a| if a.points > 1 { rng.gen_range(a.min..=a.max) } else { a.min })
            .collect();
        (u, c64(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)))
    };
    let samples: Vec<(Vec<f64>, C64)> = (0..spec.samples).map(|_| draw(&mut rng)).collect();
    let mut report = check_frame_reality(frame, &samples, tol)?.prefixed("frame");
    let lambdas: Vec<C64> = samples.iter().map(|s| s.1).collect();
    for (k, record) in frame.history().iter().enumerate() {
        let r = check_reality(&record.factor, &lambdas, tol);
        report.merge(r.prefixed(&format!("factor{}", k + 1)));
    }
    Ok(report.prefixed("reality"))
}

/// RK4 integration of the Lax system along an axis-ordered path against
/// the algebraic frame.
fn pde_oracle(scenario: &Scenario, frame: &ExtendedFrame, grid: &Grid, opts: &Options) -> CliResult<CheckRecord> {
    let spec = &scenario.checks.pde_oracle;
    let tol = spec.tol * opts.tol_scale;
    let step = oracle_step(scenario, opts);
    let target = spec.target.clone().unwrap_or_else(|| grid.axes.iter().map(|a| a.max).collect());
    if target.len() != scenario.n {
        return Err(CliError::Validation(format!("pde_oracle target must have n = {} entries", scenario.n)));
    }
    let lambda = complex(spec.lambda);
    let order: Vec<usize> = (0..scenario.n).collect();
    let path = PathSpec::axis_ordered(&target, &order);
    let reference = frame_eval(frame, &target, lambda)?;
    let rec = match frame_convergence(frame, lambda, &path, step, Some(&reference)) {
        Ok(r) => {
            let rec = CheckRecord::measured("pde_oracle", r.residual.unwrap_or(f64::NAN), tol);
            match r.order {
                Some(p) => rec.with_meta("order", format!("{p:.3}")),
                None => rec.with_note("residuals at rounding level; order not estimated"),
            }
        }
        Err(Error::StepTooLarge(p)) => {
            CheckRecord::failed("pde_oracle", tol, format!("observed order {p:.3} < 3; reduce --step"))
        }
        Err(e) => return Err(e.into()),
    };
    Ok(rec.with_meta("step", step).with_meta("lambda", lambda))
}

fn export_stem(scenario: &Scenario, k: usize) -> String {
    format!("{}_{k}", scenario.export.path)
}

pub fn export(scenario: &Scenario, opts: &Options) -> CliResult<Outcome> {
    let frame = scenario.frame()?;
    let slice = scenario.slice_grid()?;
    let mut files = Vec::new();
    for (k, &l) in scenario.lambda_values().iter().enumerate() {
        let sample = sample_immersion(&frame, &slice, l)?;
        for format in &scenario.export.formats {
            let stem = export_stem(scenario, k);
            files.push(match format {
                ExportFormat::Csv => export::write(&opts.out, &format!("{stem}.csv"), &export::immersion_csv(&sample))?,
                ExportFormat::Obj => export::write(
                    &opts.out,
                    &format!("{stem}.obj"),
                    &export::immersion_obj(&sample, scenario.export.embedding),
                )?,
            });
        }
    }
    Ok(Outcome { report: VerificationReport::new(), files })
}

/// `X` on the export slice for every λ in order; the slice at `λ = 0`
/// must be real.
pub fn sweep(scenario: &Scenario, opts: &Options) -> CliResult<Outcome> {
    let frame = scenario.frame()?;
    let slice = scenario.slice_grid()?;
    let tol = scenario.checks.limit_net.tol * opts.tol_scale;
    let mut report = VerificationReport::new();
    let mut files = Vec::new();
    for (k, &l) in scenario.lambda_values().iter().enumerate() {
        let sample = sample_immersion(&frame, &slice, l)?;
        files.push(export::write(&opts.out, &format!("sweep_{k}.csv"), &export::immersion_csv(&sample))?);
        let imaginary = sample.x.iter().map(|x| x.iter().fold(0.0f64, |m, z| m.max(z.im.abs()))).fold(0.0, f64::max);
        let name = format!("sweep.max_imaginary{}", lambda_tag(l));
        report.push(if l == c64(0.0, 0.0) {
            CheckRecord::measured(name, imaginary, tol)
        } else {
            CheckRecord::info(name, imaginary, "realness is only required at λ = 0")
        });
    }
    Ok(Outcome { report, files })
}

pub fn permute_check(scenario: &Scenario, opts: &Options) -> CliResult<Outcome> {
    let spec = scenario
        .permute
        .as_ref()
        .ok_or_else(|| CliError::Validation("permute-check needs a \"permute\" section".into()))?;
    let n = scenario.n;
    let (pi1, pi2) = (spec.projection1.build(n)?, spec.projection2.build(n)?);
    let (z1, z2) = (complex(spec.z1), complex(spec.z2));
    let tol = spec.tol * opts.tol_scale;
    let lambdas = scenario.lambda_values();
    if lambdas.is_empty() {
        return Err(CliError::Validation("permute-check needs at least one λ".into()));
    }
    let frame = scenario.frame()?;
    let grid = scenario.grid_spec()?;
    let (_, _, mut report) = dress_permuted(&frame, z1, &pi1, z2, &pi2, &grid, &lambdas, tol)
        .map_err(|e| CliError::Validation(format!("permute: {e}")))?;
    let (rho1, rho2) = dressing_core::permute_factors(z1, &pi1, z2, &pi2)?;
    let g = |z: C64, p: &dressing_core::HermitianProjection, l: C64| {
        dressing_core::TwoPointFactor::at(z, p.clone())?.eval(l)
    };
    let mut loop_residual = 0.0f64;
    for &l in &lambdas {
        let lhs = g(z2, &rho2, l)? * g(z1, &pi1, l)?;
        let rhs = g(z1, &rho1, l)? * g(z2, &pi2, l)?;
        loop_residual = loop_residual.max(max_abs(&(lhs - rhs)));
    }
    report.push(
        CheckRecord::measured("permutability.loop_identity", loop_residual, tol).with_meta("lambda_samples", lambdas.len()),
    );
    Ok(Outcome { report, files: Vec::new() })
}

/// dress, verify, export.
pub fn run(scenario: &Scenario, opts: &Options) -> CliResult<Outcome> {
    let mut out = dress(scenario, opts)?;
    out.absorb(verify(scenario, opts)?);
    out.absorb(export(scenario, opts)?);
    Ok(out)
}
