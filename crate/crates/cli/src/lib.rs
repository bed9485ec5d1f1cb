//! Run orchestration behind the `torus-mfg` binary.
//!
//! [`run`] dispatches on the configured mode, writes every artifact into the
//! output directory and always finishes with `manifest.json`, which lists the
//! written files with their row and byte counts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use torus_mfg::analysis::{
    explicit_ergodic_oracle, long_time_experiment, weak_solution_residuals, ErgodicReference, LongTimeReport,
    ResidualReport,
};
use torus_mfg::io::{
    export_field, export_flux, export_stationary, field_from_bytes, flux_from_bytes, import_field, import_flux,
    ExportFormat, ExportSummary, Mode, RunConfig,
};
use torus_mfg::solver::{solve_ergodic, solve_time_dependent};
use torus_mfg::{AssumptionReport, GapRecord, MfgError, SolutionBundle};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

/// Reference-model solution on the default 64 x 64 grid, solved to `tol_gap = 1e-6`.
pub mod fixture {
    pub const PHI: &[u8] = include_bytes!("../fixtures/reference/phi.bin");
    pub const M: &[u8] = include_bytes!("../fixtures/reference/m.bin");
    pub const W: &[u8] = include_bytes!("../fixtures/reference/w.bin");
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub path: PathBuf,
    pub format: String,
    pub rows: usize,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub cli: &'static str,
    pub core: &'static str,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct WallTimes {
    pub total_seconds: f64,
    pub compute_seconds: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub final_record: Option<GapRecord>,
    pub failure: Option<String>,
}

/// Mode-specific scalars.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Results {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub longtime: Option<LongTimeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verified: Option<bool>,
}

/// Everything needed to reproduce and audit a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub mode: Mode,
    pub config: RunConfig,
    pub assumptions: Option<AssumptionReport>,
    pub versions: Versions,
    pub wall_times: WallTimes,
    pub convergence: Convergence,
    pub results: Results,
    pub files: Vec<FileEntry>,
    pub exit_code: i32,
}

/// Outcome of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
}

struct Writer {
    dir: PathBuf,
    formats: Vec<ExportFormat>,
    files: Vec<FileEntry>,
}

impl Writer {
    fn record(&mut self, name: &str, path: PathBuf, format: &str, summary: ExportSummary) {
        self.files.push(FileEntry {
            name: name.to_string(),
            path,
            format: format.to_string(),
            rows: summary.rows,
            bytes: summary.bytes,
        });
    }

    fn each_format(
        &mut self,
        name: &str,
        write: impl Fn(&Path, ExportFormat) -> torus_mfg::Result<ExportSummary>,
    ) -> torus_mfg::Result<()> {
        for format in self.formats.clone() {
            let path = self.dir.join(format!("{name}.{}", format.extension()));
            let summary = write(&path, format)?;
            let label = match format {
                ExportFormat::Csv => "csv",
                ExportFormat::Binary => "binary-f64",
            };
            self.record(name, path, label, summary);
        }
        Ok(())
    }

    fn text(&mut self, name: &str, file: &str, format: &str, body: &str) -> torus_mfg::Result<()> {
        let path = self.dir.join(file);
        fs::write(&path, body)?;
        let rows = if format == "csv" {
            body.lines().count().saturating_sub(1)
        } else {
            0
        };
        self.record(
            name,
            path,
            format,
            ExportSummary {
                rows,
                bytes: body.len() as u64,
            },
        );
        Ok(())
    }

    fn history(&mut self, history: &[GapRecord]) -> torus_mfg::Result<()> {
        let mut body = String::from("iteration,primal,dual,gap,relative_gap,feasibility,mass_drift\n");
        for r in history {
            body.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.iteration, r.primal, r.dual, r.gap, r.relative_gap, r.feasibility, r.mass_drift
            ));
        }
        self.text("gap_history", "gap_history.csv", "csv", &body)
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> torus_mfg::Result<()> {
        let body = serde_json::to_string_pretty(value).map_err(|e| MfgError::Io(std::io::Error::other(e)))?;
        self.text(name, &format!("{name}.json"), "json", &body)
    }
}

/// Maps an error to its exit status.
pub fn exit_code(err: &MfgError) -> i32 {
    match err {
        MfgError::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        _ => EXIT_CONFIG,
    }
}

/// Reads, parses and runs a configuration file; `None` runs the defaults.
pub fn run_path(config: Option<&Path>, mode: Mode, opts: &RunOptions) -> Result<RunOutcome, MfgError> {
    let text = match config {
        Some(path) => fs::read_to_string(path)?,
        None => format!(
            "schema_version = {}\nmode = \"{}\"\n",
            torus_mfg::io::SCHEMA_VERSION,
            mode.name()
        ),
    };
    let mut parsed = torus_mfg::io::parse_config(&text)?;
    if config.is_some() && text_sets_mode(&text) && parsed.mode != mode {
        return Err(MfgError::Schema {
            path: "mode".into(),
            message: format!(
                "config declares mode {:?} but the {} subcommand was used",
                parsed.mode,
                mode.name()
            ),
        });
    }
    parsed.mode = mode;
    run(&parsed, opts)
}

fn text_sets_mode(text: &str) -> bool {
    text.parse::<toml::Table>()
        .map(|t| t.contains_key("mode"))
        .unwrap_or(false)
}

/// Runs one configuration. Errors before any output is produced (schema,
/// assumptions, I/O) are returned as `Err`; solver outcomes, including
/// non-convergence, are reported through the manifest and the exit code.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunOutcome, MfgError> {
    let start = Instant::now();
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.solver.rng_seed = seed;
    }
    if let Some(out) = &opts.out {
        config.output.directory = out.clone();
    }
    let assumptions = config.validate()?;
    let (grid, model) = config.build()?;
    fs::create_dir_all(&config.output.directory)?;
    let mut writer = Writer {
        dir: config.output.directory.clone(),
        formats: config.output.formats.clone(),
        files: Vec::new(),
    };
    let mut results = Results::default();
    let compute = Instant::now();

    let (convergence, exit) = match config.mode {
        Mode::Solve => {
            let bundle = solve_time_dependent(&model, &grid, &config.solver)?;
            write_bundle(&mut writer, &bundle)?;
            results.residuals = Some(weak_solution_residuals(&bundle, &model)?);
            let exit = if bundle.converged { EXIT_OK } else { EXIT_NONCONVERGENCE };
            (summarize(bundle.converged, bundle.iterations, bundle.last()), exit)
        }
        Mode::Ergodic => {
            let sol = solve_ergodic(&model, &grid, &config.solver)?;
            writer.each_format("phi", |p, f| export_stationary(&grid, &sol.phi, p, f))?;
            writer.each_format("m", |p, f| export_stationary(&grid, &sol.m, p, f))?;
            writer.each_format("w", |p, f| export_stationary(&grid, &sol.w, p, f))?;
            writer.history(&sol.history)?;
            results.lambda = Some(sol.lambda);
            results.oracle_lambda = explicit_ergodic_oracle(&model, &grid).ok().map(|r| r.lambda);
            let exit = if sol.converged { EXIT_OK } else { EXIT_NONCONVERGENCE };
            (summarize(sol.converged, sol.iterations, sol.last()), exit)
        }
        Mode::Longtime => {
            let reference = match explicit_ergodic_oracle(&model, &grid) {
                Ok(r) => r,
                Err(MfgError::WrongFamily(_)) => {
                    let sol = solve_ergodic(&model, &grid, &config.solver)?;
                    ErgodicReference {
                        lambda: sol.lambda,
                        m: sol.m,
                    }
                }
                Err(e) => return Err(e),
            };
            let report = long_time_experiment(&model, &grid, &config.longtime.horizons, &reference, &config.solver)?;
            write_longtime(&mut writer, &report)?;
            let convergence = Convergence {
                converged: report.all_converged,
                iterations: report.rows.iter().map(|r| r.iterations).sum(),
                final_record: None,
                failure: (!report.all_converged).then(|| "some horizons stopped at max_iters".to_string()),
            };
            let exit = if report.all_converged {
                EXIT_OK
            } else {
                EXIT_NONCONVERGENCE
            };
            results.lambda = Some(reference.lambda);
            results.longtime = Some(report);
            (convergence, exit)
        }
        Mode::Verify => {
            let bundle = load_fixture(&config, &grid, &model)?;
            let report = weak_solution_residuals(&bundle, &model)?;
            let v = &config.verify;
            let ok = report.hj_violation_support <= v.max_hj_violation
                && report.identity_gap <= v.max_identity_gap * grid.horizon()
                && report.continuity_residual <= v.max_continuity_residual
                && report.terminal_violation <= v.max_terminal_violation;
            writer.json("residuals", &report)?;
            results.residuals = Some(report);
            results.verified = Some(ok);
            let mut convergence = summarize(ok, 0, bundle.last());
            if !ok {
                convergence.failure = Some("residuals exceed the verify thresholds".into());
            }
            (convergence, if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
    };
    let compute_seconds = compute.elapsed().as_secs_f64();
    finish(
        config,
        assumptions,
        start,
        compute_seconds,
        convergence,
        results,
        writer,
        exit,
    )
}

fn write_longtime(writer: &mut Writer, report: &LongTimeReport) -> torus_mfg::Result<()> {
    let mut body = String::from(
        "horizon,n_t,mu_error,psi_error,mu_error_l2,psi_error_l2,iterations,converged,relative_gap,seconds\n",
    );
    for r in &report.rows {
        body.push_str(&format!(
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{:.6}\n",
            r.horizon,
            r.n_t,
            r.mu_error,
            r.psi_error,
            r.mu_error_l2,
            r.psi_error_l2,
            r.iterations,
            r.converged,
            r.relative_gap,
            r.seconds
        ));
    }
    writer.text("longtime", "longtime.csv", "csv", &body)?;
    let slope = |s: Option<f64>| s.map_or("nan".to_string(), |v| format!("{v:.16e}"));
    let fit = format!(
        "quantity,slope\nmu_error,{}\npsi_error,{}\n",
        slope(report.mu_slope),
        slope(report.psi_slope)
    );
    writer.text("longtime_fit", "longtime_fit.csv", "csv", &fit)
}

fn summarize(converged: bool, iterations: usize, last: &GapRecord) -> Convergence {
    Convergence {
        converged,
        iterations,
        final_record: Some(*last),
        failure: (!converged).then(|| {
            format!(
                "stopped at relative gap {:e}, feasibility {:e}",
                last.relative_gap, last.feasibility
            )
        }),
    }
}

fn write_bundle(writer: &mut Writer, bundle: &SolutionBundle) -> torus_mfg::Result<()> {
    writer.each_format("phi", |p, f| export_field(&bundle.phi, p, f))?;
    writer.each_format("alpha", |p, f| export_field(&bundle.alpha, p, f))?;
    writer.each_format("m", |p, f| export_field(&bundle.m, p, f))?;
    writer.each_format("w", |p, f| export_flux(&bundle.w, p, f))?;
    writer.history(&bundle.history)
}

fn load_fixture(
    config: &RunConfig,
    grid: &torus_mfg::Grid,
    model: &torus_mfg::ModelSpec,
) -> torus_mfg::Result<SolutionBundle> {
    let (phi, m, w) = match &config.verify.fixture {
        Some(dir) => (
            import_field(&dir.join("phi.bin"))?,
            import_field(&dir.join("m.bin"))?,
            import_flux(&dir.join("w.bin"))?,
        ),
        None => (
            field_from_bytes(fixture::PHI)?,
            field_from_bytes(fixture::M)?,
            flux_from_bytes(fixture::W)?,
        ),
    };
    if phi.grid() != grid {
        return Err(MfgError::Schema {
            path: "grid".into(),
            message: format!(
                "fixture grid {:?} differs from the configured grid {:?}",
                phi.grid(),
                grid
            ),
        });
    }
    SolutionBundle::from_fields(model, phi, m, w)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    config: RunConfig,
    assumptions: AssumptionReport,
    start: Instant,
    compute_seconds: f64,
    convergence: Convergence,
    results: Results,
    writer: Writer,
    exit_code: i32,
) -> Result<RunOutcome, MfgError> {
    let manifest_path = writer.dir.join("manifest.json");
    let manifest = RunManifest {
        mode: config.mode,
        config,
        assumptions: Some(assumptions),
        versions: Versions {
            cli: env!("CARGO_PKG_VERSION"),
            core: torus_mfg::VERSION,
        },
        wall_times: WallTimes {
            total_seconds: start.elapsed().as_secs_f64(),
            compute_seconds,
        },
        convergence,
        results,
        files: writer.files,
        exit_code,
    };
    let body = serde_json::to_string_pretty(&manifest).map_err(|e| MfgError::Io(std::io::Error::other(e)))?;
    fs::write(&manifest_path, body)?;
    Ok(RunOutcome {
        exit_code,
        manifest,
        manifest_path,
    })
}
