//! Command-line driver for the star-network parabolic solver.
//!
//! Exit codes: `0` success, `2` usage or malformed input, `3` data failed
//! validation, `4` a certificate or comparison check failed, `5` the solver
//! itself failed. Every failure prints a single-line reason on stderr.
//!
//! All file outputs are deterministic: rerunning the same command over the
//! same inputs reproduces every output byte for byte (JSON keys are sorted,
//! no timestamps or machine-specific paths are embedded).

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use starpde::certificates::{
    certify, constants_full, observe_cube, observe_trajectory, ClassicalNorms, LocalTimeNorms,
    NormInputs, ObservedNorms,
};
use starpde::elliptic::Scheme;
use starpde::local_time::{kirchhoff_residual, run_backward, BetaMode};
use starpde::network::{build_grid, GridSpec, SolutionCube, Thresholds};
use starpde::problem::{
    validate_assumptions, validate_classical, validate_declared, validate_declared_classical,
    ClassicalProblemData, ProblemData, ProblemDoc, ProblemKind, ValidationReport,
};
use starpde::rothe::{march_classical, Trajectory};
use starpde::verification::{
    comparison_test, manufactured_cosine, refinement_sweep, Axis, ManufacturedCase,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Check the structural assumptions and declared norm bounds of a problem.
    Validate,
    /// March a single junction problem forward in time.
    SolveClassical,
    /// Run the backward level recursion for the local-time junction problem.
    SolveLocalTime,
    /// Solve, then check the observed norms against the a priori constants.
    Certify,
    /// Measure per-axis convergence orders on a built-in exact solution.
    Converge,
    /// Check solution monotonicity under data perturbations.
    Compare,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Validate => "validate",
            Mode::SolveClassical => "solve-classical",
            Mode::SolveLocalTime => "solve-local-time",
            Mode::Certify => "certify",
            Mode::Converge => "converge",
            Mode::Compare => "compare",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    /// One-sided drift discretization; preserves the discrete maximum
    /// principle.
    Upwind,
    /// Centered drift discretization; second-order accurate in space.
    Centered,
}

impl SchemeArg {
    fn to_scheme(self) -> Scheme {
        match self {
            SchemeArg::Upwind => Scheme::Upwind,
            SchemeArg::Centered => Scheme::Centered,
        }
    }
    fn name(self) -> &'static str {
        match self {
            SchemeArg::Upwind => "upwind",
            SchemeArg::Centered => "centered",
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "starpde",
    version,
    about = "Finite-difference solver for linear parabolic equations on a star-shaped network \
             with a dynamic (local-time) Kirchhoff junction condition",
    allow_negative_numbers = true
)]
struct Cli {
    /// Operation to perform.
    #[arg(long, value_enum)]
    mode: Mode,
    /// Problem description (JSON). Ignored by `converge`.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Time steps.
    #[arg(long, default_value_t = 16)]
    nt: usize,
    /// Spatial intervals per ray.
    #[arg(long, default_value_t = 32)]
    nx: usize,
    /// Level steps (local-time problems only).
    #[arg(long, default_value_t = 16)]
    nl: usize,
    /// Drift discretization.
    #[arg(long, value_enum, default_value_t = SchemeArg::Upwind)]
    scheme: SchemeArg,
    /// Multiplicative slack applied to certified upper bounds
    /// (`observed <= bound * (1 + slack)`); may be negative.
    #[arg(long, default_value_t = 0.05)]
    slack: f64,
    /// Directory for file outputs (created if missing). Without it, results
    /// go to stdout only.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Drop the per-level junction compatibility corrections (the solution
    /// then violates the corrected junction relation by exactly those
    /// constants).
    #[arg(long)]
    naive_beta: bool,
    /// Worker threads for `converge` (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
}

struct Failure {
    code: i32,
    reason: String,
}

fn usage(reason: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        reason: reason.into(),
    }
}

fn invalid(reason: impl Into<String>) -> Failure {
    Failure {
        code: 3,
        reason: reason.into(),
    }
}

fn unsatisfied(reason: impl Into<String>) -> Failure {
    Failure {
        code: 4,
        reason: reason.into(),
    }
}

fn solver(err: starpde::Error) -> Failure {
    Failure {
        code: 5,
        reason: format!("solver error: {err}"),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(failure) => {
            eprintln!("{}", failure.reason);
            std::process::exit(failure.code);
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| usage(format!("could not configure thread pool: {e}")))?;
    }
    match cli.mode {
        Mode::Validate => mode_validate(&cli),
        Mode::SolveClassical => mode_solve_classical(&cli),
        Mode::SolveLocalTime => mode_solve_local_time(&cli),
        Mode::Certify => mode_certify(&cli),
        Mode::Converge => mode_converge(&cli),
        Mode::Compare => mode_compare(&cli),
    }
}

// ---------------------------------------------------------------------------
// Problem loading
// ---------------------------------------------------------------------------

fn load_doc(cli: &Cli) -> Result<(ProblemDoc, String), Failure> {
    let path = cli
        .problem
        .as_ref()
        .ok_or_else(|| usage(format!("--mode {} requires --problem", cli.mode.name())))?;
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let doc = ProblemDoc::from_json(&text).map_err(|e| usage(format!("bad problem file: {e}")))?;
    Ok((doc, path.display().to_string()))
}

fn local_time_grid(data: &ProblemData, cli: &Cli) -> Result<GridSpec, Failure> {
    build_grid(
        data.network,
        data.horizon,
        data.l_max,
        cli.nt,
        cli.nx,
        cli.nl,
        &Thresholds::none(),
    )
    .map_err(|e| usage(format!("bad grid: {e}")))
}

fn classical_grid(data: &ClassicalProblemData, cli: &Cli) -> Result<GridSpec, Failure> {
    build_grid(
        data.network,
        data.horizon,
        1.0,
        cli.nt,
        cli.nx,
        1,
        &Thresholds::none(),
    )
    .map_err(|e| usage(format!("bad grid: {e}")))
}

fn beta_mode(cli: &Cli) -> BetaMode {
    if cli.naive_beta {
        BetaMode::Naive
    } else {
        BetaMode::Compliant
    }
}

// ---------------------------------------------------------------------------
// Deterministic output files
// ---------------------------------------------------------------------------

struct OutputSet {
    dir: PathBuf,
    hashes: Vec<(String, String)>,
}

impl OutputSet {
    fn create(dir: &Path) -> Result<OutputSet, Failure> {
        fs::create_dir_all(dir)
            .map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            hashes: Vec::new(),
        })
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        self.hashes.push((name.to_string(), hex(&hasher.finalize())));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        self.write_bytes(name, sorted_json(value)?.as_bytes())
    }

    /// Write `manifest.json` describing the command and hashing every file
    /// written so far. Must be the last write.
    fn finish(mut self, cli: &Cli, problem: Option<&str>) -> Result<(), Failure> {
        let manifest = serde_json::json!({
            "command": {
                "mode": cli.mode.name(),
                "problem": problem,
                "nt": cli.nt,
                "nx": cli.nx,
                "nl": cli.nl,
                "scheme": cli.scheme.name(),
                "slack": cli.slack,
                "naive_beta": cli.naive_beta,
            },
            "outputs": self
                .hashes
                .iter()
                .cloned()
                .collect::<std::collections::BTreeMap<String, String>>(),
        });
        self.write_bytes("manifest.json", sorted_json(&manifest)?.as_bytes())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Serialize with sorted object keys and a trailing newline.
fn sorted_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let value = serde_json::to_value(value)
        .map_err(|e| usage(format!("serialization failed: {e}")))?;
    let mut text = serde_json::to_string_pretty(&value)
        .map_err(|e| usage(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// One time-space plane as CSV rows `t, ray, x, u`.
fn plane_csv(fields: &[&starpde::network::NetworkField], grid: &GridSpec) -> Result<Vec<u8>, Failure> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let io_err = |e: csv::Error| usage(format!("csv writing failed: {e}"));
    writer.write_record(["t", "ray", "x", "u"]).map_err(io_err)?;
    for (k, field) in fields.iter().enumerate() {
        for i in 0..field.ray_count() {
            for j in 0..=grid.n_x() {
                writer
                    .write_record([
                        sci(grid.t_node(k)),
                        i.to_string(),
                        sci(grid.x_node(j)),
                        sci(field.value(i, j)),
                    ])
                    .map_err(io_err)?;
            }
        }
    }
    writer
        .into_inner()
        .map_err(|e| usage(format!("csv writing failed: {e}")))
}

/// Zero-padded per-level file name so directory listings sort by level.
fn level_file_name(p: usize) -> String {
    format!("level_{p:04}.csv")
}

fn write_cube_planes(out: &mut OutputSet, cube: &SolutionCube) -> Result<(), Failure> {
    let grid = cube.grid();
    for p in 0..=grid.n_l() {
        let fields: Vec<_> = (0..=grid.n_t()).map(|k| cube.field(p, k)).collect();
        out.write_bytes(&level_file_name(p), &plane_csv(&fields, grid)?)?;
    }
    Ok(())
}

fn trajectory_csv(traj: &Trajectory) -> Result<Vec<u8>, Failure> {
    let grid = traj.grid();
    let fields: Vec<_> = (0..=grid.n_t()).map(|k| traj.field(k)).collect();
    plane_csv(&fields, grid)
}

fn print_validation(report: &ValidationReport) {
    for entry in &report.entries {
        let state = if entry.pass { "PASS" } else { "FAIL" };
        match &entry.worst {
            Some(at) => println!(
                "{state}  {} (margin {:+.3e}, tol {:.3e}, worst at {at})",
                entry.name, entry.margin, entry.tol
            ),
            None => println!(
                "{state}  {} (margin {:+.3e}, tol {:.3e})",
                entry.name, entry.margin, entry.tol
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// Modes
// ---------------------------------------------------------------------------

fn validated_report(doc: ProblemDoc, cli: &Cli) -> Result<(ValidationReport, String), Failure> {
    match doc.kind {
        ProblemKind::LocalTime => {
            let data = doc
                .into_local_time()
                .map_err(|e| usage(format!("bad problem file: {e}")))?;
            let grid = local_time_grid(&data, cli)?;
            let mut report = validate_assumptions(&data, &grid, None)
                .map_err(|e| invalid(format!("validation aborted: {e}")))?;
            let declared = validate_declared(&data, &grid)
                .map_err(|e| invalid(format!("validation aborted: {e}")))?;
            report.merge(declared);
            Ok((report, "local-time".to_string()))
        }
        ProblemKind::Classical => {
            let data = doc
                .into_classical()
                .map_err(|e| usage(format!("bad problem file: {e}")))?;
            let grid = classical_grid(&data, cli)?;
            let mut report = validate_classical(&data, &grid, None)
                .map_err(|e| invalid(format!("validation aborted: {e}")))?;
            let declared = validate_declared_classical(&data, &grid)
                .map_err(|e| invalid(format!("validation aborted: {e}")))?;
            report.merge(declared);
            Ok((report, "classical".to_string()))
        }
    }
}

fn mode_validate(cli: &Cli) -> Result<(), Failure> {
    let (doc, path) = load_doc(cli)?;
    let (report, kind) = validated_report(doc, cli)?;
    print_validation(&report);
    if let Some(dir) = &cli.out {
        let mut out = OutputSet::create(dir)?;
        out.write_json(
            "validation.json",
            &serde_json::json!({ "kind": kind, "report": &report }),
        )?;
        out.finish(cli, Some(&path))?;
    }
    if report.pass {
        println!("validation: PASS ({} checks)", report.entries.len());
        Ok(())
    } else {
        let first = report
            .entries
            .iter()
            .find(|e| !e.pass)
            .map(|e| e.name.clone())
            .unwrap_or_default();
        Err(invalid(format!("validation failed: {first}")))
    }
}

/// Structural validation gate used by the solving modes.
fn require_valid_local_time(data: &ProblemData, grid: &GridSpec) -> Result<(), Failure> {
    let report = validate_assumptions(data, grid, None)
        .map_err(|e| invalid(format!("validation aborted: {e}")))?;
    if !report.pass {
        let first = report
            .entries
            .iter()
            .find(|e| !e.pass)
            .map(|e| e.name.clone())
            .unwrap_or_default();
        return Err(invalid(format!("data fails validation: {first}")));
    }
    Ok(())
}

fn require_valid_classical(data: &ClassicalProblemData, grid: &GridSpec) -> Result<(), Failure> {
    let report = validate_classical(data, grid, None)
        .map_err(|e| invalid(format!("validation aborted: {e}")))?;
    if !report.pass {
        let first = report
            .entries
            .iter()
            .find(|e| !e.pass)
            .map(|e| e.name.clone())
            .unwrap_or_default();
        return Err(invalid(format!("data fails validation: {first}")));
    }
    Ok(())
}

fn mode_solve_local_time(cli: &Cli) -> Result<(), Failure> {
    let (doc, path) = load_doc(cli)?;
    let data = doc
        .into_local_time()
        .map_err(|e| usage(format!("bad problem file: {e}")))?;
    let grid = local_time_grid(&data, cli)?;
    require_valid_local_time(&data, &grid)?;
    let scheme = cli.scheme.to_scheme();
    let cube = run_backward(&data, &grid, scheme, beta_mode(cli)).map_err(solver)?;
    let residual = kirchhoff_residual(&cube, &data, &grid, scheme).map_err(solver)?;
    let observed = observe_cube(&cube);
    println!(
        "solved {} levels x {} steps ({} rays, {} nodes/ray): sup |u| = {:.6e}",
        grid.n_l() + 1,
        grid.n_t() + 1,
        data.network.ray_count(),
        grid.n_x() + 1,
        observed.sup_u
    );
    println!(
        "junction relation residual {:.6e} (certified window), scheme defect {:.6e}",
        residual.relation_sup, residual.scheme_defect_sup
    );
    if let Some(dir) = &cli.out {
        let mut out = OutputSet::create(dir)?;
        write_cube_planes(&mut out, &cube)?;
        out.write_json(
            "summary.json",
            &serde_json::json!({
                "kind": "local-time",
                "scheme": cli.scheme.name(),
                "beta_mode": if cli.naive_beta { "naive" } else { "compliant" },
                "grid": { "nt": grid.n_t(), "nx": grid.n_x(), "nl": grid.n_l() },
                "observed": &observed,
                "junction_relation_sup": residual.relation_sup,
                "junction_scheme_defect_sup": residual.scheme_defect_sup,
                "junction_relation_sup_full": residual.relation_sup_full,
                "junction_scheme_defect_sup_full": residual.scheme_defect_sup_full,
            }),
        )?;
        out.finish(cli, Some(&path))?;
    }
    Ok(())
}

fn mode_solve_classical(cli: &Cli) -> Result<(), Failure> {
    let (doc, path) = load_doc(cli)?;
    let data = doc
        .into_classical()
        .map_err(|e| usage(format!("bad problem file: {e}")))?;
    let grid = classical_grid(&data, cli)?;
    require_valid_classical(&data, &grid)?;
    let traj = march_classical(&data, &grid, cli.scheme.to_scheme()).map_err(solver)?;
    let observed = observe_trajectory(&traj);
    println!(
        "marched {} steps ({} rays, {} nodes/ray): sup |u| = {:.6e}, junction quotient {:.6e}",
        grid.n_t(),
        data.network.ray_count(),
        grid.n_x() + 1,
        observed.sup_u,
        observed.junction_quotient
    );
    if let Some(dir) = &cli.out {
        let mut out = OutputSet::create(dir)?;
        out.write_bytes("trajectory.csv", &trajectory_csv(&traj)?)?;
        out.write_json(
            "summary.json",
            &serde_json::json!({
                "kind": "classical",
                "scheme": cli.scheme.name(),
                "grid": { "nt": grid.n_t(), "nx": grid.n_x() },
                "observed": &observed,
            }),
        )?;
        out.finish(cli, Some(&path))?;
    }
    Ok(())
}

fn mode_certify(cli: &Cli) -> Result<(), Failure> {
    let (doc, path) = load_doc(cli)?;
    let scheme = cli.scheme.to_scheme();
    let (constants, observed) = match doc.kind {
        ProblemKind::LocalTime => {
            let data = doc
                .into_local_time()
                .map_err(|e| usage(format!("bad problem file: {e}")))?;
            let grid = local_time_grid(&data, cli)?;
            require_valid_local_time(&data, &grid)?;
            let norms = LocalTimeNorms::gather(&data, &grid)
                .map_err(|e| invalid(format!("norm gathering failed: {e}")))?;
            let constants = constants_full(&NormInputs::LocalTime(norms));
            let cube = run_backward(&data, &grid, scheme, beta_mode(cli)).map_err(solver)?;
            (constants, ObservedNorms::LocalTime(observe_cube(&cube)))
        }
        ProblemKind::Classical => {
            let data = doc
                .into_classical()
                .map_err(|e| usage(format!("bad problem file: {e}")))?;
            let grid = classical_grid(&data, cli)?;
            require_valid_classical(&data, &grid)?;
            let norms = ClassicalNorms::gather(&data, &grid)
                .map_err(|e| invalid(format!("norm gathering failed: {e}")))?;
            let constants = constants_full(&NormInputs::Classical(norms));
            let traj = march_classical(&data, &grid, scheme).map_err(solver)?;
            (constants, ObservedNorms::Classical(observe_trajectory(&traj)))
        }
    };
    let report = certify(&observed, &constants, cli.slack);
    for entry in &report.entries {
        println!(
            "{}  {} (observed {:.6e} {} bound {:.6e}, slack {})",
            if entry.pass { "PASS" } else { "FAIL" },
            entry.name,
            entry.observed,
            entry.relation,
            entry.bound,
            entry.slack
        );
    }
    for value in &report.reported {
        match value.reference {
            Some(reference) => println!(
                "INFO  {} = {:.6e} (reference {:.6e})",
                value.name, value.observed, reference
            ),
            None => println!("INFO  {} = {:.6e}", value.name, value.observed),
        }
    }
    if let Some(dir) = &cli.out {
        let mut out = OutputSet::create(dir)?;
        out.write_json(
            "certificate.json",
            &serde_json::json!({
                "scheme": cli.scheme.name(),
                "slack": cli.slack,
                "constants": &constants,
                "observed": &observed,
                "report": &report,
            }),
        )?;
        out.finish(cli, Some(&path))?;
    }
    if report.pass {
        println!("certificate: PASS ({} bounds)", report.entries.len());
        Ok(())
    } else {
        let first = report
            .entries
            .iter()
            .find(|e| !e.pass)
            .map(|e| e.name.clone())
            .unwrap_or_default();
        Err(unsatisfied(format!("certificate failed: {first}")))
    }
}

/// The convergence target: a separable exact solution with every term of the
/// system active (drift, absorption, junction absorption, level coupling).
fn converge_case() -> Result<ManufacturedCase, Failure> {
    let network = starpde::network::StarNetwork::new(3, 1.0).map_err(solver)?;
    manufactured_cosine(
        network,
        1.0,
        1.0,
        1.0,
        0.5,
        1.0,
        0.2,
        1.0,
        Arc::new(|l: f64| l * l),
        Arc::new(|l: f64| 2.0 * l),
    )
    .map_err(solver)
}

#[derive(Serialize)]
struct SweepReport {
    axis: &'static str,
    order: f64,
    resolutions: Vec<usize>,
    spacings: Vec<f64>,
    differences: Vec<f64>,
}

fn mode_converge(cli: &Cli) -> Result<(), Failure> {
    use rayon::prelude::*;
    let scheme = cli.scheme.to_scheme();
    let plans: Vec<(Axis, Vec<usize>, (usize, usize, usize))> = vec![
        (Axis::Time, vec![16, 32, 64, 128], (0, 32, 16)),
        (Axis::Space, vec![32, 64, 128, 256], (16, 0, 16)),
        (Axis::Level, vec![16, 32, 64, 128], (16, 32, 0)),
    ];
    let sweeps: Vec<SweepReport> = plans
        .into_par_iter()
        .map(|(axis, resolutions, base)| {
            let case = converge_case()?;
            let sweep = refinement_sweep(&case, axis, &resolutions, base, scheme).map_err(solver)?;
            Ok(SweepReport {
                axis: axis.name(),
                order: sweep.order,
                resolutions: sweep.points.iter().map(|p| p.resolution).collect(),
                spacings: sweep.points.iter().map(|p| p.spacing).collect(),
                differences: sweep.points.iter().map(|p| p.difference).collect(),
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    for sweep in &sweeps {
        println!(
            "{} axis: order {:.3} over resolutions {:?}",
            sweep.axis, sweep.order, sweep.resolutions
        );
    }
    if let Some(dir) = &cli.out {
        let mut out = OutputSet::create(dir)?;
        out.write_bytes("convergence.csv", &sweep_csv(&sweeps)?)?;
        out.write_json(
            "convergence.json",
            &serde_json::json!({ "scheme": cli.scheme.name(), "sweeps": &sweeps }),
        )?;
        out.finish(cli, None)?;
    }
    Ok(())
}

/// Self-difference table: one row per refinement point, three rows per axis.
fn sweep_csv(sweeps: &[SweepReport]) -> Result<Vec<u8>, Failure> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let io_err = |e: csv::Error| usage(format!("csv writing failed: {e}"));
    writer
        .write_record(["axis", "resolution", "spacing", "difference", "fitted_order"])
        .map_err(io_err)?;
    for sweep in sweeps {
        for ((resolution, spacing), difference) in sweep
            .resolutions
            .iter()
            .zip(&sweep.spacings)
            .zip(&sweep.differences)
        {
            writer
                .write_record([
                    sweep.axis.to_string(),
                    resolution.to_string(),
                    sci(*spacing),
                    sci(*difference),
                    sci(sweep.order),
                ])
                .map_err(io_err)?;
        }
    }
    writer
        .into_inner()
        .map_err(|e| usage(format!("csv writing failed: {e}")))
}

fn mode_compare(cli: &Cli) -> Result<(), Failure> {
    let (doc, path) = load_doc(cli)?;
    if doc.kind != ProblemKind::LocalTime {
        return Err(usage(
            "--mode compare needs a local-time problem (the perturbed solve is a level recursion)",
        ));
    }
    let data = doc
        .into_local_time()
        .map_err(|e| usage(format!("bad problem file: {e}")))?;
    let grid = local_time_grid(&data, cli)?;
    require_valid_local_time(&data, &grid)?;
    let one = starpde::problem::CoefficientField::constant(1.0);
    let zero = starpde::problem::CoefficientField::constant(0.0);
    let experiments = [
        ("source bump +1", &one, &zero),
        ("junction free-term drop -1", &zero, &one),
    ];
    let mut results = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, bump, drop) in experiments {
        let outcome = comparison_test(&data, &grid, bump, drop).map_err(solver)?;
        println!(
            "{name}: violation {:.6e}, max increase {:.6e}",
            outcome.violation, outcome.max_increase
        );
        worst = worst.max(outcome.violation);
        results.push(serde_json::json!({
            "experiment": name,
            "violation": outcome.violation,
            "max_increase": outcome.max_increase,
        }));
    }
    if let Some(dir) = &cli.out {
        let mut out = OutputSet::create(dir)?;
        out.write_json(
            "comparison.json",
            &serde_json::json!({ "tolerance": 1e-10, "experiments": results }),
        )?;
        out.finish(cli, Some(&path))?;
    }
    if worst <= 1e-10 {
        println!("comparison: PASS (worst violation {worst:.6e})");
        Ok(())
    } else {
        Err(unsatisfied(format!(
            "comparison failed: ordering violated by {worst:.6e}"
        )))
    }
}
