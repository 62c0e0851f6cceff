//! Command-line front end: `eval`, `verify`, `sweep` and `calibrate`.
//!
//! Exit codes: 0 success, 1 verification failed, 2 invalid configuration,
//! 3 domain error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::{alpha_beta_gamma, evaluation_grid, valid_window};
use crate::model::{fmt_real, ModelParams, Nonlinearity};
use crate::numerics::QuadResult;
use crate::observables::{observable_record, total_charge, total_energy};
use crate::spinor::{v_components, DiracMode};
use crate::verify::{
    calibrate, default_grid, dirac_suite, einstein_suite, liouville_suite, localization_report,
    FreeConstant, ResidualReport, DEFAULT_GRID,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "nlspinor",
    version,
    about = "Exact Einstein–nonlinear-spinor solutions: profiles, residual checks, sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Per-ξ profile of metric, amplitudes and observables as CSV.
    Eval(EvalArgs),
    /// Run residual suites; exit 1 if any fails.
    Verify(VerifyArgs),
    /// One summary row per value of a swept parameter.
    Sweep(SweepArgs),
    /// Fix h or C from the (1,1) constraint at the window center.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Override θ from the config file.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// Absolute tolerance for the total integrals.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Liouville,
    Einstein,
    Dirac,
    Localization,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Auto,
    Equatorial,
    Reduced,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// `auto` picks equatorial when θ = π/2 and ε = 1.
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// One of G, m, lambda, n, h, epsilon.
    #[arg(long)]
    pub vary: String,
    /// Explicit comma-separated values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub steps: usize,
    /// Logarithmic spacing between --from and --to.
    #[arg(long)]
    pub log: bool,
    /// Recalibrate h at every point instead of keeping the geometry fixed.
    #[arg(long)]
    pub recalibrate: bool,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "h")]
    pub free: String,
    /// `lo,hi`; defaults to the singularity-free window.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    /// Write the calibrated configuration here.
    #[arg(long)]
    pub write_config: Option<PathBuf>,
}

/// Error carrying the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_domain() {
            EXIT_DOMAIN
        } else {
            EXIT_CONFIG
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_DOMAIN,
        message: format!("{}: {e}", path.display()),
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

pub fn run(cli: Cli) -> std::result::Result<u8, Failure> {
    match cli.command {
        Command::Eval(a) => cmd_eval(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Calibrate(a) => cmd_calibrate(&a),
    }
}

/// Read, override and validate the configuration.
pub fn load_config(common: &Common) -> std::result::Result<ModelParams, Failure> {
    let text = std::fs::read_to_string(&common.config).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", common.config.display()),
    })?;
    let mut params = ModelParams::from_config_str(&text).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: e.to_string(),
    })?;
    if let Some(theta) = common.theta {
        params.theta = theta;
    }
    check_params(&params)?;
    Ok(params)
}

fn check_params(params: &ModelParams) -> std::result::Result<(), Failure> {
    let v = params.validate();
    for w in &v.warnings {
        eprintln!("warning: {w}");
    }
    v.into_result().map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: e.to_string(),
    })
}

fn header(command: &str, params: &ModelParams) -> String {
    let mut out = format!("# nlspinor {command}\n");
    for line in params.to_config_string().lines() {
        let _ = writeln!(out, "# {line}");
    }
    out
}

fn emit(out: &Option<PathBuf>, text: &str) -> std::result::Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_failure(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| io_failure(Path::new("<stdout>"), e))
        }
    }
}

fn total_cell(r: &Result<QuadResult>) -> (String, String) {
    match r {
        Ok(q) => (fmt_real(q.value), fmt_real(q.error_bound)),
        Err(_) => ("NaN".into(), "NaN".into()),
    }
}

pub const EVAL_COLUMNS: [&str; 26] = [
    "xi", "r", "S", "alpha", "beta", "gamma", "g00", "g11", "g22", "g33", "ReV1", "ImV1", "ReV2",
    "ImV2", "ReV3", "ImV3", "ReV4", "ImV4", "T00", "T11", "f", "j0", "j1", "j2", "j3", "q",
];

fn eval_row(xi: f64, params: &ModelParams) -> Result<Vec<f64>> {
    let mp = alpha_beta_gamma(xi, params)?;
    let v = v_components(xi, params)?.v();
    let rec = observable_record(xi, params)?;
    let mut row = vec![
        xi,
        1.0 / xi,
        rec.s,
        mp.alpha,
        mp.beta,
        mp.gamma,
        mp.g00,
        mp.g11,
        mp.g22,
        mp.g33,
    ];
    for z in v {
        row.push(z.re);
        row.push(z.im);
    }
    row.extend([
        rec.t00, rec.t11, rec.f, rec.j0, rec.j1, rec.j2, rec.j3, rec.q,
    ]);
    Ok(row)
}

/// The whole `eval` output as a string.
pub fn eval_csv(
    params: &ModelParams,
    grid_n: usize,
    tol: f64,
) -> std::result::Result<String, Failure> {
    let grid = evaluation_grid(params, grid_n);
    let rows: Vec<Result<Vec<f64>>> = grid.par_iter().map(|&xi| eval_row(xi, params)).collect();
    let mut out = header("eval", params);
    let energy = total_energy(params, tol);
    let charge = total_charge(params, tol);
    let (ev, eb) = total_cell(&energy);
    let (qv, qb) = total_cell(&charge);
    let _ = writeln!(out, "# total_energy,{ev},{eb}");
    let _ = writeln!(out, "# total_charge,{qv},{qb}");
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure {
        code: EXIT_DOMAIN,
        message: e.to_string(),
    };
    w.write_record(EVAL_COLUMNS).map_err(csv_err)?;
    for (xi, row) in grid.iter().zip(rows) {
        let row = row.map_err(|e| {
            let f = Failure::from(e);
            Failure {
                code: f.code,
                message: format!("at xi = {}: {}", fmt_real(*xi), f.message),
            }
        })?;
        w.write_record(row.iter().map(|x| fmt_real(*x)))
            .map_err(csv_err)?;
    }
    let body = w.into_inner().map_err(|e| Failure {
        code: EXIT_DOMAIN,
        message: e.to_string(),
    })?;
    out.push_str(&String::from_utf8_lossy(&body));
    Ok(out)
}

pub fn cmd_eval(args: &EvalArgs) -> std::result::Result<u8, Failure> {
    let params = load_config(&args.common)?;
    let text = eval_csv(
        &params,
        args.common.grid.unwrap_or(DEFAULT_GRID),
        args.common.tol,
    )?;
    emit(&args.common.out, &text)?;
    Ok(EXIT_OK)
}

fn resolve_mode(mode: ModeArg, params: &ModelParams) -> DiracMode {
    match mode {
        ModeArg::Equatorial => DiracMode::Equatorial,
        ModeArg::Reduced => DiracMode::Reduced,
        ModeArg::Auto => {
            if DiracMode::Equatorial.check(params).is_ok() {
                DiracMode::Equatorial
            } else {
                DiracMode::Reduced
            }
        }
    }
}

/// Per-suite outcome of `verify`.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub failed: Vec<String>,
    pub csv: String,
}

impl SuiteOutcome {
    fn from_report(name: &'static str, r: &ResidualReport) -> Self {
        SuiteOutcome {
            name,
            passed: r.passed(),
            failed: r.failed_equations().into_iter().map(String::from).collect(),
            csv: r.to_csv(),
        }
    }
}

pub fn run_suites(
    params: &ModelParams,
    grid_n: usize,
    suite: Suite,
    mode: DiracMode,
) -> Result<Vec<SuiteOutcome>> {
    let grid = default_grid(params, grid_n)?;
    let want = |s: Suite| suite == Suite::All || suite == s;
    let mut out = Vec::new();
    if want(Suite::Liouville) {
        out.push(SuiteOutcome::from_report(
            "liouville",
            &liouville_suite(params, &grid),
        ));
    }
    if want(Suite::Einstein) {
        out.push(SuiteOutcome::from_report(
            "einstein",
            &einstein_suite(params, &grid),
        ));
    }
    if want(Suite::Dirac) {
        out.push(SuiteOutcome::from_report(
            "dirac",
            &dirac_suite(params, &grid, mode)?,
        ));
    }
    if want(Suite::Localization) {
        let rep = localization_report(params);
        let mut failed = Vec::new();
        if !rep.localized {
            failed.push("localized".to_string());
        }
        if !rep.energy.acceptable() {
            failed.push("total_energy".to_string());
        }
        if !rep.charge.acceptable() {
            failed.push("total_charge".to_string());
        }
        out.push(SuiteOutcome {
            name: "localization",
            passed: rep.passed(),
            failed,
            csv: rep.to_csv(),
        });
    }
    Ok(out)
}

pub fn cmd_verify(args: &VerifyArgs) -> std::result::Result<u8, Failure> {
    let params = load_config(&args.common)?;
    let mode = resolve_mode(args.mode, &params);
    let outcomes = run_suites(
        &params,
        args.common.grid.unwrap_or(DEFAULT_GRID),
        args.suite,
        mode,
    )?;
    let mut summary = header("verify", &params);
    summary.push_str("suite,passed,failed_equations\n");
    for o in &outcomes {
        let _ = writeln!(summary, "{},{},{}", o.name, o.passed, o.failed.join(";"));
    }
    if let Some(dir) = &args.common.out {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        for o in &outcomes {
            let path = dir.join(format!("{}.csv", o.name));
            let text = format!("{}{}", header("verify", &params), o.csv);
            std::fs::write(&path, text).map_err(|e| io_failure(&path, e))?;
        }
        let path = dir.join("summary.csv");
        std::fs::write(&path, &summary).map_err(|e| io_failure(&path, e))?;
    }
    print!("{summary}");
    Ok(if outcomes.iter().all(|o| o.passed) {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

pub const SWEEP_FIELDS: [&str; 6] = ["G", "m", "lambda", "n", "h", "epsilon"];

/// Copy of `params` with one field replaced.
pub fn with_field(params: &ModelParams, field: &str, value: f64) -> Result<ModelParams> {
    let mut p = params.clone();
    match field {
        "G" => p.g = value,
        "m" => p.m = value,
        "h" => p.h = value,
        "epsilon" => p.epsilon = value,
        "lambda" => {
            p.nonlinearity = match p.nonlinearity {
                Nonlinearity::Linear => {
                    return Err(Error::Validation(
                        "cannot vary lambda of a linear configuration".into(),
                    ))
                }
                Nonlinearity::Quadratic { .. } => Nonlinearity::Quadratic { lambda: value },
                Nonlinearity::Power { n, .. } => Nonlinearity::Power { lambda: value, n },
            }
        }
        "n" => {
            p.nonlinearity = match p.nonlinearity {
                Nonlinearity::Power { lambda, .. } => Nonlinearity::Power { lambda, n: value },
                _ => {
                    return Err(Error::Validation(
                        "n can only be varied for a power configuration".into(),
                    ))
                }
            }
        }
        other => {
            return Err(Error::Validation(format!(
                "cannot sweep `{other}`; expected one of {}",
                SWEEP_FIELDS.join(", ")
            )))
        }
    }
    Ok(p)
}

fn sweep_values(args: &SweepArgs) -> std::result::Result<Vec<f64>, Failure> {
    if let Some(v) = &args.values {
        return Ok(v.clone());
    }
    let bad = |m: &str| Failure {
        code: EXIT_CONFIG,
        message: m.to_string(),
    };
    let (a, b) = match (args.from, args.to) {
        (Some(a), Some(b)) => (a, b),
        (Some(a), None) => (a, a),
        _ => return Err(bad("sweep needs --values or --from/--to")),
    };
    if args.steps == 0 {
        return Err(bad("--steps must be at least 1"));
    }
    if args.steps == 1 {
        return Ok(vec![a]);
    }
    if args.log && !(a > 0.0 && b > 0.0) {
        return Err(bad("--log needs positive --from and --to"));
    }
    let last = (args.steps - 1) as f64;
    Ok((0..args.steps)
        .map(|i| {
            let t = i as f64 / last;
            if args.log {
                a * (b / a).powf(t)
            } else {
                a + (b - a) * t
            }
        })
        .collect())
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "vary",
    "value",
    "status",
    "total_energy",
    "energy_error",
    "total_charge",
    "charge_error",
    "max_liouville",
    "max_einstein",
    "max_dirac",
    "calibrated_h",
];

fn suite_max(r: &ResidualReport) -> f64 {
    r.equations.iter().fold(0.0f64, |m, e| {
        if e.max_abs.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(e.max_abs)
        }
    })
}

fn sweep_row(
    base: &ModelParams,
    field: &str,
    value: f64,
    grid_n: usize,
    tol: f64,
    mode: ModeArg,
    recalibrate: bool,
) -> Vec<String> {
    let mut row = vec![field.to_string(), fmt_real(value)];
    let result = (|| -> Result<Vec<String>> {
        let mut p = with_field(base, field, value)?;
        p.validate().into_result()?;
        if recalibrate {
            let window = valid_window(&p)?;
            p.h = calibrate(&p, FreeConstant::H, window)?.value;
        }
        let grid = default_grid(&p, grid_n)?;
        let energy = total_energy(&p, tol);
        let charge = total_charge(&p, tol);
        let (ev, eb) = total_cell(&energy);
        let (qv, qb) = total_cell(&charge);
        let lio = suite_max(&liouville_suite(&p, &grid));
        let ein = suite_max(&einstein_suite(&p, &grid));
        let dir =
            dirac_suite(&p, &grid, resolve_mode(mode, &p)).map_or(f64::NAN, |r| suite_max(&r));
        let status = match (&energy, &charge) {
            (Err(e), _) => format!("energy: {e}"),
            (_, Err(Error::GaugeNotFixed(_))) | (Ok(_), Ok(_)) => "ok".to_string(),
            (_, Err(e)) => format!("charge: {e}"),
        };
        Ok(vec![
            status,
            ev,
            eb,
            qv,
            qb,
            fmt_real(lio),
            fmt_real(ein),
            fmt_real(dir),
            fmt_real(p.h),
        ])
    })();
    match result {
        Ok(cells) => row.extend(cells),
        Err(e) => {
            row.push(e.to_string());
            row.extend(std::iter::repeat("NaN".to_string()).take(SWEEP_COLUMNS.len() - 3));
        }
    }
    row
}

pub fn cmd_sweep(args: &SweepArgs) -> std::result::Result<u8, Failure> {
    if !SWEEP_FIELDS.contains(&args.vary.as_str()) {
        return Err(Failure {
            code: EXIT_CONFIG,
            message: format!(
                "cannot sweep `{}`; expected one of {}",
                args.vary,
                SWEEP_FIELDS.join(", ")
            ),
        });
    }
    let params = load_config(&args.common)?;
    with_field(&params, &args.vary, 1.0)?;
    let values = sweep_values(args)?;
    let grid_n = args.common.grid.unwrap_or(50);
    let rows: Vec<Vec<String>> = values
        .par_iter()
        .map(|&v| {
            sweep_row(
                &params,
                &args.vary,
                v,
                grid_n,
                args.common.tol,
                args.mode,
                args.recalibrate,
            )
        })
        .collect();
    let mut out = header("sweep", &params);
    let _ = writeln!(
        out,
        "# geometry,{}",
        if args.recalibrate {
            "recalibrated"
        } else {
            "fixed"
        }
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure {
        code: EXIT_DOMAIN,
        message: e.to_string(),
    };
    w.write_record(SWEEP_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let body = w.into_inner().map_err(|e| Failure {
        code: EXIT_DOMAIN,
        message: e.to_string(),
    })?;
    out.push_str(&String::from_utf8_lossy(&body));
    emit(&args.common.out, &out)?;
    Ok(EXIT_OK)
}

pub fn cmd_calibrate(args: &CalibrateArgs) -> std::result::Result<u8, Failure> {
    let params = load_config(&args.common)?;
    let free: FreeConstant = args.free.parse()?;
    let window = match &args.window {
        Some(w) => (w[0], w[1]),
        None => valid_window(&params)?,
    };
    let cal = match calibrate(&params, free, window) {
        Ok(c) => c,
        Err(Error::NoImprovement { best, residual }) => {
            eprintln!(
                "calibration failed: best {} = {} leaves residual {}",
                free.name(),
                fmt_real(best),
                fmt_real(residual)
            );
            return Ok(EXIT_FAILED);
        }
        Err(e) => return Err(e.into()),
    };
    let mut calibrated = params.clone();
    match free {
        FreeConstant::H => calibrated.h = cal.value,
        FreeConstant::C => calibrated.c = cal.value,
    }
    let mut out = header("calibrate", &calibrated);
    let _ = writeln!(out, "# calibrated,{},{}", free.name(), fmt_real(cal.value));
    let _ = writeln!(out, "# center,{}", fmt_real(cal.center));
    let _ = writeln!(out, "# center_residual,{}", fmt_real(cal.center_residual));
    let _ = writeln!(out, "# max_abs,{}", fmt_real(cal.max_abs));
    out.push_str("xi,residual\n");
    for (xi, r) in &cal.profile {
        let _ = writeln!(out, "{},{}", fmt_real(*xi), fmt_real(*r));
    }
    if let Some(path) = &args.write_config {
        std::fs::write(path, calibrated.to_config_string()).map_err(|e| io_failure(path, e))?;
    }
    emit(&args.common.out, &out)?;
    Ok(EXIT_OK)
}
