//! The `tbnrf` command line.
//!
//! Exit codes: 0 success, 1 IO error, 2 invalid input, 3 runtime failure
//! (fit non-convergence, herald rejection timeout).

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::Error;
use crate::fit::{fit, two_stage_fit, FitModel, FitResult, FitSpec, ParamMap, ParamName, TwoStageSpec, XRole, DEFAULT_RESTARTS};
use crate::io::{fit_report_lines, parse_range, read_data_series, write_scan, write_shots, RunConfig, ScanRow};
use crate::montecarlo::{estimate_nrf_with, simulate_shots, Workers};
use crate::nrf::{nrf_lossy_terms, nrf_noisy_lossy_moments, TwbParams};
use crate::photon_stats::noise_moments;
use crate::thresholds::{classify_value, fock_noise_threshold, t_min, thermal_noise_max, ThresholdReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tbnrf", version, about = "Noise reduction factor of twin beams through noisy, lossy channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate R for a configuration and print its term breakdown.
    Nrf {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tabulate R over a grid of twin-beam and noise means.
    Scan(ScanArgs),
    /// Simulate detected shots, or estimate R from them.
    Simulate(SimulateArgs),
    /// Fit a measured R curve.
    Fit(FitArgs),
    /// Print the sub-shot-noise thresholds.
    Threshold(ThresholdArgs),
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Twin-beam mean grid, start:step:stop.
    #[arg(long)]
    pub twb_mean: String,
    /// Noise grid, start:step:stop (unconditioned mean for conditional noise).
    #[arg(long)]
    pub noise_mean: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Write the shots as `k1,k2` CSV.
    #[arg(long, required_unless_present = "estimate", conflicts_with = "estimate")]
    pub out: Option<PathBuf>,
    /// Print the R estimate instead of writing shots.
    #[arg(long)]
    pub estimate: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// `x,r,sigma_r` CSV; the noiseless series in two-stage mode.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value = "noise_mean")]
    pub x_role: String,
    /// Comma-separated free parameters.
    #[arg(long, default_value = "")]
    pub free: String,
    /// Comma-separated name=value assignments.
    #[arg(long, default_value = "")]
    pub frozen: String,
    /// Comma-separated name=value starting points.
    #[arg(long, default_value = "")]
    pub init: String,
    /// Comma-separated name=lo:hi bounds.
    #[arg(long, default_value = "")]
    pub bounds: String,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noisy series for the two-stage protocol.
    #[arg(long)]
    pub two_stage: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub eta: f64,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub mean_m: f64,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub mu_noise: Option<f64>,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => EXIT_IO,
            Error::RejectionTimeout { .. } => EXIT_RUNTIME,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn load_config(path: &Path) -> std::result::Result<RunConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    RunConfig::parse(&text).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
    })
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn finish<W: Write>(mut w: W, path: &Path) -> CmdResult {
    w.flush().map_err(|e| io_failure(path, e))
}

fn cmd_nrf<W: Write>(args: &Path, out: &mut W) -> CmdResult {
    let config = load_config(args)?;
    let noise = noise_moments(&config.noise)?;
    let terms = nrf_lossy_terms(&config.twb, noise)?;
    let r = terms.total();
    writeln!(out, "r={r}").map_err(Error::from)?;
    writeln!(out, "classification={}", classify_value(r)).map_err(Error::from)?;
    writeln!(out, "term.shot_noise=1").map_err(Error::from)?;
    writeln!(out, "term.correlation={}", terms.correlation).map_err(Error::from)?;
    writeln!(out, "term.imbalance={}", terms.imbalance).map_err(Error::from)?;
    writeln!(out, "term.excess_noise={}", terms.excess_noise).map_err(Error::from)?;
    writeln!(out, "noise.kind={}", config.noise.name()).map_err(Error::from)?;
    writeln!(out, "noise.mean={}", noise.mean).map_err(Error::from)?;
    writeln!(out, "noise.variance={}", noise.variance).map_err(Error::from)?;
    Ok(())
}

/// R over the grid, row-major with the twin-beam mean as the outer axis.
pub fn scan_grid(config: &RunConfig, twb_means: &[f64], noise_means: &[f64]) -> crate::Result<Vec<ScanRow>> {
    let noises = noise_means
        .iter()
        .map(|&x| config.noise.moments_with_mean(x))
        .collect::<crate::Result<Vec<_>>>()?;
    let rows: Vec<crate::Result<Vec<ScanRow>>> = Workers::from_env()?.install(|| {
        twb_means
            .par_iter()
            .map(|&m| {
                let twb = TwbParams { mean_m: m, ..config.twb };
                noise_means
                    .iter()
                    .zip(&noises)
                    .map(|(&x, &moments)| {
                        let r = match nrf_noisy_lossy_moments(&twb, moments) {
                            Ok(r) => r,
                            Err(Error::Degenerate) => f64::NAN,
                            Err(e) => return Err(e),
                        };
                        Ok(ScanRow { mean_twb: m, mean_noise: x, r })
                    })
                    .collect()
            })
            .collect()
    })?;
    let mut out = Vec::with_capacity(twb_means.len() * noise_means.len());
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}

fn cmd_scan(args: &ScanArgs) -> CmdResult {
    let config = load_config(&args.config)?;
    let twb = parse_range(&args.twb_mean)?;
    let noise = parse_range(&args.noise_mean)?;
    let rows = scan_grid(&config, &twb, &noise)?;
    let mut w = create(&args.out)?;
    write_scan(&mut w, &rows).map_err(|e| match e {
        Error::Io(io) => io_failure(&args.out, io),
        other => other.into(),
    })?;
    finish(w, &args.out)
}

fn cmd_simulate<W: Write>(args: &SimulateArgs, out: &mut W) -> CmdResult {
    let config = load_config(&args.config)?;
    let mc = config.mc()?;
    let workers = Workers::from_env()?;
    if args.estimate {
        let est = estimate_nrf_with(&config.twb, &config.noise, mc.shots, mc.seed, workers)?;
        let analytic = nrf_noisy_lossy_moments(&config.twb, noise_moments(&config.noise)?)?;
        writeln!(out, "r_hat={}", est.r_hat).map_err(Error::from)?;
        writeln!(out, "std_err={}", est.std_err).map_err(Error::from)?;
        writeln!(out, "shots={}", est.shots).map_err(Error::from)?;
        writeln!(out, "r_analytic={analytic}").map_err(Error::from)?;
        writeln!(out, "z={}", (est.r_hat - analytic) / est.std_err).map_err(Error::from)?;
        writeln!(out, "mean1={}", est.mean1).map_err(Error::from)?;
        writeln!(out, "mean2={}", est.mean2).map_err(Error::from)?;
        return Ok(());
    }
    let path = args.out.as_ref().expect("clap enforces --out without --estimate");
    let shots = simulate_shots(&config.twb, &config.noise, mc.shots, mc.seed, workers)?;
    let mut w = create(path)?;
    write_shots(&mut w, &shots).map_err(|e| match e {
        Error::Io(io) => io_failure(path, io),
        other => other.into(),
    })?;
    finish(w, path)
}

fn assignments(list: &str, what: &str) -> crate::Result<Vec<(ParamName, String)>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("{what} entry {item:?} must be name=value")))?;
            Ok((k.parse::<ParamName>()?, v.trim().to_string()))
        })
        .collect()
}

fn number(name: ParamName, v: &str) -> crate::Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::Input(format!("value {v:?} for {name} is not a number")))
}

fn parse_bounds(list: &str) -> crate::Result<std::collections::BTreeMap<ParamName, (f64, f64)>> {
    assignments(list, "--bounds")?
        .into_iter()
        .map(|(name, v)| {
            let (lo, hi) = v
                .split_once(':')
                .ok_or_else(|| Error::Input(format!("bounds for {name} must be lo:hi")))?;
            Ok((name, (number(name, lo)?, number(name, hi)?)))
        })
        .collect()
}

fn parse_values(list: &str, what: &str) -> crate::Result<ParamMap> {
    assignments(list, what)?
        .into_iter()
        .map(|(name, v)| Ok((name, number(name, &v)?)))
        .collect()
}

fn summary<W: Write>(out: &mut W, title: &str, r: &FitResult) -> crate::Result<()> {
    writeln!(out, "{title}: chi2_nu = {:.4} ({} dof), converged = {}", r.chi2_nu, r.dof, r.converged)?;
    for (name, value) in &r.estimates {
        let tag = if r.free.contains(name) { "" } else { " (frozen)" };
        writeln!(out, "  {name:<10} = {value:.6}{tag}")?;
    }
    if !r.weakly_identified.is_empty() {
        let names: Vec<_> = r.weakly_identified.iter().map(|p| p.as_str()).collect();
        writeln!(out, "  weakly identified: {}", names.join(", "))?;
    }
    Ok(())
}

fn cmd_fit<W: Write>(args: &FitArgs, out: &mut W) -> CmdResult {
    let model: FitModel = args.model.parse()?;
    let x_role: XRole = args.x_role.parse()?;
    let bounds = parse_bounds(&args.bounds)?;
    let read = |path: &Path, role| -> std::result::Result<_, Failure> {
        let file = File::open(path).map_err(|e| io_failure(path, e))?;
        read_data_series(file, role).map_err(|e| Failure {
            code: EXIT_INPUT,
            message: format!("{}: {e}", path.display()),
        })
    };
    let series = read(&args.data, x_role)?;

    let (lines, converged) = if let Some(noisy_path) = &args.two_stage {
        if x_role != XRole::TwbMean {
            return Err(Error::Input("--two-stage needs --x-role twb_mean".into()).into());
        }
        if !args.free.is_empty() || !args.frozen.is_empty() || !args.init.is_empty() {
            return Err(Error::Input("--two-stage sets the free parameters itself; drop --free/--frozen/--init".into()).into());
        }
        let noisy = read(noisy_path, x_role)?;
        let spec = TwoStageSpec { bounds, restarts: args.restarts, seed: args.seed, ..TwoStageSpec::new(model) };
        let (first, second) = two_stage_fit(&series, &noisy, &spec)?;
        summary(out, "stage 1 (noiseless series)", &first)?;
        summary(out, "stage 2 (noisy series)", &second)?;
        let mut lines = vec![format!("model={model}"), format!("x_role={x_role}"), "protocol=two_stage".into()];
        lines.extend(fit_report_lines(&first, "stage1."));
        lines.extend(fit_report_lines(&second, "stage2."));
        (lines, first.converged && second.converged)
    } else {
        let free = args
            .free
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<crate::Result<Vec<ParamName>>>()?;
        let spec = FitSpec {
            bounds,
            init: parse_values(&args.init, "--init")?,
            restarts: args.restarts,
            seed: args.seed,
            ..FitSpec::new(model, free, parse_values(&args.frozen, "--frozen")?)
        };
        let result = fit(&series, &spec)?;
        summary(out, "fit", &result)?;
        let mut lines = vec![format!("model={model}"), format!("x_role={x_role}")];
        lines.extend(fit_report_lines(&result, ""));
        (lines, result.converged)
    };

    let mut w = create(&args.out)?;
    for line in &lines {
        writeln!(w, "{line}").map_err(|e| io_failure(&args.out, e))?;
    }
    finish(w, &args.out)?;
    if !converged {
        return Err(Failure {
            code: EXIT_RUNTIME,
            message: "fit did not converge: the two best restarts disagree (report written)".into(),
        });
    }
    Ok(())
}

fn print_report<W: Write>(out: &mut W, label: &str, r: &ThresholdReport) -> crate::Result<()> {
    match r.value {
        Some(v) => writeln!(out, "{label}={}:{v}", r.kind)?,
        None if r.feasible => writeln!(out, "{label}={}", r.kind)?,
        None => writeln!(out, "{label}=infeasible")?,
    }
    Ok(())
}

fn cmd_threshold<W: Write>(args: &ThresholdArgs, out: &mut W) -> CmdResult {
    let t1 = t_min(args.eta, args.mu, args.mean_m)?;
    writeln!(out, "t_min={t1}").map_err(Error::from)?;
    if let Some(t) = args.t {
        if let Some(mu_noise) = args.mu_noise {
            let th = thermal_noise_max(args.eta, t, args.mu, args.mean_m, mu_noise)?;
            print_report(out, "thermal", &th)?;
        }
        let fock = fock_noise_threshold(args.eta, t, args.mu, args.mean_m)?;
        print_report(out, "fock", &fock)?;
    } else if args.mu_noise.is_some() {
        return Err(Error::Input("--mu-noise needs --t".into()).into());
    }
    Ok(())
}

/// Runs the CLI on `args` and returns the process exit code.
pub fn run<I, T, W, E>(args: I, out: &mut W, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Nrf { config } => cmd_nrf(config, out),
        Command::Scan(a) => cmd_scan(a),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Fit(a) => cmd_fit(a, out),
        Command::Threshold(a) => cmd_threshold(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
