//! Command-line front end. Result data goes to files; progress goes to
//! stderr; stdout carries only the JSON printed by `bound`.
//!
//! Exit codes: 0 success, 2 bad flags or config, 3 a property or audit
//! check failed, 4 I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bounds::{freedman_bound, lambda_threshold, ville_bound, SafetyMode, SafetySpec};
use crate::error::Error;
use crate::experiments::{
    run_scenario, write_outputs, BoundGridParams, HlipCaseParams, IssfCompareParams, Linspace,
    PropertySuiteParams, RunConfig, Scenario, ScenarioKind, ScenarioOutput,
};
use crate::montecarlo::Engine;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PROPERTY: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Default output directory when neither `--out` nor the config sets one.
pub const OUT_ENV: &str = "MARTINGALE_SAFETY_OUT";

#[derive(Debug, Parser)]
#[command(name = "martingale-safety", version, about = "Martingale-based finite-horizon safety bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the Freedman bound (and the Ville bound when --B is given); prints JSON.
    Bound(BoundArgs),
    /// Run every scenario of a JSON config and write tables plus a manifest.
    Run(RunArgs),
    /// Ville vs Freedman over a (lambda, sigma) grid.
    Compare(CompareArgs),
    /// Scalar-model exit probabilities against the tightened bound and the ISSf indicator.
    Issf(IssfArgs),
    /// Filtered HLIP obstacle case.
    Hlip(HlipArgs),
    /// Executable invariants; exits 3 if any fails.
    Properties(PropertiesArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Dtcbf,
    Cmart,
    General,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Decay rate (dtcbf, general).
    #[arg(long)]
    alpha: Option<f64>,
    /// Per-step drift allowance (cmart, general).
    #[arg(long)]
    c: Option<f64>,
    /// Horizon in steps.
    #[arg(long = "K")]
    horizon: u32,
    #[arg(long)]
    h0: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    sigma: f64,
    /// Upper bound on the barrier; enables the Ville bound.
    #[arg(long = "B")]
    upper_bound: Option<f64>,
}

#[derive(Debug, Args, Clone)]
struct Common {
    /// Output directory [default: $MARTINGALE_SAFETY_OUT or ./out].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trial count for every Monte Carlo scenario.
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long = "B", default_value_t = 10.0)]
    upper_bound: f64,
    #[arg(long = "K", default_value_t = 100)]
    horizon: u32,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 10.0)]
    lambda_max: f64,
    #[arg(long, default_value_t = 101)]
    lambda_count: usize,
    #[arg(long, default_value_t = 0.01)]
    sigma_min: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_max: f64,
    #[arg(long, default_value_t = 100)]
    sigma_count: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct IssfArgs {
    #[arg(long, default_value_t = 0.99)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    sigma: f64,
    #[arg(long, default_value_t = 10.0)]
    h0: f64,
    /// Horizons, comma separated [default: 1,100,200,300,400].
    #[arg(long = "K", value_delimiter = ',')]
    horizons: Vec<u32>,
    #[arg(long, default_value_t = 95.0)]
    eps_max: f64,
    #[arg(long, default_value_t = 20)]
    eps_count: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct HlipArgs {
    /// Disturbance radii, comma separated [default: 0,0.03,0.06].
    #[arg(long = "dmax", value_delimiter = ',')]
    d_max: Vec<f64>,
    /// Decay rates, comma separated [default: 0.9,0.99].
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    /// Seconds of walking.
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
    /// Sample the disturbance from the 4-ball instead of two disks.
    #[arg(long)]
    ball: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct PropertiesArgs {
    #[command(flatten)]
    common: Common,
}

struct Failure {
    code: i32,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => EXIT_IO,
            Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        msg: msg.into(),
    }
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return EXIT_OK;
            }
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(stderr, "{first} (see --help)");
            return EXIT_CONFIG;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.msg);
            f.code
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Bound(a) => cmd_bound(&a, stdout),
        Command::Run(a) => {
            let cfg = RunConfig::load(&a.config)?;
            execute(cfg, &a.common, stderr)
        }
        Command::Compare(a) => {
            let p = BoundGridParams {
                upper_bound: a.upper_bound,
                horizon: a.horizon,
                delta: a.delta,
                lambda: Linspace::new(0.0, a.lambda_max, a.lambda_count),
                sigma: Linspace::new(a.sigma_min, a.sigma_max, a.sigma_count),
            };
            single(ScenarioKind::BoundGrid, "bound_grid", &p, &a.common, stderr)
        }
        Command::Issf(a) => {
            let mut p = IssfCompareParams {
                alpha: a.alpha,
                delta: a.delta,
                sigma: a.sigma,
                h0: a.h0,
                epsilon: Linspace::new(0.0, a.eps_max, a.eps_count),
                ..IssfCompareParams::default()
            };
            if !a.horizons.is_empty() {
                p.horizons = a.horizons;
            }
            single(ScenarioKind::IssfCompare, "issf_compare", &p, &a.common, stderr)
        }
        Command::Hlip(a) => {
            let mut p = HlipCaseParams {
                duration: a.duration,
                ball_disturbance: a.ball,
                ..HlipCaseParams::default()
            };
            if !a.d_max.is_empty() {
                p.d_max = a.d_max;
            }
            if !a.alpha.is_empty() {
                p.alpha = a.alpha;
            }
            single(ScenarioKind::HlipCase, "hlip_case", &p, &a.common, stderr)
        }
        Command::Properties(a) => single(
            ScenarioKind::PropertySuite,
            "property_suite",
            &PropertySuiteParams::default(),
            &a.common,
            stderr,
        ),
    }
}

fn cmd_bound(a: &BoundArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| config_err(format!("--mode {:?} needs --{flag}", a.mode).to_lowercase()))
    };
    let mode = match a.mode {
        Mode::Dtcbf => SafetyMode::Dtcbf {
            alpha: need(a.alpha, "alpha")?,
        },
        Mode::Cmart => SafetyMode::CMart { c: need(a.c, "c")? },
        Mode::General => SafetyMode::General {
            alpha: need(a.alpha, "alpha")?,
            c: need(a.c, "c")?,
        },
    };
    let spec = SafetySpec::new(mode, a.horizon, a.h0, a.delta, a.sigma, a.upper_bound)?;
    let f = freedman_bound(&spec)?;
    let mut out = json!({
        "raw": f.raw,
        "clamped": f.clamped,
        "vacuous": f.vacuous,
        "lambda": lambda_threshold(&spec),
    });
    if spec.upper_bound.is_some() {
        out["ville"] = serde_json::to_value(ville_bound(&spec)?).map_err(Error::from)?;
    }
    writeln!(stdout, "{out}").map_err(Error::from)?;
    Ok(EXIT_OK)
}

fn single<T: serde::Serialize>(
    kind: ScenarioKind,
    id: &str,
    params: &T,
    common: &Common,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let cfg = RunConfig {
        seed: 0,
        output_dir: None,
        trials: None,
        workers: None,
        scenarios: vec![Scenario::new(id, kind).with_params(params)?],
    };
    cfg.validate()?;
    execute(cfg, common, stderr)
}

fn output_dir(flag: Option<&Path>, cfg: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.map(Path::to_path_buf))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(cfg: RunConfig, common: &Common, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let seed = common.seed.unwrap_or(cfg.seed);
    let trials = common.trials.or(cfg.trials);
    if trials == Some(0) {
        return Err(config_err("--trials must be >= 1"));
    }
    let dir = output_dir(common.out.as_deref(), cfg.output_dir.as_deref());
    let engine = Engine::new(common.workers.or(cfg.workers))?;
    let mut outputs: Vec<ScenarioOutput> = Vec::with_capacity(cfg.scenarios.len());
    for s in &cfg.scenarios {
        let started = std::time::Instant::now();
        let out = run_scenario(s, seed, trials, &engine)?;
        let _ = writeln!(
            stderr,
            "{}: {} in {:.2?}{}",
            s.id,
            if out.passed() { "done" } else { "FAILED checks" },
            started.elapsed(),
            out.trials.map_or(String::new(), |n| format!(" ({n} trials)")),
        );
        for p in out.properties.iter().filter(|p| !p.passed()) {
            let _ = writeln!(
                stderr,
                "  {}: {} of {} violated, worst margin {:e}",
                p.name, p.violations, p.samples, p.worst_margin
            );
        }
        outputs.push(out);
    }
    let manifest = write_outputs(&dir, &outputs, seed, trials)?;
    let _ = writeln!(
        stderr,
        "wrote {} files and manifest.json to {}",
        manifest.files.len(),
        dir.display()
    );
    Ok(if outputs.iter().all(ScenarioOutput::passed) {
        EXIT_OK
    } else {
        EXIT_PROPERTY
    })
}
