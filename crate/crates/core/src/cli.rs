//! Experiment runner behind the `fkmc` binary.
//!
//! Every subcommand writes CSV: a block of `# key = value` lines echoing the
//! effective configuration, a header row and the data rows. Exit codes are 0
//! on success, 1 on runtime failure and 2 on usage or configuration errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::estimators::{
    BrfParams, BubbleRadius, EstimatorConfig, ExitCondition, FEstimate, GEstimate, TEstimate,
    XEstimate,
};
use crate::geometry::Point;
use crate::montecarlo::{
    bias_map, bubble_sweep, default_grid, empirical_cdf, fpt_experiment, ks_distance,
    mc_estimate_capped, overshoot_stats_with, OvershootMethod, DEFAULT_STEP_CAP,
};
use crate::problems::{self, ProblemEntry};
use crate::stochastics::{self, levy_fpt_cdf, OVERSHOOT_CONSTANT};
use crate::tdl::{self, Decay, FeatureBasis, LearningSchedule, StopRule, TrainMode, TrainOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "fkmc",
    version,
    about = "Feynman-Kac Monte Carlo and TD-learning experiments",
    args_override_self = true
)]
pub struct Cli {
    /// Line-oriented key = value file of default flags; command-line flags win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output file (default: standard output).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, default_value = "poisson-disk")]
    pub problem: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "max")]
    pub exit: ExitCondition,
    /// Bubble-wrap radius: a length or `auto`.
    #[arg(long, default_value = "auto")]
    pub bubble_radius: BubbleRadius,
    #[arg(long, default_value = "corrected")]
    pub t_est: TEstimate,
    #[arg(long, default_value = "corrected")]
    pub x_est: XEstimate,
    #[arg(long, default_value = "corrected")]
    pub f_est: FEstimate,
    #[arg(long, default_value = "corrected")]
    pub g_est: GEstimate,
    /// Root-finding bracket fraction.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// Root-finding distance tolerance.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 64)]
    pub brf_max_iter: usize,
    /// Per-walker step cap.
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    pub step_cap: u64,
}

impl Common {
    pub fn estimator_config(&self) -> Result<EstimatorConfig> {
        let cfg = EstimatorConfig {
            exit: self.exit,
            bubble_radius: self.bubble_radius,
            t_est: self.t_est,
            x_est: self.x_est,
            f_est: self.f_est,
            g_est: self.g_est,
            brf: BrfParams {
                theta: self.theta,
                epsilon: self.epsilon,
                max_iter: self.brf_max_iter,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate u at one point.
    McPoint {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 65536)]
        n: u64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// Start point, comma separated.
        #[arg(long, default_value = "0,0")]
        x0: String,
    },
    /// Bias of the estimator over a Cartesian grid.
    BiasMap {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4096)]
        n: u64,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        /// Grid points per axis.
        #[arg(long, default_value_t = 41)]
        grid: usize,
    },
    /// Bias at one point as a function of the bubble-wrap radius.
    BubbleSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 65536)]
        n: u64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value = "0.4,0.69282032302755092")]
        x0: String,
        /// Radii in units of sqrt(dt), comma separated; `auto` adds the automatic radius.
        #[arg(long, default_value = "0,0.1,0.2,0.3,0.4,0.5,auto,0.6,0.7,0.8,0.9,1")]
        b_ratios: String,
    },
    /// First-passage-time CDF across a barrier against the exact law.
    FptCdf {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 131072)]
        n: u64,
        #[arg(long, default_value_t = 1.5)]
        dt: f64,
        /// Barrier level.
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Rows of the CDF table.
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 20.0)]
        t_max: f64,
    },
    /// Mean overshoot past a barrier at the first discretely observed exit.
    Overshoot {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 0.001)]
        dt: f64,
        /// `skip-ahead` (exact between grid points) or `stepwise`.
        #[arg(long, default_value = "skip-ahead")]
        method: String,
        #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
        step_cap: u64,
    },
    /// Temporal-difference learning of a linear surrogate.
    TdlTrain {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16384)]
        walkers: usize,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// `restart` or `fixed-cohort`.
        #[arg(long, default_value = "restart")]
        mode: TrainMode,
        /// `exits:N` or `steps:N`.
        #[arg(long, default_value = "exits:16384")]
        stop: StopRule,
        /// Feature list such as `T0*T0,T2*T0,T0*T2`; `default` uses the problem's basis.
        #[arg(long, default_value = "default")]
        basis: String,
        /// Initial rates: `auto` or a comma-separated list.
        #[arg(long, default_value = "auto")]
        rates: String,
        /// Rate scale of the automatic schedule, divided by sqrt(dt).
        #[arg(long, default_value_t = tdl::AUTO_RATE_SCALE)]
        rate_scale: f64,
        /// Geometric decay ratio per global step.
        #[arg(long, default_value_t = tdl::AUTO_DECAY_RATIO)]
        decay: f64,
        #[arg(long, default_value_t = 64)]
        record_stride: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
    },
    /// Check the analytic distributions against independent quadrature.
    OracleCheck,
}

const SUBCOMMANDS: [&str; 7] = [
    "mc-point",
    "bias-map",
    "bubble-sweep",
    "fpt-cdf",
    "overshoot",
    "tdl-train",
    "oracle-check",
];

// Flags that do not change results and stay out of the header.
const UNECHOED: [&str; 1] = ["threads"];

macro_rules! value_enum {
    ($($t:ty),+) => {$(
        impl clap::ValueEnum for $t {
            fn value_variants<'a>() -> &'a [Self] {
                <$t>::ALL
            }
            fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
                Some(clap::builder::PossibleValue::new(self.as_str()))
            }
        }
    )+};
}

value_enum!(ExitCondition, TEstimate, XEstimate, FEstimate, GEstimate);

/// Usage and configuration failures map to exit code 2, everything else to 1.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Formats a number with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_point(s: &str) -> std::result::Result<Point, Failure> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Point::from)
        .map_err(|_| usage(format!("invalid point '{s}'")))
}

/// Reads `key = value` lines into flag tokens. Blank lines and `#` comments
/// are skipped.
pub fn config_tokens(text: &str) -> std::result::Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let k = k.trim().trim_start_matches("--").replace('_', "-");
        if k.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push(format!("--{k}"));
        out.push(v.trim().to_string());
    }
    Ok(out)
}

fn find_config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    let mut found = None;
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            found = Some(PathBuf::from(p));
        }
    }
    found
}

/// Places config-file flags directly after the subcommand and ahead of every
/// command-line flag, so the command line takes precedence.
fn merge_config(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, Failure> {
    let Some(path) = find_config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let tokens = config_tokens(&text).map_err(usage)?;
    let Some(pos) = args
        .iter()
        .skip(1)
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .map(|p| p + 1)
    else {
        return Ok(args);
    };
    let mut merged = vec![args[0].clone(), args[pos].clone()];
    merged.extend(tokens.into_iter().map(OsString::from));
    merged.extend(
        args.iter()
            .enumerate()
            .filter(|(i, _)| *i != 0 && *i != pos)
            .map(|(_, a)| a.clone()),
    );
    Ok(merged)
}

fn header(sub: &str, matches: &clap::ArgMatches) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# fkmc {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(h, "# command = {sub}");
    let mut ids: Vec<&str> = matches.ids().map(|id| id.as_str()).collect();
    ids.sort_unstable();
    for id in ids {
        if UNECHOED.contains(&id) {
            continue;
        }
        if let Ok(Some(raw)) = matches.try_get_raw(id) {
            let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            let _ = writeln!(h, "# {} = {}", id.replace('_', "-"), vals.join(","));
        }
    }
    h
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code. CSV goes to `out` unless `--out` is given.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(f) => return report(f, err),
    };
    let matches = match Cli::command().try_get_matches_from(&args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => return report(usage(e), err),
    };
    let (sub, sub_matches) = matches.subcommand().expect("subcommand is required");
    let head = header(sub, sub_matches);

    let pool = match cli.threads {
        Some(0) => return report(usage("--threads must be at least 1"), err),
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => return report(Failure::Runtime(e.to_string()), err),
    };
    let mut warnings = Vec::new();
    let result = pool.install(|| execute(&cli.command, &mut warnings));
    for w in warnings {
        let _ = writeln!(err, "fkmc: warning: {w}");
    }
    match result {
        Ok((body, code)) => {
            let text = format!("{head}{body}");
            let written = match &cli.out {
                Some(p) => write_file(p, &text),
                None => out.write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                return report(Failure::Runtime(format!("cannot write output: {e}")), err);
            }
            code
        }
        Err(f) => report(f, err),
    }
}

fn write_file(path: &Path, text: &str) -> io::Result<()> {
    fs::write(path, text)
}

fn report(f: Failure, err: &mut dyn Write) -> i32 {
    match f {
        Failure::Usage(m) => {
            let _ = writeln!(err, "fkmc: {m}");
            EXIT_USAGE
        }
        Failure::Runtime(m) => {
            let _ = writeln!(err, "fkmc: error: {m}");
            EXIT_RUNTIME
        }
    }
}

fn problem(common: &Common) -> std::result::Result<ProblemEntry, Failure> {
    problems::lookup(&common.problem).map_err(usage)
}

fn execute(
    cmd: &Command,
    warnings: &mut Vec<String>,
) -> std::result::Result<(String, i32), Failure> {
    let mut body = String::new();
    let mut code = EXIT_OK;
    match cmd {
        Command::McPoint { common, n, dt, x0 } => {
            let entry = problem(common)?;
            let cfg = common.estimator_config().map_err(usage)?;
            let x0 = parse_point(x0)?;
            if x0.dim() != entry.spec.dim() {
                return Err(usage(format!(
                    "--x0 has {} coordinates, problem needs {}",
                    x0.dim(),
                    entry.spec.dim()
                )));
            }
            let r = mc_estimate_capped(
                &entry.spec,
                &x0,
                *n,
                *dt,
                &cfg,
                common.seed,
                common.step_cap,
            )?;
            warn_capped(warnings, r.n_capped);
            let cols: Vec<String> = (1..=x0.dim()).map(|i| format!("x{i}")).collect();
            let _ = writeln!(body, "{},estimate,stderr,exact,bias", cols.join(","));
            let coords: Vec<String> = x0.iter().map(|&v| num(v)).collect();
            let (exact, bias) = match entry.spec.exact_at(&x0) {
                Ok(u) => (num(u), num(r.estimate - u)),
                Err(_) => (String::new(), String::new()),
            };
            let _ = writeln!(
                body,
                "{},{},{},{},{}",
                coords.join(","),
                num(r.estimate),
                num(r.stderr),
                exact,
                bias
            );
        }
        Command::BiasMap {
            common,
            n,
            dt,
            grid,
        } => {
            let entry = problem(common)?;
            let cfg = common.estimator_config().map_err(usage)?;
            let pts = default_grid(entry.spec.domain.as_ref(), *grid).map_err(usage)?;
            let cells = bias_map(&entry.spec, &pts, *n, *dt, &cfg, common.seed)?;
            let _ = writeln!(body, "x1,x2,estimate,stderr,exact,bias,skipped");
            for c in cells {
                let _ = writeln!(
                    body,
                    "{},{},{},{},{},{},{}",
                    num(c.x[0]),
                    num(c.x[1]),
                    num(c.estimate),
                    num(c.stderr),
                    num(c.exact),
                    num(c.bias),
                    c.skipped as u8
                );
            }
        }
        Command::BubbleSweep {
            common,
            n,
            dt,
            x0,
            b_ratios,
        } => {
            let entry = problem(common)?;
            let x0 = parse_point(x0)?;
            let mut bs = Vec::new();
            for r in b_ratios.split(',').map(str::trim).filter(|r| !r.is_empty()) {
                let ratio = if r == "auto" {
                    OVERSHOOT_CONSTANT
                } else {
                    r.parse::<f64>()
                        .ok()
                        .filter(|v| *v >= 0.0)
                        .ok_or_else(|| usage(format!("invalid radius ratio '{r}'")))?
                };
                bs.push(ratio * dt.sqrt());
            }
            let rows = bubble_sweep(&entry.spec, &x0, &bs, *n, *dt, common.seed)?;
            let _ = writeln!(body, "b,bias,stderr,is_auto");
            for r in rows {
                let _ = writeln!(
                    body,
                    "{},{},{},{}",
                    num(r.b),
                    num(r.bias),
                    num(r.stderr),
                    r.is_auto as u8
                );
            }
        }
        Command::FptCdf {
            common,
            n,
            dt,
            a,
            points,
            t_max,
        } => {
            let cfg = common.estimator_config().map_err(usage)?;
            if *points < 2 || !(*t_max > 0.0) {
                return Err(usage("--points must be at least 2 and --t-max positive"));
            }
            let s = fpt_experiment(*a, *dt, *n, &cfg, common.seed, common.step_cap)?;
            warn_capped(warnings, s.n_capped);
            let ts: Vec<f64> = (0..*points)
                .map(|i| t_max * i as f64 / (*points - 1) as f64)
                .collect();
            let emp = empirical_cdf(&s.times, &ts);
            let _ = writeln!(body, "t,empirical_cdf,levy_cdf");
            for (t, e) in ts.iter().zip(emp) {
                let _ = writeln!(body, "{},{},{}", num(*t), num(e), num(levy_fpt_cdf(*a, *t)));
            }
            let ks = ks_distance(&s.times, |t| levy_fpt_cdf(*a, t));
            let _ = writeln!(body, "# ks_distance = {}", num(ks));
            let _ = writeln!(body, "# n_capped = {}", s.n_capped);
        }
        Command::Overshoot {
            seed,
            n,
            dt,
            method,
            step_cap,
        } => {
            let m = match method.as_str() {
                "skip-ahead" => OvershootMethod::SkipAhead,
                "stepwise" => OvershootMethod::Stepwise,
                _ => return Err(usage(format!("unknown method '{method}'"))),
            };
            let r = overshoot_stats_with(*dt, *n, *seed, m, *step_cap)?;
            warn_capped(warnings, r.n_capped);
            let _ = writeln!(body, "dt,n,mean,stderr,limit");
            let _ = writeln!(
                body,
                "{},{},{},{},{}",
                num(*dt),
                r.n,
                num(r.mean),
                num(r.stderr),
                num(OVERSHOOT_CONSTANT)
            );
        }
        Command::TdlTrain {
            common,
            walkers,
            dt,
            mode,
            stop,
            basis,
            rates,
            rate_scale,
            decay,
            record_stride,
            max_steps,
        } => {
            let entry = problem(common)?;
            let cfg = common.estimator_config().map_err(usage)?;
            let basis = if basis == "default" {
                entry.default_basis.clone().ok_or_else(|| {
                    usage(format!("problem '{}' has no default basis", entry.name))
                })?
            } else {
                FeatureBasis::parse(basis).map_err(usage)?
            };
            if !(*decay > 0.0 && *decay <= 1.0) {
                return Err(usage(format!("--decay {decay} not in (0, 1]")));
            }
            let schedule = if rates == "auto" {
                let mut s = LearningSchedule::auto(&entry.spec, &basis, *dt, common.seed)?;
                let scale = rate_scale / tdl::AUTO_RATE_SCALE;
                s.initial.iter_mut().for_each(|a| *a *= scale);
                s.decay = Decay::Geometric {
                    ratio: *decay,
                    stride: 1,
                };
                s
            } else {
                let initial = rates
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| usage(format!("invalid rates '{rates}'")))?;
                LearningSchedule {
                    initial,
                    decay: Decay::Geometric {
                        ratio: *decay,
                        stride: 1,
                    },
                }
            };
            schedule.validate(basis.len()).map_err(usage)?;
            let opts = TrainOptions {
                n_walkers: *walkers,
                dt: *dt,
                mode: *mode,
                stop: *stop,
                seed: common.seed,
                record_stride: *record_stride,
                max_steps: *max_steps,
            };
            let labels = basis.labels();
            let report = tdl::train(&entry.spec, basis, &cfg, &schedule, &opts)?;
            let _ = writeln!(body, "step,exits_so_far,{}", labels.join(","));
            for row in &report.trajectory {
                let cs: Vec<String> = row.coefficients.iter().map(|&c| num(c)).collect();
                let _ = writeln!(body, "{},{},{}", row.step, row.exits, cs.join(","));
            }
            let _ = writeln!(body, "# transitions = {}", report.transitions);
            let _ = writeln!(body, "# exits = {}", report.exits);
            for (l, c) in labels.iter().zip(&report.model.coefficients) {
                let _ = writeln!(body, "# final {l} = {}", num(*c));
            }
        }
        Command::OracleCheck => {
            let checks = oracle_checks()?;
            let _ = writeln!(body, "check,value,reference,abs_error,tolerance,pass");
            for c in &checks {
                let _ = writeln!(
                    body,
                    "{},{},{},{},{},{}",
                    c.name,
                    num(c.value),
                    num(c.reference),
                    num((c.value - c.reference).abs()),
                    num(c.tolerance),
                    c.pass() as u8
                );
            }
            if checks.iter().any(|c| !c.pass()) {
                code = EXIT_RUNTIME;
            }
        }
    }
    Ok((body, code))
}

fn warn_capped(warnings: &mut Vec<String>, n: u64) {
    if n > 0 {
        warnings.push(format!("{n} walkers hit the step cap and were excluded"));
    }
}

/// One analytic identity checked numerically.
#[derive(Debug, Clone)]
pub struct OracleCheck {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    /// Absolute for bounds checks, relative otherwise.
    pub tolerance: f64,
    pub relative: bool,
}

impl OracleCheck {
    pub fn pass(&self) -> bool {
        let e = (self.value - self.reference).abs();
        if self.relative {
            e <= self.tolerance * self.reference.abs()
        } else {
            e <= self.tolerance
        }
    }
}

/// Closed-form exit-time mean, local-time identity, density normalization and
/// Mills-ratio bounds, each against quadrature or the bound itself.
pub fn oracle_checks() -> Result<Vec<OracleCheck>> {
    use stochastics::quadrature::{integrate_smoothstep, integrate_to_infinity};
    use stochastics::{exit_time_density, expected_exit_time, local_time_tail, mills_ratio_bounds};

    let mut out = Vec::new();
    for &a in &[0.25, 0.5, 0.75] {
        for &dt in &[0.1, 1.0, 10.0] {
            let x = 1.0;
            let e = expected_exit_time(a, x, dt)?;
            let q = integrate_smoothstep(
                |t| t * exit_time_density(-a, x - a, dt, t).unwrap_or(0.0),
                0.0,
                dt,
                1e-9 * e,
            )?;
            out.push(OracleCheck {
                name: format!("mean_exit_time(a={a};x={x};dt={dt})"),
                value: e,
                reference: q.value,
                tolerance: 1e-6,
                relative: true,
            });
            let l = integrate_to_infinity(|y| local_time_tail(a, x, dt, y), 0.0, 1e-10 * e)?;
            out.push(OracleCheck {
                name: format!("local_time_identity(a={a};x={x};dt={dt})"),
                value: e,
                reference: a * l.value,
                tolerance: 1e-6,
                relative: true,
            });
        }
    }
    for &(ro, rn, dt) in &[(-1.0, 1.0, 1.0), (-0.3, 0.2, 0.1), (-2.0, 0.5, 10.0)] {
        let q = integrate_smoothstep(
            |t| exit_time_density(ro, rn, dt, t).unwrap_or(0.0),
            0.0,
            dt,
            1e-9,
        )?;
        out.push(OracleCheck {
            name: format!("density_mass(rho_old={ro};rho_new={rn};dt={dt})"),
            value: q.value,
            reference: 1.0,
            tolerance: 1e-6,
            relative: false,
        });
    }
    let grid = |lo: f64, hi: f64, i: usize| lo * (hi / lo).powf(i as f64 / 9.0);
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let x = grid(0.05, 20.0, i);
        for j in 0..10 {
            let a = x * (j as f64 + 0.5) / 10.0;
            for k in 0..10 {
                let dt = grid(1e-3, 100.0, k);
                let r = expected_exit_time(a, x, dt)? / (a / x * dt);
                let (lo, hi) = mills_ratio_bounds(x, dt);
                worst = worst.max(lo - r).max(r - hi);
            }
        }
    }
    out.push(OracleCheck {
        name: "mills_ratio_bounds_violation".into(),
        value: worst.max(0.0),
        reference: 0.0,
        tolerance: 1e-12,
        relative: false,
    });
    Ok(out)
}
