//! The `levels-lab` command line.
//!
//! Exit codes: 0 success, 1 a check or evaluation failed, 2 the
//! configuration or command line was invalid.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bridge::GridSpec;
use crate::config::Config;
use crate::dynamics::{descent_cascade, orbit_explore, search_descent, DescentSearch};
use crate::error::LabError;
use crate::generators::{IntervalAction, Letter, MapKind, Word};
use crate::output::{fmt_float, to_json, write_atomic, Csv};
use crate::partition::{LocalPoint, Params, PartitionModel, Schedule};
use crate::regularity::{
    check_parameters, default_theta_epsilon, empirical_holder_sweep, estimate_quantities, lambda_bounds_report,
    summarize_sweep, ParameterCheck, SweepRow, GOLDEN_THRESHOLD,
};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "LEVELS_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "levels-lab", version, about = "Level-descent interval diffeomorphisms: tables, evaluation, regularity and descent certificates")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    k_max: Option<u32>,
    /// pow2 or linear
    #[arg(long, global = true)]
    schedule: Option<Schedule>,
    /// Output directory; without it the main result goes to stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the parameter conditions
    Params,
    /// Write the partition (JSON) and per-level table (CSV)
    Table,
    /// Evaluate f, g or a word at points, or sample a graph
    Eval(EvalArgs),
    /// Estimate quantities and lambda bounds only, without the seminorm sweep
    Estimates,
    /// Estimate quantities, lambda bounds and empirical seminorm sweep
    Holder {
        /// Depths as `6-12` or `6,8,10`
        #[arg(long)]
        depths: Option<String>,
    },
    /// Descent certificates for every level, or a cascade
    Descent {
        #[arg(long)]
        m_max: Option<u64>,
        /// `FROM:TO`
        #[arg(long)]
        cascade: Option<String>,
    },
    /// Breadth-first exploration of an orbit
    Orbit {
        /// Start point (same syntax as `eval --points`)
        #[arg(long)]
        start: String,
        #[arg(long, default_value_t = 8)]
        length: usize,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        /// Letters from `F f G g` (lower case = inverse); default all four
        #[arg(long)]
        alphabet: Option<String>,
    },
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, default_value = "f")]
    map: MapKind,
    #[arg(long)]
    inverse: bool,
    /// Comma-separated: `0.01`, `a:N`, `b:K`, `c:K`, `u:K`, `v:K`, `N@s`
    #[arg(long)]
    points: Option<String>,
    /// Word such as `F^-2 G^3`, applied left to right instead of `--map`
    #[arg(long)]
    word: Option<String>,
    /// Number of evenly spaced graph samples
    #[arg(long)]
    resolution: Option<usize>,
}

enum Failure {
    Config(String),
    Check(String),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Parameter(_) | LabError::Threshold { .. } => Failure::Config(e.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

type CmdResult = std::result::Result<bool, Failure>;

struct Ctx {
    config: Config,
    /// Buffered stdout, flushed after the command finishes.
    stdout: Vec<u8>,
}

impl Ctx {
    fn emit(&mut self, files: &[(&str, String)]) -> std::result::Result<(), Failure> {
        match &self.config.out {
            Some(dir) => {
                for (name, body) in files {
                    let path = dir.join(name);
                    write_atomic(&path, body.as_bytes())
                        .map_err(|e| Failure::Check(format!("writing {}: {e}", path.display())))?;
                }
                Ok(())
            }
            None => {
                let (_, body) = files.first().expect("at least one output");
                self.stdout.extend_from_slice(body.as_bytes());
                Ok(())
            }
        }
    }
}

/// Runs the CLI with the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let config = match build_config(&cli.global) {
        Ok(c) => c,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return 2;
        }
    };
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok());
    let mut ctx = Ctx {
        config,
        stdout: Vec::new(),
    };
    let result = match threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, &mut ctx)),
            Err(e) => Err(Failure::Config(format!("{THREADS_ENV}: {e}"))),
        },
        _ => dispatch(&cli.command, &mut ctx),
    };
    if out.write_all(&ctx.stdout).and_then(|_| out.flush()).is_err() {
        return 1;
    }
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Check(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Config(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn build_config(g: &GlobalArgs) -> std::result::Result<Config, String> {
    let mut c = match &g.config {
        Some(path) => Config::load(path).map_err(|e| e.to_string())?,
        None => Config::default(),
    };
    if let Some(a) = g.alpha {
        c.alpha = a;
    }
    if let Some(k) = g.k_max {
        c.k_max = k;
    }
    if let Some(s) = g.schedule {
        c.schedule = s;
    }
    if let Some(o) = &g.out {
        c.out = Some(o.clone());
    }
    if let Some(s) = g.seed {
        c.seed = s;
    }
    if let Some(p) = g.precision_bits {
        c.precision_bits = p;
    }
    Ok(c)
}

fn dispatch(cmd: &Command, ctx: &mut Ctx) -> CmdResult {
    match cmd {
        Command::Params => cmd_params(ctx),
        Command::Table => cmd_table(ctx),
        Command::Eval(args) => cmd_eval(ctx, args),
        Command::Estimates => cmd_estimates(ctx),
        Command::Holder { depths } => cmd_holder(ctx, depths.as_deref()),
        Command::Descent { m_max, cascade } => cmd_descent(ctx, *m_max, cascade.as_deref()),
        Command::Orbit {
            start,
            length,
            budget,
            alphabet,
        } => cmd_orbit(ctx, start, *length, *budget, alphabet.as_deref()),
    }
}

#[derive(Serialize)]
struct ParamsVerdict {
    alpha: f64,
    threshold: f64,
    below_threshold: bool,
    theta: Option<f64>,
    epsilon: Option<f64>,
    check: Option<ParameterCheck>,
    pass: bool,
    message: String,
}

fn cmd_params(ctx: &mut Ctx) -> CmdResult {
    let c = &ctx.config;
    if !(c.alpha.is_finite() && c.alpha > 0.0) {
        return Err(Failure::Config(format!("alpha must be finite and > 0, got {}", c.alpha)));
    }
    let chosen = match (c.theta, c.epsilon) {
        (None, None) => default_theta_epsilon(c.alpha),
        _ => c.theta_epsilon(),
    };
    let verdict = match chosen {
        Ok((theta, epsilon)) => {
            let check = check_parameters(c.alpha, theta, epsilon);
            ParamsVerdict {
                alpha: c.alpha,
                threshold: GOLDEN_THRESHOLD,
                below_threshold: c.alpha < GOLDEN_THRESHOLD,
                theta: Some(theta),
                epsilon: Some(epsilon),
                check: Some(check),
                pass: check.pass,
                message: if check.pass {
                    "all three conditions hold".into()
                } else {
                    format!("conditions fail; admissible alpha satisfy alpha < (sqrt(5)-1)/2 = {GOLDEN_THRESHOLD}")
                },
            }
        }
        Err(e @ LabError::Threshold { .. }) => ParamsVerdict {
            alpha: c.alpha,
            threshold: GOLDEN_THRESHOLD,
            below_threshold: false,
            theta: None,
            epsilon: None,
            check: None,
            pass: false,
            message: e.to_string(),
        },
        Err(e) => return Err(e.into()),
    };
    ctx.emit(&[("params.json", to_json(&verdict))])?;
    Ok(verdict.pass)
}

fn levels_csv(model: &PartitionModel) -> std::result::Result<String, Failure> {
    let mut csv = Csv::with_header(&["k", "n_k", "b_k", "c_k", "u_k", "v_k", "bc_length", "uv_length", "lambda"]);
    for l in model.levels() {
        let g = |p: LocalPoint| model.global(&p);
        let lambda = if l.k < model.k_max() {
            fmt_float(model.lambda(l.k)?)
        } else {
            String::new()
        };
        csv.row([
            l.k.to_string(),
            l.n.to_string(),
            fmt_float(g(LocalPoint::interior(l.n, l.b))?),
            fmt_float(g(LocalPoint::interior(l.n, l.c))?),
            fmt_float(g(LocalPoint::interior(l.n, l.u))?),
            fmt_float(g(LocalPoint::interior(l.n, l.v))?),
            fmt_float(l.bc_length),
            fmt_float(l.uv_length),
            lambda,
        ]);
    }
    Ok(csv.into_string())
}

fn cmd_table(ctx: &mut Ctx) -> CmdResult {
    let model = PartitionModel::build(&ctx.config.params()?)?;
    let csv = levels_csv(&model)?;
    let json = to_json(&model.document());
    ctx.emit(&[("levels.csv", csv), ("partition.json", json)])?;
    Ok(true)
}

/// Parses one point token.
pub fn parse_point(model: &PartitionModel, token: &str) -> crate::Result<LocalPoint> {
    let token = token.trim();
    if let Some((n, s)) = token.split_once('@') {
        let n: i64 = n.trim().parse().map_err(|_| LabError::parameter(format!("bad interval in `{token}`")))?;
        let s: f64 = s.trim().parse().map_err(|_| LabError::parameter(format!("bad offset in `{token}`")))?;
        if !(0.0..=1.0).contains(&s) {
            return Err(LabError::domain(format!("offset {s} outside [0, 1]")));
        }
        model.interval_length(n)?;
        return Ok(model.canonical(n, s));
    }
    if let Some((name, idx)) = token.split_once(':') {
        let bad = || LabError::parameter(format!("bad index in `{token}`"));
        return match name.trim() {
            "a" => model.point_a(idx.trim().parse().map_err(|_| bad())?),
            "b" => model.point_b(idx.trim().parse().map_err(|_| bad())?),
            "c" => model.point_c(idx.trim().parse().map_err(|_| bad())?),
            "u" => model.point_u(idx.trim().parse().map_err(|_| bad())?),
            "v" => model.point_v(idx.trim().parse().map_err(|_| bad())?),
            other => Err(LabError::parameter(format!("unknown point name `{other}`"))),
        };
    }
    let x: f64 = token.parse().map_err(|_| LabError::parameter(format!("bad point `{token}`")))?;
    if !(0.0..=1.0).contains(&x) {
        return Err(LabError::domain(format!("x = {x} outside [0, 1]")));
    }
    model.local(x)
}

fn cmd_eval(ctx: &mut Ctx, args: &EvalArgs) -> CmdResult {
    let action = IntervalAction::build(&ctx.config.params()?)?;
    let model = action.model();
    let word = match &args.word {
        Some(w) => Some(w.parse::<Word>()?),
        None => None,
    };

    let mut csv = Csv::with_header(&["input", "x", "y", "dydx", "status"]);
    let mut all_ok = true;
    let inputs: Vec<(String, crate::Result<LocalPoint>)> = match (&args.points, args.resolution) {
        (Some(list), _) => list
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| (t.trim().to_string(), parse_point(model, t)))
            .collect(),
        (None, Some(res)) => {
            if word.is_some() || args.inverse {
                return Err(Failure::Config("--resolution samples the forward map only".into()));
            }
            for (x, y, d) in action.sample_graph(args.map, res)? {
                csv.row([fmt_float(x), fmt_float(x), fmt_float(y), fmt_float(d), "ok".into()]);
            }
            ctx.emit(&[("eval.csv", csv.into_string())])?;
            return Ok(true);
        }
        (None, None) => return Err(Failure::Config("eval needs --points or --resolution".into())),
    };

    for (label, parsed) in inputs {
        let result = parsed.and_then(|p| {
            let (q, d) = match &word {
                Some(w) => action.apply_word_with_derivative(w, &p)?,
                None if args.inverse => action.map(args.map).eval_inverse_with_derivative(&p)?,
                None => action.map(args.map).eval_with_derivative(&p)?,
            };
            Ok((model.global(&p)?, model.global(&q)?, d))
        });
        match result {
            Ok((x, y, d)) => csv.row([label, fmt_float(x), fmt_float(y), fmt_float(d), "ok".into()]),
            Err(e) => {
                all_ok = false;
                csv.row([label, String::new(), String::new(), String::new(), e.to_string().replace(',', ";")]);
            }
        }
    }
    ctx.emit(&[("eval.csv", csv.into_string())])?;
    Ok(all_ok)
}

fn parse_depths(text: &str) -> std::result::Result<Vec<u32>, Failure> {
    let bad = || Failure::Config(format!("bad depth list `{text}`"));
    if let Some((a, b)) = text.split_once('-') {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

#[derive(Serialize)]
struct EstimatesSummary<'a> {
    params: Params,
    lambda_bounds: &'a crate::regularity::LambdaBoundsReport,
    estimates: &'a crate::regularity::EstimateReport,
}

fn cmd_estimates(ctx: &mut Ctx) -> CmdResult {
    let params = ctx.config.params()?;
    let model = PartitionModel::build(&params)?;
    let lambda = lambda_bounds_report(&model)?;
    let estimates = estimate_quantities(&model, params.alpha)?;
    let summary = EstimatesSummary {
        params,
        lambda_bounds: &lambda,
        estimates: &estimates,
    };
    ctx.emit(&[("estimates.json", to_json(&summary)), ("estimates.csv", estimates.to_csv())])?;
    Ok(true)
}

#[derive(Serialize)]
struct HolderSummary<'a> {
    params: Params,
    lambda_bounds: &'a crate::regularity::LambdaBoundsReport,
    estimates: &'a crate::regularity::EstimateReport,
    sweep_f: &'a [SweepRow],
    sweep_g: &'a [SweepRow],
    sweep_f_summary: Option<crate::regularity::SweepSummary>,
    sweep_g_summary: Option<crate::regularity::SweepSummary>,
    /// Same sweep of `f'` with `n_k = 2^k`, reported when the run uses `n_k = k`.
    negative_control_pow2_f: Option<&'a [SweepRow]>,
}

fn cmd_holder(ctx: &mut Ctx, depths: Option<&str>) -> CmdResult {
    let params = ctx.config.params()?;
    let grid: GridSpec = ctx.config.grid_spec()?;
    let depths = match depths {
        Some(t) => parse_depths(t)?,
        None => ctx.config.depths(),
    };
    let model = PartitionModel::build(&params)?;
    let lambda = lambda_bounds_report(&model)?;
    let estimates = estimate_quantities(&model, params.alpha)?;
    let sweep_f = empirical_holder_sweep(&params, MapKind::F, &depths, &grid)?;
    let sweep_g = empirical_holder_sweep(&params, MapKind::G, &depths, &grid)?;
    let control = if params.schedule == Schedule::Linear {
        Some(empirical_holder_sweep(
            &params.with_schedule(Schedule::PowersOfTwo),
            MapKind::F,
            &depths,
            &grid,
        )?)
    } else {
        None
    };

    let mut header = vec!["depth", "f_seminorm", "g_seminorm", "floor"];
    if control.is_some() {
        header.push("pow2_f_seminorm");
    }
    let mut sweep_csv = Csv::with_header(&header);
    for (idx, (f, g)) in sweep_f.iter().zip(&sweep_g).enumerate() {
        let mut row = vec![f.depth.to_string(), fmt_float(f.seminorm), fmt_float(g.seminorm), fmt_float(f.floor)];
        if let Some(c) = &control {
            row.push(fmt_float(c[idx].seminorm));
        }
        sweep_csv.row(row);
    }

    let summary = HolderSummary {
        params,
        lambda_bounds: &lambda,
        estimates: &estimates,
        sweep_f: &sweep_f,
        sweep_g: &sweep_g,
        sweep_f_summary: summarize_sweep(&sweep_f),
        sweep_g_summary: summarize_sweep(&sweep_g),
        negative_control_pow2_f: control.as_deref(),
    };
    ctx.emit(&[
        ("holder.json", to_json(&summary)),
        ("estimates.csv", estimates.to_csv()),
        ("sweep.csv", sweep_csv.into_string()),
    ])?;
    Ok(true)
}

#[derive(Serialize)]
struct DescentDocument {
    m_max: u64,
    all_found: bool,
    searches: Vec<DescentSearch>,
}

fn cmd_descent(ctx: &mut Ctx, m_max: Option<u64>, cascade: Option<&str>) -> CmdResult {
    let action = IntervalAction::build(&ctx.config.params()?)?;
    let m_max = m_max.unwrap_or(ctx.config.m_max);
    let cascade = match cascade {
        Some(t) => {
            let (a, b) = t
                .split_once(':')
                .ok_or_else(|| Failure::Config(format!("cascade must be FROM:TO, got `{t}`")))?;
            let parse = |s: &str| s.trim().parse::<u32>().map_err(|_| Failure::Config(format!("bad cascade `{t}`")));
            Some([parse(a)?, parse(b)?])
        }
        None => ctx.config.cascade,
    };
    if let Some([from, to]) = cascade {
        let report = descent_cascade(&action, from, to, m_max)?;
        ctx.emit(&[("cascade.json", to_json(&report))])?;
        return Ok(report.complete);
    }
    let searches = (1..action.model().k_max())
        .map(|k| search_descent(&action, k, action.model().point_u(k)?, m_max))
        .collect::<crate::Result<Vec<_>>>()?;
    let doc = DescentDocument {
        m_max,
        all_found: searches.iter().all(|s| s.certificate.is_some()),
        searches,
    };
    ctx.emit(&[("descent.json", to_json(&doc))])?;
    Ok(doc.all_found)
}

fn parse_alphabet(text: &str) -> std::result::Result<Vec<Letter>, Failure> {
    text.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            'F' => Ok(Letter::F),
            'f' => Ok(Letter::FInv),
            'G' => Ok(Letter::G),
            'g' => Ok(Letter::GInv),
            other => Err(Failure::Config(format!("unknown letter `{other}` in alphabet"))),
        })
        .collect()
}

fn cmd_orbit(ctx: &mut Ctx, start: &str, length: usize, budget: usize, alphabet: Option<&str>) -> CmdResult {
    let action = IntervalAction::build(&ctx.config.params()?)?;
    let start = parse_point(action.model(), start)?;
    let letters = match alphabet {
        Some(a) => parse_alphabet(a)?,
        None => Letter::ALL.to_vec(),
    };
    let report = orbit_explore(&action, start, length, budget, &letters)?;
    ctx.emit(&[("orbit.json", to_json(&report))])?;
    Ok(!report.truncated)
}
