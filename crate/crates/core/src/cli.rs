//! Command-line front end. `run` takes the raw argument list and returns
//! the process exit status: 0 on success, 1 when a check fails, 2 on a
//! usage error.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::arbitrage::{
    build_nu, build_theta, build_theta_bar, market_verdicts, symbolic_ip_check, FeedbackStrategy, NuBundle,
};
use crate::backtest::{backtest, value_series, BacktestConfig, Route, Verdict};
use crate::catalog::{catalog, find, regression, CatalogEntry, Params};
use crate::config::parse_model_file;
use crate::error::{Error, Result};
use crate::measures::BorelSetRepr;
use crate::model::{to_natural_scale, validate, DiffusionSpec, NaturalScaleModel};
use crate::simulate::{build_chain, sample_path, McConfig, Probes, DEFAULT_STEP_BUDGET};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gdarb", version, about = "Increasing-profit analysis of one-dimensional general diffusion markets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build ν and decide NIP, QVIP and RP; writes nu_report.csv and verdicts.csv.
    Analyze {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sample paths of the grid chain; writes paths.csv.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Backtest strategies; writes ip_report.csv and value_series.csv.
    Backtest {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Strategies to backtest (repeatable).
        #[arg(long = "strategy", value_enum, default_values_t = [StrategyChoice::Theta, StrategyChoice::ThetaBar])]
        strategies: Vec<StrategyChoice>,
        /// Paths whose value processes go to value_series.csv.
        #[arg(long, default_value_t = 5)]
        series_paths: usize,
    },
    /// Run the regression of a catalog example; `--<param> value` sets its parameters.
    Demo {
        /// Catalog name; `gdarb demo list` prints the catalog.
        name: String,
        #[arg(long = "param", value_name = "K=V")]
        params: Vec<String>,
        #[command(flatten)]
        mc: McArgs,
        /// Writes regression.csv here when given.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model file.
    #[arg(long, conflicts_with = "example", required_unless_present = "example")]
    model: Option<PathBuf>,
    /// Catalog example name.
    #[arg(long)]
    example: Option<String>,
    /// Example parameter override (repeatable).
    #[arg(long = "param", value_name = "K=V")]
    params: Vec<String>,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct McArgs {
    /// Grid spacing in natural scale.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Horizon.
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest mean relative discrepancy between the two value routes.
    #[arg(long)]
    tol_route: Option<f64>,
}

/// Strategies offered by `backtest`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyChoice {
    Theta,
    ThetaBar,
    NegTheta,
    Hold,
}

impl StrategyChoice {
    pub fn name(self) -> &'static str {
        match self {
            StrategyChoice::Theta => "theta",
            StrategyChoice::ThetaBar => "theta_bar",
            StrategyChoice::NegTheta => "neg_theta",
            StrategyChoice::Hold => "hold",
        }
    }

    pub fn build(self, bundle: &NuBundle) -> FeedbackStrategy {
        match self {
            StrategyChoice::Theta => build_theta(bundle),
            StrategyChoice::ThetaBar => build_theta_bar(bundle),
            StrategyChoice::NegTheta => build_theta(bundle).negated(),
            StrategyChoice::Hold => FeedbackStrategy::constant(1.0),
        }
    }
}

/// Where the model comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    File(PathBuf),
    Example { name: String, params: Vec<(String, f64)> },
}

/// A fully parsed command line.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: &'static str,
    pub source: ModelSource,
    pub backtest: BacktestConfig,
    pub out: Option<PathBuf>,
    pub quiet: bool,
    pub strategies: Vec<StrategyChoice>,
    /// Paths written to value_series.csv.
    pub series_paths: usize,
}

fn parse_kv(s: &str) -> Result<(String, f64)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Argument(format!("--param expects K=V, got '{s}'")))?;
    let x: f64 = v.trim().parse().map_err(|_| Error::Argument(format!("--param {k}: '{v}' is not a number")))?;
    Ok((k.trim().to_string(), x))
}

fn source_of(m: &ModelArgs) -> Result<ModelSource> {
    let params = m.params.iter().map(|s| parse_kv(s)).collect::<Result<Vec<_>>>()?;
    match (&m.model, &m.example) {
        (Some(p), _) if params.is_empty() => Ok(ModelSource::File(p.clone())),
        (Some(_), _) => Err(Error::Argument("--param applies to --example only".into())),
        (None, Some(name)) => Ok(ModelSource::Example { name: name.clone(), params }),
        (None, None) => Err(Error::Argument("one of --model or --example is required".into())),
    }
}

fn backtest_config(mc: &McArgs, default_paths: usize) -> BacktestConfig {
    let d = BacktestConfig::default();
    BacktestConfig {
        mc: McConfig {
            n_paths: mc.paths.unwrap_or(default_paths),
            h: mc.h.unwrap_or(d.mc.h),
            horizon: mc.horizon.unwrap_or(d.mc.horizon),
            seed: mc.seed.unwrap_or(d.mc.seed),
            step_budget: DEFAULT_STEP_BUDGET,
        },
        tol_route: mc.tol_route.unwrap_or(d.tol_route),
        ..d
    }
}

/// Rewrites `--<param> v` into `--param <param>=v` for the parameters of the
/// catalog entry named after `demo` or `--example`.
fn expand_param_flags(args: Vec<String>) -> Vec<String> {
    let name = args
        .windows(2)
        .find(|w| w[0] == "demo" || w[0] == "--example")
        .map(|w| w[1].clone())
        .or_else(|| args.iter().find_map(|a| a.strip_prefix("--example=").map(str::to_string)));
    let Some(entry) = name.and_then(|n| find(&n).ok()) else { return args };
    let is_param = |k: &str| entry.params.iter().any(|p| p.name == k);
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.strip_prefix("--") {
            Some(rest) if rest.split_once('=').is_some_and(|(k, _)| is_param(k)) => {
                out.push("--param".into());
                out.push(rest.to_string());
            }
            Some(k) if is_param(k) => {
                out.push("--param".into());
                out.push(format!("{k}={}", it.next().unwrap_or_default()));
            }
            _ => out.push(a),
        }
    }
    out
}

/// Parses the argument list (including the program name).
pub fn parse_args(args: Vec<String>) -> std::result::Result<RunConfig, clap::Error> {
    let cli = Cli::try_parse_from(expand_param_flags(args))?;
    let usage = |e: Error| clap::Error::raw(clap::error::ErrorKind::ValueValidation, format!("{e}\n"));
    let cfg = match cli.command {
        Command::Analyze { model, out } => RunConfig {
            command: "analyze",
            source: source_of(&model).map_err(usage)?,
            backtest: BacktestConfig::default(),
            out: Some(out.out),
            quiet: out.quiet,
            strategies: vec![],
            series_paths: 0,
        },
        Command::Simulate { model, mc, out } => RunConfig {
            command: "simulate",
            source: source_of(&model).map_err(usage)?,
            backtest: backtest_config(&mc, 10),
            out: Some(out.out),
            quiet: out.quiet,
            strategies: vec![],
            series_paths: 0,
        },
        Command::Backtest { model, mc, out, strategies, series_paths } => RunConfig {
            command: "backtest",
            source: source_of(&model).map_err(usage)?,
            backtest: backtest_config(&mc, 10_000),
            out: Some(out.out),
            quiet: out.quiet,
            strategies,
            series_paths,
        },
        Command::Demo { name, params, mc, out, quiet } => RunConfig {
            command: "demo",
            source: ModelSource::Example {
                name,
                params: params.iter().map(|s| parse_kv(s)).collect::<Result<_>>().map_err(usage)?,
            },
            backtest: backtest_config(&mc, 10_000),
            out,
            quiet,
            strategies: vec![],
            series_paths: 0,
        },
    };
    Ok(cfg)
}

/// Entry point of the binary.
pub fn run(args: Vec<String>) -> i32 {
    let cfg = match parse_args(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let ModelSource::Example { name, .. } = &cfg.source {
        if cfg.command == "demo" && name == "list" {
            list_catalog();
            return EXIT_OK;
        }
    }
    match execute(&cfg) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Argument(_) | Error::Parse { .. } | Error::Io(_) => EXIT_USAGE,
                _ => EXIT_CHECK_FAILED,
            }
        }
    }
}

fn list_catalog() {
    for e in catalog() {
        let params: Vec<String> = e.params.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
        println!("{:<26}{}  [{}]", e.name, e.title, params.join(" "));
    }
}

fn resolve_example(name: &str, params: &[(String, f64)]) -> Result<(CatalogEntry, Params)> {
    let entry = find(name)?;
    let p = entry.resolve(params.iter().map(|(k, v)| (k.as_str(), *v)))?;
    Ok((entry, p))
}

fn load_spec(source: &ModelSource) -> Result<(String, DiffusionSpec)> {
    match source {
        ModelSource::File(p) => Ok((p.display().to_string(), parse_model_file(p)?)),
        ModelSource::Example { name, params } => {
            let (entry, p) = resolve_example(name, params)?;
            Ok((entry.name.to_string(), entry.build(&p)?))
        }
    }
}

fn load_model(cfg: &RunConfig) -> Result<(String, NaturalScaleModel)> {
    let (label, spec) = load_spec(&cfg.source)?;
    let model = to_natural_scale(&spec)?;
    let report = validate(&model);
    if !report.all_passed() {
        let lines: Vec<String> =
            report.failures().iter().map(|c| format!("{} ({}: {})", c.name, c.detail, c.value)).collect();
        return Err(Error::Model(format!("{label} fails validation: {}", lines.join("; "))));
    }
    Ok((label, model))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn finish(mut w: csv::Writer<BufWriter<File>>) -> Result<()> {
    w.flush().map_err(io)?;
    w.into_inner().map_err(io)?.flush().map_err(io)
}

fn describe_set(s: &BorelSetRepr) -> String {
    let (ivs, pts) = if s.svc().is_some() { (vec![], vec![]) } else { s.components() };
    let mut parts: Vec<String> = ivs
        .iter()
        .map(|i| {
            format!("{}{},{}{}", if i.lo_closed { '[' } else { '(' }, i.lo, i.hi, if i.hi_closed { ']' } else { ')' })
        })
        .collect();
    parts.extend(pts.iter().map(|p| format!("{{{p}}}")));
    if let Some(svc) = s.svc() {
        parts.push(format!("svc(depth={},[{},{}])", svc.depth, svc.lo, svc.hi));
    }
    if parts.is_empty() {
        "empty".into()
    } else {
        parts.join(" u ")
    }
}

/// Runs a parsed command; `Ok(false)` means a check failed.
pub fn execute(cfg: &RunConfig) -> Result<bool> {
    match cfg.command {
        "analyze" => analyze(cfg),
        "simulate" => simulate(cfg),
        "backtest" => run_backtest(cfg),
        _ => demo(cfg),
    }
}

fn analyze(cfg: &RunConfig) -> Result<bool> {
    let (label, model) = load_model(cfg)?;
    let bundle = build_nu(&model)?;
    let v = market_verdicts(&model, &bundle)?;
    let out = cfg.out.as_deref().unwrap_or(Path::new("."));

    let mut w = csv_writer(out, "nu_report.csv")?;
    w.write_record(["component", "location", "lo", "hi", "mass", "descriptor"]).map_err(io)?;
    for &(x, m) in bundle.nu.atoms() {
        w.write_record(["atom", &format!("{{{x}}}"), &num(x), &num(x), &num(m), ""]).map_err(io)?;
    }
    if let Some(ac) = bundle.nu.ac() {
        let d = &ac.density;
        for i in 0..d.segments().len() {
            let (lo, hi) = d.segment_bounds(i);
            let piece = ac.support.clip(lo, hi);
            if piece.is_empty() {
                continue;
            }
            let mass = bundle.nu.measure_of(&piece)?;
            let desc = format!("{} density on {}", d.segments()[i].kind_name(), describe_set(&piece));
            w.write_record(["density", &format!("[{lo},{hi}]"), &num(lo), &num(hi), &num(mass), &desc]).map_err(io)?;
        }
    }
    finish(w)?;

    let theta = build_theta(&bundle);
    let check = symbolic_ip_check(&model, &bundle, &theta)?;
    let mut w = csv_writer(out, "verdicts.csv")?;
    w.write_record([
        "model",
        "nip",
        "qvip",
        "rp",
        "nu_total_variation",
        "nu_ac_total_variation",
        "lambda_zero_set",
        "lambda_zero_set_with_density",
        "truncated",
        "theta_support",
        "theta_condition_i",
        "theta_condition_ii",
    ])
    .map_err(io)?;
    let e = &v.evidence;
    w.write_record([
        label.as_str(),
        &v.nip.to_string(),
        &v.qvip_exists.to_string(),
        &v.rp_holds.to_string(),
        &num(e.nu_total_variation),
        &num(e.nu_ac_total_variation),
        &num(e.lambda_zero),
        &num(e.lambda_zero_with_density),
        &e.truncated.to_string(),
        &describe_set(&theta.support()),
        &check.condition_i.to_string(),
        &check.condition_ii.to_string(),
    ])
    .map_err(io)?;
    finish(w)?;

    if !cfg.quiet {
        println!("{label}: nip={} qvip={} rp={} |nu|={}", v.nip, v.qvip_exists, v.rp_holds, e.nu_total_variation);
        for &(x, m) in bundle.nu.atoms() {
            println!("  atom {m} at {x}");
        }
        if e.nu_ac_total_variation > 0.0 {
            println!("  absolutely continuous part with total variation {}", e.nu_ac_total_variation);
        }
    }
    Ok(true)
}

fn simulate(cfg: &RunConfig) -> Result<bool> {
    let (label, model) = load_model(cfg)?;
    let mc = &cfg.backtest.mc;
    mc.validate()?;
    let chain = build_chain(&model, mc.h)?;
    let mut w = csv_writer(cfg.out.as_deref().unwrap_or(Path::new(".")), "paths.csv")?;
    w.write_record(["path_id", "t", "u", "absorbed"]).map_err(io)?;
    let (mut absorbed, mut escaped) = (0, 0);
    for id in 0..mc.n_paths as u64 {
        let p = sample_path(&chain, mc.horizon, mc.seed, id)?;
        let id_s = id.to_string();
        for (k, (&t, &s)) in p.times.iter().zip(&p.states).enumerate() {
            let dead = p.absorbed_at.is_some_and(|(ta, _)| k + 1 == p.times.len() && t >= ta);
            w.write_record([id_s.as_str(), &num(t), &num(chain.node(s).u), if dead { "1" } else { "0" }])
                .map_err(io)?;
        }
        absorbed += p.absorbed_at.is_some() as usize;
        escaped += p.left_window as usize;
    }
    finish(w)?;
    if !cfg.quiet {
        println!(
            "{label}: {} paths to T={}, {absorbed} absorbed, {escaped} reached the window edge",
            mc.n_paths, mc.horizon
        );
    }
    Ok(true)
}

fn run_backtest(cfg: &RunConfig) -> Result<bool> {
    let (label, model) = load_model(cfg)?;
    let bundle = build_nu(&model)?;
    let verdicts = market_verdicts(&model, &bundle)?;
    let mut choices = cfg.strategies.clone();
    choices.dedup();
    let strategies: Vec<FeedbackStrategy> = choices.iter().map(|c| c.build(&bundle)).collect();
    let bt = backtest(&model, &bundle, &strategies, &Probes::default(), &cfg.backtest)?;
    let out = cfg.out.as_deref().unwrap_or(Path::new("."));
    let mc = &cfg.backtest.mc;

    let mut w = csv_writer(out, "ip_report.csv")?;
    w.write_record([
        "example",
        "strategy",
        "h",
        "n_paths",
        "p_positive",
        "se",
        "monotone_fraction",
        "route_err",
        "verdict",
        "p_negative",
        "se_negative",
        "route_err_max",
        "mean_value",
        "mean_value_closed",
        "condition_i",
        "condition_ii",
        "max_martingale_activity",
        "clock_positive_fraction",
        "dominated_fraction",
        "qv_s_contacts",
        "window_fraction",
    ])
    .map_err(io)?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for (c, r) in choices.iter().zip(&bt.reports) {
        w.write_record([
            label.as_str(),
            c.name(),
            &num(mc.h),
            &r.n_paths.to_string(),
            &num(r.p_positive_terminal.p),
            &num(r.p_positive_terminal.se),
            &num(r.monotone_fraction),
            &opt(r.route_agreement),
            r.verdict.as_str(),
            &num(r.p_negative_terminal.p),
            &num(r.p_negative_terminal.se),
            &opt(r.route_max),
            &num(r.mean_integral),
            &num(r.mean_closed),
            &r.condition_i_ok.to_string(),
            &r.condition_ii_ok.to_string(),
            &num(r.max_martingale_activity),
            &num(r.empirical_iii.p),
            &num(r.dominated_fraction),
            &r.qv_s_contacts.to_string(),
            &num(r.window_fraction),
        ])
        .map_err(io)?;
    }
    finish(w)?;

    let mut w = csv_writer(out, "value_series.csv")?;
    w.write_record(["path_id", "strategy", "t", "value", "route"]).map_err(io)?;
    for (id, k, points) in value_series(&bt.chain, &bt.tables, mc, cfg.series_paths)? {
        let closed = bt.reports[k].symbolic.condition_i;
        for route in [Route::Integral, Route::ClosedForm] {
            if route == Route::ClosedForm && !closed {
                continue;
            }
            for p in &points {
                let v = if route == Route::Integral { p.v_integral } else { p.v_closed };
                w.write_record([id.to_string().as_str(), choices[k].name(), &num(p.t), &num(v), route.as_str()])
                    .map_err(io)?;
            }
        }
    }
    finish(w)?;

    // θ is an increasing profit exactly when NIP fails.
    let mut consistent = true;
    for (c, r) in choices.iter().zip(&bt.reports) {
        if *c == StrategyChoice::Theta {
            consistent &= if verdicts.nip { r.verdict == Verdict::Not } else { r.verdict == Verdict::IncreasingProfit };
        }
        if !cfg.quiet {
            println!(
                "{label} {:<10} {:<17} P(V_T>0)={:.4} (se {:.4}) monotone={:.4} route_err={}",
                c.name(),
                r.verdict.as_str(),
                r.p_positive_terminal.p,
                r.p_positive_terminal.se,
                r.monotone_fraction,
                r.route_agreement.map_or("n/a".into(), |e| format!("{e:.3e}")),
            );
        }
    }
    if !consistent {
        eprintln!("theta verdict disagrees with nip={}", verdicts.nip);
    }
    Ok(consistent)
}

fn demo(cfg: &RunConfig) -> Result<bool> {
    let ModelSource::Example { name, params } = &cfg.source else { unreachable!("demo takes a catalog name") };
    let (entry, p) = resolve_example(name, params)?;
    let rep = regression(&entry, &p, &cfg.backtest)?;
    if let Some(out) = &cfg.out {
        let mut w = csv_writer(out, "regression.csv")?;
        w.write_record([
            "example",
            "params",
            "nu_matches",
            "nip",
            "expected_nip",
            "theta_verdict",
            "p_positive",
            "se",
            "passed",
        ])
        .map_err(io)?;
        let ps: Vec<String> = p.iter().map(|(k, v)| format!("{k}={v}")).collect();
        w.write_record([
            entry.name,
            &ps.join(";"),
            &rep.nu_mismatch.is_none().to_string(),
            &rep.verdicts.nip.to_string(),
            &rep.expected_nip.to_string(),
            rep.theta.verdict.as_str(),
            &num(rep.theta.p_positive_terminal.p),
            &num(rep.theta.p_positive_terminal.se),
            &rep.passed.to_string(),
        ])
        .map_err(io)?;
        finish(w)?;
    }
    if !cfg.quiet {
        let ps: Vec<String> = p.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("{} ({})", entry.title, ps.join(", "));
        match &rep.nu_mismatch {
            None => println!("  nu matches the closed form"),
            Some(m) => println!("  nu mismatch: {m}"),
        }
        println!("  nip={} (expected {})", rep.verdicts.nip, rep.expected_nip);
        println!(
            "  theta: {} P(V_T>0)={:.4} monotone={:.4}",
            rep.theta.verdict.as_str(),
            rep.theta.p_positive_terminal.p,
            rep.theta.monotone_fraction
        );
        println!("  regression {}", if rep.passed { "passed" } else { "FAILED" });
    }
    Ok(rep.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn command_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn param_flags_expand_for_catalog_entries() {
        let a = expand_param_flags(args("gdarb demo bachelier-skew --kappa 0.75 --paths 10 --r=0.1"));
        assert_eq!(a, args("gdarb demo bachelier-skew --param kappa=0.75 --paths 10 --param r=0.1"));
        let a = expand_param_flags(args("gdarb backtest --example fat-cantor --depth 3"));
        assert_eq!(a, args("gdarb backtest --example fat-cantor --param depth=3"));
    }

    #[test]
    fn parsed_config_carries_defaults() {
        let c = parse_args(args("gdarb backtest --example bachelier-sticky --param rho=2 --T 0.5")).unwrap();
        assert_eq!(c.backtest.mc.n_paths, 10_000);
        assert_eq!(c.backtest.mc.horizon, 0.5);
        assert_eq!(
            c.source,
            ModelSource::Example { name: "bachelier-sticky".into(), params: vec![("rho".into(), 2.0)] }
        );
        assert!(parse_args(args("gdarb analyze")).is_err());
        assert!(parse_args(args("gdarb analyze --example x --param r")).is_err());
    }

    #[test]
    fn zero_paths_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let a = format!("gdarb backtest --example bachelier-skew --paths 0 --quiet --out {}", dir.path().display());
        assert_eq!(run(args(&a)), EXIT_USAGE);
    }
}
