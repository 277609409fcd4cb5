//! `gridbdd`: run feature files against grid levels, or serve levels over
//! the wire protocol.
//!
//! Exit codes: 0 all scenarios passed, 1 at least one failed, 2 usage,
//! parse or configuration error.

mod config;

use std::fs;
use std::io::{self, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::builder::BoolishValueParser;
use clap::{Args, Parser, Subcommand};
use gridbdd::bdd::{
    parse_feature, run_features, write_report, FeatureFile, Format, RunOptions, StepRegistry, LOAD_LEVEL_STEP,
};
use gridbdd::env::{serve_session, serve_tcp, EnvSession, LevelSet};

use config::FileConfig;

#[derive(Debug, Parser)]
#[command(
    name = "gridbdd",
    version,
    about = "Agent-driven Given-When-Then scenarios on grid levels"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run feature files and write a report.
    Run(RunArgs),
    /// Serve levels over the newline-delimited JSON protocol.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Feature files or directories of them.
    #[arg(value_name = "PATH")]
    paths: Vec<PathBuf>,
    /// More feature files or directories.
    #[arg(long = "features", value_name = "PATH")]
    features: Vec<PathBuf>,
    /// Directory holding `<name>.lvl` files.
    #[arg(long, env = "GRIDBDD_LEVELS")]
    levels: Option<PathBuf>,
    #[arg(long, env = "GRIDBDD_SEED")]
    seed: Option<u64>,
    /// Cycle budget per scenario.
    #[arg(long, env = "GRIDBDD_MAX_CYCLES")]
    max_cycles: Option<u64>,
    /// Report file; without it the report goes to stdout.
    #[arg(long, env = "GRIDBDD_REPORT")]
    report: Option<PathBuf>,
    /// json, xunit or text.
    #[arg(long, env = "GRIDBDD_FORMAT")]
    format: Option<String>,
    /// Report ticks instead of wall-clock seconds.
    #[arg(long, env = "GRIDBDD_FIXED_CLOCK", value_parser = BoolishValueParser::new())]
    fixed_clock: bool,
    /// Scenarios run in parallel.
    #[arg(long, env = "GRIDBDD_JOBS")]
    jobs: Option<usize>,
    /// Run against a server started with `gridbdd serve --bind`.
    #[arg(long, env = "GRIDBDD_CONNECT", value_name = "ADDR")]
    connect: Option<String>,
    /// Let Then steps read the true world instead of the agent's belief.
    #[arg(long, env = "GRIDBDD_OMNISCIENT_ORACLES", value_parser = BoolishValueParser::new())]
    omniscient_oracles: bool,
    /// TOML file with defaults for any of the above.
    #[arg(long, env = "GRIDBDD_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "GRIDBDD_LEVELS", default_value = "levels")]
    levels: PathBuf,
    /// Address to listen on, one session per connection.
    #[arg(
        long,
        conflicts_with = "stdio",
        required_unless_present = "stdio",
        value_name = "ADDR"
    )]
    bind: Option<String>,
    /// Serve a single session on stdin and stdout.
    #[arg(long)]
    stdio: bool,
}

#[derive(Debug)]
struct RunConfig {
    features: Vec<PathBuf>,
    levels: PathBuf,
    report: Option<PathBuf>,
    format: Format,
    connect: Option<String>,
    opts: RunOptions,
}

impl RunConfig {
    /// Flags and environment win over the config file, which wins over
    /// defaults.
    fn resolve(args: RunArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let mut features: Vec<PathBuf> = args.paths.into_iter().chain(args.features).collect();
        if features.is_empty() {
            features = file.features;
        }
        if features.is_empty() {
            bail!("no feature files given");
        }
        let levels = args.levels.or(file.levels).unwrap_or_else(|| PathBuf::from("levels"));
        let format = match args.format.or(file.format) {
            Some(f) => f.parse::<Format>()?,
            None if args.report.is_some() || file.report.is_some() => Format::Json,
            None => Format::Text,
        };
        let jobs = args.jobs.or(file.jobs).unwrap_or(1);
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        let opts = RunOptions {
            seed: args.seed.or(file.seed).unwrap_or(0),
            max_cycles: args
                .max_cycles
                .or(file.max_cycles)
                .unwrap_or(RunOptions::default().max_cycles),
            fixed_clock: args.fixed_clock.then_some(true).or(file.fixed_clock).unwrap_or(false),
            jobs,
            omniscient: args
                .omniscient_oracles
                .then_some(true)
                .or(file.omniscient_oracles)
                .unwrap_or(false),
            levels_label: levels.display().to_string(),
        };
        let connect = args.connect.or(file.connect);
        if connect.is_some() && opts.omniscient {
            bail!("--omniscient-oracles needs a local run");
        }
        Ok(RunConfig {
            features,
            levels,
            report: args.report.or(file.report),
            format,
            connect,
            opts,
        })
    }
}

fn collect_features(paths: &[PathBuf]) -> Result<Vec<(String, FeatureFile)>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("cannot read {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "feature"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    files
        .into_iter()
        .map(|path| {
            let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
            let label = path.display().to_string();
            let feature = parse_feature(&text).map_err(|e| anyhow::anyhow!("{label}:{e}"))?;
            Ok((label, feature))
        })
        .collect()
}

/// Every level a scenario loads must exist before anything runs.
fn check_levels(features: &[(String, FeatureFile)], registry: &StepRegistry, levels: &LevelSet) -> Result<()> {
    for (path, f) in features {
        for step in f.scenarios.iter().flat_map(|s| &s.steps) {
            let Ok(binding) = registry.match_step(step) else {
                continue;
            };
            if binding.definition.pattern != LOAD_LEVEL_STEP {
                continue;
            }
            let name = binding.args[0].as_str().unwrap_or_default();
            if let Err(e) = levels.source(name) {
                bail!("{path}:{}: {e}", step.line);
            }
        }
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let cfg = RunConfig::resolve(args)?;
    let features = collect_features(&cfg.features)?;
    let registry = StepRegistry::with_builtins();
    let levels = Arc::new(LevelSet::from_dir(&cfg.levels));
    let report = match &cfg.connect {
        Some(addr) => run_features(&features, &registry, &cfg.opts, &|| EnvSession::connect(addr.as_str())),
        None => {
            check_levels(&features, &registry, &levels)?;
            run_features(&features, &registry, &cfg.opts, &|| {
                Ok(EnvSession::in_process(Arc::clone(&levels)))
            })
        }
    }?;
    let bytes = write_report(&report, cfg.format);
    match &cfg.report {
        Some(path) => {
            write_file(path, &bytes)?;
            let t = report.totals;
            println!("{} scenarios: {} passed, {} failed", t.scenarios, t.passed, t.failed);
        }
        None => io::stdout().write_all(&bytes)?,
    }
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn serve(args: ServeArgs) -> Result<ExitCode> {
    if !args.levels.is_dir() {
        bail!("level directory {} does not exist", args.levels.display());
    }
    let levels = Arc::new(LevelSet::from_dir(args.levels));
    if args.stdio {
        serve_session(levels, io::stdin().lock(), io::stdout().lock())?;
        return Ok(ExitCode::SUCCESS);
    }
    let addr = args.bind.expect("clap requires --bind without --stdio");
    let listener = TcpListener::bind(&addr).with_context(|| format!("cannot bind {addr}"))?;
    eprintln!("listening on {}", listener.local_addr()?);
    serve_tcp(listener, levels)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Cmd::Run(args) => run(args),
        Cmd::Serve(args) => serve(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("gridbdd: {e:#}");
        ExitCode::from(2)
    })
}
