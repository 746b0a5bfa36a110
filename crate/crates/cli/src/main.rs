use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use boardnet::pipeline::PipelineConfig;
use boardnet::synth::SynthConfig;
use boardnet_cli::commands::{
    cmd_analyze, cmd_network_summary, cmd_synth, cmd_validate, parse_methods, timestamped_dir, InputPaths, RunConfig,
};
use boardnet_cli::config::{parse_list, pick, ConfigFile};

#[derive(Parser)]
#[command(name = "boardnet", version, about = "Interlocking-directorate networks versus stock co-movement")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "BOARDNET_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full per-year analysis and write reports.
    Analyze(AnalyzeArgs),
    /// Write a synthetic bundle with planted network/market coupling.
    Synth(SynthArgs),
    /// Check input files without running the analysis.
    Validate(ValidateArgs),
    /// Print descriptive network statistics as JSON.
    NetworkSummary(SummaryArgs),
}

#[derive(Args)]
struct Inputs {
    #[arg(long, env = "BOARDNET_BOARDS")]
    boards: Option<PathBuf>,
    #[arg(long, env = "BOARDNET_PRICES")]
    prices: Option<PathBuf>,
    #[arg(long, env = "BOARDNET_META")]
    meta: Option<PathBuf>,
    #[arg(long, env = "BOARDNET_TRADERS")]
    traders: Option<PathBuf>,
}

impl Inputs {
    fn resolve(self, file: Option<&ConfigFile>) -> Result<InputPaths> {
        let get = |flag: Option<PathBuf>, key: &str| -> Result<Option<PathBuf>> {
            Ok(flag.or(file.map(|f| f.get::<PathBuf>(key)).transpose()?.flatten()))
        };
        let need = |p: Option<PathBuf>, key: &str| p.with_context(|| format!("--{key} is required"));
        Ok(InputPaths {
            boards: need(get(self.boards, "boards")?, "boards")?,
            prices: need(get(self.prices, "prices")?, "prices")?,
            meta: need(get(self.meta, "meta")?, "meta")?,
            traders: get(self.traders, "traders")?,
        })
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Comma-separated years (default: every year with boards).
    #[arg(long, env = "BOARDNET_YEARS")]
    years: Option<String>,
    #[arg(long, env = "BOARDNET_REPLICATES")]
    replicates: Option<usize>,
    #[arg(long, env = "BOARDNET_SEED")]
    seed: Option<u64>,
    /// Output directory (default: a timestamped directory).
    #[arg(long, env = "BOARDNET_OUT")]
    out: Option<PathBuf>,
    /// pearson, spearman or both.
    #[arg(long, env = "BOARDNET_METHOD")]
    method: Option<String>,
    #[arg(long, env = "BOARDNET_MIN_SECTOR")]
    min_sector: Option<usize>,
    /// Comma-separated hop cutoffs for the disconnection check.
    #[arg(long, env = "BOARDNET_CUTOFFS")]
    cutoffs: Option<String>,
    /// Largest share of missing trading days before a series is dropped.
    #[arg(long, env = "BOARDNET_MAX_MISSING")]
    max_missing: Option<f64>,
    /// Replicates of the scrambled-proximity null (0 skips it).
    #[arg(long, env = "BOARDNET_NULL_REPLICATES")]
    null_replicates: Option<usize>,
    /// Beta against each sector's average return instead of the market's.
    #[arg(long, env = "BOARDNET_SECTOR_BENCHMARK")]
    sector_benchmark: Option<bool>,
    /// `key = value` file; flags and environment take precedence.
    #[arg(long, env = "BOARDNET_CONFIG")]
    config: Option<PathBuf>,
}

const ANALYZE_KEYS: &[&str] = &[
    "boards",
    "prices",
    "meta",
    "traders",
    "years",
    "replicates",
    "seed",
    "out",
    "method",
    "min-sector",
    "cutoffs",
    "max-missing",
    "null-replicates",
    "sector-benchmark",
];

#[derive(Args)]
struct SynthArgs {
    #[arg(long, env = "BOARDNET_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "BOARDNET_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    corporations: Option<usize>,
    #[arg(long)]
    director_pool: Option<usize>,
    #[arg(long)]
    board_size_median: Option<usize>,
    #[arg(long)]
    board_size_spread: Option<usize>,
    #[arg(long)]
    interlock_probability: Option<f64>,
    #[arg(long)]
    sectors: Option<usize>,
    /// Network coupling `a`.
    #[arg(long)]
    coupling_network: Option<f64>,
    /// Sector coupling `b`.
    #[arg(long)]
    coupling_sector: Option<f64>,
    /// Idiosyncratic variance `c`.
    #[arg(long)]
    idiosyncratic: Option<f64>,
    #[arg(long)]
    trading_days: Option<usize>,
    #[arg(long)]
    start_year: Option<i32>,
    #[arg(long)]
    years: Option<usize>,
    #[arg(long)]
    rewire_probability: Option<f64>,
    #[arg(long)]
    trader_noise: Option<f64>,
    /// Skip the trader activity table.
    #[arg(long)]
    no_traders: bool,
    #[arg(long, env = "BOARDNET_CONFIG")]
    config: Option<PathBuf>,
}

const SYNTH_KEYS: &[&str] = &[
    "out",
    "seed",
    "corporations",
    "director-pool",
    "board-size-median",
    "board-size-spread",
    "interlock-probability",
    "sectors",
    "coupling-network",
    "coupling-sector",
    "idiosyncratic",
    "trading-days",
    "start-year",
    "years",
    "rewire-probability",
    "trader-noise",
    "no-traders",
];

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, env = "BOARDNET_MAX_MISSING")]
    max_missing: Option<f64>,
}

#[derive(Args)]
struct SummaryArgs {
    #[arg(long, env = "BOARDNET_BOARDS")]
    boards: PathBuf,
    #[arg(long, env = "BOARDNET_META")]
    meta: PathBuf,
    #[arg(long, env = "BOARDNET_PRICES")]
    prices: Option<PathBuf>,
    #[arg(long, env = "BOARDNET_YEARS")]
    years: Option<String>,
}

fn list<T: std::str::FromStr>(text: Option<String>, file: Option<&ConfigFile>, key: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let raw = text.or_else(|| file.and_then(|f| f.raw(key)).map(str::to_string));
    match raw {
        Some(t) => parse_list(&t).map_err(|e| anyhow::anyhow!("--{key}: {e}")),
        None => Ok(Vec::new()),
    }
}

fn load_config(path: Option<&PathBuf>, keys: &[&str]) -> Result<Option<ConfigFile>> {
    path.map(|p| ConfigFile::load(p, keys)).transpose()
}

fn analyze(args: AnalyzeArgs) -> Result<ExitCode> {
    let file = load_config(args.config.as_ref(), ANALYZE_KEYS)?;
    let f = file.as_ref();
    let d = PipelineConfig::default();
    let method = pick(args.method, f, "method", "both".to_string())?;
    let pipeline = PipelineConfig {
        replicates: pick(args.replicates, f, "replicates", d.replicates)?,
        seed: pick(args.seed, f, "seed", d.seed)?,
        methods: parse_methods(&method)?,
        max_missing_fraction: pick(args.max_missing, f, "max-missing", d.max_missing_fraction)?,
        min_sector_size: pick(args.min_sector, f, "min-sector", d.min_sector_size)?,
        cutoffs: list(args.cutoffs, f, "cutoffs")?,
        null_replicates: pick(args.null_replicates, f, "null-replicates", d.null_replicates)?,
        sector_benchmark: pick(args.sector_benchmark, f, "sector-benchmark", d.sector_benchmark)?,
    };
    let out = match args.out.or(f.map(|f| f.get::<PathBuf>("out")).transpose()?.flatten()) {
        Some(o) => o,
        None => timestamped_dir("boardnet-run"),
    };
    let config = RunConfig {
        inputs: args.inputs.resolve(f)?,
        out,
        years: list(args.years, f, "years")?,
        pipeline,
    };
    let reports = cmd_analyze(&config)?;
    for r in &reports {
        for e in &r.market {
            match &e.result {
                Some(m) => {
                    let ci = m.ci.map(|[lo, hi]| format!(" [{lo:.4}, {hi:.4}]")).unwrap_or_default();
                    println!("{} market {}: r = {:.4}{ci} (n = {})", r.year, e.method.name(), m.r, m.n_nodes);
                }
                None => println!("{} market {}: {}", r.year, e.method.name(), e.error.as_deref().unwrap_or("")),
            }
        }
    }
    println!("reports written to {}", config.out.display());
    Ok(ExitCode::SUCCESS)
}

fn synth(args: SynthArgs) -> Result<ExitCode> {
    let file = load_config(args.config.as_ref(), SYNTH_KEYS)?;
    let f = file.as_ref();
    let d = SynthConfig::default();
    let corporations = pick(args.corporations, f, "corporations", d.corporations)?;
    let config = SynthConfig {
        corporations,
        // One pooled director per corporation keeps the interlock density
        // comparable across sizes.
        director_pool: pick(args.director_pool, f, "director-pool", corporations)?,
        board_size_median: pick(args.board_size_median, f, "board-size-median", d.board_size_median)?,
        board_size_spread: pick(args.board_size_spread, f, "board-size-spread", d.board_size_spread)?,
        interlock_probability: pick(args.interlock_probability, f, "interlock-probability", d.interlock_probability)?,
        sectors: pick(args.sectors, f, "sectors", d.sectors)?,
        coupling_network: pick(args.coupling_network, f, "coupling-network", d.coupling_network)?,
        coupling_sector: pick(args.coupling_sector, f, "coupling-sector", d.coupling_sector)?,
        idiosyncratic: pick(args.idiosyncratic, f, "idiosyncratic", d.idiosyncratic)?,
        trading_days: pick(args.trading_days, f, "trading-days", d.trading_days)?,
        start_year: pick(args.start_year, f, "start-year", d.start_year)?,
        years: pick(args.years, f, "years", d.years)?,
        rewire_probability: pick(args.rewire_probability, f, "rewire-probability", d.rewire_probability)?,
        trader_noise: pick(args.trader_noise, f, "trader-noise", d.trader_noise)?,
        with_traders: !(args.no_traders || pick(None, f, "no-traders", false)?),
        seed: pick(args.seed, f, "seed", d.seed)?,
        ..d
    };
    let out = match args.out.or(f.map(|f| f.get::<PathBuf>("out")).transpose()?.flatten()) {
        Some(o) => o,
        None => timestamped_dir("boardnet-synth"),
    };
    for p in cmd_synth(&config, &out)? {
        println!("{}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode> {
    let paths = args.inputs.resolve(None)?;
    let threshold = args.max_missing.unwrap_or(PipelineConfig::default().max_missing_fraction);
    let diag = cmd_validate(&paths, threshold)?;
    for issue in &diag.issues {
        println!("{issue}");
    }
    println!(
        "{} issues ({} errors, {} warnings)",
        diag.issues.len(),
        diag.error_count(),
        diag.warning_count()
    );
    Ok(if diag.error_count() > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn network_summary(args: SummaryArgs) -> Result<ExitCode> {
    let years = list(args.years, None, "years")?;
    let summaries = cmd_network_summary(&args.boards, &args.meta, args.prices.as_deref(), &years)?;
    println!("{}", serde_json::to_string_pretty(&summaries)?);
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Synth(a) => synth(a),
        Command::Validate(a) => validate(a),
        Command::NetworkSummary(a) => network_summary(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
