use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use boardnet::dyadstats::Method;
use boardnet::graph::{all_pairs_distances, build_network, network_summary_with, NetworkSummary};
use boardnet::ingest::{
    apply_completeness_filter, cross_check, scan_boards, scan_meta, scan_prices, scan_traders, trading_calendar,
    write_boards, write_meta, write_prices, write_traders, Completeness, Dataset, Diagnostics,
};
use boardnet::market::write_performance_csv;
use boardnet::pipeline::{
    cross_year_summary, run_dataset, write_mantel_table, write_performance_effects, write_trader_table,
    CrossYearSummary, PipelineConfig, YearReport,
};
use boardnet::synth::{generate_dataset, SynthConfig};

pub const BOARDS_FILE: &str = "boards.csv";
pub const PRICES_FILE: &str = "prices.csv";
pub const META_FILE: &str = "meta.csv";
pub const TRADERS_FILE: &str = "traders.csv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputPaths {
    pub boards: PathBuf,
    pub prices: PathBuf,
    pub meta: PathBuf,
    pub traders: Option<PathBuf>,
}

impl InputPaths {
    /// The four standard file names inside `dir`; traders only if present.
    pub fn in_dir(dir: &Path) -> Self {
        let traders = dir.join(TRADERS_FILE);
        InputPaths {
            boards: dir.join(BOARDS_FILE),
            prices: dir.join(PRICES_FILE),
            meta: dir.join(META_FILE),
            traders: traders.exists().then_some(traders),
        }
    }

    fn all(&self) -> Vec<&Path> {
        let mut v = vec![self.boards.as_path(), self.prices.as_path(), self.meta.as_path()];
        v.extend(self.traders.as_deref());
        v
    }

    pub fn check_readable(&self) -> Result<()> {
        for p in self.all() {
            File::open(p).with_context(|| format!("cannot read {}", p.display()))?;
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("cannot read {}", path.display()))
}

fn name_of(path: &Path) -> String {
    path.display().to_string()
}

/// Read every table, collecting findings instead of stopping at the first.
pub fn scan_dataset(paths: &InputPaths, diag: &mut Diagnostics) -> Result<Dataset> {
    let boards = scan_boards(open(&paths.boards)?, &name_of(&paths.boards), diag);
    let prices = scan_prices(open(&paths.prices)?, &name_of(&paths.prices), diag);
    let meta = scan_meta(open(&paths.meta)?, &name_of(&paths.meta), diag);
    let traders = match &paths.traders {
        Some(p) => Some(scan_traders(open(p)?, &name_of(p), diag)),
        None => None,
    };
    let dataset = Dataset {
        boards,
        meta,
        prices,
        traders,
    };
    cross_check(&dataset, diag);
    Ok(dataset)
}

/// Read every table; any error-level finding aborts with its location.
pub fn load_dataset(paths: &InputPaths) -> Result<Dataset> {
    let mut diag = Diagnostics::default();
    let dataset = scan_dataset(paths, &mut diag)?;
    if let Some(e) = diag.first_error() {
        bail!(e);
    }
    Ok(dataset)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: InputPaths,
    pub out: PathBuf,
    /// Empty means every year in the data.
    pub years: Vec<i32>,
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pipeline.replicates < 100 {
            bail!("replicates must be at least 100, got {}", self.pipeline.replicates);
        }
        let t = self.pipeline.max_missing_fraction;
        if !(t > 0.0 && t < 0.5) {
            bail!("completeness threshold must lie in (0, 0.5), got {t}");
        }
        if self.pipeline.methods.is_empty() {
            bail!("no Mantel method selected");
        }
        if self.pipeline.null_replicates != 0 && self.pipeline.null_replicates < 100 {
            bail!("null replicates must be 0 or at least 100");
        }
        if self.pipeline.cutoffs.contains(&0) {
            bail!("distance cutoffs must be at least 1");
        }
        self.inputs.check_readable()
    }
}

/// Parse `pearson`, `spearman` or `both`.
pub fn parse_methods(text: &str) -> Result<Vec<Method>> {
    match text.trim().to_ascii_lowercase().as_str() {
        "both" => Ok(vec![Method::Pearson, Method::Spearman]),
        other => Ok(vec![other.parse::<Method>().map_err(|e| anyhow::anyhow!("{e}"))?]),
    }
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    tool: &'static str,
    version: &'static str,
    inputs: &'a InputPaths,
    years: Vec<i32>,
    config: &'a PipelineConfig,
    reports: Vec<String>,
}

#[derive(Serialize)]
struct Summary {
    binomial: Vec<CrossYearSummary>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Run the pipeline and write reports, tables and run metadata into
/// `config.out`. Returns the year reports.
pub fn cmd_analyze(config: &RunConfig) -> Result<Vec<YearReport>> {
    config.validate()?;
    let dataset = load_dataset(&config.inputs)?;
    let reports = run_dataset::<f64>(&dataset, &config.years, &config.pipeline)?;

    let out = &config.out;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut files = Vec::new();
    for r in &reports {
        let name = format!("report_{}.json", r.year);
        write_json(&out.join(&name), r)?;
        files.push(name);
        let name = format!("performance_{}.csv", r.year);
        write_performance_csv(create(&out.join(&name))?, &r.performance)?;
        files.push(name);
    }
    write_mantel_table(create(&out.join("mantel_by_sector.csv"))?, &reports)?;
    write_performance_effects(create(&out.join("performance_effects.csv"))?, &reports)?;
    write_trader_table(create(&out.join("trader_corr.csv"))?, &reports)?;
    files.extend(["mantel_by_sector.csv", "performance_effects.csv", "trader_corr.csv"].map(String::from));

    let summary = Summary {
        binomial: config
            .pipeline
            .methods
            .iter()
            .map(|&m| cross_year_summary(&reports, m))
            .collect(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    files.push("summary.json".into());

    write_json(
        &out.join("run.json"),
        &RunMetadata {
            tool: "boardnet",
            version: env!("CARGO_PKG_VERSION"),
            inputs: &config.inputs,
            years: reports.iter().map(|r| r.year).collect(),
            config: &config.pipeline,
            reports: files,
        },
    )?;
    Ok(reports)
}

/// Generate a bundle and write the four CSV tables into `out`.
pub fn cmd_synth(config: &SynthConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let dataset = generate_dataset(config)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut written = Vec::new();
    let path = out.join(BOARDS_FILE);
    write_boards(create(&path)?, &dataset.boards)?;
    written.push(path);
    let path = out.join(PRICES_FILE);
    write_prices(create(&path)?, &dataset.prices)?;
    written.push(path);
    let path = out.join(META_FILE);
    write_meta(create(&path)?, &dataset.meta)?;
    written.push(path);
    if let Some(t) = &dataset.traders {
        let path = out.join(TRADERS_FILE);
        write_traders(create(&path)?, t)?;
        written.push(path);
    }
    Ok(written)
}

/// Schema and cross-table findings, plus one warning per price series the
/// completeness filter would exclude.
pub fn cmd_validate(paths: &InputPaths, max_missing_fraction: f64) -> Result<Diagnostics> {
    let mut diag = Diagnostics::default();
    let dataset = scan_dataset(paths, &mut diag)?;
    let prices_name = name_of(&paths.prices);
    let years: std::collections::BTreeSet<i32> = dataset.prices.iter().map(|s| s.year).collect();
    for year in years {
        let series: Vec<_> = dataset.prices.iter().filter(|s| s.year == year).collect();
        let calendar = trading_calendar(series.iter().copied());
        for s in series {
            if let Completeness::Excluded { missing, calendar_days } =
                apply_completeness_filter(s, &calendar, max_missing_fraction)
            {
                diag.warn(
                    &prices_name,
                    None,
                    format!("{} {year}: missing {missing} of {calendar_days} trading days", s.ticker),
                );
            }
        }
    }
    Ok(diag)
}

/// Descriptive network statistics per year. Prices are optional and only feed
/// the positive-return share.
pub fn cmd_network_summary(
    boards: &Path,
    meta: &Path,
    prices: Option<&Path>,
    years: &[i32],
) -> Result<Vec<NetworkSummary>> {
    let mut diag = Diagnostics::default();
    let boards = scan_boards(open(boards)?, &name_of(boards), &mut diag);
    let meta = scan_meta(open(meta)?, &name_of(meta), &mut diag);
    let prices = match prices {
        Some(p) => scan_prices(open(p)?, &name_of(p), &mut diag),
        None => Vec::new(),
    };
    if let Some(e) = diag.first_error() {
        bail!(e);
    }
    let dataset = Dataset {
        boards,
        meta,
        prices,
        traders: None,
    };
    let available = dataset.years();
    let wanted: Vec<i32> = if years.is_empty() { available.clone() } else { years.to_vec() };
    wanted
        .iter()
        .map(|&y| {
            if !available.contains(&y) {
                bail!("no board records for year {y}");
            }
            let yd = dataset.year(y);
            let net = build_network(&yd);
            let d = all_pairs_distances(&net);
            Ok(network_summary_with(&net, &d, &yd))
        })
        .collect()
}

/// `boardnet-run-YYYYmmdd-HHMMSS` under the current directory.
pub fn timestamped_dir(prefix: &str) -> PathBuf {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0);
    let stamp = chrono::DateTime::from_timestamp(secs, 0)
        .map(|t| t.format("%Y%m%d-%H%M%S").to_string())
        .unwrap_or_else(|| secs.to_string());
    PathBuf::from(format!("{prefix}-{stamp}"))
}
