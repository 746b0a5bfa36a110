//! Per-year orchestration: network and market matrices, whole-market and
//! per-sector partial Mantel tests, year-over-year deltas, performance
//! regressions, trader correlations and robustness checks.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controls::{build_controls, ControlKind, ControlSet, ControlStatus, NodeAttributes};
use crate::dyad::DyadMatrix;
use crate::dyadstats::{
    binomial_summary, derive_seed, mantel_test, partial_rank_corr_ci, random_null, regress_performance,
    BinomialSummary, MantelResult, Method, NullSummary, RankCorrelation, RegressionResult,
};
use crate::error::{Error, Result};
use crate::graph::{
    all_pairs_distances, build_network, centrality, interlocker_count, network_summary_with, proximity_matrix,
    DistanceMatrix, NetworkSummary, YearNetwork,
};
use crate::ingest::{
    apply_completeness_filter, trading_calendar, BoardRecord, Completeness, Dataset, Sector, Ticker, YearDataset,
    DEFAULT_MAX_MISSING_FRACTION,
};
use crate::market::{
    benchmark_return, beta, log_returns, mean_log_price, similarity_matrix, standardize, yearly_return,
    PerformanceRecord, ReturnPanel,
};
use crate::scalar::Scalar;

pub const DEFAULT_REPLICATES: usize = 1000;
pub const DEFAULT_MIN_SECTOR_SIZE: usize = 10;
/// Fewest corporations with trader activity for the trader correlations.
pub const MIN_TRADER_OVERLAP: usize = 10;

pub const PREDICTORS: [&str; 4] = ["centrality", "mean_log_price", "board_size", "expert_fraction"];
pub const RESPONSES: [&str; 2] = ["beta", "yearly_return"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub max_missing_fraction: f64,
    pub min_sector_size: usize,
    /// Hop cutoffs for the disconnection robustness check; empty skips it.
    pub cutoffs: Vec<u32>,
    /// Replicates of the scrambled-proximity null; 0 skips it.
    pub null_replicates: usize,
    /// Beta against the corporation's own sector average instead of the
    /// whole-market average.
    pub sector_benchmark: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            replicates: DEFAULT_REPLICATES,
            seed: 0,
            methods: vec![Method::Pearson, Method::Spearman],
            max_missing_fraction: DEFAULT_MAX_MISSING_FRACTION,
            min_sector_size: DEFAULT_MIN_SECTOR_SIZE,
            cutoffs: Vec::new(),
            null_replicates: 0,
            sector_benchmark: false,
        }
    }
}

impl PipelineConfig {
    fn mantel_seed(&self, year: i32, method: Method) -> u64 {
        derive_seed(self.seed, &format!("mantel-{year}-{}", method.name()))
    }
}

/// Why a corporation with a board record did not enter the analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub corporation: String,
    pub reason: String,
}

/// Everything derived from one year's tables, over the analyzable
/// corporations: those with metadata and a price series that survives the
/// completeness filter and has non-constant returns.
#[derive(Debug, Clone)]
pub struct PreparedYear<T> {
    pub year: i32,
    pub network: YearNetwork,
    pub summary: NetworkSummary,
    /// Corporation IDs in analysis order.
    pub labels: Vec<String>,
    pub tickers: Vec<Ticker>,
    /// Hop distances in the full network, restricted to the analyzed nodes.
    pub distances: DistanceMatrix,
    pub proximity: DyadMatrix<T>,
    pub similarity: DyadMatrix<T>,
    pub panel: ReturnPanel<T>,
    pub attributes: NodeAttributes<T>,
    pub controls: ControlSet<T>,
    /// Mean proximity to every other corporation in the full network.
    pub centrality: Vec<T>,
    /// Directors who also sit on another board.
    pub interlockers: Vec<T>,
    pub beta: Vec<T>,
    pub yearly_return: Vec<T>,
    pub mentions: Option<Vec<Option<(T, T)>>>,
    pub exclusions: Vec<Exclusion>,
    pub carried_days: usize,
}

impl<T: Scalar> PreparedYear<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn performance(&self) -> Vec<PerformanceRecord> {
        (0..self.len())
            .map(|i| PerformanceRecord {
                corporation: self.labels[i].clone(),
                ticker: self.tickers[i].to_string(),
                beta: self.beta[i].as_f64(),
                yearly_return: self.yearly_return[i].as_f64(),
                mean_log_price: self.attributes.mean_log_price[i].as_f64(),
            })
            .collect()
    }

    /// Node indices of each named sector, in sector order.
    pub fn sector_members(&self) -> Vec<(Sector, Vec<usize>)> {
        Sector::NAMED
            .iter()
            .map(|s| {
                let members = (0..self.len()).filter(|&i| &self.attributes.sectors[i] == s).collect();
                (s.clone(), members)
            })
            .collect()
    }
}

/// Build the network over every board of the year, then the market and
/// control matrices over the analyzable corporations.
pub fn prepare_year<T: Scalar>(data: &YearDataset, config: &PipelineConfig) -> Result<PreparedYear<T>> {
    let year = data.year;
    let network = build_network(data);
    let full_distances = all_pairs_distances(&network);
    let summary = network_summary_with(&network, &full_distances, data);
    let full_centrality: Vec<T> = if network.len() >= 2 {
        centrality(&proximity_matrix::<T>(&full_distances))?
    } else {
        vec![T::zero(); network.len()]
    };

    let mut exclusions: Vec<Exclusion> = data
        .dropped
        .iter()
        .map(|(c, reason)| Exclusion {
            corporation: c.to_string(),
            reason: reason.clone(),
        })
        .collect();
    let exclude = |list: &mut Vec<Exclusion>, corp: &str, reason: String| {
        log::info!("{year}: {corp} excluded: {reason}");
        list.push(Exclusion {
            corporation: corp.to_string(),
            reason,
        });
    };

    let calendar = trading_calendar(data.prices.values());
    let mut carried_days = 0;
    let mut candidates = Vec::new();
    for (i, corp) in network.nodes().iter().enumerate() {
        let Some(series) = data.prices_of(corp) else {
            exclude(&mut exclusions, corp.as_str(), "no price series".into());
            continue;
        };
        match apply_completeness_filter(series, &calendar, config.max_missing_fraction) {
            Completeness::Excluded { missing, calendar_days } => {
                exclude(
                    &mut exclusions,
                    corp.as_str(),
                    format!("missing {missing} of {calendar_days} trading days"),
                );
            }
            Completeness::Kept { series, carried } => {
                let closes: Vec<T> = series.closes().into_iter().map(T::lit).collect();
                match log_returns(&closes) {
                    Some(r) if r.len() >= 2 => {
                        carried_days += carried;
                        candidates.push((i, closes, r));
                    }
                    _ => exclude(&mut exclusions, corp.as_str(), "fewer than 3 closes".into()),
                }
            }
        }
    }

    let labels: Vec<String> = candidates.iter().map(|c| network.nodes()[c.0].to_string()).collect();
    let rows: Vec<Vec<T>> = candidates.iter().map(|c| c.2.clone()).collect();
    let (panel, constant) = standardize(labels, rows)?;
    let constant: BTreeSet<String> = constant.into_iter().collect();
    for c in &constant {
        exclude(&mut exclusions, c, "constant returns".into());
    }
    candidates.retain(|c| !constant.contains(network.nodes()[c.0].as_str()));
    exclusions.sort_by(|a, b| a.corporation.cmp(&b.corporation));

    if candidates.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "{year}: only {} analyzable corporations, need at least 3",
            candidates.len()
        )));
    }

    let nodes: Vec<usize> = candidates.iter().map(|c| c.0).collect();
    let labels: Vec<String> = panel.labels().to_vec();
    let boards: BTreeMap<&str, &BoardRecord> = data.boards.iter().map(|b| (b.corporation.as_str(), b)).collect();
    let metas: Vec<_> = nodes
        .iter()
        .map(|&i| data.meta_of(&network.nodes()[i]).expect("network nodes have metadata"))
        .collect();
    let tickers: Vec<Ticker> = metas.iter().map(|m| m.ticker.clone()).collect();

    let attributes = NodeAttributes {
        labels: labels.clone(),
        sectors: metas.iter().map(|m| m.sector.clone()).collect(),
        mean_log_price: candidates
            .iter()
            .map(|c| mean_log_price(&c.1).expect("non-empty closes"))
            .collect(),
        board_size: labels.iter().map(|l| T::from_usize_lossy(boards[l.as_str()].size())).collect(),
        expert_fraction: labels.iter().map(|l| T::lit(boards[l.as_str()].expert_fraction())).collect(),
        locations: metas.iter().map(|m| m.location).collect(),
    };
    let controls = build_controls(&attributes)?;

    let distances = full_distances.submatrix(&nodes);
    let proximity = proximity_matrix::<T>(&distances);
    let similarity = similarity_matrix(&panel);

    let raw: Vec<&[T]> = panel.raw_rows().iter().map(|r| r.as_slice()).collect();
    let beta = if config.sector_benchmark {
        let mut benchmarks = BTreeMap::new();
        for sector in &attributes.sectors {
            if !benchmarks.contains_key(sector) {
                let rows: Vec<&[T]> = (0..raw.len())
                    .filter(|&i| &attributes.sectors[i] == sector)
                    .map(|i| raw[i])
                    .collect();
                benchmarks.insert(sector.clone(), benchmark_return(&rows)?);
            }
        }
        raw.iter()
            .zip(&attributes.sectors)
            .map(|(r, s)| beta(r, &benchmarks[s]))
            .collect::<Result<Vec<T>>>()?
    } else {
        let benchmark = benchmark_return(&raw)?;
        raw.iter().map(|r| beta(r, &benchmark)).collect::<Result<Vec<T>>>()?
    };
    let yearly_return = candidates
        .iter()
        .map(|c| yearly_return(&c.1).expect("at least 3 closes"))
        .collect();

    let mentions = data.traders.as_ref().map(|rows| {
        tickers
            .iter()
            .map(|t| {
                rows.get(t)
                    .map(|a| (T::from_u64(a.mentions).unwrap_or_else(T::zero), T::lit(a.volume)))
            })
            .collect()
    });

    Ok(PreparedYear {
        year,
        summary,
        labels,
        tickers,
        distances,
        proximity,
        similarity,
        panel,
        attributes,
        controls,
        centrality: nodes.iter().map(|&i| full_centrality[i]).collect(),
        interlockers: nodes
            .iter()
            .map(|&i| T::from_usize_lossy(interlocker_count(&network, i)))
            .collect(),
        beta,
        yearly_return,
        mentions,
        exclusions,
        carried_days,
        network,
    })
}

/// A Mantel result, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MantelEntry {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<MantelResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MantelEntry {
    fn from_result(method: Method, r: Result<MantelResult>) -> Self {
        match r {
            Ok(result) => MantelEntry {
                method,
                result: Some(result),
                error: None,
            },
            Err(e) => {
                log::warn!("{} Mantel test failed: {e}", method.name());
                MantelEntry {
                    method,
                    result: None,
                    error: Some(e.to_string()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlFlag {
    pub control: String,
    pub status: String,
}

fn control_flags<T: Scalar>(set: &ControlSet<T>) -> Vec<ControlFlag> {
    set.statuses()
        .into_iter()
        .map(|(kind, status)| ControlFlag {
            control: kind.name().to_string(),
            status: match status {
                ControlStatus::Available => "available".to_string(),
                ControlStatus::Degenerate => "degenerate".to_string(),
                ControlStatus::Unavailable(why) => format!("unavailable: {why}"),
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorReport {
    pub sector: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omitted: Option<String>,
    pub controls: Vec<ControlFlag>,
    pub mantel: Vec<MantelEntry>,
    pub regressions: Vec<RegressionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionEntry {
    pub response: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<RegressionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub previous_year: i32,
    pub n: usize,
    pub mantel: Vec<MantelEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraderReport {
    pub n: usize,
    pub correlations: Vec<RankCorrelation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub cutoff: u32,
    pub mantel: Vec<MantelEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub replicates: usize,
    pub methods: Vec<Method>,
    pub max_missing_fraction: f64,
    pub min_sector_size: usize,
    pub sector_normalization: String,
    pub delta_controls: String,
    pub centrality_scope: String,
    pub benchmark: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearReport {
    pub year: i32,
    pub network: NetworkSummary,
    /// Corporations entering the dyadic analyses.
    pub n: usize,
    pub carried_days: usize,
    pub exclusions: Vec<Exclusion>,
    pub controls: Vec<ControlFlag>,
    pub market: Vec<MantelEntry>,
    pub sectors: Vec<SectorReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaReport>,
    pub regressions: Vec<RegressionEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traders: Option<TraderReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub random_null: Vec<NullSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cutoffs: Vec<CutoffReport>,
    pub metadata: ReportMetadata,
    /// Per-corporation figures, written as their own table.
    #[serde(skip)]
    pub performance: Vec<PerformanceRecord>,
}

fn mantel_entries<T: Scalar>(
    x: &DyadMatrix<T>,
    y: &DyadMatrix<T>,
    controls: &ControlSet<T>,
    year: i32,
    config: &PipelineConfig,
) -> Vec<MantelEntry> {
    let named: Vec<(&str, &DyadMatrix<T>)> = controls.usable().into_iter().map(|(k, m)| (k.name(), m)).collect();
    config
        .methods
        .iter()
        .map(|&method| {
            let r = mantel_test(x, y, &named, method, config.replicates, config.mantel_seed(year, method));
            MantelEntry::from_result(method, r)
        })
        .collect()
}

fn regressions<T: Scalar>(p: &PreparedYear<T>, nodes: &[usize], scope: &str, config: &PipelineConfig) -> Vec<RegressionEntry> {
    let pick = |v: &[T]| -> Vec<T> { nodes.iter().map(|&i| v[i]).collect() };
    let predictors = [
        pick(&p.centrality),
        pick(&p.attributes.mean_log_price),
        pick(&p.attributes.board_size),
        pick(&p.attributes.expert_fraction),
    ];
    let named: Vec<(&str, &[T])> = PREDICTORS.iter().copied().zip(predictors.iter().map(|v| v.as_slice())).collect();
    RESPONSES
        .iter()
        .zip([pick(&p.beta), pick(&p.yearly_return)])
        .map(|(&response, y)| {
            let seed = derive_seed(config.seed, &format!("regression-{}-{scope}-{response}", p.year));
            match regress_performance(&y, &named, config.replicates, seed) {
                Ok(r) => RegressionEntry {
                    response: response.to_string(),
                    result: Some(r),
                    error: None,
                },
                Err(e) => {
                    log::warn!("{}: {scope} regression on {response} failed: {e}", p.year);
                    RegressionEntry {
                        response: response.to_string(),
                        result: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect()
}

fn sector_report<T: Scalar>(
    p: &PreparedYear<T>,
    sector: &Sector,
    members: &[usize],
    config: &PipelineConfig,
) -> Result<SectorReport> {
    let mut report = SectorReport {
        sector: sector.as_str().to_string(),
        n: members.len(),
        omitted: None,
        controls: Vec::new(),
        mantel: Vec::new(),
        regressions: Vec::new(),
    };
    if members.len() < config.min_sector_size {
        report.omitted = Some(format!(
            "{} members, below the minimum of {}",
            members.len(),
            config.min_sector_size
        ));
        return Ok(report);
    }
    // Normalization bounds are recomputed within the sector.
    let controls = build_controls(&p.attributes.subset(members))?;
    report.controls = control_flags(&controls);
    report.mantel = mantel_entries(
        &p.proximity.submatrix(members),
        &p.similarity.submatrix(members),
        &controls,
        p.year,
        config,
    );
    report.regressions = regressions(p, members, sector.as_str(), config);
    Ok(report)
}

/// Partial Mantel between year-over-year changes in proximity and similarity
/// over the corporations analyzable in both years, with the current year's
/// controls restricted to that set.
pub fn delta_analysis<T: Scalar>(
    current: &PreparedYear<T>,
    previous: &PreparedYear<T>,
    config: &PipelineConfig,
) -> Result<(usize, Vec<MantelResult>)> {
    let prev_index: BTreeMap<&str, usize> = previous.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let (cur, prev): (Vec<usize>, Vec<usize>) = current
        .labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| prev_index.get(l.as_str()).map(|&j| (i, j)))
        .unzip();
    if cur.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "{} corporations analyzable in both {} and {}, need at least 3",
            cur.len(),
            previous.year,
            current.year
        )));
    }
    let dd = current.proximity.submatrix(&cur).difference(&previous.proximity.submatrix(&prev))?;
    let ds = current.similarity.submatrix(&cur).difference(&previous.similarity.submatrix(&prev))?;
    let controls = current.controls.restrict(&cur);
    let named: Vec<(&str, &DyadMatrix<T>)> = controls.usable().into_iter().map(|(k, m)| (k.name(), m)).collect();
    let results = config
        .methods
        .iter()
        .map(|&method| {
            let seed = derive_seed(config.seed, &format!("delta-{}-{}", current.year, method.name()));
            mantel_test(&dd, &ds, &named, method, config.replicates, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((cur.len(), results))
}

/// Null distribution of the market coefficient when proximity dyads are
/// redrawn with replacement.
pub fn robustness_random_null<T: Scalar>(p: &PreparedYear<T>, config: &PipelineConfig) -> Result<Vec<NullSummary>> {
    let controls: Vec<&DyadMatrix<T>> = p.controls.usable().into_iter().map(|(_, m)| m).collect();
    config
        .methods
        .iter()
        .map(|&method| {
            let seed = derive_seed(config.seed, &format!("null-{}-{}", p.year, method.name()));
            random_null(&p.proximity, &p.similarity, &controls, method, config.null_replicates, seed)
        })
        .collect()
}

/// The market test with pairs farther apart than each cutoff disconnected.
/// Each cutoff reuses the market seed, so a cutoff at or beyond the diameter
/// reproduces the market result exactly.
pub fn robustness_distance_cutoff<T: Scalar>(p: &PreparedYear<T>, config: &PipelineConfig) -> Result<Vec<CutoffReport>> {
    if let Some(c) = config.cutoffs.iter().find(|&&c| c < 1) {
        return Err(Error::InvalidInput(format!("cutoff {c} must be at least 1")));
    }
    Ok(config
        .cutoffs
        .iter()
        .map(|&cutoff| {
            let d = proximity_matrix::<T>(&p.distances.truncated(cutoff));
            CutoffReport {
                cutoff,
                mantel: mantel_entries(&d, &p.similarity, &p.controls, p.year, config),
            }
        })
        .collect())
}

/// Partial rank correlations among mentions, centrality and volume, each
/// controlling for mean log price, board size and expert fraction. A fourth
/// row repeats the first with the interlocking-director count as centrality.
pub fn trader_analysis<T: Scalar>(p: &PreparedYear<T>, config: &PipelineConfig) -> Result<Vec<RankCorrelation>> {
    let activity = p
        .mentions
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("no trader activity table".into()))?;
    let rows: Vec<usize> = (0..p.len()).filter(|&i| activity[i].is_some()).collect();
    if rows.len() < MIN_TRADER_OVERLAP {
        return Err(Error::InvalidInput(format!(
            "{} corporations with trader activity, need at least {MIN_TRADER_OVERLAP}",
            rows.len()
        )));
    }
    let pick = |v: &[T]| -> Vec<T> { rows.iter().map(|&i| v[i]).collect() };
    let mentions: Vec<T> = rows.iter().map(|&i| activity[i].unwrap().0).collect();
    let volume: Vec<T> = rows.iter().map(|&i| activity[i].unwrap().1).collect();
    let centrality = pick(&p.centrality);
    let interlockers = pick(&p.interlockers);
    let price = pick(&p.attributes.mean_log_price);
    let size = pick(&p.attributes.board_size);
    let experts = pick(&p.attributes.expert_fraction);
    let base = [
        ("mean_log_price", price.as_slice()),
        ("board_size", size.as_slice()),
        ("expert_fraction", experts.as_slice()),
    ];
    let mut with_mentions = vec![("mentions", mentions.as_slice())];
    with_mentions.extend_from_slice(&base);

    let seed = |k: usize| derive_seed(config.seed, &format!("traders-{}-{k}", p.year));
    let reps = config.replicates;
    Ok(vec![
        partial_rank_corr_ci(("mentions", &mentions), ("centrality", &centrality), &base, reps, seed(0))?,
        partial_rank_corr_ci(("mentions", &mentions), ("volume", &volume), &base, reps, seed(1))?,
        partial_rank_corr_ci(("centrality", &centrality), ("volume", &volume), &with_mentions, reps, seed(2))?,
        partial_rank_corr_ci(("mentions", &mentions), ("interlockers", &interlockers), &base, reps, seed(3))?,
    ])
}

/// The full report for one year; `previous` enables the delta analysis.
pub fn run_year<T: Scalar>(
    current: &PreparedYear<T>,
    previous: Option<&PreparedYear<T>>,
    config: &PipelineConfig,
) -> Result<YearReport> {
    let year = current.year;
    let market = mantel_entries(&current.proximity, &current.similarity, &current.controls, year, config);

    let sectors = current
        .sector_members()
        .par_iter()
        .map(|(s, members)| sector_report(current, s, members, config))
        .collect::<Result<Vec<_>>>()?;
    for s in &sectors {
        if let Some(why) = &s.omitted {
            log::info!("{year}: sector {} omitted: {why}", s.sector);
        }
    }

    let delta = previous.map(|prev| match delta_analysis(current, prev, config) {
        Ok((n, results)) => DeltaReport {
            previous_year: prev.year,
            n,
            mantel: results
                .into_iter()
                .map(|r| MantelEntry::from_result(r.method, Ok(r)))
                .collect(),
        },
        Err(e) => {
            log::warn!("{year}: delta analysis against {} failed: {e}", prev.year);
            DeltaReport {
                previous_year: prev.year,
                n: 0,
                mantel: config
                    .methods
                    .iter()
                    .map(|&m| MantelEntry {
                        method: m,
                        result: None,
                        error: Some(e.to_string()),
                    })
                    .collect(),
            }
        }
    });

    let all: Vec<usize> = (0..current.len()).collect();
    let regressions = regressions(current, &all, "market", config);

    let traders = current.mentions.as_ref().map(|activity| {
        let n = activity.iter().filter(|a| a.is_some()).count();
        match trader_analysis(current, config) {
            Ok(correlations) => TraderReport {
                n,
                correlations,
                error: None,
            },
            Err(e) => {
                log::warn!("{year}: trader analysis skipped: {e}");
                TraderReport {
                    n,
                    correlations: Vec::new(),
                    error: Some(e.to_string()),
                }
            }
        }
    });

    let random_null = if config.null_replicates > 0 {
        robustness_random_null(current, config)?
    } else {
        Vec::new()
    };
    let cutoffs = robustness_distance_cutoff(current, config)?;

    Ok(YearReport {
        year,
        network: current.summary.clone(),
        n: current.len(),
        carried_days: current.carried_days,
        exclusions: current.exclusions.clone(),
        controls: control_flags(&current.controls),
        market,
        sectors,
        delta,
        regressions,
        traders,
        random_null,
        cutoffs,
        metadata: ReportMetadata {
            seed: config.seed,
            replicates: config.replicates,
            methods: config.methods.clone(),
            max_missing_fraction: config.max_missing_fraction,
            min_sector_size: config.min_sector_size,
            sector_normalization: "control bounds recomputed within each sector".into(),
            delta_controls: "current-year controls restricted to corporations present in both years".into(),
            centrality_scope: "mean proximity over every corporation in the year's network".into(),
            benchmark: if config.sector_benchmark { "sector average" } else { "market average" }.into(),
        },
        performance: current.performance(),
    })
}

/// Reports for `years` (every year in the data when empty), ascending. The
/// delta analysis runs when the preceding calendar year is also in the data.
pub fn run_dataset<T: Scalar>(dataset: &Dataset, years: &[i32], config: &PipelineConfig) -> Result<Vec<YearReport>> {
    let available = dataset.years();
    let wanted: Vec<i32> = if years.is_empty() {
        available.clone()
    } else {
        for y in years {
            if !available.contains(y) {
                return Err(Error::InvalidInput(format!("no board records for year {y}")));
            }
        }
        let mut ys = years.to_vec();
        ys.sort_unstable();
        ys.dedup();
        ys
    };
    let mut to_prepare: BTreeSet<i32> = wanted.iter().copied().collect();
    for y in &wanted {
        if available.contains(&(y - 1)) {
            to_prepare.insert(y - 1);
        }
    }
    let to_prepare: Vec<i32> = to_prepare.into_iter().collect();
    let prepared: BTreeMap<i32, PreparedYear<T>> = to_prepare
        .par_iter()
        .map(|&y| prepare_year::<T>(&dataset.year(y), config).map(|p| (y, p)))
        .collect::<Result<_>>()?;
    wanted
        .iter()
        .map(|y| run_year(&prepared[y], prepared.get(&(y - 1)), config))
        .collect()
}

/// Binomial count of significantly positive coefficients for one method,
/// across every year's market and sector panels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossYearSummary {
    pub method: Method,
    pub years: Vec<i32>,
    pub significant_positive: u64,
    pub tests: u64,
    pub binomial: BinomialSummary,
}

pub fn cross_year_summary(reports: &[YearReport], method: Method) -> CrossYearSummary {
    let mut tests = 0;
    let mut positive = 0;
    for report in reports {
        let entries = report.market.iter().chain(report.sectors.iter().flat_map(|s| s.mantel.iter()));
        for e in entries.filter(|e| e.method == method) {
            if let Some(r) = &e.result {
                tests += 1;
                if r.significant_positive() {
                    positive += 1;
                }
            }
        }
    }
    CrossYearSummary {
        method,
        years: reports.iter().map(|r| r.year).collect(),
        significant_positive: positive,
        tests,
        binomial: binomial_summary(positive, tests, 0.5),
    }
}

fn ci_cells(ci: Option<[f64; 2]>) -> [String; 2] {
    match ci {
        Some([lo, hi]) => [lo.to_string(), hi.to_string()],
        None => [String::new(), String::new()],
    }
}

/// `year,sector,method,r,lo,hi,n`: the market row uses sector `market`, the
/// delta row `delta`; `n` counts corporations.
pub fn write_mantel_table<W: Write>(out: W, reports: &[YearReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["year", "sector", "method", "r", "lo", "hi", "n"])?;
    let mut row = |year: i32, scope: &str, e: &MantelEntry| -> Result<()> {
        if let Some(r) = &e.result {
            let [lo, hi] = ci_cells(r.ci);
            w.write_record([
                year.to_string(),
                scope.to_string(),
                e.method.name().to_string(),
                r.r.to_string(),
                lo,
                hi,
                r.n_nodes.to_string(),
            ])?;
        }
        Ok(())
    };
    for rep in reports {
        for e in &rep.market {
            row(rep.year, "market", e)?;
        }
        for s in &rep.sectors {
            for e in &s.mantel {
                row(rep.year, &s.sector, e)?;
            }
        }
        if let Some(d) = &rep.delta {
            for e in &d.mantel {
                row(rep.year, "delta", e)?;
            }
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// `year,sector,response,predictor,coef,lo,hi`.
pub fn write_performance_effects<W: Write>(out: W, reports: &[YearReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["year", "sector", "response", "predictor", "coef", "lo", "hi"])?;
    for rep in reports {
        let scopes = std::iter::once(("market", &rep.regressions))
            .chain(rep.sectors.iter().map(|s| (s.sector.as_str(), &s.regressions)));
        for (scope, entries) in scopes {
            for e in entries {
                let Some(r) = &e.result else { continue };
                for c in &r.coefficients {
                    let [lo, hi] = ci_cells(c.ci.as_ref().map(|ci| [ci.low, ci.high]));
                    w.write_record([
                        rep.year.to_string(),
                        scope.to_string(),
                        e.response.clone(),
                        c.predictor.clone(),
                        c.estimate.to_string(),
                        lo,
                        hi,
                    ])?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// `year,x,y,controls,rho,lo,hi,n`; controls are `;`-separated.
pub fn write_trader_table<W: Write>(out: W, reports: &[YearReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["year", "x", "y", "controls", "rho", "lo", "hi", "n"])?;
    for rep in reports {
        let Some(t) = &rep.traders else { continue };
        for c in &t.correlations {
            let [lo, hi] = ci_cells(c.ci.as_ref().map(|ci| [ci.low, ci.high]));
            w.write_record([
                rep.year.to_string(),
                c.x.clone(),
                c.y.clone(),
                c.controls.join(";"),
                c.rho.to_string(),
                lo,
                hi,
                c.n.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Control kinds that entered the market test, for quick inspection.
pub fn usable_controls<T: Scalar>(p: &PreparedYear<T>) -> Vec<ControlKind> {
    p.controls.usable().into_iter().map(|(k, _)| k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_dataset, SynthConfig};

    fn small(seed: u64, years: usize) -> Dataset {
        generate_dataset(&SynthConfig {
            corporations: 60,
            director_pool: 120,
            years,
            seed,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    fn quick() -> PipelineConfig {
        PipelineConfig {
            replicates: 100,
            seed: 5,
            min_sector_size: 5,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn prepared_year_is_aligned() {
        let ds = small(1, 1);
        let p = prepare_year::<f64>(&ds.year(2007), &quick()).unwrap();
        assert_eq!(p.len(), 60);
        assert_eq!(p.proximity.n(), 60);
        assert_eq!(p.similarity.n(), 60);
        assert_eq!(p.proximity.labels(), p.similarity.labels());
        assert_eq!(p.beta.len(), 60);
        assert!(p.exclusions.is_empty());
        assert_eq!(usable_controls(&p).len(), 5);
    }

    #[test]
    fn excluded_corporation_is_recorded() {
        let mut ds = small(2, 1);
        let victim = ds.meta[3].ticker.clone();
        for s in ds.prices.iter_mut().filter(|s| s.ticker == victim) {
            s.observations.truncate(100);
        }
        let p = prepare_year::<f64>(&ds.year(2007), &quick()).unwrap();
        assert_eq!(p.len(), 59);
        assert_eq!(p.exclusions.len(), 1);
        assert_eq!(p.exclusions[0].corporation, ds.meta[3].corporation.to_string());
    }

    #[test]
    fn missing_coordinates_drop_geography() {
        let mut ds = small(3, 1);
        ds.meta[0].location = None;
        let cfg = quick();
        let p = prepare_year::<f64>(&ds.year(2007), &cfg).unwrap();
        let report = run_year(&p, None, &cfg).unwrap();
        let g = report.controls.iter().find(|c| c.control == "G").unwrap();
        assert!(g.status.starts_with("unavailable"));
        let market = report.market[0].result.as_ref().unwrap();
        assert!(!market.controls.contains(&"G".to_string()));
    }

    #[test]
    fn single_sector_matches_market() {
        let mut ds = small(4, 1);
        for m in ds.meta.iter_mut() {
            m.sector = Sector::Technology;
        }
        let cfg = quick();
        let p = prepare_year::<f64>(&ds.year(2007), &cfg).unwrap();
        let report = run_year(&p, None, &cfg).unwrap();
        let tech = report.sectors.iter().find(|s| s.sector == "technology").unwrap();
        assert_eq!(tech.mantel, report.market);
        assert!(report.sectors.iter().filter(|s| s.sector != "technology").all(|s| s.omitted.is_some()));
    }

    #[test]
    fn sector_benchmark_only_changes_beta() {
        let ds = small(7, 1);
        let market = prepare_year::<f64>(&ds.year(2007), &quick()).unwrap();
        let cfg = PipelineConfig {
            sector_benchmark: true,
            ..quick()
        };
        let sector = prepare_year::<f64>(&ds.year(2007), &cfg).unwrap();
        assert_ne!(market.beta, sector.beta);
        assert_eq!(market.yearly_return, sector.yearly_return);
        // Betas against a sector average average to one within each sector.
        for (_, members) in sector.sector_members() {
            if members.len() > 1 {
                let mean: f64 = members.iter().map(|&i| sector.beta[i]).sum::<f64>() / members.len() as f64;
                assert!((mean - 1.0).abs() < 1e-9, "{mean}");
            }
        }
    }

    #[test]
    fn identical_years_surface_zero_variance() {
        let ds = small(6, 1);
        let cfg = quick();
        let p = prepare_year::<f64>(&ds.year(2007), &cfg).unwrap();
        let mut q = p.clone();
        q.year = 2006;
        let err = delta_analysis(&p, &q, &cfg).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance(_)), "{err}");
    }

    #[test]
    fn cutoff_beyond_diameter_is_a_no_op() {
        let ds = small(7, 1);
        let p = prepare_year::<f64>(&ds.year(2007), &quick()).unwrap();
        let cfg = PipelineConfig {
            cutoffs: vec![p.distances.diameter().max(1)],
            ..quick()
        };
        let report = run_year(&p, None, &cfg).unwrap();
        assert_eq!(report.cutoffs[0].mantel, report.market);
    }

    #[test]
    fn omitting_traders_only_changes_trader_section() {
        let ds = small(8, 1);
        let mut without = ds.clone();
        without.traders = None;
        let cfg = quick();
        let a = run_dataset::<f64>(&ds, &[], &cfg).unwrap();
        let mut b = run_dataset::<f64>(&without, &[], &cfg).unwrap();
        assert!(a[0].traders.is_some() && b[0].traders.is_none());
        b[0].traders = a[0].traders.clone();
        assert_eq!(a, b);
    }

    #[test]
    fn delta_uses_intersection() {
        let mut ds = small(9, 2);
        // Each year loses a different corporation.
        ds.boards.retain(|b| !(b.year == 2007 && b.corporation.as_str() == "C00001"));
        ds.boards.retain(|b| !(b.year == 2008 && b.corporation.as_str() == "C00002"));
        let cfg = quick();
        let reports = run_dataset::<f64>(&ds, &[2008], &cfg).unwrap();
        assert_eq!(reports.len(), 1);
        let delta = reports[0].delta.as_ref().unwrap();
        assert_eq!(delta.previous_year, 2007);
        assert_eq!(delta.n, 58);
    }

    #[test]
    fn tables_have_headers_and_rows() {
        let ds = small(10, 1);
        let reports = run_dataset::<f64>(&ds, &[], &quick()).unwrap();
        let mut buf = Vec::new();
        write_mantel_table(&mut buf, &reports).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("year,sector,method,r,lo,hi,n\n"));
        assert!(text.contains("2007,market,pearson,"));
        let mut buf = Vec::new();
        write_performance_effects(&mut buf, &reports).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("market,beta,centrality"));
        let summary = cross_year_summary(&reports, Method::Spearman);
        assert!(summary.tests >= 1);
    }
}
