//! Synthetic datasets with a planted network/market coupling.
//!
//! Boards are filled from a shared pool of outside directors (which creates
//! interlocks) and from private directors. Daily returns are multivariate
//! normal with covariance `a * D + b * [same sector] + c * I`, so proximity in
//! the interlock network raises return correlation on top of the sector effect.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dyadstats::derive_seed;
use crate::error::{Error, Result};
use crate::graph::{all_pairs_distances, build_network_from_boards, centrality, proximity_matrix, DistanceMatrix};
use crate::ingest::{
    BoardRecord, CorporationMeta, Dataset, DirectorId, GeoPoint, PriceSeries, Sector, Ticker, TraderActivity,
};

/// Extra diagonal added on top of `|lambda_min|` when the target covariance is
/// not positive definite.
pub const RIDGE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub corporations: usize,
    /// Outside directors available for interlocking seats; defaults to one per corporation in the CLI.
    pub director_pool: usize,
    pub board_size_median: usize,
    /// Board sizes are uniform on `median +/- spread`.
    pub board_size_spread: usize,
    /// Chance that a seat is filled from the shared pool.
    pub interlock_probability: f64,
    /// Number of named sectors used (1..=7), assigned uniformly.
    pub sectors: usize,
    /// Network coupling `a`.
    pub coupling_network: f64,
    /// Sector coupling `b`.
    pub coupling_sector: f64,
    /// Idiosyncratic variance `c`.
    pub idiosyncratic: f64,
    /// Trading days per year (closes); returns per year are one fewer.
    pub trading_days: usize,
    pub daily_volatility: f64,
    pub expert_probability: f64,
    pub start_year: i32,
    pub years: usize,
    /// Chance that a pooled seat is reassigned from one year to the next.
    pub rewire_probability: f64,
    pub with_traders: bool,
    /// Noise standard deviation for mentions and volume (latent, log scale).
    pub trader_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            corporations: 300,
            director_pool: 300,
            board_size_median: 9,
            board_size_spread: 3,
            interlock_probability: 0.2,
            sectors: 7,
            coupling_network: 0.3,
            coupling_sector: 0.2,
            idiosyncratic: 1.0,
            trading_days: 252,
            daily_volatility: 0.02,
            expert_probability: 0.25,
            start_year: 2007,
            years: 1,
            rewire_probability: 0.3,
            with_traders: true,
            trader_noise: 0.5,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.corporations == 0 {
            return bad("need at least one corporation".into());
        }
        if self.board_size_spread >= self.board_size_median {
            return bad(format!(
                "board sizes {} +/- {} include empty boards",
                self.board_size_median, self.board_size_spread
            ));
        }
        if self.interlock_probability > 0.0 && self.director_pool < self.board_size_median + self.board_size_spread {
            return bad(format!(
                "director pool of {} cannot fill a board of {} distinct directors",
                self.director_pool,
                self.board_size_median + self.board_size_spread
            ));
        }
        if !(0.0..=1.0).contains(&self.interlock_probability)
            || !(0.0..=1.0).contains(&self.rewire_probability)
            || !(0.0..=1.0).contains(&self.expert_probability)
        {
            return bad("probabilities must lie in [0, 1]".into());
        }
        if !(1..=7).contains(&self.sectors) {
            return bad(format!("sectors must be 1..=7, got {}", self.sectors));
        }
        if !(self.coupling_network >= 0.0 && self.coupling_sector >= 0.0) {
            return bad("couplings must be non-negative".into());
        }
        if !(self.idiosyncratic > 0.0) {
            return bad("idiosyncratic variance must be positive".into());
        }
        if self.trading_days < 3 {
            return bad("need at least 3 trading days".into());
        }
        if self.years == 0 {
            return bad("need at least one year".into());
        }
        if !(self.daily_volatility > 0.0) || !(self.trader_noise >= 0.0) {
            return bad("volatility must be positive and trader noise non-negative".into());
        }
        Ok(())
    }

    fn rng(&self, label: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, label))
    }
}

fn corp_id(i: usize) -> String {
    format!("C{i:05}")
}

fn ticker(i: usize) -> String {
    format!("T{i:05}")
}

/// Which pool directors hold each board's shared seats, plus private seat counts.
#[derive(Debug, Clone)]
struct Seating {
    pooled: Vec<Vec<usize>>,
    private: Vec<usize>,
}

fn seat_boards(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Seating {
    let n = config.corporations;
    let lo = config.board_size_median - config.board_size_spread;
    let hi = config.board_size_median + config.board_size_spread;
    let mut pooled = Vec::with_capacity(n);
    let mut private = Vec::with_capacity(n);
    for _ in 0..n {
        let size = rng.random_range(lo..=hi);
        let shared = (0..size).filter(|_| rng.random::<f64>() < config.interlock_probability).count();
        let mut seats = Vec::with_capacity(shared);
        while seats.len() < shared {
            let d = rng.random_range(0..config.director_pool);
            if !seats.contains(&d) {
                seats.push(d);
            }
        }
        seats.sort_unstable();
        pooled.push(seats);
        private.push(size - shared);
    }
    Seating { pooled, private }
}

fn rewire(prev: &Seating, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Seating {
    let pooled = prev
        .pooled
        .iter()
        .map(|seats| {
            let mut next = seats.clone();
            for k in 0..next.len() {
                if rng.random::<f64>() < config.rewire_probability {
                    loop {
                        let d = rng.random_range(0..config.director_pool);
                        if !next.contains(&d) {
                            next[k] = d;
                            break;
                        }
                    }
                }
            }
            next.sort_unstable();
            next
        })
        .collect();
    Seating {
        pooled,
        private: prev.private.clone(),
    }
}

fn boards_for(year: i32, seating: &Seating, pool_experts: &[bool], private_experts: &[Vec<bool>]) -> Vec<BoardRecord> {
    seating
        .pooled
        .iter()
        .enumerate()
        .map(|(i, seats)| {
            let mut dirs: Vec<(DirectorId, bool)> = seats
                .iter()
                .map(|&d| (DirectorId(format!("P{d:05}")), pool_experts[d]))
                .collect();
            for s in 0..seating.private[i] {
                dirs.push((DirectorId(format!("{}-{s:02}", corp_id(i))), private_experts[i][s]));
            }
            dirs.sort();
            BoardRecord {
                year,
                corporation: corp_id(i).as_str().into(),
                directors: dirs.iter().map(|(d, _)| d.clone()).collect(),
                expert_flags: dirs.iter().map(|&(_, e)| e).collect(),
            }
        })
        .collect()
}

/// Boards for every configured year and the corporation metadata.
pub fn generate_boards(config: &SynthConfig) -> Result<(Vec<BoardRecord>, Vec<CorporationMeta>)> {
    config.validate()?;
    let mut rng = config.rng("boards");
    let n = config.corporations;

    let mut meta = Vec::with_capacity(n);
    for i in 0..n {
        let sector = Sector::NAMED[rng.random_range(0..config.sectors)].clone();
        let lat = rng.random_range(25.0..49.0);
        let lon = rng.random_range(-124.0..-67.0);
        meta.push(CorporationMeta {
            corporation: corp_id(i).as_str().into(),
            ticker: ticker(i).as_str().into(),
            sector,
            location: Some(GeoPoint::new(lat, lon)?),
        });
    }

    let pool_experts: Vec<bool> = (0..config.director_pool)
        .map(|_| rng.random::<f64>() < config.expert_probability)
        .collect();
    let max_private = config.board_size_median + config.board_size_spread;
    let private_experts: Vec<Vec<bool>> = (0..n)
        .map(|_| (0..max_private).map(|_| rng.random::<f64>() < config.expert_probability).collect())
        .collect();

    let mut seating = seat_boards(config, &mut rng);
    let mut boards = Vec::new();
    for y in 0..config.years {
        if y > 0 {
            seating = rewire(&seating, config, &mut rng);
        }
        boards.extend(boards_for(config.start_year + y as i32, &seating, &pool_experts, &private_experts));
    }
    Ok((boards, meta))
}

/// Weekdays of `year`, starting on the first weekday on or after 2 January.
pub fn business_days(year: i32, count: usize) -> Vec<chrono::NaiveDate> {
    use chrono::{Datelike, Weekday};
    let mut d = chrono::NaiveDate::from_ymd_opt(year, 1, 2).expect("valid date");
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("in range");
    }
    out
}

/// Closes starting at 100 and compounding the given log returns.
pub fn prices_from_returns(returns: &[f64]) -> Vec<f64> {
    let mut p = 100.0;
    let mut out = Vec::with_capacity(returns.len() + 1);
    out.push(p);
    for &z in returns {
        p *= z.exp();
        out.push(p);
    }
    out
}

/// `a * D + b * F + c * I` as a dense matrix, where `D` is the proximity matrix
/// of `distances` (unit diagonal) and `F` the same-sector indicator.
pub fn target_covariance(distances: &DistanceMatrix, sectors: &[Sector], config: &SynthConfig) -> DMatrix<f64> {
    let n = distances.n();
    let d = proximity_matrix::<f64>(distances);
    DMatrix::from_fn(n, n, |i, j| {
        let same = if sectors[i] == sectors[j] { 1.0 } else { 0.0 };
        let own = if i == j { config.idiosyncratic } else { 0.0 };
        config.coupling_network * d.get(i, j) + config.coupling_sector * same + own
    })
}

/// Lower Cholesky factor of `sigma`, shifting the diagonal by
/// `|lambda_min| + RIDGE_EPSILON` if the matrix is not positive definite.
/// Returns the factor and the ridge applied.
pub fn covariance_factor(sigma: DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if let Some(ch) = Cholesky::new(sigma.clone()) {
        return Ok((ch.l(), 0.0));
    }
    let n = sigma.nrows();
    let lambda_min = SymmetricEigen::new(sigma.clone()).eigenvalues.min();
    let mut ridge = lambda_min.abs() + RIDGE_EPSILON;
    for _ in 0..3 {
        let shifted = &sigma + DMatrix::<f64>::identity(n, n) * ridge;
        if let Some(ch) = Cholesky::new(shifted) {
            log::warn!("target covariance not positive definite; ridge {ridge:.3e} added");
            return Ok((ch.l(), ridge));
        }
        ridge *= 10.0;
    }
    Err(Error::NotPositiveDefinite { ridge })
}

/// Draw one year of prices for the corporations of `distances`, in node order.
pub fn generate_returns(
    distances: &DistanceMatrix,
    sectors: &[Sector],
    tickers: &[Ticker],
    year: i32,
    config: &SynthConfig,
) -> Result<Vec<PriceSeries>> {
    let n = distances.n();
    if sectors.len() != n || tickers.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sectors.len().min(tickers.len()),
        });
    }
    let sigma = target_covariance(distances, sectors, config);
    let diag = sigma[(0, 0)].max(f64::MIN_POSITIVE);
    let (l, ridge) = covariance_factor(sigma)?;
    let scale = config.daily_volatility / (diag + ridge).sqrt();

    let mut rng = config.rng(&format!("returns-{year}"));
    let days = config.trading_days - 1;
    let noise = DMatrix::<f64>::from_fn(n, days, |_, _| rng.sample(StandardNormal));
    let z = (&l * noise) * scale;

    let dates = business_days(year, config.trading_days);
    Ok((0..n)
        .map(|i| {
            let row: Vec<f64> = z.row(i).iter().copied().collect();
            let closes = prices_from_returns(&row);
            PriceSeries {
                ticker: tickers[i].clone(),
                year,
                observations: dates.iter().copied().zip(closes).collect(),
            }
        })
        .collect())
}

fn zscores(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    if sd > 0.0 {
        x.iter().map(|v| (v - m) / sd).collect()
    } else {
        vec![0.0; x.len()]
    }
}

/// Mentions rise with centrality and volume rises with mentions, each through
/// log-normal noise of standard deviation `config.trader_noise`.
pub fn generate_trader_activity(
    centrality: &[f64],
    tickers: &[Ticker],
    year: i32,
    config: &SynthConfig,
) -> Vec<TraderActivity> {
    let mut rng = config.rng(&format!("traders-{year}"));
    let latent: Vec<f64> = zscores(centrality)
        .into_iter()
        .map(|c| {
            let e: f64 = rng.sample(StandardNormal);
            (c + config.trader_noise * e).clamp(-30.0, 30.0)
        })
        .collect();
    let mentions: Vec<u64> = latent.iter().map(|&l| (1e4 * (l / 3.0).exp()).round() as u64).collect();
    let log_mentions: Vec<f64> = mentions.iter().map(|&m| (1.0 + m as f64).ln()).collect();
    let raw_volume: Vec<f64> = zscores(&log_mentions)
        .into_iter()
        .map(|v| {
            let e: f64 = rng.sample(StandardNormal);
            (v + config.trader_noise * e).clamp(-30.0, 30.0).exp()
        })
        .collect();
    let mean_volume = raw_volume.iter().sum::<f64>() / raw_volume.len().max(1) as f64;
    tickers
        .iter()
        .zip(mentions)
        .zip(raw_volume)
        .map(|((t, m), v)| TraderActivity {
            ticker: t.clone(),
            year,
            mentions: m,
            volume: v / mean_volume,
        })
        .collect()
}

/// A full multi-year bundle: boards, metadata, prices and (optionally) trader activity.
pub fn generate_dataset(config: &SynthConfig) -> Result<Dataset> {
    let (boards, meta) = generate_boards(config)?;
    let sectors: Vec<Sector> = meta.iter().map(|m| m.sector.clone()).collect();
    let tickers: Vec<Ticker> = meta.iter().map(|m| m.ticker.clone()).collect();
    let mut prices = Vec::new();
    let mut traders = Vec::new();
    for y in 0..config.years {
        let year = config.start_year + y as i32;
        let year_boards: Vec<BoardRecord> = boards.iter().filter(|b| b.year == year).cloned().collect();
        let net = build_network_from_boards(year, &year_boards);
        let distances = all_pairs_distances(&net);
        prices.extend(generate_returns(&distances, &sectors, &tickers, year, config)?);
        if config.with_traders && config.corporations >= 2 {
            let c = centrality(&proximity_matrix::<f64>(&distances))?;
            traders.extend(generate_trader_activity(&c, &tickers, year, config));
        }
    }
    prices.sort_by(|a, b| (&a.ticker, a.year).cmp(&(&b.ticker, b.year)));
    traders.sort_by(|a, b| (&a.ticker, a.year).cmp(&(&b.ticker, b.year)));
    Ok(Dataset {
        boards,
        meta,
        prices,
        traders: config.with_traders.then_some(traders),
    })
}

/// Shuffle helper for tests and callers that want a random corporation order.
pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Sample covariance of the columns of a `days x n` panel given as rows per stock.
pub fn sample_covariance_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    let means: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / m as f64).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let s: f64 = rows[i]
            .iter()
            .zip(&rows[j])
            .map(|(a, b)| (a - means[i]) * (b - means[j]))
            .sum();
        s / (m as f64 - 1.0)
    })
}


#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SynthConfig {
        SynthConfig {
            corporations: 40,
            director_pool: 80,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn no_sharing_isolates_every_board() {
        let c = SynthConfig {
            interlock_probability: 0.0,
            ..cfg()
        };
        let (boards, _) = generate_boards(&c).unwrap();
        let net = build_network_from_boards(c.start_year, &boards);
        assert!(net.edges().is_empty());
    }

    #[test]
    fn heavy_sharing_connects_everything() {
        let c = SynthConfig {
            interlock_probability: 0.9,
            director_pool: 20,
            ..cfg()
        };
        let (boards, _) = generate_boards(&c).unwrap();
        let d = all_pairs_distances(&build_network_from_boards(c.start_year, &boards));
        assert!((0..d.n()).all(|i| (0..d.n()).all(|j| d.get(i, j).is_some())));
    }

    #[test]
    fn board_sizes_center_on_median() {
        let c = SynthConfig {
            corporations: 501,
            director_pool: 1000,
            ..cfg()
        };
        let (boards, _) = generate_boards(&c).unwrap();
        let mut sizes: Vec<usize> = boards.iter().map(|b| b.size()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes[250], 9);
        assert!(sizes.iter().all(|&s| (6..=12).contains(&s)));
    }

    #[test]
    fn infeasible_sizes_rejected() {
        let bad = SynthConfig {
            board_size_median: 3,
            board_size_spread: 3,
            ..cfg()
        };
        assert!(matches!(generate_boards(&bad), Err(Error::InvalidInput(_))));
        let small_pool = SynthConfig {
            director_pool: 5,
            ..cfg()
        };
        assert!(generate_boards(&small_pool).is_err());
    }

    #[test]
    fn same_seed_same_dataset() {
        let a = generate_dataset(&cfg()).unwrap();
        let b = generate_dataset(&cfg()).unwrap();
        assert_eq!(a, b);
        let c = generate_dataset(&SynthConfig { seed: 2, ..cfg() }).unwrap();
        assert_ne!(a.prices, c.prices);
    }

    #[test]
    fn zero_returns_keep_price_flat() {
        assert!(prices_from_returns(&[0.0; 10]).iter().all(|&p| p == 100.0));
    }

    #[test]
    fn indefinite_target_gets_ridge() {
        // Eigenvalues 3 and -1.
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let (l, ridge) = covariance_factor(sigma.clone()).unwrap();
        assert!((ridge - (1.0 + RIDGE_EPSILON)).abs() < 1e-9);
        let back = &l * l.transpose();
        let expect = sigma + DMatrix::identity(2, 2) * ridge;
        assert!((back - expect).abs().max() < 1e-9);
    }

    #[test]
    fn noiseless_activity_is_monotone() {
        let c = SynthConfig {
            trader_noise: 0.0,
            ..cfg()
        };
        let cent: Vec<f64> = (0..30).map(|i| 0.1 + 0.01 * i as f64).collect();
        let tickers: Vec<Ticker> = (0..30).map(|i| ticker(i).as_str().into()).collect();
        let rows = generate_trader_activity(&cent, &tickers, 2007, &c);
        for w in rows.windows(2) {
            assert!(w[1].mentions > w[0].mentions);
            assert!(w[1].volume > w[0].volume);
        }
    }

    #[test]
    fn business_days_skip_weekends() {
        use chrono::Datelike;
        let days = business_days(2011, 252);
        assert_eq!(days.len(), 252);
        assert!(days.iter().all(|d| d.weekday().number_from_monday() <= 5));
        assert!(days.windows(2).all(|w| w[0] < w[1]));
    }
}
