use boardnet::dyadstats::{mantel, partial_rank_corr, Method};
use boardnet::graph::{all_pairs_distances, build_network_from_boards};
use boardnet::ingest::{
    cross_check, scan_boards, scan_meta, scan_prices, scan_traders, write_boards, write_meta, write_prices,
    write_traders, Dataset, Diagnostics, Sector, Ticker,
};
use boardnet::market::{log_returns, similarity_matrix, standardize};
use boardnet::pipeline::{prepare_year, run_year, PipelineConfig};
use boardnet::synth::{generate_boards, generate_dataset, generate_returns, generate_trader_activity, target_covariance, SynthConfig};
use proptest::prelude::*;

fn returns_of(prices: &[boardnet::ingest::PriceSeries]) -> Vec<Vec<f64>> {
    prices.iter().map(|s| log_returns(&s.closes()).unwrap()).collect()
}

#[test]
fn sample_covariance_converges_to_target() {
    let config = SynthConfig {
        corporations: 15,
        director_pool: 15,
        interlock_probability: 0.3,
        coupling_network: 0.3,
        coupling_sector: 0.2,
        idiosyncratic: 0.5,
        trading_days: 10_001,
        sectors: 3,
        with_traders: false,
        seed: 21,
        ..SynthConfig::default()
    };
    let (boards, meta) = generate_boards(&config).unwrap();
    let d = all_pairs_distances(&build_network_from_boards(config.start_year, &boards));
    let sectors: Vec<Sector> = meta.iter().map(|m| m.sector.clone()).collect();
    let tickers: Vec<Ticker> = meta.iter().map(|m| m.ticker.clone()).collect();
    let prices = generate_returns(&d, &sectors, &tickers, config.start_year, &config).unwrap();
    let sigma = target_covariance(&d, &sectors, &config);
    // Returns are scaled so the target diagonal maps to the daily volatility.
    let unit = sigma[(0, 0)] / config.daily_volatility.powi(2);
    let rows = returns_of(&prices);
    let cov = boardnet::synth::sample_covariance_matrix(&rows) * unit;
    let worst = (cov - &sigma).abs().max();
    assert!(worst < 0.05, "largest entrywise deviation {worst}");
}

#[test]
fn no_coupling_gives_near_zero_similarity() {
    let config = SynthConfig {
        corporations: 80,
        coupling_network: 0.0,
        coupling_sector: 0.0,
        with_traders: false,
        seed: 3,
        ..SynthConfig::default()
    };
    let ds = generate_dataset(&config).unwrap();
    let labels: Vec<String> = ds.prices.iter().map(|s| s.ticker.to_string()).collect();
    let (panel, _) = standardize(labels, returns_of(&ds.prices)).unwrap();
    let s = similarity_matrix(&panel);
    let v = s.upper();
    let mean_abs = v.values().iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64;
    let m = (config.trading_days - 1) as f64;
    assert!(mean_abs < 3.0 / m.sqrt(), "{mean_abs}");
}

#[test]
fn strong_coupling_gives_strong_mantel() {
    let config = SynthConfig {
        corporations: 120,
        coupling_network: 3.0,
        coupling_sector: 0.0,
        with_traders: false,
        seed: 4,
        ..SynthConfig::default()
    };
    let ds = generate_dataset(&config).unwrap();
    let p = prepare_year::<f64>(&ds.year(config.start_year), &PipelineConfig::default()).unwrap();
    let r = mantel(&p.proximity, &p.similarity, Method::Pearson).unwrap();
    assert!(r > 0.5, "{r}");
}

#[test]
fn trader_noise_limits() {
    let cent: Vec<f64> = (0..300).map(|i| ((i * 37) % 300) as f64 / 300.0).collect();
    let tickers: Vec<Ticker> = (0..300).map(|i| format!("T{i}").as_str().into()).collect();
    let rho = |noise: f64| {
        let c = SynthConfig {
            trader_noise: noise,
            seed: 9,
            ..SynthConfig::default()
        };
        let rows = generate_trader_activity(&cent, &tickers, 2007, &c);
        let m: Vec<f64> = rows.iter().map(|r| r.mentions as f64).collect();
        let v: Vec<f64> = rows.iter().map(|r| r.volume).collect();
        (
            partial_rank_corr(&m, &cent, &[]).unwrap(),
            partial_rank_corr(&v, &m, &[]).unwrap(),
        )
    };
    let (a, b) = rho(0.0);
    assert!(a > 0.999 && b > 0.999, "{a} {b}");
    let (a, b) = rho(1e9);
    assert!(a.abs() < 0.2 && b.abs() < 0.2, "{a} {b}");
}

fn round_trip(ds: &Dataset) -> (Dataset, Diagnostics) {
    let mut buf = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    write_boards(&mut buf[0], &ds.boards).unwrap();
    write_prices(&mut buf[1], &ds.prices).unwrap();
    write_meta(&mut buf[2], &ds.meta).unwrap();
    write_traders(&mut buf[3], ds.traders.as_deref().unwrap_or(&[])).unwrap();
    let mut diag = Diagnostics::default();
    let back = Dataset {
        boards: scan_boards(&buf[0][..], "boards.csv", &mut diag),
        prices: scan_prices(&buf[1][..], "prices.csv", &mut diag),
        meta: scan_meta(&buf[2][..], "meta.csv", &mut diag),
        traders: ds.traders.as_ref().map(|_| scan_traders(&buf[3][..], "traders.csv", &mut diag)),
    };
    cross_check(&back, &mut diag);
    (back, diag)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generated_bundles_pass_validation(
        n in 5usize..40,
        q in 0.0f64..0.6,
        years in 1usize..3,
        seed in 0u64..10_000,
    ) {
        let config = SynthConfig {
            corporations: n,
            director_pool: n.max(12),
            interlock_probability: q,
            years,
            trading_days: 30,
            seed,
            ..SynthConfig::default()
        };
        let ds = generate_dataset(&config).unwrap();
        let (back, diag) = round_trip(&ds);
        prop_assert!(diag.issues.is_empty(), "{:?}", diag.issues);
        prop_assert_eq!(back.boards.len(), ds.boards.len());
        prop_assert_eq!(&back.meta, &ds.meta);
        prop_assert_eq!(&back.prices, &ds.prices);
        prop_assert_eq!(&back.traders, &ds.traders);
        for (a, b) in back.boards.iter().zip(&ds.boards) {
            prop_assert_eq!(a, b);
        }
    }
}

#[test]
fn sector_panel_equals_analysis_of_sector_only_prices() {
    let config = SynthConfig {
        corporations: 90,
        seed: 12,
        with_traders: false,
        ..SynthConfig::default()
    };
    let ds = generate_dataset(&config).unwrap();
    let pipeline = PipelineConfig {
        replicates: 100,
        seed: 2,
        ..PipelineConfig::default()
    };
    let full = prepare_year::<f64>(&ds.year(2007), &pipeline).unwrap();
    let report = run_year(&full, None, &pipeline).unwrap();
    let sector = report.sectors.iter().find(|s| s.omitted.is_none()).expect("a sector with enough members");

    // Dropping every other sector's prices keeps the whole board network (so
    // distances are unchanged) but restricts the analyzed set to the sector.
    let mut only = ds.clone();
    let keep: std::collections::BTreeSet<Ticker> = ds
        .meta
        .iter()
        .filter(|m| m.sector.as_str() == sector.sector)
        .map(|m| m.ticker.clone())
        .collect();
    only.prices.retain(|s| keep.contains(&s.ticker));
    let restricted = prepare_year::<f64>(&only.year(2007), &pipeline).unwrap();
    let direct = run_year(&restricted, None, &pipeline).unwrap();
    assert_eq!(sector.mantel, direct.market);
}
