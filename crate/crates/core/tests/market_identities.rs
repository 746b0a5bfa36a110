use boardnet::market::{beta, log_returns, similarity_matrix, standardize, yearly_return};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let c: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    c / (vx * vy).sqrt()
}

#[test]
fn similarity_equals_pairwise_pearson() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (n, m) = (25, 120);
    let common: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let w = i as f64 / n as f64;
            common
                .iter()
                .map(|c| 0.01 * (w * c + rng.sample::<f64, _>(StandardNormal)))
                .collect()
        })
        .collect();
    let labels: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let (panel, excluded) = standardize(labels, rows.clone()).unwrap();
    assert!(excluded.is_empty());
    let s = similarity_matrix(&panel);
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { 1.0 } else { pearson(&rows[i], &rows[j]) };
            assert!((s.get(i, j) - expect).abs() < 1e-10, "({i},{j})");
        }
    }
}

#[test]
fn beta_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let zb: Vec<f64> = (0..250).map(|_| 0.01 * rng.sample::<f64, _>(StandardNormal)).collect();
    let doubled: Vec<f64> = zb.iter().map(|v| 2.0 * v).collect();
    let flat = vec![0.003; zb.len()];
    assert!((beta(&zb, &zb).unwrap() - 1.0).abs() < 1e-12);
    assert!((beta(&doubled, &zb).unwrap() - 2.0).abs() < 1e-12);
    assert!(beta(&flat, &zb).unwrap().abs() < 1e-12);
}

proptest! {
    #[test]
    fn yearly_return_telescopes(closes in proptest::collection::vec(0.5f64..500.0, 2..300)) {
        let daily: f64 = log_returns(&closes).unwrap().iter().sum();
        prop_assert!((yearly_return(&closes).unwrap() - daily).abs() < 1e-10);
    }

    #[test]
    fn beta_is_linear_in_the_stock(a in -3.0f64..3.0, b in -0.01f64..0.01, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let zb: Vec<f64> = (0..60).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let zi: Vec<f64> = (0..60).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let t: Vec<f64> = zi.iter().map(|v| a * v + b).collect();
        prop_assert!((beta(&t, &zb).unwrap() - a * beta(&zi, &zb).unwrap()).abs() < 1e-9);
    }
}
