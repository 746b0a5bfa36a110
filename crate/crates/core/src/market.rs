//! Daily log returns, the market-similarity matrix, betas and yearly returns.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyad::{DiagonalConvention, DyadMatrix};
use crate::error::{Error, Result};
use crate::scalar::{mean, sample_covariance, sample_variance, Scalar};

/// Natural-log daily returns `z_k = ln(p_k / p_{k-1})`; `None` with fewer than two closes.
pub fn log_returns<T: Scalar>(closes: &[T]) -> Option<Vec<T>> {
    if closes.len() < 2 {
        return None;
    }
    Some(closes.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// `ln(p_last / p_first)`; `None` with fewer than two closes.
pub fn yearly_return<T: Scalar>(closes: &[T]) -> Option<T> {
    if closes.len() < 2 {
        return None;
    }
    Some((closes[closes.len() - 1] / closes[0]).ln())
}

/// Mean of `ln(p_k)` over the year.
pub fn mean_log_price<T: Scalar>(closes: &[T]) -> Option<T> {
    let logs: Vec<T> = closes.iter().map(|p| p.ln()).collect();
    mean(&logs)
}

/// Row-standardized returns for the stocks that survived standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel<T> {
    labels: Vec<String>,
    /// Raw daily log returns, one row per retained stock.
    raw: Vec<Vec<T>>,
    /// `(z - mean) / sd`, one row per retained stock.
    standardized: Vec<Vec<T>>,
    means: Vec<T>,
    sds: Vec<T>,
    days: usize,
}

impl<T: Scalar> ReturnPanel<T> {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of returns per row (`M`).
    pub fn days(&self) -> usize {
        self.days
    }

    pub fn raw(&self, i: usize) -> &[T] {
        &self.raw[i]
    }

    pub fn standardized(&self, i: usize) -> &[T] {
        &self.standardized[i]
    }

    pub fn mean(&self, i: usize) -> T {
        self.means[i]
    }

    pub fn sd(&self, i: usize) -> T {
        self.sds[i]
    }

    pub fn raw_rows(&self) -> &[Vec<T>] {
        &self.raw
    }
}

/// Standardize each row of raw log returns. Rows with zero spread cannot be
/// standardized; they are dropped and listed in the second return value.
pub fn standardize<T: Scalar>(
    labels: Vec<String>,
    rows: Vec<Vec<T>>,
) -> Result<(ReturnPanel<T>, Vec<String>)> {
    if labels.len() != rows.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: rows.len(),
        });
    }
    let days = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != days) {
        return Err(Error::InvalidInput("return rows have different lengths".into()));
    }
    if !rows.is_empty() && days < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 returns per stock, got {days}")));
    }
    let mut panel = ReturnPanel {
        labels: Vec::new(),
        raw: Vec::new(),
        standardized: Vec::new(),
        means: Vec::new(),
        sds: Vec::new(),
        days,
    };
    let mut excluded = Vec::new();
    for (label, row) in labels.into_iter().zip(rows) {
        let m = mean(&row).unwrap_or_else(T::zero);
        let sd = sample_variance(&row).unwrap_or_else(T::zero).sqrt();
        if !(sd > T::zero()) || row.iter().all(|&z| z == row[0]) {
            log::warn!("{label}: constant returns, excluded from the panel");
            excluded.push(label);
            continue;
        }
        panel.standardized.push(row.iter().map(|&z| (z - m) / sd).collect());
        panel.raw.push(row);
        panel.labels.push(label);
        panel.means.push(m);
        panel.sds.push(sd);
    }
    Ok((panel, excluded))
}

/// `S = R R^T / (M - 1)`: the Pearson correlation matrix of the raw return rows.
pub fn similarity_matrix<T: Scalar>(panel: &ReturnPanel<T>) -> DyadMatrix<T> {
    let n = panel.len();
    let denom = T::from_usize_lossy(panel.days.saturating_sub(1).max(1));
    let upper: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ri = &panel.standardized[i];
            ((i + 1)..n)
                .map(|j| {
                    let rj = &panel.standardized[j];
                    let dot: T = ri.iter().zip(rj).map(|(&a, &b)| a * b).sum();
                    (dot / denom).max(-T::one()).min(T::one())
                })
                .collect()
        })
        .collect();
    DyadMatrix::from_upper_fn(panel.labels.clone(), DiagonalConvention::Unit, |i, j| {
        upper[i][j - i - 1]
    })
}

/// Cross-sectional mean of the given return rows, day by day.
pub fn benchmark_return<T: Scalar>(rows: &[&[T]]) -> Result<Vec<T>> {
    let Some(first) = rows.first() else {
        return Err(Error::InvalidInput("benchmark needs at least one stock".into()));
    };
    let m = first.len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidInput("return rows have different lengths".into()));
    }
    let k = T::from_usize_lossy(rows.len());
    Ok((0..m)
        .map(|d| rows.iter().map(|r| r[d]).sum::<T>() / k)
        .collect())
}

/// `Cov(z_i, z_b) / Var(z_b)` with matching (n - 1) denominators.
pub fn beta<T: Scalar>(stock: &[T], benchmark: &[T]) -> Result<T> {
    if stock.len() != benchmark.len() {
        return Err(Error::DimensionMismatch {
            expected: benchmark.len(),
            found: stock.len(),
        });
    }
    let var = sample_variance(benchmark).unwrap_or_else(T::zero);
    if !(var > T::zero()) {
        return Err(Error::ZeroVariance("benchmark return".into()));
    }
    let cov = sample_covariance(stock, benchmark).expect("lengths checked");
    Ok(cov / var)
}

/// Per-corporation performance figures for the year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    pub corporation: String,
    pub ticker: String,
    pub beta: f64,
    pub yearly_return: f64,
    pub mean_log_price: f64,
}

pub fn write_performance_csv<W: std::io::Write>(out: W, records: &[PerformanceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ticker", "beta", "yearly_return", "mean_log_price"])?;
    for r in records {
        w.write_record([
            r.ticker.clone(),
            r.beta.to_string(),
            r.yearly_return.to_string(),
            r.mean_log_price.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn returns_of_constant_prices_are_zero() {
        assert_eq!(log_returns(&[5.0, 5.0, 5.0]).unwrap(), vec![0.0, 0.0]);
        assert!(log_returns::<f64>(&[5.0]).is_none());
    }

    #[test]
    fn ten_percent_gain() {
        let z = log_returns(&[100.0_f64, 110.0]).unwrap();
        assert!((z[0] - 0.09531017980432493).abs() < 1e-15);
    }

    #[test]
    fn yearly_return_values() {
        assert_eq!(yearly_return(&[100.0_f64, 120.0, 100.0]), Some(0.0));
        assert!((yearly_return(&[100.0_f64, 70.0, 50.0]).unwrap() + std::f64::consts::LN_2).abs() < 1e-15);
        assert!((yearly_return(&[100.0_f64, 200.0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn standardize_drops_constant_rows() {
        let rows = vec![vec![0.1, -0.2, 0.3, 0.0], vec![0.0; 4], vec![0.1, -0.2, 0.3, 0.0]];
        let (panel, excluded) = standardize(labels(3), rows).unwrap();
        assert_eq!(excluded, vec!["s1".to_string()]);
        assert_eq!(panel.len(), 2);
        assert_eq!(panel.standardized(0), panel.standardized(1));
        let r = panel.standardized(0);
        let m: f64 = r.iter().sum::<f64>() / 4.0;
        let sd = (r.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 3.0).sqrt();
        assert!(m.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn proportional_series_fully_similar() {
        let a = vec![0.01, -0.02, 0.005, 0.03, -0.01];
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        let (panel, _) = standardize(labels(2), vec![a, b]).unwrap();
        let s = similarity_matrix(&panel);
        assert!((s.get(0, 1) - 1.0).abs() < 1e-12);
        assert_eq!(s.get(0, 0), 1.0);
    }

    #[test]
    fn benchmark_and_beta() {
        let zb = vec![0.01, -0.02, 0.015, 0.0, -0.005];
        let neg: Vec<f64> = zb.iter().map(|x| -x).collect();
        assert_eq!(benchmark_return(&[&zb[..]]).unwrap(), zb);
        assert!(benchmark_return(&[&zb[..], &neg[..]]).unwrap().iter().all(|&x| x == 0.0));
        assert!((beta(&zb, &zb).unwrap() - 1.0).abs() < 1e-12);
        let twice: Vec<f64> = zb.iter().map(|x| 2.0 * x).collect();
        assert!((beta(&twice, &zb).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(beta(&[0.3; 5], &zb).unwrap(), 0.0);
        assert!(matches!(beta(&zb, &[0.1; 5]), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn works_in_f32() {
        let z = log_returns(&[100.0_f32, 110.0, 99.0]).unwrap();
        let zb = vec![0.01_f32, -0.02];
        assert!((beta(&zb, &zb).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(z.len(), 2);
    }
}
