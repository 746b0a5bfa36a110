//! Least squares on z-scored predictors and partial rank correlations, each
//! with a case-resampling bootstrap interval.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bootstrap::{check_replicates, run_replicates, BootstrapCi};
use super::mantel::{partial_correlation, COLLINEARITY_TOL};
use super::rank::average_ranks;
use super::sweep::CrossProducts;
use crate::error::{Error, Result};
use crate::scalar::{mean, sample_variance, Scalar};

pub const MIN_OBSERVATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub predictor: String,
    /// Change in the response per standard deviation of the predictor.
    pub estimate: f64,
    pub ci: Option<BootstrapCi>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub coefficients: Vec<Coefficient>,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
    /// Constant predictors left out of the fit.
    pub dropped: Vec<String>,
    pub replicates: usize,
    pub seed: u64,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.predictor == name)
    }
}

struct Fit<T> {
    slopes: Vec<T>,
    intercept: T,
    r_squared: T,
}

fn zscore<T: Scalar>(x: &[T]) -> Option<Vec<T>> {
    if x.iter().all(|&v| v == x[0]) {
        return None;
    }
    let m = mean(x)?;
    let sd = sample_variance(x)?.sqrt();
    if !(sd > T::zero()) {
        return None;
    }
    Some(x.iter().map(|&v| (v - m) / sd).collect())
}

/// OLS with intercept of `y` on the z-scored `predictors`. Every predictor
/// must vary; collinear predictors are an error.
fn fit<T: Scalar>(y: &[T], predictors: &[Vec<T>]) -> Result<Fit<T>> {
    let n = y.len();
    let p = predictors.len();
    if n <= p + 1 {
        return Err(Error::InvalidInput(format!("{n} observations for {p} predictors")));
    }
    let scaled: Vec<Vec<T>> = predictors
        .iter()
        .enumerate()
        .map(|(k, x)| zscore(x).ok_or_else(|| Error::ZeroVariance(format!("predictor {k}"))))
        .collect::<Result<_>>()?;
    let mut cols: Vec<&[T]> = scaled.iter().map(|c| c.as_slice()).collect();
    cols.push(y);
    let mut cp = CrossProducts::from_columns(&cols);
    let sst = cp.get(p, p);
    let pivots: Vec<usize> = (0..p).collect();
    let skipped = cp.sweep_all(&pivots, T::lit(COLLINEARITY_TOL));
    if !skipped.is_empty() {
        return Err(Error::RankDeficient(format!(
            "predictor(s) {skipped:?} are linear combinations of the others"
        )));
    }
    let slopes = (0..p).map(|k| cp.get(k, p)).collect();
    let rss = cp.get(p, p);
    let r_squared = if sst > T::zero() {
        (T::one() - rss / sst).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    Ok(Fit {
        slopes,
        intercept: mean(y).unwrap_or_else(T::zero),
        r_squared,
    })
}

fn resample<T: Scalar>(idx: &[usize], col: &[T]) -> Vec<T> {
    idx.iter().map(|&i| col[i]).collect()
}

/// Regress `response` on each named predictor after z-scoring it; the
/// response is left in its own units. Constant predictors are dropped with a
/// warning; linearly dependent ones are an error. `replicates = 0` skips the
/// bootstrap.
pub fn regress_performance<T: Scalar>(
    response: &[T],
    predictors: &[(&str, &[T])],
    replicates: usize,
    seed: u64,
) -> Result<RegressionResult> {
    let n = response.len();
    if let Some((name, x)) = predictors.iter().find(|(_, x)| x.len() != n) {
        return Err(Error::InvalidInput(format!("predictor {name} has {} values, response {n}", x.len())));
    }
    if n < MIN_OBSERVATIONS {
        return Err(Error::InvalidInput(format!(
            "regression needs at least {MIN_OBSERVATIONS} observations, got {n}"
        )));
    }
    if replicates > 0 {
        check_replicates(replicates)?;
    }
    let mut kept: Vec<(&str, &[T])> = Vec::new();
    let mut dropped = Vec::new();
    for &(name, x) in predictors {
        if zscore(x).is_some() {
            kept.push((name, x));
        } else {
            log::warn!("predictor {name} is constant; dropped from the regression");
            dropped.push(name.to_string());
        }
    }
    let cols: Vec<Vec<T>> = kept.iter().map(|(_, x)| x.to_vec()).collect();
    let point = fit(response, &cols)?;

    let mut cis: Vec<Option<BootstrapCi>> = vec![None; kept.len()];
    if replicates > 0 && !kept.is_empty() {
        let (draws, _) = run_replicates(replicates, seed, || (), |_, rng| {
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let y = resample(&idx, response);
            let xs: Vec<Vec<T>> = cols.iter().map(|c| resample(&idx, c)).collect();
            Ok(fit(&y, &xs)?.slopes)
        })?;
        let per_coef: Vec<Vec<T>> = (0..kept.len())
            .map(|k| draws.iter().map(|s| s[k]).collect())
            .collect();
        for (k, values) in per_coef.into_iter().enumerate() {
            cis[k] = Some(BootstrapCi::from_values(values, 0));
        }
    }

    Ok(RegressionResult {
        coefficients: kept
            .iter()
            .zip(&point.slopes)
            .zip(cis)
            .map(|((&(name, _), &b), ci)| Coefficient {
                predictor: name.to_string(),
                estimate: b.as_f64(),
                ci,
            })
            .collect(),
        intercept: point.intercept.as_f64(),
        r_squared: point.r_squared.as_f64(),
        n,
        dropped,
        replicates,
        seed,
    })
}

/// Partial Spearman correlation: rank every vector, residualize `x` and `y`
/// on the ranked controls (with intercept) and correlate the residuals.
pub fn partial_rank_corr<T: Scalar>(x: &[T], y: &[T], controls: &[&[T]]) -> Result<T> {
    if x.len() < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 observations, got {}", x.len())));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let rz: Vec<Vec<T>> = controls.iter().map(|c| average_ranks(c)).collect();
    let refs: Vec<&[T]> = rz.iter().map(|c| c.as_slice()).collect();
    Ok(partial_correlation(&rx, &ry, &refs)?.r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCorrelation {
    pub x: String,
    pub y: String,
    pub controls: Vec<String>,
    pub rho: f64,
    pub ci: Option<BootstrapCi>,
    pub n: usize,
    pub seed: u64,
}

/// [`partial_rank_corr`] with a case-resampling interval (ranks recomputed per draw).
pub fn partial_rank_corr_ci<T: Scalar>(
    x: (&str, &[T]),
    y: (&str, &[T]),
    controls: &[(&str, &[T])],
    replicates: usize,
    seed: u64,
) -> Result<RankCorrelation> {
    let n = x.1.len();
    let zs: Vec<&[T]> = controls.iter().map(|c| c.1).collect();
    let rho = partial_rank_corr(x.1, y.1, &zs)?;
    let ci = if replicates > 0 {
        check_replicates(replicates)?;
        let (values, redraws) = run_replicates(replicates, seed, || (), |_, rng| {
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let bx = resample(&idx, x.1);
            let by = resample(&idx, y.1);
            let bz: Vec<Vec<T>> = zs.iter().map(|z| resample(&idx, z)).collect();
            let refs: Vec<&[T]> = bz.iter().map(|c| c.as_slice()).collect();
            partial_rank_corr(&bx, &by, &refs)
        })?;
        Some(BootstrapCi::from_values(values, redraws))
    } else {
        None
    };
    Ok(RankCorrelation {
        x: x.0.to_string(),
        y: y.0.to_string(),
        controls: controls.iter().map(|c| c.0.to_string()).collect(),
        rho: rho.as_f64(),
        ci,
        n,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs(n: usize) -> (Vec<f64>, Vec<f64>) {
        let a: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 1.13).cos() + 0.1 * i as f64).collect();
        (a, b)
    }

    #[test]
    fn constant_response_zero_slopes() {
        let (a, b) = xs(20);
        let y = vec![0.3; 20];
        let r = regress_performance(&y, &[("a", &a), ("b", &b)], 0, 0).unwrap();
        assert!(r.coefficients.iter().all(|c| c.estimate.abs() < 1e-12));
        assert_eq!(r.r_squared, 0.0);
        assert!((r.intercept - 0.3).abs() < 1e-15);
    }

    #[test]
    fn duplicate_predictor_is_rank_deficient() {
        let (a, _) = xs(20);
        let y: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        let err = regress_performance(&y, &[("a", &a), ("a2", &a)], 0, 0).unwrap_err();
        assert!(matches!(err, Error::RankDeficient(_)));
    }

    #[test]
    fn constant_predictor_dropped() {
        let (a, _) = xs(20);
        let c = vec![9.0; 20];
        let y: Vec<f64> = a.iter().map(|v| 1.0 + v).collect();
        let r = regress_performance(&y, &[("a", &a), ("board", &c)], 0, 0).unwrap();
        assert_eq!(r.dropped, vec!["board".to_string()]);
        assert_eq!(r.coefficients.len(), 1);
        assert!((r.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_observations() {
        let a = vec![1.0, 2.0, 3.0];
        assert!(regress_performance(&a, &[("a", &a)], 0, 0).is_err());
    }

    #[test]
    fn rank_corr_basics() {
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(3) + 1.0).collect();
        assert!((partial_rank_corr(&x, &x, &[]).unwrap() - 1.0).abs() < 1e-12);
        assert!((partial_rank_corr(&x, &y, &[]).unwrap() - 1.0).abs() < 1e-12);
        assert!(partial_rank_corr(&x[..3], &y[..3], &[]).is_err());
    }
}
