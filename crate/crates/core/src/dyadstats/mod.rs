//! Inference kernel: (partial) Mantel correlations, dyadic bootstrap
//! intervals, binomial tails, partial rank correlations and the performance
//! regression.
//!
//! The Pearson Mantel coefficient is the usual product-moment correlation of
//! the two strict-upper-triangle vectors, with the square root over the
//! product of the sums of squares, so that `mantel(X, X) = 1`.

pub mod binomial;
pub mod bootstrap;
pub mod mantel;
pub mod rank;
pub mod regression;
pub mod sweep;

use serde::{Deserialize, Serialize};

pub use binomial::{binomial_cdf, binomial_summary, binomial_tail, binomial_two_sided, BinomialSummary};
pub use bootstrap::{bootstrap_ci, random_null, BootstrapCi, NullSummary};
pub use mantel::{mantel, partial_correlation, partial_mantel, Method, Partial};
pub use rank::average_ranks;
pub use regression::{
    partial_rank_corr, partial_rank_corr_ci, regress_performance, Coefficient, RankCorrelation,
    RegressionResult,
};

use crate::dyad::DyadMatrix;
use crate::error::Result;
use crate::scalar::Scalar;

/// A (partial) Mantel coefficient with its bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MantelResult {
    pub method: Method,
    pub r: f64,
    /// `[low, high]`; absent when no replicates were run.
    pub ci: Option<[f64; 2]>,
    pub replicates: usize,
    pub n_dyads: usize,
    pub n_nodes: usize,
    pub controls: Vec<String>,
    pub dropped_controls: Vec<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicate_median: Option<f64>,
}

impl MantelResult {
    /// Both interval bounds share a sign.
    pub fn significant(&self) -> bool {
        match self.ci {
            Some([lo, hi]) => (lo > 0.0 && hi > 0.0) || (lo < 0.0 && hi < 0.0),
            None => false,
        }
    }

    pub fn significant_positive(&self) -> bool {
        self.significant() && self.r > 0.0
    }
}

/// Partial Mantel of `x` and `y` given named controls, plus a bootstrap
/// interval when `replicates > 0`. Controls dropped as collinear in the point
/// estimate are also left out of the bootstrap.
pub fn mantel_test<T: Scalar>(
    x: &DyadMatrix<T>,
    y: &DyadMatrix<T>,
    controls: &[(&str, &DyadMatrix<T>)],
    method: Method,
    replicates: usize,
    seed: u64,
) -> Result<MantelResult> {
    let mats: Vec<&DyadMatrix<T>> = controls.iter().map(|c| c.1).collect();
    let point = partial_mantel(x, y, &mats, method)?;
    let kept: Vec<usize> = (0..controls.len()).filter(|k| !point.dropped.contains(k)).collect();
    let kept_mats: Vec<&DyadMatrix<T>> = kept.iter().map(|&k| mats[k]).collect();
    let ci = if replicates > 0 {
        Some(bootstrap_ci(x, y, &kept_mats, method, replicates, seed)?)
    } else {
        None
    };
    Ok(MantelResult {
        method,
        r: point.r.as_f64(),
        ci: ci.map(|c| [c.low, c.high]),
        replicates,
        n_dyads: x.dyad_count(),
        n_nodes: x.n(),
        controls: kept.iter().map(|&k| controls[k].0.to_string()).collect(),
        dropped_controls: point.dropped.iter().map(|&k| controls[k].0.to_string()).collect(),
        seed,
        replicate_median: ci.map(|c| c.median),
    })
}

/// Stable 64-bit seed for a named sub-analysis.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, then a splitmix64 finalizer with the master seed.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
