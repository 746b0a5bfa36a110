//! Node-resampling bootstrap for (partial) Mantel correlations, and the
//! element-resampling null used as a robustness check.
//!
//! Resampling `n` nodes with replacement and taking the submatrix at the drawn
//! indices produces, for each original pair `u < v`, exactly `c_u * c_v`
//! copies of dyad `(u, v)` (where `c` counts how often a node was drawn), plus
//! self-pairs from repeated draws, which are discarded. A replicate is
//! therefore a weighted statistic over the original dyads, computed here
//! without materializing the resampled matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mantel::{partial_from_cross, transformed, Method};
use super::rank::{dense_keys, ranks_from_counts};
use super::sweep::CrossProducts;
use crate::dyad::DyadMatrix;
use crate::error::{Error, Result};
use crate::scalar::{percentile_sorted, Scalar};

pub const MIN_REPLICATES: usize = 100;
/// Redraws allowed for a degenerate replicate before giving up.
pub const MAX_REDRAWS: usize = 10;
/// Smallest number of usable dyads a replicate may have.
pub const MIN_DYADS: u64 = 3;

/// Generator for replicate `index` under `seed`: one ChaCha stream per replicate,
/// so results do not depend on scheduling.
pub fn replicate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Percentile summary of bootstrap replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub low: f64,
    pub high: f64,
    pub median: f64,
    pub replicates: usize,
    /// Degenerate draws that were replaced.
    pub redraws: usize,
}

impl BootstrapCi {
    /// Both bounds strictly on the same side of zero.
    pub fn excludes_zero(&self) -> bool {
        (self.low > 0.0 && self.high > 0.0) || (self.low < 0.0 && self.high < 0.0)
    }

    pub(crate) fn from_values<T: Scalar>(mut values: Vec<T>, redraws: usize) -> Self {
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite replicate"));
        BootstrapCi {
            low: percentile_sorted(&values, 2.5).as_f64(),
            high: percentile_sorted(&values, 97.5).as_f64(),
            median: percentile_sorted(&values, 50.0).as_f64(),
            replicates: values.len(),
            redraws,
        }
    }
}

pub(crate) fn check_replicates(replicates: usize) -> Result<()> {
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidInput(format!(
            "at least {MIN_REPLICATES} bootstrap replicates required, got {replicates}"
        )));
    }
    Ok(())
}

/// Is this error a property of the particular draw (retry) rather than of the inputs?
pub(crate) fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::ZeroVariance(_) | Error::RankDeficient(_) | Error::InvalidInput(_))
}

/// Run `replicates` draws of `stat`, each on its own stream, redrawing a
/// degenerate draw up to [`MAX_REDRAWS`] times.
pub(crate) fn run_replicates<V, S, F>(
    replicates: usize,
    seed: u64,
    init: impl Fn() -> S + Sync + Send,
    stat: F,
) -> Result<(Vec<V>, usize)>
where
    V: Send,
    F: Fn(&mut S, &mut ChaCha8Rng) -> Result<V> + Sync + Send,
{
    let out: Vec<Result<(V, usize)>> = (0..replicates)
        .into_par_iter()
        .map_init(init, |scratch, rep| {
            let mut rng = replicate_rng(seed, rep);
            let mut redraws = 0;
            loop {
                match stat(scratch, &mut rng) {
                    Ok(v) => return Ok((v, redraws)),
                    Err(e) if is_degenerate(&e) => {
                        if redraws == MAX_REDRAWS {
                            return Err(Error::BootstrapExhausted {
                                replicate: rep,
                                retries: MAX_REDRAWS,
                            });
                        }
                        redraws += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect();
    let mut values = Vec::with_capacity(replicates);
    let mut redraws = 0;
    for r in out {
        let (v, d) = r?;
        values.push(v);
        redraws += d;
    }
    Ok((values, redraws))
}

/// Precomputed per-matrix data for weighted replicates.
pub struct DyadResampler<'a, T> {
    mats: Vec<&'a DyadMatrix<T>>,
    method: Method,
    n: usize,
    /// Spearman: full `n x n` tie-group keys per matrix, and the key count.
    keys: Vec<Vec<u32>>,
    distinct: Vec<usize>,
    /// Pearson: per-matrix shift close to the mean, for stable one-pass sums.
    shifts: Vec<T>,
}

/// Reusable per-worker buffers.
pub struct ResampleScratch<T> {
    counts: Vec<u32>,
    active: Vec<usize>,
    hist: Vec<Vec<u32>>,
    rank_of_key: Vec<Vec<T>>,
    vals: Vec<T>,
    s1: Vec<T>,
    s2: Vec<T>,
}

impl<'a, T: Scalar> DyadResampler<'a, T> {
    /// `mats[0]` and `mats[1]` are correlated given `mats[2..]`.
    pub fn new(mats: Vec<&'a DyadMatrix<T>>, method: Method) -> Result<Self> {
        let n = mats[0].n();
        if mats.len() < 2 {
            return Err(Error::InvalidInput("need at least two matrices".into()));
        }
        if let Some(m) = mats.iter().find(|m| m.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: m.n() });
        }
        let mut keys = Vec::new();
        let mut distinct = Vec::new();
        let mut shifts = Vec::new();
        for m in &mats {
            let upper = m.upper().into_values();
            match method {
                Method::Spearman => {
                    let (k, d) = dense_keys(&upper);
                    let mut full = vec![0u32; n * n];
                    let mut it = k.into_iter();
                    for i in 0..n {
                        for j in (i + 1)..n {
                            let key = it.next().expect("one key per pair");
                            full[i * n + j] = key;
                            full[j * n + i] = key;
                        }
                    }
                    keys.push(full);
                    distinct.push(d);
                }
                Method::Pearson => {
                    let mean = if upper.is_empty() {
                        T::zero()
                    } else {
                        upper.iter().copied().sum::<T>() / T::from_usize_lossy(upper.len())
                    };
                    shifts.push(mean);
                }
            }
        }
        Ok(DyadResampler {
            mats,
            method,
            n,
            keys,
            distinct,
            shifts,
        })
    }

    pub fn scratch(&self) -> ResampleScratch<T> {
        let m = self.mats.len();
        ResampleScratch {
            counts: vec![0; self.n],
            active: Vec::with_capacity(self.n),
            hist: self.distinct.iter().map(|&d| vec![0; d]).collect(),
            rank_of_key: vec![Vec::new(); self.distinct.len()],
            vals: vec![T::zero(); m],
            s1: vec![T::zero(); m],
            s2: vec![T::zero(); m * m],
        }
    }

    /// Statistic for one set of node multiplicities (`counts[u]` = times node
    /// `u` was drawn).
    pub fn statistic(&self, counts: &[u32], s: &mut ResampleScratch<T>) -> Result<T> {
        let n = self.n;
        let m = self.mats.len();
        s.active.clear();
        s.active.extend((0..n).filter(|&u| counts[u] > 0));
        let total: u64 = {
            let drawn: u64 = counts.iter().map(|&c| c as u64).sum();
            let same: u64 = counts.iter().map(|&c| c as u64 * (c as u64).saturating_sub(1) / 2).sum();
            drawn * drawn.saturating_sub(1) / 2 - same
        };
        if total < MIN_DYADS {
            return Err(Error::InvalidInput(format!("only {total} usable dyads")));
        }
        let w_total = T::from_u64(total).expect("fits");

        let centers: Vec<T> = match self.method {
            Method::Spearman => {
                for h in s.hist.iter_mut() {
                    h.fill(0);
                }
                for (a, &u) in s.active.iter().enumerate() {
                    let cu = counts[u];
                    for &v in &s.active[a + 1..] {
                        let w = cu * counts[v];
                        for k in 0..m {
                            s.hist[k][self.keys[k][u * n + v] as usize] += w;
                        }
                    }
                }
                for k in 0..m {
                    ranks_from_counts(&s.hist[k], &mut s.rank_of_key[k]);
                }
                // mean rank of `total` items is (total + 1) / 2
                vec![(w_total + T::one()) * T::lit(0.5); m]
            }
            Method::Pearson => self.shifts.clone(),
        };

        s.s1.fill(T::zero());
        s.s2.fill(T::zero());
        for (a, &u) in s.active.iter().enumerate() {
            let cu = counts[u];
            let rows: Vec<&[T]> = self.mats.iter().map(|mat| mat.row(u)).collect();
            for &v in &s.active[a + 1..] {
                let w = T::from_u32(cu * counts[v]).expect("fits");
                for k in 0..m {
                    let raw = match self.method {
                        Method::Spearman => s.rank_of_key[k][self.keys[k][u * n + v] as usize],
                        Method::Pearson => rows[k][v],
                    };
                    s.vals[k] = raw - centers[k];
                }
                for k in 0..m {
                    let wv = w * s.vals[k];
                    s.s1[k] = s.s1[k] + wv;
                    for l in k..m {
                        s.s2[k * m + l] = s.s2[k * m + l] + wv * s.vals[l];
                    }
                }
            }
        }
        let mut a = vec![T::zero(); m * m];
        for k in 0..m {
            for l in k..m {
                let c = s.s2[k * m + l] - s.s1[k] * s.s1[l] / w_total;
                a[k * m + l] = c;
                a[l * m + k] = c;
            }
        }
        let cp = CrossProducts { m, a, n: w_total };
        partial_from_cross(cp).map(|(r, _)| r)
    }

    /// Draw `n` nodes with replacement and evaluate.
    pub fn draw<R: Rng>(&self, rng: &mut R, s: &mut ResampleScratch<T>) -> Result<T> {
        let mut counts = std::mem::take(&mut s.counts);
        counts.fill(0);
        for _ in 0..self.n {
            counts[rng.random_range(0..self.n)] += 1;
        }
        let out = self.statistic(&counts, s);
        s.counts = counts;
        out
    }
}

/// Percentile bootstrap interval for the (partial) Mantel correlation of `x`
/// and `y` given `controls`, resampling rows and columns together.
pub fn bootstrap_ci<T: Scalar>(
    x: &DyadMatrix<T>,
    y: &DyadMatrix<T>,
    controls: &[&DyadMatrix<T>],
    method: Method,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapCi> {
    check_replicates(replicates)?;
    let mut mats = vec![x, y];
    mats.extend_from_slice(controls);
    let sampler = DyadResampler::new(mats, method)?;
    let (values, redraws) = run_replicates(
        replicates,
        seed,
        || sampler.scratch(),
        |scratch, rng| sampler.draw(rng, scratch),
    )?;
    Ok(BootstrapCi::from_values(values, redraws))
}

/// Null distribution from proximity matrices whose dyads are redrawn with
/// replacement from the observed dyads of `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSummary {
    pub method: Method,
    pub observed: f64,
    pub replicates: usize,
    pub q025: f64,
    pub median: f64,
    pub q95: f64,
    pub q975: f64,
    /// Share of null coefficients at or above the observed one.
    pub exceedance: f64,
    pub seed: u64,
}

pub fn random_null<T: Scalar>(
    x: &DyadMatrix<T>,
    y: &DyadMatrix<T>,
    controls: &[&DyadMatrix<T>],
    method: Method,
    replicates: usize,
    seed: u64,
) -> Result<NullSummary> {
    check_replicates(replicates)?;
    let observed = super::mantel::partial_mantel(x, y, controls, method)?.r;

    let xv = x.upper().into_values();
    let nd = xv.len();
    let (keys, distinct) = dense_keys(&xv);

    // The fixed columns are centered once; only the scrambled column changes.
    let mut fixed: Vec<Vec<T>> = std::iter::once(y)
        .chain(controls.iter().copied())
        .map(|m| transformed(m, method))
        .collect();
    for col in fixed.iter_mut() {
        if col.iter().all(|&v| v == col[0]) {
            col.fill(T::zero());
        } else {
            let mean = col.iter().copied().sum::<T>() / T::from_usize_lossy(nd);
            col.iter_mut().for_each(|v| *v = *v - mean);
        }
    }
    let m = fixed.len() + 1;
    let mut block = vec![T::zero(); m * m];
    for i in 0..fixed.len() {
        for j in i..fixed.len() {
            let s: T = fixed[i].iter().zip(&fixed[j]).map(|(&a, &b)| a * b).sum();
            block[(i + 1) * m + (j + 1)] = s;
            block[(j + 1) * m + (i + 1)] = s;
        }
    }

    struct Scratch<T> {
        col: Vec<T>,
        drawn: Vec<u32>,
        hist: Vec<u32>,
        ranks: Vec<T>,
    }
    let (values, _) = run_replicates(
        replicates,
        seed,
        || Scratch {
            col: vec![T::zero(); nd],
            drawn: vec![0; nd],
            hist: vec![0; distinct],
            ranks: Vec::new(),
        },
        |s: &mut Scratch<T>, rng| {
            for d in s.drawn.iter_mut() {
                *d = rng.random_range(0..nd) as u32;
            }
            match method {
                Method::Pearson => {
                    for (c, &k) in s.col.iter_mut().zip(&s.drawn) {
                        *c = xv[k as usize];
                    }
                }
                Method::Spearman => {
                    s.hist.fill(0);
                    for &k in &s.drawn {
                        s.hist[keys[k as usize] as usize] += 1;
                    }
                    ranks_from_counts(&s.hist, &mut s.ranks);
                    for (c, &k) in s.col.iter_mut().zip(&s.drawn) {
                        *c = s.ranks[keys[k as usize] as usize];
                    }
                }
            }
            if s.col.iter().all(|&v| v == s.col[0]) {
                return Err(Error::ZeroVariance("scrambled proximity".into()));
            }
            let mean = s.col.iter().copied().sum::<T>() / T::from_usize_lossy(nd);
            s.col.iter_mut().for_each(|v| *v = *v - mean);
            let mut a = block.clone();
            a[0] = s.col.iter().map(|&v| v * v).sum();
            for (j, f) in fixed.iter().enumerate() {
                let c: T = s.col.iter().zip(f).map(|(&p, &q)| p * q).sum();
                a[j + 1] = c;
                a[(j + 1) * m] = c;
            }
            partial_from_cross(CrossProducts {
                m,
                a,
                n: T::from_usize_lossy(nd),
            })
            .map(|(r, _)| r)
        },
    )?;
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let exceed = values.iter().filter(|&&v| v >= observed).count();
    Ok(NullSummary {
        method,
        observed: observed.as_f64(),
        replicates,
        q025: percentile_sorted(&sorted, 2.5).as_f64(),
        median: percentile_sorted(&sorted, 50.0).as_f64(),
        q95: percentile_sorted(&sorted, 95.0).as_f64(),
        q975: percentile_sorted(&sorted, 97.5).as_f64(),
        exceedance: exceed as f64 / replicates as f64,
        seed,
    })
}
