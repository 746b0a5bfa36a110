//! Exact binomial tail probabilities, summed in log space.

use serde::{Deserialize, Serialize};

fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `ln P(X = k)` for `X ~ Binomial(n, p)`; `-inf` for impossible outcomes.
pub fn ln_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let term = |count: u64, prob: f64| {
        if count == 0 {
            0.0
        } else {
            count as f64 * prob.ln()
        }
    };
    ln_choose(n, k) + term(k, p) + term(n - k, 1.0 - p)
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// One-sided upper tail `P(X >= successes)`.
pub fn binomial_tail(successes: u64, n: u64, p: f64) -> f64 {
    assert!(successes <= n, "successes must not exceed trials");
    assert!((0.0..=1.0).contains(&p), "p must be a probability");
    if successes == 0 {
        return 1.0;
    }
    log_sum_exp((successes..=n).map(|k| ln_pmf(k, n, p))).exp().min(1.0)
}

/// Lower tail `P(X <= successes)`.
pub fn binomial_cdf(successes: u64, n: u64, p: f64) -> f64 {
    assert!(successes <= n, "successes must not exceed trials");
    if successes == n {
        return 1.0;
    }
    log_sum_exp((0..=successes).map(|k| ln_pmf(k, n, p))).exp().min(1.0)
}

/// Two-sided exact test: total probability of outcomes no more likely than
/// the observed one.
pub fn binomial_two_sided(successes: u64, n: u64, p: f64) -> f64 {
    assert!(successes <= n, "successes must not exceed trials");
    let observed = ln_pmf(successes, n, p);
    // relative slack for outcomes that tie with the observed probability
    let bound = observed + (1.0 + 1e-7_f64).ln();
    log_sum_exp((0..=n).map(|k| ln_pmf(k, n, p)).filter(|&l| l <= bound))
        .exp()
        .min(1.0)
}

/// Sign-consistency count with both sidedness variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialSummary {
    pub successes: u64,
    pub trials: u64,
    pub p: f64,
    pub one_sided: f64,
    pub two_sided: f64,
}

pub fn binomial_summary(successes: u64, trials: u64, p: f64) -> BinomialSummary {
    BinomialSummary {
        successes,
        trials,
        p,
        one_sided: binomial_tail(successes, trials, p),
        two_sided: binomial_two_sided(successes, trials, p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_successes() {
        for n in 1..30u64 {
            let expected = 0.5f64.powi(n as i32);
            assert!((binomial_tail(n, n, 0.5) - expected).abs() <= 1e-14 * expected);
        }
    }

    #[test]
    fn vacuous_tail() {
        assert_eq!(binomial_tail(0, 17, 0.3), 1.0);
        assert_eq!(binomial_tail(0, 0, 0.3), 1.0);
    }

    #[test]
    fn degenerate_probabilities() {
        assert_eq!(binomial_tail(3, 5, 0.0), 0.0);
        assert!((binomial_tail(5, 5, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_sided_symmetric_case() {
        // symmetric p = 0.5: two-sided is twice the smaller tail (capped at 1)
        let one = binomial_tail(15, 20, 0.5);
        assert!((binomial_two_sided(15, 20, 0.5) - 2.0 * one).abs() < 1e-12);
        assert!((binomial_two_sided(10, 20, 0.5) - 1.0).abs() < 1e-12);
    }
}
