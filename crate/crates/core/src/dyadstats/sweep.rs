//! Centered cross-product matrices and the sweep operator.
//!
//! Partial correlations and least-squares fits are both read off a
//! cross-product matrix after sweeping the conditioning columns: the swept
//! block holds residual cross products, and the off-block column holds
//! regression coefficients.

use crate::scalar::Scalar;

/// Symmetric `m x m` matrix of centered cross products, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossProducts<T> {
    pub m: usize,
    pub a: Vec<T>,
    /// Observation weight total.
    pub n: T,
}

impl<T: Scalar> CrossProducts<T> {
    /// Two-pass centered cross products of equally long columns. A column whose
    /// entries are all equal contributes exact zeros.
    pub fn from_columns(columns: &[&[T]]) -> Self {
        let m = columns.len();
        let len = columns.first().map_or(0, |c| c.len());
        let centered: Vec<Vec<T>> = columns
            .iter()
            .map(|c| {
                if c.iter().all(|&v| v == c[0]) {
                    return vec![T::zero(); c.len()];
                }
                let mean = c.iter().copied().sum::<T>() / T::from_usize_lossy(c.len());
                c.iter().map(|&v| v - mean).collect()
            })
            .collect();
        let mut a = vec![T::zero(); m * m];
        for i in 0..m {
            for j in i..m {
                let s: T = centered[i].iter().zip(&centered[j]).map(|(&x, &y)| x * y).sum();
                a[i * m + j] = s;
                a[j * m + i] = s;
            }
        }
        CrossProducts {
            m,
            a,
            n: T::from_usize_lossy(len),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.m + j]
    }

    /// Sweep on pivot `k`. Caller guarantees a non-zero pivot.
    pub fn sweep(&mut self, k: usize) {
        let m = self.m;
        let d = self.a[k * m + k];
        for j in 0..m {
            self.a[k * m + j] = self.a[k * m + j] / d;
        }
        for i in 0..m {
            if i == k {
                continue;
            }
            let b = self.a[i * m + k];
            if b == T::zero() {
                continue;
            }
            for j in 0..m {
                let v = self.a[k * m + j];
                self.a[i * m + j] = self.a[i * m + j] - b * v;
            }
            self.a[i * m + k] = -b / d;
        }
        self.a[k * m + k] = T::one() / d;
    }

    /// Sweep each pivot in `pivots` whose residual variance is still above
    /// `tol` times its original variance; returns the skipped (collinear or
    /// constant) pivots.
    pub fn sweep_all(&mut self, pivots: &[usize], tol: T) -> Vec<usize> {
        let original: Vec<T> = (0..self.m).map(|i| self.get(i, i)).collect();
        let mut skipped = Vec::new();
        for &k in pivots {
            let cur = self.get(k, k);
            if !(original[k] > T::zero()) || !(cur > tol * original[k]) {
                skipped.push(k);
                continue;
            }
            self.sweep(k);
        }
        skipped
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweeping_one_predictor_gives_slope_and_rss() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.1, 5.9, 8.0];
        let mut cp = CrossProducts::from_columns(&[&x, &y]);
        cp.sweep(0);
        let sxx = 5.0;
        let my = (2.0 + 4.1 + 5.9 + 8.0) / 4.0;
        let sxy_c: f64 = x.iter().zip(&y).map(|(a, b)| (a - 2.5) * (b - my)).sum();
        assert!((cp.get(0, 1) - sxy_c / sxx).abs() < 1e-12);
        let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
        assert!((cp.get(1, 1) - (syy - sxy_c * sxy_c / sxx)).abs() < 1e-12);
    }

    #[test]
    fn collinear_pivot_skipped() {
        let x = [1.0, 2.0, 3.0, 5.0];
        let z1 = [0.0, 1.0, 0.0, 1.0];
        let z2 = [0.0, 2.0, 0.0, 2.0];
        let mut cp = CrossProducts::from_columns(&[&x, &z1, &z2]);
        assert_eq!(cp.sweep_all(&[1, 2], 1e-10), vec![2]);
    }

    #[test]
    fn constant_column_is_exact_zero() {
        let c = [0.1, 0.1, 0.1];
        let x = [1.0, 2.0, 4.0];
        let cp = CrossProducts::from_columns(&[&c, &x]);
        assert_eq!(cp.get(0, 0), 0.0);
        assert_eq!(cp.get(0, 1), 0.0);
    }
}
