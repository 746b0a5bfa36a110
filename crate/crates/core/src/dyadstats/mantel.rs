//! Mantel and partial Mantel correlations on materialized dyad vectors.

use serde::{Deserialize, Serialize};

use super::rank::average_ranks;
use super::sweep::CrossProducts;
use crate::dyad::DyadMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative residual variance below which a column counts as explained.
pub const COLLINEARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pearson,
    /// Pearson on average ranks.
    Spearman,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pearson => "pearson",
            Method::Spearman => "spearman",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(Method::Pearson),
            "spearman" => Ok(Method::Spearman),
            other => Err(Error::InvalidInput(format!("unknown method `{other}`"))),
        }
    }
}

/// A partial correlation and the conditioning columns that had to be dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Partial<T> {
    pub r: T,
    /// Positions (within the control list) skipped as collinear or constant.
    pub dropped: Vec<usize>,
    pub n: usize,
}

/// Read the partial correlation of columns 0 and 1 given columns `2..` off a
/// cross-product matrix.
pub(crate) fn partial_from_cross<T: Scalar>(mut cp: CrossProducts<T>) -> Result<(T, Vec<usize>)> {
    let tol = T::lit(COLLINEARITY_TOL);
    let (vx, vy) = (cp.get(0, 0), cp.get(1, 1));
    if !(vx > T::zero()) {
        return Err(Error::ZeroVariance("first matrix".into()));
    }
    if !(vy > T::zero()) {
        return Err(Error::ZeroVariance("second matrix".into()));
    }
    let pivots: Vec<usize> = (2..cp.m).collect();
    let skipped = cp.sweep_all(&pivots, tol);
    let (rx, ry) = (cp.get(0, 0), cp.get(1, 1));
    if !(rx > tol * vx) {
        return Err(Error::ZeroVariance("first matrix after removing controls".into()));
    }
    if !(ry > tol * vy) {
        return Err(Error::ZeroVariance("second matrix after removing controls".into()));
    }
    let r = cp.get(0, 1) / (rx * ry).sqrt();
    Ok((r.max(-T::one()).min(T::one()), skipped.into_iter().map(|k| k - 2).collect()))
}

/// Correlation of the residuals of `x` and `y` after least-squares regression
/// (with intercept) on `controls`. With no controls this is plain Pearson.
pub fn partial_correlation<T: Scalar>(x: &[T], y: &[T], controls: &[&[T]]) -> Result<Partial<T>> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if let Some(c) = controls.iter().find(|c| c.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: c.len() });
    }
    if n < controls.len() + 3 {
        return Err(Error::InvalidInput(format!(
            "{n} observations leave no degrees of freedom for {} controls",
            controls.len()
        )));
    }
    let mut cols: Vec<&[T]> = Vec::with_capacity(controls.len() + 2);
    cols.push(x);
    cols.push(y);
    cols.extend_from_slice(controls);
    let (r, dropped) = partial_from_cross(CrossProducts::from_columns(&cols))?;
    Ok(Partial { r, dropped, n })
}

fn check_dims<T: Scalar>(x: &DyadMatrix<T>, others: &[&DyadMatrix<T>]) -> Result<()> {
    if x.n() < 3 {
        return Err(Error::InvalidInput(format!("Mantel needs at least 3 nodes, got {}", x.n())));
    }
    for m in others {
        if m.n() != x.n() {
            return Err(Error::DimensionMismatch { expected: x.n(), found: m.n() });
        }
    }
    Ok(())
}

pub(crate) fn transformed<T: Scalar>(m: &DyadMatrix<T>, method: Method) -> Vec<T> {
    let v = m.upper().into_values();
    match method {
        Method::Pearson => v,
        Method::Spearman => average_ranks(&v),
    }
}

/// Correlation of the strict upper triangles of `x` and `y`.
pub fn mantel<T: Scalar>(x: &DyadMatrix<T>, y: &DyadMatrix<T>, method: Method) -> Result<T> {
    check_dims(x, &[y])?;
    let (a, b) = (transformed(x, method), transformed(y, method));
    Ok(partial_correlation(&a, &b, &[])?.r)
}

/// Partial Mantel correlation of `x` and `y` given `controls`, by residual
/// regression. The Spearman variant ranks every matrix first. Controls that
/// are collinear with earlier ones are dropped with a warning.
pub fn partial_mantel<T: Scalar>(
    x: &DyadMatrix<T>,
    y: &DyadMatrix<T>,
    controls: &[&DyadMatrix<T>],
    method: Method,
) -> Result<Partial<T>> {
    let mut all = vec![y];
    all.extend_from_slice(controls);
    check_dims(x, &all)?;
    let a = transformed(x, method);
    let b = transformed(y, method);
    let zs: Vec<Vec<T>> = controls.iter().map(|c| transformed(c, method)).collect();
    let zrefs: Vec<&[T]> = zs.iter().map(|z| z.as_slice()).collect();
    let p = partial_correlation(&a, &b, &zrefs)?;
    for &k in &p.dropped {
        log::warn!("control #{k} is constant or collinear with earlier controls; dropped");
    }
    Ok(p)
}
