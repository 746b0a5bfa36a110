//! Control proximity matrices: sector (F), price level (T), board size (B),
//! financial expertise (E) and geography (G).

use serde::{Deserialize, Serialize};

use crate::dyad::{DiagonalConvention, DyadMatrix};
use crate::error::{Error, Result};
use crate::ingest::{GeoPoint, Sector};
use crate::scalar::Scalar;

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Great-circle distance in kilometres on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn geo_distance<T: Scalar>(a: GeoPoint, b: GeoPoint) -> T {
    let (lat1, lon1) = (T::lit(a.latitude).to_radians(), T::lit(a.longitude).to_radians());
    let (lat2, lon2) = (T::lit(b.latitude).to_radians(), T::lit(b.longitude).to_radians());
    let two = T::lit(2.0);
    let s_lat = ((lat2 - lat1) / two).sin();
    let s_lon = ((lon2 - lon1) / two).sin();
    let h = s_lat * s_lat + lat1.cos() * lat2.cos() * s_lon * s_lon;
    let h = h.min(T::one()).max(T::zero());
    two * T::lit(EARTH_RADIUS_KM) * h.sqrt().asin()
}

/// `F_ij = 1` when `i` and `j` are in the same sector, else 0.
pub fn sector_matrix<T: Scalar>(labels: Vec<String>, sectors: &[Sector]) -> DyadMatrix<T> {
    DyadMatrix::from_upper_fn(labels, DiagonalConvention::Unit, |i, j| {
        if sectors[i] == sectors[j] {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// Map pairwise differences `k_ij` to `(max k - k_ij) / (max k - min k)`, with
/// bounds taken over pairs `i < j`. The closest pair gets 1 and the farthest 0.
/// Returns `(matrix, degenerate)`; when every `k_ij` is equal the formula is
/// 0/0 and the matrix is all ones.
pub fn normalized_inverse_distance<T, F>(labels: Vec<String>, mut k: F) -> (DyadMatrix<T>, bool)
where
    T: Scalar,
    F: FnMut(usize, usize) -> T,
{
    let n = labels.len();
    let mut raw = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            raw.push(k(i, j));
        }
    }
    let (lo, hi) = raw
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let degenerate = raw.is_empty() || !(hi > lo);
    let mut it = raw.into_iter();
    let m = DyadMatrix::from_upper_fn(labels, DiagonalConvention::Unit, |_, _| {
        let v = it.next().expect("one value per pair");
        if degenerate {
            T::one()
        } else {
            (hi - v) / (hi - lo)
        }
    });
    (m, degenerate)
}

/// [`normalized_inverse_distance`] with `k_ij = |v_i - v_j|`.
pub fn normalized_inverse_diff<T: Scalar>(labels: Vec<String>, values: &[T]) -> Result<(DyadMatrix<T>, bool)> {
    if labels.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: values.len(),
        });
    }
    Ok(normalized_inverse_distance(labels, |i, j| (values[i] - values[j]).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ControlKind {
    /// Same sector.
    F,
    /// Mean log price.
    T,
    /// Board size.
    B,
    /// Fraction of financial experts.
    E,
    /// Geographic distance.
    G,
}

impl ControlKind {
    pub const ALL: [ControlKind; 5] = [ControlKind::F, ControlKind::T, ControlKind::B, ControlKind::E, ControlKind::G];

    pub fn name(self) -> &'static str {
        match self {
            ControlKind::F => "F",
            ControlKind::T => "T",
            ControlKind::B => "B",
            ControlKind::E => "E",
            ControlKind::G => "G",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum ControlStatus {
    Available,
    /// No variation across dyads; kept as all ones but left out of partial Mantel.
    Degenerate,
    Unavailable(String),
}

#[derive(Debug, Clone)]
pub struct Control<T> {
    pub kind: ControlKind,
    pub status: ControlStatus,
    pub matrix: Option<DyadMatrix<T>>,
}

/// Per-node attributes the controls are built from, aligned with `labels`.
#[derive(Debug, Clone)]
pub struct NodeAttributes<T> {
    pub labels: Vec<String>,
    pub sectors: Vec<Sector>,
    pub mean_log_price: Vec<T>,
    pub board_size: Vec<T>,
    pub expert_fraction: Vec<T>,
    pub locations: Vec<Option<GeoPoint>>,
}

impl<T: Scalar> NodeAttributes<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, nodes: &[usize]) -> NodeAttributes<T> {
        NodeAttributes {
            labels: nodes.iter().map(|&i| self.labels[i].clone()).collect(),
            sectors: nodes.iter().map(|&i| self.sectors[i].clone()).collect(),
            mean_log_price: nodes.iter().map(|&i| self.mean_log_price[i]).collect(),
            board_size: nodes.iter().map(|&i| self.board_size[i]).collect(),
            expert_fraction: nodes.iter().map(|&i| self.expert_fraction[i]).collect(),
            locations: nodes.iter().map(|&i| self.locations[i]).collect(),
        }
    }

    fn check(&self) -> Result<()> {
        let n = self.labels.len();
        for len in [
            self.sectors.len(),
            self.mean_log_price.len(),
            self.board_size.len(),
            self.expert_fraction.len(),
            self.locations.len(),
        ] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        Ok(())
    }
}

/// The five control matrices over one node set.
#[derive(Debug, Clone)]
pub struct ControlSet<T> {
    pub controls: Vec<Control<T>>,
}

fn status_of<T: Scalar>(m: &DyadMatrix<T>, degenerate: bool) -> ControlStatus {
    let v = m.upper();
    let constant = v.values().windows(2).all(|w| w[0] == w[1]);
    if degenerate || constant {
        ControlStatus::Degenerate
    } else {
        ControlStatus::Available
    }
}

/// Build F, T, B, E and G. Normalization bounds come from the given node set.
/// G is unavailable if any node lacks coordinates.
pub fn build_controls<T: Scalar>(attrs: &NodeAttributes<T>) -> Result<ControlSet<T>> {
    attrs.check()?;
    let labels = attrs.labels.clone();
    let mut controls = Vec::with_capacity(5);

    let f = sector_matrix(labels.clone(), &attrs.sectors);
    controls.push(Control {
        kind: ControlKind::F,
        status: status_of(&f, false),
        matrix: Some(f),
    });
    for (kind, values) in [
        (ControlKind::T, &attrs.mean_log_price),
        (ControlKind::B, &attrs.board_size),
        (ControlKind::E, &attrs.expert_fraction),
    ] {
        let (m, degenerate) = normalized_inverse_diff(labels.clone(), values)?;
        controls.push(Control {
            kind,
            status: status_of(&m, degenerate),
            matrix: Some(m),
        });
    }
    let located: Option<Vec<GeoPoint>> = attrs.locations.iter().copied().collect();
    match located {
        Some(points) => {
            let (g, degenerate) =
                normalized_inverse_distance(labels, |i, j| geo_distance::<T>(points[i], points[j]));
            controls.push(Control {
                kind: ControlKind::G,
                status: status_of(&g, degenerate),
                matrix: Some(g),
            });
        }
        None => {
            let missing = attrs.locations.iter().filter(|l| l.is_none()).count();
            log::warn!("{missing} corporations lack coordinates; geographic control dropped");
            controls.push(Control {
                kind: ControlKind::G,
                status: ControlStatus::Unavailable(format!("{missing} corporations lack coordinates")),
                matrix: None,
            });
        }
    }
    Ok(ControlSet { controls })
}

impl<T: Scalar> ControlSet<T> {
    pub fn get(&self, kind: ControlKind) -> Option<&Control<T>> {
        self.controls.iter().find(|c| c.kind == kind)
    }

    /// Matrices with variation, in F, T, B, E, G order.
    pub fn usable(&self) -> Vec<(ControlKind, &DyadMatrix<T>)> {
        self.controls
            .iter()
            .filter(|c| c.status == ControlStatus::Available)
            .filter_map(|c| c.matrix.as_ref().map(|m| (c.kind, m)))
            .collect()
    }

    /// Principal submatrices on `nodes`, keeping the original normalization.
    /// Status is re-evaluated because a subset can lose all variation.
    pub fn restrict(&self, nodes: &[usize]) -> ControlSet<T> {
        let controls = self
            .controls
            .iter()
            .map(|c| match (&c.status, &c.matrix) {
                (ControlStatus::Unavailable(_), _) | (_, None) => c.clone(),
                (status, Some(m)) => {
                    let sub = m.submatrix(nodes);
                    let status = match status {
                        ControlStatus::Degenerate => ControlStatus::Degenerate,
                        _ => status_of(&sub, false),
                    };
                    Control {
                        kind: c.kind,
                        status,
                        matrix: Some(sub),
                    }
                }
            })
            .collect();
        ControlSet { controls }
    }

    pub fn statuses(&self) -> Vec<(ControlKind, ControlStatus)> {
        self.controls.iter().map(|c| (c.kind, c.status.clone())).collect()
    }
}
