//! Exact optimal transport dataset distance at desk scale.
//!
//! The ground cost between labeled points is
//! `|x - x'|^p + d_Y(y, y')^p`, where the label distance `d_Y` is itself a
//! Wasserstein distance between the two class-conditional feature
//! distributions (exact, or between their Gaussian fits).

use crate::baselines::exact::{exact_ot, CostMatrix};
use crate::baselines::gaussian::{bures_wasserstein, GaussianSummary};
use crate::dataset::{build_class_index, ClassView, Dataset};
use crate::error::{Error, Result};
use crate::numeric::root;
use crate::wasserstein1d::ground_cost;

/// How the label-to-label distance is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Exact `W_p` between empirical class-conditionals.
    Exact,
    /// Closed-form `W_2` between Gaussian fits.
    Gaussian,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_order(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(p))
    }
}

/// `W_p` between two classes with Euclidean ground metric.
pub fn label_distance_exact(a: &ClassView<'_>, b: &ClassView<'_>, p: f64) -> Result<f64> {
    check_order(p)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let pa: Vec<&[f64]> = a.points().collect();
    let pb: Vec<&[f64]> = b.points().collect();
    let cost = CostMatrix::from_fn(pa.len(), pb.len(), |i, j| ground_cost(euclidean(pa[i], pb[j]), p))?;
    let alpha = vec![1.0 / pa.len() as f64; pa.len()];
    let beta = vec![1.0 / pb.len() as f64; pb.len()];
    Ok(root(exact_ot(&cost, &alpha, &beta)?.value, p))
}

/// OTDD between two labeled datasets; returns the `p`-th root of the
/// optimal transport cost.
pub fn otdd(d1: &Dataset, d2: &Dataset, p: f64, mode: LabelMode) -> Result<f64> {
    check_order(p)?;
    if d1.dim() != d2.dim() {
        return Err(Error::DimensionMismatch {
            expected: d1.dim(),
            got: d2.dim(),
        });
    }
    let (n, m) = (d1.len(), d2.len());
    if n.saturating_mul(m) > crate::baselines::exact::MAX_CELLS {
        return Err(Error::ScaleExceeded { n, m });
    }
    let idx1 = build_class_index(d1);
    let idx2 = build_class_index(d2);
    let (c1, c2) = (idx1.num_classes(), idx2.num_classes());

    // d_Y^p for every class pair
    let mut label_cost = vec![0.0; c1 * c2];
    match mode {
        LabelMode::Exact => {
            for s in 0..c1 {
                for t in 0..c2 {
                    let dy = label_distance_exact(&idx1.view(d1, s), &idx2.view(d2, t), p)?;
                    label_cost[s * c2 + t] = ground_cost(dy, p);
                }
            }
        }
        LabelMode::Gaussian => {
            let g1 = idx1
                .views(d1)
                .map(|v| GaussianSummary::fit(&v))
                .collect::<Result<Vec<_>>>()?;
            let g2 = idx2
                .views(d2)
                .map(|v| GaussianSummary::fit(&v))
                .collect::<Result<Vec<_>>>()?;
            for s in 0..c1 {
                for t in 0..c2 {
                    label_cost[s * c2 + t] = ground_cost(bures_wasserstein(&g1[s], &g2[t])?, p);
                }
            }
        }
    }

    let cost = CostMatrix::from_fn(n, m, |i, j| {
        let feature = ground_cost(euclidean(d1.row(i), d2.row(j)), p);
        feature + label_cost[idx1.slot_of_row(i) * c2 + idx2.slot_of_row(j)]
    })?;
    let alpha = vec![1.0 / n as f64; n];
    let beta = vec![1.0 / m as f64; m];
    Ok(root(exact_ot(&cost, &alpha, &beta)?.value, p))
}

/// Exact OT on the feature-only cost `|x - x'|^p` (no label term), as a
/// `p`-th root.
pub fn feature_wasserstein(d1: &Dataset, d2: &Dataset, p: f64) -> Result<f64> {
    check_order(p)?;
    let (n, m) = (d1.len(), d2.len());
    let cost = CostMatrix::from_fn(n, m, |i, j| ground_cost(euclidean(d1.row(i), d2.row(j)), p))?;
    Ok(root(
        exact_ot(&cost, &vec![1.0 / n as f64; n], &vec![1.0 / m as f64; m])?.value,
        p,
    ))
}
