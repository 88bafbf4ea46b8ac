//! Plain sliced Wasserstein distance between feature clouds.

use std::time::Instant;

use rayon::prelude::*;

use crate::engine::{aggregate, with_workers, DistanceEstimate};
use crate::error::{Error, Result};
use crate::sampling::{sample_unit_sphere, SeedSchedule};
use crate::wasserstein1d::uniform_merge;

fn project_sorted(features: &[f64], dim: usize, theta: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = features
        .chunks_exact(dim)
        .map(|x| x.iter().zip(theta).map(|(a, b)| a * b).sum())
        .collect();
    out.sort_unstable_by(f64::total_cmp);
    out
}

/// Monte Carlo sliced `W_p` over `num_projections` uniform directions.
///
/// Direction `l` is the first draw of stream `l` of `seed`, the same draw
/// that supplies the linear feature projector of the sliced dataset
/// distance, so both estimators see identical directions.
pub fn sliced_wasserstein(
    features1: &[f64],
    features2: &[f64],
    dim: usize,
    num_projections: usize,
    p: f64,
    seed: u64,
    workers: usize,
) -> Result<DistanceEstimate> {
    let started = Instant::now();
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidOrder(p));
    }
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    for f in [features1, features2] {
        if f.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if f.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: f.len() % dim,
            });
        }
    }
    if num_projections == 0 {
        return Err(Error::InvalidConfig("number of projections must be >= 1".into()));
    }
    let schedule = SeedSchedule::new(seed);
    let per = with_workers(workers, || {
        (0..num_projections)
            .into_par_iter()
            .map(|l| {
                let theta = sample_unit_sphere(dim, &mut schedule.stream(l))?;
                let a = project_sorted(features1, dim, &theta);
                let b = project_sorted(features2, dim, &theta);
                Ok(Some(uniform_merge(&a, &b, p)))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    aggregate(&per, p, started)
}
