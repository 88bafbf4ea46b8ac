//! Monte Carlo estimation of the sliced optimal transport dataset distance.
//!
//! For each projection index `l` a parameter tuple is drawn from stream `l`
//! of the seed schedule. Each dataset is mapped to one scalar per row by the
//! data-point projection, the values are sorted, and `W_p^p` between the two
//! sorted arrays is taken in closed form. The estimate averages over `l`.
//!
//! The per-dataset half of this work (projection and sorting) can be done in
//! isolation and stored as a [`ProjectionSketch`]; merging two sketches that
//! were produced under the same configuration gives bit-for-bit the same
//! estimate as [`sotdd`].

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{build_class_index, pooled_moments, ClassIndex, Dataset};
use crate::error::{Error, Result};
use crate::numeric::root;
use crate::projection::{combine, ProjectedClassMoments, ProjectorKind};
use crate::sampling::{derive_seed, sample_projection_params, MomentOrderLaw, ProjectionParams, SeedSchedule};
use crate::wasserstein1d::uniform_merge;

/// Feature projector family, independent of the feature dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectorChoice {
    Linear,
    Convolution {
        height: usize,
        width: usize,
        channels: usize,
    },
}

impl ProjectorChoice {
    /// Resolve against a feature dimension.
    pub fn kind(&self, dim: usize) -> Result<ProjectorKind> {
        match *self {
            Self::Linear => Ok(ProjectorKind::Linear { dim }),
            Self::Convolution {
                height,
                width,
                channels,
            } => {
                if height * width * channels != dim {
                    return Err(Error::ShapeMismatch(format!(
                        "feature dimension {dim} is not {height}x{width}x{channels}"
                    )));
                }
                Ok(ProjectorKind::Convolution {
                    height,
                    width,
                    channels,
                })
            }
        }
    }
}

/// Estimator configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SotddConfig {
    /// Wasserstein order, `>= 1`.
    pub p: f64,
    pub num_projections: usize,
    /// Number of label moments `k`.
    pub num_moments: usize,
    pub moment_law: MomentOrderLaw,
    pub projector: ProjectorChoice,
    /// Reuse the feature projection inside the label moments.
    pub tie_phi: bool,
    /// Standardize both datasets with pooled per-coordinate statistics.
    pub standardize: bool,
    pub seed: u64,
    /// Drop projections whose moments overflow instead of failing.
    pub skip_overflow: bool,
    /// Keep only this many equally spaced quantiles per projection (lossy).
    pub quantiles: Option<usize>,
    /// Replace every sampled `psi` with this vector (diagnostic).
    pub psi_override: Option<Vec<f64>>,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl Default for SotddConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            num_projections: 1000,
            num_moments: 5,
            moment_law: MomentOrderLaw::poisson_default(5),
            projector: ProjectorChoice::Linear,
            tie_phi: true,
            standardize: false,
            seed: 0,
            skip_overflow: false,
            quantiles: None,
            psi_override: None,
            workers: 0,
        }
    }
}

impl SotddConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::InvalidOrder(self.p));
        }
        if self.num_projections == 0 {
            return Err(Error::InvalidConfig("number of projections must be >= 1".into()));
        }
        if self.num_moments == 0 {
            return Err(Error::InvalidConfig("number of moments must be >= 1".into()));
        }
        self.moment_law.validate(self.num_moments)?;
        if let Some(psi) = &self.psi_override {
            if psi.len() != self.num_moments + 1 {
                return Err(Error::LengthMismatch {
                    expected: self.num_moments + 1,
                    got: psi.len(),
                });
            }
        }
        if self.quantiles == Some(0) {
            return Err(Error::InvalidConfig("quantile count must be >= 1".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical little-endian encoding of every setting
    /// that determines the projected values for feature dimension `dim`:
    ///
    /// ```text
    /// "sotdd-config-v1"
    /// u64 dim, u64 L, u64 k
    /// u8 law (0 uniform: u64 lambda_max | 1 poisson: u64 count, f64 rates...)
    /// u8 projector (0 linear | 1 conv: u64 height, u64 width, u64 channels)
    /// u8 tie_phi, u8 standardize, u64 seed, u8 skip_overflow
    /// u64 quantiles (0 = exact)
    /// u8 psi override present, then u64 len, f64 values...
    /// ```
    ///
    /// `p` and the worker count are excluded: they do not affect sketches.
    pub fn fingerprint(&self, dim: usize) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"sotdd-config-v1");
        h.update((dim as u64).to_le_bytes());
        h.update((self.num_projections as u64).to_le_bytes());
        h.update((self.num_moments as u64).to_le_bytes());
        match &self.moment_law {
            MomentOrderLaw::UniformFinite(max) => {
                h.update([0u8]);
                h.update((*max as u64).to_le_bytes());
            }
            MomentOrderLaw::TruncatedPoissonProduct(rates) => {
                h.update([1u8]);
                h.update((rates.len() as u64).to_le_bytes());
                for r in rates {
                    h.update(r.to_le_bytes());
                }
            }
        }
        match self.projector {
            ProjectorChoice::Linear => h.update([0u8]),
            ProjectorChoice::Convolution {
                height,
                width,
                channels,
            } => {
                h.update([1u8]);
                for v in [height, width, channels] {
                    h.update((v as u64).to_le_bytes());
                }
            }
        }
        h.update([self.tie_phi as u8, self.standardize as u8]);
        h.update(self.seed.to_le_bytes());
        h.update([self.skip_overflow as u8]);
        h.update((self.quantiles.unwrap_or(0) as u64).to_le_bytes());
        match &self.psi_override {
            None => h.update([0u8]),
            Some(psi) => {
                h.update([1u8]);
                h.update((psi.len() as u64).to_le_bytes());
                for v in psi {
                    h.update(v.to_le_bytes());
                }
            }
        }
        h.finalize().into()
    }

    fn params(&self, kind: &ProjectorKind, schedule: &SeedSchedule, l: usize) -> Result<ProjectionParams> {
        let mut params = sample_projection_params(
            kind,
            self.num_moments,
            &self.moment_law,
            self.tie_phi,
            &mut schedule.stream(l),
        )?;
        if let Some(psi) = &self.psi_override {
            params.psi.clone_from(psi);
        }
        Ok(params)
    }
}

/// Per-projection sorted projected values of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSketch {
    pub fingerprint: [u8; 32],
    pub name: String,
    /// One ascending block per projection; `None` marks a projection dropped
    /// after a moment overflow.
    pub blocks: Vec<Option<Vec<f64>>>,
}

impl ProjectionSketch {
    pub fn num_projections(&self) -> usize {
        self.blocks.len()
    }

    /// Length of every retained block.
    pub fn block_len(&self) -> Option<usize> {
        self.blocks.iter().flatten().map(Vec::len).next()
    }
}

/// Result of one estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    /// `mean_pp^(1/p)`.
    pub value: f64,
    /// Mean of the per-projection `W_p^p`.
    pub mean_pp: f64,
    /// Sample standard deviation of the per-projection `W_p^p` over `sqrt(L)`.
    pub stderr_pp: f64,
    /// Projections that contributed.
    pub num_projections: usize,
    /// Projections dropped after a moment overflow.
    pub dropped: usize,
    pub wall_seconds: f64,
}

/// Sorted data-point projections of one dataset under one parameter tuple.
fn project_sorted(
    dataset: &Dataset,
    index: &ClassIndex,
    params: &ProjectionParams,
    quantiles: Option<usize>,
) -> Result<Vec<f64>> {
    let mut fp = Vec::with_capacity(dataset.len());
    params.theta.project_rows(dataset.features(), &mut fp)?;
    let moments = match &params.phi {
        None => ProjectedClassMoments::compute(index, &fp, &params.lambdas)?,
        Some(phi) => {
            let mut label_fp = Vec::with_capacity(dataset.len());
            phi.project_rows(dataset.features(), &mut label_fp)?;
            ProjectedClassMoments::compute(index, &label_fp, &params.lambdas)?
        }
    };
    for (row, v) in fp.iter_mut().enumerate() {
        *v = combine(&params.psi, *v, moments.class(index.slot_of_row(row)));
    }
    if fp.iter().any(|v| !v.is_finite()) {
        return Err(Error::MomentOverflow {
            projection: None,
            class: None,
            lambda: params.lambdas.iter().copied().max().unwrap_or(0),
        });
    }
    fp.sort_unstable_by(f64::total_cmp);
    Ok(match quantiles {
        Some(q) if q < fp.len() => quantile_grid(&fp, q),
        _ => fp,
    })
}

/// `q` equally spaced quantiles (midpoint rule) of a sorted array.
fn quantile_grid(sorted: &[f64], q: usize) -> Vec<f64> {
    let n = sorted.len();
    (0..q).map(|i| sorted[((2 * i + 1) * n) / (2 * q)]).collect()
}

fn tag_projection(e: Error, l: usize) -> Error {
    match e {
        Error::MomentOverflow { class, lambda, .. } => Error::MomentOverflow {
            projection: Some(l),
            class,
            lambda,
        },
        other => other,
    }
}

/// Run `f` on a pool with `workers` threads (0: the global pool).
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Project one dataset under every parameter tuple of `config`.
///
/// Standardization is not applied here; callers that want it pass an
/// already standardized dataset.
pub fn project_dataset(dataset: &Dataset, index: &ClassIndex, config: &SotddConfig) -> Result<ProjectionSketch> {
    config.validate()?;
    let kind = config.projector.kind(dataset.dim())?;
    let schedule = SeedSchedule::new(config.seed);
    let blocks = with_workers(config.workers, || {
        (0..config.num_projections)
            .into_par_iter()
            .map(|l| {
                let params = config.params(&kind, &schedule, l)?;
                match project_sorted(dataset, index, &params, config.quantiles) {
                    Ok(v) => Ok(Some(v)),
                    Err(Error::MomentOverflow { .. }) if config.skip_overflow => Ok(None),
                    Err(e) => Err(tag_projection(e, l)),
                }
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(ProjectionSketch {
        fingerprint: config.fingerprint(dataset.dim()),
        name: dataset.name().to_string(),
        blocks,
    })
}

pub(crate) fn aggregate(per_projection: &[Option<f64>], p: f64, started: Instant) -> Result<DistanceEstimate> {
    let used: Vec<f64> = per_projection.iter().flatten().copied().collect();
    if used.is_empty() {
        return Err(Error::InvalidConfig("every projection overflowed".into()));
    }
    let count = used.len() as f64;
    let mean_pp = used.iter().sum::<f64>() / count;
    let stderr_pp = if used.len() > 1 {
        let var = used.iter().map(|w| (w - mean_pp) * (w - mean_pp)).sum::<f64>() / (count - 1.0);
        (var / count).sqrt()
    } else {
        0.0
    };
    Ok(DistanceEstimate {
        value: root(mean_pp, p),
        mean_pp,
        stderr_pp,
        num_projections: used.len(),
        dropped: per_projection.len() - used.len(),
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Estimate from two sketches made under the same configuration.
pub fn sotdd_from_sketches(s1: &ProjectionSketch, s2: &ProjectionSketch, p: f64) -> Result<DistanceEstimate> {
    let started = Instant::now();
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidOrder(p));
    }
    if s1.fingerprint != s2.fingerprint {
        return Err(Error::FingerprintMismatch);
    }
    if s1.blocks.len() != s2.blocks.len() {
        return Err(Error::LengthMismatch {
            expected: s1.blocks.len(),
            got: s2.blocks.len(),
        });
    }
    let per: Vec<Option<f64>> = s1
        .blocks
        .iter()
        .zip(&s2.blocks)
        .map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) if !a.is_empty() && !b.is_empty() => Some(uniform_merge(a, b, p)),
            _ => None,
        })
        .collect();
    aggregate(&per, p, started)
}

fn check_pair(d1: &Dataset, d2: &Dataset) -> Result<()> {
    if d1.dim() != d2.dim() {
        return Err(Error::DimensionMismatch {
            expected: d1.dim(),
            got: d2.dim(),
        });
    }
    Ok(())
}

/// Per-projection `W_p^p` for projections `0..config.num_projections`;
/// `None` where a projection was dropped.
pub fn per_projection_pp(d1: &Dataset, d2: &Dataset, config: &SotddConfig) -> Result<Vec<Option<f64>>> {
    config.validate()?;
    check_pair(d1, d2)?;
    let standardized;
    let (a, b) = if config.standardize {
        let (mean, scale) = pooled_moments(d1, d2)?;
        standardized = (d1.standardized(&mean, &scale)?, d2.standardized(&mean, &scale)?);
        (&standardized.0, &standardized.1)
    } else {
        (d1, d2)
    };
    let (ia, ib) = (build_class_index(a), build_class_index(b));
    let kind = config.projector.kind(a.dim())?;
    let schedule = SeedSchedule::new(config.seed);
    with_workers(config.workers, || {
        (0..config.num_projections)
            .into_par_iter()
            .map(|l| {
                let params = config.params(&kind, &schedule, l)?;
                let pa = project_sorted(a, &ia, &params, config.quantiles);
                let pb = project_sorted(b, &ib, &params, config.quantiles);
                match (pa, pb) {
                    (Ok(x), Ok(y)) => Ok(Some(uniform_merge(&x, &y, config.p))),
                    (Err(Error::MomentOverflow { .. }), _) | (_, Err(Error::MomentOverflow { .. }))
                        if config.skip_overflow =>
                    {
                        Ok(None)
                    }
                    (Err(e), _) | (_, Err(e)) => Err(tag_projection(e, l)),
                }
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// Sliced optimal transport dataset distance between two labeled datasets.
pub fn sotdd(d1: &Dataset, d2: &Dataset, config: &SotddConfig) -> Result<DistanceEstimate> {
    let started = Instant::now();
    let per = per_projection_pp(d1, d2, config)?;
    aggregate(&per, config.p, started)
}

/// One row of an error-decay table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub num_projections: usize,
    /// Mean over repeats of `|estimate(L) - reference|` on the `W_p^p` scale.
    pub mean_abs_error: f64,
}

/// Mean absolute Monte Carlo error of `mean_pp` for each `L` in `grid`.
///
/// Repeat `r` uses master seed `derive_seed(seed, r + 1)` and reads its
/// estimates for every grid value off the prefixes of one run at the
/// largest `L`. The reference pools `repeats` further held-out runs at the
/// largest `L` (seeds `derive_seed(seed, repeats + 1 + r)`), i.e. a single
/// estimate with `repeats * max(grid)` projections.
pub fn error_decay_profile(
    d1: &Dataset,
    d2: &Dataset,
    base: &SotddConfig,
    grid: &[usize],
    repeats: usize,
) -> Result<Vec<DecayPoint>> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] == 0 {
        return Err(Error::InvalidConfig(
            "L grid must be positive and strictly ascending".into(),
        ));
    }
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be >= 1".into()));
    }
    let max_l = *grid.last().unwrap();
    let run = |tag: u64| -> Result<Vec<Option<f64>>> {
        let cfg = SotddConfig {
            num_projections: max_l,
            seed: derive_seed(base.seed, tag),
            ..base.clone()
        };
        per_projection_pp(d1, d2, &cfg)
    };
    let mean_of = |vals: &[Option<f64>]| -> Result<f64> {
        let used: Vec<f64> = vals.iter().flatten().copied().collect();
        if used.is_empty() {
            return Err(Error::InvalidConfig("every projection overflowed".into()));
        }
        Ok(used.iter().sum::<f64>() / used.len() as f64)
    };

    let mut pooled = Vec::with_capacity(repeats * max_l);
    for r in 0..repeats {
        pooled.extend(run((repeats + 1 + r) as u64)?);
    }
    let reference = mean_of(&pooled)?;

    let mut errors = vec![0.0; grid.len()];
    for r in 0..repeats {
        let vals = run(r as u64 + 1)?;
        for (e, &l) in errors.iter_mut().zip(grid) {
            *e += (mean_of(&vals[..l])? - reference).abs();
        }
    }
    Ok(grid
        .iter()
        .zip(errors)
        .map(|(&l, e)| DecayPoint {
            num_projections: l,
            mean_abs_error: e / repeats as f64,
        })
        .collect())
}
