//! Synthetic Gaussian mixtures and the random-split correlation harness.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::baselines::{otdd, sliced_wasserstein, LabelMode};
use crate::dataset::{build_class_index, Dataset};
use crate::engine::{sotdd, SotddConfig};
use crate::error::{Error, Result};
use crate::sampling::{derive_seed, SeedSchedule};
use crate::stats::{pearson, spearman, PairedSeries};

/// Isotropic Gaussian mixture with one component per class.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    /// One mean per class, each of length `dim`.
    pub means: Vec<Vec<f64>>,
    pub noise: f64,
}

impl GaussianMixture {
    /// Class means drawn i.i.d. `N(0, mean_scale^2 I)`.
    pub fn random(classes: usize, dim: usize, mean_scale: f64, noise: f64, seed: u64) -> Result<Self> {
        if classes == 0 || dim == 0 {
            return Err(Error::InvalidConfig(
                "mixture needs at least one class and dimension".into(),
            ));
        }
        let mut rng = SeedSchedule::new(seed).stream(0);
        let means = (0..classes)
            .map(|_| {
                (0..dim)
                    .map(|_| mean_scale * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        Ok(Self { means, noise })
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn num_classes(&self) -> usize {
        self.means.len()
    }

    /// `counts[c]` points of class `c`, labels `0..classes`, grouped by class.
    pub fn sample<R: Rng + ?Sized>(&self, counts: &[usize], name: &str, rng: &mut R) -> Result<Dataset> {
        if counts.len() != self.means.len() {
            return Err(Error::LengthMismatch {
                expected: self.means.len(),
                got: counts.len(),
            });
        }
        let d = self.dim();
        let total: usize = counts.iter().sum();
        let mut features = Vec::with_capacity(total * d);
        let mut labels = Vec::with_capacity(total);
        for (c, (&count, mean)) in counts.iter().zip(&self.means).enumerate() {
            for _ in 0..count {
                features.extend(
                    mean.iter()
                        .map(|m| m + self.noise * rng.sample::<f64, _>(StandardNormal)),
                );
                labels.push(c as i64);
            }
        }
        Dataset::new(features, labels, d, name)
    }
}

/// Split `total` into integer parts proportional to `weights`, each at most
/// `capacity[i]` (largest remainder, overflow moved to classes with room).
fn allocate(total: usize, weights: &[f64], capacity: &[usize]) -> Result<Vec<usize>> {
    if capacity.iter().sum::<usize>() < total {
        return Err(Error::InvalidConfig(format!(
            "split of {total} points exceeds the {} available",
            capacity.iter().sum::<usize>()
        )));
    }
    let wsum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / wsum * total as f64).collect();
    let mut counts: Vec<usize> = exact
        .iter()
        .zip(capacity)
        .map(|(e, &c)| (e.floor() as usize).min(c))
        .collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let mut assigned: usize = counts.iter().sum();
    while assigned < total {
        let before = assigned;
        for &i in &order {
            if assigned == total {
                break;
            }
            if counts[i] < capacity[i] {
                counts[i] += 1;
                assigned += 1;
            }
        }
        debug_assert!(assigned > before);
    }
    Ok(counts)
}

/// Flat Dirichlet(1) weights.
fn dirichlet_flat<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// `pairs` pairs of disjoint subsets of `pool`, `side` rows each. Each side
/// draws its own class proportions from a flat Dirichlet, so pairs range
/// from near-identical to strongly shifted label mixes.
pub fn random_split_pairs(pool: &Dataset, side: usize, pairs: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
    if side == 0 || pairs == 0 {
        return Err(Error::InvalidConfig("split size and pair count must be >= 1".into()));
    }
    if 2 * side > pool.len() {
        return Err(Error::InvalidConfig(format!(
            "two disjoint splits of {side} need {} rows, pool has {}",
            2 * side,
            pool.len()
        )));
    }
    let index = build_class_index(pool);
    let classes = index.num_classes();
    (0..pairs)
        .map(|t| {
            let mut rng = SeedSchedule::new(seed).stream(t);
            let mut members: Vec<Vec<usize>> = index.members().to_vec();
            for m in &mut members {
                m.shuffle(&mut rng);
            }
            let cap: Vec<usize> = members.iter().map(Vec::len).collect();
            let a_counts = allocate(side, &dirichlet_flat(classes, &mut rng), &cap)?;
            let left: Vec<usize> = cap.iter().zip(&a_counts).map(|(c, a)| c - a).collect();
            let b_counts = allocate(side, &dirichlet_flat(classes, &mut rng), &left)?;
            let mut rows_a = Vec::with_capacity(side);
            let mut rows_b = Vec::with_capacity(side);
            for (m, (&a, &b)) in members.iter().zip(a_counts.iter().zip(&b_counts)) {
                rows_a.extend_from_slice(&m[..a]);
                rows_b.extend_from_slice(&m[a..a + b]);
            }
            rows_a.sort_unstable();
            rows_b.sort_unstable();
            Ok((
                pool.select(&rows_a, format!("{}-split{t}a", pool.name()))?,
                pool.select(&rows_b, format!("{}-split{t}b", pool.name()))?,
            ))
        })
        .collect()
}

/// Reference distance for the correlation harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Baseline {
    #[serde(rename = "exact-otdd")]
    ExactOtdd,
    #[serde(rename = "gaussian-otdd")]
    GaussianOtdd,
    #[serde(rename = "sw")]
    SlicedWasserstein,
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ExactOtdd => "exact-otdd",
            Self::GaussianOtdd => "gaussian-otdd",
            Self::SlicedWasserstein => "sw",
        }
    }
}

impl std::str::FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-otdd" => Ok(Self::ExactOtdd),
            "gaussian-otdd" => Ok(Self::GaussianOtdd),
            "sw" => Ok(Self::SlicedWasserstein),
            other => Err(Error::InvalidConfig(format!("unknown baseline {other:?}"))),
        }
    }
}

/// Outcome of one correlation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelateSummary {
    pub baseline: Baseline,
    pub pairs: usize,
    pub side: usize,
    pub sotdd: Vec<f64>,
    pub reference: Vec<f64>,
    pub pearson: f64,
    pub spearman: f64,
    pub sotdd_seconds: f64,
    pub reference_seconds: f64,
}

/// Distance of one pair under `baseline`, with the order and seed of `config`.
pub fn baseline_distance(a: &Dataset, b: &Dataset, baseline: Baseline, config: &SotddConfig) -> Result<f64> {
    match baseline {
        Baseline::ExactOtdd => otdd(a, b, config.p, LabelMode::Exact),
        Baseline::GaussianOtdd => otdd(a, b, config.p, LabelMode::Gaussian),
        Baseline::SlicedWasserstein => Ok(sliced_wasserstein(
            a.features(),
            b.features(),
            a.dim(),
            config.num_projections,
            config.p,
            config.seed,
            config.workers,
        )?
        .value),
    }
}

/// Correlate s-OTDD against `baseline` over random split pairs of `pool`.
/// Every pair shares the projection seed of `config`; the splits themselves
/// are drawn from `derive_seed(config.seed, 1)`.
pub fn correlate(
    pool: &Dataset,
    side: usize,
    pairs: usize,
    baseline: Baseline,
    config: &SotddConfig,
) -> Result<CorrelateSummary> {
    let splits = random_split_pairs(pool, side, pairs, derive_seed(config.seed, 1))?;
    let mut ours = Vec::with_capacity(pairs);
    let mut reference = Vec::with_capacity(pairs);
    let (mut t_ours, mut t_ref) = (0.0, 0.0);
    for (a, b) in &splits {
        let started = Instant::now();
        ours.push(sotdd(a, b, config)?.value);
        t_ours += started.elapsed().as_secs_f64();
        let started = Instant::now();
        reference.push(baseline_distance(a, b, baseline, config)?);
        t_ref += started.elapsed().as_secs_f64();
    }
    let series = PairedSeries::new(ours.clone(), reference.clone())?;
    Ok(CorrelateSummary {
        baseline,
        pairs,
        side,
        pearson: pearson(&series)?,
        spearman: spearman(&series)?,
        sotdd: ours,
        reference,
        sotdd_seconds: t_ours,
        reference_seconds: t_ref,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_shape() {
        let g = GaussianMixture::random(3, 4, 2.0, 1.0, 5).unwrap();
        let mut rng = SeedSchedule::new(1).stream(0);
        let ds = g.sample(&[2, 0, 5], "g", &mut rng).unwrap();
        assert_eq!((ds.len(), ds.dim()), (7, 4));
        assert_eq!(ds.labels(), &[0, 0, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn allocation_respects_capacity() {
        assert_eq!(allocate(10, &[0.5, 0.5], &[10, 10]).unwrap(), vec![5, 5]);
        assert_eq!(allocate(10, &[0.9, 0.1], &[3, 10]).unwrap(), vec![3, 7]);
        assert_eq!(
            allocate(7, &[1.0, 1.0, 1.0], &[9, 9, 9]).unwrap().iter().sum::<usize>(),
            7
        );
        assert!(allocate(10, &[1.0], &[9]).is_err());
    }

    #[test]
    fn splits_are_disjoint_and_sized() {
        let g = GaussianMixture::random(4, 3, 3.0, 1.0, 2).unwrap();
        let mut rng = SeedSchedule::new(3).stream(0);
        let pool = g.sample(&[30; 4], "pool", &mut rng).unwrap();
        let pairs = random_split_pairs(&pool, 50, 6, 11).unwrap();
        assert_eq!(pairs.len(), 6);
        for (a, b) in &pairs {
            assert_eq!((a.len(), b.len()), (50, 50));
            for ra in a.rows() {
                assert!(b.rows().all(|rb| rb != ra));
            }
        }
        assert!(random_split_pairs(&pool, 61, 1, 0).is_err());
        assert_eq!(pairs, random_split_pairs(&pool, 50, 6, 11).unwrap());
    }

    #[test]
    fn small_correlation_run() {
        let g = GaussianMixture::random(3, 4, 3.0, 1.0, 7).unwrap();
        let mut rng = SeedSchedule::new(8).stream(0);
        let pool = g.sample(&[40; 3], "pool", &mut rng).unwrap();
        let config = SotddConfig {
            num_projections: 200,
            seed: 4,
            ..Default::default()
        };
        for baseline in [Baseline::ExactOtdd, Baseline::GaussianOtdd, Baseline::SlicedWasserstein] {
            let s = correlate(&pool, 30, 5, baseline, &config).unwrap();
            assert_eq!((s.sotdd.len(), s.reference.len()), (5, 5));
            assert!((-1.0..=1.0).contains(&s.pearson) && (-1.0..=1.0).contains(&s.spearman));
        }
        assert_eq!("sw".parse::<Baseline>().unwrap(), Baseline::SlicedWasserstein);
        assert!("nope".parse::<Baseline>().is_err());
    }
}
