//! Reproducible draws of projection parameters.
//!
//! Every projection index `l` gets its own ChaCha stream derived from a master
//! seed, so the `l`-th parameter tuple is the same no matter which worker
//! draws it or in which order projections are evaluated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::projection::{ConvProjector, FeatureProjector, ProjectorKind};

/// Random stream used for all parameter draws.
pub type Stream = ChaCha8Rng;

/// Law of the moment orders `lambda = (lambda_1, ..., lambda_k)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentOrderLaw {
    /// Each order uniform on `{1, ..., max}`.
    UniformFinite(u32),
    /// Coordinate `j` zero-truncated Poisson with rate `rates[j]`.
    TruncatedPoissonProduct(Vec<f64>),
}

impl MomentOrderLaw {
    /// Poisson rates `1, ..., k`.
    pub fn poisson_default(k: usize) -> Self {
        Self::TruncatedPoissonProduct((1..=k).map(|r| r as f64).collect())
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            Self::UniformFinite(0) => Err(Error::InvalidConfig("uniform moment law needs lambda_max >= 1".into())),
            Self::UniformFinite(_) => Ok(()),
            Self::TruncatedPoissonProduct(rates) => {
                if rates.len() != k {
                    return Err(Error::InvalidConfig(format!(
                        "{} Poisson rates given for k = {k} moments",
                        rates.len()
                    )));
                }
                match rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
                    Some(&r) => Err(Error::InvalidRate(r)),
                    None => Ok(()),
                }
            }
        }
    }
}

/// One draw `(psi, theta, lambda, phi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionParams {
    /// Mixing weights on the unit sphere in `R^{k+1}`.
    pub psi: Vec<f64>,
    /// Feature projection.
    pub theta: FeatureProjector,
    pub lambdas: Vec<u32>,
    /// Projection used inside the label moments; `None` means tied to `theta`.
    pub phi: Option<FeatureProjector>,
}

impl ProjectionParams {
    pub fn label_projector(&self) -> &FeatureProjector {
        self.phi.as_ref().unwrap_or(&self.theta)
    }
}

/// Derives one independent stream per projection index from a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSchedule {
    pub master: u64,
}

impl SeedSchedule {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn stream(&self, index: usize) -> Stream {
        let mut rng = Stream::seed_from_u64(self.master);
        rng.set_stream(index as u64);
        rng
    }
}

/// Mix a seed with a tag into a new, well-separated seed (splitmix64).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw from the unit sphere `S^{dim-1}` by normalizing Gaussians.
pub fn sample_unit_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // a zero (or denormal) Gaussian vector has probability ~0; redraw
        if norm > 1e-150 {
            v.iter_mut().for_each(|x| *x /= norm);
            return Ok(v);
        }
    }
}

/// Zero-truncated Poisson: Poisson(rate) conditioned on being >= 1.
pub fn sample_ztpoisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<u32> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidRate(rate));
    }
    let poisson = Poisson::new(rate).map_err(|_| Error::InvalidRate(rate))?;
    loop {
        let k: f64 = poisson.sample(rng);
        if k >= 1.0 {
            return Ok(k as u32);
        }
    }
}

fn sample_projector<R: Rng + ?Sized>(kind: &ProjectorKind, rng: &mut R) -> Result<FeatureProjector> {
    match *kind {
        ProjectorKind::Linear { dim } => Ok(FeatureProjector::Linear(sample_unit_sphere(dim, rng)?)),
        ProjectorKind::Convolution {
            height,
            width,
            channels,
        } => Ok(FeatureProjector::Convolution(ConvProjector::random(
            height, width, channels, rng,
        )?)),
    }
}

/// Draw one parameter tuple. Order within the stream: theta, lambdas, psi,
/// then phi when untied.
pub fn sample_projection_params<R: Rng + ?Sized>(
    kind: &ProjectorKind,
    k: usize,
    law: &MomentOrderLaw,
    tie_phi: bool,
    rng: &mut R,
) -> Result<ProjectionParams> {
    if k == 0 {
        return Err(Error::InvalidConfig("number of moments k must be >= 1".into()));
    }
    law.validate(k)?;
    let theta = sample_projector(kind, rng)?;
    let lambdas = match law {
        MomentOrderLaw::UniformFinite(max) => (0..k).map(|_| rng.random_range(1..=*max)).collect(),
        MomentOrderLaw::TruncatedPoissonProduct(rates) => rates
            .iter()
            .map(|&r| sample_ztpoisson(r, rng))
            .collect::<Result<Vec<_>>>()?,
    };
    let psi = sample_unit_sphere(k + 1, rng)?;
    let phi = if tie_phi {
        None
    } else {
        Some(sample_projector(kind, rng)?)
    };
    Ok(ProjectionParams {
        psi,
        theta,
        lambdas,
        phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn sphere_zero_dim_rejected() {
        let mut rng = SeedSchedule::new(1).stream(0);
        assert!(matches!(
            sample_unit_sphere(0, &mut rng),
            Err(Error::InvalidDimension(0))
        ));
    }

    #[test]
    fn sphere_one_dim_is_sign() {
        let mut rng = SeedSchedule::new(2).stream(0);
        for _ in 0..100 {
            let v = sample_unit_sphere(1, &mut rng).unwrap();
            assert!(v[0] == 1.0 || v[0] == -1.0);
        }
    }

    #[test]
    fn sphere_unit_norm() {
        let mut rng = SeedSchedule::new(3).stream(0);
        for dim in [2, 3, 7, 50, 784] {
            let v = sample_unit_sphere(dim, &mut rng).unwrap();
            assert!((norm(&v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_coordinate_means_and_sign_symmetry() {
        let mut rng = SeedSchedule::new(4).stream(0);
        let draws = 100_000;
        let mut sum = [0.0; 3];
        let mut positive = 0usize;
        for _ in 0..draws {
            let v = sample_unit_sphere(3, &mut rng).unwrap();
            for (s, x) in sum.iter_mut().zip(&v) {
                *s += x;
            }
            if v[0] > 0.0 {
                positive += 1;
            }
        }
        let bound = 3.0 * (1.0 / 3f64.sqrt()) / (draws as f64).sqrt();
        for s in sum {
            assert!((s / draws as f64).abs() < bound);
        }
        assert!((positive as f64 / draws as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn ztpoisson_rate_one_moments() {
        let mut rng = SeedSchedule::new(5).stream(0);
        let draws = 1_000_000;
        let mut ones = 0usize;
        let mut total = 0u64;
        for _ in 0..draws {
            let k = sample_ztpoisson(1.0, &mut rng).unwrap();
            if k == 1 {
                ones += 1;
            }
            total += k as u64;
        }
        let e = std::f64::consts::E;
        assert!((ones as f64 / draws as f64 - 1.0 / (e - 1.0)).abs() < 0.002);
        assert!((total as f64 / draws as f64 - 1.0 / (1.0 - 1.0 / e)).abs() < 0.005);
    }

    #[test]
    fn ztpoisson_never_zero() {
        let mut rng = SeedSchedule::new(6).stream(0);
        for rate in [0.5, 1.0, 5.0] {
            for _ in 0..1_000_000 {
                assert!(sample_ztpoisson(rate, &mut rng).unwrap() >= 1);
            }
        }
    }

    #[test]
    fn ztpoisson_rejects_bad_rate() {
        let mut rng = SeedSchedule::new(7).stream(0);
        assert!(matches!(sample_ztpoisson(0.0, &mut rng), Err(Error::InvalidRate(_))));
        assert!(matches!(sample_ztpoisson(-1.0, &mut rng), Err(Error::InvalidRate(_))));
    }

    #[test]
    fn default_poisson_params() {
        let mut rng = SeedSchedule::new(8).stream(0);
        let law = MomentOrderLaw::poisson_default(5);
        let p = sample_projection_params(&ProjectorKind::Linear { dim: 4 }, 5, &law, true, &mut rng).unwrap();
        assert_eq!(p.lambdas.len(), 5);
        assert!(p.lambdas.iter().all(|&l| l >= 1));
        assert_eq!(p.psi.len(), 6);
        assert!((norm(&p.psi) - 1.0).abs() < 1e-12);
        assert!(p.phi.is_none());
        match &p.theta {
            FeatureProjector::Linear(t) => assert!((norm(t) - 1.0).abs() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn tied_phi_draws_one_direction() {
        // tied: the stream after psi is untouched, so the next draw matches an
        // untied run's phi
        let law = MomentOrderLaw::UniformFinite(3);
        let kind = ProjectorKind::Linear { dim: 3 };
        let mut a = SeedSchedule::new(9).stream(4);
        let tied = sample_projection_params(&kind, 2, &law, true, &mut a).unwrap();
        let next = sample_unit_sphere(3, &mut a).unwrap();
        let mut b = SeedSchedule::new(9).stream(4);
        let untied = sample_projection_params(&kind, 2, &law, false, &mut b).unwrap();
        assert_eq!(tied.theta, untied.theta);
        assert_eq!(untied.phi, Some(FeatureProjector::Linear(next)));
    }

    #[test]
    fn uniform_law_frequencies() {
        let law = MomentOrderLaw::UniformFinite(3);
        let kind = ProjectorKind::Linear { dim: 1 };
        let mut rng = SeedSchedule::new(10).stream(0);
        let draws = 1_000_000;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let p = sample_projection_params(&kind, 1, &law, true, &mut rng).unwrap();
            counts[p.lambdas[0] as usize - 1] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 1.0 / 3.0).abs() < 0.002);
        }
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let law = MomentOrderLaw::poisson_default(5);
        let kind = ProjectorKind::Linear { dim: 8 };
        let s = SeedSchedule::new(11);
        let a = sample_projection_params(&kind, 5, &law, true, &mut s.stream(3)).unwrap();
        let b = sample_projection_params(&kind, 5, &law, true, &mut s.stream(3)).unwrap();
        let c = sample_projection_params(&kind, 5, &law, true, &mut s.stream(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn law_validation() {
        assert!(MomentOrderLaw::UniformFinite(0).validate(3).is_err());
        assert!(MomentOrderLaw::TruncatedPoissonProduct(vec![1.0, 2.0])
            .validate(3)
            .is_err());
        assert!(matches!(
            MomentOrderLaw::TruncatedPoissonProduct(vec![1.0, -2.0]).validate(2),
            Err(Error::InvalidRate(_))
        ));
    }
}
