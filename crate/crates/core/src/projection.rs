//! Feature projections, scaled moments, the moment transform of a class and
//! the data-point projection built from them.
//!
//! A class (the empirical distribution of its feature vectors) is reduced to
//! a scalar by projecting its points with a feature projector and taking the
//! `lambda`-th moment divided by `lambda!`. A labeled point `(x, y)` is then
//! mapped to `psi_1 * FP(x) + sum_i psi_{i+1} * MTP_{lambda_i}(class y)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::{ClassIndex, ClassView};
use crate::error::{Error, Result};
use crate::numeric::exact_sum;

/// Which family of feature projector to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectorKind {
    /// `x -> theta . x` with `theta` uniform on the unit sphere.
    Linear { dim: usize },
    /// Random strided convolution cascade over an `height x width x channels`
    /// image stored as `(row, col, channel)` row-major.
    Convolution {
        height: usize,
        width: usize,
        channels: usize,
    },
}

impl ProjectorKind {
    pub fn input_dim(&self) -> usize {
        match *self {
            Self::Linear { dim } => dim,
            Self::Convolution {
                height,
                width,
                channels,
            } => height * width * channels,
        }
    }
}

/// A linear map from feature space to the reals.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureProjector {
    Linear(Vec<f64>),
    Convolution(ConvProjector),
}

impl FeatureProjector {
    pub fn input_dim(&self) -> usize {
        match self {
            Self::Linear(dir) => dir.len(),
            Self::Convolution(c) => c.input_dim(),
        }
    }

    pub fn project(&self, x: &[f64]) -> Result<f64> {
        match self {
            Self::Linear(dir) => feature_project_linear(dir, x),
            Self::Convolution(c) => feature_project_conv(c, x),
        }
    }

    /// Project every row of a row-major matrix into `out`.
    pub(crate) fn project_rows(&self, features: &[f64], out: &mut Vec<f64>) -> Result<()> {
        let dim = self.input_dim();
        if !features.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: features.len(),
            });
        }
        out.clear();
        match self {
            Self::Linear(dir) => out.extend(features.chunks_exact(dim).map(|row| dot(dir, row))),
            Self::Convolution(c) => {
                let mut scratch = ConvScratch::default();
                out.extend(features.chunks_exact(dim).map(|row| c.forward(row, &mut scratch)));
            }
        }
        Ok(())
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inner product `direction . x`.
pub fn feature_project_linear(direction: &[f64], x: &[f64]) -> Result<f64> {
    if direction.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: direction.len(),
            got: x.len(),
        });
    }
    Ok(dot(direction, x))
}

/// Evaluate a convolution projector on one image.
pub fn feature_project_conv(projector: &ConvProjector, image: &[f64]) -> Result<f64> {
    if image.len() != projector.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "image has {} values, projector expects {}x{}x{}",
            image.len(),
            projector.height,
            projector.width,
            projector.channels
        )));
    }
    Ok(projector.forward(image, &mut ConvScratch::default()))
}

/// One single-output-channel convolution layer.
///
/// `weights` is indexed `(ki * kernel_w + kj) * in_channels + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvStage {
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub in_channels: usize,
    pub stride: usize,
    pub padding: usize,
    pub weights: Vec<f64>,
}

impl ConvStage {
    fn output_shape(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        let ph = h + 2 * self.padding;
        let pw = w + 2 * self.padding;
        if self.stride == 0 || ph < self.kernel_h || pw < self.kernel_w {
            return None;
        }
        Some((
            (ph - self.kernel_h) / self.stride + 1,
            (pw - self.kernel_w) / self.stride + 1,
        ))
    }
}

/// Cascade of linear convolutions followed by a mixing vector. No
/// nonlinearity anywhere, so the whole map is a linear functional.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvProjector {
    height: usize,
    width: usize,
    channels: usize,
    stages: Vec<ConvStage>,
    mixing: Vec<f64>,
    /// Spatial shape entering each stage, plus the final shape.
    shapes: Vec<(usize, usize, usize)>,
}

#[derive(Default)]
struct ConvScratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ConvProjector {
    pub fn new(height: usize, width: usize, channels: usize, stages: Vec<ConvStage>, mixing: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::ShapeMismatch("image shape must be positive".into()));
        }
        let mut shapes = vec![(height, width, channels)];
        let (mut h, mut w, mut c) = (height, width, channels);
        for (i, stage) in stages.iter().enumerate() {
            if stage.in_channels != c || stage.weights.len() != stage.kernel_h * stage.kernel_w * stage.in_channels {
                return Err(Error::ShapeMismatch(format!(
                    "stage {i} expects {} channels with {} weights, input has {c} channels",
                    stage.in_channels,
                    stage.weights.len()
                )));
            }
            (h, w) = stage
                .output_shape(h, w)
                .ok_or_else(|| Error::ShapeMismatch(format!("stage {i} does not fit a {h}x{w} input")))?;
            c = 1;
            shapes.push((h, w, c));
        }
        if mixing.len() != h * w * c {
            return Err(Error::ShapeMismatch(format!(
                "mixing vector has {} entries, final feature map has {}",
                mixing.len(),
                h * w * c
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            stages,
            mixing,
            shapes,
        })
    }

    /// Random cascade: 3x3 kernels, stride 2, zero padding 1, repeated until
    /// both spatial sides are at most 3, then a mixing vector. Entries are
    /// standard Gaussian; the stack is rescaled so the composite functional
    /// has unit Euclidean norm.
    pub fn random<R: Rng + ?Sized>(height: usize, width: usize, channels: usize, rng: &mut R) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::ShapeMismatch("image shape must be positive".into()));
        }
        let mut stages = Vec::new();
        let (mut h, mut w, mut c) = (height, width, channels);
        while h.max(w) > 3 {
            stages.push(ConvStage {
                kernel_h: 3,
                kernel_w: 3,
                in_channels: c,
                stride: 2,
                padding: 1,
                weights: (0..9 * c).map(|_| rng.sample(StandardNormal)).collect(),
            });
            h = (h - 1) / 2 + 1;
            w = (w - 1) / 2 + 1;
            c = 1;
        }
        let mixing = (0..h * w * c).map(|_| rng.sample(StandardNormal)).collect();
        let mut proj = Self::new(height, width, channels, stages, mixing)?;
        let norm = proj.effective_weights().iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            proj.mixing.iter_mut().for_each(|m| *m /= norm);
        }
        Ok(proj)
    }

    pub fn input_dim(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn stages(&self) -> &[ConvStage] {
        &self.stages
    }

    pub fn mixing(&self) -> &[f64] {
        &self.mixing
    }

    fn forward(&self, image: &[f64], scratch: &mut ConvScratch) -> f64 {
        scratch.a.clear();
        scratch.a.extend_from_slice(image);
        for (stage, win) in self.stages.iter().zip(self.shapes.windows(2)) {
            let (h, w, c) = win[0];
            let (ho, wo, _) = win[1];
            scratch.b.clear();
            scratch.b.resize(ho * wo, 0.0);
            for oh in 0..ho {
                for ow in 0..wo {
                    let mut acc = 0.0;
                    for ki in 0..stage.kernel_h {
                        let ih = (oh * stage.stride + ki) as isize - stage.padding as isize;
                        if ih < 0 || ih >= h as isize {
                            continue;
                        }
                        for kj in 0..stage.kernel_w {
                            let iw = (ow * stage.stride + kj) as isize - stage.padding as isize;
                            if iw < 0 || iw >= w as isize {
                                continue;
                            }
                            let base = (ih as usize * w + iw as usize) * c;
                            let wbase = (ki * stage.kernel_w + kj) * c;
                            acc += dot(&stage.weights[wbase..wbase + c], &scratch.a[base..base + c]);
                        }
                    }
                    scratch.b[oh * wo + ow] = acc;
                }
            }
            std::mem::swap(&mut scratch.a, &mut scratch.b);
        }
        dot(&self.mixing, &scratch.a)
    }

    /// The vector `g` with `forward(x) = g . x`, via the adjoint cascade.
    pub fn effective_weights(&self) -> Vec<f64> {
        let mut grad = self.mixing.clone();
        for (stage, win) in self.stages.iter().zip(self.shapes.windows(2)).rev() {
            let (h, w, c) = win[0];
            let (ho, wo, _) = win[1];
            let mut back = vec![0.0; h * w * c];
            for oh in 0..ho {
                for ow in 0..wo {
                    let g = grad[oh * wo + ow];
                    for ki in 0..stage.kernel_h {
                        let ih = (oh * stage.stride + ki) as isize - stage.padding as isize;
                        if ih < 0 || ih >= h as isize {
                            continue;
                        }
                        for kj in 0..stage.kernel_w {
                            let iw = (ow * stage.stride + kj) as isize - stage.padding as isize;
                            if iw < 0 || iw >= w as isize {
                                continue;
                            }
                            let base = (ih as usize * w + iw as usize) * c;
                            let wbase = (ki * stage.kernel_w + kj) * c;
                            for ch in 0..c {
                                back[base + ch] += stage.weights[wbase + ch] * g;
                            }
                        }
                    }
                }
            }
            grad = back;
        }
        grad
    }
}

/// `lambda!` for `lambda <= 20` is exact in f64.
const FACTORIALS: [f64; 21] = {
    let mut f = [1.0; 21];
    let mut i = 1;
    while i < 21 {
        f[i] = f[i - 1] * i as f64;
        i += 1;
    }
    f
};

#[inline]
fn scaled_power(v: f64, lambda: u32) -> f64 {
    if lambda <= 20 {
        v.powi(lambda as i32) / FACTORIALS[lambda as usize]
    } else if v == 0.0 {
        0.0
    } else {
        let ln_fact: f64 = (2..=lambda).map(|i| (i as f64).ln()).sum();
        let mag = (lambda as f64 * v.abs().ln() - ln_fact).exp();
        if v < 0.0 && lambda % 2 == 1 {
            -mag
        } else {
            mag
        }
    }
}

fn scaled_moment_of<I: ExactSizeIterator<Item = f64>>(values: I, lambda: u32) -> Result<f64> {
    let n = values.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if lambda == 0 {
        return Err(Error::InvalidConfig("moment order must be >= 1".into()));
    }
    let overflow = Error::MomentOverflow {
        projection: None,
        class: None,
        lambda,
    };
    let mut finite = true;
    let sum = exact_sum(values.map(|v| {
        let t = scaled_power(v, lambda);
        finite &= t.is_finite();
        t
    }));
    if !finite || !sum.is_finite() {
        return Err(overflow);
    }
    Ok(sum / n as f64)
}

/// `(1/n) * sum_i values_i^lambda / lambda!`, with a correctly rounded sum
/// so the result is independent of the order of `values`.
pub fn scaled_moment(values: &[f64], lambda: u32) -> Result<f64> {
    scaled_moment_of(values.iter().copied(), lambda)
}

/// Moment transform of one class: the scaled moment of its projected points.
///
/// `projected_cache`, when given, holds the projection of every row of the
/// owning dataset (indexed by row) and is used instead of re-projecting.
pub fn mtp(
    class: &ClassView<'_>,
    projector: &FeatureProjector,
    lambda: u32,
    projected_cache: Option<&[f64]>,
) -> Result<f64> {
    let tag = |e: Error| match e {
        Error::MomentOverflow { lambda, .. } => Error::MomentOverflow {
            projection: None,
            class: Some(class.label),
            lambda,
        },
        other => other,
    };
    match projected_cache {
        Some(cache) => {
            if cache.len() != class.dataset.len() {
                return Err(Error::LengthMismatch {
                    expected: class.dataset.len(),
                    got: cache.len(),
                });
            }
            scaled_moment_of(class.rows.iter().map(|&r| cache[r]), lambda).map_err(tag)
        }
        None => {
            let projected = class
                .points()
                .map(|x| projector.project(x))
                .collect::<Result<Vec<_>>>()?;
            scaled_moment(&projected, lambda).map_err(tag)
        }
    }
}

#[inline]
pub(crate) fn combine(psi: &[f64], fp_value: f64, mtp_values: &[f64]) -> f64 {
    let mut acc = psi[0] * fp_value;
    for (w, m) in psi[1..].iter().zip(mtp_values) {
        acc += w * m;
    }
    acc
}

/// `psi_1 * fp_value + sum_i psi_{i+1} * mtp_values_i`.
pub fn data_point_project(psi: &[f64], fp_value: f64, mtp_values: &[f64]) -> Result<f64> {
    if psi.len() != mtp_values.len() + 1 {
        return Err(Error::LengthMismatch {
            expected: mtp_values.len() + 1,
            got: psi.len(),
        });
    }
    Ok(combine(psi, fp_value, mtp_values))
}

/// MTP values of every class for one tuple of moment orders.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedClassMoments {
    k: usize,
    values: Vec<f64>,
}

impl ProjectedClassMoments {
    /// `projected` is the label projector applied to every row.
    pub fn compute(index: &ClassIndex, projected: &[f64], lambdas: &[u32]) -> Result<Self> {
        let k = lambdas.len();
        let mut values = Vec::with_capacity(index.num_classes() * k);
        for (label, rows) in index.classes().iter().zip(index.members()) {
            for &lambda in lambdas {
                let m = scaled_moment_of(rows.iter().map(|&r| projected[r]), lambda).map_err(|e| match e {
                    Error::MomentOverflow { lambda, .. } => Error::MomentOverflow {
                        projection: None,
                        class: Some(*label),
                        lambda,
                    },
                    other => other,
                })?;
                values.push(m);
            }
        }
        Ok(Self { k, values })
    }

    /// The `k` values of class slot `slot`.
    #[inline]
    pub fn class(&self, slot: usize) -> &[f64] {
        &self.values[slot * self.k..(slot + 1) * self.k]
    }

    pub fn num_classes(&self) -> usize {
        self.values.len().checked_div(self.k).unwrap_or(0)
    }
}
