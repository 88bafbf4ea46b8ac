//! Gaussian approximation of class-conditional distributions and the
//! closed-form 2-Wasserstein (Bures) distance between Gaussians.

use crate::dataset::ClassView;
use crate::error::{Error, Result};

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-12;

/// Mean and biased (1/n) covariance of a class.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    pub mean: Vec<f64>,
    /// Row-major `d x d`.
    pub covariance: Vec<f64>,
}

impl GaussianSummary {
    pub fn new(mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if covariance.len() != d * d {
            return Err(Error::LengthMismatch {
                expected: d * d,
                got: covariance.len(),
            });
        }
        for i in 0..d {
            for j in 0..i {
                if (covariance[i * d + j] - covariance[j * d + i]).abs() > 1e-10 {
                    return Err(Error::InvalidConfig("covariance is not symmetric".into()));
                }
            }
        }
        Ok(Self { mean, covariance })
    }

    pub fn fit(class: &ClassView<'_>) -> Result<Self> {
        if class.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let d = class.dim();
        let n = class.len() as f64;
        let mut mean = vec![0.0; d];
        for x in class.points() {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut cov = vec![0.0; d * d];
        for x in class.points() {
            for i in 0..d {
                let di = x[i] - mean[i];
                for j in i..d {
                    cov[i * d + j] += di * (x[j] - mean[j]);
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = cov[i * d + j] / n;
                cov[i * d + j] = v;
                cov[j * d + i] = v;
            }
        }
        Ok(Self { mean, covariance: cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Eigenvalues and row-major eigenvectors (column `k` is the `k`-th vector)
/// of a symmetric matrix, by cyclic Jacobi rotations.
pub fn symmetric_eigen(matrix: &[f64], d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off = |a: &[f64]| {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    s += a[i * d + j] * a[i * d + j];
                }
            }
        }
        s.sqrt()
    };
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off(&a) <= JACOBI_TOL * total.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off(&a) > JACOBI_TOL * total.max(f64::MIN_POSITIVE) {
        return Err(Error::EigenFailure);
    }
    Ok(((0..d).map(|i| a[i * d + i]).collect(), v))
}

/// Symmetric PSD square root, negative eigenvalues clipped to zero.
pub fn sqrt_psd(matrix: &[f64], d: usize) -> Result<Vec<f64>> {
    let (vals, vecs) = symmetric_eigen(matrix, d)?;
    let roots: Vec<f64> = vals.iter().map(|l| l.max(0.0).sqrt()).collect();
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let s: f64 = (0..d).map(|k| vecs[i * d + k] * roots[k] * vecs[j * d + k]).sum();
            out[i * d + j] = s;
            out[j * d + i] = s;
        }
    }
    Ok(out)
}

fn matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

/// `W_2` between two Gaussians:
/// `sqrt(|m1 - m2|^2 + tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2}))`.
/// Identical summaries give exactly zero.
pub fn bures_wasserstein(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64> {
    let d = a.dim();
    if b.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: b.dim(),
        });
    }
    if a == b {
        return Ok(0.0);
    }
    // fixed argument order so the result is bitwise symmetric
    let key = |g: &GaussianSummary| {
        g.mean
            .iter()
            .chain(&g.covariance)
            .map(|v| v.to_bits())
            .collect::<Vec<_>>()
    };
    let (a, b) = if key(a) <= key(b) { (a, b) } else { (b, a) };
    let mean_sq: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x - y) * (x - y)).sum();
    let root_a = sqrt_psd(&a.covariance, d)?;
    let mut cross = matmul(&matmul(&root_a, &b.covariance, d), &root_a, d);
    // symmetrize away rounding before the eigensolve
    for i in 0..d {
        for j in 0..i {
            let s = 0.5 * (cross[i * d + j] + cross[j * d + i]);
            cross[i * d + j] = s;
            cross[j * d + i] = s;
        }
    }
    let (vals, _) = symmetric_eigen(&cross, d)?;
    let cross_trace: f64 = vals.iter().map(|l| l.max(0.0).sqrt()).sum();
    let trace: f64 = (0..d).map(|i| a.covariance[i * d + i] + b.covariance[i * d + i]).sum();
    Ok((mean_sq + trace - 2.0 * cross_trace).max(0.0).sqrt())
}

/// Bures distance between the Gaussian fits of two classes.
pub fn label_distance_gaussian(a: &ClassView<'_>, b: &ClassView<'_>) -> Result<f64> {
    bures_wasserstein(&GaussianSummary::fit(a)?, &GaussianSummary::fit(b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_class_index, Dataset};

    #[test]
    fn scalar_case() {
        let ds = Dataset::new(vec![-1.0, 1.0, -2.0, 2.0], vec![0, 0, 1, 1], 1, "t").unwrap();
        let idx = build_class_index(&ds);
        let d = label_distance_gaussian(&idx.view(&ds, 0), &idx.view(&ds, 1)).unwrap();
        assert!((d - 1.0).abs() < 1e-8);
    }

    #[test]
    fn diagonal_case() {
        let a = GaussianSummary::new(vec![0.5, -1.0, 2.0], vec![2.0, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 5.0]).unwrap();
        let b = GaussianSummary::new(vec![0.5, -1.0, 2.0], vec![1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.1]).unwrap();
        let expected: f64 = [(2.0f64, 1.0f64), (0.3, 3.0), (5.0, 0.1)]
            .iter()
            .map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((bures_wasserstein(&a, &b).unwrap() - expected).abs() < 1e-8);
    }

    #[test]
    fn eigen_reconstructs() {
        let m = vec![4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 1.0];
        let (vals, vecs) = symmetric_eigen(&m, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let r: f64 = (0..3).map(|k| vecs[i * 3 + k] * vals[k] * vecs[j * 3 + k]).sum();
                assert!((r - m[i * 3 + j]).abs() < 1e-12);
            }
        }
        let root = sqrt_psd(&m, 3).unwrap();
        let sq = matmul(&root, &root, 3);
        for (x, y) in sq.iter().zip(&m) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn singleton_class_has_zero_covariance() {
        let ds = Dataset::new(vec![1.0, 2.0, 4.0, 6.0], vec![0, 1], 2, "t").unwrap();
        let idx = build_class_index(&ds);
        let g = GaussianSummary::fit(&idx.view(&ds, 0)).unwrap();
        assert_eq!(g.covariance, vec![0.0; 4]);
        // point masses: distance is the distance between the points
        let d = label_distance_gaussian(&idx.view(&ds, 0), &idx.view(&ds, 1)).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        assert!(GaussianSummary::new(vec![0.0, 0.0], vec![1.0, 0.5, 0.0, 1.0]).is_err());
    }
}
