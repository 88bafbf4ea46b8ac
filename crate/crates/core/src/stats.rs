//! Correlation and log-log regression helpers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two equal-length series of finite values, at least three long.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSeries {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairedSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.len() < 3 {
            return Err(Error::DegenerateSeries(format!(
                "need at least 3 pairs, got {}",
                x.len()
            )));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::DegenerateSeries("non-finite value".into()));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn centered(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

fn pearson_raw(x: &[f64], y: &[f64]) -> Result<f64> {
    let cx = centered(x);
    let cy = centered(y);
    let sxx: f64 = cx.iter().map(|v| v * v).sum();
    let syy: f64 = cy.iter().map(|v| v * v).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateSeries("zero variance".into()));
    }
    let sxy: f64 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum();
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Product-moment correlation.
pub fn pearson(series: &PairedSeries) -> Result<f64> {
    pearson_raw(&series.x, &series.y)
}

/// 1-based ranks, ties receiving the average of the ranks they span.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Rank correlation: Pearson on average ranks.
pub fn spearman(series: &PairedSeries) -> Result<f64> {
    pearson_raw(&average_ranks(&series.x), &average_ranks(&series.y))
}

/// Least-squares fit of `ln(error)` on `ln(L)`; returns `(slope, intercept)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::DegenerateSeries(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(l, e)| !(l > 0.0 && e > 0.0 && l.is_finite() && e.is_finite()))
    {
        return Err(Error::NonPositiveInput);
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateSeries("all L values equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
