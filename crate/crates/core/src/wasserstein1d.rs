//! Exact one-dimensional Wasserstein distances between discrete measures.
//!
//! In one dimension the optimal coupling pairs quantiles, so `W_p^p` is the
//! integral over `z in [0, 1]` of `|F_a^{-1}(z) - F_b^{-1}(z)|^p`. Both
//! inverse CDFs are step functions; we integrate exactly by sweeping the
//! union of their breakpoints.

use crate::error::{Error, Result};

/// Positions sorted ascending with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedWeightedSamples {
    positions: Vec<f64>,
    weights: Vec<f64>,
    /// Running sums of `weights`; the last entry is exactly 1.
    cumulative: Vec<f64>,
    uniform: bool,
}

impl SortedWeightedSamples {
    /// Sorts by position (stable) and renormalizes once. The weights must
    /// already sum to one within 1e-12.
    pub fn new(positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: positions.len(),
                got: weights.len(),
            });
        }
        if positions.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::MassMismatch("positions must be finite".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::MassMismatch("weights must be positive and finite".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::MassMismatch(format!("weights sum to {total}, not 1")));
        }
        let mut pairs: Vec<(f64, f64)> = positions.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (positions, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().map(|(x, w)| (x, w / total)).unzip();
        let uniform = weights.iter().all(|w| *w == weights[0]);
        let cumulative = running_sum(&weights);
        Ok(Self {
            positions,
            weights,
            cumulative,
            uniform,
        })
    }

    /// Equal mass `1/n` on every position.
    pub fn uniform(mut positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::MassMismatch("positions must be finite".into()));
        }
        positions.sort_by(f64::total_cmp);
        let n = positions.len();
        let weights = vec![1.0 / n as f64; n];
        let cumulative = (1..=n).map(|i| i as f64 / n as f64).collect();
        Ok(Self {
            positions,
            weights,
            cumulative,
            uniform: true,
        })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

fn running_sum(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

fn check_order(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(p))
    }
}

/// `|d|^p` with exact fast paths for p = 1 and p = 2.
#[inline]
pub(crate) fn ground_cost(d: f64, p: f64) -> f64 {
    if p == 2.0 {
        d * d
    } else if p == 1.0 {
        d.abs()
    } else {
        d.abs().powf(p)
    }
}

/// `W_p^p` between two weighted discrete measures on the line.
pub fn w1d_pp(a: &SortedWeightedSamples, b: &SortedWeightedSamples, p: f64) -> Result<f64> {
    check_order(p)?;
    if a.uniform && b.uniform {
        return Ok(uniform_merge(&a.positions, &b.positions, p));
    }
    let (mut i, mut j) = (0, 0);
    let mut prev = 0.0;
    let mut total = 0.0;
    loop {
        let (ca, cb) = (a.cumulative[i], b.cumulative[j]);
        let cur = ca.min(cb);
        let mass = cur - prev;
        if mass > 0.0 {
            total += mass * ground_cost(a.positions[i] - b.positions[j], p);
        }
        prev = cur;
        let step_a = ca <= cb;
        let step_b = cb <= ca;
        if step_a {
            i += 1;
        }
        if step_b {
            j += 1;
        }
        if i == a.len() || j == b.len() {
            break;
        }
    }
    Ok(total)
}

/// `(1/n) sum_i |a_i - b_i|^p` for two sorted samples of equal size.
pub fn w1d_equal_uniform_pp(a_sorted: &[f64], b_sorted: &[f64], p: f64) -> Result<f64> {
    check_order(p)?;
    if a_sorted.len() != b_sorted.len() {
        return Err(Error::LengthMismatch {
            expected: a_sorted.len(),
            got: b_sorted.len(),
        });
    }
    if a_sorted.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(equal_uniform(a_sorted, b_sorted, p))
}

/// `W_p^p` between uniform empirical measures of sizes `n` and `m`
/// (both inputs sorted ascending).
pub fn w1d_uniform_pp(a_sorted: &[f64], b_sorted: &[f64], p: f64) -> Result<f64> {
    check_order(p)?;
    if a_sorted.is_empty() || b_sorted.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(uniform_merge(a_sorted, b_sorted, p))
}

#[inline]
fn equal_uniform(a: &[f64], b: &[f64], p: f64) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| ground_cost(x - y, p)).sum();
    sum / a.len() as f64
}

/// Breakpoints of a uniform `n`-atom measure sit at multiples of `m` in
/// units of `1/(n m)`, and vice versa, so the sweep is exact in integers.
pub(crate) fn uniform_merge(a: &[f64], b: &[f64], p: f64) -> f64 {
    let (n, m) = (a.len(), b.len());
    if n == m {
        return equal_uniform(a, b, p);
    }
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ca, mut cb) = (m, n);
    let mut prev = 0usize;
    let mut total = 0.0;
    while i < n && j < m {
        let cur = ca.min(cb);
        total += (cur - prev) as f64 * ground_cost(a[i] - b[j], p);
        prev = cur;
        let (step_a, step_b) = (ca <= cb, cb <= ca);
        if step_a {
            i += 1;
            ca += m;
        }
        if step_b {
            j += 1;
            cb += n;
        }
    }
    total / (n as f64 * m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force_pp(a: &[f64], b: &[f64], p: f64) -> f64 {
        // minimum over all pairings, by Heap's algorithm
        fn permute(k: usize, idx: &mut Vec<usize>, a: &[f64], b: &[f64], p: f64, best: &mut f64) {
            if k == 1 {
                let c: f64 = idx.iter().enumerate().map(|(i, &s)| (a[i] - b[s]).abs().powf(p)).sum();
                *best = best.min(c / a.len() as f64);
                return;
            }
            for i in 0..k {
                permute(k - 1, idx, a, b, p, best);
                let swap = if k.is_multiple_of(2) { i } else { 0 };
                idx.swap(swap, k - 1);
            }
        }
        let mut idx: Vec<usize> = (0..a.len()).collect();
        let mut best = f64::INFINITY;
        permute(a.len(), &mut idx, a, b, p, &mut best);
        best
    }

    #[test]
    fn brute_force_oracle_sanity() {
        assert_eq!(brute_force_pp(&[1.0, 2.0, 3.0], &[6.0, 4.0, 5.0], 2.0), 9.0);
    }

    #[test]
    fn examples() {
        let a = SortedWeightedSamples::uniform(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(w1d_pp(&a, &a, 2.0).unwrap(), 0.0);
        let b = SortedWeightedSamples::uniform(vec![6.0, 4.0, 5.0]).unwrap();
        assert_eq!(w1d_pp(&a, &b, 2.0).unwrap(), 9.0);

        let a = SortedWeightedSamples::new(vec![1.0, 0.0], vec![0.5, 0.5]).unwrap();
        let b = SortedWeightedSamples::new(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(w1d_pp(&a, &b, 1.0).unwrap(), 0.5);

        assert_eq!(
            w1d_equal_uniform_pp(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], 2.0).unwrap(),
            9.0
        );
        assert_eq!(w1d_equal_uniform_pp(&[1.0, 2.0], &[1.0, 2.0], 3.0).unwrap(), 0.0);
    }

    #[test]
    fn shift_costs_shift() {
        let a = [-1.5, 0.25, 2.0, 7.0];
        let b: Vec<f64> = a.iter().map(|x| x + 0.75).collect();
        assert_eq!(w1d_equal_uniform_pp(&a, &b, 1.0).unwrap(), 0.75);
    }

    #[test]
    fn errors() {
        let a = SortedWeightedSamples::uniform(vec![1.0]).unwrap();
        assert!(matches!(w1d_pp(&a, &a, 0.5), Err(Error::InvalidOrder(_))));
        assert!(matches!(
            SortedWeightedSamples::new(vec![1.0, 2.0], vec![0.5, 0.6]),
            Err(Error::MassMismatch(_))
        ));
        assert!(matches!(
            SortedWeightedSamples::new(vec![1.0, 2.0], vec![1.0, 0.0]),
            Err(Error::MassMismatch(_))
        ));
        assert!(matches!(
            w1d_equal_uniform_pp(&[1.0], &[1.0, 2.0], 2.0),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn unequal_uniform_sizes() {
        // {0, 1} vs {0, 0.5, 1}: quantile pieces of mass 1/3, 1/6, 1/6, 1/3
        let got = w1d_uniform_pp(&[0.0, 1.0], &[0.0, 0.5, 1.0], 1.0).unwrap();
        assert!((got - (1.0 / 6.0 * 0.5 + 1.0 / 6.0 * 0.5)).abs() < 1e-15);
        let weighted = w1d_pp(
            &SortedWeightedSamples::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap(),
            &SortedWeightedSamples::new(vec![0.0, 0.5, 1.0], vec![0.25, 0.5, 0.25]).unwrap(),
            1.0,
        )
        .unwrap();
        assert!((weighted - 0.25).abs() < 1e-15);
    }

    fn weighted() -> impl Strategy<Value = SortedWeightedSamples> {
        prop::collection::vec((-20.0f64..20.0, 1u32..10), 1..50).prop_map(|atoms| {
            let total: u32 = atoms.iter().map(|a| a.1).sum();
            let (x, w): (Vec<f64>, Vec<f64>) = atoms.into_iter().map(|(x, c)| (x, c as f64 / total as f64)).unzip();
            SortedWeightedSamples::new(x, w).unwrap()
        })
    }

    proptest! {
        #[test]
        fn matches_permutation_oracle(
            pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..=6),
            p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0]),
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let expected = brute_force_pp(&a, &b, p);
            let sa = SortedWeightedSamples::uniform(a).unwrap();
            let sb = SortedWeightedSamples::uniform(b).unwrap();
            prop_assert!((w1d_pp(&sa, &sb, p).unwrap() - expected).abs() < 1e-10);
        }

        #[test]
        fn equal_uniform_agrees_with_general(
            pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..40),
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let sa = SortedWeightedSamples::uniform(a).unwrap();
            let sb = SortedWeightedSamples::uniform(b).unwrap();
            let fast = w1d_equal_uniform_pp(sa.positions(), sb.positions(), 2.0).unwrap();
            // force the breakpoint sweep by perturbing the uniform flag
            let mut ga = sa.clone();
            ga.uniform = false;
            let general = w1d_pp(&ga, &sb, 2.0).unwrap();
            prop_assert!((fast - general).abs() <= 1e-14 * fast.max(1e-300) * sa.len() as f64);
        }

        #[test]
        fn symmetric_and_translation_invariant(a in weighted(), b in weighted(), c in -8i32..8) {
            let ab = w1d_pp(&a, &b, 2.0).unwrap();
            prop_assert_eq!(ab.to_bits(), w1d_pp(&b, &a, 2.0).unwrap().to_bits());
            // dyadic shifts of dyadic-free values are not exact in general;
            // shift by an integer and compare within rounding of the inputs
            let shift = |s: &SortedWeightedSamples| {
                SortedWeightedSamples::new(s.positions().iter().map(|x| x + c as f64).collect(), s.weights().to_vec()).unwrap()
            };
            let shifted = w1d_pp(&shift(&a), &shift(&b), 2.0).unwrap();
            prop_assert!((shifted - ab).abs() <= 1e-12 * (1.0 + ab));
        }

        #[test]
        fn triangle_inequality(a in weighted(), b in weighted(), c in weighted(), p in 1.0f64..4.0) {
            let d = |x: &SortedWeightedSamples, y: &SortedWeightedSamples| w1d_pp(x, y, p).unwrap().powf(1.0 / p);
            prop_assert!(d(&a, &b) <= d(&a, &c) + d(&c, &b) + 1e-9);
        }
    }
}
