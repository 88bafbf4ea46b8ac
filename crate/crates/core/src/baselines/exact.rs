//! Exact discrete optimal transport by successive shortest paths.
//!
//! Marginals are scaled to integers (the least common denominator of their
//! rational reconstructions, so uniform `1/n` weights become exact), then a
//! min-cost flow is pushed from a super source through the complete
//! bipartite graph to a super sink. Dijkstra runs on reduced costs kept
//! non-negative by node potentials; the graph is dense, so the O(V^2) array
//! variant is used.

use crate::error::{Error, Result};

/// Largest `n * m` the exact solver accepts.
pub const MAX_CELLS: usize = 1_000_000;

/// Dense `n x m` matrix of non-negative ground costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyDataset);
        }
        if data.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidConfig("costs must be finite and non-negative".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// A coupling with its prescribed marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    mass: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl TransportPlan {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.cols + j]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.mass.chunks_exact(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.mass.chunks_exact(self.cols) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }
}

/// Optimal value, plan and dual potentials of an exact solve.
#[derive(Debug, Clone)]
pub struct OtSolution {
    pub value: f64,
    pub plan: TransportPlan,
    /// Dual variables `u` (rows) and `v` (columns) with `u_i + v_j <= c_ij`.
    pub dual_rows: Vec<f64>,
    pub dual_cols: Vec<f64>,
}

impl OtSolution {
    /// `min_ij c_ij - u_i - v_j`; non-negative (up to rounding) at optimality.
    pub fn min_reduced_cost(&self, cost: &CostMatrix) -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..cost.rows {
            for j in 0..cost.cols {
                min = min.min(cost.get(i, j) - self.dual_rows[i] - self.dual_cols[j]);
            }
        }
        min
    }

    /// Primal value minus dual objective.
    pub fn duality_gap(&self) -> f64 {
        let dual: f64 = self
            .plan
            .alpha
            .iter()
            .zip(&self.dual_rows)
            .chain(self.plan.beta.iter().zip(&self.dual_cols))
            .map(|(w, u)| w * u)
            .sum();
        self.value - dual
    }
}

/// Solve `min <gamma, cost>` over couplings of `alpha` and `beta`.
pub fn exact_ot(cost: &CostMatrix, alpha: &[f64], beta: &[f64]) -> Result<OtSolution> {
    let (n, m) = (cost.rows, cost.cols);
    if n.saturating_mul(m) > MAX_CELLS {
        return Err(Error::ScaleExceeded { n, m });
    }
    if alpha.len() != n || beta.len() != m {
        return Err(Error::InfeasibleMarginals(format!(
            "marginal lengths {}x{} do not match cost {n}x{m}",
            alpha.len(),
            beta.len()
        )));
    }
    for (name, w) in [("alpha", alpha), ("beta", beta)] {
        if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InfeasibleMarginals(format!("{name} must be positive")));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InfeasibleMarginals(format!("{name} sums to {total}")));
        }
    }
    let (supply, demand, scale) = integerize(alpha, beta);
    let mut flow = Flow::new(cost, supply, demand);
    flow.solve();

    let mass: Vec<f64> = flow.flow.iter().map(|&f| f as f64 / scale as f64).collect();
    // sorted summation makes the value independent of row/column order
    let mut terms: Vec<f64> = mass
        .iter()
        .zip(&cost.data)
        .filter(|(g, _)| **g > 0.0)
        .map(|(g, c)| g * c)
        .collect();
    terms.sort_by(f64::total_cmp);
    let value = crate::numeric::exact_sum(terms);

    let pi = &flow.potential;
    let dual_rows = (0..n).map(|i| -pi[1 + i]).collect();
    let dual_cols = (0..m).map(|j| pi[1 + n + j]).collect();
    Ok(OtSolution {
        value,
        plan: TransportPlan {
            rows: n,
            cols: m,
            mass,
            alpha: alpha.to_vec(),
            beta: beta.to_vec(),
        },
        dual_rows,
        dual_cols,
    })
}

const MAX_SCALE: u64 = 1 << 40;

/// Smallest denominator `q <= max_den` with `|x - p/q| <= tol`, by continued
/// fractions.
fn rational_denominator(x: f64, max_den: u64, tol: f64) -> Option<u64> {
    let (mut h0, mut h1) = (0f64, 1f64);
    let (mut k0, mut k1) = (1f64, 0f64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > max_den as f64 {
            return None;
        }
        if (x - h2 / k2).abs() <= tol {
            return Some(k2 as u64);
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac <= 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Integer marginals with a common scale. Exact when all weights are
/// rationals with a manageable common denominator; otherwise a `2^40` grid
/// with largest-remainder rounding.
fn integerize(alpha: &[f64], beta: &[f64]) -> (Vec<i64>, Vec<i64>, u64) {
    let mut scale = 1u64;
    for &w in alpha.iter().chain(beta) {
        match rational_denominator(w, MAX_SCALE, 1e-15 * w.max(1e-300)) {
            Some(q) => {
                let l = scale / gcd(scale, q);
                match l.checked_mul(q) {
                    Some(s) if s <= MAX_SCALE => scale = s,
                    _ => {
                        scale = MAX_SCALE;
                        break;
                    }
                }
            }
            None => {
                scale = MAX_SCALE;
                break;
            }
        }
    }
    (round_to(alpha, scale), round_to(beta, scale), scale)
}

/// Round `w * scale` so the result sums exactly to `scale` and every entry
/// stays at least 1.
fn round_to(w: &[f64], scale: u64) -> Vec<i64> {
    let total: f64 = w.iter().sum();
    let scaled: Vec<f64> = w.iter().map(|x| x / total * scale as f64).collect();
    let mut out: Vec<i64> = scaled.iter().map(|x| (x.floor() as i64).max(1)).collect();
    let mut deficit = scale as i64 - out.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - out[a] as f64;
        let rb = scaled[b] - out[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut k = 0;
    while deficit > 0 {
        out[order[k % order.len()]] += 1;
        deficit -= 1;
        k += 1;
    }
    while deficit < 0 {
        // only reachable when clamping to 1 overshot; take from the largest
        let i = (0..out.len()).max_by_key(|&i| out[i]).unwrap();
        out[i] -= 1;
        deficit += 1;
    }
    out
}

/// Residual network state. Node 0 is the source, `1..=n` rows,
/// `n+1..=n+m` columns, `n+m+1` the sink.
struct Flow<'a> {
    cost: &'a CostMatrix,
    supply_left: Vec<i64>,
    demand_left: Vec<i64>,
    supply: Vec<i64>,
    demand: Vec<i64>,
    flow: Vec<i64>,
    potential: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Via {
    None,
    Source,
    Row(usize),
    Col(usize),
}

impl<'a> Flow<'a> {
    fn new(cost: &'a CostMatrix, supply: Vec<i64>, demand: Vec<i64>) -> Self {
        let nodes = cost.rows + cost.cols + 2;
        Self {
            cost,
            supply_left: supply.clone(),
            demand_left: demand.clone(),
            supply,
            demand,
            flow: vec![0; cost.rows * cost.cols],
            potential: vec![0.0; nodes],
        }
    }

    fn solve(&mut self) {
        let (n, m) = (self.cost.rows, self.cost.cols);
        let nodes = n + m + 2;
        let sink = n + m + 1;
        let mut dist = vec![f64::INFINITY; nodes];
        let mut done = vec![false; nodes];
        let mut via = vec![Via::None; nodes];
        loop {
            dist.fill(f64::INFINITY);
            done.fill(false);
            via.fill(Via::None);
            dist[0] = 0.0;
            let pi = &self.potential;
            loop {
                let mut u = usize::MAX;
                let mut best = f64::INFINITY;
                for v in 0..nodes {
                    if !done[v] && dist[v] < best {
                        best = dist[v];
                        u = v;
                    }
                }
                if u == usize::MAX || u == sink {
                    break;
                }
                done[u] = true;
                let du = dist[u];
                let mut relax = |v: usize, rc: f64, from: Via| {
                    let nd = du + rc.max(0.0);
                    if nd < dist[v] {
                        dist[v] = nd;
                        via[v] = from;
                    }
                };
                if u == 0 {
                    for i in 0..n {
                        if self.supply_left[i] > 0 {
                            relax(1 + i, pi[0] - pi[1 + i], Via::Source);
                        }
                    }
                } else if u <= n {
                    let i = u - 1;
                    for j in 0..m {
                        relax(1 + n + j, self.cost.get(i, j) + pi[u] - pi[1 + n + j], Via::Row(i));
                    }
                } else if u < sink {
                    let j = u - 1 - n;
                    for i in 0..n {
                        if self.flow[i * m + j] > 0 {
                            relax(1 + i, -self.cost.get(i, j) + pi[u] - pi[1 + i], Via::Col(j));
                        }
                    }
                    if self.demand_left[j] > 0 {
                        relax(sink, pi[u] - pi[sink], Via::Col(j));
                    }
                }
            }
            if !dist[sink].is_finite() {
                break;
            }
            let cap = dist[sink];
            for (p, d) in self.potential.iter_mut().zip(&dist) {
                *p += d.min(cap);
            }
            self.augment(&via);
            if self.demand_left.iter().all(|&d| d == 0) {
                break;
            }
        }
    }

    /// Push the bottleneck amount along the path recorded in `via`.
    fn augment(&mut self, via: &[Via]) {
        let (n, m) = (self.cost.rows, self.cost.cols);
        let sink = n + m + 1;
        let mut path = Vec::new();
        let mut node = sink;
        let mut bottleneck = i64::MAX;
        loop {
            match via[node] {
                Via::Source => {
                    let i = node - 1;
                    bottleneck = bottleneck.min(self.supply_left[i]);
                    path.push((node, via[node]));
                    break;
                }
                Via::Col(j) if node == sink => {
                    bottleneck = bottleneck.min(self.demand_left[j]);
                    path.push((node, via[node]));
                    node = 1 + n + j;
                }
                Via::Col(j) => {
                    let i = node - 1;
                    bottleneck = bottleneck.min(self.flow[i * m + j]);
                    path.push((node, via[node]));
                    node = 1 + n + j;
                }
                Via::Row(i) => {
                    path.push((node, via[node]));
                    node = 1 + i;
                }
                Via::None => unreachable!("broken augmenting path"),
            }
        }
        for (node, from) in path {
            match from {
                Via::Source => self.supply_left[node - 1] -= bottleneck,
                Via::Col(j) if node == sink => self.demand_left[j] -= bottleneck,
                Via::Col(j) => self.flow[(node - 1) * m + j] -= bottleneck,
                Via::Row(i) => self.flow[i * m + (node - 1 - n)] += bottleneck,
                Via::None => unreachable!(),
            }
        }
        debug_assert!(self
            .supply_left
            .iter()
            .zip(&self.supply)
            .all(|(l, s)| *l >= 0 && l <= s));
        debug_assert!(self
            .demand_left
            .iter()
            .zip(&self.demand)
            .all(|(l, d)| *l >= 0 && l <= d));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    #[test]
    fn identity_cost() {
        let cost = CostMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let sol = exact_ot(&cost, &uniform(2), &uniform(2)).unwrap();
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.plan.get(0, 0), 0.5);
        assert_eq!(sol.plan.get(1, 1), 0.5);
        assert_eq!(sol.plan.get(0, 1), 0.0);
    }

    #[test]
    fn single_source_is_forced() {
        let cost = CostMatrix::new(1, 3, vec![1.0, 2.0, 4.0]).unwrap();
        let beta = [0.2, 0.3, 0.5];
        let sol = exact_ot(&cost, &[1.0], &beta).unwrap();
        assert!((sol.value - (0.2 + 0.6 + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn rational_marginals_are_exact() {
        let (a, b, s) = integerize(&uniform(3), &uniform(4));
        assert_eq!(s, 12);
        assert_eq!(a, vec![4, 4, 4]);
        assert_eq!(b, vec![3, 3, 3, 3]);
        let (a, _, s) = integerize(&[0.1, 0.2, 0.7], &[1.0]);
        assert_eq!(s, 10);
        assert_eq!(a, vec![1, 2, 7]);
    }

    #[test]
    fn irrational_marginals_fall_back() {
        // each weight alone has a convergent below the cap; their common
        // denominator does not
        let x = 1.0 / std::f64::consts::PI;
        let y = 1.0 / std::f64::consts::E / 2.0;
        let (a, b, s) = integerize(&[x, y, 1.0 - x - y], &[1.0]);
        assert_eq!(s, MAX_SCALE);
        assert_eq!(a.iter().sum::<i64>(), s as i64);
        assert_eq!(b, vec![s as i64]);
    }

    #[test]
    fn guards() {
        let cost = CostMatrix::new(2, 2, vec![0.0; 4]).unwrap();
        assert!(matches!(
            exact_ot(&cost, &[0.5, 0.6], &uniform(2)),
            Err(Error::InfeasibleMarginals(_))
        ));
        assert!(matches!(
            exact_ot(&cost, &[1.0, 0.0], &uniform(2)),
            Err(Error::InfeasibleMarginals(_))
        ));
        let big = CostMatrix::new(1001, 1000, vec![0.0; 1_001_000]).unwrap();
        assert!(matches!(
            exact_ot(&big, &uniform(1001), &uniform(1000)),
            Err(Error::ScaleExceeded { .. })
        ));
        assert!(CostMatrix::new(1, 1, vec![-1.0]).is_err());
    }

    #[test]
    fn weighted_instance_certificate() {
        // 3 sources, 2 sinks, hand-checkable optimum: route cheapest first
        let cost = CostMatrix::new(3, 2, vec![1.0, 3.0, 2.0, 1.0, 5.0, 2.0]).unwrap();
        let sol = exact_ot(&cost, &[0.5, 0.25, 0.25], &[0.5, 0.5]).unwrap();
        // source 0 -> col 0 (0.5 * 1), sources 1,2 -> col 1 (0.25 * 1 + 0.25 * 2)
        assert!((sol.value - 1.25).abs() < 1e-15);
        assert!(sol.min_reduced_cost(&cost) >= -1e-10);
        assert!(sol.duality_gap().abs() < 1e-12);
        for (s, a) in sol.plan.row_sums().iter().zip(sol.plan.alpha()) {
            assert!((s - a).abs() < 1e-12);
        }
    }
}
