//! Instance model and ordered-median objective.
//!
//! Facilities and clients live in a bipartite metric `c: F x C -> R>=0`.
//! Client-to-client distances, needed by the clustering phase of the
//! rounding, are the shortest paths through a facility,
//! `d(j, j') = min_i c_ij + c_ij'`, which is the tightest extension that the
//! quadruple inequality guarantees to be consistent with `c`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Relative tolerance used when deciding whether two costs are equal.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Relative slack allowed by [`validate_metric`]. It absorbs the additive
/// offsets of [`Instance::perturb_distances`].
pub const METRIC_TOLERANCE: f64 = 1e-9;

/// Coordinates from which Euclidean costs are derived: the first `m` points
/// are facilities, the remaining `n` are clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub dim: usize,
    pub coords: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn euclidean_costs(&self, m: usize) -> Result<Matrix> {
        if self.coords.len() < m {
            return Err(Error::InvalidInstance(format!(
                "{} points cannot hold {m} facilities",
                self.coords.len()
            )));
        }
        if let Some(p) = self.coords.iter().find(|p| p.len() != self.dim) {
            return Err(Error::InvalidInstance(format!(
                "point has {} coordinates, expected {}",
                p.len(),
                self.dim
            )));
        }
        let n = self.coords.len() - m;
        Ok(Matrix::from_fn(m, n, |i, j| {
            self.coords[i]
                .iter()
                .zip(&self.coords[m + j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    costs: Matrix,
    k: usize,
    weights: Vec<f64>,
    points: Option<PointSet>,
    client_dist: Matrix,
    metric: bool,
}

impl Instance {
    /// Validates and builds an instance. Weights are rescaled so that
    /// `w_1 = 1`.
    pub fn new(costs: Matrix, k: usize, weights: Vec<f64>) -> Result<Self> {
        let (m, n) = (costs.rows(), costs.cols());
        if m == 0 || n == 0 {
            return Err(Error::InvalidInstance(
                "need at least one facility and one client".into(),
            ));
        }
        if k == 0 || k > m {
            return Err(Error::InvalidInstance(format!(
                "k = {k} must satisfy 1 <= k <= m = {m}"
            )));
        }
        if let Some(v) = costs.as_slice().iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInstance(format!(
                "cost {v} is not a finite non-negative number"
            )));
        }
        let weights = normalize_weights(weights, n)?;
        let client_dist = client_distances(&costs);
        let metric = validate_metric(&costs).is_ok();
        Ok(Self {
            costs,
            k,
            weights,
            points: None,
            client_dist,
            metric,
        })
    }

    pub fn from_points(points: PointSet, m: usize, k: usize, weights: Vec<f64>) -> Result<Self> {
        let costs = points.euclidean_costs(m)?;
        let mut inst = Self::new(costs, k, weights)?;
        inst.points = Some(points);
        Ok(inst)
    }

    /// Same metric and `k`, different weight vector.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        let mut inst = self.clone();
        inst.weights = normalize_weights(weights, self.n())?;
        Ok(inst)
    }

    pub fn with_k(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.m() {
            return Err(Error::InvalidInstance(format!(
                "k = {k} must satisfy 1 <= k <= m = {}",
                self.m()
            )));
        }
        let mut inst = self.clone();
        inst.k = k;
        Ok(inst)
    }

    pub fn m(&self) -> usize {
        self.costs.rows()
    }

    pub fn n(&self) -> usize {
        self.costs.cols()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn costs(&self) -> &Matrix {
        &self.costs
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.costs[(i, j)]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn points(&self) -> Option<&PointSet> {
        self.points.as_ref()
    }

    pub fn is_metric(&self) -> bool {
        self.metric
    }

    pub fn max_cost(&self) -> f64 {
        self.costs.max()
    }

    /// Absolute tolerance for cost equality on this instance.
    pub fn tie_tolerance(&self) -> f64 {
        TIE_TOLERANCE * self.max_cost()
    }

    /// Shortest-path distance between two clients through a facility.
    #[inline]
    pub fn client_distance(&self, j: usize, j2: usize) -> f64 {
        self.client_dist[(j, j2)]
    }

    /// `Some(l)` when the weights are `l` ones followed by zeros.
    pub fn rectangle_width(&self) -> Option<usize> {
        let ell = self.weights.iter().take_while(|&&w| w == 1.0).count();
        self.weights[ell..]
            .iter()
            .all(|&w| w == 0.0)
            .then_some(ell)
    }

    /// Distinct weight levels `(w̄_r, ℓ_r)` in decreasing order, where `ℓ_r`
    /// is the largest (1-based) position holding weight `w̄_r`.
    pub fn weight_levels(&self) -> Vec<(f64, usize)> {
        weight_levels(&self.weights)
    }

    /// Connection cost of every client to its nearest facility in `open`.
    pub fn connection_costs(&self, open: &[usize]) -> Vec<f64> {
        (0..self.n())
            .map(|j| {
                open.iter()
                    .map(|&i| self.costs[(i, j)])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Ordered cost of an arbitrary facility list under arbitrary weights.
    /// No validation; `open` must be non-empty and in range.
    pub fn ordered_cost_of(&self, open: &[usize], weights: &[f64]) -> f64 {
        sorted_dot(self.connection_costs(open), weights)
    }

    pub fn ordered_cost(&self, sol: &SolutionSet) -> Result<f64> {
        sol.check(self)?;
        Ok(self.ordered_cost_of(sol.facilities(), &self.weights))
    }

    /// Sum of the `ell` largest connection costs.
    pub fn rect_cost(&self, sol: &SolutionSet, ell: usize) -> Result<f64> {
        sol.check(self)?;
        if ell == 0 || ell > self.n() {
            return Err(Error::WidthOutOfRange { ell, n: self.n() });
        }
        Ok(self.rect_cost_of(sol.facilities(), ell))
    }

    pub fn rect_cost_of(&self, open: &[usize], ell: usize) -> f64 {
        let mut c = self.connection_costs(open);
        sort_desc(&mut c);
        c[..ell].iter().sum()
    }

    /// Makes all `m * n` costs pairwise distinct.
    ///
    /// Entries are visited in increasing `(cost, row-major index)` order and
    /// each is lifted to at least `previous + 1e-12 * max_cost`. Distinct
    /// costs are left untouched; tied zeros start from `1e-12 * max_cost`.
    /// Client distances are recomputed, the metric flag is inherited.
    pub fn perturb_distances(&self) -> Instance {
        let step = TIE_TOLERANCE * self.max_cost();
        let data = self.costs.as_slice();
        if step == 0.0 {
            // all costs zero: nothing to scale offsets against
            let mut inst = self.clone();
            inst.costs = Matrix::from_fn(self.m(), self.n(), |i, j| {
                (i * self.n() + j + 1) as f64 * TIE_TOLERANCE
            });
            inst.client_dist = client_distances(&inst.costs);
            return inst;
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.sort_by(|&a, &b| data[a].total_cmp(&data[b]).then(a.cmp(&b)));
        let tied_zeros = data.iter().filter(|&&v| v == 0.0).count() > 1;
        let mut out = data.to_vec();
        let mut prev: Option<f64> = None;
        for &idx in &order {
            let mut v = data[idx];
            if v == 0.0 && tied_zeros {
                v = step;
            }
            if let Some(p) = prev {
                v = v.max(p + step);
            }
            out[idx] = v;
            prev = Some(v);
        }
        let mut inst = self.clone();
        inst.costs = Matrix::from_flat(self.m(), self.n(), out);
        inst.client_dist = client_distances(&inst.costs);
        inst
    }
}

/// Checks `w` is non-increasing, non-negative and not all zero, then
/// rescales to `w_1 = 1`.
pub fn normalize_weights(weights: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    if weights.len() != n {
        return Err(Error::InvalidInstance(format!(
            "expected {n} weights, got {}",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidInstance(format!(
            "weight {w} is not a finite non-negative number"
        )));
    }
    if let Some(p) = weights.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::InvalidInstance(format!(
            "weights must be non-increasing (w[{}] = {} < w[{}] = {})",
            p,
            weights[p],
            p + 1,
            weights[p + 1]
        )));
    }
    let top = weights[0];
    if top == 0.0 {
        return Err(Error::InvalidInstance("all weights are zero".into()));
    }
    Ok(weights.into_iter().map(|w| w / top).collect())
}

pub fn rectangular_weights(n: usize, ell: usize) -> Vec<f64> {
    (0..n).map(|j| if j < ell { 1.0 } else { 0.0 }).collect()
}

pub fn weight_levels(weights: &[f64]) -> Vec<(f64, usize)> {
    let mut levels: Vec<(f64, usize)> = Vec::new();
    for (pos, &w) in weights.iter().enumerate() {
        match levels.last_mut() {
            Some((v, last)) if *v == w => *last = pos + 1,
            _ => levels.push((w, pos + 1)),
        }
    }
    levels
}

/// Sorts non-increasingly; ties keep their input (client) order.
pub fn sort_desc(values: &mut [f64]) {
    values.sort_by(|a, b| b.total_cmp(a));
}

pub fn sorted_dot(mut costs: Vec<f64>, weights: &[f64]) -> f64 {
    sort_desc(&mut costs);
    costs.iter().zip(weights).map(|(c, w)| c * w).sum()
}

fn client_distances(costs: &Matrix) -> Matrix {
    let (m, n) = (costs.rows(), costs.cols());
    Matrix::from_fn(n, n, |j, j2| {
        if j == j2 {
            0.0
        } else {
            (0..m)
                .map(|i| costs[(i, j)] + costs[(i, j2)])
                .fold(f64::INFINITY, f64::min)
        }
    })
}

/// A quadruple `(i, j, i2, j2)` with `c_ij > c_ij2 + c_i2j2 + c_i2j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricViolation {
    pub i: usize,
    pub j: usize,
    pub i2: usize,
    pub j2: usize,
    pub direct: f64,
    pub detour: f64,
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "c[{}][{}] = {} exceeds detour c[{}][{}] + c[{}][{}] + c[{}][{}] = {}",
            self.i,
            self.j,
            self.direct,
            self.i,
            self.j2,
            self.i2,
            self.j2,
            self.i2,
            self.j,
            self.detour
        )
    }
}

/// Bipartite triangle inequality scan; reports the first violation in
/// `(i, j, i2, j2)` lexicographic order.
pub fn validate_metric(costs: &Matrix) -> std::result::Result<(), MetricViolation> {
    let (m, n) = (costs.rows(), costs.cols());
    let slack = METRIC_TOLERANCE * costs.max();
    for i in 0..m {
        for j in 0..n {
            let direct = costs[(i, j)];
            for i2 in 0..m {
                for j2 in 0..n {
                    let detour = costs[(i, j2)] + costs[(i2, j2)] + costs[(i2, j)];
                    if direct > detour + slack {
                        return Err(MetricViolation {
                            i,
                            j,
                            i2,
                            j2,
                            direct,
                            detour,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Exactly `k` distinct facilities, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SolutionSet(Vec<usize>);

impl SolutionSet {
    pub fn new(inst: &Instance, mut open: Vec<usize>) -> Result<Self> {
        open.sort_unstable();
        open.dedup();
        let sol = SolutionSet(open);
        sol.check(inst)?;
        Ok(sol)
    }

    /// Sorted, de-duplicated, not checked against any instance.
    pub fn from_unchecked(mut open: Vec<usize>) -> Self {
        open.sort_unstable();
        open.dedup();
        SolutionSet(open)
    }

    pub fn facilities(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    fn check(&self, inst: &Instance) -> Result<()> {
        if let Some(&index) = self.0.iter().find(|&&i| i >= inst.m()) {
            return Err(Error::IndexOutOfRange { index, m: inst.m() });
        }
        if self.0.len() != inst.k() {
            return Err(Error::WrongSolutionSize {
                expected: inst.k(),
                got: self.0.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for SolutionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (p, i) in self.0.iter().enumerate() {
            if p > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

pub(crate) fn cmp_f64(a: &f64, b: &f64) -> Ordering {
    a.total_cmp(b)
}
