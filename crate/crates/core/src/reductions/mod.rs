//! Reduced cost functions and the guess spaces that produce them.
//!
//! A reduced cost function is dominated by the metric (`cr <= c`) and
//! preserves its order (`c_ij <= c_i'j'` implies `cr_ij <= cr_i'j'`).
//! Every constructor here returns a [`ReducedCostMatrix`]; [`ReducedCostMatrix::check`]
//! verifies both properties by a full scan.

mod buckets;
mod multi_rect;
mod weights;

use crate::error::{Error, Result};
use crate::instance::{cmp_f64, Instance};
use crate::lp::ForbiddenPairs;
use crate::matrix::Matrix;

pub use buckets::{
    bucketed_cost, build_buckets, expand_guess, log_ceil, weight_guess_candidates,
    DistanceBuckets, WeightGrid, WeightGuess, WeightGuesses,
};
pub use multi_rect::{multi_rect_cost, threshold_tuple_candidates};
pub use weights::{bucket_weights, distinct_count};

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedCostMatrix(Matrix);

impl ReducedCostMatrix {
    /// Wraps a matrix without checking the reduced-cost properties.
    pub fn new_unchecked(values: Matrix) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &Matrix {
        &self.0
    }

    /// Domination and order-preservation against `costs`, restricted to
    /// pairs that are not forbidden.
    pub fn check(&self, costs: &Matrix, forbidden: Option<&ForbiddenPairs>) -> Result<()> {
        if !self.0.same_shape(costs) {
            return Err(Error::ShapeMismatch {
                expected: costs.shape_string(),
                got: self.0.shape_string(),
            });
        }
        let tol = 1e-12 * costs.max().max(1.0);
        let mut pairs = Vec::with_capacity(costs.rows() * costs.cols());
        for i in 0..costs.rows() {
            for j in 0..costs.cols() {
                if forbidden.is_some_and(|f| f.contains(i, j)) {
                    continue;
                }
                let (c, r) = (costs[(i, j)], self.0[(i, j)]);
                if r > c + tol || r < -tol {
                    return Err(Error::Consistency(format!(
                        "reduced cost {r} at ({i}, {j}) is not within [0, {c}]"
                    )));
                }
                pairs.push((c, r, i, j));
            }
        }
        // equal costs must map to equal reduced costs: order ties by
        // decreasing reduced cost so that any mismatch shows up as a descent
        pairs.sort_by(|a, b| cmp_f64(&a.0, &b.0).then(cmp_f64(&b.1, &a.1)));
        let mut high = f64::NEG_INFINITY;
        for &(c, r, i, j) in &pairs {
            if r + tol < high {
                return Err(Error::Consistency(format!(
                    "reduced cost {r} at ({i}, {j}) (cost {c}) is below {high} of a smaller cost"
                )));
            }
            high = high.max(r);
        }
        Ok(())
    }
}

/// `c^T_ij = c_ij` when `c_ij >= T`, else 0.
pub fn threshold_cost(costs: &Matrix, t: f64) -> ReducedCostMatrix {
    ReducedCostMatrix(costs.map(|c| if c >= t { c } else { 0.0 }))
}

/// Sorted distinct costs together with 0; costs within half the instance's
/// tie tolerance count as one value, so perturbed ties stay apart.
pub fn threshold_candidates(inst: &Instance) -> Vec<f64> {
    let tol = 0.5 * inst.tie_tolerance();
    let mut vals: Vec<f64> = inst.costs().as_slice().to_vec();
    vals.push(0.0);
    vals.sort_by(cmp_f64);
    let mut out: Vec<f64> = Vec::with_capacity(vals.len());
    for v in vals {
        if out.last().is_none_or(|&last| v - last > tol) {
            out.push(v);
        }
    }
    out
}
