//! Geometric distance classes and average-weight guessing.
//!
//! For a guessed largest connection cost `c_max`, distances are split into
//! `S + 1` classes with `S = ⌈log_{1+ε}(n/ε)⌉`:
//! `D_s = (c_max (1+ε)^-(s+1), c_max (1+ε)^-s]` for `s < S` and
//! `D_S = [0, c_max (1+ε)^-S]`. A guess assigns one weight from a power
//! grid to each class, non-increasing in `s`.

use crate::error::{Error, Result};
use crate::lp::ForbiddenPairs;
use crate::matrix::Matrix;
use crate::oracle::binomial;

use super::ReducedCostMatrix;

const BOUNDARY_NUDGE: f64 = 1e-12;
const MAX_NUDGES: usize = 3;
/// Relative closeness at which a distance counts as sitting on a boundary;
/// tighter than one nudge step.
const COINCIDENCE: f64 = 1e-13;
const EXACT: f64 = 1e-12;

/// Smallest `s >= 0` with `base^s >= target` (exact powers are recognized
/// despite rounding).
pub fn log_ceil(target: f64, base: f64) -> usize {
    let mut s = 0;
    let mut p = 1.0;
    while p < target * (1.0 - EXACT) {
        p *= base;
        s += 1;
    }
    s
}

/// Largest integer `t` with `base^t <= w`, for `w > 0`.
pub(super) fn power_floor_exponent(w: f64, base: f64) -> i32 {
    let mut t = (w.ln() / base.ln()).floor() as i32;
    while base.powi(t + 1) <= w * (1.0 + EXACT) {
        t += 1;
    }
    while base.powi(t) > w * (1.0 + EXACT) {
        t -= 1;
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceBuckets {
    c_max: f64,
    eps: f64,
    last: usize,
    /// `bounds[s]` is the (nudged) upper end of class `s`, `s = 0..=S`.
    bounds: Vec<f64>,
    nudges: usize,
}

pub fn build_buckets(c_max: f64, eps: f64, n: usize, distances: &[f64]) -> Result<DistanceBuckets> {
    if !(c_max > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "buckets need c_max > 0 and eps > 0 (got {c_max}, {eps})"
        )));
    }
    let last = log_ceil(n as f64 / eps, 1.0 + eps);
    let raw: Vec<f64> = (0..=last)
        .map(|s| c_max * (1.0 + eps).powi(-(s as i32)))
        .collect();
    let mut bounds = raw.clone();
    for nudges in 1..=MAX_NUDGES {
        let factor = (1.0 + BOUNDARY_NUDGE).powi(nudges as i32);
        for (b, r) in bounds.iter_mut().zip(&raw) {
            *b = r * factor;
        }
        let clash = distances.iter().any(|&d| {
            d <= c_max && bounds.iter().any(|&b| (d - b).abs() <= COINCIDENCE * b)
        });
        if !clash {
            return Ok(DistanceBuckets {
                c_max,
                eps,
                last,
                bounds,
                nudges,
            });
        }
    }
    Err(Error::Consistency(format!(
        "could not move class boundaries off the input distances after {MAX_NUDGES} nudges"
    )))
}

impl DistanceBuckets {
    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `S`; classes are `0..=S`.
    pub fn last_class(&self) -> usize {
        self.last
    }

    pub fn num_classes(&self) -> usize {
        self.last + 1
    }

    pub fn nudges(&self) -> usize {
        self.nudges
    }

    pub fn c_min(&self, n: usize) -> f64 {
        self.eps * self.c_max / n as f64
    }

    /// Upper end of class `s` (inclusive).
    pub fn sup(&self, s: usize) -> f64 {
        self.bounds[s]
    }

    /// Lower end of class `s` (exclusive unless `s = S`, where it is 0).
    pub fn inf(&self, s: usize) -> f64 {
        if s == self.last {
            0.0
        } else {
            self.bounds[s + 1]
        }
    }

    /// Class of a distance, `None` above `c_max`.
    pub fn class_of(&self, d: f64) -> Option<usize> {
        if d > self.c_max {
            return None;
        }
        Some((0..self.last).find(|&s| d > self.bounds[s + 1]).unwrap_or(self.last))
    }

    /// Sorted classes that contain at least one of `distances`.
    pub fn occupied(&self, distances: &[f64]) -> Vec<usize> {
        let mut used = vec![false; self.num_classes()];
        for &d in distances {
            if let Some(s) = self.class_of(d) {
                used[s] = true;
            }
        }
        (0..self.num_classes()).filter(|&s| used[s]).collect()
    }
}

/// Weights `{(1+ε)^-t : 0 <= t <= t_max} ∪ {0}`, anchored at `w_1 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightGrid {
    pub eps: f64,
    pub t_max: usize,
}

impl WeightGrid {
    /// `t_max = ⌈log_{1+ε}(n/ε)⌉`.
    pub fn for_clients(n: usize, eps: f64) -> Self {
        Self {
            eps,
            t_max: log_ceil(n as f64 / eps, 1.0 + eps),
        }
    }

    pub fn num_levels(&self) -> usize {
        self.t_max + 2
    }

    /// Level 0 is 1, level `t_max + 1` is 0.
    pub fn value(&self, level: usize) -> f64 {
        if level > self.t_max {
            0.0
        } else {
            (1.0 + self.eps).powi(-(level as i32))
        }
    }

    /// Smallest grid value `>= w` (weights below the floor collapse onto it).
    pub fn round_up(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        (0..=self.t_max)
            .rev()
            .map(|t| self.value(t))
            .find(|&v| v >= w * (1.0 - EXACT))
            .unwrap_or(1.0)
    }
}

/// Guessed weight per distance class, non-increasing in the class index.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGuess(pub Vec<f64>);

impl WeightGuess {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Lazy depth-first enumeration of non-increasing grid vectors.
#[derive(Debug, Clone)]
pub struct WeightGuesses {
    grid: WeightGrid,
    current: Option<Vec<usize>>,
}

impl Iterator for WeightGuesses {
    type Item = WeightGuess;

    fn next(&mut self) -> Option<WeightGuess> {
        let levels = self.current.as_mut()?;
        let out = WeightGuess(levels.iter().map(|&l| self.grid.value(l)).collect());
        let top = self.grid.num_levels() - 1;
        match levels.iter().rposition(|&l| l < top) {
            Some(p) => {
                let v = levels[p] + 1;
                levels[p..].iter_mut().for_each(|l| *l = v);
            }
            None => self.current = None,
        }
        Some(out)
    }
}

pub fn weight_guess_candidates(num_classes: usize, grid: WeightGrid, cap: u64) -> Result<WeightGuesses> {
    let count = binomial(num_classes + grid.num_levels() - 1, num_classes);
    if count > cap as u128 {
        return Err(Error::CapExceeded {
            what: "weight guesses",
            count,
            cap,
        });
    }
    Ok(WeightGuesses {
        grid,
        current: Some(vec![0; num_classes]),
    })
}

/// Spreads a guess over a subset of classes to all classes; a class outside
/// the subset copies the nearest listed class before it (or 1 if none).
pub fn expand_guess(classes: &[usize], partial: &WeightGuess, num_classes: usize) -> WeightGuess {
    let mut out = Vec::with_capacity(num_classes);
    let mut current = 1.0;
    let mut next = 0;
    for s in 0..num_classes {
        if next < classes.len() && classes[next] == s {
            current = partial.0[next];
            next += 1;
        }
        out.push(current);
    }
    WeightGuess(out)
}

/// `cr_ij = w(c_ij) * c_ij` with `w` the guess of the class of `c_ij`;
/// pairs above `c_max` are forbidden and get `cr = 0`.
pub fn bucketed_cost(
    costs: &Matrix,
    buckets: &DistanceBuckets,
    guess: &WeightGuess,
) -> Result<(ReducedCostMatrix, ForbiddenPairs)> {
    if guess.0.len() != buckets.num_classes() {
        return Err(Error::InvalidArgument(format!(
            "guess has {} entries for {} classes",
            guess.0.len(),
            buckets.num_classes()
        )));
    }
    if guess.0.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("guess must be non-increasing".into()));
    }
    let mut forbidden = ForbiddenPairs::none(costs.rows(), costs.cols());
    let reduced = Matrix::from_fn(costs.rows(), costs.cols(), |i, j| {
        let c = costs[(i, j)];
        match buckets.class_of(c) {
            Some(s) => guess.0[s] * c,
            None => {
                forbidden.forbid(i, j);
                0.0
            }
        }
    });
    Ok((ReducedCostMatrix::new_unchecked(reduced), forbidden))
}
