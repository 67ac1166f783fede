//! Random instance generators.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{rectangular_weights, Instance, PointSet};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Uniform points in the unit square.
    Euclidean,
    /// Random bipartite edge lengths closed under shortest paths.
    RandomMetric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightShape {
    /// `ell` ones followed by zeros.
    Rect(usize),
    /// `w_j = ratio^(j-1)`.
    Geom(f64),
    Custom(Vec<f64>),
}

impl WeightShape {
    pub fn weights(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            WeightShape::Rect(ell) => {
                if *ell == 0 || *ell > n {
                    return Err(Error::WidthOutOfRange { ell: *ell, n });
                }
                Ok(rectangular_weights(n, *ell))
            }
            WeightShape::Geom(r) => {
                if !(*r > 0.0 && *r <= 1.0) {
                    return Err(Error::InvalidArgument(format!("ratio {r} must be in (0, 1]")));
                }
                Ok((0..n).map(|j| r.powi(j as i32)).collect())
            }
            WeightShape::Custom(w) => {
                if w.len() != n {
                    return Err(Error::InvalidArgument(format!("{} weights for {n} clients", w.len())));
                }
                Ok(w.clone())
            }
        }
    }

    /// Whitespace-separated reals.
    pub fn read_custom(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let w = text
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("`{t}` in weight file is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(WeightShape::Custom(w))
    }
}

pub fn generate(kind: MetricKind, m: usize, n: usize, k: usize, shape: &WeightShape, seed: u64) -> Result<Instance> {
    if m == 0 || n == 0 || k == 0 || k > m {
        return Err(Error::InvalidArgument(format!(
            "need m, n >= 1 and 1 <= k <= m (got m = {m}, n = {n}, k = {k})"
        )));
    }
    let weights = shape.weights(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        MetricKind::Euclidean => {
            let coords = (0..m + n)
                .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()])
                .collect();
            Instance::from_points(PointSet { dim: 2, coords }, m, k, weights)
        }
        MetricKind::RandomMetric => Instance::new(random_metric(m, n, &mut rng), k, weights),
    }
}

/// Edge lengths uniform in `[1, 10)` on the complete bipartite graph, then
/// shortest-path distances between facilities and clients.
pub fn random_metric<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Matrix {
    let v = m + n;
    let mut d = vec![vec![f64::INFINITY; v]; v];
    for (a, row) in d.iter_mut().enumerate() {
        row[a] = 0.0;
    }
    for i in 0..m {
        for j in 0..n {
            let len = rng.gen_range(1.0..10.0);
            d[i][m + j] = len;
            d[m + j][i] = len;
        }
    }
    for via in 0..v {
        for a in 0..v {
            for b in 0..v {
                let alt = d[a][via] + d[via][b];
                if alt < d[a][b] {
                    d[a][b] = alt;
                }
            }
        }
    }
    Matrix::from_fn(m, n, |i, j| d[i][m + j])
}
