use rand::Rng;

use crate::error::{Error, Result};
use crate::lp::SNAP_TOLERANCE;

/// Node kinds of the laminar family, processed in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Bundle,
    Pair,
    Root,
}

/// One set of the laminar family: the facilities below it.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminarNode {
    pub kind: NodeKind,
    pub facilities: Vec<usize>,
}

/// Bundles, then matched pairs of bundles, then the root over every facility.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminarForest {
    nodes: Vec<LaminarNode>,
    num_facilities: usize,
}

impl LaminarForest {
    pub fn new(bundles: &[Vec<usize>], pairs: &[(usize, usize)], num_facilities: usize) -> Self {
        let mut nodes: Vec<LaminarNode> = bundles
            .iter()
            .map(|b| LaminarNode {
                kind: NodeKind::Bundle,
                facilities: b.clone(),
            })
            .collect();
        for &(a, b) in pairs {
            let mut f = bundles[a].clone();
            f.extend_from_slice(&bundles[b]);
            nodes.push(LaminarNode {
                kind: NodeKind::Pair,
                facilities: f,
            });
        }
        nodes.push(LaminarNode {
            kind: NodeKind::Root,
            facilities: (0..num_facilities).collect(),
        });
        Self {
            nodes,
            num_facilities,
        }
    }

    pub fn nodes(&self) -> &[LaminarNode] {
        &self.nodes
    }

    /// Any two nodes are nested or disjoint.
    pub fn is_laminar(&self) -> bool {
        let sets: Vec<Vec<bool>> = self
            .nodes
            .iter()
            .map(|n| {
                let mut s = vec![false; self.num_facilities];
                n.facilities.iter().for_each(|&i| s[i] = true);
                s
            })
            .collect();
        for a in 0..sets.len() {
            for b in a + 1..sets.len() {
                let both = (0..self.num_facilities).any(|i| sets[a][i] && sets[b][i]);
                let a_in_b = (0..self.num_facilities).all(|i| !sets[a][i] || sets[b][i]);
                let b_in_a = (0..self.num_facilities).all(|i| !sets[b][i] || sets[a][i]);
                if both && !a_in_b && !b_in_a {
                    return false;
                }
            }
        }
        true
    }

    /// Rounds `values` in place to a 0/1 vector with the same marginals.
    pub fn round<R: Rng + ?Sized>(&self, values: &mut [f64], rng: &mut R) -> Result<()> {
        if values.len() != self.num_facilities {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", self.num_facilities),
                got: format!("{} values", values.len()),
            });
        }
        values.iter_mut().for_each(|v| *v = snap(*v));
        for node in &self.nodes {
            round_scope(values, &node.facilities, rng);
        }
        // Σy = k leaves at most a rounding residue here
        for v in values.iter_mut() {
            if is_fractional(*v) {
                let r = v.round();
                if (r - *v).abs() > 1e-6 {
                    return Err(Error::Consistency(format!(
                        "fractional leftover {v} after dependent rounding"
                    )));
                }
                *v = r;
            }
        }
        Ok(())
    }
}

fn snap(v: f64) -> f64 {
    if v.abs() <= SNAP_TOLERANCE {
        0.0
    } else if (1.0 - v).abs() <= SNAP_TOLERANCE {
        1.0
    } else {
        v
    }
}

fn is_fractional(v: f64) -> bool {
    v != 0.0 && v != 1.0
}

/// Pairwise transfers inside `scope` until at most one value there is
/// fractional.
fn round_scope<R: Rng + ?Sized>(values: &mut [f64], scope: &[usize], rng: &mut R) {
    let mut pending: Option<usize> = None;
    for &i in scope {
        if !is_fractional(values[i]) {
            continue;
        }
        let Some(p) = pending else {
            pending = Some(i);
            continue;
        };
        let (a, b) = (values[p], values[i]);
        let d1 = (1.0 - a).min(b);
        let d2 = a.min(1.0 - b);
        let (na, nb) = if rng.gen::<f64>() * (d1 + d2) < d2 {
            (a + d1, b - d1)
        } else {
            (a - d2, b + d2)
        };
        values[p] = snap(na);
        values[i] = snap(nb);
        log::trace!("transfer f{p} {a:.6} -> {:.6}, f{i} {b:.6} -> {:.6}", values[p], values[i]);
        pending = if is_fractional(values[p]) {
            Some(p)
        } else if is_fractional(values[i]) {
            Some(i)
        } else {
            None
        };
    }
}
