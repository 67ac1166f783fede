use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::matrix::Matrix;

use super::{FractionalSolution, FEASIBILITY_TOLERANCE, SNAP_TOLERANCE};

/// Brings a feasible solution into canonical form:
///
/// 1. with `y` fixed, every client is re-served greedily from its nearest
///    facilities (ties by index), saturating `x_ij` up to `y_i`;
/// 2. every facility is split into co-located copies whose openings are the
///    successive gaps between the distinct positive values of
///    `{x_ij}_j ∪ {y_i}`, a client with `x_ij = v_s` being served fully by
///    the first `s` copies;
/// 3. facilities without opening produce no copies.
///
/// Afterwards `x_ij ∈ {0, y_i}` holds exactly, and `origin` maps copies
/// back to input facilities. The objective field is carried over.
pub fn normalize(sol: &FractionalSolution, inst: &Instance) -> Result<FractionalSolution> {
    if sol.canonical {
        return Ok(sol.clone());
    }
    let (mf, n) = (sol.num_facilities(), sol.num_clients());
    if n != inst.n() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} clients", inst.n()),
            got: format!("{n} clients"),
        });
    }
    let y: Vec<f64> = sol
        .y
        .iter()
        .map(|&v| if v < SNAP_TOLERANCE { 0.0 } else { v.min(1.0) })
        .collect();
    let total: f64 = y.iter().sum();
    if (total - inst.k() as f64).abs() > FEASIBILITY_TOLERANCE {
        return Err(Error::Infeasible);
    }

    let x = greedy_assignment(sol, inst, &y)?;

    let mut copies_x: Vec<Vec<f64>> = Vec::new();
    let mut copies_y = Vec::new();
    let mut origin = Vec::new();
    for i in 0..mf {
        if y[i] == 0.0 {
            continue;
        }
        let levels = split_levels(x.row(i), y[i]);
        let first_copy = copies_y.len();
        let mut prev = 0.0;
        for &v in &levels {
            copies_y.push(v - prev);
            origin.push(sol.origin[i]);
            copies_x.push(vec![0.0; n]);
            prev = v;
        }
        for j in 0..n {
            let xv = x[(i, j)];
            if xv == 0.0 {
                continue;
            }
            let s = levels
                .iter()
                .position(|&v| v >= xv - SNAP_TOLERANCE)
                .expect("the top level is y_i, which bounds every x_ij");
            for c in first_copy..=first_copy + s {
                copies_x[c][j] = copies_y[c];
            }
        }
    }

    let rows = copies_y.len();
    let x = Matrix::from_flat(rows, n, copies_x.into_iter().flatten().collect());
    Ok(FractionalSolution {
        x,
        y: copies_y,
        objective: sol.objective,
        canonical: true,
        origin,
    })
}

fn greedy_assignment(sol: &FractionalSolution, inst: &Instance, y: &[f64]) -> Result<Matrix> {
    let (mf, n) = (sol.num_facilities(), sol.num_clients());
    let mut x = Matrix::zeros(mf, n);
    let mut order: Vec<usize> = (0..mf).filter(|&i| y[i] > 0.0).collect();
    for j in 0..n {
        order.sort_by(|&a, &b| {
            sol.cost(inst, a, j)
                .total_cmp(&sol.cost(inst, b, j))
                .then(a.cmp(&b))
        });
        let mut remaining = 1.0;
        for &i in &order {
            if remaining <= SNAP_TOLERANCE {
                break;
            }
            let take = y[i].min(remaining);
            x[(i, j)] = take;
            remaining -= take;
        }
        if remaining > FEASIBILITY_TOLERANCE {
            return Err(Error::Infeasible);
        }
    }
    Ok(x)
}

/// Distinct positive values of `xs ∪ {y}` ascending; values within the snap
/// tolerance of each other collapse onto the larger one, so the last level
/// is exactly `y`.
fn split_levels(xs: &[f64], y: f64) -> Vec<f64> {
    let mut vals: Vec<f64> = xs.iter().copied().filter(|&v| v > 0.0).collect();
    vals.push(y);
    vals.sort_by(f64::total_cmp);
    let mut levels: Vec<f64> = Vec::with_capacity(vals.len());
    for v in vals {
        match levels.last_mut() {
            Some(last) if v - *last <= SNAP_TOLERANCE => *last = v,
            _ => levels.push(v),
        }
    }
    levels
}
