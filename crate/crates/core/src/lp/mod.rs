//! The k-median relaxation over a reduced cost function.
//!
//! ```text
//! minimize   sum_ij cr_ij x_ij
//! subject to x_ij <= y_i          for every allowed pair (i, j)
//!            sum_i x_ij = 1       for every client j
//!            sum_i y_i  = k
//!            0 <= x_ij, y_i <= 1
//!            x_ij = 0             for every forbidden pair
//! ```
//!
//! Forbidden pairs never get a column. The problem is handed to `minilp`
//! (dense bounded simplex), which is deterministic for a fixed input.

mod normalize;

use std::fmt::Write as _;

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::matrix::Matrix;
use crate::reductions::ReducedCostMatrix;

pub use normalize::normalize;

/// Values below this are snapped to zero after solving.
pub const SNAP_TOLERANCE: f64 = 1e-12;
/// Absolute slack accepted on the LP constraints.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// Pairs `(i, j)` whose assignment variable is fixed to zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ForbiddenPairs {
    m: usize,
    n: usize,
    mask: Vec<bool>,
}

impl ForbiddenPairs {
    pub fn none(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            mask: vec![false; m * n],
        }
    }

    pub fn from_pairs(m: usize, n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut f = Self::none(m, n);
        for (i, j) in pairs {
            f.forbid(i, j);
        }
        f
    }

    pub fn forbid(&mut self, i: usize, j: usize) {
        self.mask[i * self.n + j] = true;
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    reduced: Matrix,
    forbidden: ForbiddenPairs,
    k: usize,
}

pub fn build_lp(
    inst: &Instance,
    reduced: &ReducedCostMatrix,
    forbidden: &ForbiddenPairs,
) -> Result<LpProblem> {
    let want = inst.costs().shape_string();
    if !reduced.values().same_shape(inst.costs()) {
        return Err(Error::ShapeMismatch {
            expected: want,
            got: reduced.values().shape_string(),
        });
    }
    if forbidden.shape() != (inst.m(), inst.n()) {
        let (m, n) = forbidden.shape();
        return Err(Error::ShapeMismatch {
            expected: want,
            got: format!("{m}x{n}"),
        });
    }
    Ok(LpProblem {
        reduced: reduced.values().clone(),
        forbidden: forbidden.clone(),
        k: inst.k(),
    })
}

impl LpProblem {
    pub fn m(&self) -> usize {
        self.reduced.rows()
    }

    pub fn n(&self) -> usize {
        self.reduced.cols()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn reduced(&self) -> &Matrix {
        &self.reduced
    }

    pub fn forbidden(&self) -> &ForbiddenPairs {
        &self.forbidden
    }

    pub fn num_x_vars(&self) -> usize {
        self.m() * self.n() - self.forbidden.len()
    }

    pub fn num_y_vars(&self) -> usize {
        self.m()
    }

    /// Linking rows, one covering row per client and the cardinality row.
    pub fn num_constraints(&self) -> usize {
        self.num_x_vars() + self.n() + 1
    }

    /// CPLEX LP text rendering, for debugging.
    pub fn to_lp_text(&self) -> String {
        let mut s = String::from("\\ ordered k-median relaxation\nMinimize\n obj:");
        let mut first = true;
        for i in 0..self.m() {
            for j in 0..self.n() {
                if self.forbidden.contains(i, j) {
                    continue;
                }
                let sign = if first { " " } else { " + " };
                write!(s, "{sign}{} x_{i}_{j}", self.reduced[(i, j)]).unwrap();
                first = false;
            }
        }
        s.push_str("\nSubject To\n");
        for i in 0..self.m() {
            for j in 0..self.n() {
                if !self.forbidden.contains(i, j) {
                    writeln!(s, " link_{i}_{j}: x_{i}_{j} - y_{i} <= 0").unwrap();
                }
            }
        }
        for j in 0..self.n() {
            let terms: Vec<String> = (0..self.m())
                .filter(|&i| !self.forbidden.contains(i, j))
                .map(|i| format!("x_{i}_{j}"))
                .collect();
            writeln!(s, " serve_{j}: {} = 1", terms.join(" + ")).unwrap();
        }
        let ys: Vec<String> = (0..self.m()).map(|i| format!("y_{i}")).collect();
        writeln!(s, " open: {} = {}", ys.join(" + "), self.k).unwrap();
        s.push_str("Bounds\n");
        for i in 0..self.m() {
            writeln!(s, " 0 <= y_{i} <= 1").unwrap();
            for j in 0..self.n() {
                if !self.forbidden.contains(i, j) {
                    writeln!(s, " 0 <= x_{i}_{j} <= 1").unwrap();
                }
            }
        }
        s.push_str("End\n");
        s
    }
}

/// Fractional opening `y` and assignment `x`.
///
/// Rows of `x` and entries of `y` are facilities of the solution, which
/// after [`normalize`] may be co-located copies; `origin` maps each one
/// back to its input facility.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSolution {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub objective: f64,
    pub canonical: bool,
    pub origin: Vec<usize>,
}

impl FractionalSolution {
    pub fn num_facilities(&self) -> usize {
        self.y.len()
    }

    pub fn num_clients(&self) -> usize {
        self.x.cols()
    }

    /// Original-metric cost between solution facility `i` and client `j`.
    #[inline]
    pub fn cost(&self, inst: &Instance, i: usize, j: usize) -> f64 {
        inst.cost(self.origin[i], j)
    }

    /// `sum_i x_ij * f(c_ij)` for every client.
    pub fn average_costs(&self, inst: &Instance, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.num_clients())
            .map(|j| {
                (0..self.num_facilities())
                    .map(|i| self.x[(i, j)] * f(self.cost(inst, i, j)))
                    .sum()
            })
            .collect()
    }

    /// `sum_ij x_ij * table[origin(i)][j]` for an `m x n` cost table.
    pub fn cost_under(&self, table: &Matrix) -> f64 {
        let mut total = 0.0;
        for i in 0..self.num_facilities() {
            for j in 0..self.num_clients() {
                total += self.x[(i, j)] * table[(self.origin[i], j)];
            }
        }
        total
    }

    /// Total opening per input facility.
    pub fn original_openings(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (i, &y) in self.y.iter().enumerate() {
            out[self.origin[i]] += y;
        }
        out
    }

    /// Constraint check at [`FEASIBILITY_TOLERANCE`].
    pub fn check_feasible(&self, k: usize) -> Result<()> {
        let tol = FEASIBILITY_TOLERANCE;
        for (i, &y) in self.y.iter().enumerate() {
            if !(-tol..=1.0 + tol).contains(&y) {
                return Err(Error::Consistency(format!("y[{i}] = {y} outside [0, 1]")));
            }
            for j in 0..self.num_clients() {
                let x = self.x[(i, j)];
                if x < -tol || x > y + tol {
                    return Err(Error::Consistency(format!(
                        "x[{i}][{j}] = {x} violates 0 <= x <= y = {y}"
                    )));
                }
            }
        }
        for j in 0..self.num_clients() {
            let s: f64 = (0..self.num_facilities()).map(|i| self.x[(i, j)]).sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::Consistency(format!("client {j} served {s} != 1")));
            }
        }
        let total: f64 = self.y.iter().sum();
        if (total - k as f64).abs() > tol {
            return Err(Error::Consistency(format!("total opening {total} != k = {k}")));
        }
        Ok(())
    }

    /// `x_ij in {0, y_i}` exactly and every `y_i > 0`.
    pub fn is_canonical_form(&self) -> bool {
        self.y.iter().enumerate().all(|(i, &y)| {
            y > 0.0 && self.x.row(i).iter().all(|&x| x == 0.0 || x == y)
        })
    }
}

pub fn solve_lp(p: &LpProblem) -> Result<FractionalSolution> {
    let (m, n) = (p.m(), p.n());
    for j in 0..n {
        if (0..m).all(|i| p.forbidden.contains(i, j)) {
            return Err(Error::Infeasible);
        }
    }
    if p.k > m {
        return Err(Error::Infeasible);
    }

    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let y: Vec<Variable> = (0..m).map(|_| pb.add_var(0.0, (0.0, 1.0))).collect();
    let mut x: Vec<Option<Variable>> = vec![None; m * n];
    for i in 0..m {
        for j in 0..n {
            if !p.forbidden.contains(i, j) {
                x[i * n + j] = Some(pb.add_var(p.reduced[(i, j)], (0.0, 1.0)));
            }
        }
    }
    for i in 0..m {
        for j in 0..n {
            if let Some(v) = x[i * n + j] {
                pb.add_constraint([(v, 1.0), (y[i], -1.0)], ComparisonOp::Le, 0.0);
            }
        }
    }
    for j in 0..n {
        let row: Vec<(Variable, f64)> = (0..m).filter_map(|i| x[i * n + j]).map(|v| (v, 1.0)).collect();
        pb.add_constraint(&row, ComparisonOp::Eq, 1.0);
    }
    let all_y: Vec<(Variable, f64)> = y.iter().map(|&v| (v, 1.0)).collect();
    pb.add_constraint(&all_y, ComparisonOp::Eq, p.k as f64);

    let sol = match pb.solve() {
        Ok(s) => s,
        Err(minilp::Error::Infeasible) => return Err(Error::Infeasible),
        Err(e) => return Err(Error::Solver(e.to_string())),
    };

    let snap = |v: f64| {
        if v < SNAP_TOLERANCE {
            0.0
        } else {
            v.min(1.0)
        }
    };
    let yv: Vec<f64> = y.iter().map(|&v| snap(sol[v])).collect();
    let xm = Matrix::from_fn(m, n, |i, j| x[i * n + j].map_or(0.0, |v| snap(sol[v]).min(yv[i])));
    let mut objective = 0.0;
    for i in 0..m {
        for j in 0..n {
            objective += p.reduced[(i, j)] * xm[(i, j)];
        }
    }
    Ok(FractionalSolution {
        x: xm,
        y: yv,
        objective,
        canonical: false,
        origin: (0..m).collect(),
    })
}
