//! Exhaustive exact solver used to certify approximation ratios.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::instance::{Instance, SolutionSet};

pub const DEFAULT_ORACLE_BUDGET: u64 = 1_000_000;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, t| acc * (n - t) as u128 / (t + 1) as u128)
}

/// Minimizes the ordered cost over all `k`-subsets. Subsets are visited in
/// lexicographic order and only a strictly better cost replaces the
/// incumbent, so ties resolve to the lexicographically smallest subset.
pub fn brute_force_opt(inst: &Instance, budget: u64) -> Result<(SolutionSet, f64)> {
    let count = binomial(inst.m(), inst.k());
    if count > budget as u128 {
        return Err(Error::CapExceeded {
            what: "oracle subsets",
            count,
            cap: budget,
        });
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for open in (0..inst.m()).combinations(inst.k()) {
        let cost = inst.ordered_cost_of(&open, inst.weights());
        if best.as_ref().is_none_or(|(_, b)| cost < *b) {
            best = Some((open, cost));
        }
    }
    let (open, cost) = best.expect("k <= m guarantees at least one subset");
    Ok((SolutionSet::new(inst, open)?, cost))
}

/// Every `k`-subset with its ordered cost, in lexicographic order.
pub fn enumerate_costs(inst: &Instance, budget: u64) -> Result<Vec<(Vec<usize>, f64)>> {
    let count = binomial(inst.m(), inst.k());
    if count > budget as u128 {
        return Err(Error::CapExceeded {
            what: "oracle subsets",
            count,
            cap: budget,
        });
    }
    Ok((0..inst.m())
        .combinations(inst.k())
        .map(|open| {
            let c = inst.ordered_cost_of(&open, inst.weights());
            (open, c)
        })
        .collect())
}
