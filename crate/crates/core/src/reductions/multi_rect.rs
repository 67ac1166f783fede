use itertools::Itertools;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::matrix::Matrix;
use crate::oracle::binomial;

use super::{threshold_candidates, ReducedCostMatrix};

/// `cr_ij = w̄_r * c_ij` for the bracket `T_r <= c_ij < T_{r-1}` (with
/// `T_0 = ∞`). Costs below the last threshold take the smallest level.
pub fn multi_rect_cost(costs: &Matrix, thresholds: &[f64], levels: &[f64]) -> Result<ReducedCostMatrix> {
    if thresholds.is_empty() || thresholds.len() != levels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} thresholds for {} weight levels",
            thresholds.len(),
            levels.len()
        )));
    }
    if thresholds.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "thresholds must be strictly decreasing".into(),
        ));
    }
    if levels.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "weight levels must be strictly decreasing".into(),
        ));
    }
    let last = *levels.last().unwrap();
    Ok(ReducedCostMatrix::new_unchecked(costs.map(|c| {
        let w = thresholds
            .iter()
            .position(|&t| c >= t)
            .map_or(last, |r| levels[r]);
        w * c
    })))
}

/// All strictly decreasing `r`-tuples over the threshold candidates,
/// enumerated lazily in lexicographic order of candidate rank.
pub fn threshold_tuple_candidates(
    inst: &Instance,
    r: usize,
    cap: u64,
) -> Result<impl Iterator<Item = Vec<f64>>> {
    if r == 0 {
        return Err(Error::InvalidArgument("need at least one threshold".into()));
    }
    let mut candidates = threshold_candidates(inst);
    candidates.reverse();
    let count = binomial(candidates.len(), r);
    if count > cap as u128 {
        return Err(Error::CapExceeded {
            what: "threshold tuples",
            count,
            cap,
        });
    }
    Ok(candidates.into_iter().combinations(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::line_instance;
    use proptest::prelude::*;

    #[test]
    fn single_level_at_zero_is_identity() {
        let inst = line_instance(1, vec![1.0; 4]);
        let r = multi_rect_cost(inst.costs(), &[0.0], &[1.0]).unwrap();
        assert_eq!(r.values(), inst.costs());
    }

    #[test]
    fn bracket_lookup() {
        let c = Matrix::from_rows(&[vec![6.0, 3.0, 1.0, 5.0, 2.0]]).unwrap();
        let r = multi_rect_cost(&c, &[5.0, 2.0], &[1.0, 0.5]).unwrap();
        assert_eq!(r.values().row(0), &[6.0, 1.5, 0.5, 5.0, 1.0]);
    }

    #[test]
    fn rejects_non_monotone_inputs() {
        let c = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(multi_rect_cost(&c, &[1.0, 2.0], &[1.0, 0.5]).is_err());
        assert!(multi_rect_cost(&c, &[2.0, 1.0], &[0.5, 1.0]).is_err());
        assert!(multi_rect_cost(&c, &[2.0], &[1.0, 0.5]).is_err());
    }

    #[test]
    fn tuple_counts() {
        let c = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let inst = Instance::new(c, 1, vec![1.0, 1.0]).unwrap();
        // candidates {0, 1, 2}
        let tuples: Vec<_> = threshold_tuple_candidates(&inst, 2, 100).unwrap().collect();
        assert_eq!(tuples, vec![vec![2.0, 1.0], vec![2.0, 0.0], vec![1.0, 0.0]]);
        let singles: Vec<_> = threshold_tuple_candidates(&inst, 1, 100).unwrap().collect();
        assert_eq!(singles, vec![vec![2.0], vec![1.0], vec![0.0]]);

        let line = line_instance(2, vec![1.0; 4]);
        assert_eq!(threshold_tuple_candidates(&line, 2, 100).unwrap().count(), 28);
        assert!(matches!(
            threshold_tuple_candidates(&line, 2, 27),
            Err(Error::CapExceeded { count: 28, .. })
        ));
    }

    proptest! {
        #[test]
        fn multi_rect_is_reduced(
            raw in proptest::collection::vec(0.0f64..20.0, 12),
            mut ts in proptest::collection::btree_set(0u32..40, 1..4),
            ws in proptest::collection::vec(0.01f64..1.0, 3),
        ) {
            let c = Matrix::from_flat(3, 4, raw);
            let mut thresholds: Vec<f64> = std::mem::take(&mut ts).into_iter().map(|t| t as f64 / 2.0).collect();
            thresholds.reverse();
            let r = thresholds.len();
            let mut levels: Vec<f64> = ws[..r].to_vec();
            levels.sort_by(|a, b| b.total_cmp(a));
            levels.dedup();
            prop_assume!(levels.len() == r);
            levels[0] = 1.0;
            prop_assume!(levels.windows(2).all(|w| w[1] < w[0]));
            let red = multi_rect_cost(&c, &thresholds, &levels).unwrap();
            prop_assert!(red.check(&c, None).is_ok());
        }
    }
}
