use super::buckets::power_floor_exponent;

/// Rounds each weight after the first down to a power of `1 + eps`, and
/// zeroes weights at or below `eps * w_1 / n`.
pub fn bucket_weights(w: &[f64], eps: f64, n: usize) -> Vec<f64> {
    assert!(eps > 0.0, "eps must be positive");
    let Some(&top) = w.first() else {
        return Vec::new();
    };
    let cutoff = eps * top / n as f64;
    let base = 1.0 + eps;
    let mut out = Vec::with_capacity(w.len());
    out.push(top);
    for &wj in &w[1..] {
        if wj > cutoff {
            out.push(base.powi(power_floor_exponent(wj, base)));
        } else {
            out.push(0.0);
        }
    }
    out
}

pub fn distinct_count(w: &[f64]) -> usize {
    let mut v: Vec<f64> = w.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}
