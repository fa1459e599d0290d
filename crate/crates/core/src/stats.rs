//! Compensated reductions for Monte-Carlo aggregation.
//!
//! Per-trial values are always reduced sequentially in trial order, so the
//! result is bit-identical no matter how many rayon workers produced them.

/// Neumaier-compensated sum (Kahan variant that also survives terms larger
/// than the running total).
pub(crate) fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Sample mean and standard error of the mean (unbiased variance, two-pass).
/// A single sample has zero standard error by convention.
pub(crate) fn mean_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n > 0, "mean of an empty sample");
    let mean = kahan_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
