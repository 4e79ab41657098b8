//! Shared reference implementations for integration tests.

/// O(length * lags) evaluation of the sliding-dot-product definition:
/// `out[s] = sum_m template[m] * clicks[m + s]` for `s` in `0 ..= 2 * d_max`.
pub fn direct_correlate(template: &[f64], clicks: &[bool], d_max: usize) -> Vec<f64> {
    assert_eq!(
        clicks.len(),
        template.len() + 2 * d_max,
        "padded record length"
    );
    (0..=2 * d_max)
        .map(|s| {
            template
                .iter()
                .enumerate()
                .filter(|&(m, _)| clicks[m + s])
                .map(|(_, &t)| t)
                .sum()
        })
        .collect()
}
