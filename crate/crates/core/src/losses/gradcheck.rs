/// Central-difference gradient check.
///
/// Returns `max_k |analytic_k - numeric_k| / max(max_k |analytic_k|, max_k |numeric_k|)`,
/// the largest deviation relative to the gradient's scale. A zero gradient
/// on both sides reports 0.
pub fn grad_check(f: impl Fn(&[f64]) -> (f64, Vec<f64>), x: &[f64], h: f64) -> f64 {
    assert!(h > 0.0, "step must be positive");
    let (_, analytic) = f(x);
    assert_eq!(analytic.len(), x.len(), "gradient length mismatch");
    let mut probe = x.to_vec();
    let numeric: Vec<f64> = (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = f(&probe).0;
            probe[k] = x[k] - h;
            let down = f(&probe).0;
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect();
    let scale = analytic.iter().chain(&numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    analytic.iter().zip(&numeric).map(|(a, n)| (a - n).abs()).fold(0.0, f64::max) / scale
}
