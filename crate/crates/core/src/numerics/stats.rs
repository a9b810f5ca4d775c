//! Sample mean and standard error.

/// Mean and standard error of the mean. The variance is accumulated around
/// the first sample, so a constant sample gives exactly zero error.
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let shift = xs[0];
    let mut s = 0.0;
    let mut s2 = 0.0;
    for &x in xs {
        let d = x - shift;
        s += d;
        s2 += d * d;
    }
    let nf = n as f64;
    let mean = shift + s / nf;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = ((s2 - s * s / nf) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let (_, se) = mean_and_std_error(xs);
    se * se * xs.len() as f64
}
