//! Small statistics toolbox: two-sample Kolmogorov-Smirnov distance,
//! mean / standard error, quantiles, histograms, ordinary least squares.

use nalgebra::DMatrix;

/// Two-sample KS statistic `sup_x |F_a(x) - F_b(x)|`.
///
/// Non-finite values are ignored. Panics if either sample is empty.
pub fn two_sample_ks(sample_a: &[f64], sample_b: &[f64]) -> f64 {
    let mut a: Vec<f64> = sample_a.iter().copied().filter(|x| x.is_finite()).collect();
    let mut b: Vec<f64> = sample_b.iter().copied().filter(|x| x.is_finite()).collect();
    assert!(!a.is_empty() && !b.is_empty(), "KS needs nonempty samples");
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut ia, mut ib) = (0usize, 0usize);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut stat = 0.0f64;
    while ia < a.len() && ib < b.len() {
        let x = a[ia].min(b[ib]);
        while ia < a.len() && a[ia] <= x {
            ia += 1;
        }
        while ib < b.len() && b[ib] <= x {
            ib += 1;
        }
        fa = ia as f64 / na;
        fb = ib as f64 / nb;
        stat = stat.max((fa - fb).abs());
    }
    let _ = (fa, fb);
    stat
}

/// Sampling noise scale of the two-sample KS statistic.
pub fn ks_noise_scale(n_a: usize, n_b: usize) -> f64 {
    ((n_a + n_b) as f64 / (n_a as f64 * n_b as f64)).sqrt()
}

/// Sample mean and its standard error `sd / sqrt(n)`.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n > 0);
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Linear-interpolation quantile of a *sorted* slice, `q` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Equal-width histogram over `[lo, hi]`; values outside are clamped into the
/// edge bins.
pub fn histogram(xs: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<(f64, usize)> {
    assert!(bins > 0 && hi > lo);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in xs {
        let idx = (((x - lo) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
        counts[idx] += 1;
    }
    counts.into_iter().enumerate().map(|(i, c)| (lo + i as f64 * width, c)).collect()
}

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let ss_res: f64 =
        x.iter().zip(y).map(|(u, v)| (v - (slope * u + intercept)).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    LinearFit { slope, intercept, r_squared }
}

/// Sample covariance matrix of d-dimensional points, with a per-entry
/// standard error (sd of the centered products over `sqrt(n)`).
pub fn covariance_with_se(points: &[Vec<f64>]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = points.len();
    assert!(n >= 2, "need at least two points");
    let d = points[0].len();
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, &x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut sq = DMatrix::<f64>::zeros(d, d);
    for p in points {
        for k in 0..d {
            for l in 0..d {
                let w = (p[k] - mean[k]) * (p[l] - mean[l]);
                cov[(k, l)] += w;
                sq[(k, l)] += w * w;
            }
        }
    }
    let nf = n as f64;
    let mut se = DMatrix::<f64>::zeros(d, d);
    for k in 0..d {
        for l in 0..d {
            let m1 = cov[(k, l)] / nf;
            let var = (sq[(k, l)] / nf - m1 * m1).max(0.0);
            se[(k, l)] = (var / nf).sqrt();
            cov[(k, l)] = m1 * nf / (nf - 1.0);
        }
    }
    (cov, se)
}

/// Mean and standard error of a correlated sequence via non-overlapping
/// batch means.
pub fn batch_means(xs: &[f64], n_batches: usize) -> (f64, f64) {
    assert!(n_batches >= 2 && xs.len() >= n_batches);
    let batch = xs.len() / n_batches;
    let means: Vec<f64> = (0..n_batches)
        .map(|b| xs[b * batch..(b + 1) * batch].iter().sum::<f64>() / batch as f64)
        .collect();
    mean_se(&means)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ks_identical_samples_is_zero() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(two_sample_ks(&a, &a), 0.0);
    }

    #[test]
    fn ks_disjoint_samples_is_one() {
        let a = [1.0, 2.0];
        let b = [10.0, 11.0];
        assert_eq!(two_sample_ks(&a, &b), 1.0);
    }

    #[test]
    fn ks_hand_example() {
        // F_a jumps at 1,2; F_b at 1.5: max gap 0.5 at x in [1, 1.5).
        let a = [1.0, 2.0];
        let b = [1.5, 1.5];
        assert_abs_diff_eq!(two_sample_ks(&a, &b), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ks_with_ties_across_samples() {
        let a = [0.0, 1.0, 1.0, 2.0];
        let b = [1.0, 1.0, 1.0, 3.0];
        // At x=1: F_a = 3/4, F_b = 3/4; at x=2: F_a = 1, F_b = 3/4.
        assert_abs_diff_eq!(two_sample_ks(&a, &b), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn fit_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let fit = linear_fit(&x, &y);
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn quantiles_and_mean() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(quantile_sorted(&xs, 0.5), 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(quantile_sorted(&xs, 0.0), 1.0, epsilon = 1e-15);
        let (m, se) = mean_se(&xs);
        assert_abs_diff_eq!(m, 2.5, epsilon = 1e-15);
        assert!(se > 0.0);
    }

    #[test]
    fn histogram_counts() {
        let xs = [0.1, 0.2, 0.9, 1.5];
        let h = histogram(&xs, 0.0, 1.0, 2);
        assert_eq!(h[0].1, 2);
        assert_eq!(h[1].1, 2); // 1.5 clamps into the top bin
    }
}
