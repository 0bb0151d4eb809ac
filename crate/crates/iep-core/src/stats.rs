//! Small numeric helpers shared by experiments and tests: sample moments,
//! empirical quantiles, Kolmogorov-Smirnov distances and the asymptotic
//! Kolmogorov tail, and least-squares slopes.

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Sample skewness (biased, moment form).
pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

/// Sample kurtosis (biased, moment form; normal = 3).
pub fn kurtosis(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2)
}

/// Empirical quantile of a **sorted** slice: smallest order statistic whose
/// empirical d.f. reaches `level`.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&level));
    let n = sorted.len();
    let idx = ((level * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted[idx]
}

/// Median of a **sorted** slice.
pub fn median_sorted(sorted: &[f64]) -> f64 {
    quantile_sorted(sorted, 0.5)
}

/// Kolmogorov-Smirnov distance between the empirical d.f. of `xs` and a
/// continuous d.f. `cdf`, computed exactly at the jump points.
pub fn ks_distance_to<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        sup = sup.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    sup
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_distance_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|p, q| p.partial_cmp(q).expect("no NaN"));
    b.sort_by(|p, q| p.partial_cmp(q).expect("no NaN"));
    let (m, n) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        sup = sup.max((i as f64 / m - j as f64 / n).abs());
    }
    sup
}

/// Asymptotic Kolmogorov tail `P(sup |B(u)| > lambda)` of the Brownian
/// bridge sup, via the alternating series.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a one-sample KS distance at sample size `n`.
pub fn ks_p_value(distance: f64, n: usize) -> f64 {
    kolmogorov_sf((n as f64).sqrt() * distance)
}

/// Asymptotic p-value of a two-sample KS distance at sizes `m`, `n`.
pub fn ks_p_value_two_sample(distance: f64, m: usize, n: usize) -> f64 {
    let scale = ((m * n) as f64 / (m + n) as f64).sqrt();
    kolmogorov_sf(scale * distance)
}

/// Estimate `E[X Y]` for jointly sampled zero-mean variables, returning
/// `(estimate, standard error)`.  Used to check covariances of centered
/// Gaussian fields against their closed forms.
pub fn cov_zero_mean(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let products: Vec<f64> = xs.iter().zip(ys).map(|(a, b)| a * b).collect();
    let est = mean(&products);
    let se = (variance(&products) / products.len() as f64).sqrt();
    (est, se)
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
