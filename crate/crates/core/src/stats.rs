//! Statistical primitives: Kolmogorov–Smirnov distances with asymptotic
//! p-values, reference CDFs, and moment summaries.

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    std_dev(xs) / (xs.len() as f64).sqrt()
}

/// Median (copies and sorts).
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Kolmogorov–Smirnov distance and p-value.
#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
    /// Effective sample size entering the asymptotic p-value.
    pub n_eff: f64,
}

/// One-sample KS statistic D = sup |F_emp − F| against a monotone CDF, with
/// the asymptotic Kolmogorov p-value.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    KsResult {
        d,
        p: kolmogorov_p(d, n),
        n_eff: n,
    }
}

/// Two-sample KS statistic over the merged order, with the asymptotic
/// p-value at effective size n·m/(n+m).
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> KsResult {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len() as f64, b.len() as f64);
    let mut d = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let n_eff = n * m / (n + m);
    KsResult {
        d,
        p: kolmogorov_p(d, n_eff),
        n_eff,
    }
}

/// Asymptotic Kolmogorov survival function with the finite-sample correction
/// λ = (√n + 0.12 + 0.11/√n)·d; Q(λ) = 2Σ_{k≥1}(−1)^{k−1}e^{−2k²λ²}.
pub fn kolmogorov_p(d: f64, n_eff: f64) -> f64 {
    let sqrt_n = n_eff.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Standard normal CDF via the Chebyshev-fitted erfc approximation
/// (absolute error ~1.2e−7, far below every KS tolerance used here).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Arcsine CDF G(x) = (2/π)·arcsin(√x) on [0, 1].
pub fn arcsine_cdf(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    2.0 / std::f64::consts::PI * x.sqrt().asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSpec;

    #[test]
    fn summary_helpers() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((mean(&xs) - 2.5).abs() < 1e-15);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(median(&xs), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn ks_two_sample_identical_arrays_is_zero() {
        let xs = [0.3, 0.7, 0.1, 0.9];
        let r = ks_two_sample(&xs, &xs);
        assert_eq!(r.d, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn ks_two_sample_hand_values() {
        let r = ks_two_sample(&[1.0, 1.0, 4.0, 4.0], &[1.0, 1.0, 1.0, 4.0]);
        assert!((r.d - 0.25).abs() < 1e-12);
        let r2 = ks_two_sample(
            &[0.42, 0.24, 0.86, 0.85, 0.82, 0.82, 0.25, 0.78, 0.13, 0.27],
            &[0.24, 0.27, 0.87, 0.29, 0.57, 0.44, 0.5, 0.0, 0.56, 0.03],
        );
        assert!((r2.d - 0.4).abs() < 1e-12);
    }

    #[test]
    fn ks_one_sample_self_test() {
        // Uniform draws against the uniform CDF: p should be comfortable.
        let mut stream = SeedSpec::new(7, 7).stream();
        let mut passes = 0;
        let reruns = 100;
        for _ in 0..reruns {
            let xs: Vec<f64> = (0..10_000).map(|_| stream.draw_uniform()).collect();
            let r = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0));
            if r.p >= 0.01 {
                passes += 1;
            }
        }
        assert!(passes >= 98, "only {passes}/{reruns} self-tests passed");
    }

    #[test]
    fn ks_detects_gross_mismatch() {
        let mut stream = SeedSpec::new(8, 8).stream();
        let xs: Vec<f64> = (0..10_000).map(|_| stream.draw_uniform()).collect();
        let r = ks_one_sample(&xs, normal_cdf);
        assert!(r.p < 1e-6, "uniform vs normal should fail, p = {}", r.p);
    }

    #[test]
    fn normal_cdf_reference_points() {
        // The erfc fit is good to ~1.2e-7 absolute.
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-6);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_543).abs() < 1e-6);
        assert!((normal_cdf(-1.96) - 0.024_997_895_148_220_435).abs() < 1e-6);
        assert!((normal_cdf(8.0) - 1.0).abs() < 1e-9);
        assert!(normal_cdf(-8.0) < 1e-9);
    }

    #[test]
    fn arcsine_cdf_symmetry() {
        assert_eq!(arcsine_cdf(0.0), 0.0);
        assert!((arcsine_cdf(1.0) - 1.0).abs() < 1e-15);
        assert!((arcsine_cdf(0.5) - 0.5).abs() < 1e-15);
    }
}
