//! Aggregates and the statistical tests used by the harness.

use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Standard error of the mean, `sd / √n` with the unbiased `sd`.
    pub se: f64,
    pub n: usize,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary { mean: f64::NAN, se: f64::NAN, n };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Summary { mean, se, n }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Survival function of the Kolmogorov distribution,
/// `P(K > λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² λ²)`, switching to the Jacobi
/// theta form for small `λ` where the alternating series converges slowly.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let c = PI * PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| (-(((2 * k - 1) * (2 * k - 1)) as f64) * c).exp()).sum();
        return (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test with the asymptotic p-value and
/// Stephens' finite-sample correction `(√n + 0.12 + 0.11/√n) D`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    let nf = n as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / nf).max((i as f64 + 1.0) / nf - c)
        })
        .fold(0.0, f64::max);
    let sq = nf.sqrt();
    let p_value = kolmogorov_sf((sq + 0.12 + 0.11 / sq) * statistic);
    KsResult { statistic, p_value, n }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_known_values() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_branches_agree_and_match_tables() {
        // Both series are valid near the switch point.
        let lambda: f64 = 1.18;
        let c = PI * PI / (8.0 * lambda * lambda);
        let theta = 1.0 - (2.0 * PI).sqrt() / lambda * (1..=20).map(|k| (-(((2 * k - 1) * (2 * k - 1)) as f64) * c).exp()).sum::<f64>();
        assert!((theta - kolmogorov_sf(lambda)).abs() < 1e-12);
        // Standard critical values.
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_sf(1.9495) - 0.001).abs() < 1e-5);
        assert!((kolmogorov_sf(0.8276) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn ks_detects_shift() {
        let n = 2000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!(ks_test(&xs, |x| x.clamp(0.0, 1.0)).p_value > 0.99);
        let shifted: Vec<f64> = xs.iter().map(|x| x * 0.9).collect();
        assert!(ks_test(&shifted, |x| x.clamp(0.0, 1.0)).p_value < 1e-3);
    }

    #[test]
    fn slope_of_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        assert!((ols_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }
}
