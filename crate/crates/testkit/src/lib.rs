//! Brute-force numerical routines that the test suites use as independent
//! references. Nothing here shares code with `grc-core`: densities are
//! written out by hand and integrals are evaluated by plain quadrature.

use std::f64::consts::{LN_2, PI};

/// Gaussian density written out directly.
pub fn gaussian_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

/// Gaussian CDF by quadrature of the density from `mean - 40 sd`.
pub fn gaussian_cdf_by_quadrature(x: f64, mean: f64, sd: f64) -> f64 {
    let lo = mean - 40.0 * sd;
    if x <= lo {
        return 0.0;
    }
    integrate(|t| gaussian_pdf(t, mean, sd), lo, x, 200_000)
}

/// Composite Simpson rule on `n` (rounded up to even) panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = if n % 2 == 1 { n + 1 } else { n.max(2) };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    acc * h / 3.0
}

/// Simpson quadrature split at the given breakpoints, so that kinks of the
/// integrand land on panel edges.
pub fn integrate_piecewise(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    n_per_piece: usize,
) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.windows(2)
        .map(|w| integrate(&f, w[0], w[1], n_per_piece))
        .sum()
}

/// Plain bisection for a sign change of `f` on `[a, b]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    assert!(fa * f(b) <= 0.0, "bisect: no sign change on [{a}, {b}]");
    for _ in 0..500 {
        let m = 0.5 * (a + b);
        if (b - a).abs() < tol {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Exhaustive grid search for the maximiser of `f`.
pub fn grid_argmax(f: impl Fn(f64) -> f64, a: f64, b: f64, step: f64) -> f64 {
    let n = ((b - a) / step).round() as usize;
    let mut best = (a, f64::NEG_INFINITY);
    for i in 0..=n {
        let x = a + step * i as f64;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best.0
}

/// KL divergence in bits between two densities by quadrature.
pub fn kl_bits_by_quadrature(
    q: impl Fn(f64) -> f64,
    p: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
) -> f64 {
    integrate(
        |x| {
            let qx = q(x);
            if qx <= 0.0 {
                0.0
            } else {
                qx * (qx / p(x)).ln()
            }
        },
        a,
        b,
        400_000,
    ) / LN_2
}

/// Direct implementation of the global-partition rejection recursion.
///
/// The ruled-out masses `T_d(X)` are obtained by quadrature of the
/// acceptance densities on a fixed grid; the pointwise densities `t_d(x)`
/// are rebuilt from scratch at every query by replaying the recursion.
pub struct HarshaRecursion {
    ruled_out: Vec<f64>,
}

impl HarshaRecursion {
    /// Tabulates `T_0, ..., T_steps` for ratio `r` and proposal density `p`
    /// over `[lo, hi]`.
    pub fn tabulate(
        r: impl Fn(f64) -> f64,
        p: impl Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        grid: usize,
        steps: usize,
    ) -> Self {
        let grid = if grid % 2 == 1 { grid + 1 } else { grid };
        let h = (hi - lo) / grid as f64;
        let xs: Vec<f64> = (0..=grid).map(|i| lo + h * i as f64).collect();
        let rs: Vec<f64> = xs.iter().map(|&x| r(x)).collect();
        let ps: Vec<f64> = xs.iter().map(|&x| p(x)).collect();
        let mut t = vec![0.0; xs.len()];
        let mut ruled_out: Vec<f64> = vec![0.0];
        for _ in 0..steps {
            let big_t = *ruled_out.last().unwrap();
            let cap = (1.0 - big_t).max(0.0);
            let mut acc = 0.0;
            for i in 0..xs.len() {
                let alpha = (rs[i] - t[i]).min(cap).max(0.0);
                t[i] += alpha;
                let w = if i == 0 || i == grid {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * alpha * ps[i];
            }
            let next = (big_t + acc * h / 3.0).min(1.0);
            ruled_out.push(next);
        }
        Self { ruled_out }
    }

    pub fn ruled_out(&self) -> &[f64] {
        &self.ruled_out
    }

    /// Acceptance probability `beta_{d+1}(x)` given `r(x)`.
    pub fn accept_prob(&self, ratio_at_x: f64, d: usize) -> f64 {
        let mut t = 0.0;
        let mut alpha = 0.0;
        for j in 0..=d {
            let cap = (1.0 - self.ruled_out[j]).max(0.0);
            alpha = (ratio_at_x - t).min(cap).max(0.0);
            t += alpha;
        }
        let denom = 1.0 - self.ruled_out[d];
        if denom <= 0.0 {
            1.0
        } else {
            (alpha / denom).min(1.0)
        }
    }

    /// Runs the sampler: `draw(d)` returns `(x_d, u_d)` for the `d`-th
    /// proposal. Returns the number of rejections and the accepted sample.
    pub fn run(
        &self,
        r: impl Fn(f64) -> f64,
        mut draw: impl FnMut(usize) -> (f64, f64),
    ) -> Option<(usize, f64)> {
        for d in 0..self.ruled_out.len() - 1 {
            let (x, u) = draw(d);
            if u <= self.accept_prob(r(x), d) {
                return Some((d, x));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_cubic_exactly() {
        let v = integrate(|x| x * x * x + 2.0 * x, 0.0, 2.0, 4);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_density_integrates_to_one() {
        let v = integrate(|x| gaussian_pdf(x, 1.0, 0.5), -20.0, 20.0, 20_000);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn harsha_identical_distributions_accept_at_once() {
        let h = HarshaRecursion::tabulate(|_| 1.0, |x| gaussian_pdf(x, 0.0, 1.0), -12.0, 12.0, 2000, 3);
        assert!((h.ruled_out()[1] - 1.0).abs() < 1e-9);
        assert!((h.accept_prob(1.0, 0) - 1.0).abs() < 1e-12);
    }
}
