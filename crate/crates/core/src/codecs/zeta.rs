//! Entropy coding of positive integers under a truncated power law
//! `ζ(n | λ) ∝ n^{-λ}` on `1..=N_max`.
//!
//! An index is coded in two stages with a binary arithmetic coder: a unary
//! chain selects the octave `k = floor(log2 n)` (octave `j` is weighted
//! `B_j` against `Σ_{i>j} B_i`), then bisection locates `n` inside the
//! octave, each bit weighted by the pmf mass on either side of the midpoint.
//! The product of the branch probabilities telescopes to `pmf(n)`.

use std::f64::consts::LN_2;
use std::sync::OnceLock;

use super::{ArithmeticDecoder, ArithmeticEncoder, BitReader, BitString, CodecError};

pub const DEFAULT_N_MAX: u64 = 1 << 62;
pub const LAMBDA_MAX: f64 = 20.0;

/// Dense head of the support with cached suffix sums. Differences of suffix
/// sums stay well conditioned for steep exponents, where prefix sums cancel.
const HEAD: u64 = 1 << 16;
/// Ranges shorter than this are summed term by term.
const DIRECT: u64 = 64;
/// Terms summed directly when evaluating moments during fitting.
const MOMENT_HEAD: u64 = 4096;

#[derive(Clone, Debug)]
pub struct ZetaModel {
    exponent: f64,
    n_max: u64,
    head_suffix: Vec<f64>,
    octaves: Vec<f64>,
    suffix: Vec<f64>,
    normalizer: f64,
}

impl PartialEq for ZetaModel {
    fn eq(&self, other: &Self) -> bool {
        self.exponent == other.exponent && self.n_max == other.n_max
    }
}

fn term(n: u64, lambda: f64) -> f64 {
    (n as f64).powf(-lambda)
}

/// Compensated running sum.
#[derive(Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

fn direct_sum(a: u64, b: u64, f: impl Fn(u64) -> f64) -> f64 {
    let mut acc = Sum::default();
    for n in (a..=b).rev() {
        acc.add(f(n));
    }
    acc.value()
}

/// `Σ_{n=a}^{b} n^{-λ}` for large `a` by Euler–Maclaurin.
fn tail_mass(a: u64, b: u64, lambda: f64) -> f64 {
    let (fa, fb) = (a as f64, b as f64);
    let s = lambda - 1.0;
    let span = (fb / fa).ln();
    let integral = if s == 0.0 { span } else { fa.powf(-s) * -(-s * span).exp_m1() / s };
    let f = |x: f64| x.powf(-lambda);
    let d1 = |x: f64| -lambda * x.powf(-lambda - 1.0);
    let d3 = |x: f64| -lambda * (lambda + 1.0) * (lambda + 2.0) * x.powf(-lambda - 3.0);
    integral + 0.5 * (f(fa) + f(fb)) + (d1(fb) - d1(fa)) / 12.0 - (d3(fb) - d3(fa)) / 720.0
}

fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = 20;
        let mut xs = Vec::with_capacity(n);
        let mut ws = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            xs.push(x);
            ws.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        (xs, ws)
    })
}

fn gl_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (xs, ws) = gauss_legendre();
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    xs.iter().zip(ws).map(|(&x, &w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// `(Σ n^{-λ}, Σ n^{-λ} ln n)` over `1..=n_max`.
fn moments(lambda: f64, n_max: u64) -> (f64, f64) {
    let head = n_max.min(MOMENT_HEAD);
    let mut z = Sum::default();
    let mut m = Sum::default();
    for n in (1..=head).rev() {
        let t = term(n, lambda);
        z.add(t);
        m.add(t * (n as f64).ln());
    }
    let mut a = head + 1;
    while a <= n_max {
        let b = (2 * a - 1).min(n_max);
        if b - a < DIRECT {
            for n in a..=b {
                let t = term(n, lambda);
                z.add(t);
                m.add(t * (n as f64).ln());
            }
        } else {
            z.add(tail_mass(a, b, lambda));
            // Σ g(n) with g(x) = x^{-λ} ln x; the integral is taken in ln x.
            let g = |x: f64| x.powf(-lambda) * x.ln();
            let dg = |x: f64| x.powf(-lambda - 1.0) * (1.0 - lambda * x.ln());
            let (fa, fb) = (a as f64, b as f64);
            let integral = gl_integrate(|t| ((1.0 - lambda) * t).exp() * t, fa.ln(), fb.ln());
            m.add(integral + 0.5 * (g(fa) + g(fb)) + (dg(fb) - dg(fa)) / 12.0);
        }
        if b == n_max {
            break;
        }
        a = b + 1;
    }
    (z.value(), m.value())
}

/// `E[log2 n]` under the truncated model.
pub fn mean_log2(lambda: f64, n_max: u64) -> f64 {
    let (z, m) = moments(lambda, n_max);
    m / z / LN_2
}

impl ZetaModel {
    pub fn new(exponent: f64) -> Result<Self, CodecError> {
        Self::with_truncation(exponent, DEFAULT_N_MAX)
    }

    pub fn with_truncation(exponent: f64, n_max: u64) -> Result<Self, CodecError> {
        if !(exponent > 1.0 && exponent.is_finite()) || n_max == 0 {
            return Err(CodecError::InvalidExponent(exponent));
        }
        let head = n_max.min(HEAD) as usize;
        // head_suffix[n] = Σ_{i=n}^{head} i^{-λ}, with head_suffix[0] unused.
        let mut head_suffix = vec![0.0; head + 2];
        let mut acc = Sum::default();
        for n in (1..=head).rev() {
            acc.add(term(n as u64, exponent));
            head_suffix[n] = acc.value();
        }
        let mut model = Self { exponent, n_max, head_suffix, octaves: Vec::new(), suffix: Vec::new(), normalizer: 0.0 };
        let top = 63 - n_max.leading_zeros();
        model.octaves = (0..=top).map(|k| model.mass(1 << k, model.octave_end(k))).collect();
        let mut suffix = vec![0.0; model.octaves.len()];
        let mut running = 0.0;
        for k in (0..model.octaves.len()).rev() {
            running += model.octaves[k];
            suffix[k] = running;
        }
        model.normalizer = suffix[0];
        model.suffix = suffix;
        Ok(model)
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    fn octave_end(&self, k: u32) -> u64 {
        if k >= 63 {
            self.n_max
        } else {
            ((1u64 << (k + 1)) - 1).min(self.n_max)
        }
    }

    /// Unnormalised mass `Σ_{n=a}^{b} n^{-λ}`.
    pub fn mass(&self, a: u64, b: u64) -> f64 {
        let b = b.min(self.n_max);
        if a == 0 || a > b {
            return 0.0;
        }
        let lambda = self.exponent;
        if b - a < DIRECT {
            return direct_sum(a, b, |n| term(n, lambda));
        }
        let head = self.head_suffix.len() as u64 - 2;
        if b <= head {
            self.head_suffix[a as usize] - self.head_suffix[b as usize + 1]
        } else if a > head {
            tail_mass(a, b, lambda)
        } else {
            self.head_suffix[a as usize] + tail_mass(head + 1, b, lambda)
        }
    }

    pub fn pmf(&self, n: u64) -> f64 {
        if n == 0 || n > self.n_max {
            return 0.0;
        }
        term(n, self.exponent) / self.normalizer
    }

    /// `-log2 pmf(n)`.
    pub fn ideal_len(&self, n: u64) -> f64 {
        self.exponent * (n as f64).log2() + self.normalizer.log2()
    }

    /// Entropy in bits, `log2 Z + λ E[log2 n]`.
    pub fn entropy(&self) -> f64 {
        self.normalizer.log2() + self.exponent * mean_log2(self.exponent, self.n_max)
    }

    /// Weights of stopping at octave `j` versus moving past it.
    fn stop_weights(&self, j: usize) -> (f64, f64) {
        (self.octaves[j], self.suffix.get(j + 1).copied().unwrap_or(0.0))
    }

    /// Weights of `[lo, mid]` versus `[mid + 1, hi]`.
    fn half_weights(&self, lo: u64, mid: u64, hi: u64) -> (f64, f64) {
        (self.mass(lo, mid), self.mass(mid + 1, hi))
    }

    pub fn write(&self, n: u64, enc: &mut ArithmeticEncoder) -> Result<(), CodecError> {
        if n == 0 || n > self.n_max {
            return Err(CodecError::OutOfRange { n, max: self.n_max });
        }
        let k = (63 - n.leading_zeros()) as usize;
        let last = self.octaves.len() - 1;
        for j in 0..last.min(k + 1) {
            let (w0, w1) = self.stop_weights(j);
            enc.encode_weighted(j != k, w0, w1)?;
        }
        let (mut lo, mut hi) = (1u64 << k, self.octave_end(k as u32));
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let upper = n > mid;
            let (w0, w1) = self.half_weights(lo, mid, hi);
            enc.encode_weighted(upper, w0, w1)?;
            if upper {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        Ok(())
    }

    pub fn read(&self, dec: &mut ArithmeticDecoder<'_, '_>) -> Result<u64, CodecError> {
        let last = self.octaves.len() - 1;
        let mut k = last;
        for j in 0..last {
            let (w0, w1) = self.stop_weights(j);
            if !dec.decode_weighted(w0, w1)? {
                k = j;
                break;
            }
        }
        let (mut lo, mut hi) = (1u64 << k, self.octave_end(k as u32));
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let (w0, w1) = self.half_weights(lo, mid, hi);
            if dec.decode_weighted(w0, w1)? {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

/// Maximum-entropy exponent for a sample of `log2` index values: solves
/// `E_λ[log2 n] = mean` on the truncated support by bisection over
/// `λ ∈ (1, 20]`.
pub fn fit_zeta(log_index_samples: &[f64]) -> Result<ZetaModel, CodecError> {
    fit_zeta_truncated(log_index_samples, DEFAULT_N_MAX)
}

pub fn fit_zeta_truncated(log_index_samples: &[f64], n_max: u64) -> Result<ZetaModel, CodecError> {
    if log_index_samples.is_empty() || log_index_samples.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(CodecError::InvalidSample);
    }
    let mean = log_index_samples.iter().sum::<f64>() / log_index_samples.len() as f64;
    if mean <= mean_log2(LAMBDA_MAX, n_max) {
        return ZetaModel::with_truncation(LAMBDA_MAX, n_max);
    }
    let ceiling = mean_log2(1.0, n_max);
    if mean >= ceiling {
        return Err(CodecError::Unfittable { mean, max: ceiling });
    }
    let (mut lo, mut hi) = (1.0f64, LAMBDA_MAX);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_log2(mid, n_max) > mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ZetaModel::with_truncation(hi, n_max)
}

pub fn zeta_encode(n: u64, model: &ZetaModel) -> Result<BitString, CodecError> {
    let mut enc = ArithmeticEncoder::new();
    model.write(n, &mut enc)?;
    Ok(enc.finish())
}

pub fn zeta_decode(reader: &mut BitReader<'_>, model: &ZetaModel) -> Result<u64, CodecError> {
    let mut dec = ArithmeticDecoder::new(reader);
    let n = model.read(&mut dec)?;
    dec.finish()?;
    Ok(n)
}

/// Codes several indices, each under its own model, in one arithmetic-coding
/// session so that termination is paid once.
pub fn zeta_encode_sequence(items: &[(u64, &ZetaModel)]) -> Result<BitString, CodecError> {
    let mut enc = ArithmeticEncoder::new();
    for &(n, model) in items {
        model.write(n, &mut enc)?;
    }
    Ok(enc.finish())
}

pub fn zeta_decode_sequence(reader: &mut BitReader<'_>, models: &[&ZetaModel]) -> Result<Vec<u64>, CodecError> {
    let mut dec = ArithmeticDecoder::new(reader);
    let out = models.iter().map(|m| m.read(&mut dec)).collect::<Result<Vec<_>, _>>()?;
    dec.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct sums over `1..=terms` plus the integral of the remainder from
    /// `terms + 1/2`, which is accurate to second order in the spacing.
    fn oracle_moments(lambda: f64, terms: u64) -> (f64, f64) {
        let mut z = 0.0;
        let mut m = 0.0;
        for n in (1..=terms).rev() {
            let t = (n as f64).powf(-lambda);
            z += t;
            m += t * (n as f64).ln();
        }
        let c = terms as f64 + 0.5;
        let s = lambda - 1.0;
        z += c.powf(-s) / s;
        m += c.powf(-s) * (c.ln() / s + 1.0 / (s * s));
        (z, m / z / LN_2)
    }

    #[test]
    fn normalizer_matches_direct_summation() {
        for &lambda in &[2.0, 2.5, 4.0] {
            let model = ZetaModel::new(lambda).unwrap();
            let (z, _) = oracle_moments(lambda, 4_000_000);
            assert!((model.normalizer() - z).abs() < 1e-12, "λ={lambda}");
        }
        let model = ZetaModel::new(2.0).unwrap();
        assert!((model.normalizer() - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn pmf_sums_to_one_on_small_support() {
        let model = ZetaModel::with_truncation(1.3, 100_000).unwrap();
        let total: f64 = direct_sum(1, 100_000, |n| model.pmf(n));
        assert!((total - 1.0).abs() < 1e-12);
        assert!((model.mass(3, 90_000) - direct_sum(3, 90_000, |n| term(n, 1.3))).abs() < 1e-12);
    }

    #[test]
    fn tail_mass_matches_direct_sum() {
        for &lambda in &[1.0001, 1.5, 3.0] {
            let a = 70_000;
            let b = 3_000_000;
            let exact = direct_sum(a, b, |n| term(n, lambda));
            assert!((tail_mass(a, b, lambda) - exact).abs() < 1e-13 * exact);
        }
    }

    #[test]
    fn fit_all_zero_samples_hits_cap() {
        let model = fit_zeta(&[0.0; 10]).unwrap();
        assert_eq!(model.exponent(), LAMBDA_MAX);
        assert!(model.ideal_len(1) < 1e-5);
        assert!(zeta_encode(1, &model).unwrap().len() <= 2);
    }

    #[test]
    fn fit_matches_target_mean() {
        let model = fit_zeta(&[1.0]).unwrap();
        let (_, mean) = oracle_moments(model.exponent(), 20_000_000);
        assert!((mean - 1.0).abs() < 1e-6, "mean {mean}");
        let model = fit_zeta(&[0.0, 1.0, 3.0, 4.5]).unwrap();
        assert!((mean_log2(model.exponent(), DEFAULT_N_MAX) - 2.125).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_unreachable_mean() {
        assert!(matches!(fit_zeta(&[40.0]), Err(CodecError::Unfittable { .. })));
        assert!(matches!(fit_zeta(&[]), Err(CodecError::InvalidSample)));
        assert!(matches!(fit_zeta(&[-1.0]), Err(CodecError::InvalidSample)));
    }

    #[test]
    fn index_one_under_lambda_two() {
        let model = ZetaModel::new(2.0).unwrap();
        let (z, _) = oracle_moments(2.0, 10_000_000);
        let bits = zeta_encode(1, &model).unwrap();
        assert!(bits.len() as f64 <= z.log2() + 2.0);
    }

    #[test]
    fn round_trips_under_fitted_models() {
        let models = [fit_zeta(&[0.5]).unwrap(), fit_zeta(&[2.0]).unwrap(), fit_zeta(&[6.0]).unwrap()];
        for model in &models {
            for n in 1..=10_000u64 {
                let bits = zeta_encode(n, model).unwrap();
                assert!(bits.len() as f64 <= model.ideal_len(n) + 2.0, "n={n}");
                assert_eq!(zeta_decode(&mut bits.reader(), model).unwrap(), n);
            }
            for n in [1u64 << 40, (1u64 << 62) - 3, 1 << 62] {
                let bits = zeta_encode(n, model).unwrap();
                assert_eq!(zeta_decode(&mut bits.reader(), model).unwrap(), n);
            }
        }
        assert!(matches!(
            zeta_encode((1 << 62) + 1, &models[0]),
            Err(CodecError::OutOfRange { .. })
        ));
    }

    #[test]
    fn sequence_round_trip() {
        let a = fit_zeta(&[0.3]).unwrap();
        let b = fit_zeta(&[3.0]).unwrap();
        let items: Vec<(u64, &ZetaModel)> = (1..200u64).map(|n| (n * n, if n % 2 == 0 { &a } else { &b })).collect();
        let mut stream = zeta_encode_sequence(&items).unwrap();
        let len = stream.len();
        stream.extend_from(&"1101".parse().unwrap());
        let models: Vec<&ZetaModel> = items.iter().map(|&(_, m)| m).collect();
        let mut reader = stream.reader();
        let got = zeta_decode_sequence(&mut reader, &models).unwrap();
        assert_eq!(got, items.iter().map(|&(n, _)| n).collect::<Vec<_>>());
        assert_eq!(reader.position(), len);
        let ideal: f64 = items.iter().map(|&(n, m)| m.ideal_len(n)).sum();
        assert!(len as f64 <= ideal + 2.0);
    }

    #[test]
    fn expected_length_close_to_entropy() {
        // Decoding uniform random bits draws indices from the model.
        let model = fit_zeta(&[2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 100_000;
        let mut total = 0usize;
        for _ in 0..draws {
            let noise: BitString = (0..256).map(|_| rng.gen_bool(0.5)).collect();
            let n = zeta_decode(&mut noise.reader(), &model).unwrap();
            total += zeta_encode(n, &model).unwrap().len();
        }
        let mean = total as f64 / draws as f64;
        assert!(mean <= model.entropy() + 2.0, "mean {mean}, entropy {}", model.entropy());
    }
}
