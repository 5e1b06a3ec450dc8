//! Target/proposal pairs over the real line and the density-ratio
//! functionals the coding recursion is built from.
//!
//! All divergences are reported in bits. Interval masses and conditional
//! quantiles are evaluated on whichever tail keeps full relative precision,
//! so deep partitions far from the proposal's centre stay accurate.

use std::f64::consts::{LN_2, SQRT_2};

use statrs::function::erf::{erfc, erfc_inv};
use thiserror::Error;

use crate::partition::Interval;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("scale must be finite and strictly positive, got {0}")]
    InvalidScale(f64),
    #[error("location must be finite, got {0}")]
    InvalidLocation(f64),
    #[error("density ratio is not unimodal (target scale {target} exceeds proposal scale {proposal})")]
    NotUnimodal { target: f64, proposal: f64 },
    #[error("density ratio is monotone and has no finite mode")]
    NoFiniteMode,
    #[error(
        "no Gaussian pair with D_KL = {dkl} bits and D_inf = {dinf} bits; \
         feasible D_inf for this D_KL is [{min_dinf}, inf)"
    )]
    Unsatisfiable { dkl: f64, dinf: f64, min_dinf: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Gaussian,
}

/// A univariate distribution given by family, location and scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distribution1D {
    family: Family,
    location: f64,
    scale: f64,
}

impl Distribution1D {
    pub fn gaussian(location: f64, scale: f64) -> Result<Self, DistributionError> {
        if !location.is_finite() {
            return Err(DistributionError::InvalidLocation(location));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(DistributionError::InvalidScale(scale));
        }
        Ok(Self {
            family: Family::Gaussian,
            location,
            scale,
        })
    }

    pub fn standard_gaussian() -> Self {
        Self {
            family: Family::Gaussian,
            location: 0.0,
            scale: 1.0,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn standardize(&self, x: f64) -> f64 {
        (x - self.location) / self.scale
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = self.standardize(x);
        -0.5 * z * z - self.scale.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        std_cdf(self.standardize(x))
    }

    pub fn sf(&self, x: f64) -> f64 {
        std_cdf(-self.standardize(x))
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.location + self.scale * std_lower_quantile(p)
    }

    /// Inverse of the survival function.
    pub fn inverse_sf(&self, q: f64) -> f64 {
        self.location - self.scale * std_lower_quantile(q)
    }

    /// Probability mass of a closed interval.
    pub fn mass(&self, s: &Interval) -> f64 {
        if s.is_empty() {
            return 0.0;
        }
        let (za, zb) = (self.standardize(s.lo()), self.standardize(s.hi()));
        let m = if za >= 0.0 {
            std_cdf(-za) - std_cdf(-zb)
        } else if zb <= 0.0 {
            std_cdf(zb) - std_cdf(za)
        } else {
            1.0 - std_cdf(za) - std_cdf(-zb)
        };
        m.max(0.0)
    }

    /// Quantile of the restriction of this distribution to `s` at level `u`:
    /// `u` is mapped affinely onto the CDF range of `s` and inverted. The
    /// result is clamped into `s`.
    pub fn quantile_within(&self, s: &Interval, u: f64) -> f64 {
        debug_assert!(!s.is_empty());
        let (za, zb) = (self.standardize(s.lo()), self.standardize(s.hi()));
        let z = if za >= 0.0 {
            let (sa, sb) = (std_cdf(-za), std_cdf(-zb));
            -std_lower_quantile(sa - u * (sa - sb))
        } else if zb <= 0.0 {
            let (ca, cb) = (std_cdf(za), std_cdf(zb));
            std_lower_quantile(ca + u * (cb - ca))
        } else {
            let (ca, sb) = (std_cdf(za), std_cdf(-zb));
            let m = 1.0 - ca - sb;
            let p = ca + u * m;
            if p <= 0.5 {
                std_lower_quantile(p)
            } else {
                -std_lower_quantile(sb + (1.0 - u) * m)
            }
        };
        (self.location + self.scale * z).clamp(s.lo(), s.hi())
    }
}

/// Standard normal CDF.
fn std_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal quantile for `p <= 0.5`; larger `p` lose precision but
/// stay monotone.
fn std_lower_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else if p <= 0.5 {
        -SQRT_2 * erfc_inv(2.0 * p)
    } else {
        SQRT_2 * erfc_inv(2.0 * (1.0 - p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum RatioShape {
    /// `Q = P`.
    Constant,
    /// `ln r(x) = ln_max - curvature (x - mode)^2`.
    Concave { mode: f64, ln_max: f64, curvature: f64 },
    /// Equal scales, different locations: `ln r(x) = slope x + intercept`.
    Monotone { slope: f64, intercept: f64 },
}

/// Superlevel set `{x : r(x) >= level}` of the density ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSet {
    pub level: f64,
    pub interval: Interval,
}

/// Target `Q` and proposal `P` together with their cached ratio functionals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistributionPair {
    target: Distribution1D,
    proposal: Distribution1D,
    shape: RatioShape,
    dkl_bits: f64,
    dinf_bits: f64,
}

impl DistributionPair {
    /// Builds a pair whose density ratio is unimodal. Gaussian targets wider
    /// than the proposal are rejected: their ratio grows in both tails.
    pub fn new(target: Distribution1D, proposal: Distribution1D) -> Result<Self, DistributionError> {
        let (mq, sq) = (target.location, target.scale);
        let (mp, sp) = (proposal.location, proposal.scale);
        if sq > sp {
            return Err(DistributionError::NotUnimodal {
                target: sq,
                proposal: sp,
            });
        }
        let shape = if sq == sp && mq == mp {
            RatioShape::Constant
        } else if sq == sp {
            let v = sp * sp;
            RatioShape::Monotone {
                slope: (mq - mp) / v,
                intercept: (mp * mp - mq * mq) / (2.0 * v),
            }
        } else {
            let curvature = 0.5 / (sq * sq) - 0.5 / (sp * sp);
            let lin = mq / (sq * sq) - mp / (sp * sp);
            let mode = lin / (2.0 * curvature);
            RatioShape::Concave {
                mode,
                ln_max: ln_ratio(&target, &proposal, mode),
                curvature,
            }
        };
        let dkl_nats = (sp / sq).ln() + (sq * sq + (mq - mp) * (mq - mp)) / (2.0 * sp * sp) - 0.5;
        let dinf_bits = match shape {
            RatioShape::Constant => 0.0,
            RatioShape::Concave { ln_max, .. } => ln_max / LN_2,
            RatioShape::Monotone { .. } => f64::INFINITY,
        };
        Ok(Self {
            target,
            proposal,
            shape,
            dkl_bits: (dkl_nats / LN_2).max(0.0),
            dinf_bits: dinf_bits.max(0.0),
        })
    }

    pub fn target(&self) -> &Distribution1D {
        &self.target
    }

    pub fn proposal(&self) -> &Distribution1D {
        &self.proposal
    }

    /// `log2 dQ/dP(x)`.
    pub fn log_density_ratio(&self, x: f64) -> f64 {
        debug_assert!(x.is_finite());
        match self.shape {
            RatioShape::Constant => 0.0,
            _ => ln_ratio(&self.target, &self.proposal, x) / LN_2,
        }
    }

    /// `dQ/dP(x)`.
    pub fn density_ratio(&self, x: f64) -> f64 {
        match self.shape {
            RatioShape::Constant => 1.0,
            _ => ln_ratio(&self.target, &self.proposal, x).exp(),
        }
    }

    /// Maximiser of the density ratio. For `Q = P` the location of `P` is
    /// returned by convention.
    pub fn ratio_mode(&self) -> Result<f64, DistributionError> {
        match self.shape {
            RatioShape::Constant => Ok(self.proposal.location),
            RatioShape::Concave { mode, .. } => Ok(mode),
            RatioShape::Monotone { .. } => Err(DistributionError::NoFiniteMode),
        }
    }

    /// Like [`ratio_mode`](Self::ratio_mode) but reports a monotone ratio's
    /// mode as `±inf`.
    pub fn ratio_mode_extended(&self) -> f64 {
        match self.shape {
            RatioShape::Monotone { slope, .. } if slope > 0.0 => f64::INFINITY,
            RatioShape::Monotone { .. } => f64::NEG_INFINITY,
            _ => self.ratio_mode().unwrap(),
        }
    }

    pub fn kl_divergence(&self) -> f64 {
        self.dkl_bits
    }

    pub fn renyi_inf_divergence(&self) -> f64 {
        self.dinf_bits
    }

    pub fn level_set(&self, level: f64) -> LevelSet {
        let interval = if level <= 0.0 {
            Interval::REAL_LINE
        } else {
            let ln_l = level.ln();
            match self.shape {
                RatioShape::Constant if level <= 1.0 => Interval::REAL_LINE,
                RatioShape::Constant => Interval::empty(),
                RatioShape::Concave {
                    mode,
                    ln_max,
                    curvature,
                } => {
                    if ln_l > ln_max {
                        Interval::empty()
                    } else {
                        let w = ((ln_max - ln_l) / curvature).sqrt();
                        Interval::new(mode - w, mode + w).unwrap_or_else(|_| Interval::empty())
                    }
                }
                RatioShape::Monotone { slope, intercept } => {
                    let c = (ln_l - intercept) / slope;
                    if slope > 0.0 {
                        Interval::new(c, f64::INFINITY).unwrap()
                    } else {
                        Interval::new(f64::NEG_INFINITY, c).unwrap()
                    }
                }
            }
        };
        LevelSet { level, interval }
    }

    /// Level set located by bisection on the ratio, working outward from the
    /// mode. Family-agnostic; stops when the bracket's proposal mass drops
    /// below `1e-12` or after 200 halvings.
    pub fn level_set_by_bisection(&self, level: f64) -> LevelSet {
        const MAX_ITERS: usize = 200;
        const CDF_TOL: f64 = 1e-12;
        if level <= 0.0 {
            return LevelSet {
                level,
                interval: Interval::REAL_LINE,
            };
        }
        let mode = self.ratio_mode_extended();
        let above = |x: f64| self.density_ratio(x) >= level;
        if mode.is_finite() && !above(mode) {
            return LevelSet {
                level,
                interval: Interval::empty(),
            };
        }
        let step0 = self.proposal.scale;
        let edge = |dir: f64| -> f64 {
            if !mode.is_finite() && mode.signum() == dir {
                return mode;
            }
            let start = if mode.is_finite() {
                mode
            } else {
                // Monotone ratio: scan from the proposal centre.
                let mut s = self.proposal.location;
                let mut step = step0;
                while !above(s) {
                    s -= dir * step;
                    step *= 2.0;
                    if !s.is_finite() {
                        return s;
                    }
                }
                s
            };
            let mut inside = start;
            let mut step = step0;
            let mut outside = start + dir * step;
            while above(outside) {
                inside = outside;
                step *= 2.0;
                outside = start + dir * step;
                if !outside.is_finite() {
                    return outside;
                }
            }
            for _ in 0..MAX_ITERS {
                let (a, b) = if inside < outside { (inside, outside) } else { (outside, inside) };
                if self.proposal.mass(&Interval::new(a, b).unwrap()) < CDF_TOL {
                    break;
                }
                let mid = 0.5 * (inside + outside);
                if above(mid) {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            inside
        };
        let (lo, hi) = (edge(-1.0), edge(1.0));
        LevelSet {
            level,
            interval: Interval::new(lo, hi).unwrap_or_else(|_| Interval::empty()),
        }
    }

    /// Unaccounted target mass `∫_S (r(x) - level)_+ dP(x)`.
    pub fn residual_mass(&self, s: &Interval, level: f64) -> f64 {
        if level <= 0.0 {
            return self.target.mass(s).clamp(0.0, 1.0);
        }
        let region = s.intersect(&self.level_set(level).interval);
        if region.is_empty() {
            return 0.0;
        }
        (self.target.mass(&region) - level * self.proposal.mass(&region)).clamp(0.0, 1.0)
    }
}

fn ln_ratio(target: &Distribution1D, proposal: &Distribution1D, x: f64) -> f64 {
    let zq = target.standardize(x);
    let zp = proposal.standardize(x);
    (proposal.scale / target.scale).ln() - 0.5 * zq * zq + 0.5 * zp * zp
}

/// Gaussian `Q = N(m, s^2)` against `P = N(0, 1)` with `s < 1` and `m >= 0`,
/// chosen so that the pair's divergences hit the requested values.
///
/// For fixed `D_KL` the mean is a closed-form function of the scale, and
/// `D_inf` increases monotonically in the scale, so a bisection on the scale
/// alone pins down both targets.
pub fn gaussian_pair_for_targets(dkl_bits: f64, dinf_bits: f64) -> Result<DistributionPair, DistributionError> {
    const TOL_BITS: f64 = 1e-6;
    let unsat = |min_dinf: f64| DistributionError::Unsatisfiable {
        dkl: dkl_bits,
        dinf: dinf_bits,
        min_dinf,
    };
    if !(dkl_bits > 0.0 && dkl_bits.is_finite() && dinf_bits > dkl_bits) {
        return Err(unsat(f64::NAN));
    }
    let k = dkl_bits * LN_2;
    let target_dinf = dinf_bits * LN_2;
    let mean_sq = |s: f64| 2.0 * (k + s.ln()) - s * s + 1.0;
    let dinf = |s: f64| -s.ln() + mean_sq(s).max(0.0) / (2.0 * (1.0 - s * s));

    // Smallest feasible scale: zero mean.
    let (mut a, mut b) = (f64::MIN_POSITIVE, 1.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if mean_sq(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let s_min = b;
    let min_dinf_bits = dinf(s_min) / LN_2;
    if target_dinf < dinf(s_min) {
        return Err(unsat(min_dinf_bits));
    }
    let (mut lo, mut hi) = (s_min, 1.0 - 1e-15);
    if dinf(hi) < target_dinf {
        return Err(unsat(min_dinf_bits));
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if dinf(m) < target_dinf {
            lo = m;
        } else {
            hi = m;
        }
    }
    let s = 0.5 * (lo + hi);
    let mean = mean_sq(s).max(0.0).sqrt();
    let pair = DistributionPair::new(
        Distribution1D::gaussian(mean, s)?,
        Distribution1D::standard_gaussian(),
    )?;
    if (pair.kl_divergence() - dkl_bits).abs() > TOL_BITS
        || (pair.renyi_inf_divergence() - dinf_bits).abs() > TOL_BITS
    {
        return Err(unsat(min_dinf_bits));
    }
    Ok(pair)
}
