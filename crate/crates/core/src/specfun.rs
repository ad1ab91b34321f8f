//! Normal-family special functions and the skew-normal distribution.
//!
//! The skew-normal density with location `alpha`, scale `beta` and shape `eta`
//! is `g(t) = (2 / beta) * phi(z) * Phi(eta * z)` with `z = (t - alpha) / beta`.
//! Its CDF has the closed form `G(t) = Phi(z) - 2 T(z, eta)` in terms of Owen's
//! T function, which is what makes quantiles cheap enough to evaluate per
//! posterior draw.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use crate::roots::brent;
use crate::{Error, Result};

/// `0.5 * ln(2 pi)`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `log_phi` switches to the continued-fraction tail.
const LOG_PHI_TAIL: f64 = -10.0;

#[inline]
pub fn log_norm_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    log_norm_pdf(x).exp()
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal upper tail `1 - Phi(x)`, accurate for large positive `x`.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Mills ratio `(1 - Phi(u)) / phi(u)` for large positive `u`, by the Laplace
/// continued fraction `1 / (u + 1 / (u + 2 / (u + 3 / ...)))`.
fn mills_ratio_tail(u: f64) -> f64 {
    debug_assert!(u >= -LOG_PHI_TAIL);
    let mut f = u;
    for k in (1..=80).rev() {
        f = u + k as f64 / f;
    }
    1.0 / f
}

/// `ln Phi(x)`, finite for every finite `x`.
pub fn log_phi(x: f64) -> f64 {
    log_phi_and_inv_mills(x).0
}

/// Returns `(ln Phi(x), phi(x) / Phi(x))`.
///
/// The second value is the inverse Mills ratio that appears in every
/// skew-normal score. Both are evaluated without underflow in the far left
/// tail, where `Phi` itself is zero in double precision.
pub fn log_phi_and_inv_mills(x: f64) -> (f64, f64) {
    if x < LOG_PHI_TAIL {
        let r = mills_ratio_tail(-x);
        (log_norm_pdf(x) + r.ln(), 1.0 / r)
    } else {
        let cdf = norm_cdf(x);
        let log_cdf = if x > 5.0 {
            (-norm_sf(x)).ln_1p()
        } else {
            cdf.ln()
        };
        (log_cdf, norm_pdf(x) / cdf)
    }
}

/// Inverse of the standard normal CDF.
///
/// Rational approximation followed by one Halley step against `norm_cdf`,
/// which brings the result to full double precision.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    let mut x = if p < P_LOW {
        tail(p)
    } else if p > 1.0 - P_LOW {
        -tail(1.0 - p)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    // Halley refinement; the upper half works on the survival function so the
    // residual keeps its relative precision.
    let e = if p > 0.5 {
        (1.0 - p) - norm_sf(x)
    } else {
        norm_cdf(x) - p
    };
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x -= u / (1.0 + 0.5 * x * u);
    Ok(x)
}

// 20-point Gauss-Legendre rule on [-1, 1]: positive nodes and their weights.
const GAUSS_LEGENDRE_20: [(f64, f64); 10] = [
    (0.076_526_521_133_497_34, 0.152_753_387_130_725_78),
    (0.227_785_851_141_645_1, 0.149_172_986_472_603_66),
    (0.373_706_088_715_419_55, 0.142_096_109_318_381_87),
    (0.510_867_001_950_827_1, 0.131_688_638_449_176_53),
    (0.636_053_680_726_515, 0.118_194_531_961_518_25),
    (0.746_331_906_460_150_8, 0.101_930_119_817_240_26),
    (0.839_116_971_822_218_8, 0.083_276_741_576_704_67),
    (0.912_234_428_251_325_8, 0.062_672_048_334_109_44),
    (0.963_971_927_277_913_8, 0.040_601_429_800_386_22),
    (0.993_128_599_185_094_9, 0.017_614_007_139_153_273),
];

/// Owen's T for `h >= 0` and `0 < a <= 1` by composite Gauss-Legendre
/// quadrature of `exp(-h^2 (1 + x^2) / 2) / (1 + x^2)` over `[0, a]`.
fn owens_t_core(h: f64, a: f64) -> f64 {
    let half_h2 = 0.5 * h * h;
    if half_h2 > 745.0 {
        return 0.0;
    }
    // Past x_max the integrand is below exp(-40) of its value at zero.
    let x_max = if h > 0.0 {
        (80.0f64).sqrt() / h
    } else {
        f64::INFINITY
    };
    let upper = a.min(x_max);
    // Subintervals are at most 0.5 wide and 1.5 Gaussian widths (1/h) wide.
    let n_sub = ((upper / 0.5).ceil().max((upper * h / 1.5).ceil()) as usize).max(1);
    let width = upper / n_sub as f64;

    let f = |x: f64| {
        let s = 1.0 + x * x;
        (-half_h2 * s).exp() / s
    };
    let mut total = 0.0;
    for k in 0..n_sub {
        let mid = (k as f64 + 0.5) * width;
        let half = 0.5 * width;
        let mut acc = 0.0;
        for &(node, weight) in &GAUSS_LEGENDRE_20 {
            acc += weight * (f(mid - half * node) + f(mid + half * node));
        }
        total += acc * half;
    }
    total / (2.0 * PI)
}

/// Owen's T function `T(h, a) = (1 / 2pi) * integral_0^a exp(-h^2 (1 + x^2) / 2) / (1 + x^2) dx`.
///
/// Arguments with `|a| > 1` are mapped onto `|a| < 1` with
/// `T(h, a) = [Phi(h) Q(ah) + Phi(ah) Q(h)] / 2 - T(ah, 1/a)` (for `h, a > 0`,
/// `Q = 1 - Phi`); the symmetries in `h` and `a` handle the signs.
pub fn owens_t(h: f64, a: f64) -> f64 {
    if a == 0.0 || h.is_nan() || a.is_nan() {
        return if a == 0.0 { 0.0 } else { f64::NAN };
    }
    if h == 0.0 {
        return a.atan() / (2.0 * PI);
    }
    let sign = a.signum();
    let a = a.abs();
    let h = h.abs();
    let value = if a <= 1.0 {
        owens_t_core(h, a)
    } else if a.is_infinite() {
        0.5 * norm_sf(h)
    } else {
        let ah = a * h;
        0.5 * (norm_cdf(h) * norm_sf(ah) + norm_cdf(ah) * norm_sf(h)) - owens_t_core(ah, 1.0 / a)
    };
    sign * value
}

/// Location, scale and shape of a skew-normal law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewNormalParams {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
}

impl SkewNormalParams {
    pub fn new(alpha: f64, beta: f64, eta: f64) -> Result<Self> {
        let params = SkewNormalParams { alpha, beta, eta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.beta.is_finite() && self.eta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "non-finite field in {self:?}"
            )));
        }
        if self.beta <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "scale must be positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn standardize(&self, t: f64) -> f64 {
        (t - self.alpha) / self.beta
    }
}

/// Log density of the skew-normal law.
pub fn sn_logpdf(t: f64, params: &SkewNormalParams) -> f64 {
    let z = params.standardize(t);
    LN_2 - params.beta.ln() + log_norm_pdf(z) + log_phi(params.eta * z)
}

pub fn sn_pdf(t: f64, params: &SkewNormalParams) -> f64 {
    sn_logpdf(t, params).exp()
}

/// Skew-normal CDF `Phi(z) - 2 T(z, eta)`, clamped to `[0, 1]`.
pub fn sn_cdf(t: f64, params: &SkewNormalParams) -> f64 {
    let z = params.standardize(t);
    (norm_cdf(z) - 2.0 * owens_t(z, params.eta)).clamp(0.0, 1.0)
}

/// Skew-normal quantile.
///
/// The root is bracketed by `alpha +/- k beta` with `k` doubling from one, then
/// located with Brent's method and polished with Newton steps so that
/// `|sn_cdf(t) - q| <= 1e-10`.
pub fn sn_quantile(q: f64, params: &SkewNormalParams) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::ProbabilityOutOfRange(q));
    }
    params.validate()?;
    let f = |t: f64| sn_cdf(t, params) - q;

    let mut k = 1.0;
    let (lo, hi) = loop {
        let lo = params.alpha - k * params.beta;
        let hi = params.alpha + k * params.beta;
        if f(lo) <= 0.0 && f(hi) >= 0.0 {
            break (lo, hi);
        }
        k *= 2.0;
        if k > 1024.0 {
            return Err(Error::NoConvergence(format!(
                "could not bracket the {q} quantile of {params:?}"
            )));
        }
    };

    let xtol = 1e-13 * params.beta.max(params.alpha.abs()).max(1.0);
    let mut t = brent(f, lo, hi, xtol, 200)?;
    for _ in 0..3 {
        let resid = f(t);
        if resid.abs() <= 1e-13 {
            break;
        }
        let dens = sn_pdf(t, params);
        if dens <= 0.0 {
            break;
        }
        let next = t - resid / dens;
        if !(next > lo && next < hi) || f(next).abs() >= resid.abs() {
            break;
        }
        t = next;
    }
    Ok(t)
}

/// Mode of the skew-normal law.
///
/// Solves the score equation `-z + eta * zeta(eta z) = 0` (`zeta` the inverse
/// Mills ratio) on the standardized axis. For `eta > 0` the root lies in
/// `(0, 1)`; negative shapes are reflected.
pub fn sn_mode(params: &SkewNormalParams) -> f64 {
    let eta = params.eta;
    if eta == 0.0 {
        return params.alpha;
    }
    let shape = eta.abs();
    let score = |z: f64| -z + shape * log_phi_and_inv_mills(shape * z).1;
    let z = brent(score, 0.0, 1.0, 1e-15, 200).expect("skew-normal score changes sign on [0, 1]");
    params.alpha + params.beta * z.copysign(eta)
}
