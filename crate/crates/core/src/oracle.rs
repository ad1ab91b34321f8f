//! Brute-force references used to validate the fast paths, and
//! simulation-based calibration (SBC) of the whole inference pipeline.
//!
//! Nothing here shares code with the functions it checks except
//! [`sn_logpdf`], which is itself checked against the normal density.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::exec::Execution;
use crate::model::{
    log_intensity, DeathSeries, ParamVector, Posterior, PriorSpec, DIM, PARAM_NAMES,
};
use crate::sampler::diagnostics::rank_normalized_rhat;
use crate::sampler::{nuts_sample, sample_initials, stream_rng, LogDensity, SamplerConfig};
use crate::specfun::{sn_logpdf, SkewNormalParams};
use crate::{Error, Result};

/// Central finite-difference gradient.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Adaptive Simpson quadrature with Richardson extrapolation.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64> {
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::NoConvergence(format!(
                "adaptive quadrature on [{a}, {b}] exhausted its depth"
            )));
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

/// Owen's T by direct adaptive quadrature of its defining integral.
pub fn quad_owens_t(h: f64, a: f64) -> Result<f64> {
    let f = |x: f64| (-0.5 * h * h * (1.0 + x * x)).exp() / (1.0 + x * x);
    // Split the range so the Gaussian factor is resolved even for large h.
    let pieces = 16;
    let mut total = 0.0;
    for k in 0..pieces {
        let lo = a * k as f64 / pieces as f64;
        let hi = a * (k + 1) as f64 / pieces as f64;
        total += adaptive_simpson(&f, lo, hi, 1e-15, 60)?;
    }
    Ok(total / (2.0 * std::f64::consts::PI))
}

/// Skew-normal CDF by quadrature of the density over `[alpha - 12 beta, t]`.
pub fn quad_cdf(t: f64, params: &SkewNormalParams) -> Result<f64> {
    let lower = params.alpha - 12.0 * params.beta;
    if t <= lower {
        return Ok(0.0);
    }
    let f = |s: f64| sn_logpdf(s, params).exp();
    // Break points every scale unit keep the tolerance meaningful.
    let mut total = 0.0;
    let mut a = lower;
    while a < t {
        let b = (a + params.beta).min(t);
        total += adaptive_simpson(&f, a, b, 1e-13, 60)?;
        a = b;
    }
    Ok(total)
}

/// Quantile by bisection on [`quad_cdf`].
pub fn quad_quantile(q: f64, params: &SkewNormalParams, tol: f64) -> Result<f64> {
    let mut lo = params.alpha - 12.0 * params.beta;
    let mut hi = params.alpha + 12.0 * params.beta;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if quad_cdf(mid, params)? < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mode by exhaustive search of a `1e-6 beta` grid on `[alpha - 6 beta, alpha + 6 beta]`,
/// refined by a parabola through the best grid point and its neighbours.
pub fn grid_mode(params: &SkewNormalParams) -> f64 {
    let step = 1e-6 * params.beta;
    let start = params.alpha - 6.0 * params.beta;
    let n = 12_000_000usize;
    let chunk = 250_000usize;
    let at = |i: usize| sn_logpdf(start + i as f64 * step, params);

    let best = Execution::default()
        .map(n.div_ceil(chunk), |c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(n + 1);
            let mut best = (lo, at(lo));
            for i in lo + 1..hi {
                let v = at(i);
                if v > best.1 {
                    best = (i, v);
                }
            }
            best
        })
        .into_iter()
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, b| if b.1 > acc.1 { b } else { acc },
        );

    let i = best.0.clamp(1, n - 1);
    let (l, c, r) = (at(i - 1), at(i), at(i + 1));
    let denom = l - 2.0 * c + r;
    let offset = if denom < 0.0 {
        0.5 * (l - r) / denom
    } else {
        0.0
    };
    start + (i as f64 + offset.clamp(-1.0, 1.0)) * step
}

/// Exact Poisson quantile: the smallest `k` with `P(X <= k) >= q`, by
/// tabulating the CDF.
pub fn poisson_quantile(lambda: f64, q: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    let mut k = 0u64;
    while cdf < q {
        k += 1;
        pmf *= lambda / k as f64;
        cdf += pmf;
    }
    k
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Draws a death series on days `1..=n_days` from the Poisson model.
pub fn simulate_series<R: Rng>(
    theta: &ParamVector,
    population_millions: f64,
    n_days: usize,
    rng: &mut R,
) -> Result<DeathSeries> {
    let deaths = (1..=n_days)
        .map(|t| {
            let lambda = log_intensity(theta, t as f64, population_millions).exp();
            poisson_draw(lambda, rng)
        })
        .collect();
    DeathSeries::from_counts(1, deaths, population_millions)
}

pub(crate) fn poisson_draw<R: Rng>(lambda: f64, rng: &mut R) -> u64 {
    if lambda > 0.0 && lambda.is_finite() {
        Poisson::new(lambda)
            .map(|d| d.sample(rng) as u64)
            .unwrap_or(0)
    } else {
        0
    }
}

/// A target whose gradient has the wrong sign; the negative control for SBC.
pub struct FlippedGradient<T>(pub T);

impl<T: LogDensity> LogDensity for FlippedGradient<T> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn logp_and_grad(&self, position: &[f64], grad: &mut [f64]) -> f64 {
        let lp = self.0.logp_and_grad(position, grad);
        grad.iter_mut().for_each(|g| *g = -*g);
        lp
    }
}

#[derive(Debug, Clone)]
pub struct SbcOptions {
    pub bins: usize,
    /// Posterior draws kept per replication; ranks take `thin_to + 1` values.
    pub thin_to: usize,
    /// Every `rhat_every`-th replication runs two chains and is excluded if
    /// any R-hat exceeds `max_rhat`.
    pub rhat_every: usize,
    pub max_rhat: f64,
    pub flip_gradient: bool,
    pub execution: Execution,
}

impl Default for SbcOptions {
    fn default() -> Self {
        SbcOptions {
            bins: 20,
            thin_to: 99,
            rhat_every: 10,
            max_rhat: 1.05,
            flip_gradient: false,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SbcReport {
    pub names: Vec<String>,
    /// Per parameter, counts per rank bin.
    pub histograms: Vec<Vec<u32>>,
    pub chisq: Vec<f64>,
    pub p_values: Vec<f64>,
    pub used: usize,
    pub failed: usize,
}

impl SbcReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("parameter,bin,count,chisq,p_value\n");
        for (j, name) in self.names.iter().enumerate() {
            for (b, count) in self.histograms[j].iter().enumerate() {
                out.push_str(&format!(
                    "{name},{b},{count},{},{}\n",
                    self.chisq[j], self.p_values[j]
                ));
            }
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// The scale suggested for desk runs: 40 days, 400 warmup and 400 sampling
/// iterations, one chain per fit.
pub fn sbc_sampler_config(seed: u64) -> SamplerConfig {
    SamplerConfig {
        chains: 1,
        warmup: 400,
        samples: 400,
        seed,
        ..SamplerConfig::default()
    }
}

/// Simulation-based calibration with default options.
pub fn sbc_run(
    prior: &PriorSpec,
    population_millions: f64,
    n_days: usize,
    replications: usize,
    cfg: &SamplerConfig,
) -> Result<SbcReport> {
    sbc_run_with(
        prior,
        population_millions,
        n_days,
        replications,
        cfg,
        &SbcOptions::default(),
    )
}

enum Replication {
    Ranks([usize; DIM]),
    Unconverged,
}

/// Simulation-based calibration: draw a truth from the prior, simulate a
/// series, fit it with the same prior, and rank each true component among
/// the thinned posterior draws. Uniform ranks indicate a correct posterior.
pub fn sbc_run_with(
    prior: &PriorSpec,
    population_millions: f64,
    n_days: usize,
    replications: usize,
    cfg: &SamplerConfig,
    opts: &SbcOptions,
) -> Result<SbcReport> {
    if replications < 50 {
        return Err(Error::InvalidConfig(format!(
            "at least 50 replications required, got {replications}"
        )));
    }
    if !(opts.thin_to + 1).is_multiple_of(opts.bins) || cfg.samples < opts.thin_to {
        return Err(Error::InvalidConfig(
            "thin_to + 1 must be a multiple of bins and at most the draw count".into(),
        ));
    }

    let results = opts
        .execution
        .map(replications, |r| -> Result<Replication> {
            let mut rng = stream_rng(cfg.seed ^ 0x5bc0_5bc0, r as u64);
            let truth = sample_initials(prior, 1, &mut rng)?[0];
            let series = simulate_series(&truth, population_millions, n_days, &mut rng)?;

            let check_rhat = opts.rhat_every > 0 && (r + 1) % opts.rhat_every == 0;
            let fit_cfg = SamplerConfig {
                chains: if check_rhat { 2 } else { 1 },
                seed: cfg.seed.wrapping_add(r as u64 + 1),
                execution: Execution::Sequential,
                ..cfg.clone()
            };
            let init: Vec<Vec<f64>> = sample_initials(prior, fit_cfg.chains, &mut rng)?
                .into_iter()
                .map(|t| t.to_array().to_vec())
                .collect();
            let posterior = Posterior::new(&series, prior);
            let draws = if opts.flip_gradient {
                nuts_sample(&FlippedGradient(posterior), &init, &fit_cfg)?
            } else {
                nuts_sample(&posterior, &init, &fit_cfg)?
            };

            if check_rhat {
                for j in 0..DIM {
                    let chains: Vec<Vec<f64>> = (0..2).map(|c| draws.column(c, j)).collect();
                    let rhat = rank_normalized_rhat(&chains);
                    if !(rhat <= opts.max_rhat) {
                        return Ok(Replication::Unconverged);
                    }
                }
            }

            let step = cfg.samples / opts.thin_to;
            let kept = draws.thinned(step, opts.thin_to);
            let truth = truth.to_array();
            let mut ranks = [0usize; DIM];
            for (j, rank) in ranks.iter_mut().enumerate() {
                *rank = kept.column(0, j).iter().filter(|&&v| v < truth[j]).count();
            }
            Ok(Replication::Ranks(ranks))
        });

    let per_bin = (opts.thin_to + 1) / opts.bins;
    let mut histograms = vec![vec![0u32; opts.bins]; DIM];
    let mut used = 0;
    let mut failed = 0;
    for result in results {
        match result? {
            Replication::Ranks(ranks) => {
                used += 1;
                for (j, &rank) in ranks.iter().enumerate() {
                    histograms[j][rank / per_bin] += 1;
                }
            }
            Replication::Unconverged => failed += 1,
        }
    }

    let expected = used as f64 / opts.bins as f64;
    let chi2 = ChiSquared::new((opts.bins - 1) as f64).expect("positive degrees of freedom");
    let chisq: Vec<f64> = histograms
        .iter()
        .map(|h| {
            h.iter()
                .map(|&c| (c as f64 - expected).powi(2) / expected)
                .sum()
        })
        .collect();
    let p_values = chisq.iter().map(|&x| chi2.sf(x)).collect();

    Ok(SbcReport {
        names: PARAM_NAMES.iter().map(|s| s.to_string()).collect(),
        histograms,
        chisq,
        p_values,
        used,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{log_norm_pdf, sn_cdf, sn_mode};

    #[test]
    fn quad_cdf_anchors() {
        let p = SkewNormalParams::new(10.0, 3.0, 0.0).unwrap();
        assert!((quad_cdf(10.0, &p).unwrap() - 0.5).abs() < 1e-10);
        for eta in [-3.0, 0.0, 2.5] {
            let p = SkewNormalParams::new(10.0, 3.0, eta).unwrap();
            assert!((quad_cdf(10.0 + 12.0 * 3.0, &p).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn quad_cdf_agrees_at_table1_shape() {
        let p = SkewNormalParams::new(18.36, 16.52, 2.34).unwrap();
        assert!((quad_cdf(40.0, &p).unwrap() - sn_cdf(40.0, &p)).abs() < 1e-9);
    }

    #[test]
    fn density_integrates_to_one() {
        for (a, b, e) in [(0.0, 1.0, 0.0), (18.36, 16.52, 2.34), (-4.0, 0.5, -7.0)] {
            let p = SkewNormalParams::new(a, b, e).unwrap();
            let f = |s: f64| sn_logpdf(s, &p).exp();
            let mut total = 0.0;
            for k in -10..10 {
                total += adaptive_simpson(&f, a + k as f64 * b, a + (k + 1) as f64 * b, 1e-13, 60)
                    .unwrap();
            }
            assert!((total - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn sn_logpdf_reduces_to_normal_density() {
        let p = SkewNormalParams::new(0.0, 1.0, 0.0).unwrap();
        for x in [-5.0, -1.0, 0.0, 0.3, 4.0] {
            assert!((sn_logpdf(x, &p) - log_norm_pdf(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn quad_owens_t_identity() {
        let phi1 = crate::specfun::norm_cdf(1.0);
        assert!((quad_owens_t(1.0, 1.0).unwrap() - 0.5 * phi1 * (1.0 - phi1)).abs() < 1e-14);
    }

    #[test]
    fn grid_mode_symmetric_cases() {
        let p = SkewNormalParams::new(3.0, 2.0, 0.0).unwrap();
        assert!((grid_mode(&p) - 3.0).abs() < 1e-6 * 2.0);
        let pos = SkewNormalParams::new(3.0, 2.0, 1.7).unwrap();
        let neg = SkewNormalParams::new(3.0, 2.0, -1.7).unwrap();
        assert!((grid_mode(&pos) - 3.0 + grid_mode(&neg) - 3.0).abs() < 1e-6);
        assert!((grid_mode(&pos) - sn_mode(&pos)).abs() < 1e-5);
    }

    #[test]
    fn poisson_quantiles_by_tabulation() {
        assert_eq!(poisson_quantile(4.0, 0.025), 1);
        assert_eq!(poisson_quantile(4.0, 0.975), 8);
        assert_eq!(poisson_quantile(0.0, 0.975), 0);
        assert_eq!(poisson_quantile(4.0, 0.0183), 0);
    }

    #[test]
    fn ks_of_uniform_grid() {
        let s: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_statistic(&s, |x| x) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn adaptive_simpson_reports_exhaustion() {
        let f = |x: f64| if x > 0.5 { 1.0 } else { 0.0 };
        assert!(adaptive_simpson(&f, 0.0, 1.0, 1e-300, 5).is_err());
    }

    #[test]
    fn sbc_rejects_too_few_replications() {
        let prior = PriorSpec::flat();
        assert!(sbc_run(&prior, 10.0, 40, 10, &sbc_sampler_config(1)).is_err());
    }
}
