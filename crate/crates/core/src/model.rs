//! Poisson likelihood with skew-normal intensity, priors, and the joint
//! log-posterior, all with analytic gradients on the unconstrained scale.
//!
//! The intensity on day `t` is `lambda(t) = p * g(t | alpha, beta, eta) * K`
//! with `K` the population in millions, so `p` counts asymptotic deaths per
//! million inhabitants. Sampling happens on `(log p, log alpha, log beta, eta)`.

use std::f64::consts::LN_2;

use crate::sampler::{DrawMatrix, LogDensity};
use crate::specfun::{log_norm_pdf, log_phi_and_inv_mills, SkewNormalParams, LN_SQRT_2PI};
use crate::stats;
use crate::{Error, Result};

/// Number of model parameters.
pub const DIM: usize = 4;

/// Names of the reporting-scale parameters, in storage order.
pub const PARAM_NAMES: [&str; DIM] = ["log_p", "log_alpha", "beta", "eta"];

/// Model parameters on the unconstrained sampling scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamVector {
    pub log_p: f64,
    pub log_alpha: f64,
    pub log_beta: f64,
    pub eta: f64,
}

impl ParamVector {
    pub fn new(log_p: f64, log_alpha: f64, log_beta: f64, eta: f64) -> Self {
        ParamVector {
            log_p,
            log_alpha,
            log_beta,
            eta,
        }
    }

    /// Builds a parameter vector from reporting-scale values, with `beta` on
    /// its natural scale.
    pub fn from_reporting(log_p: f64, log_alpha: f64, beta: f64, eta: f64) -> Self {
        ParamVector::new(log_p, log_alpha, beta.ln(), eta)
    }

    pub fn from_array(x: &[f64]) -> Self {
        ParamVector::new(x[0], x[1], x[2], x[3])
    }

    pub fn to_array(self) -> [f64; DIM] {
        [self.log_p, self.log_alpha, self.log_beta, self.eta]
    }

    /// `(log p, log alpha, beta, eta)`.
    pub fn to_reporting(self) -> [f64; DIM] {
        [self.log_p, self.log_alpha, self.log_beta.exp(), self.eta]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn p(&self) -> f64 {
        self.log_p.exp()
    }

    pub fn skew_normal(&self) -> SkewNormalParams {
        SkewNormalParams {
            alpha: self.log_alpha.exp(),
            beta: self.log_beta.exp(),
            eta: self.eta,
        }
    }
}

/// Daily death counts on consecutive days, with the population size.
#[derive(Debug, Clone, PartialEq)]
pub struct DeathSeries {
    day: Vec<i64>,
    deaths: Vec<u64>,
    population_millions: f64,
}

impl DeathSeries {
    /// Builds a series. Days must be consecutive integers and the population
    /// positive.
    pub fn new(day: Vec<i64>, deaths: Vec<u64>, population_millions: f64) -> Result<Self> {
        if day.len() != deaths.len() {
            return Err(Error::InvalidSeries(format!(
                "{} days but {} counts",
                day.len(),
                deaths.len()
            )));
        }
        if let Some(w) = day.windows(2).find(|w| w[1] != w[0] + 1) {
            return Err(Error::InvalidSeries(format!(
                "days must be consecutive, found {} then {}",
                w[0], w[1]
            )));
        }
        if !(population_millions.is_finite() && population_millions > 0.0) {
            return Err(Error::InvalidSeries(format!(
                "population must be positive, got {population_millions}"
            )));
        }
        Ok(DeathSeries {
            day,
            deaths,
            population_millions,
        })
    }

    /// A series starting at `first_day`.
    pub fn from_counts(first_day: i64, deaths: Vec<u64>, population_millions: f64) -> Result<Self> {
        let day = (0..deaths.len() as i64).map(|i| first_day + i).collect();
        DeathSeries::new(day, deaths, population_millions)
    }

    pub fn day(&self) -> &[i64] {
        &self.day
    }

    pub fn deaths(&self) -> &[u64] {
        &self.deaths
    }

    pub fn population_millions(&self) -> f64 {
        self.population_millions
    }

    pub fn with_population(mut self, population_millions: f64) -> Result<Self> {
        if !(population_millions.is_finite() && population_millions > 0.0) {
            return Err(Error::InvalidSeries(format!(
                "population must be positive, got {population_millions}"
            )));
        }
        self.population_millions = population_millions;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.day.len()
    }

    pub fn is_empty(&self) -> bool {
        self.day.is_empty()
    }

    pub fn total_deaths(&self) -> u64 {
        self.deaths.iter().sum()
    }

    pub(crate) fn deaths_mut(&mut self) -> &mut [u64] {
        &mut self.deaths
    }
}

/// Log intensity `ln lambda(t)` at one day.
pub fn log_intensity(theta: &ParamVector, t: f64, population_millions: f64) -> f64 {
    let sn = theta.skew_normal();
    let z = sn.standardize(t);
    theta.log_p + population_millions.ln() + LN_2 - theta.log_beta
        + log_norm_pdf(z)
        + log_phi_and_inv_mills(theta.eta * z).0
}

/// Poisson log-likelihood (without the `ln y!` constant) and its gradient.
pub fn loglik_and_grad(theta: &ParamVector, series: &DeathSeries) -> (f64, [f64; DIM]) {
    let alpha = theta.log_alpha.exp();
    let beta = theta.log_beta.exp();
    let eta = theta.eta;
    let offset = theta.log_p + series.population_millions.ln() + LN_2 - theta.log_beta;

    let mut ll = 0.0;
    let mut grad = [0.0; DIM];
    for (&t, &y) in series.day.iter().zip(&series.deaths) {
        let z = (t as f64 - alpha) / beta;
        let (log_cdf, zeta) = log_phi_and_inv_mills(eta * z);
        let log_lambda = offset + log_norm_pdf(z) + log_cdf;
        let lambda = log_lambda.exp();
        let y = y as f64;
        if y > 0.0 {
            ll += y * log_lambda;
        }
        ll -= lambda;

        let resid = y - lambda;
        // d/dz of ln g
        let dz = -z + eta * zeta;
        grad[0] += resid;
        grad[1] -= resid * dz * alpha / beta;
        grad[2] -= resid * (1.0 + dz * z);
        grad[3] += resid * z * zeta;
    }
    (ll, grad)
}

/// Scale on which the prior for `beta` is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaScale {
    /// Normal on `beta` itself; the log-Jacobian `log_beta` is added.
    Natural,
    /// Normal on `log_beta` directly.
    Log,
}

/// Standard deviation of the weakly informative prior on `log p`.
pub const WEAK_LOG_P_SD: f64 = 10.0;

/// Independent normal priors for `(log p, log alpha, beta, eta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub mean: [f64; DIM],
    pub sd: [f64; DIM],
    /// Multiplier applied to the SDs of `log alpha`, `beta` and `eta`.
    pub inflation: f64,
    /// Replace the `log p` component with `N(0, 10^2)`.
    pub p_free: bool,
    pub beta_scale: BetaScale,
}

impl PriorSpec {
    /// The diffuse prior used for source-country fits: `N(0, 10^2)` on
    /// `log p`, `log alpha`, `log beta` and `eta`.
    pub fn flat() -> Self {
        PriorSpec {
            mean: [0.0; DIM],
            sd: [WEAK_LOG_P_SD; DIM],
            inflation: 1.0,
            p_free: false,
            beta_scale: BetaScale::Log,
        }
    }

    /// A transfer prior with the `beta` component on its natural scale.
    pub fn transfer(
        mean: [f64; DIM],
        sd: [f64; DIM],
        inflation: f64,
        p_free: bool,
    ) -> Result<Self> {
        let prior = PriorSpec {
            mean,
            sd,
            inflation,
            p_free,
            beta_scale: BetaScale::Natural,
        };
        prior.validate()?;
        Ok(prior)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, (&m, &s)) in self.mean.iter().zip(&self.sd).enumerate() {
            if !m.is_finite() {
                return Err(Error::InvalidPrior(format!(
                    "{} mean is not finite",
                    PARAM_NAMES[i]
                )));
            }
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidPrior(format!(
                    "{} sd must be positive, got {s}",
                    PARAM_NAMES[i]
                )));
            }
        }
        if !(self.inflation.is_finite() && self.inflation > 0.0) {
            return Err(Error::InvalidPrior(format!(
                "inflation must be positive, got {}",
                self.inflation
            )));
        }
        Ok(())
    }

    pub fn with_inflation(mut self, inflation: f64) -> Self {
        self.inflation = inflation;
        self
    }

    pub fn with_p_free(mut self, p_free: bool) -> Self {
        self.p_free = p_free;
        self
    }

    /// Mean actually used at evaluation time.
    pub fn effective_mean(&self, i: usize) -> f64 {
        if i == 0 && self.p_free {
            0.0
        } else {
            self.mean[i]
        }
    }

    /// SD actually used at evaluation time (inflation and `p_free` applied).
    pub fn effective_sd(&self, i: usize) -> f64 {
        match i {
            0 if self.p_free => WEAK_LOG_P_SD,
            0 => self.sd[0],
            _ => self.sd[i] * self.inflation,
        }
    }
}

/// Log prior density (normalized) and its gradient on the sampling scale.
pub fn logprior_and_grad(theta: &ParamVector, prior: &PriorSpec) -> (f64, [f64; DIM]) {
    let beta_value = match prior.beta_scale {
        BetaScale::Natural => theta.log_beta.exp(),
        BetaScale::Log => theta.log_beta,
    };
    let values = [theta.log_p, theta.log_alpha, beta_value, theta.eta];

    let mut lp = 0.0;
    let mut grad = [0.0; DIM];
    for i in 0..DIM {
        let m = prior.effective_mean(i);
        let s = prior.effective_sd(i);
        let u = (values[i] - m) / s;
        lp += -0.5 * u * u - s.ln() - LN_SQRT_2PI;
        grad[i] = -u / s;
    }
    if prior.beta_scale == BetaScale::Natural {
        grad[2] = grad[2] * beta_value + 1.0;
        lp += theta.log_beta;
    }
    (lp, grad)
}

/// Joint log posterior (up to a constant) and its gradient.
pub fn logpost_and_grad(
    theta: &ParamVector,
    series: &DeathSeries,
    prior: &PriorSpec,
) -> (f64, [f64; DIM]) {
    let (ll, gl) = loglik_and_grad(theta, series);
    let (lp, gp) = logprior_and_grad(theta, prior);
    let mut grad = [0.0; DIM];
    for i in 0..DIM {
        grad[i] = gl[i] + gp[i];
    }
    (ll + lp, grad)
}

/// The posterior of one series under one prior, as a sampler target.
#[derive(Debug, Clone, Copy)]
pub struct Posterior<'a> {
    pub series: &'a DeathSeries,
    pub prior: &'a PriorSpec,
}

impl<'a> Posterior<'a> {
    pub fn new(series: &'a DeathSeries, prior: &'a PriorSpec) -> Self {
        Posterior { series, prior }
    }
}

impl LogDensity for Posterior<'_> {
    fn dim(&self) -> usize {
        DIM
    }

    fn logp_and_grad(&self, position: &[f64], grad: &mut [f64]) -> f64 {
        let theta = ParamVector::from_array(position);
        let (lp, g) = logpost_and_grad(&theta, self.series, self.prior);
        grad.copy_from_slice(&g);
        if lp.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp
        }
    }
}

/// Maps sampler output on `(log p, log alpha, log beta, eta)` to the reporting
/// scale `(log p, log alpha, beta, eta)`.
pub fn to_reporting_scale(draws: &DrawMatrix) -> DrawMatrix {
    draws.map_values(&PARAM_NAMES, |row, out| {
        out.copy_from_slice(row);
        out[2] = row[2].exp();
    })
}

/// Builds a transfer prior from reporting-scale posterior draws: component
/// means and SDs of `(log p, log alpha, beta, eta)`.
pub fn prior_from_draws(draws: &DrawMatrix, inflation: f64, p_free: bool) -> Result<PriorSpec> {
    if draws.n_draws() == 0 {
        return Err(Error::EmptyDraws);
    }
    let mut mean = [0.0; DIM];
    let mut sd = [0.0; DIM];
    for j in 0..DIM {
        let column = draws.pooled(j);
        mean[j] = stats::mean(&column);
        sd[j] = stats::sd(&column);
        if !(sd[j] > 0.0) {
            return Err(Error::DegenerateDraws(PARAM_NAMES[j].to_string()));
        }
    }
    PriorSpec::transfer(mean, sd, inflation, p_free)
}
