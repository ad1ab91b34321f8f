//! Derived epidemic quantities and posterior predictive bands.
//!
//! Days are counted from the first reported death. Draws are expected on the
//! sampling scale (`log_p, log_alpha, log_beta, eta`).

use crate::exec::Execution;
use crate::model::{log_intensity, ParamVector};
use crate::oracle::poisson_draw;
use crate::sampler::{stream_rng, DrawMatrix};
use crate::specfun::{sn_cdf, sn_mode, sn_quantile};
use crate::stats::{self, Interval};
use crate::{Error, Result};

/// Default forecast horizon in days.
pub const DEFAULT_HORIZON: usize = 70;

/// Quantile of `g` that defines the end of the epidemic.
pub const THRESHOLD_QUANTILE: f64 = 0.99;

/// Asymptotic number of deaths, `p K`.
pub fn total_deaths(draw: &ParamVector, population_millions: f64) -> f64 {
    draw.p() * population_millions
}

/// Day by which 99% of the deaths have occurred.
pub fn time_to_threshold(draw: &ParamVector) -> Result<f64> {
    sn_quantile(THRESHOLD_QUANTILE, &draw.skew_normal())
}

/// Day of the peak death rate.
pub fn inflection_point(draw: &ParamVector) -> f64 {
    sn_mode(&draw.skew_normal())
}

/// Mean with the 2.5% and 97.5% empirical quantiles.
pub fn summarize_quantity(values: &[f64]) -> Result<Interval> {
    stats::summarize(values)
}

/// Per-day predictive intervals; entry `i` is day `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bands {
    pub daily: Vec<Interval>,
    pub cumulative: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSummary {
    pub horizon_days: usize,
    pub daily_band: Vec<Interval>,
    pub cumulative_band: Vec<Interval>,
    pub total_deaths: Interval,
    pub time_to_threshold: Interval,
    pub inflection_point: Interval,
}

/// Posterior predictive bands for days `1..=horizon`.
///
/// Every draw gets its own RNG stream, so the result does not depend on how
/// draws are scheduled. Cumulative counts follow a path whose increments are
/// independent Poisson variables with mean `Lambda(t) - Lambda(t-1)`, where
/// `Lambda(t) = p K G(t)`; marginally `C(t) ~ Poisson(Lambda(t))`.
pub fn predictive_bands(
    draws: &DrawMatrix,
    population_millions: f64,
    horizon: usize,
    seed: u64,
    exec: Execution,
) -> Result<Bands> {
    if draws.n_draws() == 0 {
        return Err(Error::EmptyDraws);
    }
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    let thetas: Vec<ParamVector> = draws.rows().map(ParamVector::from_array).collect();

    let paths = exec.map(thetas.len(), |s| {
        let theta = &thetas[s];
        let mut rng = stream_rng(seed, s as u64);
        let sn = theta.skew_normal();
        let scale = theta.p() * population_millions;
        let mut daily = Vec::with_capacity(horizon);
        let mut cumulative = Vec::with_capacity(horizon);
        let mut running = 0u64;
        let mut previous = if scale > 0.0 {
            scale * sn_cdf(0.0, &sn)
        } else {
            0.0
        };
        for t in 1..=horizon {
            let lambda = log_intensity(theta, t as f64, population_millions).exp();
            daily.push(poisson_draw(lambda, &mut rng) as f64);
            let big = if scale > 0.0 {
                scale * sn_cdf(t as f64, &sn)
            } else {
                0.0
            };
            running += poisson_draw((big - previous).max(0.0), &mut rng);
            // The first increment carries everything accumulated before day 1.
            if t == 1 {
                running += poisson_draw(previous, &mut rng);
            }
            previous = big;
            cumulative.push(running as f64);
        }
        (daily, cumulative)
    });

    let column = |t: usize, cumulative: bool| -> Result<Interval> {
        let values: Vec<f64> = paths
            .iter()
            .map(|(d, c)| if cumulative { c[t] } else { d[t] })
            .collect();
        stats::summarize(&values)
    };
    let daily = (0..horizon)
        .map(|t| column(t, false))
        .collect::<Result<_>>()?;
    let cumulative = (0..horizon)
        .map(|t| column(t, true))
        .collect::<Result<_>>()?;
    Ok(Bands { daily, cumulative })
}

/// Bands plus the three derived quantities summarized over all draws.
pub fn forecast(
    draws: &DrawMatrix,
    population_millions: f64,
    horizon: usize,
    seed: u64,
    exec: Execution,
) -> Result<ForecastSummary> {
    let bands = predictive_bands(draws, population_millions, horizon, seed, exec)?;
    let thetas: Vec<ParamVector> = draws.rows().map(ParamVector::from_array).collect();
    let per_draw = exec.map(thetas.len(), |s| -> Result<(f64, f64, f64)> {
        let theta = &thetas[s];
        Ok((
            total_deaths(theta, population_millions),
            time_to_threshold(theta)?,
            inflection_point(theta),
        ))
    });
    let per_draw = per_draw.into_iter().collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&(f64, f64, f64)) -> f64| per_draw.iter().map(f).collect::<Vec<f64>>();
    Ok(ForecastSummary {
        horizon_days: horizon,
        daily_band: bands.daily,
        cumulative_band: bands.cumulative,
        total_deaths: summarize_quantity(&pick(|q| q.0))?,
        time_to_threshold: summarize_quantity(&pick(|q| q.1))?,
        inflection_point: summarize_quantity(&pick(|q| q.2))?,
    })
}
