//! Rank-normalized split R-hat and bulk effective sample size.

use super::DrawMatrix;
use crate::specfun::norm_quantile;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDiagnostics {
    pub name: String,
    pub rhat: f64,
    pub ess_bulk: f64,
    /// Divergent transitions across all chains (shared by every parameter).
    pub divergences: usize,
}

/// Per-parameter convergence diagnostics. Needs at least two chains of at
/// least four draws.
pub fn diagnostics(draws: &DrawMatrix) -> Result<Vec<ParamDiagnostics>> {
    if draws.n_chains() < 2 {
        return Err(Error::InsufficientDraws(format!(
            "{} chain(s), at least 2 required",
            draws.n_chains()
        )));
    }
    if draws.n_samples() < 4 {
        return Err(Error::InsufficientDraws(format!(
            "{} draws per chain, at least 4 required",
            draws.n_samples()
        )));
    }
    let divergences = draws.divergences();
    Ok((0..draws.dim())
        .map(|j| {
            let chains: Vec<Vec<f64>> = (0..draws.n_chains()).map(|c| draws.column(c, j)).collect();
            ParamDiagnostics {
                name: draws.names()[j].clone(),
                rhat: rank_normalized_rhat(&chains),
                ess_bulk: ess_bulk(&chains),
                divergences,
            }
        })
        .collect())
}

/// Splits every chain into halves (the middle draw of odd chains is dropped).
pub fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    chains
        .iter()
        .flat_map(|c| {
            let half = c.len() / 2;
            [c[..half].to_vec(), c[c.len() - half..].to_vec()]
        })
        .collect()
}

/// Replaces pooled values by normal scores of their fractional ranks
/// `(r - 3/8) / (S + 1/4)`, ties sharing their average rank.
pub fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pooled: Vec<(f64, usize, usize)> = chains
        .iter()
        .enumerate()
        .flat_map(|(c, v)| v.iter().enumerate().map(move |(i, &x)| (x, c, i)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = pooled.len() as f64;

    let mut out: Vec<Vec<f64>> = chains.iter().map(|c| vec![0.0; c.len()]).collect();
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start + 1;
        while end < pooled.len() && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        // 1-based average rank of the tie block
        let rank = 0.5 * ((start + 1) + end) as f64;
        let z = norm_quantile((rank - 0.375) / (total + 0.25)).expect("fractional rank in (0, 1)");
        for &(_, c, i) in &pooled[start..end] {
            out[c][i] = z;
        }
        start = end;
    }
    out
}

/// Classic potential scale reduction of already split chains.
pub fn rhat_of(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| crate::stats::mean(c)).collect();
    let within = chains
        .iter()
        .map(|c| crate::stats::variance(c))
        .sum::<f64>()
        / m;
    let between = n * crate::stats::variance(&means);
    if within <= 0.0 {
        return if between <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * within + between / n;
    (var_plus / within).sqrt()
}

/// Rank-normalized split R-hat: the larger of the bulk value and the value
/// for absolute deviations from the median.
pub fn rank_normalized_rhat(chains: &[Vec<f64>]) -> f64 {
    let split = split_chains(chains);
    let bulk = rhat_of(&rank_normalize(&split));

    let mut all: Vec<f64> = split.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    let median = crate::stats::quantile_sorted(&all, 0.5);
    let folded: Vec<Vec<f64>> = split
        .iter()
        .map(|c| c.iter().map(|x| (x - median).abs()).collect())
        .collect();
    let tail = rhat_of(&rank_normalize(&folded));
    bulk.max(tail)
}

/// Bulk ESS: the ESS of rank-normalized split chains.
pub fn ess_bulk(chains: &[Vec<f64>]) -> f64 {
    ess_of(&rank_normalize(&split_chains(chains)))
}

/// ESS of the raw values of split chains, for Monte Carlo standard errors of
/// means.
pub fn ess_mean(chains: &[Vec<f64>]) -> f64 {
    ess_of(&split_chains(chains))
}

fn autocovariance(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let m = crate::stats::mean(x);
    (0..n - lag)
        .map(|i| (x[i] - m) * (x[i + lag] - m))
        .sum::<f64>()
        / n as f64
}

/// Multi-chain ESS with Geyer's initial monotone sequence estimator.
pub fn ess_of(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    if n < 4 {
        return f64::NAN;
    }
    let mean_acov =
        |lag: usize| chains.iter().map(|c| autocovariance(c, lag)).sum::<f64>() / m as f64;

    let chain_means: Vec<f64> = chains.iter().map(|c| crate::stats::mean(c)).collect();
    let mean_var = chains
        .iter()
        .map(|c| autocovariance(c, 0) * n as f64 / (n - 1) as f64)
        .sum::<f64>()
        / m as f64;
    let mut var_plus = mean_var * (n - 1) as f64 / n as f64;
    if m > 1 {
        var_plus += crate::stats::variance(&chain_means);
    }
    if !(var_plus > 0.0) {
        return f64::NAN;
    }

    let mut rho = vec![0.0; n];
    rho[0] = 1.0;
    let mut rho_even = 1.0;
    let mut rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
    rho[1] = rho_odd;
    let mut s = 1;
    while s < n - 4 && rho_even + rho_odd > 0.0 {
        rho_even = 1.0 - (mean_var - mean_acov(s + 1)) / var_plus;
        rho_odd = 1.0 - (mean_var - mean_acov(s + 2)) / var_plus;
        if rho_even + rho_odd >= 0.0 {
            rho[s + 1] = rho_even;
            rho[s + 2] = rho_odd;
        }
        s += 2;
    }
    let max_s = s;
    if rho[max_s] > 0.0 && max_s + 1 < n {
        rho[max_s + 1] = rho[max_s];
    }

    // initial monotone sequence
    let mut s = 1;
    while s + 3 <= max_s {
        if rho[s + 1] + rho[s + 2] > rho[s - 1] + rho[s] {
            rho[s + 1] = 0.5 * (rho[s - 1] + rho[s]);
            rho[s + 2] = rho[s + 1];
        }
        s += 2;
    }

    let total = (m * n) as f64;
    let tail = if max_s + 1 < n { rho[max_s + 1] } else { 0.0 };
    let tau = (-1.0 + 2.0 * rho[..max_s].iter().sum::<f64>() + tail).max(1.0 / total.log10());
    total / tau
}
