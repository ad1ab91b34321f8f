//! Adaptive Hamiltonian Monte Carlo (NUTS) with warmup adaptation and
//! convergence diagnostics.
//!
//! Chains are independent: chain `c` draws from the ChaCha stream `c` of the
//! configured seed, so results do not depend on whether chains run in
//! parallel or in which order they finish.

mod adapt;
pub mod diagnostics;
mod nuts;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::exec::Execution;
use crate::model::{BetaScale, ParamVector, PriorSpec};
use crate::{Error, Result};

pub use adapt::DualAverageOptions;
use adapt::{DualAverage, RunningVariance, WindowSchedule};
pub use diagnostics::{diagnostics, ParamDiagnostics};
use nuts::{find_reasonable_step, transition, Hamiltonian, PhasePoint};

/// An unnormalized log density with gradient.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Returns `log p(position)` and writes its gradient into `grad`.
    /// Non-finite values are treated as zero density.
    fn logp_and_grad(&self, position: &[f64], grad: &mut [f64]) -> f64;
}

impl<T: LogDensity + ?Sized> LogDensity for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn logp_and_grad(&self, position: &[f64], grad: &mut [f64]) -> f64 {
        (**self).logp_and_grad(position, grad)
    }
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup: usize,
    pub samples: usize,
    pub target_accept: f64,
    pub max_tree_depth: u32,
    pub seed: u64,
    /// Hamiltonian error (in nats) beyond which a transition is divergent.
    pub max_energy_error: f64,
    pub dual_average: DualAverageOptions,
    pub execution: Execution,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            warmup: 1000,
            samples: 1000,
            target_accept: 0.8,
            max_tree_depth: 10,
            seed: 42,
            max_energy_error: 1000.0,
            dual_average: DualAverageOptions::default(),
            execution: Execution::default(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.samples == 0 || self.max_tree_depth == 0 {
            return Err(Error::InvalidConfig(
                "chains, samples and max_tree_depth must be positive".into(),
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "target_accept must lie in (0, 1), got {}",
                self.target_accept
            )));
        }
        Ok(())
    }
}

/// Post-warmup output of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    /// Row-major `samples x dim`.
    pub values: Vec<f64>,
    pub lp: Vec<f64>,
    pub divergent: Vec<bool>,
    pub accept_stat: Vec<f64>,
    pub tree_depth: Vec<u32>,
    pub stepsize: f64,
    pub inv_mass: Vec<f64>,
}

impl ChainDraws {
    pub fn len(&self) -> usize {
        self.lp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lp.is_empty()
    }
}

/// Posterior draws of every chain, with the adaptation record.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawMatrix {
    names: Vec<String>,
    chains: Vec<ChainDraws>,
}

impl DrawMatrix {
    pub fn new(names: Vec<String>, chains: Vec<ChainDraws>) -> Result<Self> {
        let dim = names.len();
        let n = chains.first().map_or(0, ChainDraws::len);
        for (c, chain) in chains.iter().enumerate() {
            let consistent = chain.len() == n
                && chain.values.len() == n * dim
                && chain.divergent.len() == n
                && chain.accept_stat.len() == n
                && chain.tree_depth.len() == n;
            if !consistent {
                return Err(Error::InvalidConfig(format!(
                    "chain {c} has inconsistent dimensions"
                )));
            }
        }
        Ok(DrawMatrix { names, chains })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    /// Draws per chain.
    pub fn n_samples(&self) -> usize {
        self.chains.first().map_or(0, ChainDraws::len)
    }

    pub fn n_draws(&self) -> usize {
        self.n_chains() * self.n_samples()
    }

    pub fn chains(&self) -> &[ChainDraws] {
        &self.chains
    }

    pub fn draw(&self, chain: usize, i: usize) -> &[f64] {
        let d = self.dim();
        &self.chains[chain].values[i * d..(i + 1) * d]
    }

    /// All draws, chain by chain.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        let d = self.dim();
        self.chains
            .iter()
            .flat_map(move |c| c.values.chunks_exact(d))
    }

    pub fn column(&self, chain: usize, j: usize) -> Vec<f64> {
        let d = self.dim();
        self.chains[chain]
            .values
            .iter()
            .skip(j)
            .step_by(d)
            .copied()
            .collect()
    }

    /// Column `j` of every chain, concatenated.
    pub fn pooled(&self, j: usize) -> Vec<f64> {
        (0..self.n_chains())
            .flat_map(|c| self.column(c, j))
            .collect()
    }

    pub fn divergences(&self) -> usize {
        self.chains
            .iter()
            .map(|c| c.divergent.iter().filter(|&&d| d).count())
            .sum()
    }

    /// Applies a row transform, keeping per-draw statistics.
    pub fn map_values<F>(&self, names: &[&str], f: F) -> DrawMatrix
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let d_in = self.dim();
        let d_out = names.len();
        let chains = self
            .chains
            .iter()
            .map(|c| {
                let mut values = vec![0.0; c.len() * d_out];
                for (row, out) in c
                    .values
                    .chunks_exact(d_in)
                    .zip(values.chunks_exact_mut(d_out))
                {
                    f(row, out);
                }
                ChainDraws {
                    values,
                    ..c.clone()
                }
            })
            .collect();
        DrawMatrix {
            names: names.iter().map(|s| s.to_string()).collect(),
            chains,
        }
    }

    /// Keeps every `step`-th draw of each chain, at most `max` per chain.
    pub fn thinned(&self, step: usize, max: usize) -> DrawMatrix {
        let d = self.dim();
        let chains = self
            .chains
            .iter()
            .map(|c| {
                let keep: Vec<usize> = (0..c.len()).step_by(step.max(1)).take(max).collect();
                ChainDraws {
                    values: keep
                        .iter()
                        .flat_map(|&i| c.values[i * d..(i + 1) * d].iter().copied())
                        .collect(),
                    lp: keep.iter().map(|&i| c.lp[i]).collect(),
                    divergent: keep.iter().map(|&i| c.divergent[i]).collect(),
                    accept_stat: keep.iter().map(|&i| c.accept_stat[i]).collect(),
                    tree_depth: keep.iter().map(|&i| c.tree_depth[i]).collect(),
                    stepsize: c.stepsize,
                    inv_mass: c.inv_mass.clone(),
                }
            })
            .collect();
        DrawMatrix {
            names: self.names.clone(),
            chains,
        }
    }
}

/// Maximum number of rejected draws of a positive `beta` per initial value.
const MAX_BETA_REJECTIONS: usize = 1000;

/// One draw per chain from the (inflated) prior, on the sampling scale.
///
/// A natural-scale `beta` component is redrawn until positive.
pub fn sample_initials<R: Rng>(
    prior: &PriorSpec,
    chains: usize,
    rng: &mut R,
) -> Result<Vec<ParamVector>> {
    prior.validate()?;
    let draw = |i: usize, rng: &mut R| {
        let z: f64 = rng.sample(StandardNormal);
        prior.effective_mean(i) + prior.effective_sd(i) * z
    };
    (0..chains)
        .map(|_| {
            let log_p = draw(0, rng);
            let log_alpha = draw(1, rng);
            let log_beta = match prior.beta_scale {
                BetaScale::Log => draw(2, rng),
                BetaScale::Natural => {
                    let mut attempts = 0;
                    loop {
                        let beta = draw(2, rng);
                        if beta > 0.0 {
                            break beta.ln();
                        }
                        attempts += 1;
                        if attempts >= MAX_BETA_REJECTIONS {
                            return Err(Error::PriorSampling(attempts));
                        }
                    }
                }
            };
            let eta = draw(3, rng);
            Ok(ParamVector::new(log_p, log_alpha, log_beta, eta))
        })
        .collect()
}

/// Like [`sample_initials`], but each chain starts from the best of
/// `candidates` prior draws under `target`. Guards against vague priors
/// placing a chain in a far-off, nearly flat region of the posterior.
pub fn sample_initials_best_of<R: Rng, T: LogDensity + ?Sized>(
    prior: &PriorSpec,
    target: &T,
    chains: usize,
    candidates: usize,
    rng: &mut R,
) -> Result<Vec<ParamVector>> {
    let mut grad = vec![0.0; target.dim()];
    (0..chains)
        .map(|_| {
            let pool = sample_initials(prior, candidates.max(1), rng)?;
            let scored = pool.into_iter().map(|theta| {
                let lp = target.logp_and_grad(&theta.to_array(), &mut grad);
                (if lp.is_nan() { f64::NEG_INFINITY } else { lp }, theta)
            });
            Ok(scored
                .reduce(|best, c| if c.0 > best.0 { c } else { best })
                .expect("at least one candidate")
                .1)
        })
        .collect()
}

/// RNG for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs NUTS on every chain from the given initial positions.
pub fn nuts_sample<T: LogDensity + ?Sized>(
    target: &T,
    init: &[Vec<f64>],
    cfg: &SamplerConfig,
) -> Result<DrawMatrix> {
    cfg.validate()?;
    if init.len() != cfg.chains {
        return Err(Error::InvalidConfig(format!(
            "{} initial points for {} chains",
            init.len(),
            cfg.chains
        )));
    }
    let dim = target.dim();
    if let Some(bad) = init.iter().position(|x| x.len() != dim) {
        return Err(Error::InvalidConfig(format!(
            "initial point {bad} has wrong dimension"
        )));
    }

    let chains = cfg
        .execution
        .map(cfg.chains, |c| run_chain(target, &init[c], c, cfg));
    let chains = chains.into_iter().collect::<Result<Vec<_>>>()?;
    let names = (0..dim).map(|j| format!("x{j}")).collect();
    DrawMatrix::new(names, chains)
}

fn run_chain<T: LogDensity + ?Sized>(
    target: &T,
    init: &[f64],
    chain: usize,
    cfg: &SamplerConfig,
) -> Result<ChainDraws> {
    let dim = init.len();
    let mut rng = stream_rng(cfg.seed, chain as u64);
    let mut z = PhasePoint::new(target, init.to_vec());
    if !z.logp.is_finite() || z.grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteInit { chain });
    }

    let mut inv_mass = vec![1.0; dim];
    let mut eps = {
        let ham = Hamiltonian {
            target,
            inv_mass: &inv_mass,
        };
        find_reasonable_step(&ham, &z, 1.0, &mut rng)
    };
    let mut dual = DualAverage::new(cfg.dual_average, eps);
    let mut schedule = WindowSchedule::new(cfg.warmup);
    let mut variance = RunningVariance::new(dim);

    for i in 0..cfg.warmup {
        let stats;
        {
            let ham = Hamiltonian {
                target,
                inv_mass: &inv_mass,
            };
            let (next, s) = transition(
                &ham,
                &z,
                eps,
                cfg.max_tree_depth,
                cfg.max_energy_error,
                &mut rng,
            );
            z = next;
            stats = s;
        }
        eps = dual.update(stats.accept_stat, cfg.target_accept);

        if schedule.in_slow_window(i) {
            variance.push(&z.q);
        }
        if schedule.window_closes(i) {
            inv_mass = variance.regularized();
            variance.reset();
            let ham = Hamiltonian {
                target,
                inv_mass: &inv_mass,
            };
            eps = find_reasonable_step(&ham, &z, eps, &mut rng);
            dual.restart(eps);
        }
    }
    if cfg.warmup > 0 {
        eps = dual.final_step();
    }

    let ham = Hamiltonian {
        target,
        inv_mass: &inv_mass,
    };
    let n = cfg.samples;
    let mut out = ChainDraws {
        values: Vec::with_capacity(n * dim),
        lp: Vec::with_capacity(n),
        divergent: Vec::with_capacity(n),
        accept_stat: Vec::with_capacity(n),
        tree_depth: Vec::with_capacity(n),
        stepsize: eps,
        inv_mass: inv_mass.clone(),
    };
    for _ in 0..n {
        let (next, stats) = transition(
            &ham,
            &z,
            eps,
            cfg.max_tree_depth,
            cfg.max_energy_error,
            &mut rng,
        );
        z = next;
        out.values.extend_from_slice(&z.q);
        out.lp.push(z.logp);
        out.divergent.push(stats.divergent);
        out.accept_stat.push(stats.accept_stat);
        out.tree_depth.push(stats.depth);
    }

    let divergent = out.divergent.iter().filter(|&&d| d).count();
    if divergent * 10 > n * 9 {
        return Err(Error::AllDivergent {
            chain,
            divergent,
            total: n,
        });
    }
    Ok(out)
}
