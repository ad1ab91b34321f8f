//! Bayesian forecasting of epidemic death counts.
//!
//! Daily deaths are modelled as Poisson with an intensity proportional to a
//! skew-normal density, `lambda(t) = p * g(t | alpha, beta, eta) * K`, where `K`
//! is the population in millions and `p` the asymptotic number of deaths per
//! million. Posteriors are sampled with NUTS; posterior summaries of one fit
//! can be transferred as the prior of another.
//!
//! Module map:
//!
//! * [`specfun`]: normal-family special functions, Owen's T, skew-normal law.
//! * [`model`]: likelihood, priors and their analytic gradients.
//! * [`sampler`]: NUTS with warmup adaptation and convergence diagnostics.
//! * [`quantities`]: derived epidemic quantities and predictive bands.
//! * [`dataio`]: ECDC ingestion and artifact serialization.
//! * [`plot`]: standalone SVG figures.
//! * [`oracle`]: brute-force references and simulation-based calibration.

// `!(x > y)` is used on purpose so that NaN takes the failing branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataio;
mod error;
pub mod exec;
pub mod model;
pub mod oracle;
pub mod plot;
pub mod quantities;
pub mod roots;
pub mod sampler;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{DeathSeries, ParamVector, PriorSpec};
pub use quantities::ForecastSummary;
pub use sampler::{DrawMatrix, SamplerConfig};
pub use specfun::SkewNormalParams;
