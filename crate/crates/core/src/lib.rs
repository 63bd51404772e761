//! Risk aggregation and capital allocation under FGM copulas, using the
//! stochastic representation through symmetric multivariate Bernoulli
//! vectors.

pub mod aggregate_me;
pub mod allocation;
pub mod bernoulli;
pub mod copula;
pub mod discrete_agg;
pub mod error;
pub mod fft;
pub mod marginals;
pub mod mc_oracle;
pub mod moments;
pub mod portfolio;
pub mod presets;
pub mod risk;
pub mod special;

pub use bernoulli::{BernoulliScheme, SchemeKind};
pub use copula::FgmCopula;
pub use error::{FgmError, Result};
pub use marginals::{Discrete, Marginal, MixedErlang, OrderStat, Truncation};
pub use portfolio::{Dependence, Portfolio};
