//! Ready-made portfolios used by the table reproductions and tests.

use crate::error::Result;
use crate::marginals::{counting, Marginal, MixedErlang, Truncation};

/// Six mixed Erlang risks at rate 1/2 with means 2, 4, 12, 14, 22, 26.
///
/// Shape laws: point mass at 1; geometric with ratio 1/2; and 1 plus
/// Poisson(5), negative binomial(2, 1/4), Poisson(10), negative
/// binomial(3, 1/5).
pub fn six_risk_marginals() -> Result<Vec<Marginal>> {
    let t = Truncation::default();
    let rate = 0.5;
    [
        counting::dirac(1)?,
        counting::geometric(0.5, t)?,
        counting::poisson(5.0, t)?,
        counting::negative_binomial(2.0, 0.25, t)?,
        counting::poisson(10.0, t)?,
        counting::negative_binomial(3.0, 0.2, t)?,
    ]
    .into_iter()
    .map(|w| Ok(Marginal::MixedErlang(MixedErlang::new(rate, w)?)))
    .collect()
}

/// Three log-normal risks with mean 10 and variances 20, 50 and 100.
pub fn lognormal_trio() -> Result<Vec<Marginal>> {
    [20.0, 50.0, 100.0]
        .into_iter()
        .map(|v| Marginal::lognormal_from_moments(10.0, v))
        .collect()
}
