//! Marginal distributions and views of the minimum and maximum of two iid
//! copies.

mod discrete;
mod mixed_erlang;

pub use discrete::Discrete;
pub use mixed_erlang::{counting, MixedErlang, Truncation, DEFAULT_QUANTILE_TOL};

use crate::error::{FgmError, Result};
use crate::risk::bisect_quantile;
use crate::special::{ln_binomial, ln_gamma, std_normal_cdf};
use statrs::distribution::{ContinuousCDF, Normal};

/// Which of the two order statistics of an iid pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrderStat {
    Min,
    Max,
}

/// Catalog of supported marginal laws.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    Exponential { rate: f64 },
    MixedErlang(MixedErlang),
    /// `F̄(x) = (1 + ((x - location)/scale)^{1/inequality})^{-shape}` for `x > location`.
    ParetoIV { location: f64, scale: f64, inequality: f64, shape: f64 },
    /// `F̄(x) = exp(-(rate x)^shape)`.
    Weibull { rate: f64, shape: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Discrete(Discrete),
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(FgmError::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Marginal {
    pub fn exponential(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(Marginal::Exponential { rate })
    }

    pub fn pareto_iv(location: f64, scale: f64, inequality: f64, shape: f64) -> Result<Self> {
        if !(location >= 0.0 && location.is_finite()) {
            return Err(FgmError::InvalidParameter(format!(
                "Pareto IV location must be >= 0 for a nonnegative risk, got {location}"
            )));
        }
        positive("scale", scale)?;
        positive("inequality", inequality)?;
        positive("shape", shape)?;
        Ok(Marginal::ParetoIV { location, scale, inequality, shape })
    }

    pub fn weibull(rate: f64, shape: f64) -> Result<Self> {
        positive("rate", rate)?;
        positive("shape", shape)?;
        Ok(Marginal::Weibull { rate, shape })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(FgmError::InvalidParameter(format!("log-mean must be finite, got {mu}")));
        }
        positive("sigma", sigma)?;
        Ok(Marginal::LogNormal { mu, sigma })
    }

    /// Log-normal with the given mean and variance.
    pub fn lognormal_from_moments(mean: f64, variance: f64) -> Result<Self> {
        positive("mean", mean)?;
        positive("variance", variance)?;
        let s2 = (variance / (mean * mean)).ln_1p();
        Self::lognormal(mean.ln() - 0.5 * s2, s2.sqrt())
    }

    pub fn label(&self) -> &'static str {
        match self {
            Marginal::Exponential { .. } => "exponential",
            Marginal::MixedErlang(_) => "mixed_erlang",
            Marginal::ParetoIV { .. } => "pareto_iv",
            Marginal::Weibull { .. } => "weibull",
            Marginal::LogNormal { .. } => "lognormal",
            Marginal::Discrete(_) => "discrete",
        }
    }

    /// The law as a mixed Erlang, when it is one.
    pub fn as_mixed_erlang(&self) -> Option<MixedErlang> {
        match self {
            Marginal::Exponential { rate } => MixedErlang::exponential(*rate).ok(),
            Marginal::MixedErlang(m) => Some(m.clone()),
            _ => None,
        }
    }

    pub fn sf(&self, x: f64) -> f64 {
        match self {
            Marginal::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Marginal::MixedErlang(m) => m.sf(x),
            Marginal::ParetoIV { location, scale, inequality, shape } => {
                if x <= *location {
                    1.0
                } else {
                    let z = ((x - location) / scale).powf(1.0 / inequality);
                    (-shape * z.ln_1p()).exp()
                }
            }
            Marginal::Weibull { rate, shape } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-(rate * x).powf(*shape)).exp()
                }
            }
            Marginal::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    1.0
                } else {
                    std_normal_cdf(-(x.ln() - mu) / sigma)
                }
            }
            Marginal::Discrete(d) => d.sf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Marginal::Weibull { rate, shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(rate * x).powf(*shape)).exp_m1()
                }
            }
            Marginal::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x.ln() - mu) / sigma)
                }
            }
            Marginal::Discrete(d) => d.cdf(x),
            _ => 1.0 - self.sf(x),
        }
    }

    /// Generalized inverse `inf{x : F(x) >= u}`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(FgmError::InvalidLevel(u));
        }
        // -ln(1 - u) without cancellation for small u
        let neg_log_sf = -(-u).ln_1p();
        Ok(match self {
            Marginal::Exponential { rate } => neg_log_sf / rate,
            Marginal::MixedErlang(m) => m.quantile(u)?,
            Marginal::ParetoIV { location, scale, inequality, shape } => {
                location + scale * (neg_log_sf / shape).exp_m1().powf(*inequality)
            }
            Marginal::Weibull { rate, shape } => neg_log_sf.powf(1.0 / shape) / rate,
            Marginal::LogNormal { mu, sigma } => {
                let z = Normal::standard().inverse_cdf(u);
                (mu + sigma * z).exp()
            }
            Marginal::Discrete(d) => d.quantile(u)?,
        })
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(1)
    }

    pub fn variance(&self) -> Result<f64> {
        let m = self.moment(1)?;
        Ok(self.moment(2)? - m * m)
    }

    /// `E[X^k]`.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        Ok(match self {
            Marginal::Exponential { rate } => {
                (ln_gamma(k as f64 + 1.0) - k as f64 * rate.ln()).exp()
            }
            Marginal::MixedErlang(m) => m.moment(k),
            Marginal::ParetoIV { location, scale, inequality, shape } => {
                pareto_moment(*location, *scale, *inequality, *shape, k)?
            }
            Marginal::Weibull { rate, shape } => {
                (ln_gamma(1.0 + k as f64 / shape) - k as f64 * rate.ln()).exp()
            }
            Marginal::LogNormal { mu, sigma } => {
                let kf = k as f64;
                (kf * mu + 0.5 * kf * kf * sigma * sigma).exp()
            }
            Marginal::Discrete(d) => d.moment(k),
        })
    }

    /// `E[X_{[j]}^k]` from closed forms.
    ///
    /// Log-normal and lattice laws have none; aggregate them by
    /// discretization instead.
    pub fn os_moment(&self, which: OrderStat, k: u32) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        let min = match self {
            Marginal::Exponential { rate } => {
                (ln_gamma(k as f64 + 1.0) - k as f64 * (2.0 * rate).ln()).exp()
            }
            Marginal::MixedErlang(m) => m.order_weights(Truncation::default())?.0.moment(k),
            Marginal::ParetoIV { location, scale, inequality, shape } => {
                pareto_moment(*location, *scale, *inequality, 2.0 * shape, k)?
            }
            Marginal::Weibull { shape, .. } => {
                // the minimum of two copies is Weibull with rate 2^{1/τ}β
                self.moment(k)? * 2f64.powf(-(k as f64) / shape)
            }
            Marginal::LogNormal { .. } | Marginal::Discrete(_) => {
                return Err(FgmError::Unsupported(format!(
                    "no closed-form order-statistic moments for {} marginals; discretize instead",
                    self.label()
                )))
            }
        };
        Ok(match which {
            OrderStat::Min => min,
            OrderStat::Max => 2.0 * self.moment(k)? - min,
        })
    }

    pub fn order_stat(&self, which: OrderStat) -> OrderStatView<'_> {
        OrderStatView { source: self, which }
    }

    /// Min/max weights at rate 2β for mixed Erlang laws.
    pub fn me_order_weights(&self, trunc: Truncation) -> Result<(MixedErlang, MixedErlang)> {
        self.as_mixed_erlang()
            .ok_or_else(|| {
                FgmError::Unsupported(format!("{} marginal is not mixed Erlang", self.label()))
            })?
            .order_weights(trunc)
    }
}

/// `E[(μ + σY)^k]` for the standard Pareto IV variable `Y`, whose moments are
/// `Γ(α - γi) Γ(1 + γi) / Γ(α)`.
fn pareto_moment(mu: f64, sigma: f64, gamma: f64, alpha: f64, k: u32) -> Result<f64> {
    if k as f64 * gamma >= alpha {
        return Err(FgmError::MomentNotFinite {
            order: k,
            reason: format!("Pareto IV moments need order < alpha/gamma = {}", alpha / gamma),
        });
    }
    let std_moment =
        |i: u32| (ln_gamma(alpha - gamma * i as f64) + ln_gamma(1.0 + gamma * i as f64) - ln_gamma(alpha)).exp();
    if mu == 0.0 {
        return Ok(sigma.powi(k as i32) * std_moment(k));
    }
    Ok((0..=k)
        .map(|i| {
            ln_binomial(k as usize, i as usize).exp()
                * mu.powi((k - i) as i32)
                * sigma.powi(i as i32)
                * std_moment(i)
        })
        .sum())
}

/// Law of `X_{[1]}` or `X_{[2]}` for two iid copies of a marginal.
#[derive(Debug, Clone, Copy)]
pub struct OrderStatView<'a> {
    pub source: &'a Marginal,
    pub which: OrderStat,
}

impl OrderStatView<'_> {
    pub fn cdf(&self, x: f64) -> f64 {
        match self.which {
            OrderStat::Min => {
                let s = self.source.sf(x);
                1.0 - s * s
            }
            OrderStat::Max => self.source.cdf(x).powi(2),
        }
    }

    /// Quantile through the probability-integral transform of the
    /// uniform order statistics.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(FgmError::InvalidLevel(u));
        }
        let v = match self.which {
            OrderStat::Min => 1.0 - (1.0 - u).sqrt(),
            OrderStat::Max => u.sqrt(),
        };
        self.source.quantile(v)
    }

    pub fn moment(&self, k: u32) -> Result<f64> {
        self.source.os_moment(self.which, k)
    }

    /// Lattice masses of the order statistic, for lattice sources.
    pub fn pmf(&self) -> Result<Discrete> {
        match self.source {
            Marginal::Discrete(d) => {
                let (lo, hi) = d.order_pmfs();
                Ok(if self.which == OrderStat::Min { lo } else { hi })
            }
            other => Err(FgmError::Unsupported(format!("{} marginal has no pmf", other.label()))),
        }
    }
}

/// Quantile by bisection for any marginal; used to cross-check closed forms.
pub fn quantile_by_bisection(m: &Marginal, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(FgmError::InvalidLevel(u));
    }
    let hint = m.mean().unwrap_or(1.0).max(1e-3);
    Ok(bisect_quantile(|x| m.cdf(x), u, 2.0 * hint, 1e-13))
}
