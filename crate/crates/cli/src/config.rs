//! Portfolio configuration files (TOML, strict).

use crate::CliError;
use fgm_core::aggregate_me::AggregateOptions;
use fgm_core::bernoulli::BernoulliScheme;
use fgm_core::copula::FgmCopula;
use fgm_core::marginals::{counting, Marginal, Truncation, DEFAULT_QUANTILE_TOL};
use fgm_core::portfolio::{Dependence, Portfolio};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioConfig {
    pub version: u32,
    pub marginals: Vec<MarginalConfig>,
    pub dependence: DependenceConfig,
    #[serde(default)]
    pub options: OptionsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarginalConfig {
    Exponential {
        rate: f64,
    },
    /// Either explicit `weights` (shape 1 first) or a `counting` law.
    MixedErlang {
        rate: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        counting: Option<CountingConfig>,
    },
    ParetoIv {
        #[serde(default)]
        location: f64,
        scale: f64,
        inequality: f64,
        shape: f64,
    },
    Weibull {
        rate: f64,
        shape: f64,
    },
    Lognormal {
        mu: f64,
        sigma: f64,
    },
    /// Log-normal given by its mean and variance.
    LognormalMoments {
        mean: f64,
        variance: f64,
    },
    Discrete {
        span: f64,
        masses: Vec<f64>,
    },
}

/// Law of the Erlang shape; every variant has support starting at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CountingConfig {
    Dirac { shape: usize },
    Geometric { p: f64 },
    Poisson { lambda: f64 },
    NegativeBinomial { r: f64, p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DependenceConfig {
    Independent,
    Epd,
    End,
    Markov { alpha: f64 },
    Exchangeable { nd_pmf: Vec<f64> },
    /// Natural parameters on 1-based subsets; missing subsets are zero.
    Thetas { thetas: Vec<ThetaEntry> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaEntry {
    pub subset: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptionsConfig {
    pub trunc_eps: f64,
    pub dft_cap: usize,
    pub bisection_tol: f64,
    pub seed: u64,
}

impl Default for OptionsConfig {
    fn default() -> Self {
        let t = Truncation::default();
        Self {
            trunc_eps: t.eps,
            dft_cap: AggregateOptions::default().dft_cap,
            bisection_tol: DEFAULT_QUANTILE_TOL,
            seed: 1,
        }
    }
}

impl OptionsConfig {
    pub fn truncation(&self) -> Truncation {
        Truncation { eps: self.trunc_eps, ..Truncation::default() }
    }

    pub fn aggregate_options(&self) -> AggregateOptions {
        AggregateOptions { trunc: self.truncation(), dft_cap: self.dft_cap }
    }
}

impl PortfolioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: PortfolioConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "version: unsupported config version {}, expected {CONFIG_VERSION}",
                cfg.version
            )));
        }
        if cfg.marginals.is_empty() {
            return Err(CliError::Config("marginals: at least one risk is required".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn portfolio(&self) -> Result<Portfolio, CliError> {
        let trunc = self.options.truncation();
        let marginals = self
            .marginals
            .iter()
            .enumerate()
            .map(|(k, m)| {
                m.build(trunc).map_err(|e| CliError::Config(format!("marginals[{k}]: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let dependence = self.dependence.build(marginals.len())?;
        Ok(Portfolio::new(marginals, dependence)?)
    }
}

impl MarginalConfig {
    pub fn build(&self, trunc: Truncation) -> fgm_core::Result<Marginal> {
        use MarginalConfig::*;
        match self {
            Exponential { rate } => Marginal::exponential(*rate),
            MixedErlang { rate, weights, counting } => {
                let w = match (weights, counting) {
                    (Some(w), None) => w.clone(),
                    (None, Some(c)) => c.weights(trunc)?,
                    _ => {
                        return Err(fgm_core::FgmError::InvalidParameter(
                            "give exactly one of `weights` or `counting`".into(),
                        ))
                    }
                };
                Ok(Marginal::MixedErlang(fgm_core::MixedErlang::new(*rate, w)?))
            }
            ParetoIv { location, scale, inequality, shape } => Marginal::pareto_iv(*location, *scale, *inequality, *shape),
            Weibull { rate, shape } => Marginal::weibull(*rate, *shape),
            Lognormal { mu, sigma } => Marginal::lognormal(*mu, *sigma),
            LognormalMoments { mean, variance } => Marginal::lognormal_from_moments(*mean, *variance),
            Discrete { span, masses } => Ok(Marginal::Discrete(fgm_core::Discrete::new(*span, masses.clone())?)),
        }
    }
}

impl CountingConfig {
    fn weights(&self, trunc: Truncation) -> fgm_core::Result<Vec<f64>> {
        match *self {
            CountingConfig::Dirac { shape } => counting::dirac(shape),
            CountingConfig::Geometric { p } => counting::geometric(p, trunc),
            CountingConfig::Poisson { lambda } => counting::poisson(lambda, trunc),
            CountingConfig::NegativeBinomial { r, p } => counting::negative_binomial(r, p, trunc),
        }
    }
}

impl DependenceConfig {
    pub fn build(&self, d: usize) -> Result<Dependence, CliError> {
        let scheme = match self {
            DependenceConfig::Independent => BernoulliScheme::independent(d),
            DependenceConfig::Epd => BernoulliScheme::comonotone(d),
            DependenceConfig::End => BernoulliScheme::end(d),
            DependenceConfig::Markov { alpha } => BernoulliScheme::markov(d, *alpha),
            DependenceConfig::Exchangeable { nd_pmf } => {
                if nd_pmf.len() != d + 1 {
                    return Err(CliError::Config(format!(
                        "dependence.nd_pmf: needs d + 1 = {} entries, got {}",
                        d + 1,
                        nd_pmf.len()
                    )));
                }
                BernoulliScheme::exchangeable(d, nd_pmf.clone())
            }
            DependenceConfig::Thetas { thetas } => {
                let mut entries = Vec::with_capacity(thetas.len());
                for (n, t) in thetas.iter().enumerate() {
                    if t.subset.iter().any(|&k| k == 0 || k > d) {
                        return Err(CliError::Config(format!(
                            "dependence.thetas[{n}].subset: indices are 1-based and must lie in 1..={d}"
                        )));
                    }
                    entries.push((t.subset.iter().map(|k| k - 1).collect::<Vec<_>>(), t.value));
                }
                return Ok(Dependence::Copula(FgmCopula::new(d, entries)?));
            }
        };
        Ok(Dependence::Scheme(scheme?))
    }
}

