use crate::bernoulli::BernoulliScheme;
use crate::copula::{theta_from_scheme, FgmCopula};
use crate::error::{FgmError, Result};
use crate::marginals::Marginal;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

/// How the dependence of a portfolio is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum Dependence {
    Scheme(BernoulliScheme),
    Copula(FgmCopula),
}

/// Marginals plus one FGM dependence structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    marginals: Vec<Marginal>,
    dependence: Dependence,
}

impl Portfolio {
    pub fn new(marginals: Vec<Marginal>, dependence: Dependence) -> Result<Self> {
        let dim = match &dependence {
            Dependence::Scheme(s) => s.dim(),
            Dependence::Copula(c) => {
                c.check_admissible()?;
                c.dim()
            }
        };
        if marginals.is_empty() {
            return Err(FgmError::InvalidParameter("portfolio needs at least one risk".into()));
        }
        if dim != marginals.len() {
            return Err(FgmError::DimensionMismatch { expected: marginals.len(), got: dim });
        }
        Ok(Self { marginals, dependence })
    }

    pub fn with_scheme(marginals: Vec<Marginal>, scheme: BernoulliScheme) -> Result<Self> {
        Self::new(marginals, Dependence::Scheme(scheme))
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn dependence(&self) -> &Dependence {
        &self.dependence
    }

    /// The Bernoulli scheme, building a dense table when only θ is known.
    pub fn scheme(&self) -> Result<BernoulliScheme> {
        match &self.dependence {
            Dependence::Scheme(s) => Ok(s.clone()),
            Dependence::Copula(c) => c.to_scheme(),
        }
    }

    /// Natural parameters, optionally only up to subsets of `max_order`.
    pub fn copula(&self, max_order: Option<usize>) -> Result<FgmCopula> {
        match &self.dependence {
            Dependence::Scheme(s) => theta_from_scheme(s, max_order),
            Dependence::Copula(c) => Ok(c.clone()),
        }
    }

    pub fn replace_scheme(&self, scheme: BernoulliScheme) -> Result<Self> {
        Self::with_scheme(self.marginals.clone(), scheme)
    }

    /// Stable digest of the full specification, for provenance records.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        format!("{:?}", self).hash(&mut h);
        h.finish()
    }
}
