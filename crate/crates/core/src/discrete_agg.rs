//! Lattice aggregation: pmf of `S` for discrete marginals under any
//! Bernoulli scheme, plus lower/upper discretization of continuous risks
//! and the resulting TVaR bounds.

use crate::aggregate_me::{hermitian_spectrum, spectrum_to_pmf};
use crate::bernoulli::BernoulliScheme;
use crate::error::{FgmError, Result};
use crate::fft::{forward_real, next_pow2};
use crate::marginals::{Discrete, Marginal, Truncation};
use crate::portfolio::Portfolio;
use num_complex::Complex64;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Mass of `((j-1)h, jh]` moved to `jh`; dominates the original.
    Lower,
    /// Mass of `[jh, (j+1)h)` moved to `jh`; dominated by the original.
    Upper,
}

impl std::str::FromStr for Method {
    type Err = FgmError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Method::Lower),
            "upper" => Ok(Method::Upper),
            other => Err(FgmError::InvalidParameter(format!("unknown method '{other}', expected lower or upper"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationSpec {
    pub method: Method,
    pub span: f64,
}

/// Lattice version of a marginal. The support stops once the survival
/// function drops below `trunc.eps` and the leftover tail sits on the last
/// point.
pub fn discretize(m: &Marginal, spec: DiscretizationSpec, trunc: Truncation) -> Result<Discrete> {
    let h = spec.span;
    if !(h > 0.0 && h.is_finite()) {
        return Err(FgmError::InvalidParameter(format!("span must be positive, got {h}")));
    }
    let mut masses = Vec::new();
    let mut prev_sf = 1.0;
    if spec.method == Method::Lower {
        masses.push(m.cdf(0.0));
    }
    let mut j = 1usize;
    loop {
        let sf = m.sf(j as f64 * h);
        masses.push((prev_sf - sf).max(0.0));
        prev_sf = sf;
        if sf < trunc.eps {
            *masses.last_mut().unwrap() += sf;
            break;
        }
        if masses.len() >= trunc.shape_cap {
            return Err(FgmError::Truncation { tail: sf, cap: trunc.shape_cap });
        }
        j += 1;
    }
    let total: f64 = masses.iter().sum();
    Ok(Discrete::from_parts(h, masses.into_iter().map(|p| p / total).collect()))
}

fn common_span(marginals: &[Discrete]) -> Result<f64> {
    let h = marginals
        .first()
        .ok_or_else(|| FgmError::InvalidParameter("no marginals".into()))?
        .span();
    if let Some(bad) = marginals.iter().find(|m| (m.span() - h).abs() > 1e-12 * h) {
        return Err(FgmError::InvalidParameter(format!(
            "all lattice marginals must share one span; found {h} and {}",
            bad.span()
        )));
    }
    Ok(h)
}

/// Pmf of `S` for lattice marginals on a common span.
pub fn aggregate_pmf(marginals: &[Discrete], scheme: &BernoulliScheme) -> Result<Discrete> {
    if marginals.len() != scheme.dim() {
        return Err(FgmError::DimensionMismatch { expected: marginals.len(), got: scheme.dim() });
    }
    let h = common_span(marginals)?;
    let top: usize = marginals.iter().map(|m| m.len() - 1).sum();
    let len = next_pow2(top + 1);
    let spectra: Vec<(Vec<Complex64>, Vec<Complex64>)> = marginals
        .par_iter()
        .map(|m| {
            let (lo, hi) = m.order_pmfs();
            (forward_real(lo.masses(), len), forward_real(hi.masses(), len))
        })
        .collect();
    let spectrum = hermitian_spectrum(len, |k| {
        let g: Vec<(Complex64, Complex64)> = spectra.iter().map(|(a, b)| (a[k], b[k])).collect();
        scheme.expected_product(&g)
    })?;
    let mut pmf = spectrum_to_pmf(spectrum)?;
    pmf.truncate(top + 1);
    Ok(Discrete::from_parts(h, pmf))
}

/// Discretizes every marginal of the portfolio and aggregates.
pub fn aggregate_discretized(
    portfolio: &Portfolio,
    spec: DiscretizationSpec,
    trunc: Truncation,
) -> Result<Discrete> {
    let lattice = portfolio
        .marginals()
        .par_iter()
        .map(|m| match m {
            Marginal::Discrete(d) => Ok(d.clone()),
            other => discretize(other, spec, trunc),
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate_pmf(&lattice, &portfolio.scheme()?)
}

/// `(VaR_κ, TVaR_κ)` of a lattice law.
pub fn risk_measures(pmf: &Discrete, kappa: f64) -> Result<(f64, f64)> {
    Ok((pmf.var(kappa)?, pmf.tvar(kappa)?))
}

/// `(TVaR of the upper-method aggregate, TVaR of the lower-method
/// aggregate)`, which bracket the TVaR of the continuous aggregate.
pub fn tvar_sandwich(portfolio: &Portfolio, span: f64, kappa: f64, trunc: Truncation) -> Result<(f64, f64)> {
    let mut out = [0.0; 2];
    for (slot, method) in out.iter_mut().zip([Method::Upper, Method::Lower]) {
        let pmf = aggregate_discretized(portfolio, DiscretizationSpec { method, span }, trunc)?;
        *slot = pmf.tvar(kappa)?;
    }
    Ok((out[0], out[1]))
}
