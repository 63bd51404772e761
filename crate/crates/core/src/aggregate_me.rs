//! Exact aggregation of mixed Erlang risks: the sum is again mixed Erlang
//! at twice the common rate, with weights obtained in pgf space.

use crate::bernoulli::BernoulliScheme;
use crate::error::{FgmError, Result};
use crate::fft::{forward_real, inverse_to_real, next_pow2};
use crate::marginals::{MixedErlang, Truncation};
use crate::portfolio::Portfolio;
use crate::special::LnFactorials;
use num_complex::Complex64;
use rayon::prelude::*;

/// Largest imaginary part tolerated after the inverse transform.
pub const IMAG_TOL: f64 = 1e-9;
/// Negative weights above this are float noise and get clipped.
pub const CLIP_TOL: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateOptions {
    pub trunc: Truncation,
    /// Largest transform length allowed.
    pub dft_cap: usize,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        Self { trunc: Truncation::default(), dft_cap: 1 << 24 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub portfolio_hash: u64,
    pub trunc_eps: f64,
    /// Transform length used, or 0 for closed-form paths.
    pub dft_len: usize,
}

/// Mixed Erlang law of the aggregate loss.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateME {
    law: MixedErlang,
    provenance: Provenance,
}

impl AggregateME {
    pub fn law(&self) -> &MixedErlang {
        &self.law
    }

    pub fn rate(&self) -> f64 {
        self.law.rate()
    }

    pub fn weights(&self) -> &[f64] {
        self.law.weights()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.law.cdf(x)
    }

    pub fn sf(&self, x: f64) -> f64 {
        self.law.sf(x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.law.pdf(x)
    }

    pub fn mean(&self) -> f64 {
        self.law.mean()
    }

    pub fn variance(&self) -> f64 {
        self.law.variance()
    }

    pub fn moment(&self, k: u32) -> f64 {
        self.law.moment(k)
    }

    pub fn var_risk(&self, kappa: f64) -> Result<f64> {
        self.law.var(kappa)
    }

    pub fn tvar(&self, kappa: f64) -> Result<f64> {
        self.law.tvar(kappa)
    }
}

/// Every marginal of the portfolio as a mixed Erlang law.
pub(crate) fn mixed_erlang_marginals(portfolio: &Portfolio) -> Result<Vec<MixedErlang>> {
    portfolio
        .marginals()
        .iter()
        .map(|m| {
            m.as_mixed_erlang().ok_or_else(|| {
                FgmError::Unsupported(format!(
                    "exact aggregation needs mixed Erlang or exponential marginals, got {}",
                    m.label()
                ))
            })
        })
        .collect()
}

/// Counting pmfs (index = shape) of the minimum and maximum of each risk,
/// all expressed at the common rate `2 max β`. Identical marginals share
/// one entry of `unique`; `index[k]` points risk `k` at its entry.
pub(crate) struct OrderPairs {
    pub rate: f64,
    pub unique: Vec<(Vec<f64>, Vec<f64>)>,
    pub index: Vec<usize>,
}

pub(crate) fn order_pairs(marginals: &[MixedErlang], trunc: Truncation) -> Result<OrderPairs> {
    let beta = marginals.iter().map(|m| m.rate()).fold(0.0, f64::max);
    let mut distinct: Vec<&MixedErlang> = Vec::new();
    let index = marginals
        .iter()
        .map(|m| match distinct.iter().position(|u| *u == m) {
            Some(i) => i,
            None => {
                distinct.push(m);
                distinct.len() - 1
            }
        })
        .collect();
    let unique = distinct
        .par_iter()
        .map(|m| {
            let (lo, hi) = m.rescale_rate(beta, trunc)?.order_weights(trunc)?;
            Ok((lo.counting_pmf(), hi.counting_pmf()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OrderPairs { rate: 2.0 * beta, unique, index })
}

impl OrderPairs {
    /// Smallest power-of-two length holding the convolution of all pairs.
    pub(crate) fn dft_len(&self, cap: usize) -> Result<usize> {
        let top: usize = self
            .index
            .iter()
            .map(|&i| {
                let (a, b) = &self.unique[i];
                a.len().max(b.len()) - 1
            })
            .sum();
        let len = next_pow2(top + 1);
        if len > cap {
            return Err(FgmError::TransformTooLong { needed: len, cap });
        }
        Ok(len)
    }

    /// Transforms of the distinct pairs.
    pub(crate) fn spectra(&self, len: usize) -> Vec<(Vec<Complex64>, Vec<Complex64>)> {
        self.unique
            .par_iter()
            .map(|(a, b)| (forward_real(a, len), forward_real(b, len)))
            .collect()
    }
}

/// Runs `node(k)` for the nonnegative-frequency half of the spectrum and
/// fills the rest by conjugate symmetry, which holds for real sequences.
pub(crate) fn hermitian_spectrum<F>(len: usize, node: F) -> Result<Vec<Complex64>>
where
    F: Fn(usize) -> Result<Complex64> + Sync,
{
    let half = len / 2;
    let lower = (0..=half).into_par_iter().map(&node).collect::<Result<Vec<_>>>()?;
    let mut full = lower;
    full.resize(len, Complex64::new(0.0, 0.0));
    for k in half + 1..len {
        full[k] = full[len - k].conj();
    }
    Ok(full)
}

/// Inverse transform, residue check, clipping and renormalization.
pub(crate) fn spectrum_to_pmf(spectrum: Vec<Complex64>) -> Result<Vec<f64>> {
    let (mut pmf, residue) = inverse_to_real(spectrum);
    if residue > IMAG_TOL {
        return Err(FgmError::ImaginaryResidue(residue));
    }
    let mut clipped = 0.0_f64;
    for p in pmf.iter_mut() {
        if *p < 0.0 {
            if *p < CLIP_TOL {
                return Err(FgmError::InvalidParameter(format!(
                    "transform produced mass {p:.3e}; the dependence structure is probably not a valid Bernoulli law"
                )));
            }
            clipped = clipped.min(*p);
            *p = 0.0;
        }
    }
    if clipped < -1e-12 {
        log::debug!("clipped negative masses down to {clipped:.3e}");
    }
    let total: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= total);
    Ok(pmf)
}

/// Drops the float-noise floor past the true tail.
fn trim_noise(mut pmf: Vec<f64>, eps: f64) -> Vec<f64> {
    let floor = eps * 1e-4;
    while pmf.len() > 2 && *pmf.last().unwrap() < floor {
        pmf.pop();
    }
    pmf
}

/// Aggregate weights for mixed Erlang marginals under any Bernoulli scheme.
pub fn aggregate_mixed_erlang(
    marginals: &[MixedErlang],
    scheme: &BernoulliScheme,
    opts: AggregateOptions,
) -> Result<(MixedErlang, usize)> {
    if marginals.len() != scheme.dim() {
        return Err(FgmError::DimensionMismatch { expected: marginals.len(), got: scheme.dim() });
    }
    let pairs = order_pairs(marginals, opts.trunc)?;
    let len = pairs.dft_len(opts.dft_cap)?;
    let spectra = pairs.spectra(len);
    let spectrum = hermitian_spectrum(len, |k| {
        let g: Vec<(Complex64, Complex64)> = pairs
            .index
            .iter()
            .map(|&i| (spectra[i].0[k], spectra[i].1[k]))
            .collect();
        scheme.expected_product(&g)
    })?;
    let pmf = trim_noise(spectrum_to_pmf(spectrum)?, opts.trunc.eps);
    Ok((MixedErlang::from_counting(pairs.rate, &pmf), len))
}

/// Exact law of `S` for a portfolio of mixed Erlang (or exponential) risks.
pub fn aggregate(portfolio: &Portfolio, opts: AggregateOptions) -> Result<AggregateME> {
    let marginals = mixed_erlang_marginals(portfolio)?;
    let scheme = portfolio.scheme()?;
    let (law, dft_len) = aggregate_mixed_erlang(&marginals, &scheme, opts)?;
    Ok(AggregateME {
        law,
        provenance: Provenance {
            portfolio_hash: portfolio.fingerprint(),
            trunc_eps: opts.trunc.eps,
            dft_len,
        },
    })
}

/// Closed-form path for `d` iid exponential risks under an exchangeable
/// scheme.
///
/// The shape count is `M = d + G_1 + ... + G_N` with `N = Σ I_k` and
/// geometric `G` on `{1, 2, ...}` with ratio 1/2, so that given `N = n`
/// the excess is negative binomial.
pub fn exp_iid_fast(d: usize, rate: f64, scheme: &BernoulliScheme, trunc: Truncation) -> Result<AggregateME> {
    if scheme.dim() != d {
        return Err(FgmError::DimensionMismatch { expected: d, got: scheme.dim() });
    }
    let nd = scheme.nd_pmf().ok_or_else(|| {
        FgmError::Unsupported(format!("{} scheme has no closed-form N_d law", scheme.label()))
    })?;
    exp_iid_from_nd(d, rate, &nd, trunc)
}

/// Same as [`exp_iid_fast`] but driven by any pmf of `N` on `0..=d`, not
/// only those of symmetric Bernoulli vectors.
pub fn exp_iid_from_nd(d: usize, rate: f64, nd: &[f64], trunc: Truncation) -> Result<AggregateME> {
    if d == 0 || nd.len() != d + 1 {
        return Err(FgmError::DimensionMismatch { expected: d + 1, got: nd.len() });
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(FgmError::InvalidParameter(format!("rate must be positive, got {rate}")));
    }
    let total_nd: f64 = nd.iter().sum();
    if nd.iter().any(|p| !(*p >= 0.0)) || (total_nd - 1.0).abs() > 1e-12 {
        return Err(FgmError::InvalidParameter("N pmf must be nonnegative and sum to 1".into()));
    }
    let support: Vec<(usize, f64)> =
        nd.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(n, p)| (n, p.ln())).collect();
    let lf = LnFactorials::default();
    let ln2 = std::f64::consts::LN_2;
    // excess[m] = Pr(G_1 + ... + G_N = m)
    let mut excess = vec![nd[0]];
    let mut total = nd[0];
    let mut m = 1usize;
    while 1.0 - total >= trunc.eps {
        if d + m > trunc.shape_cap {
            return Err(FgmError::Truncation { tail: 1.0 - total, cap: trunc.shape_cap });
        }
        let v: f64 = support
            .iter()
            .filter(|(n, _)| *n >= 1 && *n <= m)
            .map(|&(n, ln_p)| {
                (ln_p + lf.get(m - 1) - lf.get(n - 1) - lf.get(m - n) - m as f64 * ln2).exp()
            })
            .sum();
        excess.push(v);
        total += v;
        m += 1;
    }
    let mut weights = vec![0.0; d - 1];
    weights.extend(excess.iter().map(|p| p / total));
    Ok(AggregateME {
        law: MixedErlang::from_parts(2.0 * rate, weights),
        provenance: Provenance { portfolio_hash: 0, trunc_eps: trunc.eps, dft_len: 0 },
    })
}
