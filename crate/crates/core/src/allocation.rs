//! Contributions of each risk to the aggregate for mixed Erlang portfolios:
//! expected allocations, conditional mean risk sharing and TVaR-based
//! allocation.
//!
//! For risk `m` the sequence `r_m[l] = E[L_m 1{L_S = l}]` (shape of `X_m`
//! times the indicator that `S` has shape `l`) is obtained in pgf space by
//! replacing the transform pair of coordinate `m` with the transforms of
//! its size-biased weights. Then
//! `E[X_m 1{S ∈ ds}] = Σ_l r_m[l] / (2β) h(s; l+1, 2β) ds` and
//! `E[X_m 1{S > v}] = Σ_l r_m[l] / (2β) H̄(v; l+1, 2β)`.

use crate::aggregate_me::{
    hermitian_spectrum, mixed_erlang_marginals, order_pairs, AggregateOptions, IMAG_TOL,
};
use crate::error::{FgmError, Result};
use crate::fft::inverse_to_real;
use crate::marginals::MixedErlang;
use crate::portfolio::Portfolio;
use crate::risk::check_level;
use crate::special::poisson_pmf_run;
use num_complex::Complex64;
use rayon::prelude::*;

/// Smallest aggregate density we are willing to divide by.
pub const MIN_DENSITY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AllocationContext {
    /// Conditional on `S = s`.
    Share { s: f64 },
    /// Tail beyond `VaR_κ(S)`.
    Tvar { kappa: f64, var: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub contributions: Vec<f64>,
    pub context: AllocationContext,
    /// `f_S(s)` for sharing, `TVaR_κ(S)` for TVaR allocation.
    pub reference: f64,
}

impl AllocationResult {
    pub fn total(&self) -> f64 {
        self.contributions.iter().sum()
    }
}

/// Precomputed size-biased sequences for every risk, reusable across many
/// `s` values and levels.
#[derive(Debug, Clone)]
pub struct Allocator {
    aggregate: MixedErlang,
    rate: f64,
    biased: Vec<Vec<f64>>,
}

impl Allocator {
    pub fn new(portfolio: &Portfolio, opts: AggregateOptions) -> Result<Self> {
        let marginals = mixed_erlang_marginals(portfolio)?;
        let scheme = portfolio.scheme()?;
        let pairs = order_pairs(&marginals, opts.trunc)?;
        let len = pairs.dft_len(opts.dft_cap)?;
        let spectra = pairs.spectra(len);
        let size_biased: Vec<(Vec<Complex64>, Vec<Complex64>)> = pairs
            .unique
            .par_iter()
            .map(|(a, b)| {
                let bias = |p: &Vec<f64>| p.iter().enumerate().map(|(l, q)| l as f64 * q).collect::<Vec<_>>();
                (crate::fft::forward_real(&bias(a), len), crate::fft::forward_real(&bias(b), len))
            })
            .collect();
        let d = marginals.len();
        // slot d is the plain aggregate, slot m < d swaps in risk m's biased pair
        let sequences = (0..=d)
            .into_par_iter()
            .map(|slot| {
                let spectrum = hermitian_spectrum(len, |k| {
                    let g: Vec<(Complex64, Complex64)> = (0..d)
                        .map(|j| {
                            let u = pairs.index[j];
                            let src = if j == slot { &size_biased[u] } else { &spectra[u] };
                            (src.0[k], src.1[k])
                        })
                        .collect();
                    scheme.expected_product(&g)
                })?;
                let (seq, residue) = inverse_to_real(spectrum);
                let scale = seq.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
                if residue > IMAG_TOL * scale {
                    return Err(FgmError::ImaginaryResidue(residue));
                }
                Ok(seq)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut sequences = sequences;
        let mut q = sequences.pop().expect("aggregate slot");
        let total: f64 = q.iter().map(|v| v.max(0.0)).sum();
        q.iter_mut().for_each(|v| *v = v.max(0.0) / total);
        for r in sequences.iter_mut() {
            r.iter_mut().for_each(|v| *v /= total);
        }
        Ok(Self {
            aggregate: MixedErlang::from_counting(pairs.rate, &q),
            rate: pairs.rate,
            biased: sequences,
        })
    }

    pub fn dim(&self) -> usize {
        self.biased.len()
    }

    /// Mixed Erlang law of `S` consistent with the allocation sequences.
    pub fn aggregate(&self) -> &MixedErlang {
        &self.aggregate
    }

    /// `f_S(s)`.
    pub fn density(&self, s: f64) -> f64 {
        self.aggregate.pdf(s)
    }

    fn check_risk(&self, m: usize) -> Result<()> {
        if m >= self.dim() {
            return Err(FgmError::InvalidParameter(format!("risk index {m} out of range for d = {}", self.dim())));
        }
        Ok(())
    }

    fn density_weighted(&self, m: usize, s: f64) -> f64 {
        // h(s; l+1, λ) / λ = Pr(Pois(λ s) = l)
        let r = &self.biased[m];
        let pois = poisson_pmf_run(self.rate * s, r.len() - 1);
        r.iter().zip(&pois).map(|(a, b)| a * b).sum()
    }

    /// `E[X_m 1{S ∈ ds}] / ds` at `s` (0-based `m`).
    pub fn expected_allocation_density(&self, m: usize, s: f64) -> Result<f64> {
        self.check_risk(m)?;
        if !(s >= 0.0) {
            return Err(FgmError::InvalidParameter(format!("s must be nonnegative, got {s}")));
        }
        Ok(self.density_weighted(m, s))
    }

    /// Conditional mean risk sharing `E[X_k | S = s]` for every `k`.
    pub fn cmrs(&self, s: f64) -> Result<AllocationResult> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(FgmError::InvalidParameter(format!("s must be positive, got {s}")));
        }
        let f = self.density(s);
        if !(f > MIN_DENSITY) {
            return Err(FgmError::NegligibleDensity { s, density: f });
        }
        let contributions = (0..self.dim()).map(|m| self.density_weighted(m, s) / f).collect();
        Ok(AllocationResult { contributions, context: AllocationContext::Share { s }, reference: f })
    }

    /// `E[X_m 1{S > v}]` for every risk.
    pub fn tail_contributions(&self, v: f64) -> Vec<f64> {
        self.biased
            .iter()
            .map(|r| {
                if v <= 0.0 {
                    return r.iter().sum::<f64>() / self.rate;
                }
                let pois = poisson_pmf_run(self.rate * v, r.len() - 1);
                let mut sf = 0.0;
                let mut acc = 0.0;
                for (rl, p) in r.iter().zip(&pois) {
                    sf += p;
                    acc += rl * sf.min(1.0);
                }
                acc / self.rate
            })
            .collect()
    }

    /// Euler allocation of `TVaR_κ(S)`.
    pub fn tvar_allocation(&self, kappa: f64) -> Result<AllocationResult> {
        check_level(kappa)?;
        let var = self.aggregate.var(kappa)?;
        let contributions: Vec<f64> =
            self.tail_contributions(var).into_iter().map(|c| c / (1.0 - kappa)).collect();
        let reference = self.aggregate.tail_expectation(var) / (1.0 - kappa);
        Ok(AllocationResult { contributions, context: AllocationContext::Tvar { kappa, var }, reference })
    }
}

pub fn expected_allocation_density(
    portfolio: &Portfolio,
    m: usize,
    s: f64,
    opts: AggregateOptions,
) -> Result<f64> {
    Allocator::new(portfolio, opts)?.expected_allocation_density(m, s)
}

pub fn cmrs(portfolio: &Portfolio, s: f64, opts: AggregateOptions) -> Result<AllocationResult> {
    Allocator::new(portfolio, opts)?.cmrs(s)
}

pub fn tvar_allocation(portfolio: &Portfolio, kappa: f64, opts: AggregateOptions) -> Result<AllocationResult> {
    Allocator::new(portfolio, opts)?.tvar_allocation(kappa)
}
