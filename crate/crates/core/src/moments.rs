//! Exact moments `E[S^m]` by expanding the multinomial and averaging the
//! order-statistic moments over the Bernoulli vector.

use crate::copula::FgmCopula;
use crate::error::{FgmError, Result};
use crate::marginals::{Marginal, OrderStat, Truncation};
use crate::portfolio::{Dependence, Portfolio};
use crate::special::{ln_factorial, neumaier_sum};
use rayon::prelude::*;

/// Which representation of the dependence factor to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    /// Factors built from minimum moments.
    StochasticMin,
    /// Factors built from maximum moments.
    StochasticMax,
    /// Natural parameters with minimum moments.
    NaturalA1,
    /// Natural parameters with maximum moments.
    NaturalA2,
}

impl Representation {
    pub const ALL: [Representation; 4] = [
        Representation::StochasticMin,
        Representation::StochasticMax,
        Representation::NaturalA1,
        Representation::NaturalA2,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentOptions {
    /// Largest number of compositions of `m` into `d` parts to enumerate.
    pub composition_cap: u128,
    pub trunc: Truncation,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self { composition_cap: 10_000_000, trunc: Truncation::default() }
    }
}

/// `(E[X^j], E[X_{[1]}^j], E[X_{[2]}^j])` for `j = 0..=m`.
fn order_moment_table(marginal: &Marginal, m: u32, trunc: Truncation) -> Result<Vec<[f64; 3]>> {
    // mixed Erlang minimum weights are computed once, not per order
    let me_min = match marginal.as_mixed_erlang() {
        Some(me) => Some(me.order_weights(trunc)?.0),
        None => None,
    };
    (0..=m)
        .map(|j| {
            let e = marginal.moment(j)?;
            let lo = match &me_min {
                Some(lo) if j > 0 => lo.moment(j),
                _ => marginal.os_moment(OrderStat::Min, j)?,
            };
            Ok([e, lo, 2.0 * e - lo])
        })
        .collect()
}

fn composition_count(m: u32, d: usize) -> u128 {
    // C(m + d - 1, m), saturating
    let mut c: u128 = 1;
    for i in 1..=m as u128 {
        c = c.saturating_mul(d as u128 - 1 + i) / i;
    }
    c
}

fn compositions(m: u32, d: usize) -> Vec<Vec<u32>> {
    fn rec(k: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k + 1 == cur.len() {
            cur[k] = left;
            out.push(cur.clone());
            return;
        }
        for j in (0..=left).rev() {
            cur[k] = j;
            rec(k + 1, left - j, cur, out);
        }
    }
    let mut out = Vec::new();
    rec(0, m, &mut vec![0; d], &mut out);
    out
}

/// `E[S^m]` in the requested representation.
pub fn aggregate_moment(
    portfolio: &Portfolio,
    m: u32,
    repr: Representation,
    opts: MomentOptions,
) -> Result<f64> {
    let d = portfolio.dim();
    if m == 0 {
        return Ok(1.0);
    }
    let count = composition_count(m, d);
    if count > opts.composition_cap {
        return Err(FgmError::CompositionOverflow { count, cap: opts.composition_cap });
    }
    let tables = portfolio
        .marginals()
        .iter()
        .map(|x| order_moment_table(x, m, opts.trunc))
        .collect::<Result<Vec<_>>>()?;
    let ln_m_fact = ln_factorial(m as usize);

    enum Factor {
        Scheme(crate::bernoulli::BernoulliScheme),
        Theta(FgmCopula),
    }
    let factor = match repr {
        Representation::StochasticMin | Representation::StochasticMax => {
            Factor::Scheme(portfolio.scheme()?)
        }
        Representation::NaturalA1 | Representation::NaturalA2 => {
            Factor::Theta(portfolio.copula(Some(m as usize))?)
        }
    };

    let terms = compositions(m, d)
        .into_par_iter()
        .map(|js| {
            let mut ln_coef = ln_m_fact;
            let mut prod = 1.0;
            for (k, &j) in js.iter().enumerate() {
                ln_coef -= ln_factorial(j as usize);
                prod *= tables[k][j as usize][0];
            }
            let coef = ln_coef.exp() * prod;
            // ratios μ_{[1]}/E and μ_{[2]}/E, trivially 1 at order zero
            let ratio = |k: usize, which: usize| {
                let row = tables[k][js[k] as usize];
                if js[k] == 0 {
                    1.0
                } else {
                    row[which] / row[0]
                }
            };
            let dep = match (&factor, repr) {
                (Factor::Scheme(s), Representation::StochasticMin) => {
                    let g: Vec<(f64, f64)> = (0..d)
                        .map(|k| {
                            let r = ratio(k, 1);
                            (r, 2.0 - r)
                        })
                        .collect();
                    s.expected_product(&g)?
                }
                (Factor::Scheme(s), _) => {
                    let g: Vec<(f64, f64)> = (0..d)
                        .map(|k| {
                            let r = ratio(k, 2);
                            (2.0 - r, r)
                        })
                        .collect();
                    s.expected_product(&g)?
                }
                (Factor::Theta(c), repr) => {
                    let shift: Vec<f64> = (0..d)
                        .map(|k| {
                            if repr == Representation::NaturalA1 {
                                ratio(k, 1) - 1.0
                            } else {
                                1.0 - ratio(k, 2)
                            }
                        })
                        .collect();
                    natural_factor(c, &shift)
                }
            };
            Ok(coef * dep)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(neumaier_sum(terms))
}

/// `1 + Σ_A θ_A ∏_{k∈A} c_k` over the stored nonzero parameters.
fn natural_factor(copula: &FgmCopula, shift: &[f64]) -> f64 {
    let mut acc = 1.0;
    for (&mask, &theta) in copula.theta_masks() {
        let mut p = theta;
        let mut bits = mask;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            p *= shift[k];
            if p == 0.0 {
                break;
            }
            bits &= bits - 1;
        }
        acc += p;
    }
    acc
}

/// `Cov(X_j, X_k) = θ_{jk} (E[X_j] - μ_{j,[1]}) (E[X_k] - μ_{k,[1]})`,
/// 0-based indices.
pub fn covariance(portfolio: &Portfolio, j: usize, k: usize) -> Result<f64> {
    let d = portfolio.dim();
    for &i in &[j, k] {
        if i >= d {
            return Err(FgmError::InvalidParameter(format!("risk index {i} out of range for d = {d}")));
        }
    }
    let spread = |i: usize| -> Result<f64> {
        let x = &portfolio.marginals()[i];
        x.moment(2)?;
        Ok(x.mean()? - x.os_moment(OrderStat::Min, 1)?)
    };
    if j == k {
        return portfolio.marginals()[j].variance();
    }
    let theta = match portfolio.dependence() {
        Dependence::Copula(c) => c.theta(&[j.min(k), j.max(k)]),
        Dependence::Scheme(s) => 4.0 * s.central_mixed_moment(&[j, k])?,
    };
    Ok(theta * spread(j)? * spread(k)?)
}

/// `Var(S)` from the first two moments.
pub fn aggregate_variance(portfolio: &Portfolio, opts: MomentOptions) -> Result<f64> {
    let m1 = aggregate_moment(portfolio, 1, Representation::StochasticMin, opts)?;
    let m2 = aggregate_moment(portfolio, 2, Representation::StochasticMin, opts)?;
    Ok(m2 - m1 * m1)
}
