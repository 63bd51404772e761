//! Mixed Erlang laws `F(x) = Σ_j q_j H(x; j, β)`.

use crate::error::{FgmError, Result};
use crate::risk::{bisect_quantile, check_level};
use crate::special::{erlang_pdf, poisson_pmf_run, LnFactorials};

/// Relative bisection tolerance used for quantiles unless told otherwise.
pub const DEFAULT_QUANTILE_TOL: f64 = 1e-12;

/// Truncation controls shared by every infinite weight sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Sequences stop once the remaining tail mass falls below this.
    pub eps: f64,
    /// Hard limit on the largest Erlang shape (or lattice index).
    pub shape_cap: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { eps: 1e-12, shape_cap: 1 << 16 }
    }
}

const WEIGHT_TOL: f64 = 1e-12;

/// Mixture of Erlang distributions at a common rate; `weights[i]` is the
/// probability of shape `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedErlang {
    rate: f64,
    weights: Vec<f64>,
}

impl MixedErlang {
    pub fn new(rate: f64, weights: Vec<f64>) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(FgmError::InvalidParameter(format!("rate must be positive, got {rate}")));
        }
        if weights.is_empty() {
            return Err(FgmError::InvalidParameter("mixed Erlang needs at least one weight".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(FgmError::InvalidParameter(format!("weight {w} is negative or not finite")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(FgmError::InvalidParameter(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self::from_parts(rate, weights))
    }

    /// Trims trailing zeros; callers guarantee a valid probability vector.
    pub(crate) fn from_parts(rate: f64, mut weights: Vec<f64>) -> Self {
        while weights.len() > 1 && *weights.last().unwrap() == 0.0 {
            weights.pop();
        }
        Self { rate, weights }
    }

    /// Builds from a counting pmf indexed by shape (`pmf[0]` must be zero),
    /// clipping tiny negatives and renormalizing.
    pub(crate) fn from_counting(rate: f64, pmf: &[f64]) -> Self {
        let body: Vec<f64> = pmf.iter().skip(1).map(|&p| p.max(0.0)).collect();
        let total: f64 = body.iter().sum();
        Self::from_parts(rate, body.into_iter().map(|p| p / total).collect())
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(rate, vec![1.0])
    }

    pub fn erlang(shape: usize, rate: f64) -> Result<Self> {
        if shape == 0 {
            return Err(FgmError::InvalidParameter("Erlang shape must be >= 1".into()));
        }
        let mut w = vec![0.0; shape];
        w[shape - 1] = 1.0;
        Self::new(rate, w)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn max_shape(&self) -> usize {
        self.weights.len()
    }

    /// `Pr(L = j)` indexed by `j = 0..=max_shape` with a leading zero.
    pub fn counting_pmf(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.weights.iter().copied()).collect()
    }

    pub fn moment(&self, k: u32) -> f64 {
        // E[X^k] = Σ_j q_j j(j+1)...(j+k-1) / β^k
        let rising = |j: f64| (0..k).map(|i| j + i as f64).product::<f64>();
        self.weights
            .iter()
            .enumerate()
            .map(|(i, q)| q * rising(i as f64 + 1.0))
            .sum::<f64>()
            / self.rate.powi(k as i32)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.moment(2) - m * m
    }

    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        // Σ_j q_j H̄(x; j) = Σ_n Pr(Pois = n) Pr(L > n)
        let pois = poisson_pmf_run(self.rate * x, self.weights.len() - 1);
        let mut tail = 0.0;
        let mut acc = 0.0;
        for n in (0..self.weights.len()).rev() {
            tail += self.weights[n];
            acc += pois[n] * tail;
        }
        acc.clamp(0.0, 1.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.sf(x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, q)| **q > 0.0)
            .map(|(i, q)| q * erlang_pdf(x, i + 1, self.rate))
            .sum()
    }

    /// `E[X 1{X > v}] = Σ_j q_j (j/β) H̄(v; j+1, β)`.
    pub fn tail_expectation(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return self.mean();
        }
        let j_max = self.weights.len();
        let pois = poisson_pmf_run(self.rate * v, j_max);
        let mut biased_tail = 0.0;
        let mut acc = 0.0;
        for n in (0..=j_max).rev() {
            if n >= 1 {
                biased_tail += n as f64 * self.weights[n - 1];
            }
            acc += pois[n] * biased_tail;
        }
        acc / self.rate
    }

    pub fn lst(&self, t: f64) -> f64 {
        let z = self.rate / (self.rate + t);
        self.weights.iter().rev().fold(0.0, |acc, q| (acc + q) * z)
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.quantile_with_tol(u, DEFAULT_QUANTILE_TOL)
    }

    /// Quantile with an explicit relative bisection tolerance.
    pub fn quantile_with_tol(&self, u: f64, rel_tol: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(FgmError::InvalidLevel(u));
        }
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(FgmError::InvalidParameter(format!("bisection tolerance must lie in (0, 1), got {rel_tol}")));
        }
        let sd = self.variance().max(0.0).sqrt();
        Ok(bisect_quantile(|x| self.cdf(x), u, self.mean() + 40.0 * sd, rel_tol))
    }

    /// Value-at-risk: the generalized inverse of the cdf at `kappa`.
    pub fn var(&self, kappa: f64) -> Result<f64> {
        check_level(kappa)?;
        self.quantile(kappa)
    }

    pub fn tvar(&self, kappa: f64) -> Result<f64> {
        let v = self.var(kappa)?;
        Ok(self.tail_expectation(v) / (1.0 - kappa))
    }

    /// Weights of the minimum and maximum of two iid copies, both at rate 2β.
    pub fn order_weights(&self, trunc: Truncation) -> Result<(MixedErlang, MixedErlang)> {
        let q = &self.weights;
        let big_j = q.len();
        let mut cum = Vec::with_capacity(big_j + 1);
        cum.push(0.0);
        for w in q {
            cum.push(cum.last().unwrap() + w);
        }
        let cum_at = |n: usize| if n >= big_j { 1.0 } else { cum[n] };
        let ln_fact = LnFactorials::default();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let (mut s_lo, mut s_hi) = (0.0, 0.0);
        let mut j = 1usize;
        loop {
            let n = j - 1;
            let mut a = 0.0;
            let mut b = 0.0;
            for m in 0..=n.min(big_j - 1) {
                if q[m] == 0.0 {
                    continue;
                }
                let binom = (ln_fact.get(n) - ln_fact.get(m) - ln_fact.get(n - m)
                    - n as f64 * std::f64::consts::LN_2)
                    .exp();
                let c = cum_at(n - m);
                a += binom * q[m] * (1.0 - c);
                b += binom * q[m] * c;
            }
            lo.push(a);
            hi.push(b);
            s_lo += a;
            s_hi += b;
            if j >= big_j && 1.0 - s_lo < trunc.eps && 1.0 - s_hi < trunc.eps {
                break;
            }
            if j >= trunc.shape_cap {
                return Err(FgmError::Truncation {
                    tail: (1.0 - s_lo).max(1.0 - s_hi),
                    cap: trunc.shape_cap,
                });
            }
            j += 1;
        }
        let rate = 2.0 * self.rate;
        Ok((
            MixedErlang::from_parts(rate, lo.iter().map(|x| x / s_lo).collect()),
            MixedErlang::from_parts(rate, hi.iter().map(|x| x / s_hi).collect()),
        ))
    }

    /// Re-expresses the same law at a larger rate by thinning each Erlang
    /// stage into a negative binomial number of faster stages.
    pub fn rescale_rate(&self, new_rate: f64, trunc: Truncation) -> Result<MixedErlang> {
        if !(new_rate >= self.rate) {
            return Err(FgmError::InvalidParameter(format!(
                "new rate {new_rate} must be at least the current rate {}",
                self.rate
            )));
        }
        let p = self.rate / new_rate;
        if p == 1.0 {
            return Ok(self.clone());
        }
        let (ln_p, ln_q) = (p.ln(), (1.0 - p).ln());
        let ln_fact = LnFactorials::default();
        let big_j = self.weights.len();
        let mut out = Vec::new();
        let mut total = 0.0;
        let mut n = 1usize;
        loop {
            let mut v = 0.0;
            for j in 1..=n.min(big_j) {
                let q = self.weights[j - 1];
                if q == 0.0 {
                    continue;
                }
                let ln_c = ln_fact.get(n - 1) - ln_fact.get(j - 1) - ln_fact.get(n - j);
                v += q * (ln_c + j as f64 * ln_p + (n - j) as f64 * ln_q).exp();
            }
            out.push(v);
            total += v;
            if n >= big_j && 1.0 - total < trunc.eps {
                break;
            }
            if n >= trunc.shape_cap {
                return Err(FgmError::Truncation { tail: 1.0 - total, cap: trunc.shape_cap });
            }
            n += 1;
        }
        Ok(MixedErlang::from_parts(new_rate, out.into_iter().map(|x| x / total).collect()))
    }
}

/// Shape-1-shifted counting distributions commonly used to build weights.
pub mod counting {
    use super::Truncation;
    use crate::error::{FgmError, Result};
    use crate::special::{ln_factorial, ln_gamma};

    // Input laws are cut far below `eps` so their moments stay exact; the
    // size test stops once terms fall under the float noise of the total.
    fn truncate(mut pmf: impl FnMut(usize) -> f64, trunc: Truncation) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = Vec::new();
        let mut total = 0.0;
        let mut peak = 0.0_f64;
        for n in 0..trunc.shape_cap {
            let p = pmf(n);
            let falling = out.last().is_some_and(|&prev| p <= prev);
            out.push(p);
            total += p;
            peak = peak.max(p);
            if n > 0 && falling && (1.0 - total < trunc.eps * 1e-4 || p < 1e-20 * peak) {
                return Ok(out.into_iter().map(|p| p / total).collect());
            }
        }
        Err(FgmError::Truncation { tail: 1.0 - total, cap: trunc.shape_cap })
    }

    /// All mass on shape `j`.
    pub fn dirac(j: usize) -> Result<Vec<f64>> {
        if j == 0 {
            return Err(FgmError::InvalidParameter("shape must be >= 1".into()));
        }
        let mut w = vec![0.0; j];
        w[j - 1] = 1.0;
        Ok(w)
    }

    /// `q_j = p (1-p)^{j-1}`, `j >= 1`.
    pub fn geometric(p: f64, trunc: Truncation) -> Result<Vec<f64>> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(FgmError::InvalidParameter(format!("geometric p = {p} outside (0, 1]")));
        }
        truncate(|n| p * (1.0 - p).powi(n as i32), trunc)
    }

    /// `q_j = e^{-λ} λ^{j-1} / (j-1)!`, `j >= 1`.
    pub fn poisson(lambda: f64, trunc: Truncation) -> Result<Vec<f64>> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(FgmError::InvalidParameter(format!("Poisson mean {lambda} invalid")));
        }
        if lambda == 0.0 {
            return dirac(1);
        }
        truncate(|n| (-lambda + n as f64 * lambda.ln() - ln_factorial(n)).exp(), trunc)
    }

    /// `q_j = Γ(j-1+r) / (Γ(r) (j-1)!) p^r (1-p)^{j-1}`, `j >= 1`.
    pub fn negative_binomial(r: f64, p: f64, trunc: Truncation) -> Result<Vec<f64>> {
        if !(r > 0.0 && p > 0.0 && p <= 1.0) {
            return Err(FgmError::InvalidParameter(format!(
                "negative binomial needs r > 0 and p in (0, 1], got r = {r}, p = {p}"
            )));
        }
        if p == 1.0 {
            return dirac(1);
        }
        truncate(
            |n| {
                let nf = n as f64;
                (ln_gamma(nf + r) - ln_gamma(r) - ln_factorial(n) + r * p.ln() + nf * (1.0 - p).ln())
                    .exp()
            },
            trunc,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> impl Iterator<Item = f64> {
        (0..60).map(|i| 0.05 + i as f64 * 0.37)
    }

    #[test]
    fn validation() {
        assert!(MixedErlang::new(0.0, vec![1.0]).is_err());
        assert!(MixedErlang::new(1.0, vec![0.5, 0.4]).is_err());
        assert!(MixedErlang::new(1.0, vec![0.5, -0.1, 0.6]).is_err());
        assert!(MixedErlang::erlang(0, 1.0).is_err());
    }

    #[test]
    fn exponential_order_weights() {
        let e = MixedErlang::exponential(0.3).unwrap();
        let (lo, hi) = e.order_weights(Truncation::default()).unwrap();
        assert_eq!(lo.rate(), 0.6);
        assert_eq!(lo.weights(), &[1.0]);
        assert_eq!(hi.weights()[0], 0.0);
        for (i, w) in hi.weights().iter().enumerate().skip(1) {
            assert!((w - 0.5f64.powi(i as i32)).abs() < 1e-12, "shape {}", i + 1);
        }
    }

    #[test]
    fn order_weights_reproduce_order_statistic_cdfs() {
        let m = MixedErlang::new(0.5, vec![0.2, 0.0, 0.3, 0.1, 0.4]).unwrap();
        let (lo, hi) = m.order_weights(Truncation::default()).unwrap();
        for x in grid() {
            let f = m.cdf(x);
            assert!((lo.cdf(x) - (1.0 - (1.0 - f).powi(2))).abs() < 1e-10, "min at {x}");
            assert!((hi.cdf(x) - f * f).abs() < 1e-10, "max at {x}");
        }
    }

    #[test]
    fn rescale_examples() {
        let t = Truncation::default();
        let e = MixedErlang::exponential(1.0).unwrap();
        let r = e.rescale_rate(2.0, t).unwrap();
        for (i, w) in r.weights().iter().enumerate() {
            assert!((w - 0.5f64.powi(i as i32 + 1)).abs() < 1e-12);
        }
        assert_eq!(e.rescale_rate(1.0, t).unwrap(), e);
        assert!(e.rescale_rate(0.5, t).is_err());
        let erl = MixedErlang::erlang(2, 1.0).unwrap();
        let r = erl.rescale_rate(2.0, t).unwrap();
        // C(n-1, 1) (1/2)^n
        for (i, w) in r.weights().iter().enumerate() {
            let n = i + 1;
            assert!((w - (n - 1) as f64 * 0.5f64.powi(n as i32)).abs() < 1e-12);
        }
        for x in grid() {
            assert!((r.cdf(x) - erl.cdf(x)).abs() < 1e-10);
        }
        assert!((r.mean() - 2.0).abs() < 1e-9);
        assert!((r.variance() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn exponential_risk_measures() {
        let e = MixedErlang::exponential(0.1).unwrap();
        let v = e.var(0.9).unwrap();
        assert!((v - 10.0 * 10f64.ln()).abs() < 1e-9);
        assert!((e.tvar(0.9).unwrap() - (v + 10.0)).abs() < 1e-9);
        assert!(e.var(1.0).is_err());
        assert!((e.tail_expectation(0.0) - 10.0).abs() < 1e-12);
        assert!((e.lst(0.1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn counting_helpers_have_expected_means() {
        let t = Truncation::default();
        let mean = |w: &[f64]| w.iter().enumerate().map(|(i, q)| (i + 1) as f64 * q).sum::<f64>();
        assert!((mean(&counting::geometric(0.5, t).unwrap()) - 2.0).abs() < 1e-12);
        assert!((mean(&counting::poisson(5.0, t).unwrap()) - 6.0).abs() < 1e-12);
        assert!((mean(&counting::negative_binomial(2.0, 0.25, t).unwrap()) - 7.0).abs() < 1e-10);
        assert_eq!(counting::dirac(3).unwrap(), vec![0.0, 0.0, 1.0]);
    }
}
