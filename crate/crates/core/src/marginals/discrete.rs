//! Lattice distributions on `{0, h, 2h, ...}`.

use crate::error::{FgmError, Result};
use crate::risk::check_level;

const MASS_TOL: f64 = 1e-12;
// Cumulative sums may land a hair below a level they reach exactly.
const LEVEL_SLACK: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct Discrete {
    span: f64,
    masses: Vec<f64>,
}

impl Discrete {
    pub fn new(span: f64, masses: Vec<f64>) -> Result<Self> {
        if !(span > 0.0 && span.is_finite()) {
            return Err(FgmError::InvalidParameter(format!("span must be positive, got {span}")));
        }
        if masses.is_empty() {
            return Err(FgmError::InvalidParameter("lattice law needs at least one mass".into()));
        }
        if let Some(m) = masses.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(FgmError::InvalidParameter(format!("mass {m} is negative or not finite")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(FgmError::InvalidParameter(format!("masses sum to {total}, expected 1")));
        }
        Ok(Self { span, masses })
    }

    pub(crate) fn from_parts(span: f64, masses: Vec<f64>) -> Self {
        Self { span, masses }
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    fn index_at_or_below(&self, x: f64) -> Option<usize> {
        if x < 0.0 {
            return None;
        }
        let k = (x / self.span + 1e-9).floor();
        Some((k as usize).min(self.masses.len() - 1))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.index_at_or_below(x) {
            None => 0.0,
            Some(k) => self.masses[..=k].iter().sum::<f64>().min(1.0),
        }
    }

    pub fn sf(&self, x: f64) -> f64 {
        match self.index_at_or_below(x) {
            None => 1.0,
            Some(k) => self.masses[k + 1..].iter().sum::<f64>().max(0.0),
        }
    }

    pub fn moment(&self, k: u32) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(i, p)| p * (i as f64 * self.span).powi(k as i32))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.moment(2) - m * m
    }

    /// Smallest lattice point `x` with `F(x) >= u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(FgmError::InvalidLevel(u));
        }
        Ok(self.quantile_index(u) as f64 * self.span)
    }

    fn quantile_index(&self, u: f64) -> usize {
        let mut cum = 0.0;
        for (i, p) in self.masses.iter().enumerate() {
            cum += p;
            if cum >= u - LEVEL_SLACK {
                return i;
            }
        }
        self.masses.len() - 1
    }

    pub fn var(&self, kappa: f64) -> Result<f64> {
        check_level(kappa)?;
        self.quantile(kappa)
    }

    /// Tail value-at-risk with the atom at VaR split so that exactly
    /// `1 - kappa` of probability is averaged.
    pub fn tvar(&self, kappa: f64) -> Result<f64> {
        check_level(kappa)?;
        let k = self.quantile_index(kappa);
        let v = k as f64 * self.span;
        let cdf_v: f64 = self.masses[..=k].iter().sum();
        let above: f64 = self.masses[k + 1..]
            .iter()
            .enumerate()
            .map(|(i, p)| p * (k + 1 + i) as f64 * self.span)
            .sum();
        Ok((above + v * (cdf_v - kappa).max(0.0)) / (1.0 - kappa))
    }

    /// Masses of the minimum and maximum of two iid copies.
    pub fn order_pmfs(&self) -> (Discrete, Discrete) {
        let mut lo = Vec::with_capacity(self.masses.len());
        let mut hi = Vec::with_capacity(self.masses.len());
        let mut below = 0.0;
        for &p in &self.masses {
            // Pr(X <= k) before adding p is Pr(X < k)
            let at_most = below + p;
            lo.push((2.0 * p * (1.0 - at_most) + p * p).max(0.0));
            hi.push((2.0 * p * at_most - p * p).max(0.0));
            below = at_most;
        }
        (Discrete::from_parts(self.span, lo), Discrete::from_parts(self.span, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Discrete::new(0.0, vec![1.0]).is_err());
        assert!(Discrete::new(1.0, vec![0.5, 0.4]).is_err());
        assert!(Discrete::new(1.0, vec![]).is_err());
    }

    #[test]
    fn order_pmfs_two_point() {
        let d = Discrete::new(1.0, vec![0.25, 0.75]).unwrap();
        let (lo, hi) = d.order_pmfs();
        // min = 0 unless both are 1: 1 - 0.5625
        assert!((lo.masses()[0] - 0.4375).abs() < 1e-15);
        assert!((lo.masses()[1] - 0.5625).abs() < 1e-15);
        assert!((hi.masses()[0] - 0.0625).abs() < 1e-15);
        assert!((hi.masses()[1] - 0.9375).abs() < 1e-15);
    }

    #[test]
    fn tvar_splits_atoms() {
        let d = Discrete::new(1.0, vec![0.5, 0.3, 0.2]).unwrap();
        assert_eq!(d.var(0.6).unwrap(), 1.0);
        // top 40%: 0.2 at 2, 0.2 of the atom at 1
        assert!((d.tvar(0.6).unwrap() - (0.4 + 0.2) / 0.4).abs() < 1e-12);
        assert_eq!(d.var(0.8).unwrap(), 1.0);
        assert!((d.tvar(0.8).unwrap() - 2.0).abs() < 1e-12);
    }
}
