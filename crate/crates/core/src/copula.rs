//! FGM copulas in their natural parametrization and the bridge to
//! symmetric Bernoulli schemes.
//!
//! A parameter `θ_A` is attached to every coordinate subset `A` with
//! `|A| ≥ 2`. Subsets are stored as bitmasks (coordinate `k`, 0-based, at
//! bit `k`); an absent key means `θ_A = 0`. The correspondence with a scheme
//! is `θ_A = E[∏_{n∈A}(1 - 2 I_n)]` and, in the other direction, the Walsh
//! expansion `f_I(i) = 2^{-d} Σ_A θ_A ∏_{j∈A}(1 - 2 i_j)` with `θ_∅ = 1`.

use crate::bernoulli::{BernoulliScheme, SchemeKind, DENSE_MAX_DIM};
use crate::error::{FgmError, Result};
use crate::special::ln_gamma_signed;
use std::collections::BTreeMap;

/// Tolerance on reconstructed Walsh masses before a parameter set is
/// declared inadmissible.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

/// Upper bound on the number of subsets enumerated from a structured scheme.
pub const SUBSET_LIMIT: u128 = 1 << 20;

/// Bitmask-keyed subsets need `d <= 64`.
pub const MAX_COPULA_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct FgmCopula {
    dim: usize,
    theta: BTreeMap<u64, f64>,
    admissible: Option<bool>,
}

impl FgmCopula {
    /// Builds a copula from `(subset, θ)` pairs with 0-based coordinates.
    /// Admissibility is evaluated eagerly when `d <= 20`.
    pub fn new<I, S>(dim: usize, thetas: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<[usize]>,
    {
        if dim == 0 || dim > MAX_COPULA_DIM {
            return Err(FgmError::InvalidParameter(format!(
                "copula dimension must lie in 1..={MAX_COPULA_DIM}, got {dim}"
            )));
        }
        let mut theta = BTreeMap::new();
        for (subset, value) in thetas {
            let subset = subset.as_ref();
            let mask = subset_mask(dim, subset)?;
            if subset.len() < 2 {
                return Err(FgmError::InvalidParameter(format!(
                    "subset {subset:?} has fewer than two coordinates"
                )));
            }
            if !value.is_finite() {
                return Err(FgmError::InvalidParameter(format!("theta for {subset:?} is not finite")));
            }
            if theta.insert(mask, value).is_some() {
                return Err(FgmError::InvalidParameter(format!("subset {subset:?} given twice")));
            }
        }
        theta.retain(|_, v| *v != 0.0);
        let mut c = Self { dim, theta, admissible: None };
        if dim <= DENSE_MAX_DIM {
            c.admissible = Some(c.check_admissible().is_ok());
        }
        Ok(c)
    }

    pub fn independence(dim: usize) -> Result<Self> {
        Self::new(dim, std::iter::empty::<(Vec<usize>, f64)>())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `θ_A` for a 0-based subset; zero when absent.
    pub fn theta(&self, subset: &[usize]) -> f64 {
        subset_mask(self.dim, subset)
            .ok()
            .and_then(|m| self.theta.get(&m).copied())
            .unwrap_or(0.0)
    }

    /// Nonzero parameters as `(sorted 0-based subset, θ)`.
    pub fn thetas(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.theta.iter().map(|(&m, &v)| (mask_to_subset(m), v))
    }

    pub(crate) fn theta_masks(&self) -> &BTreeMap<u64, f64> {
        &self.theta
    }

    /// Cached admissibility; `None` when `d` is too large for the check.
    pub fn is_admissible(&self) -> Option<bool> {
        self.admissible
    }

    /// Walsh-reconstructed masses `f_I(i)`, indexed by bitmask.
    pub fn walsh_masses(&self) -> Result<Vec<f64>> {
        if self.dim > DENSE_MAX_DIM {
            return Err(FgmError::DenseTooLarge(self.dim));
        }
        let n = 1usize << self.dim;
        let mut c = vec![0.0; n];
        c[0] = 1.0;
        for (&m, &v) in &self.theta {
            c[m as usize] = v;
        }
        walsh_hadamard(&mut c);
        let scale = 1.0 / n as f64;
        Ok(c.into_iter().map(|x| x * scale).collect())
    }

    /// Checks the constraint set; the error carries a violating sign vector.
    pub fn check_admissible(&self) -> Result<()> {
        let masses = self.walsh_masses()?;
        let worst = masses
            .iter()
            .enumerate()
            .rev()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(m, &v)| (m, v));
        match worst {
            Some((mask, v)) if v < -ADMISSIBILITY_TOL => {
                let eps = (0..self.dim).map(|k| if mask >> k & 1 == 1 { -1 } else { 1 }).collect();
                Err(FgmError::Inadmissible { eps, value: v * masses.len() as f64 })
            }
            _ => Ok(()),
        }
    }

    /// Dense Bernoulli scheme reproducing these parameters.
    pub fn to_scheme(&self) -> Result<BernoulliScheme> {
        self.check_admissible()?;
        let masses: Vec<f64> = self.walsh_masses()?.into_iter().map(|m| m.max(0.0)).collect();
        let total: f64 = masses.iter().sum();
        BernoulliScheme::dense(self.dim, masses.into_iter().map(|m| m / total).collect())
    }

    /// Natural-form cdf `∏u_k (1 + Σ_A θ_A ∏_{j∈A}(1 - u_j))`.
    pub fn cdf(&self, u: &[f64]) -> Result<f64> {
        check_unit_point(self.dim, u)?;
        let base: f64 = u.iter().product();
        if base == 0.0 {
            return Ok(0.0);
        }
        let bump: f64 = self
            .theta
            .iter()
            .map(|(&m, &v)| {
                v * (0..self.dim)
                    .filter(|k| m >> k & 1 == 1)
                    .map(|k| 1.0 - u[k])
                    .product::<f64>()
            })
            .sum();
        Ok(base * (1.0 + bump))
    }
}

/// `θ_A = (-2)^{|A|} E[∏_{n∈A}(I_n - 1/2)]` for every subset with
/// `2 <= |A| <= max_order` (default `d`).
pub fn theta_from_scheme(scheme: &BernoulliScheme, max_order: Option<usize>) -> Result<FgmCopula> {
    let d = scheme.dim();
    if d < 2 {
        return Err(FgmError::InvalidParameter("copula needs d >= 2".into()));
    }
    let max_order = max_order.unwrap_or(d).min(d);
    if let SchemeKind::Dense(masses) = scheme.kind() {
        let mut t = masses.clone();
        walsh_hadamard(&mut t);
        let mut theta = BTreeMap::new();
        for (mask, v) in t.into_iter().enumerate() {
            let size = (mask as u64).count_ones() as usize;
            if (2..=max_order).contains(&size) && v != 0.0 {
                theta.insert(mask as u64, v);
            }
        }
        return Ok(FgmCopula { dim: d, theta, admissible: Some(true) });
    }
    if d > MAX_COPULA_DIM {
        return Err(FgmError::InvalidParameter(format!(
            "natural parameters are limited to d <= {MAX_COPULA_DIM}"
        )));
    }
    let count: u128 = (2..=max_order).map(|k| binomial_u128(d, k)).sum();
    if count > SUBSET_LIMIT {
        return Err(FgmError::SubsetOverflow { count, limit: SUBSET_LIMIT });
    }
    // exchangeable structures: θ depends on |A| only
    let by_size: Option<Vec<f64>> = scheme.nd_pmf().map(|_| {
        (0..=max_order)
            .map(|k| {
                if k < 2 {
                    0.0
                } else {
                    let subset: Vec<usize> = (0..k).collect();
                    central_to_theta(scheme, &subset)
                }
            })
            .collect()
    });
    let mut theta = BTreeMap::new();
    for k in 2..=max_order {
        for subset in Combinations::new(d, k) {
            let v = match &by_size {
                Some(t) => t[k],
                None => central_to_theta(scheme, &subset),
            };
            if v != 0.0 {
                theta.insert(subset.iter().fold(0u64, |m, &j| m | 1 << j), v);
            }
        }
    }
    Ok(FgmCopula { dim: d, theta, admissible: if d <= DENSE_MAX_DIM { Some(true) } else { None } })
}

/// Inverse of [`theta_from_scheme`]: the dense scheme given by the Walsh
/// expansion, failing when a reconstructed mass is negative.
pub fn scheme_from_theta(copula: &FgmCopula) -> Result<BernoulliScheme> {
    copula.to_scheme()
}

/// Stochastic-form cdf `E_I[∏_k F_{U[I_k+1]}(u_k)]` with `F_{U[1]}(u) = 1-(1-u)^2`
/// and `F_{U[2]}(u) = u^2`.
pub fn scheme_cdf(scheme: &BernoulliScheme, u: &[f64]) -> Result<f64> {
    check_unit_point(scheme.dim(), u)?;
    let g: Vec<(f64, f64)> = u.iter().map(|&x| (1.0 - (1.0 - x) * (1.0 - x), x * x)).collect();
    scheme.expected_product(&g)
}

/// Exchangeable parameters `θ_k`, `k = 2..=d`, of the extreme negative
/// dependence copula. Odd orders vanish; even orders use a Gamma ratio
/// evaluated in signed log space.
pub fn end_thetas(d: usize) -> BTreeMap<usize, f64> {
    let m = ((d + 1) / 2) as f64;
    (2..=d)
        .map(|k| {
            if k % 2 == 1 {
                return (k, 0.0);
            }
            let kf = k as f64;
            let (l1, s1) = ln_gamma_signed(kf + 1.0);
            let (l2, s2) = ln_gamma_signed(0.5 - m);
            let (l3, s3) = ln_gamma_signed(kf / 2.0 + 1.0);
            let (l4, s4) = ln_gamma_signed((kf + 1.0) / 2.0 - m);
            let log_abs = l1 + l2 - kf * std::f64::consts::LN_2 - l3 - l4;
            (k, s1 * s2 * s3 * s4 * log_abs.exp())
        })
        .collect()
}

fn central_to_theta(scheme: &BernoulliScheme, subset: &[usize]) -> f64 {
    let k = subset.len() as i32;
    let c = scheme
        .central_mixed_moment(subset)
        .expect("subset validated by caller");
    (-2.0f64).powi(k) * c
}

fn check_unit_point(dim: usize, u: &[f64]) -> Result<()> {
    if u.len() != dim {
        return Err(FgmError::DimensionMismatch { expected: dim, got: u.len() });
    }
    if let Some(x) = u.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(FgmError::InvalidParameter(format!("copula argument {x} outside [0, 1]")));
    }
    Ok(())
}

fn subset_mask(dim: usize, subset: &[usize]) -> Result<u64> {
    let mut mask = 0u64;
    for &j in subset {
        if j >= dim {
            return Err(FgmError::InvalidParameter(format!(
                "coordinate {j} out of range for d = {dim}"
            )));
        }
        if mask >> j & 1 == 1 {
            return Err(FgmError::InvalidParameter(format!("coordinate {j} repeated in subset")));
        }
        mask |= 1 << j;
    }
    Ok(mask)
}

pub(crate) fn mask_to_subset(mask: u64) -> Vec<usize> {
    (0..64).filter(|k| mask >> k & 1 == 1).collect()
}

/// In-place Walsh-Hadamard transform: `out[A] = Σ_i x[i] (-1)^{|A ∩ i|}`.
fn walsh_hadamard(x: &mut [f64]) {
    let n = x.len();
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for j in start..start + h {
                let (a, b) = (x[j], x[j + h]);
                x[j] = a + b;
                x[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Lexicographic k-subsets of `0..n`.
struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self { n, idx: (0..k).collect(), done: k > n }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}
