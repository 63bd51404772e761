//! Symmetric multivariate Bernoulli vectors.
//!
//! Every FGM copula is driven by a random vector `I ∈ {0,1}^d` whose
//! univariate margins are Bernoulli(1/2). All mixture expectations in the
//! crate reduce to `E[∏_k g_k(I_k)]`, evaluated here with a kernel tailored
//! to each structure so that large portfolios never enumerate `2^d` states.

use crate::error::{FgmError, Result};
use crate::special::ln_binomial;
use num_complex::Complex64;
use rand::Rng;
use std::ops::{Add, Mul, Sub};

/// Largest dimension accepted by the dense mass table.
pub const DENSE_MAX_DIM: usize = 20;

const MASS_TOL: f64 = 1e-12;

/// Values the product kernel can operate on (real moments, complex transforms).
pub trait KernelValue:
    Copy
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
}

impl KernelValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
}

impl KernelValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
}

/// Structure of the joint law of `I`.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeKind {
    /// Full mass table over `{0,1}^d`, coordinate `k` at bit `k` (0-based).
    Dense(Vec<f64>),
    /// Exchangeable law given by the pmf of `N = ΣI_k` on `0..=d`.
    Exchangeable(Vec<f64>),
    /// All coordinates equal: mass 1/2 on the all-zeros and all-ones vectors.
    Comonotone,
    /// Extreme negative dependence: uniform on the middle stratum (or the two
    /// middle strata, each with mass 1/2, when `d` is odd).
    EndExchangeable,
    /// Stationary symmetric two-state chain with lag-one correlation `alpha`.
    Markov { alpha: f64 },
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliScheme {
    dim: usize,
    kind: SchemeKind,
}

impl BernoulliScheme {
    pub fn independent(dim: usize) -> Result<Self> {
        Self::structured(dim, SchemeKind::Independent)
    }

    pub fn comonotone(dim: usize) -> Result<Self> {
        Self::structured(dim, SchemeKind::Comonotone)
    }

    pub fn end(dim: usize) -> Result<Self> {
        Self::structured(dim, SchemeKind::EndExchangeable)
    }

    pub fn markov(dim: usize, alpha: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&alpha) {
            return Err(FgmError::InvalidParameter(format!(
                "Markov correlation must lie in [-1, 1], got {alpha}"
            )));
        }
        Self::structured(dim, SchemeKind::Markov { alpha })
    }

    fn structured(dim: usize, kind: SchemeKind) -> Result<Self> {
        if dim == 0 {
            return Err(FgmError::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self { dim, kind })
    }

    /// Exchangeable scheme from the pmf of `N = ΣI_k`. Symmetric margins
    /// require `E[N] = d/2`.
    pub fn exchangeable(dim: usize, nd_pmf: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(FgmError::InvalidParameter("dimension must be positive".into()));
        }
        if nd_pmf.len() != dim + 1 {
            return Err(FgmError::DimensionMismatch { expected: dim + 1, got: nd_pmf.len() });
        }
        check_masses(&nd_pmf)?;
        let mean: f64 = nd_pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        if (mean - dim as f64 / 2.0).abs() > MASS_TOL * dim as f64 {
            return Err(FgmError::InvalidParameter(format!(
                "E[N] = {mean} but symmetric margins need d/2 = {}",
                dim as f64 / 2.0
            )));
        }
        Ok(Self { dim, kind: SchemeKind::Exchangeable(nd_pmf) })
    }

    /// Dense scheme from a `2^d` mass table indexed by bitmask.
    pub fn dense(dim: usize, masses: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(FgmError::InvalidParameter("dimension must be positive".into()));
        }
        if dim > DENSE_MAX_DIM {
            return Err(FgmError::DenseTooLarge(dim));
        }
        if masses.len() != 1 << dim {
            return Err(FgmError::DimensionMismatch { expected: 1 << dim, got: masses.len() });
        }
        check_masses(&masses)?;
        for k in 0..dim {
            let p1: f64 = masses
                .iter()
                .enumerate()
                .filter(|(mask, _)| mask >> k & 1 == 1)
                .map(|(_, p)| p)
                .sum();
            if (p1 - 0.5).abs() > MASS_TOL {
                return Err(FgmError::InvalidParameter(format!(
                    "coordinate {k} has Pr(I = 1) = {p1}, expected 1/2"
                )));
            }
        }
        Ok(Self { dim, kind: SchemeKind::Dense(masses) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &SchemeKind {
        &self.kind
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match &self.kind {
            SchemeKind::Dense(_) => "dense".into(),
            SchemeKind::Exchangeable(_) => "exchangeable".into(),
            SchemeKind::Comonotone => "epd".into(),
            SchemeKind::EndExchangeable => "end".into(),
            SchemeKind::Markov { alpha } => format!("markov(alpha={alpha})"),
            SchemeKind::Independent => "independent".into(),
        }
    }

    /// Pmf of `N = ΣI_k` for the exchangeable structures, `None` otherwise.
    pub fn nd_pmf(&self) -> Option<Vec<f64>> {
        let d = self.dim;
        match &self.kind {
            SchemeKind::Exchangeable(p) => Some(p.clone()),
            SchemeKind::Comonotone => {
                let mut p = vec![0.0; d + 1];
                p[0] += 0.5;
                p[d] += 0.5;
                Some(p)
            }
            SchemeKind::EndExchangeable => {
                let mut p = vec![0.0; d + 1];
                if d % 2 == 0 {
                    p[d / 2] = 1.0;
                } else {
                    p[(d - 1) / 2] = 0.5;
                    p[(d + 1) / 2] = 0.5;
                }
                Some(p)
            }
            SchemeKind::Independent => Some(
                (0..=d)
                    .map(|n| (ln_binomial(d, n) - d as f64 * std::f64::consts::LN_2).exp())
                    .collect(),
            ),
            SchemeKind::Dense(_) | SchemeKind::Markov { .. } => None,
        }
    }

    /// `E[∏_k g_k(I_k)]` where `g[k] = (g_k(0), g_k(1))`.
    pub fn expected_product<T: KernelValue>(&self, g: &[(T, T)]) -> Result<T> {
        if g.len() != self.dim {
            return Err(FgmError::DimensionMismatch { expected: self.dim, got: g.len() });
        }
        Ok(match &self.kind {
            SchemeKind::Independent => {
                g.iter().fold(T::one(), |acc, &(a, b)| acc * ((a + b) * 0.5))
            }
            SchemeKind::Comonotone => {
                let lo = g.iter().fold(T::one(), |acc, &(a, _)| acc * a);
                let hi = g.iter().fold(T::one(), |acc, &(_, b)| acc * b);
                (lo + hi) * 0.5
            }
            SchemeKind::Markov { alpha } => markov_product(*alpha, g),
            SchemeKind::Dense(masses) => dense_product(masses, g),
            SchemeKind::Exchangeable(nd) => exchangeable_product(nd, g),
            SchemeKind::EndExchangeable => {
                let nd = self.nd_pmf().expect("END is exchangeable");
                exchangeable_product(&nd, g)
            }
        })
    }

    /// `f_I(i)`.
    pub fn pmf(&self, i: &[bool]) -> Result<f64> {
        let d = self.dim;
        if i.len() != d {
            return Err(FgmError::DimensionMismatch { expected: d, got: i.len() });
        }
        let ones = i.iter().filter(|&&b| b).count();
        Ok(match &self.kind {
            SchemeKind::Dense(masses) => masses[bits_to_mask(i)],
            SchemeKind::Independent => 0.5f64.powi(d as i32),
            SchemeKind::Comonotone => {
                if ones == 0 || ones == d {
                    0.5
                } else {
                    0.0
                }
            }
            SchemeKind::Markov { alpha } => {
                let stay = 0.5 * (1.0 + alpha);
                i.windows(2).fold(0.5, |acc, w| acc * if w[0] == w[1] { stay } else { 1.0 - stay })
            }
            SchemeKind::Exchangeable(_) | SchemeKind::EndExchangeable => {
                let nd = self.nd_pmf().expect("exchangeable");
                if nd[ones] == 0.0 {
                    0.0
                } else {
                    nd[ones] * (-ln_binomial(d, ones)).exp()
                }
            }
        })
    }

    /// `E[∏_{n ∈ subset} (I_n - 1/2)]` over 0-based coordinate indices.
    pub fn central_mixed_moment(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() {
            return Err(FgmError::InvalidParameter("subset must be non-empty".into()));
        }
        let mut g = vec![(1.0, 1.0); self.dim];
        for &n in subset {
            if n >= self.dim {
                return Err(FgmError::InvalidParameter(format!(
                    "coordinate {n} out of range for d = {}",
                    self.dim
                )));
            }
            if g[n] != (1.0, 1.0) {
                return Err(FgmError::InvalidParameter(format!("coordinate {n} repeated")));
            }
            g[n] = (-0.5, 0.5);
        }
        if subset.len() == 1 {
            return Ok(0.0);
        }
        self.expected_product(&g)
    }

    /// Draw one realization of `I`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        let d = self.dim;
        match &self.kind {
            SchemeKind::Independent => (0..d).map(|_| rng.random::<bool>()).collect(),
            SchemeKind::Comonotone => vec![rng.random::<bool>(); d],
            SchemeKind::Markov { alpha } => {
                let stay = 0.5 * (1.0 + alpha);
                let mut out = Vec::with_capacity(d);
                let mut state = rng.random::<bool>();
                out.push(state);
                for _ in 1..d {
                    if rng.random::<f64>() >= stay {
                        state = !state;
                    }
                    out.push(state);
                }
                out
            }
            SchemeKind::Dense(masses) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = masses.len() - 1;
                for (mask, p) in masses.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = mask;
                        break;
                    }
                }
                (0..d).map(|k| pick >> k & 1 == 1).collect()
            }
            SchemeKind::Exchangeable(_) | SchemeKind::EndExchangeable => {
                let nd = self.nd_pmf().expect("exchangeable");
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut n = d;
                for (k, p) in nd.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        n = k;
                        break;
                    }
                }
                random_subset(d, n, rng)
            }
        }
    }

    /// Dense mass table for small `d`, built from `pmf`.
    pub fn to_dense(&self) -> Result<BernoulliScheme> {
        if let SchemeKind::Dense(_) = self.kind {
            return Ok(self.clone());
        }
        if self.dim > DENSE_MAX_DIM {
            return Err(FgmError::DenseTooLarge(self.dim));
        }
        let d = self.dim;
        let masses = (0..1usize << d)
            .map(|mask| {
                let bits: Vec<bool> = (0..d).map(|k| mask >> k & 1 == 1).collect();
                self.pmf(&bits)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BernoulliScheme { dim: d, kind: SchemeKind::Dense(masses) })
    }
}

fn check_masses(m: &[f64]) -> Result<()> {
    if let Some(p) = m.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(FgmError::InvalidParameter(format!("mass {p} is negative or not finite")));
    }
    let total: f64 = m.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(FgmError::InvalidParameter(format!("masses sum to {total}, expected 1")));
    }
    Ok(())
}

pub(crate) fn bits_to_mask(i: &[bool]) -> usize {
    i.iter().enumerate().fold(0, |m, (k, &b)| if b { m | 1 << k } else { m })
}

fn random_subset<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Vec<bool> {
    // partial Fisher-Yates over coordinate indices
    let mut idx: Vec<usize> = (0..d).collect();
    let mut out = vec![false; d];
    for k in 0..n {
        let j = rng.random_range(k..d);
        idx.swap(k, j);
        out[idx[k]] = true;
    }
    out
}

fn markov_product<T: KernelValue>(alpha: f64, g: &[(T, T)]) -> T {
    let stay = 0.5 * (1.0 + alpha);
    let switch = 1.0 - stay;
    let (mut v0, mut v1) = (g[0].0 * 0.5, g[0].1 * 0.5);
    for &(a, b) in &g[1..] {
        let n0 = (v0 * stay + v1 * switch) * a;
        let n1 = (v0 * switch + v1 * stay) * b;
        v0 = n0;
        v1 = n1;
    }
    v0 + v1
}

fn dense_product<T: KernelValue>(masses: &[f64], g: &[(T, T)]) -> T {
    // products table grows one coordinate at a time: bit k selects g_k(1)
    let mut prods = Vec::with_capacity(masses.len());
    prods.push(T::one());
    for &(a, b) in g {
        let len = prods.len();
        for j in 0..len {
            let p = prods[j];
            prods.push(p * b);
            prods[j] = p * a;
        }
    }
    masses
        .iter()
        .zip(&prods)
        .filter(|(m, _)| **m != 0.0)
        .fold(T::zero(), |acc, (&m, &p)| acc + p * m)
}

/// Exchangeable kernel: `Σ_n Pr(N = n) ē_n` with `ē_n` the average of
/// `∏ g_k(i_k)` over vectors with `n` ones.
///
/// The running quantity `ē_n^{(k)} = e_n^{(k)} / C(k, n)` obeys
/// `ē_n^{(k)} = a_k ē_n^{(k-1)} (k-n)/k + b_k ē_{n-1}^{(k-1)} n/k`, which stays
/// bounded by `max|g|^k` where the raw symmetric polynomials would overflow.
fn exchangeable_product<T: KernelValue>(nd: &[f64], g: &[(T, T)]) -> T {
    let d = g.len();
    if g.iter().all(|p| *p == g[0]) {
        let (a, b) = g[0];
        let mut pow_a = vec![T::one(); d + 1];
        let mut pow_b = vec![T::one(); d + 1];
        for n in 1..=d {
            pow_a[n] = pow_a[n - 1] * a;
            pow_b[n] = pow_b[n - 1] * b;
        }
        return nd
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != 0.0)
            .fold(T::zero(), |acc, (n, &p)| acc + pow_a[d - n] * pow_b[n] * p);
    }
    let mut e = vec![T::zero(); d + 1];
    e[0] = T::one();
    for (k0, &(a, b)) in g.iter().enumerate() {
        let k = k0 + 1;
        let kf = k as f64;
        for n in (0..=k).rev() {
            let keep = if n < k { e[n] * a * ((k - n) as f64 / kf) } else { T::zero() };
            let add = if n > 0 { e[n - 1] * b * (n as f64 / kf) } else { T::zero() };
            e[n] = keep + add;
        }
    }
    nd.iter()
        .zip(&e)
        .filter(|(p, _)| **p != 0.0)
        .fold(T::zero(), |acc, (&p, &v)| acc + v * p)
}
