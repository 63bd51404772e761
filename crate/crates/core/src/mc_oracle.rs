//! Monte Carlo sampler built on the stochastic representation
//! `X = (1 - I) X_{[1]} + I X_{[2]}`, used as an independent check of the
//! analytic engines.
//!
//! `X_{[1]}` and `X_{[2]}` come from the probability-integral transform of
//! Beta(1, 2) and Beta(2, 1) uniforms when the quantile is explicit. Mixed
//! Erlang risks instead take the minimum or maximum of two independent
//! draws, which has the same law and avoids a root search per variate.
//!
//! Generator: ChaCha8 from `rand_chacha` 0.9. Rows are produced in chunks
//! of [`CHUNK`]; chunk `c` uses the generator seeded with `seed` on stream
//! `c`, so batches are bit-identical for a given seed regardless of thread
//! count.

use crate::error::{FgmError, Result};
use crate::marginals::{Marginal, MixedErlang};
use crate::portfolio::Portfolio;
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Gamma};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const CHUNK: usize = 1 << 14;

/// `n × d` realizations stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    values: Vec<f64>,
    dim: usize,
    seed: u64,
    description: String,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows().map(|r| r[k]).collect()
    }

    /// Realizations of `S`.
    pub fn sums(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum()).collect()
    }
}

/// Draws a mixed Erlang variate: a shape from the weights, then a Gamma
/// variate with that shape.
struct MeDraw {
    cumulative: Vec<f64>,
    gammas: Vec<Gamma<f64>>,
}

impl MeDraw {
    fn new(m: &MixedErlang) -> Result<Self> {
        let mut acc = 0.0;
        let cumulative = m
            .weights()
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let gammas = (1..=m.max_shape())
            .map(|j| Gamma::new(j as f64, 1.0 / m.rate()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| FgmError::InvalidParameter(format!("gamma sampler: {e}")))?;
        Ok(Self { cumulative, gammas })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = rng.random::<f64>() * self.cumulative.last().unwrap();
        let j = self.cumulative.partition_point(|&c| c <= u).min(self.gammas.len() - 1);
        self.gammas[j].sample(rng)
    }
}

enum Sampler {
    /// Probability-integral transform of Beta(1, 2) / Beta(2, 1) uniforms.
    Quantile(Marginal),
    /// Minimum or maximum of two independent draws.
    PairOfCopies(MeDraw),
}

impl Sampler {
    fn draw<R: Rng + ?Sized>(&self, upper: bool, rng: &mut R) -> Result<f64> {
        match self {
            Sampler::Quantile(m) => {
                let v: f64 = rng.sample(Open01);
                let u = if upper { v.sqrt() } else { 1.0 - (1.0 - v).sqrt() };
                m.quantile(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
            }
            Sampler::PairOfCopies(me) => {
                let (a, b) = (me.draw(rng), me.draw(rng));
                Ok(if upper { a.max(b) } else { a.min(b) })
            }
        }
    }
}

/// Draws `n` rows of the portfolio.
pub fn sample_portfolio(portfolio: &Portfolio, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(FgmError::EmptyBatch);
    }
    let scheme = portfolio.scheme()?;
    let d = portfolio.dim();
    let samplers: Vec<Sampler> = portfolio
        .marginals()
        .iter()
        .map(|m| match (m, m.as_mixed_erlang()) {
            (Marginal::MixedErlang(_), Some(me)) => Ok(Sampler::PairOfCopies(MeDraw::new(&me)?)),
            _ => Ok(Sampler::Quantile(m.clone())),
        })
        .collect::<Result<_>>()?;
    let chunks = n.div_ceil(CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let rows = CHUNK.min(n - c * CHUNK);
            let mut out = Vec::with_capacity(rows * d);
            for _ in 0..rows {
                let i = scheme.sample(&mut rng);
                for (k, s) in samplers.iter().enumerate() {
                    out.push(s.draw(i[k], &mut rng)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleBatch {
        values: parts.concat(),
        dim: d,
        seed,
        description: format!(
            "{} with marginals [{}]",
            scheme.label(),
            portfolio.marginals().iter().map(|m| m.label()).collect::<Vec<_>>().join(", ")
        ),
    })
}

/// Quantities that can be estimated from a batch. Risk indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    Mean,
    Variance,
    /// `E[S^m]`.
    RawMoment(u32),
    Cdf(f64),
    Tvar(f64),
    /// `E[X_k 1{S > t}]`.
    TailContribution { k: usize, t: f64 },
    /// `E[X_k | s - δ < S < s + δ]`.
    BandMean { k: usize, s: f64, delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Whether `target` lies within `z` standard errors.
    pub fn covers(&self, target: f64, z: f64) -> bool {
        (self.value - target).abs() <= z * self.std_error
    }
}

fn mean_se(xs: impl Iterator<Item = f64>) -> Result<Estimate> {
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for x in xs {
        n += 1;
        let delta = x - mean;
        mean += delta / n as f64;
        m2 += delta * (x - mean);
    }
    if n < 2 {
        return Err(FgmError::EmptyBatch);
    }
    let var = m2 / (n - 1) as f64;
    Ok(Estimate { value: mean, std_error: (var / n as f64).sqrt() })
}

pub fn estimate(batch: &SampleBatch, stat: Statistic) -> Result<Estimate> {
    if batch.len() < 2 {
        return Err(FgmError::EmptyBatch);
    }
    let check_k = |k: usize| {
        if k < batch.dim() {
            Ok(())
        } else {
            Err(FgmError::InvalidParameter(format!("risk index {k} out of range")))
        }
    };
    let s = batch.sums();
    let n = s.len() as f64;
    match stat {
        Statistic::Mean => mean_se(s.iter().copied()),
        Statistic::RawMoment(m) => mean_se(s.iter().map(|x| x.powi(m as i32))),
        Statistic::Variance => {
            let mean = s.iter().sum::<f64>() / n;
            let m2 = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let m4 = s.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
            Ok(Estimate { value: m2 * n / (n - 1.0), std_error: ((m4 - m2 * m2) / n).sqrt() })
        }
        Statistic::Cdf(x) => {
            let p = s.iter().filter(|v| **v <= x).count() as f64 / n;
            Ok(Estimate { value: p, std_error: (p * (1.0 - p) / n).sqrt() })
        }
        Statistic::Tvar(kappa) => {
            crate::risk::check_level(kappa)?;
            let mut sorted = s.clone();
            sorted.sort_by(f64::total_cmp);
            let idx = ((kappa * n).ceil() as usize).clamp(1, sorted.len()) - 1;
            let var = sorted[idx];
            let excess = mean_se(sorted.iter().map(|x| (x - var).max(0.0)))?;
            Ok(Estimate {
                value: var + excess.value / (1.0 - kappa),
                std_error: excess.std_error / (1.0 - kappa),
            })
        }
        Statistic::TailContribution { k, t } => {
            check_k(k)?;
            mean_se(batch.rows().zip(&s).map(|(r, &sv)| if sv > t { r[k] } else { 0.0 }))
        }
        Statistic::BandMean { k, s: centre, delta } => {
            check_k(k)?;
            mean_se(
                batch
                    .rows()
                    .zip(&s)
                    .filter(|(_, &sv)| (sv - centre).abs() < delta)
                    .map(|(r, _)| r[k]),
            )
        }
    }
}

/// Default conditioning half-width `0.25 sd(S) n^{-1/4}` for band means.
pub fn default_band(batch: &SampleBatch) -> f64 {
    let s = batch.sums();
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let sd = (s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    0.25 * sd / n.powf(0.25)
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

/// Spearman's rank correlation (continuous data, no tie correction).
pub fn spearman_rho(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let m = (n - 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - m) * (b - m)).sum();
    let var: f64 = rx.iter().map(|a| (a - m).powi(2)).sum();
    cov / var
}

/// Kendall's tau by counting discordant pairs with a merge sort.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; ys.len()];
    let discordant = merge_count(&mut ys, &mut buf);
    let n = x.len() as f64;
    let pairs = n * (n - 1.0) / 2.0;
    1.0 - 2.0 * discordant as f64 / pairs
}

fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf[k] = v[i];
            i += 1;
        } else {
            buf[k] = v[j];
            inv += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    inv
}
