//! Special functions used across the crate: signed log-Gamma, log binomials,
//! Poisson probability runs (the backbone of every Erlang cdf) and the
//! standard normal cdf.

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma as ln_gamma_pos;
use std::f64::consts::{PI, SQRT_2};

/// `ln |Γ(x)|` together with the sign of `Γ(x)`.
///
/// Negative non-integer arguments go through the reflection formula.
/// Poles (non-positive integers) return `(+inf, 1.0)`.
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if x > 0.0 {
        return (ln_gamma_pos(x), 1.0);
    }
    if x == x.floor() {
        return (f64::INFINITY, 1.0);
    }
    // Γ(x) Γ(1 - x) = π / sin(πx)
    let s = (PI * x).sin();
    let ln_abs = PI.ln() - s.abs().ln() - ln_gamma_pos(1.0 - x);
    (ln_abs, s.signum())
}

pub fn ln_gamma(x: f64) -> f64 {
    ln_gamma_signed(x).0
}

pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma_pos(n as f64 + 1.0)
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Poisson probabilities `e^{-y} y^n / n!` for `n = 0..=n_max`.
///
/// Evaluated once in log space at the mode and propagated outward by the
/// ratio recurrences, so large `y` neither overflows nor underflows at the
/// centre of the distribution.
pub fn poisson_pmf_run(y: f64, n_max: usize) -> Vec<f64> {
    let mut p = vec![0.0; n_max + 1];
    if y <= 0.0 {
        p[0] = 1.0;
        return p;
    }
    let mode = (y.floor() as usize).min(n_max);
    p[mode] = (-y + mode as f64 * y.ln() - ln_factorial(mode)).exp();
    for n in (0..mode).rev() {
        p[n] = p[n + 1] * (n + 1) as f64 / y;
    }
    for n in mode..n_max {
        p[n + 1] = p[n] * y / (n + 1) as f64;
    }
    p
}

/// Erlang survival values `H̄(x; j, rate)` for shapes `j = 1..=max_shape`,
/// returned with index `j - 1`.
pub fn erlang_sf_run(x: f64, rate: f64, max_shape: usize) -> Vec<f64> {
    if max_shape == 0 {
        return Vec::new();
    }
    if x <= 0.0 {
        return vec![1.0; max_shape];
    }
    let pois = poisson_pmf_run(rate * x, max_shape - 1);
    let mut acc = 0.0;
    pois.iter()
        .map(|p| {
            acc += p;
            acc.min(1.0)
        })
        .collect()
}

/// Erlang density `h(x; shape, rate)`.
pub fn erlang_pdf(x: f64, shape: usize, rate: f64) -> f64 {
    if x < 0.0 || shape == 0 {
        return 0.0;
    }
    if x == 0.0 {
        return if shape == 1 { rate } else { 0.0 };
    }
    let n = shape - 1;
    let y = rate * x;
    rate * (-y + n as f64 * y.ln() - ln_factorial(n)).exp()
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Lazily extended table of `ln n!`.
#[derive(Default)]
pub(crate) struct LnFactorials {
    table: std::cell::RefCell<Vec<f64>>,
}

impl LnFactorials {
    pub(crate) fn get(&self, n: usize) -> f64 {
        let mut t = self.table.borrow_mut();
        if t.len() <= n {
            let start = t.len();
            t.extend((start..=n.max(2 * start)).map(ln_factorial));
        }
        t[n]
    }
}

/// Neumaier-compensated summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_reflection_half_integers() {
        // Γ(-1/2) = -2√π, Γ(-3/2) = 4√π/3
        let (l, s) = ln_gamma_signed(-0.5);
        assert!((s * l.exp() + 2.0 * PI.sqrt()).abs() < 1e-12);
        let (l, s) = ln_gamma_signed(-1.5);
        assert!((s * l.exp() - 4.0 * PI.sqrt() / 3.0).abs() < 1e-12);
        let (l, s) = ln_gamma_signed(-2.5);
        assert!(s < 0.0);
        assert!((l.exp() - 8.0 * PI.sqrt() / 15.0).abs() < 1e-12);
    }

    #[test]
    fn poisson_run_matches_direct() {
        for &y in &[0.3, 4.0, 57.5, 900.0] {
            let run = poisson_pmf_run(y, 2000);
            let total: f64 = run.iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "y={y} total={total}");
            for n in [0usize, 3, 10, 60, 950] {
                let direct = (-y + n as f64 * y.ln() - ln_factorial(n)).exp();
                let err = (run[n] - direct).abs();
                assert!(err <= 1e-12 * direct.max(1e-300) || err < 1e-300, "y={y} n={n}");
            }
        }
    }

    #[test]
    fn erlang_sf_shape_one_is_exponential() {
        let sf = erlang_sf_run(2.0, 0.5, 3);
        assert!((sf[0] - (-1.0f64).exp()).abs() < 1e-15);
        // H̄(x;2) = e^{-y}(1 + y)
        assert!((sf[1] - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn normal_cdf_symmetry() {
        assert!((std_normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((std_normal_cdf(1.2) + std_normal_cdf(-1.2) - 1.0).abs() < 1e-15);
    }
}
