//! Thin layer over `rustfft` for the pgf-space convolutions.

use num_complex::Complex64;
use rustfft::FftPlanner;

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Forward DFT of a real sequence zero-padded to `len`.
///
/// With the `e^{-2πi jk/len}` kernel, entry `k` is the pgf of `pmf` evaluated
/// at the `k`-th root of unity.
pub fn forward_real(pmf: &[f64], len: usize) -> Vec<Complex64> {
    assert!(pmf.len() <= len, "sequence longer than transform length");
    let mut buf: Vec<Complex64> = pmf.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut buf);
    buf
}

/// Normalized inverse DFT; returns the real parts and the largest absolute
/// imaginary residue.
pub fn inverse_to_real(mut spectrum: Vec<Complex64>) -> (Vec<f64>, f64) {
    let len = spectrum.len();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(len).process(&mut spectrum);
    let scale = 1.0 / len as f64;
    let mut residue = 0.0_f64;
    let re = spectrum
        .into_iter()
        .map(|c| {
            residue = residue.max((c.im * scale).abs());
            c.re * scale
        })
        .collect();
    (re, residue)
}
