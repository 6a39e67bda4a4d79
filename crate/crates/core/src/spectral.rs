//! FFT helpers for uniformly sampled periodic signals.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward DFT normalised by `1/M`: `c_k = (1/M) sum_i z_i e^{-2 pi i k i / M}`.
pub fn dft(samples: &[Complex64]) -> Vec<Complex64> {
    let m = samples.len();
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Signed frequency of DFT bin `i` for length `m`.
pub fn bin_frequency(i: usize, m: usize) -> i64 {
    if i <= m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

/// Spectral derivative of a real periodic signal sampled at `t_i = i period / M`.
/// The Nyquist bin of an even-length signal is dropped.
pub fn periodic_derivative(samples: &[f64], period: f64) -> Vec<f64> {
    let m = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for (i, c) in buf.iter_mut().enumerate() {
        let k = bin_frequency(i, m);
        if m % 2 == 0 && i == m / 2 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, TAU * k as f64 / period);
        }
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    buf.iter().map(|c| c.re / m as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_band_limited_signal_is_exact() {
        let m = 64;
        let period = 2.5;
        let s: Vec<f64> = (0..m)
            .map(|i| {
                let t = period * i as f64 / m as f64;
                (TAU * t / period).sin() + 0.3 * (3.0 * TAU * t / period).cos()
            })
            .collect();
        let d = periodic_derivative(&s, period);
        for (i, v) in d.iter().enumerate() {
            let t = period * i as f64 / m as f64;
            let w = TAU / period;
            let exact = w * (w * t).cos() - 0.9 * w * (3.0 * w * t).sin();
            assert!((v - exact).abs() < 1e-12);
        }
    }
}
