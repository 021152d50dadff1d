use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Unnormalized forward DFT `X_k = Σ x_n e^{−2πikn/N}` of a real signal.
pub fn forward_real(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward_in_place(&mut buf);
    buf
}

pub fn forward_in_place(buf: &mut [Complex64]) {
    if !buf.is_empty() {
        plan(buf.len(), false).process(buf);
    }
}

/// Inverse DFT scaled by `1/N`, returning the real part.
pub fn inverse_real(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    if n == 0 {
        return Vec::new();
    }
    plan(n, true).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.into_iter().map(|c| c.re * scale).collect()
}

/// Physical frequency of DFT bin `k` (folded to `[0, R/2]`).
pub fn bin_frequency(k: usize, n: usize, rate: f64) -> f64 {
    let k = if k <= n / 2 { k } else { n - k };
    k as f64 * rate / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let x: Vec<f64> = (0..37).map(|i| (i as f64 * 0.37).sin() + 0.1 * i as f64).collect();
        let y = inverse_real(forward_real(&x));
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn folded_frequencies() {
        assert_eq!(bin_frequency(0, 10, 1e9), 0.0);
        assert_eq!(bin_frequency(9, 10, 1e9), 1e8);
        assert_eq!(bin_frequency(5, 10, 1e9), 5e8);
    }
}
