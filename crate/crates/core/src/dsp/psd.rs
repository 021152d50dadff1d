use super::{fft, DspError};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    fn coefficients(self, n: usize) -> Option<Vec<f64>> {
        match self {
            Window::Rectangular => None,
            Window::Hann => Some(
                (0..n)
                    .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                    .collect(),
            ),
        }
    }
}

/// Averaged one-sided power spectral density.
///
/// `power[k]` is in (signal units)²/Hz on the uniform grid `k·R/N`,
/// `k = 0..=N/2`. The rectangle-rule integral `Σ power·Δf` equals the mean
/// square of the (windowed, power-normalized) input.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub num_averages: usize,
    pub window: Window,
}

impl Psd {
    pub fn resolution(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }

    pub fn integral(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.resolution()
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// Pointwise sum; both spectra must share a grid.
    pub fn add(&self, other: &Psd) -> Psd {
        assert_eq!(self.len(), other.len(), "PSD grids differ");
        Psd {
            frequencies: self.frequencies.clone(),
            power: self.power.iter().zip(&other.power).map(|(a, b)| a + b).collect(),
            num_averages: self.num_averages.min(other.num_averages),
            window: self.window,
        }
    }
}

/// One-sided periodogram of a single trace (no averaging).
pub fn periodogram(x: &[f64], rate: f64, window: Window) -> Vec<f64> {
    let n = x.len();
    let (spec, power_norm) = match window.coefficients(n) {
        None => (fft::forward_real(x), 1.0),
        Some(w) => {
            let xw: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
            let p = w.iter().map(|v| v * v).sum::<f64>() / n as f64;
            (fft::forward_real(&xw), p)
        }
    };
    one_sided(&spec, rate, power_norm)
}

pub(crate) fn one_sided(spec: &[num_complex::Complex64], rate: f64, power_norm: f64) -> Vec<f64> {
    let n = spec.len();
    let scale = 1.0 / (rate * n as f64 * power_norm);
    (0..=n / 2)
        .map(|k| {
            let double = k != 0 && !(n.is_multiple_of(2) && k == n / 2);
            spec[k].norm_sqr() * scale * if double { 2.0 } else { 1.0 }
        })
        .collect()
}

/// Mean of per-set periodograms.
pub fn psd_estimate<S: AsRef<[f64]>>(sets: &[S], rate: f64, window: Window) -> Result<Psd, DspError> {
    if sets.len() < 2 {
        return Err(DspError::TooFewSets { needed: 2, got: sets.len() });
    }
    let n = sets[0].as_ref().len();
    if n == 0 {
        return Err(DspError::LengthMismatch(0, 0));
    }
    let mut acc = vec![0.0; n / 2 + 1];
    for s in sets {
        let s = s.as_ref();
        if s.len() != n {
            return Err(DspError::LengthMismatch(n, s.len()));
        }
        for (a, p) in acc.iter_mut().zip(periodogram(s, rate, window)) {
            *a += p;
        }
    }
    let inv = 1.0 / sets.len() as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    Ok(Psd {
        frequencies: (0..acc.len()).map(|k| k as f64 * rate / n as f64).collect(),
        power: acc,
        num_averages: sets.len(),
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn parseval_on_deterministic_input() {
        for n in [64usize, 99, 1000] {
            let sets: Vec<Vec<f64>> = (0..3)
                .map(|j| (0..n).map(|i| ((i * (j + 3)) as f64 * 0.11).sin() + 0.3 * ((i % 7) as f64 - 3.0)).collect())
                .collect();
            let psd = psd_estimate(&sets, 2e6, Window::Rectangular).unwrap();
            let ms = sets.iter().flatten().map(|v| v * v).sum::<f64>() / (3 * n) as f64;
            assert_relative_eq!(psd.integral(), ms, max_relative = 1e-6);
        }
    }

    #[test]
    fn white_noise_level() {
        let rate = 1e9;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let sets: Vec<Vec<f64>> = (0..500)
            .map(|_| (0..1024).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let psd = psd_estimate(&sets, rate, Window::Rectangular).unwrap();
        let level = 2.0 / rate;
        let inner = &psd.power[1..psd.len() - 1];
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        assert!((mean / level - 1.0).abs() < 0.03);
        for block in inner.chunks(32) {
            let m = block.iter().sum::<f64>() / block.len() as f64;
            assert!((m / level - 1.0).abs() < 0.03, "block level {}", m / level);
        }
    }

    #[test]
    fn sinusoid_line_power() {
        let (n, rate, amp) = (1000usize, 1e6, 1.7);
        let k0 = 50;
        let x: Vec<f64> = (0..n).map(|i| amp * (2.0 * PI * (k0 * i) as f64 / n as f64).cos()).collect();
        let psd = psd_estimate(&[x.clone(), x], rate, Window::Rectangular).unwrap();
        let line = psd.power[k0] * psd.resolution();
        assert_relative_eq!(line, amp * amp / 2.0, max_relative = 1e-10);
        let rest: f64 = psd.power.iter().enumerate().filter(|&(k, _)| k != k0).map(|(_, p)| p).sum();
        assert!(rest * psd.resolution() < 1e-20);
    }

    #[test]
    fn hann_window_keeps_noise_level() {
        let rate = 1e6;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let sets: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..512).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let psd = psd_estimate(&sets, rate, Window::Hann).unwrap();
        let mean = psd.power[5..250].iter().sum::<f64>() / 245.0;
        assert!((mean * rate / 2.0 - 1.0).abs() < 0.03);
    }

    #[test]
    fn needs_two_sets() {
        assert!(matches!(
            psd_estimate(&[vec![1.0; 8]], 1.0, Window::Rectangular),
            Err(DspError::TooFewSets { .. })
        ));
    }
}
