use super::{fft, DspError};

/// Butterworth bandpass built from an `order`-pole lowpass prototype.
///
/// The power response is `1/(1 + x^(2·order))` with
/// `x = (f² − f_lo·f_hi)/(f·(f_hi − f_lo))`, i.e. the analog response
/// evaluated directly at each DFT bin frequency (no bilinear warping).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub order: u32,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl FilterSpec {
    pub const DEFAULT_ORDER: u32 = 10;
    pub const DEFAULT_F_LO: f64 = 500e3;

    pub fn new(order: u32, f_lo: f64, f_hi: f64) -> Self {
        Self { order, f_lo, f_hi }
    }

    pub fn with_cutoff(f_hi: f64) -> Self {
        Self::new(Self::DEFAULT_ORDER, Self::DEFAULT_F_LO, f_hi)
    }

    pub fn validate(&self, rate: f64) -> Result<(), DspError> {
        if self.order < 2 || !self.order.is_multiple_of(2) {
            return Err(DspError::Spec(format!("order must be even and >= 2, got {}", self.order)));
        }
        if !(self.f_lo > 0.0 && self.f_lo < self.f_hi) {
            return Err(DspError::Spec(format!(
                "need 0 < f_lo < f_hi, got f_lo={} f_hi={}",
                self.f_lo, self.f_hi
            )));
        }
        if self.f_hi >= rate / 2.0 {
            return Err(DspError::Spec(format!(
                "f_hi={} Hz must be below Nyquist {} Hz",
                self.f_hi,
                rate / 2.0
            )));
        }
        Ok(())
    }

    pub fn power_response(&self, f: f64) -> f64 {
        let f = f.abs();
        if f == 0.0 {
            return 0.0;
        }
        let x = (f * f - self.f_lo * self.f_hi) / (f * (self.f_hi - self.f_lo));
        1.0 / (1.0 + x.abs().powi(2 * self.order as i32))
    }

    pub fn magnitude(&self, f: f64) -> f64 {
        self.power_response(f).sqrt()
    }

    /// Power response on the `n`-point DFT grid.
    pub fn bin_power(&self, n: usize, rate: f64) -> Vec<f64> {
        (0..n).map(|k| self.power_response(fft::bin_frequency(k, n, rate))).collect()
    }
}

/// Zero-phase bandpass: the DFT of `trace` is scaled by the magnitude response.
pub fn butterworth_bandpass(trace: &[f64], spec: &FilterSpec, rate: f64) -> Result<Vec<f64>, DspError> {
    spec.validate(rate)?;
    let n = trace.len();
    let mut x = fft::forward_real(trace);
    for (k, v) in x.iter_mut().enumerate() {
        *v *= spec.magnitude(fft::bin_frequency(k, n, rate));
    }
    Ok(fft::inverse_real(x))
}
