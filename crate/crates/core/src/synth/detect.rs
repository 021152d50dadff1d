use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Splits an intensity-fluctuation trace of a beam with mean `dc` (counts per
/// sample) onto two detectors behind a 50/50 beam splitter.
///
/// The halves are `I/2 + n` and `I/2 − n` with `n` white and of variance
/// `dc/4`: their sum is the parent trace, their difference carries exactly
/// the parent's shot noise, and their covariance is the normally ordered part
/// of the parent's fluctuations.
pub fn split_and_detect<R: Rng + ?Sized>(fluct: &[f64], dc: f64, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let partition = Normal::new(0.0, (dc / 4.0).sqrt()).expect("dc must be finite and >= 0");
    let mut h1 = Vec::with_capacity(fluct.len());
    let mut h2 = Vec::with_capacity(fluct.len());
    for &x in fluct {
        let n = partition.sample(rng);
        h1.push(0.5 * x + n);
        h2.push(0.5 * x - n);
    }
    (h1, h2)
}

/// Quantizer step for `bits` covering `[−full_scale, full_scale)`.
pub fn quantizer_step(adc_bits: u16, full_scale: f64) -> f64 {
    full_scale / (1u64 << (adc_bits - 1)) as f64
}

/// Mid-tread uniform quantizer. Returns the codes and the number of clipped
/// samples; dequantize with `code × quantizer_step(bits, full_scale)`.
pub fn quantize(trace: &[f64], adc_bits: u16, full_scale: f64) -> (Vec<i16>, usize) {
    let half = 1i64 << (adc_bits - 1);
    let (lo, hi) = (-half, half - 1);
    let step = quantizer_step(adc_bits, full_scale);
    let mut clipped = 0;
    let codes = trace
        .iter()
        .map(|&x| {
            let c = (x / step).round() as i64;
            if c < lo || c > hi {
                clipped += 1;
            }
            c.clamp(lo, hi) as i16
        })
        .collect();
    (codes, clipped)
}
