use super::{fft, DspError};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Circular shift by a possibly fractional number of samples,
/// `y[n] = x[n − shift]`, through a linear phase ramp on the DFT.
///
/// The Nyquist bin of even-length inputs is multiplied by `(−1)^round(shift)`,
/// which keeps the output real and makes `shift(shift(x, d), −d) == x`.
pub fn shift_samples(x: &[f64], shift: f64) -> Vec<f64> {
    let n = x.len();
    if n == 0 || shift == 0.0 {
        return x.to_vec();
    }
    let mut spec = fft::forward_real(x);
    for (k, v) in spec.iter_mut().enumerate() {
        let signed_k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        if n.is_multiple_of(2) && k == n / 2 {
            if (shift.round() as i64) % 2 != 0 {
                *v = -*v;
            }
            continue;
        }
        *v *= Complex64::from_polar(1.0, -2.0 * PI * signed_k * shift / n as f64);
    }
    fft::inverse_real(spec)
}

/// Advances `trace` by `delay` seconds, undoing a lag of that size.
pub fn compensate_delay(trace: &[f64], delay: f64, rate: f64) -> Result<Vec<f64>, DspError> {
    let samples = delay * rate;
    if samples.abs() >= 0.1 * trace.len() as f64 {
        return Err(DspError::DelayTooLarge { delay_samples: samples, len: trace.len() });
    }
    Ok(shift_samples(trace, -samples))
}

/// Vertex `(offset, value)` of the parabola through three equally spaced
/// points; offset is relative to the centre and clamped to `[−1, 1]`.
pub fn parabolic_peak(left: f64, centre: f64, right: f64) -> (f64, f64) {
    let curvature = left - 2.0 * centre + right;
    if curvature >= 0.0 {
        return (0.0, centre);
    }
    let offset = (0.5 * (left - right) / curvature).clamp(-1.0, 1.0);
    (offset, centre - 0.25 * (left - right) * offset)
}

/// Lag of the conjugate behind the probe, in seconds, from the maximum of the
/// linear cross-covariance over `|lag| ≤ N/10` with parabolic refinement.
pub fn estimate_delay(probe: &[f64], conj: &[f64], rate: f64) -> Result<f64, DspError> {
    let n = probe.len();
    if n == 0 || conj.len() != n {
        return Err(DspError::LengthMismatch(n, conj.len()));
    }
    let max_lag = (n / 10).max(1);
    let curve = cross_covariance(probe, conj, max_lag);
    let (lag, _) = curve_peak(&curve, max_lag)?;
    Ok(lag / rate)
}

/// `r[ℓ + max_lag] = mean_t p(t)·c(t+ℓ)` over the overlap, means removed.
pub(crate) fn cross_covariance(probe: &[f64], conj: &[f64], max_lag: usize) -> Vec<f64> {
    let n = probe.len();
    let mp = probe.iter().sum::<f64>() / n as f64;
    let mc = conj.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); size];
    let mut b = a.clone();
    for i in 0..n {
        a[i].re = probe[i] - mp;
        b[i].re = conj[i] - mc;
    }
    fft::forward_in_place(&mut a);
    fft::forward_in_place(&mut b);
    let prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x.conj() * y).collect();
    let circ = fft::inverse_real(prod);
    let sz = size as f64;
    (0..=2 * max_lag)
        .map(|i| {
            let lag = i as i64 - max_lag as i64;
            let idx = lag.rem_euclid(size as i64) as usize;
            circ[idx] * sz / (n as f64 - lag.unsigned_abs() as f64)
        })
        .collect()
}

/// Peak position (in samples, relative to lag 0 at `curve[max_lag]`) and
/// height, rejecting peaks that do not stand 3σ above the far background.
pub(crate) fn curve_peak(curve: &[f64], max_lag: usize) -> Result<(f64, f64), DspError> {
    let (imax, _) = curve
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let guard = (max_lag / 4).max(3);
    let background: Vec<f64> = curve
        .iter()
        .enumerate()
        .filter(|(i, _)| i.abs_diff(imax) > guard)
        .map(|(_, &v)| v)
        .collect();
    if background.len() >= 2 {
        let mean = background.iter().sum::<f64>() / background.len() as f64;
        let rms = (background.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / background.len() as f64)
            .sqrt();
        let prominence = (curve[imax] - mean) / rms.max(f64::MIN_POSITIVE);
        if prominence < 3.0 {
            return Err(DspError::NoPeak { prominence });
        }
    }
    let (offset, value) = if imax > 0 && imax + 1 < curve.len() {
        parabolic_peak(curve[imax - 1], curve[imax], curve[imax + 1])
    } else {
        (0.0, curve[imax])
    };
    Ok((imax as f64 + offset - max_lag as f64, value))
}
