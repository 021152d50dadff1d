//! Per-set Fourier passes shared by the estimators.
//!
//! Everything is computed from per-set DFTs. Filtering by a zero-phase
//! response `H` enters only as the weight `|H|²` on cross spectra, so the
//! time-domain covariance of two filtered channels at zero lag is
//! `Σ_k |H_k|² · Re(X_k* Y_k) · c_k / N²` with `c_k` the one-sided factor.

use crate::dsp::fft;
use crate::synth::TraceSet;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Sets processed in parallel per batch; batch results are reduced in set
/// order, so sums do not depend on scheduling.
const BATCH: usize = 64;

pub(crate) fn for_each_set_ordered<T, F, G>(num_sets: usize, map: F, mut fold: G)
where
    T: Send,
    F: Fn(usize) -> T + Sync,
    G: FnMut(usize, T),
{
    let mut start = 0;
    while start < num_sets {
        let end = (start + BATCH).min(num_sets);
        let batch: Vec<T> = (start..end).into_par_iter().map(&map).collect();
        for (i, item) in batch.into_iter().enumerate() {
            fold(start + i, item);
        }
        start = end;
    }
}

/// One-sided bin factor for a real length-`n` signal.
fn one_sided_factor(k: usize, n: usize) -> f64 {
    if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
        1.0
    } else {
        2.0
    }
}

/// Per-bin variance contributions `c_k Re(X_k* Y_k)/N²`, bins `0..=N/2`.
fn cross_bins(x: &[Complex64], y: &[Complex64]) -> Vec<f64> {
    let n = x.len();
    let inv = 1.0 / (n as f64 * n as f64);
    (0..=n / 2).map(|k| one_sided_factor(k, n) * (x[k].conj() * y[k]).re * inv).collect()
}

/// Set-summed per-bin variance contributions for the spectral report.
#[derive(Debug, Clone)]
pub(crate) struct BinSums {
    pub len: usize,
    pub p1p2: Vec<f64>,
    pub c1c2: Vec<f64>,
    pub p_diff: Vec<f64>,
    pub c_diff: Vec<f64>,
    pub p_sum: Vec<f64>,
    pub c_sum: Vec<f64>,
    pub cross: Vec<f64>,
}

impl BinSums {
    fn zeros(len: usize) -> Self {
        let z = vec![0.0; len / 2 + 1];
        Self {
            len,
            p1p2: z.clone(),
            c1c2: z.clone(),
            p_diff: z.clone(),
            c_diff: z.clone(),
            p_sum: z.clone(),
            c_sum: z.clone(),
            cross: z,
        }
    }

    fn add(&mut self, o: &BinSums) {
        let pairs = [
            (&mut self.p1p2, &o.p1p2),
            (&mut self.c1c2, &o.c1c2),
            (&mut self.p_diff, &o.p_diff),
            (&mut self.c_diff, &o.c_diff),
            (&mut self.p_sum, &o.p_sum),
            (&mut self.c_sum, &o.c_sum),
            (&mut self.cross, &o.cross),
        ];
        for (a, b) in pairs {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    fn scale(&mut self, s: f64) {
        for v in [
            &mut self.p1p2,
            &mut self.c1c2,
            &mut self.p_diff,
            &mut self.c_diff,
            &mut self.p_sum,
            &mut self.c_sum,
            &mut self.cross,
        ] {
            v.iter_mut().for_each(|x| *x *= s);
        }
    }
}

/// Result of an aligned pass: for every set and every weight vector the
/// unnormalized `(Σ w·p1p2, Σ w·c1c2, Σ w·cross)`, plus optionally the
/// set-averaged bin contributions.
pub(crate) struct AlignedPass {
    pub raw_eps: Vec<Vec<[f64; 3]>>,
    pub mean_bins: Option<BinSums>,
}

/// Segment length left after aligning by `round(shift)` samples.
pub(crate) fn aligned_len(n: usize, shift: f64) -> usize {
    n - ((shift.round() as i64).unsigned_abs() as usize).min(n)
}

/// Aligns the conjugate channels to the probe by `shift` samples (positive:
/// conjugate lags): integer part by trimming, remainder by a phase ramp,
/// and accumulates weighted cross spectra.
pub(crate) fn aligned_pass(ts: &TraceSet, shift: f64, weights: &[Vec<f64>], want_bins: bool) -> AlignedPass {
    let n = ts.samples_per_set();
    let di = shift.round() as i64;
    let frac = shift - di as f64;
    let len = aligned_len(n, shift);
    let (p_start, c_start) = if di >= 0 { (0, di as usize) } else { ((-di) as usize, 0) };
    let ramp: Vec<Complex64> =
        (0..=len / 2).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 * frac / len as f64)).collect();

    let mut raw_eps = Vec::with_capacity(ts.num_sets());
    let mut sums = want_bins.then(|| BinSums::zeros(len));
    for_each_set_ordered(
        ts.num_sets(),
        |k| {
            let ch = ts.set_channels(k);
            let seg = |i: usize| {
                let start = if i < 2 { p_start } else { c_start };
                let mut x = fft::forward_real(&ch[i][start..start + len]);
                if i >= 2 && frac != 0.0 {
                    x.iter_mut().zip(&ramp).for_each(|(v, r)| *v *= r);
                }
                x
            };
            let (p1, p2, c1, c2) = (seg(0), seg(1), seg(2), seg(3));
            let ip: Vec<Complex64> = p1.iter().zip(&p2).map(|(a, b)| a + b).collect();
            let ic: Vec<Complex64> = c1.iter().zip(&c2).map(|(a, b)| a + b).collect();
            let p1p2 = cross_bins(&p1, &p2);
            let c1c2 = cross_bins(&c1, &c2);
            let cross = cross_bins(&ip, &ic);
            let eps: Vec<[f64; 3]> = weights
                .iter()
                .map(|w| {
                    let dot = |v: &[f64]| v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
                    [dot(&p1p2), dot(&c1c2), dot(&cross)]
                })
                .collect();
            let bins = want_bins.then(|| {
                let pd: Vec<Complex64> = p1.iter().zip(&p2).map(|(a, b)| a - b).collect();
                let cd: Vec<Complex64> = c1.iter().zip(&c2).map(|(a, b)| a - b).collect();
                BinSums {
                    len,
                    p_diff: cross_bins(&pd, &pd),
                    c_diff: cross_bins(&cd, &cd),
                    p_sum: cross_bins(&ip, &ip),
                    c_sum: cross_bins(&ic, &ic),
                    p1p2,
                    c1c2,
                    cross,
                }
            });
            (eps, bins)
        },
        |_, (eps, bins)| {
            raw_eps.push(eps);
            if let (Some(acc), Some(b)) = (sums.as_mut(), bins) {
                acc.add(&b);
            }
        },
    );
    if let Some(s) = sums.as_mut() {
        s.scale(1.0 / ts.num_sets() as f64);
    }
    AlignedPass { raw_eps, mean_bins: sums }
}

/// Set-averaged filtered circular covariances of (p1,p2), (c1,c2) and
/// (I_p, I_c) at lags `−max_lag..=max_lag`, corrected for the circular
/// wrap by `N/(N − |ℓ|)`.
pub(crate) fn lag_curves(ts: &TraceSet, weight: &[f64], max_lag: usize) -> [Vec<f64>; 3] {
    let n = ts.samples_per_set();
    let mut acc = [vec![0.0; 2 * max_lag + 1], vec![0.0; 2 * max_lag + 1], vec![0.0; 2 * max_lag + 1]];
    for_each_set_ordered(
        ts.num_sets(),
        |k| {
            let ch = ts.set_channels(k);
            let x: Vec<Vec<Complex64>> = ch.iter().map(|c| fft::forward_real(c)).collect();
            let ip: Vec<Complex64> = x[0].iter().zip(&x[1]).map(|(a, b)| a + b).collect();
            let ic: Vec<Complex64> = x[2].iter().zip(&x[3]).map(|(a, b)| a + b).collect();
            let lagged = |a: &[Complex64], b: &[Complex64]| -> Vec<f64> {
                let prod: Vec<Complex64> =
                    a.iter().zip(b).zip(weight).map(|((u, v), w)| u.conj() * v * *w).collect();
                let r = fft::inverse_real(prod);
                (0..=2 * max_lag)
                    .map(|i| {
                        let lag = i as i64 - max_lag as i64;
                        let idx = lag.rem_euclid(n as i64) as usize;
                        r[idx] / n as f64 * n as f64 / (n as f64 - lag.unsigned_abs() as f64)
                    })
                    .collect()
            };
            [lagged(&x[0], &x[1]), lagged(&x[2], &x[3]), lagged(&ip, &ic)]
        },
        |_, curves| {
            for (a, c) in acc.iter_mut().zip(curves) {
                a.iter_mut().zip(c).for_each(|(x, y)| *x += y);
            }
        },
    );
    let inv = 1.0 / ts.num_sets() as f64;
    for a in acc.iter_mut() {
        a.iter_mut().for_each(|x| *x *= inv);
    }
    acc
}

/// `|H|²` of `spec` on the full `n`-point grid and its one-sided half.
pub(crate) fn weights(spec: &crate::dsp::FilterSpec, n: usize, rate: f64) -> (Vec<f64>, Vec<f64>) {
    let full = spec.bin_power(n, rate);
    let half = full[..=n / 2].to_vec();
    (full, half)
}
