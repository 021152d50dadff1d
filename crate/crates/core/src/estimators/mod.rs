//! Measured quantities from a [`TraceSet`]: g² curves by split detection,
//! per-set violation factors, SQL-normalized spectra and both forms of the
//! classical Cauchy-Schwarz test.
//!
//! The fluctuation parts are normally ordered by construction: the auto terms
//! use the covariance of the two detectors behind one splitter, so the shot
//! noise of each beam does not enter.

mod pass;

use crate::dsp::{self, DspError, FilterSpec, Psd, Window};
use crate::synth::TraceSet;
use pass::{aligned_pass, lag_curves, weights, BinSums};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("DC means missing or non-positive")]
    DcMissing,
    #[error("need at least {needed} sets, got {got}")]
    TooFewSets { needed: usize, got: usize },
    #[error("all {0} sets are degenerate (eps_ab <= 0)")]
    AllDegenerate(usize),
    #[error("band error: {0}")]
    Band(String),
    #[error("invalid trace set: {0}")]
    Invalid(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

/// Minimum number of sets for per-set statistics.
pub const MIN_SETS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    /// Zero-phase bandpass applied to all four channels.
    pub filter: FilterSpec,
    /// Half-width of the reported g² curves, seconds.
    pub tau_max: f64,
    /// Conjugate delay to compensate; estimated from the g²_ab peak if `None`.
    pub delay: Option<f64>,
    /// Integration band of the spectral test; the whole grid if `None`.
    pub band: Option<(f64, f64)>,
    /// Width of the moving average used to locate the squeezing minimum and
    /// bandwidth, Hz.
    pub smoothing_hz: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            filter: FilterSpec::with_cutoff(40e6),
            tau_max: 100e-9,
            delay: None,
            band: None,
            smoothing_hz: 1e6,
        }
    }
}

fn check_trace_set(ts: &TraceSet, needed: usize) -> Result<(), EstimatorError> {
    if ts.dc_means.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(EstimatorError::DcMissing);
    }
    if ts.num_sets() < needed {
        return Err(EstimatorError::TooFewSets { needed, got: ts.num_sets() });
    }
    ts.validate().map_err(|e| EstimatorError::Invalid(e.to_string()))
}

fn beam_dc(ts: &TraceSet) -> (f64, f64) {
    (ts.dc_means[0] + ts.dc_means[1], ts.dc_means[2] + ts.dc_means[3])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayEstimate {
    /// Seconds, positive when the conjugate lags.
    pub seconds: f64,
    /// False when no significant g²_ab peak was found and zero was assumed.
    pub from_peak: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct G2Curves {
    /// Lag of the conjugate relative to the probe, seconds.
    pub tau: Vec<f64>,
    pub g2_ab: Vec<f64>,
    pub g2_aa: Vec<f64>,
    pub g2_bb: Vec<f64>,
    pub delay: DelayEstimate,
}

/// Set-averaged filtered g² curves over `|τ| ≤ tau_max`; the cross curve
/// uses the beam totals, the autos use the split halves.
pub fn g2_curves(ts: &TraceSet, cfg: &AnalysisConfig) -> Result<G2Curves, EstimatorError> {
    check_trace_set(ts, 2)?;
    let rate = ts.acquisition.sample_rate;
    let n = ts.samples_per_set();
    cfg.filter.validate(rate)?;
    let max_lag = ((cfg.tau_max * rate).round() as usize).clamp(1, n / 10);
    let (w, _) = weights(&cfg.filter, n, rate);
    let [aa, bb, ab] = lag_curves(ts, &w, max_lag);
    let d = ts.dc_means;
    let (dp, dc) = beam_dc(ts);
    let delay = match cfg.delay {
        Some(s) => DelayEstimate { seconds: s, from_peak: false },
        None => match dsp::delay::curve_peak(&ab, max_lag) {
            Ok((lag, _)) => DelayEstimate { seconds: lag / rate, from_peak: true },
            Err(_) => DelayEstimate { seconds: 0.0, from_peak: false },
        },
    };
    Ok(G2Curves {
        tau: (0..=2 * max_lag).map(|i| (i as f64 - max_lag as f64) / rate).collect(),
        g2_ab: ab.iter().map(|r| 1.0 + r / (dp * dc)).collect(),
        g2_aa: aa.iter().map(|r| 1.0 + r / (d[0] * d[1])).collect(),
        g2_bb: bb.iter().map(|r| 1.0 + r / (d[2] * d[3])).collect(),
        delay,
    })
}

/// Conjugate delay from the peak of the filtered g²_ab curve.
pub fn estimate_delay(ts: &TraceSet, cfg: &AnalysisConfig) -> Result<DelayEstimate, EstimatorError> {
    let cfg = AnalysisConfig { delay: None, ..*cfg };
    Ok(g2_curves(ts, &cfg)?.delay)
}

fn resolve_delay(ts: &TraceSet, cfg: &AnalysisConfig) -> Result<f64, EstimatorError> {
    match cfg.delay {
        Some(d) => Ok(d),
        None => Ok(estimate_delay(ts, cfg)?.seconds),
    }
}

/// Per-set ε values and violation statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationStats {
    /// `(ε_aa, ε_bb, ε_ab)` for every set, degenerate ones included.
    pub eps_per_set: Vec<[f64; 3]>,
    /// V of the non-degenerate sets, in set order.
    pub v_per_set: Vec<f64>,
    /// Indices of sets with `ε_ab ≤ 0`, excluded from the statistics.
    pub degenerate: Vec<usize>,
    pub v_mean: f64,
    /// Standard error of `v_mean`.
    pub v_sigma: f64,
    /// Standard deviation of the per-set values.
    pub v_spread: f64,
    /// V from the set-averaged ε values.
    pub v_pooled: f64,
    pub eps_mean: [f64; 3],
    /// `|1 − v_mean| / v_sigma`
    pub sigma_count: f64,
}

impl ViolationStats {
    fn from_eps(eps_per_set: Vec<[f64; 3]>) -> Result<Self, EstimatorError> {
        let mut v_per_set = Vec::new();
        let mut degenerate = Vec::new();
        for (k, e) in eps_per_set.iter().enumerate() {
            if e[2] > 0.0 {
                v_per_set.push((e[0] + e[1]) / (2.0 * e[2]));
            } else {
                degenerate.push(k);
            }
        }
        if v_per_set.len() < 2 {
            return Err(EstimatorError::AllDegenerate(eps_per_set.len()));
        }
        let m = v_per_set.len() as f64;
        let v_mean = v_per_set.iter().sum::<f64>() / m;
        let v_spread = (v_per_set.iter().map(|v| (v - v_mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
        let v_sigma = v_spread / m.sqrt();
        let k = eps_per_set.len() as f64;
        let eps_mean: [f64; 3] =
            std::array::from_fn(|i| eps_per_set.iter().map(|e| e[i]).sum::<f64>() / k);
        Ok(Self {
            v_pooled: (eps_mean[0] + eps_mean[1]) / (2.0 * eps_mean[2]),
            eps_mean,
            sigma_count: (1.0 - v_mean).abs() / v_sigma,
            eps_per_set,
            v_per_set,
            degenerate,
            v_mean,
            v_sigma,
            v_spread,
        })
    }

    /// Time-domain verdict: the classical inequality fails when `v_mean < 1`.
    pub fn violated(&self) -> bool {
        self.v_mean < 1.0
    }
}

fn eps_from_raw(ts: &TraceSet, raw: &[f64; 3]) -> [f64; 3] {
    let d = ts.dc_means;
    let (dp, dc) = beam_dc(ts);
    [raw[0] / (d[0] * d[1]), raw[1] / (d[2] * d[3]), raw[2] / (dp * dc)]
}

fn violation_for_filters(
    ts: &TraceSet,
    filters: &[FilterSpec],
    delay: f64,
) -> Result<Vec<ViolationStats>, EstimatorError> {
    let rate = ts.acquisition.sample_rate;
    let shift = delay * rate;
    let len = pass::aligned_len(ts.samples_per_set(), shift);
    if !(shift.abs() < 0.1 * ts.samples_per_set() as f64) {
        return Err(DspError::DelayTooLarge { delay_samples: shift, len: ts.samples_per_set() }.into());
    }
    let mut ws = Vec::with_capacity(filters.len());
    for f in filters {
        f.validate(rate)?;
        ws.push(weights(f, len, rate).1);
    }
    let result = aligned_pass(ts, shift, &ws, false);
    (0..filters.len())
        .map(|j| {
            let eps = result.raw_eps.iter().map(|e| eps_from_raw(ts, &e[j])).collect();
            ViolationStats::from_eps(eps)
        })
        .collect()
}

/// Per-set V with `ε_ab` taken at the compensated delay.
pub fn violation_factor(ts: &TraceSet, cfg: &AnalysisConfig) -> Result<ViolationStats, EstimatorError> {
    check_trace_set(ts, MIN_SETS)?;
    let delay = resolve_delay(ts, cfg)?;
    Ok(violation_for_filters(ts, &[cfg.filter], delay)?.remove(0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub f_hi: f64,
    pub stats: ViolationStats,
}

/// V as a function of the upper filter edge, keeping order and lower edge
/// of `cfg.filter`; the delay is resolved once with `cfg.filter`.
pub fn cutoff_sweep(ts: &TraceSet, f_hi_list: &[f64], cfg: &AnalysisConfig) -> Result<Vec<SweepPoint>, EstimatorError> {
    check_trace_set(ts, MIN_SETS)?;
    if f_hi_list.is_empty() {
        return Err(EstimatorError::Band("empty cutoff list".into()));
    }
    let delay = resolve_delay(ts, cfg)?;
    let filters: Vec<FilterSpec> =
        f_hi_list.iter().map(|&f_hi| FilterSpec { f_hi, ..cfg.filter }).collect();
    let stats = violation_for_filters(ts, &filters, delay)?;
    Ok(f_hi_list.iter().zip(stats).map(|(&f_hi, stats)| SweepPoint { f_hi, stats }).collect())
}

/// Shot-noise references: `PSD(p1 − p2)`, `PSD(c1 − c2)` and their sum.
pub fn sql_spectra(ts: &TraceSet) -> Result<(Psd, Psd, Psd), EstimatorError> {
    check_trace_set(ts, 2)?;
    let rate = ts.acquisition.sample_rate;
    let diff = |a: usize, b: usize| -> Vec<Vec<f64>> {
        (0..ts.num_sets())
            .map(|k| {
                let (x, y) = (ts.channel(k, a), ts.channel(k, b));
                x.iter().zip(&y).map(|(u, v)| u - v).collect()
            })
            .collect()
    };
    let p = dsp::psd_estimate(&diff(0, 1), rate, Window::Rectangular)?;
    let c = dsp::psd_estimate(&diff(2, 3), rate, Window::Rectangular)?;
    let sum = p.add(&c);
    Ok((p, c, sum))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectraReport {
    pub frequencies: Vec<f64>,
    pub s_p_norm: Vec<f64>,
    pub s_c_norm: Vec<f64>,
    pub s_diff_norm: Vec<f64>,
    pub sql_p: Psd,
    pub sql_c: Psd,
    pub sql_diff: Psd,
    /// Band-averaged (filter-weighted) SQL levels used for normalization.
    pub sql_p_level: f64,
    pub sql_c_level: f64,
    /// `|H|²` of the analysis filter on `frequencies`.
    pub weights: Vec<f64>,
    pub compensated: bool,
    pub delay: f64,
    /// Noise reduction of the smoothed difference spectrum at its minimum, dB
    /// (positive for squeezing).
    pub squeezing_db_max: f64,
    pub squeezing_min_frequency: f64,
    /// Upper edge of the squeezed region around the minimum, Hz.
    pub squeezing_bandwidth: f64,
    pub eq6_lhs: f64,
    pub eq6_rhs: f64,
    /// The classical spectral inequality `lhs ≥ rhs` holds.
    pub eq6_satisfiable: bool,
}

impl SpectraReport {
    pub fn resolution(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }

    /// Moving average of `s_diff_norm` over `width_hz`.
    pub fn smoothed_diff(&self, width_hz: f64) -> Vec<f64> {
        moving_average(&self.s_diff_norm, (width_hz / self.resolution()).round().max(1.0) as usize)
    }
}

fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    let mut prefix = vec![0.0; x.len() + 1];
    for (i, v) in x.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// SQL-normalized probe, conjugate and difference spectra. With `compensate`
/// the conjugate is advanced by the delay before differencing.
pub fn normalized_spectra(ts: &TraceSet, cfg: &AnalysisConfig, compensate: bool) -> Result<SpectraReport, EstimatorError> {
    check_trace_set(ts, 2)?;
    let rate = ts.acquisition.sample_rate;
    cfg.filter.validate(rate)?;
    let delay = if compensate { resolve_delay(ts, cfg)? } else { 0.0 };
    let shift = delay * rate;
    if !(shift.abs() < 0.1 * ts.samples_per_set() as f64) {
        return Err(DspError::DelayTooLarge { delay_samples: shift, len: ts.samples_per_set() }.into());
    }
    let len = pass::aligned_len(ts.samples_per_set(), shift);
    let w = weights(&cfg.filter, len, rate).1;
    let bins = aligned_pass(ts, shift, &[], true).mean_bins.expect("requested");
    build_report(ts, cfg, bins, w, compensate, delay)
}

fn build_report(
    ts: &TraceSet,
    cfg: &AnalysisConfig,
    b: BinSums,
    w: Vec<f64>,
    compensated: bool,
    delay: f64,
) -> Result<SpectraReport, EstimatorError> {
    let df = ts.acquisition.sample_rate / b.len as f64;
    let to_psd = |v: &[f64]| Psd {
        frequencies: (0..v.len()).map(|k| k as f64 * df).collect(),
        power: v.iter().map(|x| x / df).collect(),
        num_averages: ts.num_sets(),
        window: Window::Rectangular,
    };
    let sql_p = to_psd(&b.p_diff);
    let sql_c = to_psd(&b.c_diff);
    let sql_diff = sql_p.add(&sql_c);
    let wsum: f64 = w.iter().sum();
    let level = |psd: &Psd| psd.power.iter().zip(&w).map(|(p, q)| p * q).sum::<f64>() / wsum;
    let (lp, lc) = (level(&sql_p), level(&sql_c));

    let s_p_norm: Vec<f64> = b.p_sum.iter().map(|v| v / df / lp).collect();
    let s_c_norm: Vec<f64> = b.c_sum.iter().map(|v| v / df / lc).collect();
    let s_diff_norm: Vec<f64> = (0..b.p_sum.len())
        .map(|k| (b.p_sum[k] + b.c_sum[k] - 2.0 * b.cross[k]) / df / (lp + lc))
        .collect();

    let mut report = SpectraReport {
        frequencies: sql_p.frequencies.clone(),
        s_p_norm,
        s_c_norm,
        s_diff_norm,
        sql_p,
        sql_c,
        sql_diff,
        sql_p_level: lp,
        sql_c_level: lc,
        weights: w,
        compensated,
        delay,
        squeezing_db_max: 0.0,
        squeezing_min_frequency: 0.0,
        squeezing_bandwidth: 0.0,
        eq6_lhs: 0.0,
        eq6_rhs: 0.0,
        eq6_satisfiable: true,
    };
    let (db, fmin, bw) = squeezing_metrics(&report, 2.0 * cfg.filter.f_lo, cfg.filter.f_hi, cfg.smoothing_hz);
    report.squeezing_db_max = db;
    report.squeezing_min_frequency = fmin;
    report.squeezing_bandwidth = bw;
    let band = cfg.band.unwrap_or((0.0, *report.frequencies.last().expect("non-empty grid")));
    let t = csi_frequency_test(&report, ts, band)?;
    report.eq6_lhs = t.lhs;
    report.eq6_rhs = t.rhs;
    report.eq6_satisfiable = t.classical;
    Ok(report)
}

/// Minimum of the smoothed difference spectrum over `[f_start, f_stop]`
/// and the upper edge of the contiguous region below SQL containing it.
fn squeezing_metrics(r: &SpectraReport, f_start: f64, f_stop: f64, smoothing_hz: f64) -> (f64, f64, f64) {
    let s = r.smoothed_diff(smoothing_hz);
    let df = r.resolution();
    let lo = (f_start / df).ceil() as usize;
    let hi = ((f_stop / df).floor() as usize).min(s.len() - 1);
    if lo > hi {
        return (0.0, 0.0, 0.0);
    }
    let (imin, vmin) = (lo..=hi).map(|i| (i, s[i])).fold((lo, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let db = -10.0 * vmin.log10();
    if vmin >= 1.0 {
        return (db, r.frequencies[imin], 0.0);
    }
    let mut i = imin;
    while i < hi && s[i + 1] < 1.0 {
        i += 1;
    }
    let edge = if i == hi {
        r.frequencies[hi]
    } else {
        // linear crossing between bins i and i+1
        let t = (1.0 - s[i]) / (s[i + 1] - s[i]);
        r.frequencies[i] + t * df
    };
    (db, r.frequencies[imin], edge)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCsiTest {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs ≥ rhs`: consistent with classical light.
    pub classical: bool,
}

/// Frequency-domain Cauchy-Schwarz test over `band`, with the analysis
/// filter's `|H|²` as integration weight (trapezoid rule on the PSD grid).
/// Integrals are in Hz.
pub fn csi_frequency_test(report: &SpectraReport, ts: &TraceSet, band: (f64, f64)) -> Result<SpectralCsiTest, EstimatorError> {
    let (dp, dc) = beam_dc(ts);
    if !(dp > 0.0 && dc > 0.0) {
        return Err(EstimatorError::DcMissing);
    }
    let f = &report.frequencies;
    let fmax = *f.last().unwrap_or(&0.0);
    let (a, b) = band;
    if !(a >= 0.0 && a < b && b <= fmax * (1.0 + 1e-12)) {
        return Err(EstimatorError::Band(format!("band [{a}, {b}] Hz outside data range [0, {fmax}] Hz")));
    }
    let df = report.resolution();
    let idx: Vec<usize> = (0..f.len()).filter(|&k| f[k] >= a && f[k] <= b).collect();
    if idx.len() < 2 {
        return Err(EstimatorError::Band(format!("band [{a}, {b}] Hz holds fewer than two bins")));
    }
    let trap = |g: &dyn Fn(usize) -> f64| {
        let mut acc = 0.0;
        for (j, &k) in idx.iter().enumerate() {
            let end = j == 0 || j == idx.len() - 1;
            acc += g(k) * report.weights[k] * if end { 0.5 } else { 1.0 };
        }
        acc * df
    };
    let lhs = trap(&|k| report.s_diff_norm[k] - 1.0);
    let imbalance = (dp - dc) / (dp + dc);
    let rhs = imbalance * trap(&|k| (report.s_p_norm[k] - 1.0) - (report.s_c_norm[k] - 1.0));
    Ok(SpectralCsiTest { lhs, rhs, classical: lhs >= rhs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub curves: G2Curves,
    pub stats: ViolationStats,
    pub eps_aa: f64,
    pub eps_bb: f64,
    pub eps_ab_peak: f64,
    pub v_mean: f64,
    pub v_sigma: f64,
    pub sigma_count: f64,
    pub violated: bool,
}

/// g² curves and violation statistics, sharing one delay estimate.
pub fn correlation_report(ts: &TraceSet, cfg: &AnalysisConfig) -> Result<CorrelationReport, EstimatorError> {
    check_trace_set(ts, MIN_SETS)?;
    let curves = g2_curves(ts, cfg)?;
    let stats = violation_for_filters(ts, &[cfg.filter], curves.delay.seconds)?.remove(0);
    Ok(CorrelationReport {
        eps_aa: stats.eps_mean[0],
        eps_bb: stats.eps_mean[1],
        eps_ab_peak: stats.eps_mean[2],
        v_mean: stats.v_mean,
        v_sigma: stats.v_sigma,
        sigma_count: stats.sigma_count,
        violated: stats.violated(),
        curves,
        stats,
    })
}
