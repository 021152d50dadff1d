//! Four-channel photocurrent trace synthesis.
//!
//! Each set is generated in the frequency domain: the probe and conjugate
//! total photocurrents (shot noise included) are drawn from the model's 2×2
//! cross-spectral matrix through its Hermitian square root, each beam is then
//! split onto two detectors and the four AC channels are quantized.

mod detect;

pub use detect::{quantize, quantizer_step, split_and_detect};

use crate::dsp::fft;
use crate::theory::{
    mean_photon_numbers, ExcessNoiseSpec, GainProfile, SpectralModel, SqueezeParams,
    TechnicalNoiseSpec,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn config_err(msg: impl Into<String>) -> SynthError {
    SynthError::Config(msg.into())
}

/// Channel order within a set.
pub const CHANNELS: [&str; 4] = ["p1", "p2", "c1", "c2"];

/// Physical scenario. Photocurrents are in detected photoelectrons per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FwmModel {
    pub squeeze: SqueezeParams,
    pub probe_dc: f64,
    pub conj_dc: f64,
    pub profile: GainProfile,
    /// Conjugate lag relative to the probe, seconds.
    pub delay: f64,
    pub eta: f64,
    pub excess: ExcessNoiseSpec,
    pub technical: TechnicalNoiseSpec,
}

impl FwmModel {
    /// Lossless model with `probe_flux` probe photons per sample. The
    /// conjugate photocurrent follows from the theory photon-number ratio.
    pub fn new(squeeze: SqueezeParams, probe_flux: f64, profile: GainProfile) -> Self {
        let (n_p, n_c) = mean_photon_numbers(&squeeze);
        Self {
            squeeze,
            probe_dc: probe_flux,
            conj_dc: probe_flux * n_c / n_p,
            profile,
            delay: 0.0,
            eta: 1.0,
            excess: ExcessNoiseSpec::none(),
            technical: TechnicalNoiseSpec::none(),
        }
    }

    /// Two independent coherent beams (no gain). The photon-number ratio
    /// constraint does not apply.
    pub fn coherent(probe_dc: f64, conj_dc: f64) -> Self {
        Self {
            squeeze: SqueezeParams::new(0.0, Complex64::new(1.0, 0.0)).expect("valid"),
            probe_dc,
            conj_dc,
            profile: GainProfile::Lorentzian { bandwidth_hz: 1.0 },
            delay: 0.0,
            eta: 1.0,
            excess: ExcessNoiseSpec::none(),
            technical: TechnicalNoiseSpec::none(),
        }
    }

    pub fn with_delay(mut self, delay: f64) -> Self {
        self.delay = delay;
        self
    }

    /// Sets the detection efficiency; the detected photocurrents scale with it.
    pub fn with_eta(mut self, eta: f64) -> Self {
        let r = eta / self.eta;
        self.probe_dc *= r;
        self.conj_dc *= r;
        self.eta = eta;
        self
    }

    /// Places an additional loss `1 − transmission` in both beams.
    pub fn with_extra_loss(self, transmission: f64) -> Self {
        let eta = self.eta * transmission;
        self.with_eta(eta)
    }

    pub fn with_excess(mut self, excess: ExcessNoiseSpec) -> Self {
        self.excess = excess;
        self
    }

    pub fn with_technical(mut self, technical: TechnicalNoiseSpec) -> Self {
        self.technical = technical;
        self
    }

    pub fn gain(&self) -> f64 {
        self.squeeze.gain()
    }

    pub fn gain_bandwidth(&self) -> f64 {
        self.profile.bandwidth_hz()
    }

    pub fn spectral_model(&self, sample_rate: f64) -> SpectralModel {
        SpectralModel {
            gain: self.gain(),
            profile: self.profile,
            eta: self.eta,
            delay: self.delay,
            excess: self.excess.clone(),
            technical: self.technical,
            probe_dc: self.probe_dc,
            conj_dc: self.conj_dc,
            sample_rate,
        }
    }

    pub fn validate(&self, acq: &AcquisitionConfig) -> Result<(), SynthError> {
        acq.validate()?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(config_err(format!("eta must be in (0, 1], got {}", self.eta)));
        }
        if !(self.probe_dc > 0.0 && self.conj_dc > 0.0 && self.probe_dc.is_finite() && self.conj_dc.is_finite()) {
            return Err(config_err("probe and conjugate photocurrents must be positive"));
        }
        if self.squeeze.s() > 0.0 {
            let (n_p, n_c) = mean_photon_numbers(&self.squeeze);
            let ratio = self.probe_dc / self.conj_dc;
            if (ratio / (n_p / n_c) - 1.0).abs() > 1e-9 {
                return Err(config_err("probe/conjugate photocurrent ratio must equal n_probe/n_conj"));
            }
        }
        let bw = self.gain_bandwidth();
        if !(bw > 0.0) {
            return Err(config_err("gain_bandwidth must be positive"));
        }
        if self.squeeze.s() > 0.0 && acq.sample_rate <= 10.0 * bw {
            return Err(config_err(format!(
                "sample_rate {} Hz must exceed 10 x gain_bandwidth ({bw} Hz)",
                acq.sample_rate
            )));
        }
        let duration = acq.samples_per_set as f64 / acq.sample_rate;
        if !(self.delay.abs() < 0.1 * duration) {
            return Err(config_err(format!(
                "delay {} s must be below 10% of the set duration",
                self.delay
            )));
        }
        if self.excess.points.iter().any(|&(f, l)| !(f >= 0.0 && l >= 0.0)) {
            return Err(config_err("excess noise points must be non-negative"));
        }
        if !(self.technical.level >= 0.0 && self.technical.corner_hz > 0.0) {
            return Err(config_err("technical noise level must be >= 0 and corner > 0"));
        }
        Ok(())
    }

    /// Predicted standard deviation of each AC channel `(p1/p2, c1/c2)`.
    pub fn channel_sigma(&self, sample_rate: f64) -> (f64, f64) {
        let m = self.spectral_model(sample_rate);
        let n = 20_000;
        let df = m.nyquist() / n as f64;
        let (mut vp, mut vc) = (0.0, 0.0);
        for i in 1..=n {
            let pt = m.at(i as f64 * df);
            let w = if i == n { 0.5 } else { 1.0 };
            vp += w * pt.s_pp;
            vc += w * pt.s_cc;
        }
        (
            ((vp * df + self.probe_dc) / 4.0).sqrt(),
            ((vc * df + self.conj_dc) / 4.0).sqrt(),
        )
    }

    /// ADC range of eight standard deviations of the larger channel.
    pub fn suggested_full_scale(&self, sample_rate: f64) -> f64 {
        let (a, b) = self.channel_sigma(sample_rate);
        8.0 * a.max(b)
    }

    /// Stable identifier of the model parameters.
    pub fn fingerprint(&self) -> String {
        format!("model:{:08x}", crc32fast::hash(format!("{self:?}").as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionConfig {
    pub sample_rate: f64,
    pub samples_per_set: usize,
    pub num_sets: usize,
    pub adc_bits: u16,
    /// Quantizer range in photoelectrons per sample; `0` selects
    /// [`FwmModel::suggested_full_scale`] at synthesis time.
    pub full_scale: f64,
    pub rng_seed: u64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            sample_rate: 1e9,
            samples_per_set: 10_000,
            num_sets: 500,
            adc_bits: 9,
            full_scale: 0.0,
            rng_seed: 1,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(config_err("sample_rate must be positive"));
        }
        if self.samples_per_set < 16 {
            return Err(config_err("samples_per_set must be at least 16"));
        }
        if self.num_sets == 0 {
            return Err(config_err("num_sets must be at least 1"));
        }
        if !(1..=16).contains(&self.adc_bits) {
            return Err(config_err(format!("adc_bits must be in 1..=16, got {}", self.adc_bits)));
        }
        if !(self.full_scale >= 0.0 && self.full_scale.is_finite()) {
            return Err(config_err("full_scale must be >= 0 (0 = automatic)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Model(String),
    External,
}

/// A channel that clipped on more than 0.1% of its samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipWarning {
    pub set: usize,
    pub channel: usize,
    pub fraction: f64,
}

/// Quantized AC traces, organized as independent sets of four channels
/// (p1, p2, c1, c2), plus the DC photocurrent of each detector.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub sets: Vec<[Vec<i16>; 4]>,
    pub dc_means: [f64; 4],
    pub acquisition: AcquisitionConfig,
    pub provenance: Provenance,
    pub clip_warnings: Vec<ClipWarning>,
}

impl TraceSet {
    pub fn num_sets(&self) -> usize {
        self.sets.len()
    }

    pub fn samples_per_set(&self) -> usize {
        self.acquisition.samples_per_set
    }

    pub fn step(&self) -> f64 {
        quantizer_step(self.acquisition.adc_bits, self.acquisition.full_scale)
    }

    /// Channel `ch` of set `set` in photoelectrons per sample.
    pub fn channel(&self, set: usize, ch: usize) -> Vec<f64> {
        let step = self.step();
        self.sets[set][ch].iter().map(|&c| c as f64 * step).collect()
    }

    pub fn set_channels(&self, set: usize) -> [Vec<f64>; 4] {
        std::array::from_fn(|ch| self.channel(set, ch))
    }

    /// Keeps the first `n` sets.
    pub fn truncated(&self, n: usize) -> TraceSet {
        let mut out = self.clone();
        out.sets.truncate(n);
        out.acquisition.num_sets = out.sets.len();
        out.clip_warnings.retain(|w| w.set < n);
        out
    }

    /// Checks internal consistency (channel lengths, DC means, set count).
    pub fn validate(&self) -> Result<(), SynthError> {
        self.acquisition.validate()?;
        if self.acquisition.full_scale <= 0.0 {
            return Err(config_err("full_scale must be resolved to a positive value"));
        }
        if self.sets.len() != self.acquisition.num_sets {
            return Err(config_err("set count does not match acquisition"));
        }
        if self.dc_means.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(config_err("dc_means must be positive"));
        }
        let n = self.acquisition.samples_per_set;
        if self.sets.iter().any(|s| s.iter().any(|c| c.len() != n)) {
            return Err(config_err("all channels must hold samples_per_set samples"));
        }
        Ok(())
    }
}

/// Synthesizes `acq.num_sets` independent sets. Set `k` uses the ChaCha
/// stream `k` under key `acq.rng_seed`, so output does not depend on thread
/// scheduling.
pub fn synthesize(model: &FwmModel, acq: &AcquisitionConfig) -> Result<TraceSet, SynthError> {
    model.validate(acq)?;
    let mut acq = *acq;
    if acq.full_scale == 0.0 {
        acq.full_scale = model.suggested_full_scale(acq.sample_rate);
    }
    let colorer = Colorer::new(model, &acq);
    let n = acq.samples_per_set;
    let limit = (n as f64 * 1e-3) as usize;

    let results: Vec<([Vec<i16>; 4], [usize; 4])> = (0..acq.num_sets)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(acq.rng_seed);
            rng.set_stream(k as u64);
            let (ip, ic) = colorer.draw(&mut rng);
            let (p1, p2) = split_and_detect(&ip[..n], model.probe_dc, &mut rng);
            let (c1, c2) = split_and_detect(&ic[..n], model.conj_dc, &mut rng);
            let mut clipped = [0; 4];
            let chans = [p1, p2, c1, c2];
            let codes = std::array::from_fn(|i| {
                let (c, nclip) = quantize(&chans[i], acq.adc_bits, acq.full_scale);
                clipped[i] = nclip;
                c
            });
            (codes, clipped)
        })
        .collect();

    let mut sets = Vec::with_capacity(results.len());
    let mut clip_warnings = Vec::new();
    for (k, (codes, clipped)) in results.into_iter().enumerate() {
        for (ch, &c) in clipped.iter().enumerate() {
            if c > limit {
                clip_warnings.push(ClipWarning { set: k, channel: ch, fraction: c as f64 / n as f64 });
            }
        }
        sets.push(codes);
    }
    let (hp, hc) = (model.probe_dc / 2.0, model.conj_dc / 2.0);
    Ok(TraceSet {
        sets,
        dc_means: [hp, hp, hc, hc],
        acquisition: acq,
        provenance: Provenance::Model(model.fingerprint()),
        clip_warnings,
    })
}

/// Per-bin Hermitian square roots of the total-photocurrent CSD on a grid
/// 25% longer than a set, so the circular delay never wraps into the kept
/// samples.
struct Colorer {
    len: usize,
    /// `[[l00, l01], [l10, l11]]` for bins `1..len/2` (Nyquist bin excluded).
    roots: Vec<[[Complex64; 2]; 2]>,
}

impl Colorer {
    fn new(model: &FwmModel, acq: &AcquisitionConfig) -> Self {
        let n = acq.samples_per_set;
        let len = n + n.div_ceil(4);
        let m = model.spectral_model(acq.sample_rate);
        let scale = (acq.sample_rate * len as f64 / 2.0).sqrt();
        let last = if len.is_multiple_of(2) { len / 2 - 1 } else { len / 2 };
        let roots = (1..=last)
            .map(|k| {
                let pt = m.at(k as f64 * acq.sample_rate / len as f64);
                // covariance of (P, C): off-diagonal E[P·C*] = conj(s_pc)
                let (a, d, b) = (pt.s_pp, pt.s_cc, pt.s_pc.conj());
                let s = (a * d - b.norm_sqr()).max(0.0).sqrt();
                let t = (a + d + 2.0 * s).sqrt();
                let k = scale / t;
                [
                    [Complex64::new((a + s) * k, 0.0), b * k],
                    [b.conj() * k, Complex64::new((d + s) * k, 0.0)],
                ]
            })
            .collect();
        Self { len, roots }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let zero = Complex64::new(0.0, 0.0);
        let mut p = vec![zero; self.len];
        let mut c = vec![zero; self.len];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut z = || {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * h, im * h)
        };
        for (i, r) in self.roots.iter().enumerate() {
            let k = i + 1;
            let (z1, z2) = (z(), z());
            let xp = r[0][0] * z1 + r[0][1] * z2;
            let xc = r[1][0] * z1 + r[1][1] * z2;
            p[k] = xp;
            c[k] = xc;
            p[self.len - k] = xp.conj();
            c[self.len - k] = xc.conj();
        }
        (fft::inverse_real(p), fft::inverse_real(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{psd_estimate, Window};
    use crate::theory::Beam;

    fn g10_model() -> FwmModel {
        let p = SqueezeParams::from_gain(10.0, 1e3).unwrap();
        FwmModel::new(p, 1e5, GainProfile::Lorentzian { bandwidth_hz: 20e6 })
            .with_eta(0.8)
            .with_delay(8e-9)
    }

    fn small_acq(sets: usize) -> AcquisitionConfig {
        AcquisitionConfig { samples_per_set: 4000, num_sets: sets, ..Default::default() }
    }

    #[test]
    fn ratio_is_derived_from_theory() {
        let m = g10_model();
        let (n_p, n_c) = mean_photon_numbers(&m.squeeze);
        assert!((m.probe_dc / m.conj_dc / (n_p / n_c) - 1.0).abs() < 1e-12);
        assert!((m.probe_dc - 0.8e5).abs() < 1e-9);
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let m = g10_model();
        let bad_bits = AcquisitionConfig { adc_bits: 0, ..small_acq(2) };
        assert!(matches!(synthesize(&m, &bad_bits), Err(SynthError::Config(msg)) if msg.contains("adc_bits")));
        let slow = AcquisitionConfig { sample_rate: 100e6, ..small_acq(2) };
        assert!(m.validate(&slow).is_err());
        let long_delay = m.clone().with_delay(500e-9);
        assert!(long_delay.validate(&small_acq(2)).is_err());
        let mut skewed = m.clone();
        skewed.conj_dc *= 1.01;
        assert!(skewed.validate(&small_acq(2)).is_err());
    }

    #[test]
    fn deterministic_across_thread_pools() {
        let m = g10_model();
        let acq = small_acq(6);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| synthesize(&m, &acq).unwrap());
        let b = four.install(|| synthesize(&m, &acq).unwrap());
        assert_eq!(a, b);
        let other = synthesize(&m, &AcquisitionConfig { rng_seed: 2, ..acq }).unwrap();
        assert_ne!(a.sets, other.sets);
        assert_ne!(a.sets[0], a.sets[1]);
    }

    #[test]
    fn trace_set_shape_and_dc() {
        let ts = synthesize(&g10_model(), &small_acq(3)).unwrap();
        ts.validate().unwrap();
        assert_eq!(ts.num_sets(), 3);
        assert_eq!(ts.dc_means[0], ts.dc_means[1]);
        assert_eq!(ts.dc_means[2], ts.dc_means[3]);
        assert!(ts.clip_warnings.is_empty());
        assert!(ts.acquisition.full_scale > 0.0);
    }

    #[test]
    fn per_set_means_are_stationary() {
        let m = g10_model();
        let acq = small_acq(20);
        let ts = synthesize(&m, &acq).unwrap();
        let sm = m.spectral_model(acq.sample_rate);
        let n = acq.samples_per_set as f64;
        // low-frequency PSD of each detector sets the variance of its mean
        let s0 = sm.at(1e3);
        let se_p = ((s0.s_pp / 4.0 + sm.sql_probe() / 4.0) * acq.sample_rate / (2.0 * n)).sqrt();
        let se_c = ((s0.s_cc / 4.0 + sm.sql_conj() / 4.0) * acq.sample_rate / (2.0 * n)).sqrt();
        for k in 0..ts.num_sets() {
            for ch in 0..4 {
                let x = ts.channel(k, ch);
                let mean = x.iter().sum::<f64>() / n;
                let se = if ch < 2 { se_p } else { se_c };
                assert!(mean.abs() < 5.0 * se, "set {k} ch {ch}: {mean} vs {se}");
            }
        }
    }

    #[test]
    fn spectra_follow_the_model() {
        let m = g10_model().with_excess(ExcessNoiseSpec::on(Beam::Conjugate, vec![(10e6, 0.0), (30e6, 3.0)]));
        let acq = small_acq(200);
        let ts = synthesize(&m, &acq).unwrap();
        let sm = m.spectral_model(acq.sample_rate);
        let sum = |a: usize, b: usize| -> Vec<Vec<f64>> {
            (0..ts.num_sets())
                .map(|k| {
                    let (x, y) = (ts.channel(k, a), ts.channel(k, b));
                    x.iter().zip(&y).map(|(u, v)| u + v).collect()
                })
                .collect()
        };
        let ip = psd_estimate(&sum(0, 1), acq.sample_rate, Window::Rectangular).unwrap();
        let ic = psd_estimate(&sum(2, 3), acq.sample_rate, Window::Rectangular).unwrap();
        // 16-bin blocks (4 MHz) between 0.5 and 40 MHz
        let df = ip.resolution();
        let first = (0.5e6 / df).ceil() as usize;
        let last = (40e6 / df) as usize;
        let mut k = first;
        while k + 16 <= last {
            let f = |psd: &crate::dsp::Psd| psd.power[k..k + 16].iter().sum::<f64>();
            let mp: f64 = (k..k + 16).map(|i| sm.at(ip.frequencies[i]).s_pp).sum();
            let mc: f64 = (k..k + 16).map(|i| sm.at(ic.frequencies[i]).s_cc).sum();
            assert!((f(&ip) / mp - 1.0).abs() < 0.05, "probe at bin {k}");
            assert!((f(&ic) / mc - 1.0).abs() < 0.05, "conj at bin {k}");
            k += 16;
        }
    }
}
