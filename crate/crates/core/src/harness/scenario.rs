//! Scenarios: named presets and the sectioned TOML configuration.

use super::HarnessError;
use crate::dsp::FilterSpec;
use crate::estimators::AnalysisConfig;
use crate::synth::{AcquisitionConfig, FwmModel};
use crate::theory::{Beam, ExcessNoiseSpec, GainProfile, SqueezeParams, TechnicalNoiseSpec};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub model: FwmModel,
    pub acquisition: AcquisitionConfig,
    pub analysis: AnalysisConfig,
    /// Upper filter edges for the cutoff sweep, Hz.
    pub cutoffs: Vec<f64>,
}

pub const PRESET_NAMES: [&str; 4] = ["G2", "G5", "G8", "G10"];

/// Probe seed amplitude |α| of the presets (10⁶ seed photons per mode).
pub const PRESET_SEED_AMPLITUDE: f64 = 1e3;
/// Probe photons per sample before detection loss.
pub const PRESET_PROBE_FLUX: f64 = 1e6;

/// Conjugate excess noise of the G5/G8/G10 presets, (MHz, SQL units).
const EXCESS_HIGH_GAIN: [(f64, f64); 4] = [(2.0, 0.0), (8.0, 0.25), (15.0, 2.0), (40.0, 2.25)];
/// Conjugate excess noise of the G2 preset, (MHz, SQL units).
const EXCESS_G2: [(f64, f64); 6] =
    [(3.0, 0.0), (3.5, 1.95), (6.5, 1.6), (7.5, 2.5), (20.0, 1.08), (40.0, 0.48)];

pub fn default_cutoffs() -> Vec<f64> {
    let mut v: Vec<f64> = (2..=30).map(|i| i as f64 * 0.5e6).collect();
    v.extend([20e6, 25e6, 30e6, 35e6, 40e6]);
    v
}

fn mhz_points(points: &[(f64, f64)], scale: f64) -> Vec<(f64, f64)> {
    points.iter().map(|&(f, l)| (f * 1e6, l * scale)).collect()
}

/// Calibrated gain scenarios. Returns `None` for unknown names.
pub fn preset(name: &str) -> Option<Scenario> {
    // (gain, bandwidth MHz, eta, delay ns, excess table, excess scale)
    let (gain, bw_mhz, eta, delay_ns, table, scale): (f64, f64, f64, f64, &[(f64, f64)], f64) =
        match name.to_ascii_uppercase().as_str() {
            "G2" => (2.0, 21.5, 0.95, 13.0, &EXCESS_G2, 1.0),
            "G5" => (5.0, 23.0, 0.8, 11.0, &EXCESS_HIGH_GAIN, 0.7),
            "G8" => (8.0, 23.0, 0.8, 9.0, &EXCESS_HIGH_GAIN, 1.0),
            "G10" => (10.0, 23.0, 0.8, 8.0, &EXCESS_HIGH_GAIN, 1.0),
            _ => return None,
        };
    let squeeze = SqueezeParams::from_gain(gain, PRESET_SEED_AMPLITUDE).expect("valid preset");
    let model = FwmModel::new(squeeze, PRESET_PROBE_FLUX, GainProfile::Lorentzian { bandwidth_hz: bw_mhz * 1e6 })
        .with_eta(eta)
        .with_delay(delay_ns / 1e9)
        .with_excess(ExcessNoiseSpec::on(Beam::Conjugate, mhz_points(table, scale)))
        .with_technical(TechnicalNoiseSpec::default());
    Some(Scenario {
        name: name.to_ascii_uppercase(),
        model,
        acquisition: AcquisitionConfig::default(),
        analysis: AnalysisConfig::default(),
        cutoffs: default_cutoffs(),
    })
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    preset: Option<String>,
    name: Option<String>,
    #[serde(default)]
    model: ModelSection,
    #[serde(default)]
    acquisition: AcquisitionSection,
    #[serde(default)]
    analysis: AnalysisSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    gain: Option<f64>,
    seed_amplitude: Option<f64>,
    probe_flux: Option<f64>,
    gain_profile: Option<String>,
    gain_bandwidth_mhz: Option<f64>,
    delay_ns: Option<f64>,
    eta: Option<f64>,
    excess_beam: Option<String>,
    excess_points_mhz: Option<Vec<[f64; 2]>>,
    technical_level_per_hz: Option<f64>,
    technical_corner_khz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AcquisitionSection {
    sample_rate_mhz: Option<f64>,
    samples_per_set: Option<usize>,
    num_sets: Option<usize>,
    adc_bits: Option<u16>,
    full_scale: Option<f64>,
    rng_seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalysisSection {
    filter_order: Option<u32>,
    f_lo_khz: Option<f64>,
    f_hi_mhz: Option<f64>,
    tau_max_ns: Option<f64>,
    delay_ns: Option<f64>,
    band_lo_mhz: Option<f64>,
    band_hi_mhz: Option<f64>,
    smoothing_mhz: Option<f64>,
    cutoffs_mhz: Option<Vec<f64>>,
}

fn cfg_err(field: &str, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("{field}: {msg}"))
}

impl Scenario {
    /// Parses a configuration. Keys left out keep the values of `preset`
    /// (default `G10`).
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let base_name = file.preset.as_deref().unwrap_or("G10");
        let mut sc = preset(base_name).ok_or_else(|| cfg_err("preset", format!("unknown preset {base_name:?}")))?;
        if let Some(n) = file.name {
            sc.name = n;
        }
        sc.apply_model(&file.model)?;
        sc.apply_acquisition(&file.acquisition);
        sc.apply_analysis(&file.analysis)?;
        sc.validate()?;
        Ok(sc)
    }

    fn apply_model(&mut self, m: &ModelSection) -> Result<(), HarnessError> {
        let old = &self.model;
        let gain = m.gain.unwrap_or(old.gain());
        let alpha = m.seed_amplitude.unwrap_or(old.squeeze.alpha().norm());
        let squeeze = SqueezeParams::from_gain(gain, alpha).map_err(|e| cfg_err("model.gain", e))?;
        let flux = m.probe_flux.unwrap_or(old.probe_dc / old.eta);
        let bw = m.gain_bandwidth_mhz.map(|v| v * 1e6).unwrap_or(old.gain_bandwidth());
        let profile = match m.gain_profile.as_deref() {
            None => match old.profile {
                GainProfile::Lorentzian { .. } => GainProfile::Lorentzian { bandwidth_hz: bw },
                GainProfile::Flat { .. } => GainProfile::Flat { bandwidth_hz: bw },
            },
            Some("lorentzian") => GainProfile::Lorentzian { bandwidth_hz: bw },
            Some("flat") => GainProfile::Flat { bandwidth_hz: bw },
            Some(other) => return Err(cfg_err("model.gain_profile", format!("expected \"lorentzian\" or \"flat\", got {other:?}"))),
        };
        let eta = m.eta.unwrap_or(old.eta);
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(cfg_err("model.eta", format!("must be in (0, 1], got {eta}")));
        }
        if !(flux > 0.0 && flux.is_finite()) {
            return Err(cfg_err("model.probe_flux", "must be positive"));
        }
        let beam = match m.excess_beam.as_deref() {
            None => old.excess.beam,
            Some("conjugate") => Beam::Conjugate,
            Some("probe") => Beam::Probe,
            Some("both") => Beam::Both,
            Some(other) => return Err(cfg_err("model.excess_beam", format!("unknown beam {other:?}"))),
        };
        let points = match &m.excess_points_mhz {
            None => old.excess.points.clone(),
            Some(p) => {
                if p.windows(2).any(|w| w[1][0] < w[0][0]) {
                    return Err(cfg_err("model.excess_points_mhz", "frequencies must be ascending"));
                }
                p.iter().map(|&[f, l]| (f * 1e6, l)).collect()
            }
        };
        let technical = TechnicalNoiseSpec {
            level: m.technical_level_per_hz.unwrap_or(old.technical.level),
            corner_hz: m.technical_corner_khz.map(|v| v * 1e3).unwrap_or(old.technical.corner_hz),
        };
        let delay = m.delay_ns.map(|v| v / 1e9).unwrap_or(old.delay);
        self.model = FwmModel::new(squeeze, flux, profile)
            .with_eta(eta)
            .with_delay(delay)
            .with_excess(ExcessNoiseSpec::on(beam, points))
            .with_technical(technical);
        Ok(())
    }

    fn apply_acquisition(&mut self, a: &AcquisitionSection) {
        let acq = &mut self.acquisition;
        if let Some(v) = a.sample_rate_mhz {
            acq.sample_rate = v * 1e6;
        }
        if let Some(v) = a.samples_per_set {
            acq.samples_per_set = v;
        }
        if let Some(v) = a.num_sets {
            acq.num_sets = v;
        }
        if let Some(v) = a.adc_bits {
            acq.adc_bits = v;
        }
        if let Some(v) = a.full_scale {
            acq.full_scale = v;
        }
        if let Some(v) = a.rng_seed {
            acq.rng_seed = v;
        }
    }

    fn apply_analysis(&mut self, a: &AnalysisSection) -> Result<(), HarnessError> {
        let an = &mut self.analysis;
        if let Some(v) = a.filter_order {
            an.filter.order = v;
        }
        if let Some(v) = a.f_lo_khz {
            an.filter.f_lo = v * 1e3;
        }
        if let Some(v) = a.f_hi_mhz {
            an.filter.f_hi = v * 1e6;
        }
        if let Some(v) = a.tau_max_ns {
            an.tau_max = v / 1e9;
        }
        if let Some(v) = a.delay_ns {
            an.delay = Some(v / 1e9);
        }
        if let Some(v) = a.smoothing_mhz {
            an.smoothing_hz = v * 1e6;
        }
        match (a.band_lo_mhz, a.band_hi_mhz) {
            (None, None) => {}
            (Some(lo), Some(hi)) => an.band = Some((lo * 1e6, hi * 1e6)),
            _ => return Err(cfg_err("analysis.band_lo_mhz", "band_lo_mhz and band_hi_mhz must be given together")),
        }
        if let Some(c) = &a.cutoffs_mhz {
            if c.is_empty() {
                return Err(cfg_err("analysis.cutoffs_mhz", "empty cutoff list"));
            }
            self.cutoffs = c.iter().map(|v| v * 1e6).collect();
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.model
            .validate(&self.acquisition)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.analysis
            .filter
            .validate(self.acquisition.sample_rate)
            .map_err(|e| cfg_err("analysis", e))?;
        if !(self.analysis.tau_max > 0.0) {
            return Err(cfg_err("analysis.tau_max_ns", "must be positive"));
        }
        if !(self.analysis.smoothing_hz > 0.0) {
            return Err(cfg_err("analysis.smoothing_mhz", "must be positive"));
        }
        validate_cutoffs(&self.cutoffs, &self.analysis.filter, self.acquisition.sample_rate)
    }
}

pub fn validate_cutoffs(cutoffs: &[f64], filter: &FilterSpec, rate: f64) -> Result<(), HarnessError> {
    if cutoffs.is_empty() {
        return Err(cfg_err("cutoffs", "empty cutoff list"));
    }
    for &f_hi in cutoffs {
        FilterSpec { f_hi, ..*filter }.validate(rate).map_err(|e| cfg_err("cutoffs", e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_presets() {
        let g10 = preset("G10").unwrap();
        assert!((g10.model.gain() - 10.0).abs() < 1e-12);
        assert_eq!(g10.model.delay, 8e-9);
        assert_eq!(g10.model.eta, 0.8);
        assert_eq!(g10.model.profile, GainProfile::Lorentzian { bandwidth_hz: 23e6 });
        assert_eq!(g10.model.excess.beam, Beam::Conjugate);
        assert_eq!(g10.model.excess.points, vec![(2e6, 0.0), (8e6, 0.25), (15e6, 2.0), (40e6, 2.25)]);
        assert_eq!(g10.model.technical, TechnicalNoiseSpec { level: 1e-14, corner_hz: 500e3 });
        assert_eq!(g10.model.probe_dc, 0.8e6);
        assert_eq!(g10.acquisition.sample_rate, 1e9);
        assert_eq!(g10.acquisition.samples_per_set, 10_000);
        assert_eq!(g10.acquisition.num_sets, 500);
        assert_eq!(g10.acquisition.adc_bits, 9);
        assert_eq!(g10.analysis.filter, FilterSpec::new(10, 500e3, 40e6));

        let g2 = preset("G2").unwrap();
        assert!((g2.model.gain() - 2.0).abs() < 1e-12);
        assert_eq!(g2.model.delay, 13e-9);
        assert_eq!(g2.model.eta, 0.95);
        assert_eq!(g2.model.profile, GainProfile::Lorentzian { bandwidth_hz: 21.5e6 });
        assert_eq!(
            g2.model.excess.points,
            vec![(3e6, 0.0), (3.5e6, 1.95), (6.5e6, 1.6), (7.5e6, 2.5), (20e6, 1.08), (40e6, 0.48)]
        );

        let g5 = preset("g5").unwrap();
        assert_eq!(g5.name, "G5");
        assert_eq!(g5.model.delay, 11e-9);
        assert!((g5.model.excess.level_at(40e6) - 2.25 * 0.7).abs() < 1e-12);
        let g8 = preset("G8").unwrap();
        assert_eq!(g8.model.delay, 9e-9);
        assert!((g8.model.gain() - 8.0).abs() < 1e-12);
        assert!(preset("G3").is_none());
        for name in PRESET_NAMES {
            preset(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn toml_overrides_preset_values() {
        let sc = Scenario::from_toml_str(
            r#"
            preset = "G2"
            name = "custom"
            [model]
            delay_ns = 5.5
            gain_profile = "flat"
            gain_bandwidth_mhz = 20
            excess_points_mhz = []
            [acquisition]
            num_sets = 20
            rng_seed = 9
            [analysis]
            f_hi_mhz = 15
            cutoffs_mhz = [1, 2.5]
            band_lo_mhz = 0.5
            band_hi_mhz = 15
            "#,
        )
        .unwrap();
        assert_eq!(sc.name, "custom");
        assert!((sc.model.gain() - 2.0).abs() < 1e-12);
        assert_eq!(sc.model.delay, 5.5e-9);
        assert_eq!(sc.model.profile, GainProfile::Flat { bandwidth_hz: 20e6 });
        assert!(sc.model.excess.is_none());
        assert_eq!(sc.acquisition.num_sets, 20);
        assert_eq!(sc.acquisition.rng_seed, 9);
        assert_eq!(sc.analysis.filter.f_hi, 15e6);
        assert_eq!(sc.analysis.band, Some((0.5e6, 15e6)));
        assert_eq!(sc.cutoffs, vec![1e6, 2.5e6]);
        assert_eq!(sc.model.probe_dc, 0.95e6);
    }

    #[test]
    fn config_errors_name_the_field() {
        let err = |t: &str| match Scenario::from_toml_str(t) {
            Err(HarnessError::Config(m)) => m,
            other => panic!("expected config error, got {other:?}"),
        };
        assert!(err("[acquisition]\nadc_bits = 0").contains("adc_bits"));
        assert!(err("[model]\neta = 1.5").contains("eta"));
        assert!(err("[model]\nbogus = 1").contains("bogus"));
        assert!(err("[analysis]\nf_hi_mhz = 600").contains("f_hi"));
        assert!(err("[analysis]\ncutoffs_mhz = []").contains("cutoffs"));
        assert!(err("preset = \"G3\"").contains("preset"));
        assert!(err("[model]\ngain = 0.5").contains("gain"));
    }
}
