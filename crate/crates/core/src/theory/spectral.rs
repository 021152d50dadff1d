//! Broadband cross-spectral model of the probe and conjugate photocurrents.
//!
//! Photocurrents are expressed in photoelectrons per sample. All power
//! spectral densities are one-sided, in photoelectrons²/Hz, so that the shot
//! noise of a beam with mean `dc` counts per sample at rate `R` is `2·dc/R`.
//!
//! Each Fourier component sees a frequency-dependent gain `G(f)` with
//! Bogoliubov coefficients `ν² = G(f) − 1`, `μν = √(G(f)(G(f) − 1))`. In units
//! of the respective SQL, the normally ordered excess of each beam is
//! `η·2ν²` and the normalized cross spectrum is `η·2μν`. Uncorrelated excess
//! noise and common-mode technical noise are added on top.

use super::{mean_photon_numbers, SqueezeParams};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Beam {
    Probe,
    #[default]
    Conjugate,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainProfile {
    /// `G(f) = 1 + (G − 1)/(1 + (f/B)²)`
    Lorentzian { bandwidth_hz: f64 },
    /// `G(f) = G` for `f < B`, 1 above.
    Flat { bandwidth_hz: f64 },
}

impl GainProfile {
    pub fn bandwidth_hz(&self) -> f64 {
        match *self {
            GainProfile::Lorentzian { bandwidth_hz } | GainProfile::Flat { bandwidth_hz } => {
                bandwidth_hz
            }
        }
    }

    pub fn gain_at(&self, peak_gain: f64, f: f64) -> f64 {
        let f = f.abs();
        match *self {
            GainProfile::Lorentzian { bandwidth_hz } => {
                1.0 + (peak_gain - 1.0) / (1.0 + (f / bandwidth_hz).powi(2))
            }
            GainProfile::Flat { bandwidth_hz } => {
                if f < bandwidth_hz {
                    peak_gain
                } else {
                    1.0
                }
            }
        }
    }
}

/// Uncorrelated excess noise in units of the beam's SQL (before detection
/// loss). The spectrum is piecewise linear through `points` (Hz, level) and
/// zero outside them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExcessNoiseSpec {
    pub beam: Beam,
    pub points: Vec<(f64, f64)>,
}

impl ExcessNoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn on(beam: Beam, points: Vec<(f64, f64)>) -> Self {
        Self { beam, points }
    }

    pub fn is_none(&self) -> bool {
        self.points.iter().all(|&(_, l)| l == 0.0)
    }

    pub fn level_at(&self, f: f64) -> f64 {
        let f = f.abs();
        let pts = &self.points;
        if pts.len() < 2 || f < pts[0].0 || f > pts[pts.len() - 1].0 {
            return 0.0;
        }
        let i = pts.partition_point(|&(x, _)| x <= f).clamp(1, pts.len() - 1);
        let (x0, y0) = pts[i - 1];
        let (x1, y1) = pts[i];
        if x1 == x0 {
            return y1;
        }
        y0 + (y1 - y0) * (f - x0) / (x1 - x0)
    }

    fn probe_level(&self, f: f64) -> f64 {
        match self.beam {
            Beam::Probe | Beam::Both => self.level_at(f),
            Beam::Conjugate => 0.0,
        }
    }

    fn conj_level(&self, f: f64) -> f64 {
        match self.beam {
            Beam::Conjugate | Beam::Both => self.level_at(f),
            Beam::Probe => 0.0,
        }
    }
}

/// Common-mode relative intensity noise of pump and seed.
///
/// Relative PSD `level·(f_c/f)/(1 + (f/f_c)¹²)`: 1/f below the corner, a steep
/// roll-off above it. Zero at DC, which the bias-T removes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TechnicalNoiseSpec {
    /// 1/Hz
    pub level: f64,
    pub corner_hz: f64,
}

impl TechnicalNoiseSpec {
    pub fn none() -> Self {
        Self { level: 0.0, corner_hz: 500e3 }
    }

    pub fn relative_psd(&self, f: f64) -> f64 {
        let f = f.abs();
        if self.level == 0.0 || f == 0.0 {
            return 0.0;
        }
        let x = f / self.corner_hz;
        self.level / x / (1.0 + x.powi(12))
    }
}

impl Default for TechnicalNoiseSpec {
    fn default() -> Self {
        Self { level: 1e-14, corner_hz: 500e3 }
    }
}

/// Photocurrent cross-spectral matrix at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsdPoint {
    pub s_pp: f64,
    pub s_cc: f64,
    /// `E[P*(f)·C(f)]`, including the delay phase `e^{−i2πfτ}`.
    pub s_pc: Complex64,
    pub sql_p: f64,
    pub sql_c: f64,
    /// Phase-free cross spectrum, as seen after delay compensation.
    pub s_pc_aligned: f64,
}

impl CsdPoint {
    pub fn s_p_norm(&self) -> f64 {
        self.s_pp / self.sql_p
    }

    pub fn s_c_norm(&self) -> f64 {
        self.s_cc / self.sql_c
    }

    pub fn s_diff_norm(&self, compensated: bool) -> f64 {
        let cross = if compensated { self.s_pc_aligned } else { self.s_pc.re };
        (self.s_pp + self.s_cc - 2.0 * cross) / (self.sql_p + self.sql_c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    pub gain: f64,
    pub profile: GainProfile,
    pub eta: f64,
    /// Conjugate delay relative to the probe, seconds.
    pub delay: f64,
    pub excess: ExcessNoiseSpec,
    pub technical: TechnicalNoiseSpec,
    /// Detected probe photoelectrons per sample.
    pub probe_dc: f64,
    pub conj_dc: f64,
    pub sample_rate: f64,
}

/// Cross-spectral model for lossless detection with a unit-free scale of
/// `1e5` probe photoelectrons per sample at 1 GS/s; adjust the public fields
/// for other operating points.
pub fn spectral_model(
    p: &SqueezeParams,
    profile: GainProfile,
    delay: f64,
    excess: ExcessNoiseSpec,
) -> SpectralModel {
    let (n_p, n_c) = mean_photon_numbers(p);
    let probe_dc = 1e5;
    SpectralModel {
        gain: p.gain(),
        profile,
        eta: 1.0,
        delay,
        excess,
        technical: TechnicalNoiseSpec::none(),
        probe_dc,
        conj_dc: probe_dc * n_c / n_p,
        sample_rate: 1e9,
    }
}

impl SpectralModel {
    pub fn nyquist(&self) -> f64 {
        self.sample_rate / 2.0
    }

    pub fn sql_probe(&self) -> f64 {
        2.0 * self.probe_dc / self.sample_rate
    }

    pub fn sql_conj(&self) -> f64 {
        2.0 * self.conj_dc / self.sample_rate
    }

    pub fn at(&self, f: f64) -> CsdPoint {
        let g = self.profile.gain_at(self.gain, f);
        let nu2 = g - 1.0;
        let mu_nu = (g * nu2).sqrt();
        let (sql_p, sql_c) = (self.sql_probe(), self.sql_conj());
        let e_p = self.eta * (2.0 * nu2 + self.excess.probe_level(f));
        let e_c = self.eta * (2.0 * nu2 + self.excess.conj_level(f));
        let t = self.technical.relative_psd(f);

        let s_pp = sql_p * (1.0 + e_p) + self.probe_dc * self.probe_dc * t;
        let s_cc = sql_c * (1.0 + e_c) + self.conj_dc * self.conj_dc * t;
        let aligned = (sql_p * sql_c).sqrt() * self.eta * 2.0 * mu_nu
            + self.probe_dc * self.conj_dc * t;
        let phase = Complex64::from_polar(1.0, -2.0 * PI * f * self.delay);
        CsdPoint { s_pp, s_cc, s_pc: phase * aligned, sql_p, sql_c, s_pc_aligned: aligned }
    }

    /// Normally ordered fluctuation parts `(ε_aa, ε_bb, ε_ab)` seen by a
    /// time-domain estimator whose four channels are filtered by a zero-phase
    /// power response `weight(f)`; `ε_ab` is taken at the delay.
    pub fn predicted_eps(&self, weight: impl Fn(f64) -> f64) -> (f64, f64, f64) {
        let n = 200_000;
        let df = self.nyquist() / n as f64;
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for i in 0..=n {
            let f = i as f64 * df;
            let w = weight(f) * if i == 0 || i == n { 0.5 } else { 1.0 };
            if w == 0.0 {
                continue;
            }
            let pt = self.at(f);
            a += w * (pt.s_pp - pt.sql_p);
            b += w * (pt.s_cc - pt.sql_c);
            c += w * pt.s_pc_aligned;
        }
        (
            a * df / (self.probe_dc * self.probe_dc),
            b * df / (self.conj_dc * self.conj_dc),
            c * df / (self.probe_dc * self.conj_dc),
        )
    }

    pub fn predicted_violation(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let (a, b, c) = self.predicted_eps(weight);
        (a + b) / (2.0 * c)
    }
}
