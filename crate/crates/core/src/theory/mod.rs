//! Gaussian-state predictions for a seeded two-mode squeezer.
//!
//! The squeezer `exp(s·ab − s·a†b†)` acts on a coherent probe seed `|α⟩` and a
//! vacuum conjugate. All moments here are normally ordered.

mod fock;
mod spectral;

pub use fock::{fock_oracle_moments, FockMoments, MAX_FOCK_CUTOFF};
pub use spectral::{
    spectral_model, Beam, CsdPoint, ExcessNoiseSpec, GainProfile, SpectralModel,
    TechnicalNoiseSpec,
};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("{0}")]
    Domain(String),
    #[error("degenerate state: mean photon number of the {0} is zero")]
    DegenerateState(&'static str),
    #[error("Fock cutoff too small: retained norm {norm:.3e} at dimension {cutoff}")]
    CutoffTooSmall { cutoff: usize, norm: f64 },
}

/// Squeeze parameter and probe seed amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParams {
    s: f64,
    alpha: Complex64,
}

impl SqueezeParams {
    pub fn new(s: f64, alpha: Complex64) -> Result<Self, TheoryError> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(TheoryError::Domain(format!(
                "squeeze parameter must be finite and >= 0, got {s}"
            )));
        }
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            return Err(TheoryError::Domain("seed amplitude must be finite".into()));
        }
        Ok(Self { s, alpha })
    }

    /// Builds parameters from the gain `G = cosh²(s)` and a real seed amplitude.
    pub fn from_gain(gain: f64, alpha: f64) -> Result<Self, TheoryError> {
        if !(gain.is_finite() && gain >= 1.0) {
            return Err(TheoryError::Domain(format!("gain must be >= 1, got {gain}")));
        }
        Self::new(gain.sqrt().acosh(), Complex64::new(alpha, 0.0))
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn gain(&self) -> f64 {
        self.s.cosh().powi(2)
    }

    /// `cosh s`
    pub fn mu(&self) -> f64 {
        self.s.cosh()
    }

    /// `sinh s`
    pub fn nu(&self) -> f64 {
        self.s.sinh()
    }

    pub fn seed_photons(&self) -> f64 {
        self.alpha.norm_sqr()
    }
}

/// Zero-delay normally ordered correlation values and the derived CSI quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryPrediction {
    pub n_probe: f64,
    pub n_conj: f64,
    pub g2_aa: f64,
    pub g2_bb: f64,
    pub g2_ab0: f64,
    pub eps_aa: f64,
    pub eps_bb: f64,
    pub eps_ab: f64,
    pub v_ideal: f64,
    /// Intensity-difference noise over its SQL for lossless detection.
    pub squeezing_linear: f64,
}

/// Mean photon numbers `(⟨n̂_p⟩, ⟨n̂_c⟩)` of the squeezer output.
pub fn mean_photon_numbers(p: &SqueezeParams) -> (f64, f64) {
    let g = p.gain();
    let a2 = p.seed_photons();
    (g * a2 + (g - 1.0), (g - 1.0) * (a2 + 1.0))
}

/// First and second moments of a two-mode Gaussian state, fluctuations
/// `δx = x − ⟨x⟩`.
#[derive(Debug, Clone, Copy)]
struct GaussianMoments {
    mean_a: Complex64,
    mean_b: Complex64,
    /// ⟨δa†δa⟩
    n_a: f64,
    /// ⟨δb†δb⟩
    n_b: f64,
    /// ⟨δa δa⟩
    m_aa: Complex64,
    /// ⟨δb δb⟩
    m_bb: Complex64,
    /// ⟨δa δb⟩
    m_ab: Complex64,
    /// ⟨δa†δb⟩
    c_ab: Complex64,
}

#[derive(Clone, Copy)]
enum Mode {
    A,
    B,
}

impl GaussianMoments {
    fn squeezed_coherent(p: &SqueezeParams) -> Self {
        let (mu, nu) = (p.mu(), p.nu());
        // a → μa − νb†, b → μb − νa†
        Self {
            mean_a: p.alpha() * mu,
            mean_b: -p.alpha().conj() * nu,
            n_a: nu * nu,
            n_b: nu * nu,
            m_aa: Complex64::new(0.0, 0.0),
            m_bb: Complex64::new(0.0, 0.0),
            m_ab: Complex64::new(-mu * nu, 0.0),
            c_ab: Complex64::new(0.0, 0.0),
        }
    }

    fn mean(&self, m: Mode) -> Complex64 {
        match m {
            Mode::A => self.mean_a,
            Mode::B => self.mean_b,
        }
    }

    /// ⟨δx†δy⟩
    fn normal(&self, x: Mode, y: Mode) -> Complex64 {
        match (x, y) {
            (Mode::A, Mode::A) => self.n_a.into(),
            (Mode::B, Mode::B) => self.n_b.into(),
            (Mode::A, Mode::B) => self.c_ab,
            (Mode::B, Mode::A) => self.c_ab.conj(),
        }
    }

    /// ⟨δx δy⟩
    fn anomalous(&self, x: Mode, y: Mode) -> Complex64 {
        match (x, y) {
            (Mode::A, Mode::A) => self.m_aa,
            (Mode::B, Mode::B) => self.m_bb,
            _ => self.m_ab,
        }
    }

    fn number(&self, x: Mode) -> f64 {
        self.mean(x).norm_sqr() + self.normal(x, x).re
    }

    /// ⟨x†y†y x⟩ by Wick factorization of the displaced Gaussian state.
    fn normal_ordered_pair(&self, x: Mode, y: Mode) -> f64 {
        let (mx, my) = (self.mean(x), self.mean(y));
        let nxx = self.normal(x, x).re;
        let nyy = self.normal(y, y).re;
        let nxy = self.normal(x, y);
        let mxy = self.anomalous(x, y);

        let second = 2.0 * (mx * my * mxy.conj()).re
            + 2.0 * (mx * my.conj() * nxy).re
            + my.norm_sqr() * nxx
            + mx.norm_sqr() * nyy;
        let fourth = mxy.norm_sqr() + nxy.norm_sqr() + nxx * nyy;
        mx.norm_sqr() * my.norm_sqr() + second + fourth
    }
}

/// Zero-delay g² values, their fluctuation parts and the violation factor.
pub fn g2_ideal(p: &SqueezeParams) -> Result<TheoryPrediction, TheoryError> {
    let gm = GaussianMoments::squeezed_coherent(p);
    let n_probe = gm.number(Mode::A);
    let n_conj = gm.number(Mode::B);
    if n_probe <= 0.0 {
        return Err(TheoryError::DegenerateState("probe"));
    }
    if n_conj <= 0.0 {
        return Err(TheoryError::DegenerateState("conjugate"));
    }
    let g2_aa = gm.normal_ordered_pair(Mode::A, Mode::A) / (n_probe * n_probe);
    let g2_bb = gm.normal_ordered_pair(Mode::B, Mode::B) / (n_conj * n_conj);
    let g2_ab0 = gm.normal_ordered_pair(Mode::A, Mode::B) / (n_probe * n_conj);
    let (eps_aa, eps_bb, eps_ab) = (g2_aa - 1.0, g2_bb - 1.0, g2_ab0 - 1.0);

    // Var(n_p − n_c) = ⟨:(n_p − n_c)²:⟩ − (n_p − n_c)² + n_p + n_c
    let var_diff = eps_aa * n_probe * n_probe + eps_bb * n_conj * n_conj
        - 2.0 * eps_ab * n_probe * n_conj
        + n_probe
        + n_conj;
    Ok(TheoryPrediction {
        n_probe,
        n_conj,
        g2_aa,
        g2_bb,
        g2_ab0,
        eps_aa,
        eps_bb,
        eps_ab,
        v_ideal: (eps_aa + eps_bb) / (2.0 * eps_ab),
        squeezing_linear: var_diff / (n_probe + n_conj),
    })
}

/// Bright-seed violation factor `V = 1 − 1/(2G)`.
pub fn violation_factor_ideal(gain: f64) -> Result<f64, TheoryError> {
    if !(gain.is_finite() && gain >= 1.0) {
        return Err(TheoryError::Domain(format!("gain must be >= 1, got {gain}")));
    }
    Ok(1.0 - 1.0 / (2.0 * gain))
}

/// Intensity-difference noise relative to the SQL for a bright seeded
/// amplifier followed by detection efficiency `eta`.
pub fn squeezing_ideal(gain: f64, eta: f64) -> Result<f64, TheoryError> {
    if !(gain.is_finite() && gain >= 1.0) {
        return Err(TheoryError::Domain(format!("gain must be >= 1, got {gain}")));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(TheoryError::Domain(format!("eta must be in (0, 1], got {eta}")));
    }
    Ok(eta / (2.0 * gain - 1.0) + (1.0 - eta))
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
