//! Scenario presets, configuration, the trace container, CSV/summary output
//! and the pipelines behind the command-line tool.

mod scenario;
mod tracefile;

pub use scenario::{default_cutoffs, preset, validate_cutoffs, Scenario, PRESET_NAMES, PRESET_PROBE_FLUX, PRESET_SEED_AMPLITUDE};
pub use tracefile::{decode, encode, read_trace_file, write_trace_file, HEADER_LEN, MAGIC, VERSION};

use crate::estimators::{self, AnalysisConfig, CorrelationReport, EstimatorError, SpectraReport, SweepPoint};
use crate::synth::{self, Provenance, TraceSet, CHANNELS};
use crate::theory::{self, SqueezeParams};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed trace file: {0}")]
    Malformed(String),
    #[error("analysis failed: {0}")]
    Analysis(#[from] EstimatorError),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Io { .. } => 3,
            HarnessError::Malformed(_) => 4,
            HarnessError::Analysis(_) => 1,
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run leaves no partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| HarnessError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| HarnessError::io(path, e))?;
    tmp.persist(path).map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

pub fn simulate(sc: &Scenario) -> Result<TraceSet, HarnessError> {
    synth::synthesize(&sc.model, &sc.acquisition).map_err(|e| HarnessError::Config(e.to_string()))
}

/// One-paragraph description of a synthesized or loaded trace set.
pub fn trace_summary(ts: &TraceSet) -> String {
    let mut s = String::new();
    let a = &ts.acquisition;
    let source = match &ts.provenance {
        Provenance::Model(h) => h.as_str(),
        Provenance::External => "external",
    };
    let _ = writeln!(s, "source           {source}");
    let _ = writeln!(s, "sets             {} x {} samples at {} Hz", ts.num_sets(), a.samples_per_set, a.sample_rate);
    let _ = writeln!(s, "adc              {} bits, full scale {:.6e}, seed {}", a.adc_bits, a.full_scale, a.rng_seed);
    for (name, dc) in CHANNELS.iter().zip(ts.dc_means) {
        let _ = writeln!(s, "dc {name:<13} {dc:.6e}");
    }
    let _ = writeln!(s, "clip warnings    {}", ts.clip_warnings.len());
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOutput {
    pub correlation: CorrelationReport,
    pub spectra: SpectraReport,
}

impl AnalysisOutput {
    /// Time-domain and spectral verdicts agree.
    pub fn verdicts_agree(&self) -> bool {
        self.correlation.violated == !self.spectra.eq6_satisfiable
    }
}

/// Correlation and spectral analysis sharing one delay estimate.
pub fn analyze(ts: &TraceSet, cfg: &AnalysisConfig, compensate: bool) -> Result<AnalysisOutput, HarnessError> {
    let correlation = estimators::correlation_report(ts, cfg)?;
    let cfg = AnalysisConfig { delay: Some(correlation.curves.delay.seconds), ..*cfg };
    let spectra = estimators::normalized_spectra(ts, &cfg, compensate)?;
    Ok(AnalysisOutput { correlation, spectra })
}

pub fn g2_csv(r: &CorrelationReport) -> String {
    let c = &r.curves;
    let mut s = String::from("tau_ns,g2_ab,g2_aa,g2_bb\n");
    for i in 0..c.tau.len() {
        let _ = writeln!(s, "{},{},{},{}", c.tau[i] * 1e9, c.g2_ab[i], c.g2_aa[i], c.g2_bb[i]);
    }
    s
}

pub fn spectra_csv(r: &SpectraReport) -> String {
    let mut s = String::from("f_hz,s_p_norm,s_c_norm,s_diff_norm\n");
    for k in 0..r.frequencies.len() {
        let _ = writeln!(s, "{},{},{},{}", r.frequencies[k], r.s_p_norm[k], r.s_c_norm[k], r.s_diff_norm[k]);
    }
    s
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("f_hi_hz,v_mean,v_sigma,v_spread,v_pooled,degenerate_sets\n");
    for p in points {
        let st = &p.stats;
        let _ = writeln!(s, "{},{},{},{},{},{}", p.f_hi, st.v_mean, st.v_sigma, st.v_spread, st.v_pooled, st.degenerate.len());
    }
    s
}

fn verdict(violated: bool) -> &'static str {
    if violated {
        "CSI VIOLATED"
    } else {
        "NOT VIOLATED"
    }
}

pub fn summary_text(ts: &TraceSet, out: &AnalysisOutput) -> String {
    let c = &out.correlation;
    let sp = &out.spectra;
    let st = &c.stats;
    let mut s = trace_summary(ts);
    let d = &c.curves.delay;
    let _ = writeln!(
        s,
        "delay            {:.3} ns ({})",
        d.seconds * 1e9,
        if d.from_peak { "g2_ab peak" } else { "assumed" }
    );
    let _ = writeln!(s, "eps_aa           {:.6e}", c.eps_aa);
    let _ = writeln!(s, "eps_bb           {:.6e}", c.eps_bb);
    let _ = writeln!(s, "eps_ab_peak      {:.6e}", c.eps_ab_peak);
    let _ = writeln!(s, "V                {:.5} +/- {:.2e}", c.v_mean, c.v_sigma);
    let _ = writeln!(s, "V spread (std)   {:.3e}", st.v_spread);
    let _ = writeln!(s, "V pooled         {:.5}", st.v_pooled);
    let _ = writeln!(s, "sigma_count      {:.2}", c.sigma_count);
    let _ = writeln!(s, "degenerate sets  {}", st.degenerate.len());
    let _ = writeln!(s, "verdict (V)      {}", verdict(c.violated));
    let _ = writeln!(s, "spectral lhs     {:.6e} Hz", sp.eq6_lhs);
    let _ = writeln!(s, "spectral rhs     {:.6e} Hz", sp.eq6_rhs);
    let _ = writeln!(s, "verdict (spec.)  {}", verdict(!sp.eq6_satisfiable));
    let _ = writeln!(s, "delay compensated {}", sp.compensated);
    let _ = writeln!(s, "squeezing max    {:.2} dB at {:.2} MHz", sp.squeezing_db_max, sp.squeezing_min_frequency / 1e6);
    let _ = writeln!(s, "squeezing bw     {:.2} MHz", sp.squeezing_bandwidth / 1e6);
    s
}

pub fn write_analysis(dir: &Path, ts: &TraceSet, out: &AnalysisOutput) -> Result<(), HarnessError> {
    ensure_dir(dir)?;
    write_atomic(&dir.join("g2_curves.csv"), g2_csv(&out.correlation).as_bytes())?;
    write_atomic(&dir.join("spectra.csv"), spectra_csv(&out.spectra).as_bytes())?;
    write_atomic(&dir.join("summary.txt"), summary_text(ts, out).as_bytes())
}

pub fn sweep(ts: &TraceSet, cutoffs: &[f64], cfg: &AnalysisConfig) -> Result<Vec<SweepPoint>, HarnessError> {
    validate_cutoffs(cutoffs, &cfg.filter, ts.acquisition.sample_rate)?;
    Ok(estimators::cutoff_sweep(ts, cutoffs, cfg)?)
}

pub fn write_sweep(dir: &Path, points: &[SweepPoint]) -> Result<(), HarnessError> {
    ensure_dir(dir)?;
    write_atomic(&dir.join("vsweep.csv"), sweep_csv(points).as_bytes())
}

/// Closed-form predictions for each gain: V, squeezing at `eta` and the
/// seeded-state g² values.
pub fn theory_table(gains: &[f64], eta: f64, seed_amplitude: f64) -> Result<String, HarnessError> {
    let cfg = |e: theory::TheoryError| HarnessError::Config(e.to_string());
    let mut s = String::from("gain,v_ideal,squeezing_linear,squeezing_db,g2_aa,g2_bb,g2_ab0,v_seeded\n");
    for &g in gains {
        let v = theory::violation_factor_ideal(g).map_err(cfg)?;
        let sq = theory::squeezing_ideal(g, eta).map_err(cfg)?;
        let p = SqueezeParams::from_gain(g, seed_amplitude).map_err(cfg)?;
        let row = match theory::g2_ideal(&p) {
            Ok(t) => format!("{},{},{},{}", t.g2_aa, t.g2_bb, t.g2_ab0, t.v_ideal),
            Err(_) => ",,,".to_string(),
        };
        let _ = writeln!(s, "{g},{v},{sq},{},{row}", theory::to_db(sq));
    }
    Ok(s)
}

/// Gaussian moments against the truncated-Fock oracle for one state.
pub fn oracle_table(s_param: f64, alpha: f64) -> Result<String, HarnessError> {
    let cfg = |e: theory::TheoryError| HarnessError::Config(e.to_string());
    let p = SqueezeParams::new(s_param, alpha.into()).map_err(cfg)?;
    let (n_p, n_c) = theory::mean_photon_numbers(&p);
    let f = theory::fock_oracle_moments(&p, 40).map_err(cfg)?;
    let ideal = theory::g2_ideal(&p).ok();
    let mut s = String::from("quantity,gaussian,fock,rel_diff\n");
    let mut row = |name: &str, a: Option<f64>, b: Option<f64>| {
        let fmt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let rel = match (a, b) {
            (Some(a), Some(b)) => ((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)).to_string(),
            _ => String::new(),
        };
        let _ = writeln!(s, "{name},{},{},{rel}", fmt(a), fmt(b));
    };
    row("n_probe", Some(n_p), Some(f.n_probe));
    row("n_conj", Some(n_c), Some(f.n_conj));
    row("g2_aa", ideal.map(|t| t.g2_aa), f.g2_aa());
    row("g2_bb", ideal.map(|t| t.g2_bb), f.g2_bb());
    row("g2_ab0", ideal.map(|t| t.g2_ab0), f.g2_ab0());
    let _ = writeln!(s, "# Fock cutoff {}", f.cutoff);
    Ok(s)
}
