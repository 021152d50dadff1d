use csilab::dsp::FilterSpec;
use csilab::estimators::{self, AnalysisConfig};
use csilab::harness;
use csilab::synth::{synthesize, AcquisitionConfig, FwmModel, TraceSet};
use csilab::theory::{GainProfile, SqueezeParams};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

fn acq(num_sets: usize, seed: u64) -> AcquisitionConfig {
    AcquisitionConfig { num_sets, rng_seed: seed, ..AcquisitionConfig::default() }
}

fn ideal_g10() -> (FwmModel, AnalysisConfig) {
    let sq = SqueezeParams::from_gain(10.0, harness::PRESET_SEED_AMPLITUDE).unwrap();
    let model = FwmModel::new(sq, harness::PRESET_PROBE_FLUX, GainProfile::Flat { bandwidth_hz: 20e6 });
    let cfg = AnalysisConfig { filter: FilterSpec::new(10, 500e3, 15e6), ..AnalysisConfig::default() };
    (model, cfg)
}

fn spectrum(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Expected one-sided rectangular-window periodogram of an `n`-sample
/// record cut from a process whose spectrum lives on the `m`-point grid
/// `j·R/m`: `E[P_k] = Σ_j S(f_j)·|D(j/m − k/n)|²/(m·n)` with the Dirichlet
/// kernel `|D(u)|² = sin²(πun)/sin²(πu)`. Captures leakage from the steep
/// low-frequency technical noise, which a pointwise model comparison misses.
fn leaked(spectrum: &[Complex64], m: usize, n: usize, k: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 1..m {
        // negative frequencies carry the conjugate
        let (idx, s) = if j <= m / 2 { (j, spectrum[j]) } else { (m - j, spectrum[m - j].conj()) };
        if idx == 0 || (m.is_multiple_of(2) && idx == m / 2) {
            continue;
        }
        let u = j as f64 / m as f64 - k as f64 / n as f64;
        let den = (PI * u).sin().powi(2);
        let kern = if den < 1e-24 { (n * n) as f64 } else { (PI * u * n as f64).sin().powi(2) / den };
        acc += s * kern;
    }
    acc / (m * n) as f64
}

/// Probe, conjugate, difference and cross spectra in 1 MHz blocks; single
/// bins carry ~4.5% noise at 500 sets.
#[test]
fn ensemble_csd_matches_model() {
    let sc = harness::preset("G10").unwrap();
    let ts = harness::simulate(&sc).unwrap();
    let rate = ts.acquisition.sample_rate;
    let n = ts.samples_per_set();
    let half = n / 2;
    let (mut pp, mut cc, mut dd) = (vec![0.0; half], vec![0.0; half], vec![0.0; half]);
    let mut pc = vec![Complex64::new(0.0, 0.0); half];
    for k in 0..ts.num_sets() {
        let ch = ts.set_channels(k);
        let p: Vec<f64> = ch[0].iter().zip(&ch[1]).map(|(a, b)| a + b).collect();
        let c: Vec<f64> = ch[2].iter().zip(&ch[3]).map(|(a, b)| a + b).collect();
        let (fp, fc) = (spectrum(&p), spectrum(&c));
        for j in 1..half {
            pp[j] += fp[j].norm_sqr();
            cc[j] += fc[j].norm_sqr();
            dd[j] += (fp[j] - fc[j]).norm_sqr();
            pc[j] += fp[j].conj() * fc[j];
        }
    }
    let scale = 2.0 / (rate * n as f64 * ts.num_sets() as f64);

    // synthesis grid: 25% longer than the record
    let m = n + n.div_ceil(4);
    let model = sc.model.spectral_model(rate);
    let pts: Vec<_> = (0..=m / 2).map(|j| model.at(j as f64 * rate / m as f64)).collect();
    let real = |f: &dyn Fn(&csilab::theory::CsdPoint) -> f64| -> Vec<Complex64> {
        pts.iter().map(|p| Complex64::new(f(p), 0.0)).collect()
    };
    let s_pp = real(&|p| p.s_pp);
    let s_cc = real(&|p| p.s_cc);
    let s_dd = real(&|p| p.s_pp + p.s_cc - 2.0 * p.s_pc.re);
    let s_pc: Vec<Complex64> = pts.iter().map(|p| p.s_pc).collect();

    let df = rate / n as f64;
    let block = 10;
    let mut worst = 0.0f64;
    let mut start = (0.5e6 / df).round() as usize;
    while (start as f64) * df < 40e6 {
        let (mut got, mut want) = ([0.0; 3], [0.0; 3]);
        let (mut gx, mut wx) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for k in start..start + block {
            got[0] += pp[k] * scale;
            got[1] += cc[k] * scale;
            got[2] += dd[k] * scale;
            gx += pc[k] * scale;
            want[0] += leaked(&s_pp, m, n, k).re;
            want[1] += leaked(&s_cc, m, n, k).re;
            want[2] += leaked(&s_dd, m, n, k).re;
            wx += leaked(&s_pc, m, n, k);
        }
        for i in 0..3 {
            worst = worst.max((got[i] / want[i] - 1.0).abs());
        }
        worst = worst.max((gx - wx).norm() / wx.norm());
        start += block;
    }
    assert!(worst < 0.05, "worst block deviation {worst}");
}

#[test]
fn synthesis_and_analysis_ignore_thread_count() {
    let (model, cfg) = ideal_g10();
    let a = acq(12, 42);
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let run = |threads| -> (TraceSet, estimators::ViolationStats) {
        pool(threads).install(|| {
            let ts = synthesize(&model, &a).unwrap();
            let st = estimators::violation_factor(&ts, &cfg).unwrap();
            (ts, st)
        })
    };
    let (ts1, st1) = run(1);
    let (ts4, st4) = run(4);
    assert_eq!(ts1, ts4);
    assert_eq!(harness::encode(&ts1), harness::encode(&ts4));
    assert_eq!(st1, st4);
}

#[test]
fn standard_error_scales_as_inverse_root_n() {
    let (model, cfg) = ideal_g10();
    let ts = synthesize(&model, &acq(500, 3)).unwrap();
    let sig: Vec<f64> =
        [50, 200, 500].iter().map(|&n| estimators::violation_factor(&ts.truncated(n), &cfg).unwrap().v_sigma).collect();
    let norm: Vec<f64> = sig.iter().zip([50.0f64, 200.0, 500.0]).map(|(s, n)| s * n.sqrt()).collect();
    for v in &norm {
        assert!((v / norm[2] - 1.0).abs() < 0.25, "sigma·sqrt(N) = {norm:?}");
    }
    let st = estimators::violation_factor(&ts, &cfg).unwrap();
    assert!((st.v_mean - 0.95).abs() < 3.0 * st.v_sigma, "{} +/- {}", st.v_mean, st.v_sigma);
}

#[test]
fn pooled_and_mean_violation_agree() {
    let sc = harness::preset("G10").unwrap();
    let ts = harness::simulate(&sc).unwrap();
    let st = estimators::violation_factor(&ts, &sc.analysis).unwrap();
    assert!((st.v_pooled - st.v_mean).abs() <= st.v_sigma, "pooled {} mean {} sigma {}", st.v_pooled, st.v_mean, st.v_sigma);
}

#[test]
fn coherent_beams_have_flat_g2() {
    let model = FwmModel::coherent(1e6, 8e5);
    let ts = synthesize(&model, &acq(100, 9)).unwrap();
    let cfg = AnalysisConfig::default();
    let batches: Vec<estimators::G2Curves> = (0..10)
        .map(|b| {
            let mut sub = ts.clone();
            sub.sets = ts.sets[b * 10..(b + 1) * 10].to_vec();
            sub.acquisition.num_sets = 10;
            estimators::g2_curves(&sub, &cfg).unwrap()
        })
        .collect();
    let pick: [fn(&estimators::G2Curves) -> &Vec<f64>; 3] = [|c| &c.g2_aa, |c| &c.g2_bb, |c| &c.g2_ab];
    for f in pick {
        for i in 0..f(&batches[0]).len() {
            let v: Vec<f64> = batches.iter().map(|c| f(c)[i] - 1.0).collect();
            let m = v.iter().sum::<f64>() / 10.0;
            let se = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 90.0).sqrt();
            assert!(m.abs() < 5.0 * se, "lag {i}: {m} vs se {se}");
        }
    }
}

#[test]
fn delay_estimate_is_unbiased() {
    let sc = harness::preset("G10").unwrap();
    let model = sc.model.clone().with_delay(8.3e-9);
    let errors: Vec<f64> = (0..100)
        .map(|seed| {
            let ts = synthesize(&model, &acq(20, 1000 + seed)).unwrap();
            estimators::estimate_delay(&ts, &sc.analysis).unwrap().seconds - 8.3e-9
        })
        .collect();
    let bias = errors.iter().sum::<f64>() / errors.len() as f64;
    assert!(bias.abs() <= 0.1e-9, "mean delay error {} ns", bias * 1e9);
}
