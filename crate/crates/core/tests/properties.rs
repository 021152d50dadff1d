use csilab::dsp::{shift_samples, FilterSpec};
use csilab::harness;
use csilab::synth::{quantize, quantizer_step, AcquisitionConfig, Provenance, TraceSet};
use csilab::theory::{self, SqueezeParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gaussian_moments_match_fock_oracle(s in 0.05f64..0.6, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        prop_assume!(re.hypot(im) <= 2.0);
        let p = SqueezeParams::new(s, Complex64::new(re, im)).unwrap();
        let g = theory::g2_ideal(&p).unwrap();
        let f = theory::fock_oracle_moments(&p, 40).unwrap();
        prop_assert!(rel(g.n_probe, f.n_probe) < 1e-8);
        prop_assert!(rel(g.n_conj, f.n_conj) < 1e-8);
        prop_assert!(rel(g.g2_aa, f.g2_aa().unwrap()) < 1e-8);
        prop_assert!(rel(g.g2_bb, f.g2_bb().unwrap()) < 1e-8);
        prop_assert!(rel(g.g2_ab0, f.g2_ab0().unwrap()) < 1e-8);
    }

    #[test]
    fn violation_below_one_for_any_gain(gain in 1.0001f64..100.0, alpha in 1.0f64..1e4) {
        let v = theory::violation_factor_ideal(gain).unwrap();
        prop_assert!((0.5..1.0).contains(&v));
        let p = SqueezeParams::from_gain(gain, alpha).unwrap();
        prop_assert!(theory::g2_ideal(&p).unwrap().v_ideal < 1.0);
    }

    #[test]
    fn photon_difference_is_seed(gain in 1.0f64..50.0, alpha in 0.0f64..1e3) {
        let p = SqueezeParams::from_gain(gain, alpha).unwrap();
        let (n_p, n_c) = theory::mean_photon_numbers(&p);
        prop_assert!((n_p - n_c - alpha * alpha).abs() <= 1e-9 * n_p.max(1.0));
    }

    #[test]
    fn squeezing_never_exceeds_sql(gain in 1.0f64..100.0, eta in 1e-3f64..=1.0) {
        let s = theory::squeezing_ideal(gain, eta).unwrap();
        prop_assert!(s <= 1.0 + 1e-15 && s >= 1.0 - eta - 1e-15);
    }

    #[test]
    fn shift_round_trip(x in prop::collection::vec(-1e3f64..1e3, 8..200), shift in -20.0f64..20.0) {
        let back = shift_samples(&shift_samples(&x, shift), -shift);
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn integer_shift_rotates(x in prop::collection::vec(-1e3f64..1e3, 8..100), k in 0usize..8) {
        let y = shift_samples(&x, k as f64);
        let n = x.len();
        for i in 0..n {
            prop_assert!((y[(i + k) % n] - x[i]).abs() <= 1e-9 * 1e3);
        }
    }

    #[test]
    fn filter_response_bounded_and_symmetric(
        order in (1u32..8).prop_map(|o| 2 * o),
        f_lo in 1e4f64..1e6,
        ratio in 1.5f64..200.0,
        f in 1e3f64..1e9,
    ) {
        let spec = FilterSpec::new(order, f_lo, f_lo * ratio);
        let h = spec.power_response(f);
        prop_assert!((0.0..=1.0).contains(&h));
        let mirror = spec.power_response(spec.f_lo * spec.f_hi / f);
        prop_assert!((h - mirror).abs() <= 1e-9);
    }

    #[test]
    fn quantizer_codes_in_range(
        bits in 1u16..=16,
        fs in 1.0f64..1e6,
        x in prop::collection::vec(-3e6f64..3e6, 1..100),
    ) {
        let (codes, clipped) = quantize(&x, bits, fs);
        let half = 1i64 << (bits - 1);
        let step = quantizer_step(bits, fs);
        let mut outside = 0;
        for (&c, &v) in codes.iter().zip(&x) {
            prop_assert!((c as i64) >= -half && (c as i64) < half);
            let inside = v / step >= -half as f64 - 0.5 && v / step < half as f64 - 0.5;
            if inside {
                prop_assert!((c as f64 * step - v).abs() <= 0.5 * step * (1.0 + 1e-12));
            } else {
                outside += 1;
            }
        }
        prop_assert_eq!(clipped, outside);
    }

    #[test]
    fn trace_file_round_trip(
        bits in 1u16..=16,
        sets in 1usize..4,
        n in 16usize..64,
        seed in any::<u64>(),
        dc in prop::array::uniform4(1.0f64..1e9),
    ) {
        let half = 1i32 << (bits - 1);
        let mut state = seed | 1;
        let mut code = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            ((state % (2 * half as u64)) as i32 - half) as i16
        };
        let data: Vec<[Vec<i16>; 4]> =
            (0..sets).map(|_| std::array::from_fn(|_| (0..n).map(|_| code()).collect())).collect();
        let ts = TraceSet {
            sets: data,
            dc_means: dc,
            acquisition: AcquisitionConfig {
                samples_per_set: n,
                num_sets: sets,
                adc_bits: bits,
                full_scale: 123.5,
                rng_seed: seed,
                ..AcquisitionConfig::default()
            },
            provenance: Provenance::External,
            clip_warnings: vec![],
        };
        let bytes = harness::encode(&ts);
        let back = harness::decode(&bytes).unwrap();
        prop_assert_eq!(&back, &ts);
        prop_assert_eq!(harness::encode(&back), bytes);
    }
}
