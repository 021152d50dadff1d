//! `CSTF` trace container, little-endian throughout.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "CSTF"
//!      4     2  version (1)
//!      6     2  channel count (4)
//!      8     4  sets
//!     12     8  samples per set
//!     20     8  sample rate, Hz (f64)
//!     28     2  ADC bits
//!     30     8  full scale (f64)
//!     38    32  DC means p1 p2 c1 c2 (f64)
//!     70     8  RNG seed
//!     78     4  CRC32 of bytes 0..78
//!     82     …  i16 codes, per set, per channel
//! ```

use super::{write_atomic, HarnessError};
use crate::synth::{AcquisitionConfig, Provenance, TraceSet};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"CSTF";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 78;

pub fn encode(ts: &TraceSet) -> Vec<u8> {
    let a = &ts.acquisition;
    let n = a.samples_per_set;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + ts.num_sets() * 4 * n * 2);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&(ts.num_sets() as u32).to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&a.sample_rate.to_le_bytes());
    out.extend_from_slice(&a.adc_bits.to_le_bytes());
    out.extend_from_slice(&a.full_scale.to_le_bytes());
    for d in ts.dc_means {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(&a.rng_seed.to_le_bytes());
    debug_assert_eq!(out.len(), HEADER_LEN);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    for set in &ts.sets {
        for ch in set {
            for c in ch {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let b = self.buf[self.pos..self.pos + N].try_into().expect("length checked");
        self.pos += N;
        b
    }
    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take())
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn decode(buf: &[u8]) -> Result<TraceSet, HarnessError> {
    let bad = |m: &str| HarnessError::Malformed(m.to_string());
    if buf.len() < HEADER_LEN + 4 {
        return Err(bad("file shorter than the header"));
    }
    if &buf[..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let stored = u32::from_le_bytes(buf[HEADER_LEN..HEADER_LEN + 4].try_into().expect("4 bytes"));
    if crc32fast::hash(&buf[..HEADER_LEN]) != stored {
        return Err(bad("header checksum mismatch"));
    }
    let mut r = Reader { buf, pos: 4 };
    let version = r.u16();
    if version != VERSION {
        return Err(HarnessError::Malformed(format!("unsupported version {version}")));
    }
    let channels = r.u16();
    if channels != 4 {
        return Err(HarnessError::Malformed(format!("expected 4 channels, found {channels}")));
    }
    let sets = r.u32() as usize;
    let samples = r.u64();
    let sample_rate = r.f64();
    let adc_bits = r.u16();
    let full_scale = r.f64();
    let dc_means = [r.f64(), r.f64(), r.f64(), r.f64()];
    let rng_seed = r.u64();
    let samples = usize::try_from(samples).map_err(|_| bad("sample count overflows"))?;
    let expected = sets
        .checked_mul(4)
        .and_then(|v| v.checked_mul(samples))
        .and_then(|v| v.checked_mul(2))
        .ok_or_else(|| bad("payload size overflows"))?;
    let payload = &buf[HEADER_LEN + 4..];
    if payload.len() != expected {
        return Err(HarnessError::Malformed(format!(
            "payload holds {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let mut words = payload.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]]));
    let sets_data = (0..sets)
        .map(|_| std::array::from_fn(|_| words.by_ref().take(samples).collect()))
        .collect();
    let ts = TraceSet {
        sets: sets_data,
        dc_means,
        acquisition: AcquisitionConfig {
            sample_rate,
            samples_per_set: samples,
            num_sets: sets,
            adc_bits,
            full_scale,
            rng_seed,
        },
        provenance: Provenance::External,
        clip_warnings: Vec::new(),
    };
    ts.validate().map_err(|e| HarnessError::Malformed(e.to_string()))?;
    Ok(ts)
}

pub fn write_trace_file(path: &Path, ts: &TraceSet) -> Result<(), HarnessError> {
    write_atomic(path, &encode(ts))
}

pub fn read_trace_file(path: &Path) -> Result<TraceSet, HarnessError> {
    let buf = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    decode(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> TraceSet {
        let codes = |k: i16| -> [Vec<i16>; 4] { std::array::from_fn(|c| (0..16).map(|i| i * 37 - 80 + k + c as i16).collect()) };
        TraceSet {
            sets: vec![codes(0), codes(1), codes(-300)],
            dc_means: [5e5, 5e5, 4.5e5, 4.5e5],
            acquisition: AcquisitionConfig { samples_per_set: 16, num_sets: 3, full_scale: 1234.5, rng_seed: 77, ..Default::default() },
            provenance: Provenance::External,
            clip_warnings: vec![],
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&fixture());
        assert_eq!(&bytes[..4], b"CSTF");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 4);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 16);
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 1e9);
        assert_eq!(u16::from_le_bytes([bytes[28], bytes[29]]), 9);
        assert_eq!(f64::from_le_bytes(bytes[30..38].try_into().unwrap()), 1234.5);
        assert_eq!(f64::from_le_bytes(bytes[62..70].try_into().unwrap()), 4.5e5);
        assert_eq!(u64::from_le_bytes(bytes[70..78].try_into().unwrap()), 77);
        assert_eq!(bytes.len(), 82 + 3 * 4 * 16 * 2);
        // first payload word: set 0, p1, sample 0
        assert_eq!(i16::from_le_bytes([bytes[82], bytes[83]]), -80);
    }

    #[test]
    fn round_trip_is_lossless() {
        let ts = fixture();
        let back = decode(&encode(&ts)).unwrap();
        assert_eq!(back, ts);
        assert_eq!(encode(&back), encode(&ts));
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = encode(&fixture());
        assert!(matches!(decode(&bytes[..bytes.len() - 1]), Err(HarnessError::Malformed(_))));
        let mut flipped = bytes.clone();
        flipped[13] ^= 1;
        assert!(matches!(decode(&flipped), Err(HarnessError::Malformed(m)) if m.contains("checksum")));
        let mut extra = bytes.clone();
        extra.extend_from_slice(&[0, 0]);
        assert!(decode(&extra).is_err());
        assert!(decode(b"CST").is_err());
    }
}
