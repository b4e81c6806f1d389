//! Fixed-point codec for stored moments: per-component ranges, uniform
//! quantization with optional counter-based dither, and bit packing into
//! 32-bit words.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{LbmError, Result};
use crate::moments::component_count;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentSpec {
    pub min: f64,
    pub max: f64,
    pub bits: u32,
}

impl ComponentSpec {
    pub fn new(min: f64, max: f64, bits: u32) -> Result<Self> {
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(LbmError::InvalidInput(format!("bad range [{min}, {max}]")));
        }
        if !(8..=16).contains(&bits) {
            return Err(LbmError::InvalidInput(format!("bit width {bits} outside [8, 16]")));
        }
        Ok(ComponentSpec { min, max, bits })
    }

    #[inline]
    pub fn levels(&self) -> u32 {
        (1u32 << self.bits) - 1
    }

    /// Width of one quantization step.
    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.levels() as f64
    }
}

/// Which components receive dither noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DitherMode {
    Off,
    #[default]
    All,
    StressOnly,
}

/// Bits for (ρ, ρu) and for the non-equilibrium stress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitPreset {
    pub b_rhou: u32,
    pub b_s: u32,
}

impl BitPreset {
    pub const PRESETS: [BitPreset; 6] = [
        BitPreset { b_rhou: 16, b_s: 16 },
        BitPreset { b_rhou: 16, b_s: 15 },
        BitPreset { b_rhou: 15, b_s: 14 },
        BitPreset { b_rhou: 14, b_s: 13 },
        BitPreset { b_rhou: 13, b_s: 12 },
        BitPreset { b_rhou: 12, b_s: 11 },
    ];

    pub const fn new(b_rhou: u32, b_s: u32) -> Self {
        BitPreset { b_rhou, b_s }
    }
}

impl fmt::Display for BitPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.b_rhou, self.b_s)
    }
}

impl FromStr for BitPreset {
    type Err = LbmError;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('/')
            .ok_or_else(|| LbmError::InvalidInput(format!("preset `{s}` is not `b_rhou/b_s`")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| LbmError::InvalidInput(format!("bad bit count in `{s}`")))
        };
        let p = BitPreset {
            b_rhou: parse(a)?,
            b_s: parse(b)?,
        };
        for bits in [p.b_rhou, p.b_s] {
            if !(8..=16).contains(&bits) {
                return Err(LbmError::InvalidInput(format!("bit width {bits} outside [8, 16]")));
            }
        }
        Ok(p)
    }
}

/// Value ranges for each stored component group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSet {
    pub rho: (f64, f64),
    pub mom: (f64, f64),
    pub sneq: (f64, f64),
}

impl Default for RangeSet {
    fn default() -> Self {
        RangeSet {
            rho: (0.8, 1.5),
            mom: (-0.6, 0.6),
            sneq: (-0.1, 0.1),
        }
    }
}

/// Per-component quantization layout for one node: (ρ, ρu…, sneq…).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantSpec {
    pub dims: usize,
    pub components: Vec<ComponentSpec>,
    pub dither: DitherMode,
    pub seed: u64,
}

impl QuantSpec {
    pub fn new(dims: usize, preset: BitPreset, ranges: RangeSet, dither: DitherMode, seed: u64) -> Result<Self> {
        let c = component_count(dims);
        let mut components = Vec::with_capacity(c);
        components.push(ComponentSpec::new(ranges.rho.0, ranges.rho.1, preset.b_rhou)?);
        for _ in 0..dims {
            components.push(ComponentSpec::new(ranges.mom.0, ranges.mom.1, preset.b_rhou)?);
        }
        while components.len() < c {
            components.push(ComponentSpec::new(ranges.sneq.0, ranges.sneq.1, preset.b_s)?);
        }
        Ok(QuantSpec {
            dims,
            components,
            dither,
            seed,
        })
    }

    /// Default ranges with the given bit allocation and full dither.
    pub fn bit_allocation(dims: usize, preset: BitPreset) -> Result<Self> {
        Self::new(dims, preset, RangeSet::default(), DitherMode::All, 0)
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn total_bits(&self) -> u32 {
        self.components.iter().map(|c| c.bits).sum()
    }

    pub fn words_per_node(&self) -> usize {
        (self.total_bits() as usize).div_ceil(32)
    }

    pub fn bytes_per_node(&self) -> usize {
        4 * self.words_per_node()
    }

    pub fn bits(&self) -> Vec<u32> {
        self.components.iter().map(|c| c.bits).collect()
    }

    fn dithers(&self, comp: usize) -> bool {
        match self.dither {
            DitherMode::Off => false,
            DitherMode::All => true,
            DitherMode::StressOnly => comp > self.dims,
        }
    }

    /// Encodes one node. Returns a bitmask of saturated components.
    pub fn encode_node(&self, values: &[f64], step: u64, node: u64, words: &mut [u32]) -> Result<u32> {
        let mut codes = [0u32; 10];
        let mut sat = 0u32;
        for (k, (v, spec)) in values.iter().zip(&self.components).enumerate() {
            let noise = self
                .dithers(k)
                .then(|| dither_noise(self.seed, step, node, k as u64));
            let (q, s) = quantize(*v, spec, noise)?;
            codes[k] = q;
            if s {
                sat |= 1 << k;
            }
        }
        pack_codes(&codes[..self.components.len()], &self.components, words);
        Ok(sat)
    }

    pub fn decode_node(&self, words: &[u32], values: &mut [f64]) {
        let mut codes = [0u32; 10];
        unpack_codes(words, &self.components, &mut codes[..self.components.len()]);
        for (k, spec) in self.components.iter().enumerate() {
            values[k] = dequantize(codes[k], spec);
        }
    }
}

/// Uniform quantizer. Returns the code and whether the input was clamped.
#[inline]
pub fn quantize(m: f64, spec: &ComponentSpec, noise: Option<f64>) -> Result<(u32, bool)> {
    if m.is_nan() {
        return Err(LbmError::InvalidState("cannot quantize NaN".into()));
    }
    let saturated = m < spec.min || m > spec.max;
    let clamped = m.clamp(spec.min, spec.max);
    let unit = (clamped - spec.min) / (spec.max - spec.min);
    let levels = spec.levels();
    let q = (unit * levels as f64 + 0.5 + noise.unwrap_or(0.0)).floor();
    let q = q.clamp(0.0, levels as f64) as u32;
    Ok((q, saturated))
}

#[inline]
pub fn dequantize(q: u32, spec: &ComponentSpec) -> f64 {
    spec.min + q as f64 * (spec.max - spec.min) / spec.levels() as f64
}

/// Packs codes as a little-endian bit stream (first component in the low bits
/// of word 0).
pub fn pack_codes(codes: &[u32], specs: &[ComponentSpec], words: &mut [u32]) {
    words.iter_mut().for_each(|w| *w = 0);
    let mut bit = 0usize;
    for (q, spec) in codes.iter().zip(specs) {
        let b = spec.bits as usize;
        let v = (*q as u64) & ((1u64 << b) - 1);
        let (w, off) = (bit / 32, bit % 32);
        let shifted = v << off;
        words[w] |= shifted as u32;
        if off + b > 32 {
            words[w + 1] |= (shifted >> 32) as u32;
        }
        bit += b;
    }
}

pub fn unpack_codes(words: &[u32], specs: &[ComponentSpec], codes: &mut [u32]) {
    let mut bit = 0usize;
    for (q, spec) in codes.iter_mut().zip(specs) {
        let b = spec.bits as usize;
        let (w, off) = (bit / 32, bit % 32);
        let mut v = (words[w] as u64) >> off;
        if off + b > 32 {
            v |= (words[w + 1] as u64) << (32 - off);
        }
        *q = (v & ((1u64 << b) - 1)) as u32;
        bit += b;
    }
}

/// `pack_codes` for a uniform bit width.
pub fn pack_node(codes: &[u32], bits: u32) -> Vec<u32> {
    let specs = vec![
        ComponentSpec {
            min: 0.0,
            max: 1.0,
            bits
        };
        codes.len()
    ];
    let mut words = vec![0; (codes.len() * bits as usize).div_ceil(32)];
    pack_codes(codes, &specs, &mut words);
    words
}

pub fn unpack_node(words: &[u32], count: usize, bits: u32) -> Vec<u32> {
    let specs = vec![
        ComponentSpec {
            min: 0.0,
            max: 1.0,
            bits
        };
        count
    ];
    let mut codes = vec![0; count];
    unpack_codes(words, &specs, &mut codes);
    codes
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based uniform noise in `[−½, ½)` keyed by (seed, step, node, component).
#[inline]
pub fn dither_noise(seed: u64, step: u64, node: u64, comp: u64) -> f64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ step);
    h = splitmix64(h ^ node);
    h = splitmix64(h ^ comp);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64) - 0.5
}

/// Word-packed moment storage with per-component saturation counters.
#[derive(Debug, Clone)]
pub struct PackedMomentBuffer {
    spec: QuantSpec,
    nodes: usize,
    words: Vec<u32>,
    saturations: Vec<u64>,
}

impl PackedMomentBuffer {
    pub fn new(spec: QuantSpec, nodes: usize) -> Self {
        let words = vec![0; nodes * spec.words_per_node()];
        let saturations = vec![0; spec.component_count()];
        PackedMomentBuffer {
            spec,
            nodes,
            words,
            saturations,
        }
    }

    pub fn spec(&self) -> &QuantSpec {
        &self.spec
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    pub fn words_mut(&mut self) -> &mut [u32] {
        &mut self.words
    }

    pub fn saturations(&self) -> &[u64] {
        &self.saturations
    }

    pub fn add_saturations(&mut self, mask_counts: &[u64]) {
        for (s, c) in self.saturations.iter_mut().zip(mask_counts) {
            *s += c;
        }
    }

    pub fn byte_size(&self) -> usize {
        self.words.len() * 4
    }

    pub fn store(&mut self, node: usize, values: &[f64], step: u64) -> Result<()> {
        let wpn = self.spec.words_per_node();
        let sat = self.spec.encode_node(
            values,
            step,
            node as u64,
            &mut self.words[node * wpn..(node + 1) * wpn],
        )?;
        for (k, s) in self.saturations.iter_mut().enumerate() {
            *s += ((sat >> k) & 1) as u64;
        }
        Ok(())
    }

    pub fn load(&self, node: usize, values: &mut [f64]) {
        let wpn = self.spec.words_per_node();
        self.spec
            .decode_node(&self.words[node * wpn..(node + 1) * wpn], values);
    }

    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.spec.dims as u32).to_le_bytes())?;
        w.write_all(&(self.spec.component_count() as u32).to_le_bytes())?;
        w.write_all(&(self.nodes as u64).to_le_bytes())?;
        for c in &self.spec.components {
            w.write_all(&c.bits.to_le_bytes())?;
            w.write_all(&c.min.to_le_bytes())?;
            w.write_all(&c.max.to_le_bytes())?;
        }
        for word in &self.words {
            w.write_all(&word.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump written by [`write_dump`](Self::write_dump). Dither
    /// settings are not part of the format and come back as `Off`.
    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(LbmError::Format("not a packed moment dump".into()));
        }
        let dims = read_u32(&mut r)? as usize;
        let c = read_u32(&mut r)? as usize;
        let nodes = read_u64(&mut r)? as usize;
        if !(dims == 2 || dims == 3) || c != component_count(dims) {
            return Err(LbmError::Format(format!("bad dims {dims} / components {c}")));
        }
        let mut components = Vec::with_capacity(c);
        for _ in 0..c {
            let bits = read_u32(&mut r)?;
            let min = read_f64(&mut r)?;
            let max = read_f64(&mut r)?;
            components.push(ComponentSpec::new(min, max, bits)?);
        }
        let spec = QuantSpec {
            dims,
            components,
            dither: DitherMode::Off,
            seed: 0,
        };
        let mut buf = PackedMomentBuffer::new(spec, nodes);
        for word in buf.words.iter_mut() {
            *word = read_u32(&mut r)?;
        }
        Ok(buf)
    }
}

const DUMP_MAGIC: &[u8; 8] = b"MLBMPAK1";

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rho_spec() -> ComponentSpec {
        ComponentSpec::new(0.8, 1.5, 16).unwrap()
    }

    #[test]
    fn density_oracle_and_endpoints() {
        let s = rho_spec();
        assert_eq!(quantize(1.0, &s, None).unwrap(), (18724, false));
        assert_eq!(quantize(0.8, &s, None).unwrap(), (0, false));
        assert_eq!(quantize(1.5, &s, None).unwrap(), (65535, false));
        assert_eq!(dequantize(0, &s), 0.8);
        assert_eq!(dequantize(65535, &s), 1.5);
        assert_eq!(quantize(2.0, &s, None).unwrap(), (65535, true));
        assert_eq!(quantize(-1.0, &s, None).unwrap(), (0, true));
        assert!(quantize(f64::NAN, &s, None).is_err());
    }

    #[test]
    fn pack_layout() {
        assert_eq!(pack_node(&[0; 6], 16), vec![0; 3]);
        let w = pack_node(&[0xFFFF, 0, 0xFFFF, 0, 0xFFFF, 0], 16);
        assert_eq!(w, vec![0x0000_FFFF; 3]);
        let w = pack_node(&[1, 2, 3], 12);
        assert_eq!(w, vec![1 | (2 << 12) | (3 << 24), 0]);
    }

    #[test]
    fn word_counts() {
        let s3 = QuantSpec::bit_allocation(3, BitPreset::PRESETS[0]).unwrap();
        assert_eq!(s3.words_per_node(), 5);
        assert_eq!(s3.bytes_per_node() * 2, 10 * 4);
        let s2 = QuantSpec::bit_allocation(2, BitPreset::PRESETS[0]).unwrap();
        assert_eq!(s2.total_bits(), 96);
        assert_eq!(s2.words_per_node(), 3);
        let p: BitPreset = "16/15".parse().unwrap();
        let s = QuantSpec::bit_allocation(2, p).unwrap();
        assert_eq!(s.components[0].bits, 16);
        assert_eq!(s.components[2].bits, 16);
        assert_eq!(s.components[3].bits, 15);
        assert!("17/3".parse::<BitPreset>().is_err());
        assert!("16".parse::<BitPreset>().is_err());
    }

    #[test]
    fn dither_noise_is_bounded_and_keyed() {
        let a = dither_noise(1, 2, 3, 4);
        assert_eq!(a, dither_noise(1, 2, 3, 4));
        assert_ne!(a, dither_noise(1, 2, 3, 5));
        for i in 0..10_000 {
            let n = dither_noise(7, i, i * 3, 1);
            assert!((-0.5..0.5).contains(&n));
        }
    }

    #[test]
    fn saturation_counter_matches_reference() {
        let spec = QuantSpec::bit_allocation(2, BitPreset::PRESETS[2]).unwrap();
        let mut buf = PackedMomentBuffer::new(spec, 50);
        let mut expected = [0u64; 6];
        for n in 0..50 {
            let x = n as f64 / 50.0;
            let v = [0.7 + x, -0.8 + 1.6 * x, 0.0, 0.2 * x - 0.12, 0.0, 0.05];
            for k in 0..6 {
                let s = &buf.spec().components[k];
                if v[k] < s.min || v[k] > s.max {
                    expected[k] += 1;
                }
            }
            buf.store(n, &v, 0).unwrap();
        }
        assert_eq!(buf.saturations(), &expected);
    }

    #[test]
    fn dump_round_trip() {
        let spec = QuantSpec::bit_allocation(3, BitPreset::PRESETS[3]).unwrap();
        let mut buf = PackedMomentBuffer::new(spec, 4);
        for n in 0..4 {
            let v: Vec<f64> = (0..10).map(|k| 0.01 * (n * 10 + k) as f64 + if k == 0 { 1.0 } else { 0.0 }).collect();
            buf.store(n, &v, 3).unwrap();
        }
        let mut bytes = Vec::new();
        buf.write_dump(&mut bytes).unwrap();
        let back = PackedMomentBuffer::read_dump(bytes.as_slice()).unwrap();
        assert_eq!(back.words(), buf.words());
        assert_eq!(back.spec().components, buf.spec().components);
        assert!(PackedMomentBuffer::read_dump(&bytes[..10]).is_err());
    }

    proptest! {
        #[test]
        fn pack_round_trip(bits in prop::collection::vec(8u32..=16, 10), seed in any::<u64>()) {
            let specs: Vec<ComponentSpec> = bits.iter().map(|b| ComponentSpec::new(0.0, 1.0, *b).unwrap()).collect();
            let codes: Vec<u32> = specs.iter().enumerate()
                .map(|(k, s)| (splitmix64(seed ^ k as u64) as u32) & s.levels())
                .collect();
            let mut words = vec![0u32; (bits.iter().sum::<u32>() as usize).div_ceil(32)];
            pack_codes(&codes, &specs, &mut words);
            let mut back = vec![0u32; 10];
            unpack_codes(&words, &specs, &mut back);
            prop_assert_eq!(back, codes);
        }

        #[test]
        fn quantization_error_bound(m in 0.8f64..=1.5, bits in 8u32..=16) {
            let s = ComponentSpec::new(0.8, 1.5, bits).unwrap();
            let (q, sat) = quantize(m, &s, None).unwrap();
            prop_assert!(!sat);
            prop_assert!((dequantize(q, &s) - m).abs() <= 0.5 * s.step() * (1.0 + 1e-12));
        }

        #[test]
        fn dithered_error_within_one_step(m in -0.1f64..0.1, key in any::<u64>()) {
            let s = ComponentSpec::new(-0.1, 0.1, 11).unwrap();
            let (q, _) = quantize(m, &s, Some(dither_noise(key, 0, 0, 0))).unwrap();
            prop_assert!((dequantize(q, &s) - m).abs() <= s.step() * (1.0 + 1e-12));
        }
    }
}
