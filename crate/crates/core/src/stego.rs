//! Seeded LSB replacement embedder and LSB-plane extraction.
//!
//! Samples are addressed by a global index over all channels: the full R
//! plane first, then G, then B, each in raster order. Embedding at `level`
//! selects exactly `floor(level * N)` distinct samples and overwrites their
//! LSB with a uniform random bit, so roughly half of them actually change.
//! Positions and payload bits come from two SplitMix64 streams derived from
//! the seed, which makes the output a pure function of `(image, params)`.

use crate::error::{Error, Result};
use crate::imageio::Image;
use crate::rng::SplitMix64;

const POSITION_STREAM_XOR: u64 = 0xA5A5_A5A5_A5A5_A5A5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbedOrder {
    /// Positions from a seeded partial Fisher-Yates shuffle.
    #[default]
    Randomized,
    /// The first `n` samples in storage order.
    Sequential,
}

impl std::str::FromStr for EmbedOrder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "randomized" => Ok(EmbedOrder::Randomized),
            "sequential" => Ok(EmbedOrder::Sequential),
            other => Err(format!("unknown order {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StegoParams {
    level: f64,
    pub seed: u64,
    pub order: EmbedOrder,
}

impl StegoParams {
    pub fn new(level: f64, seed: u64) -> Result<Self> {
        Self::with_order(level, seed, EmbedOrder::Randomized)
    }

    pub fn with_order(level: f64, seed: u64, order: EmbedOrder) -> Result<Self> {
        if !(0.0..=1.0).contains(&level) {
            return Err(Error::OutOfRange {
                name: "level",
                value: level,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(Self { level, seed, order })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    /// Number of samples overwritten in an image with `total` samples.
    pub fn position_count(&self, total: usize) -> usize {
        ((self.level * total as f64).floor() as usize).min(total)
    }
}

/// What the embedder wrote: global sample indices and the bit stored at each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbedTrace {
    pub positions: Vec<usize>,
    pub bits: Vec<u8>,
}

/// Embeds and reports the positions and bits written.
pub fn embed_lsb_traced(image: &Image, params: &StegoParams) -> (Image, EmbedTrace) {
    let total = image.sample_count();
    let n = params.position_count(total);
    let positions = select_positions(total, n, params);
    let mut data = SplitMix64::new(params.seed);
    let bits: Vec<u8> = (0..n).map(|_| (data.next_u64() >> 63) as u8).collect();

    let mut out = image.clone();
    let plane_len = image.width() * image.height();
    let channels = out.channels_mut();
    for (&pos, &bit) in positions.iter().zip(&bits) {
        let px = &mut channels[pos / plane_len].pixels_mut()[pos % plane_len];
        *px = (*px & !1) | bit;
    }
    (out, EmbedTrace { positions, bits })
}

pub fn embed_lsb(image: &Image, params: &StegoParams) -> Image {
    embed_lsb_traced(image, params).0
}

fn select_positions(total: usize, n: usize, params: &StegoParams) -> Vec<usize> {
    match params.order {
        EmbedOrder::Sequential => (0..n).collect(),
        EmbedOrder::Randomized => {
            let mut rng = SplitMix64::new(params.seed ^ POSITION_STREAM_XOR);
            let mut idx: Vec<u32> = (0..total as u32).collect();
            for t in 0..n {
                let span = (total - t) as u64;
                let j = t + (rng.next_u64() % span) as usize;
                idx.swap(t, j);
            }
            idx.truncate(n);
            idx.into_iter().map(|i| i as usize).collect()
        }
    }
}

/// LSBs of every sample in global order, one bit per entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LsbPlane {
    pub bits: Vec<u8>,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

impl LsbPlane {
    /// Packs eight bits per byte, first bit in the MSB; a trailing partial
    /// byte is zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        pack_bits(&self.bits)
    }

    /// The bits belonging to one channel.
    pub fn channel(&self, c: usize) -> &[u8] {
        let len = self.width * self.height;
        &self.bits[c * len..(c + 1) * len]
    }
}

pub fn pack_bits(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i)))
        })
        .collect()
}

pub fn extract_lsb_plane(image: &Image) -> LsbPlane {
    let bits = image
        .channels()
        .iter()
        .flat_map(|plane| plane.pixels().iter().map(|&p| p & 1))
        .collect();
    LsbPlane {
        bits,
        width: image.width(),
        height: image.height(),
        channels: image.channel_count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::{ImagePlane, RgbImage};

    fn gradient_rgb(w: usize, h: usize) -> Image {
        let plane = |s: usize| ImagePlane::from_fn(w, h, |x, y| ((x * 3 + y * 5 + s) % 256) as u8).unwrap();
        Image::Rgb(RgbImage::new(plane(0), plane(17), plane(101)).unwrap())
    }

    #[test]
    fn level_zero_is_identity() {
        let img = gradient_rgb(16, 9);
        let p = StegoParams::new(0.0, 42).unwrap();
        assert_eq!(embed_lsb(&img, &p), img);
    }

    #[test]
    fn rejects_out_of_range_levels() {
        assert!(StegoParams::new(-0.01, 1).is_err());
        assert!(StegoParams::new(1.01, 1).is_err());
        assert!(StegoParams::new(f64::NAN, 1).is_err());
    }

    #[test]
    fn full_embedding_changes_about_half() {
        let img = gradient_rgb(800, 200);
        let p = StegoParams::new(1.0, 7).unwrap();
        let (out, trace) = embed_lsb_traced(&img, &p);
        assert_eq!(trace.positions.len(), img.sample_count());
        let changed = img.channels()[0]
            .pixels()
            .iter()
            .chain(img.channels()[1].pixels())
            .chain(img.channels()[2].pixels())
            .zip(
                out.channels()[0]
                    .pixels()
                    .iter()
                    .chain(out.channels()[1].pixels())
                    .chain(out.channels()[2].pixels()),
            )
            .filter(|(a, b)| a != b)
            .count();
        let frac = changed as f64 / img.sample_count() as f64;
        assert!((frac - 0.5).abs() < 0.005, "changed fraction {frac}");
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let img = gradient_rgb(40, 30);
        let p = StegoParams::new(0.3, 5).unwrap();
        let (a, ta) = embed_lsb_traced(&img, &p);
        let (b, tb) = embed_lsb_traced(&img, &p);
        assert_eq!((a, ta.clone()), (b, tb));
        let (_, tc) = embed_lsb_traced(&img, &StegoParams::new(0.3, 6).unwrap());
        let mut pa = ta.positions.clone();
        let mut pc = tc.positions;
        pa.sort_unstable();
        pc.sort_unstable();
        assert_ne!(pa, pc);
    }

    #[test]
    fn positions_are_distinct_and_counted_exactly() {
        let img = gradient_rgb(37, 11);
        for level in [0.0, 0.1, 0.25, 0.5, 0.999, 1.0] {
            let p = StegoParams::new(level, 3).unwrap();
            let (out, trace) = embed_lsb_traced(&img, &p);
            let n = (level * img.sample_count() as f64).floor() as usize;
            assert_eq!(trace.positions.len(), n);
            let mut sorted = trace.positions.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), n);
            for (c, (a, b)) in img.channels().iter().zip(out.channels()).enumerate() {
                for (i, (&x, &y)) in a.pixels().iter().zip(b.pixels()).enumerate() {
                    assert!(x >> 1 == y >> 1, "channel {c} pixel {i}");
                }
            }
        }
    }

    #[test]
    fn prefix_property_of_randomized_positions() {
        let img = gradient_rgb(20, 20);
        let (_, small) = embed_lsb_traced(&img, &StegoParams::new(0.2, 9).unwrap());
        let (_, large) = embed_lsb_traced(&img, &StegoParams::new(0.6, 9).unwrap());
        assert_eq!(small.positions, large.positions[..small.positions.len()]);
        assert_eq!(small.bits, large.bits[..small.bits.len()]);
    }

    #[test]
    fn sequential_order_fills_red_first() {
        let img = gradient_rgb(10, 10);
        let p = StegoParams::with_order(0.2, 1, EmbedOrder::Sequential).unwrap();
        let (out, trace) = embed_lsb_traced(&img, &p);
        assert_eq!(trace.positions, (0..60).collect::<Vec<_>>());
        assert_eq!(out.channels()[1], img.channels()[1]);
        assert_eq!(out.channels()[2], img.channels()[2]);
    }

    #[test]
    fn extraction_examples() {
        let img = Image::Gray(ImagePlane::new(2, 1, vec![2, 3]).unwrap());
        assert_eq!(extract_lsb_plane(&img).bits, vec![0, 1]);
        let even = Image::Gray(ImagePlane::from_fn(8, 8, |x, y| (2 * (x + y)) as u8).unwrap());
        assert!(extract_lsb_plane(&even).bits.iter().all(|&b| b == 0));
        assert_eq!(pack_bits(&[1, 0, 1, 0, 1, 0, 1, 0, 1]), vec![0xAA, 0x80]);
    }

    #[test]
    fn extraction_reads_back_embedded_bits() {
        let img = gradient_rgb(24, 16);
        let p = StegoParams::new(1.0, 11).unwrap();
        let (out, trace) = embed_lsb_traced(&img, &p);
        let plane = extract_lsb_plane(&out);
        for (&pos, &bit) in trace.positions.iter().zip(&trace.bits) {
            assert_eq!(plane.bits[pos], bit);
        }
        // Independent replay of the payload stream.
        let mut data = SplitMix64::new(11);
        let replay: Vec<u8> = (0..trace.bits.len()).map(|_| (data.next_u64() >> 63) as u8).collect();
        assert_eq!(replay, trace.bits);
    }
}
