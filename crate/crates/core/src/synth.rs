//! Seeded synthetic corpora: smooth "natural-statistics" images with a
//! controllable LSB bias, and byte streams from eight content families.

use std::io::Write as _;

use flate2::write::DeflateEncoder;
use flate2::Compression;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::imageio::{Image, ImagePlane, RgbImage};

/// Parameters for [`natural_image`].
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalImageSpec {
    pub width: usize,
    pub height: usize,
    /// 1 (grayscale) or 3 (RGB).
    pub channels: usize,
    /// Target fraction of even samples.
    pub even_probability: f64,
    /// Spacing of the coarse random grid, in pixels.
    pub grid: usize,
    /// Standard deviation of the additive sensor-like noise.
    pub noise_sigma: f64,
}

impl NaturalImageSpec {
    pub fn rgb(width: usize, height: usize, even_probability: f64) -> Self {
        Self {
            width,
            height,
            channels: 3,
            even_probability,
            grid: 48,
            noise_sigma: 1.5,
        }
    }
}

fn coarse_grid(rng: &mut ChaCha8Rng, gw: usize, gh: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..gw * gh).map(|_| rng.random_range(lo..hi)).collect()
}

fn bilinear(grid: &[f64], gw: usize, spacing: usize, x: usize, y: usize) -> f64 {
    let fx = x as f64 / spacing as f64;
    let fy = y as f64 / spacing as f64;
    let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
    let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
    let at = |gx: usize, gy: usize| grid[gy * gw + gx];
    let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1, y0) * tx;
    let bottom = at(x0, y0 + 1) * (1.0 - tx) + at(x0 + 1, y0 + 1) * tx;
    top * (1.0 - ty) + bottom * ty
}

/// Smooth random field (bilinear interpolation of a coarse random grid plus
/// Gaussian noise, quantised to 8 bits) whose LSBs are then biased: a random
/// fraction of samples is floored to even (or raised to odd) so that each
/// LSB is independently 0 with probability `even_probability`.
pub fn natural_image(spec: &NaturalImageSpec, seed: u64) -> Result<Image> {
    if !(spec.channels == 1 || spec.channels == 3) {
        return Err(Error::InvalidConfig("channels must be 1 or 3".into()));
    }
    if spec.width == 0 || spec.height == 0 || spec.grid == 0 {
        return Err(Error::InvalidConfig("image dimensions and grid must be positive".into()));
    }
    if !(0.0..=1.0).contains(&spec.even_probability) {
        return Err(Error::OutOfRange {
            name: "even_probability",
            value: spec.even_probability,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0))
        .map_err(|e| Error::InvalidConfig(format!("noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gw = spec.width / spec.grid + 2;
    let gh = spec.height / spec.grid + 2;
    let luminance = coarse_grid(&mut rng, gw, gh, 50.0, 205.0);
    let (force_even, fraction) = if spec.even_probability >= 0.5 {
        (true, 2.0 * spec.even_probability - 1.0)
    } else {
        (false, 1.0 - 2.0 * spec.even_probability)
    };

    let mut planes = Vec::with_capacity(spec.channels);
    for _ in 0..spec.channels {
        let tint = coarse_grid(&mut rng, gw, gh, -25.0, 25.0);
        let mut pixels = Vec::with_capacity(spec.width * spec.height);
        for y in 0..spec.height {
            for x in 0..spec.width {
                let base = bilinear(&luminance, gw, spec.grid, x, y) + bilinear(&tint, gw, spec.grid, x, y);
                let mut v = (base + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8;
                if rng.random::<f64>() < fraction {
                    v = if force_even { v & !1 } else { v | 1 };
                }
                pixels.push(v);
            }
        }
        planes.push(ImagePlane::new(spec.width, spec.height, pixels)?);
    }
    Ok(match spec.channels {
        1 => Image::Gray(planes.remove(0)),
        _ => {
            let b = planes.pop().expect("three planes");
            let g = planes.pop().expect("three planes");
            let r = planes.pop().expect("three planes");
            Image::Rgb(RgbImage::new(r, g, b)?)
        }
    })
}

/// Content families for the byte-stream classification corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ByteClass {
    EnglishText,
    SourceCode,
    UniformRandom,
    Deflate,
    Raster,
    Records,
    SparseBits,
    Pcm16,
}

impl ByteClass {
    pub const ALL: [ByteClass; 8] = [
        ByteClass::EnglishText,
        ByteClass::SourceCode,
        ByteClass::UniformRandom,
        ByteClass::Deflate,
        ByteClass::Raster,
        ByteClass::Records,
        ByteClass::SparseBits,
        ByteClass::Pcm16,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ByteClass::EnglishText => "text",
            ByteClass::SourceCode => "code",
            ByteClass::UniformRandom => "random",
            ByteClass::Deflate => "deflate",
            ByteClass::Raster => "raster",
            ByteClass::Records => "records",
            ByteClass::SparseBits => "sparse",
            ByteClass::Pcm16 => "pcm16",
        }
    }
}

const WORDS: &[&str] = &[
    "the", "of", "and", "to", "in", "is", "was", "that", "for", "it", "as", "with", "be", "on", "not", "he",
    "this", "are", "or", "his", "from", "at", "which", "but", "by", "have", "an", "they", "you", "were",
    "her", "she", "there", "would", "their", "we", "him", "been", "has", "when", "who", "will", "more",
    "no", "if", "out", "so", "said", "what", "up", "its", "about", "than", "into", "them", "can", "only",
    "other", "new", "some", "could", "time", "these", "two", "may", "then", "do", "first", "any", "my",
    "now", "such", "like", "our", "over", "man", "me", "even", "most", "made", "after", "also", "did",
    "many", "before", "must", "through", "back", "years", "where", "much", "your", "way", "well", "down",
    "should", "because", "each", "just", "those", "people", "how", "too", "little", "state", "good",
    "very", "make", "world", "still", "own", "see", "men", "work", "long", "get", "here", "between",
    "both", "life", "being", "under", "never", "day", "same", "another", "know", "while", "last",
    "might", "great", "old", "year", "off", "come", "since", "against", "go", "came", "right", "used",
    "take", "three", "image", "river", "window", "measure", "signal", "quiet", "garden", "letter",
];

/// English-like prose from a fixed vocabulary.
pub fn english_text(len: usize, rng: &mut impl Rng) -> Vec<u8> {
    let mut out = String::with_capacity(len + 16);
    let mut sentence_start = true;
    while out.len() < len {
        let word = *WORDS.choose(rng).expect("non-empty vocabulary");
        if sentence_start {
            let mut chars = word.chars();
            if let Some(c) = chars.next() {
                out.push(c.to_ascii_uppercase());
                out.push_str(chars.as_str());
            }
            sentence_start = false;
        } else {
            out.push_str(word);
        }
        let r: f64 = rng.random();
        if r < 0.07 {
            out.push_str(". ");
            sentence_start = true;
        } else if r < 0.12 {
            out.push_str(", ");
        } else if r < 0.13 {
            out.push_str(".\n\n");
            sentence_start = true;
        } else {
            out.push(' ');
        }
    }
    out.truncate(len);
    out.into_bytes()
}

fn source_code(len: usize, rng: &mut impl Rng) -> Vec<u8> {
    const TYPES: &[&str] = &["int", "char", "long", "unsigned", "double", "size_t", "struct node *"];
    const NAMES: &[&str] = &["count", "buf", "len", "idx", "node", "value", "tmp", "result", "ptr", "head"];
    const CALLS: &[&str] = &["malloc", "memcpy", "strlen", "printf", "free", "process", "lookup"];
    let mut out = String::from("#include <stdio.h>\n#include <stdlib.h>\n\n");
    let mut depth = 0usize;
    while out.len() < len {
        let indent = "    ".repeat(depth);
        let name = NAMES.choose(rng).expect("non-empty");
        let other = NAMES.choose(rng).expect("non-empty");
        let line = match rng.random_range(0..9) {
            0 if depth < 3 => {
                depth += 1;
                format!("{indent}for ({name} = 0; {name} < {other}; {name}++) {{\n")
            }
            1 if depth < 3 => {
                depth += 1;
                format!("{indent}if ({name} != NULL && {other} > {}) {{\n", rng.random_range(0..64))
            }
            2 | 3 if depth > 0 => {
                depth -= 1;
                format!("{}}}\n", "    ".repeat(depth))
            }
            4 => format!("{indent}/* update {name} from {other} */\n"),
            5 => format!(
                "{indent}{name} = {}({other}, {});\n",
                CALLS.choose(rng).expect("non-empty"),
                rng.random_range(0..256)
            ),
            6 => format!("{indent}{} {name}_{};\n", TYPES.choose(rng).expect("non-empty"), rng.random_range(0..10)),
            7 => format!("{indent}return {name};\n"),
            _ => format!("{indent}{name} += {other} * {};\n", rng.random_range(1..9)),
        };
        out.push_str(&line);
    }
    out.truncate(len);
    out.into_bytes()
}

fn deflate(len: usize, rng: &mut impl Rng) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let mut enc = DeflateEncoder::new(Vec::new(), Compression::default());
        let chunk = english_text(4 * len + 4096, rng);
        enc.write_all(&chunk).expect("in-memory write");
        out.extend(enc.finish().expect("in-memory deflate"));
    }
    out.truncate(len);
    out
}

fn raster(len: usize, seed: u64) -> Vec<u8> {
    let width = 256;
    let height = len.div_ceil(width).max(4);
    let spec = NaturalImageSpec {
        width,
        height,
        channels: 1,
        even_probability: 0.5,
        grid: 24,
        noise_sigma: 2.0,
    };
    let Image::Gray(plane) = natural_image(&spec, seed).expect("valid raster spec") else {
        unreachable!("one channel requested");
    };
    let mut px = plane.into_pixels();
    px.truncate(len);
    px
}

fn records(len: usize, rng: &mut impl Rng) -> Vec<u8> {
    const TAGS: &[&[u8]] = &[b"sensor", b"valve", b"pump", b"relay", b"meter"];
    let mut out = Vec::with_capacity(len + 32);
    let mut id: u32 = rng.random_range(0..1000);
    while out.len() < len {
        out.extend(id.to_le_bytes());
        out.extend((rng.random_range(0..4u16)).to_le_bytes());
        let tag = TAGS.choose(rng).expect("non-empty");
        let mut name = [0u8; 12];
        name[..tag.len()].copy_from_slice(tag);
        out.extend(name);
        out.extend((rng.random_range(0..500u32) as f32 * 0.5).to_le_bytes());
        out.extend([0u8; 10]);
        id += 1;
    }
    out.truncate(len);
    out
}

fn sparse_bits(len: usize, rng: &mut impl Rng) -> Vec<u8> {
    (0..len)
        .map(|_| (0..8).fold(0u8, |acc, b| acc | (u8::from(rng.random::<f64>() < 0.1) << b)))
        .collect()
}

fn pcm16(len: usize, rng: &mut impl Rng) -> Vec<u8> {
    let freqs: Vec<f64> = (0..3).map(|_| rng.random_range(0.002..0.05)).collect();
    let amps: Vec<f64> = (0..3).map(|_| rng.random_range(1500.0..6000.0)).collect();
    let mut out = Vec::with_capacity(len + 2);
    let mut t = 0.0;
    while out.len() < len {
        let s: f64 = freqs
            .iter()
            .zip(&amps)
            .map(|(f, a)| a * (2.0 * std::f64::consts::PI * f * t).sin())
            .sum::<f64>()
            + rng.random_range(-40.0..40.0);
        out.extend((s as i16).to_le_bytes());
        t += 1.0;
    }
    out.truncate(len);
    out
}

/// `len` bytes of the given family, deterministic in `seed`.
pub fn generate_bytes(class: ByteClass, len: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match class {
        ByteClass::EnglishText => english_text(len, &mut rng),
        ByteClass::SourceCode => source_code(len, &mut rng),
        ByteClass::UniformRandom => (0..len).map(|_| rng.random()).collect(),
        ByteClass::Deflate => deflate(len, &mut rng),
        ByteClass::Raster => raster(len, seed),
        ByteClass::Records => records(len, &mut rng),
        ByteClass::SparseBits => sparse_bits(len, &mut rng),
        ByteClass::Pcm16 => pcm16(len, &mut rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::LsbStats;

    #[test]
    fn natural_image_hits_its_lsb_bias() {
        for p in [0.35, 0.5, 0.65] {
            let img = natural_image(&NaturalImageSpec::rgb(200, 150, p), 3).unwrap();
            let p_hat = LsbStats::measure(&img).p_hat;
            assert!((p_hat - p).abs() < 0.01, "target {p}, measured {p_hat}");
        }
    }

    #[test]
    fn natural_image_is_smooth_and_deterministic() {
        let spec = NaturalImageSpec::rgb(96, 64, 0.65);
        let a = natural_image(&spec, 11).unwrap();
        assert_eq!(a, natural_image(&spec, 11).unwrap());
        assert_ne!(a, natural_image(&spec, 12).unwrap());
        let plane = &a.channels()[0];
        let mean_step: f64 = (1..plane.width())
            .map(|x| (f64::from(plane.get(x, 10)) - f64::from(plane.get(x - 1, 10))).abs())
            .sum::<f64>()
            / (plane.width() - 1) as f64;
        assert!(mean_step < 6.0, "mean horizontal step {mean_step}");
    }

    #[test]
    fn every_class_has_the_requested_length() {
        for class in ByteClass::ALL {
            let bytes = generate_bytes(class, 8000, 1);
            assert_eq!(bytes.len(), 8000, "{}", class.name());
            assert_eq!(bytes, generate_bytes(class, 8000, 1));
        }
    }
}
