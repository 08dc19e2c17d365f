#![allow(dead_code)]

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stegmetrics::bitmeasures::{feature_vector, FeatureVector, MeasureConfig};
use stegmetrics::imageio::Image;
use stegmetrics::stego::{embed_lsb, extract_lsb_plane, StegoParams};
use stegmetrics::synth::{generate_bytes, natural_image, ByteClass, NaturalImageSpec};

pub const DETECTOR_IMAGES: usize = 5;
pub const DETECTOR_P: f64 = 0.65;
pub const SEEDS: [u64; 3] = [11, 23, 37];

/// Five 800x600 RGB covers with LSB bias 0.65.
pub fn detector_corpus() -> &'static [Image] {
    static CORPUS: OnceLock<Vec<Image>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        (0..DETECTOR_IMAGES)
            .map(|m| natural_image(&NaturalImageSpec::rgb(800, 600, DETECTOR_P), 1000 + m as u64).unwrap())
            .collect()
    })
}

/// 256x256 RGB covers whose LSB bias is drawn from [0.62, 0.68].
pub fn lsb_cover(seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1234_5678);
    let p = rng.random_range(0.62..0.68);
    natural_image(&NaturalImageSpec::rgb(256, 256, p), seed).unwrap()
}

/// Feature vectors of every full window of the packed LSB plane.
pub fn lsb_features(image: &Image) -> Vec<FeatureVector> {
    let cfg = MeasureConfig::default();
    extract_lsb_plane(image)
        .to_bytes()
        .chunks_exact(cfg.window_bytes())
        .map(|w| feature_vector(w, &cfg).unwrap())
        .collect()
}

pub fn embedded(image: &Image, level: f64, seed: u64) -> Image {
    embed_lsb(image, &StegoParams::new(level, seed).unwrap())
}

/// One default-size window of a byte class.
pub fn byte_window(class: ByteClass, seed: u64) -> FeatureVector {
    let cfg = MeasureConfig::default();
    feature_vector(&generate_bytes(class, cfg.window_bytes(), seed), &cfg).unwrap()
}

pub fn report(criterion: u32, pass: bool, detail: &str) {
    println!("criterion {criterion:>2}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
}
