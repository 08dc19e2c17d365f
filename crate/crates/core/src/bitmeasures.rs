//! Nine statistical measures over 32-bit words of a byte stream, and the
//! zero-mean unit-variance scaler applied before classification.
//!
//! Words are assembled from 4 consecutive bytes with the first byte's most
//! significant bit as bit `a0`. The five per-word measures are averaged over
//! a window; the four gram entropies are taken over the window's whole
//! bitstream.

use std::f64::consts::PI;
use std::sync::LazyLock;

use crate::error::{Error, Result};

pub const FEATURE_DIM: usize = 9;

/// One 32-bit word `a0 .. a31`, `a0` being the most significant bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Word32(pub u32);

impl Word32 {
    pub fn from_bytes(bytes: [u8; 4]) -> Self {
        Word32(u32::from_be_bytes(bytes))
    }

    /// Bit `a_j`.
    pub fn bit(self, j: usize) -> u32 {
        (self.0 >> (31 - j)) & 1
    }

    /// Byte `b_i`, bits `8i .. 8i+7`.
    pub fn byte(self, i: usize) -> u8 {
        self.0.to_be_bytes()[i]
    }
}

/// The measure vector for one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn zeros() -> Self {
        FeatureVector([0.0; FEATURE_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<[f64; FEATURE_DIM]> for FeatureVector {
    fn from(v: [f64; FEATURE_DIM]) -> Self {
        FeatureVector(v)
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureConfig {
    /// Number of 32-bit words read from each window.
    pub window_words: usize,
    /// Multipliers for the 1..4-gram entropies.
    pub entropy_weights: [f64; 4],
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            window_words: 2000,
            entropy_weights: [16.0, 256.0, 4096.0, 65536.0],
        }
    }
}

impl MeasureConfig {
    pub fn with_window_words(window_words: usize) -> Self {
        Self {
            window_words,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_words == 0 {
            return Err(Error::InvalidConfig("window_words must be at least 1".into()));
        }
        if self.entropy_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidConfig("entropy weights must be positive".into()));
        }
        Ok(())
    }

    pub fn window_bytes(&self) -> usize {
        4 * self.window_words
    }
}

/// Weighted range of overlapping k-gram frequencies, k = 1..4.
pub fn mu1(word: Word32) -> f64 {
    let w = word.0;
    let mut total = 0.0;
    for k in 1..=4u32 {
        let mask = (1u32 << k) - 1;
        let mut counts = [0u32; 16];
        for t in 0..=(32 - k) {
            counts[((w >> (32 - k - t)) & mask) as usize] += 1;
        }
        let patterns = &counts[..1 << k];
        let max = patterns.iter().max().copied().unwrap_or(0);
        let min = patterns.iter().min().copied().unwrap_or(0);
        total += f64::from(max - min) * f64::from(1u32 << (4 * (k + 1)));
    }
    total
}

/// Sum of `2^l` over the maximal runs of equal bits.
pub fn mu2(word: Word32) -> f64 {
    run_lengths(word).iter().map(|&l| 2f64.powi(l as i32)).sum()
}

/// Lengths of the maximal runs of equal bits, in order.
pub fn run_lengths(word: Word32) -> Vec<u32> {
    let mut runs = Vec::new();
    let mut len = 1;
    for j in 1..32 {
        if word.bit(j) == word.bit(j - 1) {
            len += 1;
        } else {
            runs.push(len);
            len = 1;
        }
    }
    runs.push(len);
    runs
}

/// Byte-wise Hamming weight transitions.
pub fn mu3(word: Word32) -> f64 {
    let b = word.0.to_be_bytes();
    let pow = |x: u8| f64::from(1u32 << x.count_ones());
    pow(b[0]) + pow(b[0] ^ b[1]) + pow(b[1] ^ b[2]) + pow(b[2] ^ b[3])
}

/// Autocorrelation `c_i = (sum_j a_j & a_{j+i}) mod 32`.
pub fn autocorrelation(word: Word32) -> [u32; 32] {
    let w = word.0;
    let mut c = [0u32; 32];
    c[0] = w.count_ones() % 32;
    for (i, ci) in c.iter_mut().enumerate().skip(1) {
        // (w << i) aligns a_{j+i} with a_j.
        *ci = (w & (w << i)).count_ones() % 32;
    }
    c
}

static TWIDDLES: LazyLock<[(f64, f64); 32]> = LazyLock::new(|| {
    std::array::from_fn(|m| {
        let theta = -2.0 * PI * m as f64 / 32.0;
        (theta.cos(), theta.sin())
    })
});

/// Root-sum-square of the 32-point DFT of the autocorrelation.
pub fn mu4(word: Word32) -> f64 {
    let c = autocorrelation(word);
    let tw = &*TWIDDLES;
    let mut energy = 0.0;
    for k in 0..32 {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, &cj) in c.iter().enumerate() {
            let (cos, sin) = tw[(j * k) % 32];
            re += f64::from(cj) * cos;
            im += f64::from(cj) * sin;
        }
        energy += re * re + im * im;
    }
    energy.sqrt()
}

/// `y = H x` for the 8x8 Sylvester Hadamard matrix, `x_k` the k-th bit from the MSB.
pub fn hadamard_byte(byte: u8) -> [i32; 8] {
    let mut y: [i32; 8] = std::array::from_fn(|k| i32::from((byte >> (7 - k)) & 1));
    let mut h = 1;
    while h < 8 {
        for start in (0..8).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (y[i], y[i + h]);
                y[i] = a + b;
                y[i + h] = a - b;
            }
        }
        h *= 2;
    }
    y
}

/// Mean over the word's bytes of the non-DC Hadamard magnitudes.
pub fn mu5(word: Word32) -> f64 {
    let total: i32 = word
        .0
        .to_be_bytes()
        .iter()
        .map(|&b| hadamard_byte(b)[1..].iter().map(|v| v.abs()).sum::<i32>())
        .sum();
    f64::from(total) / 4.0
}

/// Weighted base-2 entropies of overlapping 1..4-gram distributions over the
/// window's bitstream (MSB first, no wraparound).
pub fn gram_entropies(window: &[u8], config: &MeasureConfig) -> Result<[f64; 4]> {
    let n_bits = window.len() * 8;
    if n_bits < 4 {
        return Err(Error::WindowTooShort {
            needed: 1,
            got: window.len(),
        });
    }
    let mut counts = [[0u64; 16]; 4];
    let mut reg = 0usize;
    let mut seen = 0usize;
    for &byte in window {
        for shift in (0..8).rev() {
            reg = ((reg << 1) | usize::from((byte >> shift) & 1)) & 0xF;
            seen += 1;
            for k in 1..=seen.min(4) {
                counts[k - 1][reg & ((1 << k) - 1)] += 1;
            }
        }
    }
    let mut out = [0.0; 4];
    for k in 1..=4 {
        let total = (n_bits - k + 1) as f64;
        let entropy: f64 = counts[k - 1]
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / total;
                -p * p.log2()
            })
            .sum();
        out[k - 1] = config.entropy_weights[k - 1] * entropy.max(0.0);
    }
    Ok(out)
}

/// The nine measures over the first `config.window_words` words of `window`.
pub fn feature_vector(window: &[u8], config: &MeasureConfig) -> Result<FeatureVector> {
    config.validate()?;
    let needed = config.window_bytes();
    if window.len() < needed {
        return Err(Error::WindowTooShort {
            needed,
            got: window.len(),
        });
    }
    let bytes = &window[..needed];
    let mut sums = [0.0; 5];
    for chunk in bytes.chunks_exact(4) {
        let w = Word32::from_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        sums[0] += mu1(w);
        sums[1] += mu2(w);
        sums[2] += mu3(w);
        sums[3] += mu4(w);
        sums[4] += mu5(w);
    }
    let n = config.window_words as f64;
    let entropies = gram_entropies(bytes, config)?;
    let mut mu = [0.0; FEATURE_DIM];
    for (dst, s) in mu.iter_mut().zip(sums) {
        *dst = s / n;
    }
    mu[5..].copy_from_slice(&entropies);
    Ok(FeatureVector(mu))
}

/// Per-dimension centring and scaling fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub means: [f64; FEATURE_DIM],
    pub stddevs: [f64; FEATURE_DIM],
}

impl Scaler {
    pub fn identity() -> Self {
        Self {
            means: [0.0; FEATURE_DIM],
            stddevs: [1.0; FEATURE_DIM],
        }
    }

    /// Sample mean and population standard deviation per dimension.
    pub fn fit(vectors: &[FeatureVector]) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(Error::TooFewVectors {
                needed: 2,
                got: vectors.len(),
            });
        }
        let n = vectors.len() as f64;
        let mut means = [0.0; FEATURE_DIM];
        let mut stddevs = [0.0; FEATURE_DIM];
        for d in 0..FEATURE_DIM {
            let mean = vectors.iter().map(|v| v.0[d]).sum::<f64>() / n;
            let var = vectors.iter().map(|v| (v.0[d] - mean).powi(2)).sum::<f64>() / n;
            means[d] = mean;
            stddevs[d] = var.sqrt();
        }
        Ok(Self { means, stddevs })
    }

    /// Dimensions with zero spread map to 0.
    pub fn apply(&self, v: &FeatureVector) -> FeatureVector {
        FeatureVector(std::array::from_fn(|d| {
            if self.stddevs[d] > 0.0 {
                (v.0[d] - self.means[d]) / self.stddevs[d]
            } else {
                0.0
            }
        }))
    }
}
