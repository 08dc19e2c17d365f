//! Forced-embedding detector.
//!
//! A suspect image `S_k` is embedded again at a known level `i` to give
//! `S_ki`; the perturbation between the two second-level LL planes is
//! summarised as `eta` (normalised count of changed 4x4 blocks) and `gamma`
//! (LL signal-to-noise ratio in dB). A closed-form model predicts the
//! probability that one block's LL coefficient changes, and calibration
//! curves of mean `eta` against `k` invert a measurement into an estimate.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imageio::{Image, ImagePlane};
use crate::rng::derive_seed;
use crate::stego::{embed_lsb, extract_lsb_plane, StegoParams};
use crate::wavelet::ll_band;

/// Normalisation factor in `eta = X0 * 500 / pixels`.
pub const ETA_SCALE: f64 = 500.0;

/// Default number of forced embeddings averaged per calibration/estimate reading.
pub const DEFAULT_REPEATS: usize = 8;

const START_TAG: u64 = 0x0053_5441_5254;
const FORCED_TAG: u64 = 0x464F_5243_4544;
const ESTIMATE_TAG: u64 = 0x4553_5449_4D41_5445;

/// Per-block difference counts between two planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlockDiffStats {
    /// Blocks whose pixel sum changed.
    pub x0: u64,
    /// Sum over blocks of `|d|`.
    pub x1: u64,
    /// Sum over blocks of `d`, where `d = sum(base - modified)`.
    pub x2: i64,
    pub blocks_total: u64,
}

fn check_same_dims(base: &ImagePlane, modified: &ImagePlane) -> Result<()> {
    if (base.width(), base.height()) != (modified.width(), modified.height()) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            base.width(),
            base.height(),
            modified.width(),
            modified.height()
        )));
    }
    Ok(())
}

pub fn block_diff_stats(base: &ImagePlane, modified: &ImagePlane) -> Result<BlockDiffStats> {
    check_same_dims(base, modified)?;
    let (w, h) = (base.width(), base.height());
    if w < 4 || h < 4 {
        return Err(Error::PlaneTooSmall { width: w, height: h });
    }
    let (a, b) = (base.pixels(), modified.pixels());
    let mut stats = BlockDiffStats {
        blocks_total: ((w / 4) * (h / 4)) as u64,
        ..Default::default()
    };
    for by in 0..h / 4 {
        for bx in 0..w / 4 {
            let mut d = 0i64;
            for dy in 0..4 {
                let start = (4 * by + dy) * w + 4 * bx;
                for (&u, &v) in a[start..start + 4].iter().zip(&b[start..start + 4]) {
                    d += i64::from(u) - i64::from(v);
                }
            }
            if d != 0 {
                stats.x0 += 1;
            }
            stats.x1 += d.unsigned_abs();
            stats.x2 += d;
        }
    }
    Ok(stats)
}

/// `eta = (sum of x0 over channels) * 500 / (width * height)`.
pub fn eta(stats_per_channel: &[BlockDiffStats], width: usize, height: usize) -> Result<f64> {
    if stats_per_channel.is_empty() {
        return Err(Error::EmptyInput("channel statistics"));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage("zero image dimension".into()));
    }
    let x0: u64 = stats_per_channel.iter().map(|s| s.x0).sum();
    Ok(x0 as f64 * ETA_SCALE / (width * height) as f64)
}

/// SNR in dB between two LL planes; `+inf` when they are identical and
/// `-inf` when the base plane is all zero but the noise is not.
pub fn snr_of_planes(base_ll: &[f64], modified_ll: &[f64]) -> f64 {
    let signal: f64 = base_ll.iter().map(|c| c * c).sum();
    let noise: f64 = base_ll
        .iter()
        .zip(modified_ll)
        .map(|(c, m)| (c - m) * (c - m))
        .sum();
    if noise == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (signal / noise).log10()
    }
}

pub fn snr_ll(base: &ImagePlane, modified: &ImagePlane) -> Result<f64> {
    check_same_dims(base, modified)?;
    Ok(snr_of_planes(&ll_band(base)?, &ll_band(modified)?))
}

/// Mean of per-channel dB values. Noiseless channels are left out unless
/// every channel is noiseless, in which case the result is `+inf`.
pub fn combine_gamma(per_channel: &[f64]) -> f64 {
    let finite: Vec<f64> = per_channel
        .iter()
        .copied()
        .filter(|g| *g != f64::INFINITY)
        .collect();
    if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    }
}

/// Measured fraction of even (LSB = 0) samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsbStats {
    pub p_hat: f64,
}

impl LsbStats {
    pub fn measure(image: &Image) -> Self {
        let plane = extract_lsb_plane(image);
        let zeros = plane.bits.iter().filter(|&&b| b == 0).count();
        Self {
            p_hat: zeros as f64 / plane.bits.len() as f64,
        }
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            lo: 0.0,
            hi: 1.0,
        })
    }
}

/// The even-LSB probability chain: cover `p`, start image `p'`, forced image `p''`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticModel {
    pub p: f64,
    pub k: f64,
    pub i: f64,
}

impl AnalyticModel {
    pub fn new(p: f64, k: f64, i: f64) -> Result<Self> {
        Ok(Self {
            p: check_unit("p", p)?,
            k: check_unit("k", k)?,
            i: check_unit("i", i)?,
        })
    }

    pub fn p_prime(&self) -> f64 {
        self.k / 2.0 + (1.0 - self.k) * self.p
    }

    pub fn p_double_prime(&self) -> f64 {
        self.i / 2.0 + (1.0 - self.i) * self.p_prime()
    }

    /// Probability that one block's LL coefficient changes.
    pub fn pr(&self) -> f64 {
        pr_from_q(self.i, q_of(self.p_prime()))
    }
}

/// `(p', p'')` for cover probability `p`, start level `k`, forced level `i`.
pub fn p_prime_chain(p: f64, k: f64, i: f64) -> Result<(f64, f64)> {
    let m = AnalyticModel::new(p, k, i)?;
    Ok((m.p_prime(), m.p_double_prime()))
}

fn q_of(p_prime: f64) -> f64 {
    p_prime * (1.0 - p_prime)
}

const BINOM_16_EVEN: [f64; 9] = [1.0, 120.0, 1820.0, 8008.0, 12870.0, 8008.0, 1820.0, 120.0, 1.0];
const CENTRAL_BINOM: [f64; 9] = [1.0, 2.0, 6.0, 20.0, 70.0, 252.0, 924.0, 3432.0, 12870.0];

fn pr_from_q(i: f64, q: f64) -> f64 {
    // A block is unchanged when the replaced pixels that actually flip split
    // evenly between +1 and -1: 2m flips, m of each sign.
    let a = i / 2.0;
    let unchanged: f64 = (0..9)
        .map(|m| {
            BINOM_16_EVEN[m]
                * CENTRAL_BINOM[m]
                * a.powi(2 * m as i32)
                * (1.0 - a).powi(16 - 2 * m as i32)
                * q.powi(m as i32)
        })
        .sum();
    (1.0 - unchanged).clamp(0.0, 1.0)
}

/// Closed-form probability that a 4x4 block's LL coefficient changes under
/// forced embedding at level `i` when each LSB is 0 with probability `p_prime`.
pub fn analytic_pr(i: f64, p_prime: f64) -> Result<f64> {
    let i = check_unit("i", i)?;
    let p_prime = check_unit("p_prime", p_prime)?;
    Ok(pr_from_q(i, q_of(p_prime)))
}

/// The same probability parameterised by `q = p'(1 - p') in [0, 1/4]`.
pub fn analytic_pr_q(i: f64, q: f64) -> Result<f64> {
    let i = check_unit("i", i)?;
    if !(0.0..=0.25).contains(&q) {
        return Err(Error::OutOfRange {
            name: "q",
            value: q,
            lo: 0.0,
            hi: 0.25,
        });
    }
    Ok(pr_from_q(i, q))
}

/// Model prediction of `eta` for an image of the given shape.
pub fn expected_eta(i: f64, p_prime: f64, channels: usize, width: usize, height: usize) -> Result<f64> {
    let pr = analytic_pr(i, p_prime)?;
    expected_eta_from_pr(pr, channels, width, height)
}

pub fn expected_eta_from_pr(pr: f64, channels: usize, width: usize, height: usize) -> Result<f64> {
    check_shape(channels, width, height)?;
    let blocks = (channels * (width / 4) * (height / 4)) as f64;
    Ok(blocks * pr * ETA_SCALE / (width * height) as f64)
}

/// Binomial standard deviation of a measured `eta` around its expectation.
pub fn eta_sigma(pr: f64, channels: usize, width: usize, height: usize) -> Result<f64> {
    check_shape(channels, width, height)?;
    let blocks = (channels * (width / 4) * (height / 4)) as f64;
    Ok(ETA_SCALE / (width * height) as f64 * (blocks * pr * (1.0 - pr)).sqrt())
}

fn check_shape(channels: usize, width: usize, height: usize) -> Result<()> {
    if !(channels == 1 || channels == 3) {
        return Err(Error::InvalidConfig(format!("channels must be 1 or 3, got {channels}")));
    }
    if width < 4 || height < 4 {
        return Err(Error::PlaneTooSmall { width, height });
    }
    Ok(())
}

/// One point of an eta-versus-i curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaReading {
    pub i: f64,
    pub eta: f64,
    pub gamma_db: f64,
}

/// Compares a start image with its forced embedding.
pub fn compare(start: &Image, forced: &Image) -> Result<EtaReading> {
    if start.channel_count() != forced.channel_count() {
        return Err(Error::DimensionMismatch("channel count differs".into()));
    }
    let mut stats = Vec::with_capacity(start.channel_count());
    let mut gammas = Vec::with_capacity(start.channel_count());
    for (a, b) in start.channels().iter().zip(forced.channels()) {
        stats.push(block_diff_stats(a, b)?);
        gammas.push(snr_ll(a, b)?);
    }
    Ok(EtaReading {
        i: f64::NAN,
        eta: eta(&stats, start.width(), start.height())?,
        gamma_db: combine_gamma(&gammas),
    })
}

/// Forces an embedding at level `i` with `seed` and measures the result.
pub fn forced_reading(start: &Image, i: f64, seed: u64) -> Result<EtaReading> {
    let params = StegoParams::new(i, seed)?;
    let forced = embed_lsb(start, &params);
    Ok(EtaReading {
        i,
        ..compare(start, &forced)?
    })
}

/// Mean reading over `repeats` forced embeddings with seeds
/// `derive_seed(seed, [r])`.
pub fn averaged_reading(start: &Image, i: f64, seed: u64, repeats: usize) -> Result<EtaReading> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".into()));
    }
    let readings = (0..repeats)
        .map(|r| forced_reading(start, i, derive_seed(seed, &[r as u64])))
        .collect::<Result<Vec<_>>>()?;
    let n = repeats as f64;
    Ok(EtaReading {
        i,
        eta: readings.iter().map(|r| r.eta).sum::<f64>() / n,
        gamma_db: readings.iter().map(|r| r.gamma_db).sum::<f64>() / n,
    })
}

fn check_levels(levels: &[f64], name: &'static str) -> Result<()> {
    for &v in levels {
        check_unit(name, v)?;
    }
    if levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig(format!("{name} levels must be sorted ascending")));
    }
    Ok(())
}

/// `eta` and `gamma` for each forced level, treating `image` as the start image.
/// The forced embedding at index `n` uses `derive_seed(seed, [n])`.
pub fn forced_embedding_curve(image: &Image, i_levels: &[f64], seed: u64) -> Result<Vec<EtaReading>> {
    check_levels(i_levels, "i")?;
    i_levels
        .par_iter()
        .enumerate()
        .map(|(n, &i)| forced_reading(image, i, derive_seed(seed, &[n as u64])))
        .collect()
}

/// Readings for every `(k, i)` pair of one cover, indexed `[k][i]`.
///
/// All start images use `derive_seed(seed, [START])`, so they are nested in
/// `k`; the forced embedding at i-index `n` uses `derive_seed(seed, [FORCED, n])`
/// whatever the start level.
pub fn eta_grid(cover: &Image, k_grid: &[f64], i_levels: &[f64], seed: u64) -> Result<Vec<Vec<EtaReading>>> {
    check_levels(k_grid, "k")?;
    check_levels(i_levels, "i")?;
    let forced_seed = derive_seed(seed, &[FORCED_TAG]);
    k_grid
        .par_iter()
        .map(|&k| forced_embedding_curve(&start_image(cover, k, seed)?, i_levels, forced_seed))
        .collect()
}

/// The start image `S_k` that [`eta_grid`] builds from `cover`.
pub fn start_image(cover: &Image, k: f64, seed: u64) -> Result<Image> {
    Ok(embed_lsb(cover, &StegoParams::new(k, derive_seed(seed, &[START_TAG]))?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub k: f64,
    pub mean_eta: f64,
    pub mean_gamma_db: f64,
}

/// Mean `eta` against start level `k` at one fixed forced level.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCurve {
    pub i_fixed: f64,
    pub points: Vec<CurvePoint>,
    /// Channel count of the calibration images, when known.
    pub channels: Option<usize>,
}

impl CalibrationCurve {
    pub fn new(i_fixed: f64, points: Vec<CurvePoint>, channels: Option<usize>) -> Result<Self> {
        check_unit("i_fixed", i_fixed)?;
        if points.len() < 2 {
            return Err(Error::InvalidConfig("a calibration curve needs at least 2 points".into()));
        }
        if points.windows(2).any(|w| w[1].k <= w[0].k) {
            return Err(Error::UnsortedGrid);
        }
        Ok(Self {
            i_fixed,
            points,
            channels,
        })
    }

    fn check_monotone(&self) -> Result<()> {
        let inc = self.points.windows(2).all(|w| w[1].mean_eta > w[0].mean_eta);
        let dec = self.points.windows(2).all(|w| w[1].mean_eta < w[0].mean_eta);
        if inc || dec {
            Ok(())
        } else {
            Err(Error::NonMonotoneCurve)
        }
    }

    /// Piecewise-linear inverse of the curve, clamped to its `k` range.
    pub fn invert(&self, eta: f64) -> Result<f64> {
        self.check_monotone()?;
        let pts = &self.points;
        let increasing = pts[1].mean_eta > pts[0].mean_eta;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        let below_first = if increasing { eta <= first.mean_eta } else { eta >= first.mean_eta };
        let beyond_last = if increasing { eta >= last.mean_eta } else { eta <= last.mean_eta };
        if below_first {
            return Ok(first.k);
        }
        if beyond_last {
            return Ok(last.k);
        }
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let inside = if increasing {
                eta >= a.mean_eta && eta <= b.mean_eta
            } else {
                eta <= a.mean_eta && eta >= b.mean_eta
            };
            if inside {
                let t = (eta - a.mean_eta) / (b.mean_eta - a.mean_eta);
                return Ok(a.k + t * (b.k - a.k));
            }
        }
        Ok(last.k)
    }
}

/// Per-image readings behind a calibration curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRun {
    pub curve: CalibrationCurve,
    /// `per_image[image][k_index]`.
    pub per_image: Vec<Vec<EtaReading>>,
}

impl CalibrationRun {
    /// The curve averaged over a subset of the images.
    pub fn curve_over(&self, images: &[usize]) -> Result<CalibrationCurve> {
        if images.is_empty() {
            return Err(Error::EmptyInput("calibration images"));
        }
        let n = images.len() as f64;
        let points = self
            .curve
            .points
            .iter()
            .enumerate()
            .map(|(ki, p)| CurvePoint {
                k: p.k,
                mean_eta: images.iter().map(|&m| self.per_image[m][ki].eta).sum::<f64>() / n,
                mean_gamma_db: images.iter().map(|&m| self.per_image[m][ki].gamma_db).sum::<f64>() / n,
            })
            .collect();
        CalibrationCurve::new(self.curve.i_fixed, points, self.curve.channels)
    }
}

/// Builds the mean-eta curve over `images` (treated as covers).
///
/// For image `m`, every start image `S_k` is embedded with the seed
/// `derive_seed(seed, [START, m])` and every forced embedding `r` uses
/// `derive_seed(seed, [FORCED, m, r])`; because randomized positions form
/// a prefix-stable shuffle, the `S_k` are nested and the curve differences
/// along `k` are not swamped by embedding noise.
pub fn calibrate_detailed(
    images: &[Image],
    k_grid: &[f64],
    i_fixed: f64,
    seed: u64,
    repeats: usize,
) -> Result<CalibrationRun> {
    if images.is_empty() {
        return Err(Error::EmptyInput("calibration images"));
    }
    if k_grid.is_empty() {
        return Err(Error::EmptyInput("k grid"));
    }
    check_levels(k_grid, "k")?;
    check_unit("i_fixed", i_fixed)?;
    let channels = images[0].channel_count();
    if images.iter().any(|img| img.channel_count() != channels) {
        return Err(Error::DimensionMismatch("calibration images mix channel counts".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..images.len())
        .flat_map(|m| (0..k_grid.len()).map(move |ki| (m, ki)))
        .collect();
    let readings = jobs
        .par_iter()
        .map(|&(m, ki)| {
            let start_seed = derive_seed(seed, &[START_TAG, m as u64]);
            let start = embed_lsb(&images[m], &StegoParams::new(k_grid[ki], start_seed)?);
            averaged_reading(&start, i_fixed, derive_seed(seed, &[FORCED_TAG, m as u64]), repeats)
        })
        .collect::<Result<Vec<_>>>()?;
    let per_image: Vec<Vec<EtaReading>> = readings
        .chunks(k_grid.len())
        .map(<[EtaReading]>::to_vec)
        .collect();
    let n = images.len() as f64;
    let points: Vec<CurvePoint> = k_grid
        .iter()
        .enumerate()
        .map(|(ki, &k)| CurvePoint {
            k,
            mean_eta: per_image.iter().map(|r| r[ki].eta).sum::<f64>() / n,
            mean_gamma_db: per_image.iter().map(|r| r[ki].gamma_db).sum::<f64>() / n,
        })
        .collect();
    let curve = if points.len() == 1 {
        // A single-point curve is valid output, not a usable inverse.
        CalibrationCurve {
            i_fixed,
            points,
            channels: Some(channels),
        }
    } else {
        CalibrationCurve::new(i_fixed, points, Some(channels))?
    };
    Ok(CalibrationRun { curve, per_image })
}

pub fn calibrate(
    images: &[Image],
    k_grid: &[f64],
    i_fixed: f64,
    seed: u64,
    repeats: usize,
) -> Result<CalibrationCurve> {
    Ok(calibrate_detailed(images, k_grid, i_fixed, seed, repeats)?.curve)
}

/// Mean `eta` of `image` at the curve's forced level.
pub fn measure_at(image: &Image, i_fixed: f64, seed: u64, repeats: usize) -> Result<f64> {
    Ok(averaged_reading(image, i_fixed, derive_seed(seed, &[ESTIMATE_TAG]), repeats)?.eta)
}

/// Estimates the start level `k` of `image` by inverting a calibration curve.
pub fn estimate_k(image: &Image, curve: &CalibrationCurve, seed: u64, repeats: usize) -> Result<f64> {
    curve.check_monotone()?;
    if curve.points.len() < 2 {
        return Err(Error::InvalidConfig("a calibration curve needs at least 2 points".into()));
    }
    if let Some(ch) = curve.channels {
        if ch != image.channel_count() {
            return Err(Error::DimensionMismatch(format!(
                "curve built from {ch}-channel images, got {}",
                image.channel_count()
            )));
        }
    }
    let eta = measure_at(image, curve.i_fixed, seed, repeats)?;
    curve.invert(eta)
}

/// Model-only estimate: solves the closed form for `p'` from a measured
/// `eta`, then maps `p'` back to `k` under an assumed cover probability.
///
/// The cover probability is not observable from `S_k`, so this estimate is
/// biased whenever `cover_p` is wrong.
pub fn estimate_k_model(image: &Image, i_fixed: f64, cover_p: f64, seed: u64, repeats: usize) -> Result<f64> {
    check_unit("i_fixed", i_fixed)?;
    check_unit("cover_p", cover_p)?;
    if i_fixed == 0.0 || cover_p == 0.5 {
        return Err(Error::InvalidConfig("model inversion needs i > 0 and cover p != 0.5".into()));
    }
    let eta = measure_at(image, i_fixed, seed, repeats)?;
    let (w, h, c) = (image.width(), image.height(), image.channel_count());
    let pr = eta / expected_eta_from_pr(1.0, c, w, h)?;
    // Pr is strictly decreasing in q on [0, 1/4]; bisect.
    let (mut lo, mut hi) = (0.0f64, 0.25f64);
    if pr >= pr_from_q(i_fixed, lo) {
        hi = lo;
    } else if pr <= pr_from_q(i_fixed, hi) {
        lo = hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pr_from_q(i_fixed, mid) > pr {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = 0.5 * (lo + hi);
    let half_gap = (0.25 - q).max(0.0).sqrt();
    let p_prime = if cover_p > 0.5 { 0.5 + half_gap } else { 0.5 - half_gap };
    Ok(((p_prime - cover_p) / (0.5 - cover_p)).clamp(0.0, 1.0))
}
