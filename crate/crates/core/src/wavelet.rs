//! Second-level Haar sub-bands computed directly from 4x4 pixel blocks.
//!
//! With the block laid out row-major as
//!
//! ```text
//! a b c d
//! e f g h
//! i j k l
//! m n o p
//! ```
//!
//! the coefficients are
//! `LL = (sum of all 16) / 4`,
//! `LH = ((a+b+e+f+i+j+m+n) - (c+d+g+h+k+l+o+p)) / 4`,
//! `HL = ((a..h) - (i..p)) / 4` and
//! `HH = ((a+b+e+f+k+l+o+p) - (c+d+g+h+i+j+m+n)) / 4`.
//! Pixels to the right of or below the last full block are ignored.

use crate::error::{Error, Result};
use crate::imageio::ImagePlane;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    LL,
    LH,
    HL,
    HH,
}

impl std::str::FromStr for Band {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ll" => Ok(Band::LL),
            "lh" => Ok(Band::LH),
            "hl" => Ok(Band::HL),
            "hh" => Ok(Band::HH),
            other => Err(format!("unknown band {other:?}")),
        }
    }
}

/// Four coefficient planes, each `width x height` blocks, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SubBands {
    pub width: usize,
    pub height: usize,
    pub ll: Vec<f64>,
    pub lh: Vec<f64>,
    pub hl: Vec<f64>,
    pub hh: Vec<f64>,
}

impl SubBands {
    pub fn band(&self, band: Band) -> &[f64] {
        match band {
            Band::LL => &self.ll,
            Band::LH => &self.lh,
            Band::HL => &self.hl,
            Band::HH => &self.hh,
        }
    }
}

/// Sub-bands of an 8-bit plane.
pub fn second_level_subbands(plane: &ImagePlane) -> Result<SubBands> {
    let values: Vec<f64> = plane.pixels().iter().map(|&p| f64::from(p)).collect();
    subbands_of_real(plane.width(), plane.height(), &values)
}

/// Sub-bands of an arbitrary real-valued plane.
pub fn subbands_of_real(width: usize, height: usize, values: &[f64]) -> Result<SubBands> {
    if values.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "{width}x{height} plane with {} values",
            values.len()
        )));
    }
    if width < 4 || height < 4 {
        return Err(Error::PlaneTooSmall { width, height });
    }
    let (bw, bh) = (width / 4, height / 4);
    let mut out = SubBands {
        width: bw,
        height: bh,
        ll: Vec::with_capacity(bw * bh),
        lh: Vec::with_capacity(bw * bh),
        hl: Vec::with_capacity(bw * bh),
        hh: Vec::with_capacity(bw * bh),
    };
    for by in 0..bh {
        for bx in 0..bw {
            // Quadrant sums: top-left, top-right, bottom-left, bottom-right.
            let mut q = [0.0f64; 4];
            for dy in 0..4 {
                let row = &values[(4 * by + dy) * width + 4 * bx..][..4];
                let top = usize::from(dy >= 2) * 2;
                q[top] += row[0] + row[1];
                q[top + 1] += row[2] + row[3];
            }
            let [tl, tr, bl, br] = q;
            out.ll.push((tl + tr + bl + br) / 4.0);
            out.lh.push(((tl + bl) - (tr + br)) / 4.0);
            out.hl.push(((tl + tr) - (bl + br)) / 4.0);
            out.hh.push(((tl + br) - (tr + bl)) / 4.0);
        }
    }
    Ok(out)
}

/// Second-level LL plane only.
pub fn ll_band(plane: &ImagePlane) -> Result<Vec<f64>> {
    Ok(second_level_subbands(plane)?.ll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_plane() {
        let plane = ImagePlane::filled(8, 8, 10).unwrap();
        let sb = second_level_subbands(&plane).unwrap();
        assert_eq!((sb.width, sb.height), (2, 2));
        assert!(sb.ll.iter().all(|&v| v == 40.0));
        assert!(sb.lh.iter().chain(&sb.hl).chain(&sb.hh).all(|&v| v == 0.0));
    }

    #[test]
    fn block_one_to_sixteen() {
        let plane = ImagePlane::new(4, 4, (1..=16).collect()).unwrap();
        let sb = second_level_subbands(&plane).unwrap();
        assert_eq!(sb.ll, vec![34.0]);
        assert_eq!(sb.lh, vec![-4.0]);
        assert_eq!(sb.hl, vec![-16.0]);
        assert_eq!(sb.hh, vec![0.0]);
    }

    #[test]
    fn truncates_partial_blocks() {
        let base = ImagePlane::from_fn(9, 7, |x, y| (x * 13 + y * 7) as u8).unwrap();
        let mut noisy = base.clone();
        for y in 0..7 {
            noisy.set(8, y, 255);
        }
        for y in 4..7 {
            for x in 0..9 {
                noisy.set(x, y, 200);
            }
        }
        let a = second_level_subbands(&base).unwrap();
        let b = second_level_subbands(&noisy).unwrap();
        assert_eq!((a.width, a.height), (2, 1));
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_small_planes() {
        let plane = ImagePlane::filled(3, 8, 0).unwrap();
        assert_eq!(
            second_level_subbands(&plane),
            Err(Error::PlaneTooSmall { width: 3, height: 8 })
        );
    }

    /// One level of the 2x2 Haar step, written independently of the
    /// 4x4 formulas: returns (LL, LH, HL, HH) planes of half size.
    fn haar_step(w: usize, h: usize, v: &[f64]) -> (usize, usize, [Vec<f64>; 4]) {
        let (hw, hh) = (w / 2, h / 2);
        let mut bands: [Vec<f64>; 4] = Default::default();
        for y in 0..hh {
            for x in 0..hw {
                let p00 = v[2 * y * w + 2 * x];
                let p01 = v[2 * y * w + 2 * x + 1];
                let p10 = v[(2 * y + 1) * w + 2 * x];
                let p11 = v[(2 * y + 1) * w + 2 * x + 1];
                bands[0].push((p00 + p01 + p10 + p11) / 2.0);
                bands[1].push(((p00 + p10) - (p01 + p11)) / 2.0);
                bands[2].push(((p00 + p01) - (p10 + p11)) / 2.0);
                bands[3].push(((p00 + p11) - (p01 + p10)) / 2.0);
            }
        }
        (hw, hh, bands)
    }

    fn plane_strategy() -> impl Strategy<Value = (usize, usize, Vec<u8>)> {
        (1usize..6, 1usize..6).prop_flat_map(|(bw, bh)| {
            let (w, h) = (4 * bw, 4 * bh);
            (Just(w), Just(h), proptest::collection::vec(any::<u8>(), w * h))
        })
    }

    proptest! {
        #[test]
        fn iterated_haar_equivalence((w, h, px) in plane_strategy()) {
            let plane = ImagePlane::new(w, h, px).unwrap();
            let direct = second_level_subbands(&plane).unwrap();
            let values: Vec<f64> = plane.pixels().iter().map(|&p| f64::from(p)).collect();
            let (w1, h1, level1) = haar_step(w, h, &values);
            let (_, _, level2) = haar_step(w1, h1, &level1[0]);
            for (got, want) in [&direct.ll, &direct.lh, &direct.hl, &direct.hh].into_iter().zip(&level2) {
                for (g, e) in got.iter().zip(want) {
                    prop_assert!((g - e).abs() <= 1e-9);
                }
            }
            for v in direct.lh.iter().chain(&direct.hl).chain(&direct.hh) {
                prop_assert!(v.abs() <= 510.0);
            }
            prop_assert!(direct.ll.iter().all(|&v| (0.0..=1020.0).contains(&v)));
        }

        #[test]
        fn linearity(
            (w, h, a) in plane_strategy(),
            alpha in -3.0f64..3.0,
            seed in any::<u64>(),
        ) {
            let a: Vec<f64> = a.iter().map(|&v| f64::from(v)).collect();
            let b: Vec<f64> = (0..a.len())
                .map(|i| ((seed.wrapping_add(i as u64).wrapping_mul(0x9E37_79B9)) % 997) as f64 / 7.0)
                .collect();
            let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| alpha * x + y).collect();
            let (sa, sb, sm) = (
                subbands_of_real(w, h, &a).unwrap(),
                subbands_of_real(w, h, &b).unwrap(),
                subbands_of_real(w, h, &mix).unwrap(),
            );
            for band in [Band::LL, Band::LH, Band::HL, Band::HH] {
                for ((x, y), m) in sa.band(band).iter().zip(sb.band(band)).zip(sm.band(band)) {
                    prop_assert!((alpha * x + y - m).abs() <= 1e-9 * (1.0 + m.abs()));
                }
            }
        }
    }
}
