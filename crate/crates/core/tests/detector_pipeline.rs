use stegmetrics::detector::{block_diff_stats, calibrate, estimate_k, forced_embedding_curve};
use stegmetrics::imageio::Image;
use stegmetrics::rng::derive_seed;
use stegmetrics::stego::{embed_lsb_traced, StegoParams};
use stegmetrics::synth::{natural_image, NaturalImageSpec};

fn cover(seed: u64) -> Image {
    natural_image(&NaturalImageSpec::rgb(400, 300, 0.65), seed).unwrap()
}

#[test]
fn x2_equals_signed_change_count_from_the_embedder() {
    let base = cover(1);
    let (forced, trace) = embed_lsb_traced(&base, &StegoParams::new(0.6, 21).unwrap());
    let plane_len = base.width() * base.height();
    let w = base.width();
    for c in 0..3 {
        let stats = block_diff_stats(&base.channels()[c], &forced.channels()[c]).unwrap();
        // Recompute X2 from the embedder's own record of what it wrote.
        let bw = w / 4;
        let mut per_block = vec![0i64; bw * (base.height() / 4)];
        for (&pos, &bit) in trace.positions.iter().zip(&trace.bits) {
            if pos / plane_len != c {
                continue;
            }
            let px = pos % plane_len;
            let (x, y) = (px % w, px / w);
            let old = base.channels()[c].pixels()[px];
            let new = (old & !1) | bit;
            per_block[(y / 4) * bw + x / 4] += i64::from(old) - i64::from(new);
        }
        assert_eq!(stats.x2, per_block.iter().sum::<i64>(), "channel {c}");
        assert_eq!(stats.x0 as usize, per_block.iter().filter(|&&d| d != 0).count());
    }
}

#[test]
fn eta_is_non_decreasing_in_i_for_several_seeds() {
    let levels: Vec<f64> = (1..=10).map(|n| n as f64 / 10.0).collect();
    let img = cover(2);
    for seed in 0..5 {
        let curve = forced_embedding_curve(&img, &levels, seed).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].eta >= w[0].eta, "seed {seed}: {} then {}", w[0].eta, w[1].eta);
        }
    }
}

#[test]
fn estimate_from_sibling_images() {
    let siblings: Vec<Image> = (10..14).map(cover).collect();
    let grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
    let curve = calibrate(&siblings, &grid, 0.2, 3, 8).unwrap();
    let suspect = stegmetrics::stego::embed_lsb(&cover(99), &StegoParams::new(0.3, derive_seed(3, &[42])).unwrap());
    let k_hat = estimate_k(&suspect, &curve, 17, 8).unwrap();
    assert!((0.2..=0.4).contains(&k_hat), "k_hat {k_hat}");
}
