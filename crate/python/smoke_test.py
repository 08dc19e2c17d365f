"""Smoke test for the stegmetrics Python extension.

Build and install the module first, for example with
`maturin develop -m crates/python/Cargo.toml`, then run this script.
"""

import math

import stegmetrics as sm


def check_measures():
    assert sm.mu1(0) == 32_509_952.0
    assert sm.mu2(0x55555555) == 64.0
    assert sm.mu3(0xFFFFFFFF) == 259.0
    assert abs(sm.mu4(0xFFFFFFFF) - math.sqrt(333_312)) < 1e-9
    assert sm.mu5(0xAAAAAAAA) == 4.0
    fv = sm.feature_vector(bytes(8000))
    assert len(fv) == sm.FEATURE_DIM == 9
    assert fv[:3] == [32_509_952.0, 2.0**32, 4.0]


def check_images():
    img = sm.Image.gray(2, 2, bytes([0, 1, 2, 3]))
    assert sm.read_pnm(img.to_pnm()) == img
    assert sm.extract_lsb(img) == bytes([0b0101_0000])
    cover = sm.natural_image(64, 48, 0.65, seed=3)
    assert (cover.width, cover.height, cover.channels) == (64, 48, 3)
    assert sm.embed(cover, 0.0, seed=7) == cover
    stego = sm.embed(cover, 1.0, seed=7)
    assert stego != cover
    rows, cols, ll = sm.subband(cover, channel=0, band="ll")
    assert (rows, cols, len(ll)) == (12, 16, 192)


def check_classifier():
    feats, labels = [], []
    for label, cls in enumerate(["text", "random", "sparse"]):
        for seed in range(6):
            feats.append(sm.feature_vector(sm.byte_stream(cls, 8000, seed)))
            labels.append(label)
    model = sm.train(feats, labels)
    assert model.labels == [0, 1, 2]
    matrix, accuracy = model.evaluate(feats, labels)
    assert accuracy == 1.0 and len(matrix) == 3
    restored = sm.Model.load(model.save())
    assert [restored.predict(f) for f in feats] == labels


def check_detector():
    assert abs(sm.analytic_pr(1.0, 0.5) - 0.860050065908581) < 1e-12
    assert abs(sm.expected_eta(1.0, 0.5) - 80.62969367892947) < 1e-9
    p_prime, _ = sm.p_prime_chain(0.35, 0.5, 0.0)
    assert abs(p_prime - 0.425) < 1e-15
    cover = sm.natural_image(128, 128, 0.65, seed=5)
    curve = sm.forced_embedding_curve(cover, [0.0, 0.5, 1.0], seed=2)
    assert curve[0][1] == 0.0 and math.isinf(curve[0][2])
    assert curve[1][1] <= curve[2][1]
    covers = [sm.natural_image(128, 128, 0.65, seed=s) for s in (10, 11)]
    points = sm.calibrate(covers, [0.0, 0.5, 1.0], i_fixed=0.2, seed=1, repeats=2)
    assert len(points) == 3
    k_hat = sm.estimate_k(sm.embed(cover, 0.5, seed=9), points, i_fixed=0.2, seed=1, repeats=2)
    assert 0.0 <= k_hat <= 1.0


if __name__ == "__main__":
    check_measures()
    check_images()
    check_classifier()
    check_detector()
    print("stegmetrics smoke test passed")
