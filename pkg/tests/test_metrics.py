import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from thermonu.metrics import MetricsConfig, combined_loss, dssim, frame_report, mae, psnr, ssim, tv


def naive_mae(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            s += abs(a[i, j] - b[i, j])
    return s / a.size


def naive_tv(t):
    h, w = t.shape
    s = 0.0
    for i in range(h):
        for j in range(w):
            if j + 1 < w:
                s += abs(t[i, j + 1] - t[i, j])
            if i + 1 < h:
                s += abs(t[i + 1, j] - t[i, j])
    return s / (h * w)


def naive_psnr(a, b, L):
    s = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            s += (a[i, j] - b[i, j]) ** 2
    return 10 * math.log10(L * L / (s / a.size))


def naive_ssim(a, b, L, size=11, sigma=1.5):
    r = size // 2
    g = [math.exp(-0.5 * ((k - r) / sigma) ** 2) for k in range(size)]
    tot = sum(g)
    g = [v / tot for v in g]
    c1, c2 = (0.01 * L) ** 2, (0.03 * L) ** 2
    h, w = a.shape
    vals = []
    for i in range(r, h - r):
        for j in range(r, w - r):
            ma = mb = saa = sbb = sab = 0.0
            for di in range(size):
                for dj in range(size):
                    k = g[di] * g[dj]
                    x, y = a[i - r + di, j - r + dj], b[i - r + di, j - r + dj]
                    ma += k * x
                    mb += k * y
                    saa += k * x * x
                    sbb += k * y * y
                    sab += k * x * y
            va, vb, cov = saa - ma * ma, sbb - mb * mb, sab - ma * mb
            vals.append((2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2)))
    return sum(vals) / len(vals)


@pytest.fixture
def pair(rng):
    a = rng.uniform(20, 60, (32, 32))
    return a, a + rng.normal(0, 2, (32, 32))


def test_identities(pair):
    a, _ = pair
    assert mae(a, a) == 0
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)
    assert dssim(a, a) == pytest.approx(0.0, abs=1e-12)
    assert tv(np.full((9, 7), 3.3)) == 0
    assert psnr(a, a, 100.0) == math.inf


def test_psnr_20db_case():
    L = 100.0
    a = np.zeros((8, 8))
    b = np.full((8, 8), L / 10)  # MSE = L^2 / 100
    assert psnr(a, b, L) == pytest.approx(20.0, abs=1e-12)


def test_against_naive_loops(pair):
    a, b = pair
    cfg = MetricsConfig()
    assert abs(mae(a, b) - naive_mae(a, b)) < 1e-9
    assert abs(tv(b) - naive_tv(b)) < 1e-9
    assert abs(psnr(a, b, 100.0) - naive_psnr(a, b, 100.0)) < 1e-9
    assert abs(ssim(a, b, cfg) - naive_ssim(a, b, 100.0)) < 1e-9


def test_tv_hand_value():
    # one step of height 1 across a 2x2 frame: two horizontal differences
    t = np.array([[0.0, 1.0], [0.0, 1.0]])
    assert tv(t) == 0.5


def test_mae_mask_excludes():
    a = np.zeros((3, 3))
    b = np.zeros((3, 3))
    b[0, 0] = 90.0
    mask = np.zeros((3, 3), bool)
    mask[0, 0] = True
    assert mae(a, b, mask) == 0.0
    assert mae(a, b) == 10.0
    with pytest.raises(ValueError):
        mae(a, b, np.ones((3, 3), bool))


def test_combined_loss_composition(pair):
    a, b = pair
    cfg = MetricsConfig()
    assert (cfg.beta, cfg.gamma) == (0.01, 0.001)
    expect = mae(a, b) + 0.01 * dssim(a, b) + 0.001 * tv(b)
    assert combined_loss(a, b, cfg) == pytest.approx(expect, rel=1e-15)
    gxpd = MetricsConfig(gamma=0.0001)
    assert combined_loss(a, b, gxpd) == pytest.approx(mae(a, b) + 0.01 * dssim(a, b) + 0.0001 * tv(b))


def test_ssim_small_image_rejected():
    with pytest.raises(ValueError):
        ssim(np.zeros((8, 8)), np.zeros((8, 8)))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        mae(np.zeros((3, 3)), np.zeros((3, 4)))


def test_frame_report_keys(pair):
    rep = frame_report(*pair)
    assert set(rep) == {"mae", "psnr", "ssim"}


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(arrays(float, (12, 13), elements=finite), arrays(float, (12, 13), elements=finite))
def test_metric_properties(a, b):
    assert mae(a, b) == pytest.approx(mae(b, a))
    assert mae(a, b) >= 0 and tv(a) >= 0
    assert ssim(a, b) <= 1.0 + 1e-12
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)
    assert 0.0 - 1e-12 <= dssim(a, b) <= 1.0 + 1e-12
    assert tv(a + 17.0) == pytest.approx(tv(a), rel=1e-9, abs=1e-9)
