"""Fidelity, structural and noise metrics for temperature maps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class MetricsConfig:
    beta: float = 0.01  # DSSIM weight
    gamma: float = 0.001  # TV weight; 0.0001 for the gain/offset network variant
    window: int = 11
    window_sigma: float = 1.5
    data_range: float = 100.0  # L for SSIM and PSNR; defaults to the temperature range

    def __post_init__(self):
        if self.beta < 0 or self.gamma < 0:
            raise ValueError("loss weights must be >= 0")
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError("window must be a positive odd size")
        if not self.data_range > 0:
            raise ValueError("data_range must be > 0")


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mae(a, b, mask=None) -> float:
    """Mean absolute difference; pixels where ``mask`` is True are excluded."""
    a, b = _pair(a, b)
    d = np.abs(a - b)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != a.shape:
            raise ValueError("mask shape mismatch")
        d = d[~mask]
        if d.size == 0:
            raise ValueError("mask excludes every pixel")
    return float(d.mean())


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - size // 2
    g = np.exp(-0.5 * (x / sigma) ** 2)
    return g / g.sum()


def _local_mean(x, g):
    r = g.size // 2
    y = ndimage.correlate1d(x, g, axis=0, mode="constant")
    y = ndimage.correlate1d(y, g, axis=1, mode="constant")
    return y[r : x.shape[0] - r, r : x.shape[1] - r]


def ssim_map(a, b, cfg: MetricsConfig = MetricsConfig()) -> np.ndarray:
    """Local SSIM over every fully contained Gaussian window."""
    a, b = _pair(a, b)
    if min(a.shape) < cfg.window:
        raise ValueError(f"image {a.shape} smaller than the {cfg.window}x{cfg.window} window")
    g = gaussian_window(cfg.window, cfg.window_sigma)
    c1 = (0.01 * cfg.data_range) ** 2
    c2 = (0.03 * cfg.data_range) ** 2
    mu_a, mu_b = _local_mean(a, g), _local_mean(b, g)
    var_a = _local_mean(a * a, g) - mu_a**2
    var_b = _local_mean(b * b, g) - mu_b**2
    cov = _local_mean(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a, b, cfg: MetricsConfig = MetricsConfig()) -> float:
    return float(ssim_map(a, b, cfg).mean())


def dssim(a, b, cfg: MetricsConfig = MetricsConfig()) -> float:
    return (1.0 - ssim(a, b, cfg)) / 2.0


def tv(t) -> float:
    """Mean absolute forward difference (horizontal plus vertical), no wraparound."""
    t = np.asarray(t, dtype=float)
    h, w = t.shape
    return float((np.abs(np.diff(t, axis=1)).sum() + np.abs(np.diff(t, axis=0)).sum()) / (h * w))


def psnr(a, b, peak: float) -> float:
    """10 log10(peak^2 / MSE) in dB; ``inf`` for identical inputs."""
    a, b = _pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def combined_loss(truth, estimate, cfg: MetricsConfig = MetricsConfig()) -> float:
    """MAE + beta * DSSIM + gamma * TV(estimate)."""
    return mae(truth, estimate) + cfg.beta * dssim(truth, estimate, cfg) + cfg.gamma * tv(estimate)


def frame_report(truth, estimate, cfg: MetricsConfig = MetricsConfig(), mask=None) -> dict:
    return {
        "mae": mae(truth, estimate, mask),
        "psnr": psnr(truth, estimate, cfg.data_range),
        "ssim": ssim(truth, estimate, cfg),
    }
