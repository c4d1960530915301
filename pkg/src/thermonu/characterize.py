"""Build a CameraModel from blackbody operating points.

Chain per gray-level order m: pixel-wise polynomial fit in t_obj at every
ambient temperature, Gaussian smoothing of the coefficient maps, quadratic
and fine tensor-polynomial surface fits, skew removal, radial fit, and
finally a polynomial fit of every radial coefficient over t_amb.
"""

from __future__ import annotations

import logging
import math
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import ndimage

from . import _lsq
from .errors import SingularFitError, StageError, ThermoNUError
from .model import (
    BasisGrids,
    CameraModel,
    FitConfig,
    OperatingPoint,
    PixelwiseCoeffs,
    RadialCoeffs,
    SpatialPolyCoeffs,
    make_basis_grids,
)

log = logging.getLogger(__name__)


def worker_count() -> int:
    """Thread cap from ``THERMONU_THREADS`` (default: CPU count)."""
    env = os.environ.get("THERMONU_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer THERMONU_THREADS=%r", env)
    return os.cpu_count() or 1


def fit_pixelwise(points: list[OperatingPoint], m_gl: int) -> PixelwiseCoeffs:
    """Per-pixel least-squares fit of gray level against powers of t_obj.

    All points must share one ambient temperature and frame geometry. The same
    design-matrix solve is applied to every pixel at once.
    """
    if not points:
        raise SingularFitError("fit_pixelwise: no operating points")
    t_ambs = {p.t_amb for p in points}
    if len(t_ambs) != 1:
        raise ValueError(f"fit_pixelwise expects one t_amb, got {sorted(t_ambs)}")
    shape = points[0].shape
    if any(p.shape != shape for p in points):
        raise ValueError("operating points have differing frame geometry")
    t_obj = np.array([p.t_obj for p in points])
    Y = np.stack([p.mean_frame.ravel() for p in points])
    coef = _lsq.power_fit(t_obj, Y, m_gl, what="pixel-wise t_obj fit")
    return PixelwiseCoeffs(coef.reshape((m_gl + 1,) + shape))


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    radius = math.ceil(4 * sigma)
    x = np.arange(-radius, radius + 1)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def smooth_map(a: np.ndarray, sigma: float) -> np.ndarray:
    # scipy's "reflect" is half-sample symmetric: (d c b a | a b c d | d c b a)
    return ndimage.gaussian_filter(
        np.asarray(a, dtype=float), sigma, mode="reflect", radius=math.ceil(4 * sigma)
    )


def smooth_coeffs(coeffs: PixelwiseCoeffs, sigma: float) -> PixelwiseCoeffs:
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    return PixelwiseCoeffs(np.stack([smooth_map(m, sigma) for m in coeffs.maps]))


def fit_spatial(coeff_map, max_exp: int, grids: BasisGrids | None = None) -> SpatialPolyCoeffs:
    """Least-squares fit of a map onto ``{H**q * W**z : 0 <= q, z <= max_exp}``."""
    coeff_map = np.asarray(coeff_map, dtype=float)
    h, w = coeff_map.shape
    if (max_exp + 1) ** 2 > h * w:
        raise SingularFitError(
            f"spatial fit: {(max_exp + 1) ** 2} coefficients exceed {h * w} pixels"
        )
    grids = grids or make_basis_grids(h, w)
    C = _lsq.tensor_fit(grids.rows, grids.cols, coeff_map, max_exp, what="spatial fit")
    return SpatialPolyCoeffs(C)


def _deskew(fine: SpatialPolyCoeffs, quad: SpatialPolyCoeffs) -> SpatialPolyCoeffs:
    q = np.zeros_like(fine.coeffs)
    n = quad.max_exp + 1
    q[:n, :n] = quad.coeffs
    out = fine.coeffs - q
    out[0, 0] = 0.5 * (fine.coeffs[0, 0] + quad.coeffs[0, 0])
    return SpatialPolyCoeffs(out)


def deskew(fine: SpatialPolyCoeffs, quad: SpatialPolyCoeffs) -> SpatialPolyCoeffs:
    """Subtract the quadratic surface from the fine one; average the two biases.

    Quadratic entries beyond exponent 2 count as zero.
    """
    if quad.max_exp != 2:
        raise ValueError(f"quadratic fit must have max_exp 2, got {quad.max_exp}")
    if fine.max_exp <= 2:
        raise ValueError(f"fine fit must have max_exp > 2, got {fine.max_exp}")
    return _deskew(fine, quad)


def fit_radial(spatial: SpatialPolyCoeffs, grids: BasisGrids, max_exp: int) -> RadialCoeffs:
    """Least-squares fit of the evaluated surface onto powers of the radius grid P."""
    h, w = grids.shape
    if max_exp + 1 > h * w:
        raise SingularFitError(f"radial fit: {max_exp + 1} coefficients exceed {h * w} pixels")
    surface = spatial.evaluate(grids)
    c = _lsq.power_fit(grids.P.ravel(), surface.ravel(), max_exp, what="radial fit")
    return RadialCoeffs(c)


def fit_ambient(radial_sets, t_amb, m_ambient: int) -> np.ndarray:
    """Fit each radial coefficient's trajectory over t_amb; returns Gamma[k, r]."""
    R = np.stack([np.asarray(getattr(r, "coeffs", r), dtype=float) for r in radial_sets])
    t_amb = np.asarray(t_amb, dtype=float)
    if R.shape[0] != t_amb.size:
        raise ValueError("one radial coefficient set is required per t_amb")
    return _lsq.power_fit(t_amb, R, m_ambient, what="ambient fit")


def estimate_noise_variance(points: list[OperatingPoint]) -> float:
    """Mean over operating points of the spatially averaged temporal variance."""
    if not points:
        raise ValueError("no operating points")
    return float(np.mean([p.var_frame.mean() for p in points]))


def _capped_degrees(shape, grids: BasisGrids, cfg: FitConfig) -> tuple[int, int, int]:
    axis_max = min(shape) - 1
    quad = min(cfg.m_spatial_quad, axis_max)
    fine = min(cfg.m_spatial_fine, axis_max)
    radial = min(cfg.m_radial, np.unique(grids.P).size - 1)
    if (quad, fine, radial) != (cfg.m_spatial_quad, cfg.m_spatial_fine, cfg.m_radial):
        log.warning(
            "frame %dx%d too small for configured degrees; using quad=%d fine=%d radial=%d",
            shape[0], shape[1], quad, fine, radial,
        )
    return quad, fine, radial


def _radial_for_map(coeff_map, sigma, grids, quad_deg, fine_deg, radial_deg) -> np.ndarray:
    smoothed = smooth_map(coeff_map, sigma)
    fine = fit_spatial(smoothed, fine_deg, grids)
    if fine_deg > quad_deg:
        quad = fit_spatial(smoothed, quad_deg, grids)
        surface = _deskew(fine, quad)
    else:
        surface = fine
    return fit_radial(surface, grids, radial_deg).coeffs


def _ordered(lo: float, hi: float) -> tuple[float, float]:
    # flat campaigns still need a strictly ordered normalization interval
    return (lo, hi) if lo < hi else (lo - 0.5, hi + 0.5)


def characterize_camera(points: list[OperatingPoint], cfg: FitConfig | None = None) -> CameraModel:
    cfg = cfg or FitConfig()
    if not points:
        raise StageError("input", "no operating points")
    shape = points[0].shape
    for p in points:
        if p.shape != shape:
            raise StageError("input", f"operating point ({p.t_amb}, {p.t_obj}) has shape {p.shape} != {shape}")
    by_amb: dict[float, list[OperatingPoint]] = defaultdict(list)
    for p in points:
        by_amb[p.t_amb].append(p)
    t_ambs = sorted(by_amb)
    if len(t_ambs) < cfg.m_ambient + 1:
        raise StageError(
            "input", f"{len(t_ambs)} ambient temperatures cannot determine m_ambient={cfg.m_ambient}"
        )
    grids = make_basis_grids(*shape)
    quad_deg, fine_deg, radial_deg = _capped_degrees(shape, grids, cfg)

    pixelwise = {}
    for t in t_ambs:
        try:
            pixelwise[t] = fit_pixelwise(sorted(by_amb[t], key=lambda p: p.t_obj), cfg.m_gl)
        except ThermoNUError as exc:
            raise StageError(f"pixelwise t_amb={t}", exc) from exc

    tasks = [(m, t) for m in range(cfg.m_gl + 1) for t in t_ambs]

    def run(task):
        m, t = task
        try:
            return _radial_for_map(
                pixelwise[t].maps[m], cfg.smoothing_sigma, grids, quad_deg, fine_deg, radial_deg
            )
        except ThermoNUError as exc:
            raise StageError(f"spatial/radial m={m} t_amb={t}", exc) from exc

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        radial = list(pool.map(run, tasks))

    gamma = np.zeros((cfg.m_gl + 1, cfg.m_ambient + 1, cfg.m_radial + 1))
    for m in range(cfg.m_gl + 1):
        sets = radial[m * len(t_ambs) : (m + 1) * len(t_ambs)]
        try:
            g = fit_ambient(sets, t_ambs, cfg.m_ambient)
        except ThermoNUError as exc:
            raise StageError(f"ambient m={m}", exc) from exc
        gamma[m, :, : radial_deg + 1] = g

    means = np.stack([p.mean_frame for p in points])
    t_objs = [p.t_obj for p in points]
    return CameraModel(
        gamma=gamma,
        height=shape[0],
        width=shape[1],
        m_spatial_fine=cfg.m_spatial_fine,
        gl_bounds=_ordered(float(means.min()), float(means.max())),
        temp_bounds=_ordered(min(t_objs), max(t_objs)),
        t_amb_range=(t_ambs[0], t_ambs[-1]),
        noise_var_gl2=estimate_noise_variance(points),
    )
