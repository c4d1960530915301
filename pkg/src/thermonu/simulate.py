"""Forward synthesis of gray-level frames and the noise / FPN degradation stack."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import _lsq
from .errors import GeometryError, TemperatureRangeError
from .model import GL_MAX_14BIT, CameraModel, PixelwiseCoeffs, RadialCoeffs, make_basis_grids

log = logging.getLogger(__name__)


class ExtrapolationWarning(UserWarning):
    """Ambient temperature outside the range the model was characterized on."""


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based Philox generator for the stream keyed by ``(seed, *stream)``.

    Each (dataset seed, sample index) pair gets an independent stream, so
    samples can be generated in any order or in parallel with identical output.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


@dataclass(frozen=True)
class NoiseSpec:
    gaussian_var: float = 5.0  # GL^2
    fpn_vmin: float = 0.9
    fpn_vmax: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.gaussian_var < 0:
            raise ValueError("gaussian_var must be >= 0")
        if not 0 < self.fpn_vmin <= self.fpn_vmax:
            raise ValueError("need 0 < fpn_vmin <= fpn_vmax")


def _check_t_amb(model: CameraModel, t_amb: float) -> None:
    lo, hi = model.t_amb_range
    if not lo <= t_amb <= hi:
        warnings.warn(
            f"t_amb={t_amb} outside characterized range [{lo}, {hi}]; extrapolating",
            ExtrapolationWarning,
            stacklevel=3,
        )


def _radial(model: CameraModel, m: int, t_amb: float) -> RadialCoeffs:
    if not 0 <= m <= model.m_gl:
        raise ValueError(f"order {m} outside [0, {model.m_gl}]")
    return RadialCoeffs(_lsq.polyval_power(model.gamma[m], float(t_amb)))


def radial_at(model: CameraModel, m: int, t_amb: float) -> RadialCoeffs:
    """Radial coefficients of order ``m`` evaluated at ambient temperature ``t_amb``."""
    _check_t_amb(model, t_amb)
    return _radial(model, m, t_amb)


def pixelwise_at(model: CameraModel, t_amb: float, shape: tuple[int, int] | None = None) -> PixelwiseCoeffs:
    """Per-pixel coefficient maps at ``t_amb``.

    ``shape`` defaults to the model geometry; any other shape evaluates the
    radial model on that frame's own [-0.5, 0.5] ramps.
    """
    _check_t_amb(model, t_amb)
    grids = model.grids if shape is None or tuple(shape) == model.shape else make_basis_grids(*shape)
    return PixelwiseCoeffs(
        np.stack([_radial(model, m, t_amb).evaluate(grids) for m in range(model.m_gl + 1)])
    )


def simulate_frame(model: CameraModel, t_obj, t_amb: float, *, any_geometry: bool = False) -> np.ndarray:
    """Noiseless real-valued gray levels for a temperature map at ambient ``t_amb``.

    With ``any_geometry`` the map may have any size; otherwise it must match
    the model frame.
    """
    t_obj = np.asarray(t_obj, dtype=float)
    if t_obj.ndim != 2:
        raise GeometryError(f"temperature map must be 2D, got {t_obj.shape}")
    if not any_geometry and t_obj.shape != model.shape:
        raise GeometryError(f"temperature map {t_obj.shape} does not match model {model.shape}")
    if not np.all(np.isfinite(t_obj)):
        raise TemperatureRangeError("temperature map has non-finite values")
    lo, hi = model.temp_bounds
    if t_obj.min() < lo or t_obj.max() > hi:
        raise TemperatureRangeError(
            f"temperatures [{t_obj.min():.3f}, {t_obj.max():.3f}] outside model bounds [{lo}, {hi}]"
        )
    return pixelwise_at(model, t_amb, t_obj.shape).evaluate(t_obj)


def gen_fpn(h: int, w: int, spec: NoiseSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Column fixed-pattern multiplier: one uniform draw per column, repeated down rows."""
    rng = rng if rng is not None else make_rng(spec.seed, 1)
    cols = rng.uniform(spec.fpn_vmin, spec.fpn_vmax, size=w)
    return np.broadcast_to(cols, (h, w)).copy()


def gaussian_field(shape, spec: NoiseSpec, gl_range: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """Multiplicative field N(1, var / gl_range**2) for normalized frames.

    On a normalized value of 1 this equals additive noise of ``var`` GL^2 on
    the gray-level scale; elsewhere the equivalent variance scales with value^2.
    """
    rng = rng if rng is not None else make_rng(spec.seed, 0)
    std = np.sqrt(spec.gaussian_var) / gl_range
    return 1.0 + std * rng.standard_normal(shape)


def degrade(frame_norm, spec: NoiseSpec, gl_range: float = float(GL_MAX_14BIT),
            fpn: np.ndarray | None = None, noise: np.ndarray | None = None) -> np.ndarray:
    """Apply ``N(1, s^2) * M_FPN * frame`` element-wise to a normalized frame.

    ``gl_range`` is I_max - I_min of the normalization. Precomputed ``fpn`` or
    ``noise`` fields can be passed to reuse them across frames.
    """
    frame_norm = np.asarray(frame_norm, dtype=float)
    h, w = frame_norm.shape
    if fpn is None:
        fpn = gen_fpn(h, w, spec)
    if noise is None:
        noise = gaussian_field((h, w), spec, gl_range)
    return noise * fpn * frame_norm


def add_gaussian_noise(frame, var_gl2: float, rng: np.random.Generator) -> np.ndarray:
    """Additive N(0, var) noise on a gray-level frame."""
    frame = np.asarray(frame, dtype=float)
    return frame + np.sqrt(var_gl2) * rng.standard_normal(frame.shape)


def quantize(frame) -> tuple[np.ndarray, int]:
    """Round half to even and clamp to 14 bits; returns (uint16 frame, clamp count)."""
    r = np.rint(np.asarray(frame, dtype=float))
    clamped = int(np.count_nonzero((r < 0) | (r > GL_MAX_14BIT)))
    if clamped:
        log.debug("quantize clamped %d pixels", clamped)
    return np.clip(r, 0, GL_MAX_14BIT).astype(np.uint16), clamped
