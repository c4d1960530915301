"""Camera model container, basis grids and model (de)serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _lsq
from .errors import GeometryError, ModelFormatError

MODEL_MAGIC = "tcam1"
DEFAULT_TEMP_RANGE = (0.0, 100.0)
GL_MAX_14BIT = 16383


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def check_temperature_map(t, bounds=DEFAULT_TEMP_RANGE) -> np.ndarray:
    """Validate a 2D temperature map in degrees C and return it as float64."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 2:
        raise GeometryError(f"temperature map must be 2D, got shape {t.shape}")
    bad = ~np.isfinite(t)
    if bad.any():
        raise ValueError(f"non-finite temperature at pixel {tuple(np.argwhere(bad)[0])}")
    lo, hi = bounds
    if t.size and (t.min() < lo or t.max() > hi):
        raise ValueError(f"temperatures [{t.min()}, {t.max()}] outside [{lo}, {hi}]")
    return t


def check_gray_frame(frame, quantized: bool = False) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.ndim != 2:
        raise GeometryError(f"gray frame must be 2D, got shape {frame.shape}")
    if quantized:
        if not np.issubdtype(frame.dtype, np.integer):
            raise ValueError("quantized frame must hold integers")
        if frame.size and (frame.min() < 0 or frame.max() > GL_MAX_14BIT):
            raise ValueError("quantized gray levels must lie in [0, 16383]")
        return frame
    frame = frame.astype(float)
    bad = ~np.isfinite(frame)
    if bad.any():
        raise ValueError(f"non-finite gray level at pixel {tuple(np.argwhere(bad)[0])}")
    return frame


@dataclass(frozen=True)
class OperatingPoint:
    """Averaged blackbody measurement at one (ambient, object) temperature pair."""

    t_amb: float
    t_obj: float
    mean_frame: np.ndarray
    var_frame: np.ndarray
    n_frames: int = 1

    def __post_init__(self):
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        mean = check_gray_frame(self.mean_frame)
        var = np.asarray(self.var_frame, dtype=float)
        if var.shape != mean.shape:
            raise GeometryError("var_frame and mean_frame shapes differ")
        if np.any(var < 0) or not np.all(np.isfinite(var)):
            raise ValueError("var_frame must be finite and non-negative")
        object.__setattr__(self, "mean_frame", _frozen(mean))
        object.__setattr__(self, "var_frame", _frozen(var))

    @property
    def shape(self) -> tuple[int, int]:
        return self.mean_frame.shape


@dataclass(frozen=True)
class BasisGrids:
    H: np.ndarray
    W: np.ndarray
    P: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.P.shape

    @property
    def rows(self) -> np.ndarray:
        """Row-coordinate ramp (the values H takes down the frame)."""
        return self.H[:, 0]

    @property
    def cols(self) -> np.ndarray:
        return self.W[0, :]


def _ramp(n: int) -> np.ndarray:
    # exactly antisymmetric, so P is bitwise invariant under flips
    r = np.linspace(-0.5, 0.5, n)
    return 0.5 * (r - r[::-1])


def make_basis_grids(h: int, w: int) -> BasisGrids:
    """Coordinate ramps in [-0.5, 0.5] and the radial distance from the frame center.

    ``W`` holds the ramp along every row (varies with the column index),
    ``H`` holds it down every column, and ``P = sqrt(H**2 + W**2)``.
    """
    if h < 2 or w < 2:
        raise GeometryError(f"frame must be at least 2x2, got {h}x{w}")
    W, H = np.meshgrid(_ramp(w), _ramp(h))
    P = np.sqrt(H**2 + W**2)
    return BasisGrids(_frozen(H), _frozen(W), _frozen(P))


@dataclass(frozen=True)
class FitConfig:
    """Degrees (maximum exponents, inclusive) and smoothing used by characterization."""

    m_gl: int = 2
    m_spatial_quad: int = 2
    m_spatial_fine: int = 15
    m_radial: int = 8
    m_ambient: int = 3
    smoothing_sigma: float = 1.0

    def __post_init__(self):
        for name in ("m_gl", "m_spatial_quad", "m_spatial_fine", "m_radial", "m_ambient"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.m_spatial_fine <= self.m_spatial_quad:
            raise ValueError("m_spatial_fine must exceed m_spatial_quad")
        if not self.smoothing_sigma > 0:
            raise ValueError("smoothing_sigma must be > 0")


@dataclass(frozen=True)
class PixelwiseCoeffs:
    """Per-pixel polynomial coefficients; ``maps[m]`` multiplies ``t_obj**m``."""

    maps: np.ndarray

    def __post_init__(self):
        maps = np.asarray(self.maps, dtype=float)
        if maps.ndim != 3:
            raise GeometryError("coefficient maps must have shape (orders, h, w)")
        if not np.all(np.isfinite(maps)):
            raise ValueError("coefficient maps must be finite")
        object.__setattr__(self, "maps", _frozen(maps))

    @property
    def order_count(self) -> int:
        return self.maps.shape[0]

    def evaluate(self, t_obj) -> np.ndarray:
        return _lsq.polyval_power(self.maps, t_obj)


@dataclass(frozen=True)
class SpatialPolyCoeffs:
    """Tensor polynomial surface; ``coeffs[q, z]`` multiplies ``H**q * W**z``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("spatial coefficients must be a square matrix")
        if not np.all(np.isfinite(c)):
            raise ValueError("spatial coefficients must be finite")
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def max_exp(self) -> int:
        return self.coeffs.shape[0] - 1

    def evaluate(self, grids: BasisGrids) -> np.ndarray:
        Vh = np.vander(grids.rows, self.max_exp + 1, increasing=True)
        Vw = np.vander(grids.cols, self.max_exp + 1, increasing=True)
        return Vh @ self.coeffs @ Vw.T


@dataclass(frozen=True)
class RadialCoeffs:
    """Radial polynomial; ``coeffs[r]`` multiplies ``P**r``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("radial coefficients must be a finite vector")
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def max_exp(self) -> int:
        return self.coeffs.size - 1

    def evaluate(self, grids: BasisGrids) -> np.ndarray:
        return _lsq.polyval_power(self.coeffs, grids.P)


@dataclass(frozen=True)
class CameraModel:
    """The complete characterization output.

    ``gamma[m]`` is the (m_ambient+1) x (m_radial+1) matrix of ambient-temperature
    polynomial coefficients of the radial fit for the ``t_obj**m`` term:
    radial coefficient ``r`` at ambient ``t`` is ``sum_k gamma[m][k, r] * t**k``.
    """

    gamma: np.ndarray
    height: int
    width: int
    m_spatial_fine: int = 15
    gl_bounds: tuple[float, float] = (0.0, float(GL_MAX_14BIT))
    temp_bounds: tuple[float, float] = DEFAULT_TEMP_RANGE
    t_amb_range: tuple[float, float] = (0.0, 100.0)
    noise_var_gl2: float = 0.0
    _grids: BasisGrids | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.ndim != 3:
            raise ModelFormatError("gamma", "expected shape (m_gl+1, m_ambient+1, m_radial+1)")
        if not np.all(np.isfinite(gamma)):
            raise ModelFormatError("gamma", "non-finite entry")
        object.__setattr__(self, "gamma", _frozen(gamma))
        for name in ("gl_bounds", "temp_bounds", "t_amb_range"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ModelFormatError(name, "non-finite bound")
            if name != "t_amb_range" and not lo < hi:
                raise ModelFormatError(name, f"min {lo} must be < max {hi}")
            if name == "t_amb_range" and lo > hi:
                raise ModelFormatError(name, f"lo {lo} > hi {hi}")
            object.__setattr__(self, name, (lo, hi))
        if not math.isfinite(self.noise_var_gl2) or self.noise_var_gl2 < 0:
            raise ModelFormatError("noise_var_gl2", "must be finite and >= 0")
        object.__setattr__(self, "noise_var_gl2", float(self.noise_var_gl2))
        object.__setattr__(self, "_grids", make_basis_grids(self.height, self.width))

    @property
    def m_gl(self) -> int:
        return self.gamma.shape[0] - 1

    @property
    def m_ambient(self) -> int:
        return self.gamma.shape[1] - 1

    @property
    def m_radial(self) -> int:
        return self.gamma.shape[2] - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def grids(self) -> BasisGrids:
        return self._grids

    @property
    def degrees(self) -> dict[str, int]:
        return {
            "m_gl": self.m_gl,
            "m_spatial_fine": self.m_spatial_fine,
            "m_radial": self.m_radial,
            "m_ambient": self.m_ambient,
        }


def model_to_dict(model: CameraModel) -> dict:
    return {
        "magic": MODEL_MAGIC,
        "height": model.height,
        "width": model.width,
        "degrees": model.degrees,
        "gamma": [g.tolist() for g in model.gamma],
        "gl_bounds": list(model.gl_bounds),
        "temp_bounds": list(model.temp_bounds),
        "t_amb_range": list(model.t_amb_range),
        "noise_var_gl2": model.noise_var_gl2,
    }


def save_model(model: CameraModel, path) -> None:
    """Write ``model`` as a ``.tcam.json`` document.

    Floats are written with ``repr`` precision, so loading reproduces them
    bit-exactly. Non-finite values are refused.
    """
    if not np.all(np.isfinite(model.gamma)):
        raise ModelFormatError("gamma", "non-finite entry")
    doc = model_to_dict(model)
    try:
        text = json.dumps(doc, allow_nan=False, indent=1)
    except ValueError as exc:
        raise ModelFormatError("model", str(exc)) from exc
    Path(path).write_text(text + "\n")


def _pair(doc, key):
    v = doc.get(key)
    if not isinstance(v, list) or len(v) != 2 or not all(isinstance(x, (int, float)) for x in v):
        raise ModelFormatError(key, "expected [min, max] numbers")
    return (float(v[0]), float(v[1]))


def model_from_dict(doc) -> CameraModel:
    if not isinstance(doc, dict):
        raise ModelFormatError("model", "top level must be a JSON object")
    if doc.get("magic") != MODEL_MAGIC:
        raise ModelFormatError("magic", f"expected {MODEL_MAGIC!r}, got {doc.get('magic')!r}")
    for key in ("height", "width"):
        if not isinstance(doc.get(key), int) or doc[key] < 2:
            raise ModelFormatError(key, "expected integer >= 2")
    deg = doc.get("degrees")
    if not isinstance(deg, dict):
        raise ModelFormatError("degrees", "missing")
    for key in ("m_gl", "m_spatial_fine", "m_radial", "m_ambient"):
        if not isinstance(deg.get(key), int) or deg[key] < 0:
            raise ModelFormatError(f"degrees.{key}", "expected integer >= 0")
    try:
        gamma = np.array(doc.get("gamma"), dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError("gamma", f"not a numeric array ({exc})") from exc
    want = (deg["m_gl"] + 1, deg["m_ambient"] + 1, deg["m_radial"] + 1)
    if gamma.shape != want:
        raise ModelFormatError("gamma", f"shape {gamma.shape} != {want}")
    if not np.all(np.isfinite(gamma)):
        raise ModelFormatError("gamma", "non-finite entry")
    noise = doc.get("noise_var_gl2")
    if not isinstance(noise, (int, float)):
        raise ModelFormatError("noise_var_gl2", "expected a number")
    return CameraModel(
        gamma=gamma,
        height=doc["height"],
        width=doc["width"],
        m_spatial_fine=deg["m_spatial_fine"],
        gl_bounds=_pair(doc, "gl_bounds"),
        temp_bounds=_pair(doc, "temp_bounds"),
        t_amb_range=_pair(doc, "t_amb_range"),
        noise_var_gl2=float(noise),
    )


def load_model(path) -> CameraModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelFormatError("file", f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError("file", f"{path}: malformed JSON ({exc})") from exc
    return model_from_dict(doc)
