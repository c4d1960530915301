"""Closed-form temperature estimation from one gray-level frame and t_amb."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from . import _lsq
from .errors import MonotonicityError, SingularFitError
from .model import CameraModel, OperatingPoint
from .simulate import pixelwise_at


def _poly_deriv(maps: np.ndarray, t: float) -> np.ndarray:
    out = np.zeros(maps.shape[1:])
    for m in range(maps.shape[0] - 1, 0, -1):
        out = out * t + m * maps[m]
    return out


def _quadratic_root(b0, b1, b2, gl):
    """Root on the increasing branch of b2 t^2 + b1 t + b0 = gl, cancellation-free."""
    c = b0 - gl
    disc = b1 * b1 - 4.0 * b2 * c
    s = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(b1 >= 0, 2.0 * c / (-b1 - s), (-b1 + s) / (2.0 * b2))
    return root, disc


def _bisect(maps, gl, lo, hi, increasing, xtol, max_iter=200):
    """Vectorized bisection on [lo, hi] until every bracket is narrower than ``xtol``."""
    a = np.full(gl.shape, lo, dtype=float)
    b = np.full(gl.shape, hi, dtype=float)
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        if np.all(b - a < xtol):
            break
        f = _lsq.polyval_power(maps, mid)
        below = (f < gl) == increasing
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return 0.5 * (a + b)


def invert_polynomial(model: CameraModel, frame, t_amb: float, *, method: str = "auto"):
    """Solve ``sum_m beta_m(x, y) t**m = GL`` per pixel for t in the model's temp bounds.

    Returns ``(temperatures, mask)``; ``mask`` is True where the gray level has
    no root inside the bounds, and those temperatures are NaN. ``method`` is
    "auto" (closed form for quadratic increasing models), "closed" or "bisect".
    """
    frame = np.asarray(frame, dtype=float)
    if frame.shape != model.shape:
        raise ValueError(f"frame {frame.shape} does not match model {model.shape}")
    maps = pixelwise_at(model, t_amb).maps
    t_lo, t_hi = model.temp_bounds
    d_lo = _poly_deriv(maps, t_lo)
    d_hi = _poly_deriv(maps, t_hi)
    increasing = (d_lo > 0) & (d_hi > 0)
    decreasing = (d_lo < 0) & (d_hi < 0)
    bad = ~(increasing | decreasing)
    if bad.any():
        px = tuple(int(i) for i in np.argwhere(bad)[0])
        raise MonotonicityError(px, f"response not monotone over [{t_lo}, {t_hi}] at t_amb={t_amb}")
    if increasing.any() and decreasing.any():
        raise MonotonicityError(
            tuple(int(i) for i in np.argwhere(decreasing)[0]), "mixed response directions in frame"
        )
    inc = bool(increasing.flat[0])
    f_lo = _lsq.polyval_power(maps, t_lo)
    f_hi = _lsq.polyval_power(maps, t_hi)
    lo_gl, hi_gl = (f_lo, f_hi) if inc else (f_hi, f_lo)
    mask = (frame < lo_gl) | (frame > hi_gl)

    if method == "auto":
        method = "closed" if model.m_gl <= 2 and inc else "bisect"
    if method == "closed":
        if model.m_gl > 2 or not inc:
            raise ValueError("closed-form inversion needs an increasing model of degree <= 2")
        b = np.zeros((3,) + model.shape)
        b[: model.m_gl + 1] = maps
        t, disc = _quadratic_root(b[0], b[1], b[2], frame)
        mask |= disc < 0
    elif method == "bisect":
        t = _bisect(maps, frame, t_lo, t_hi, inc, 1e-9 * (t_hi - t_lo))
    else:
        raise ValueError(f"unknown method {method!r}")
    t = np.clip(t, t_lo, t_hi)
    t = np.where(frame == f_lo, t_lo, t)
    t = np.where(frame == f_hi, t_hi, t)
    return np.where(mask, np.nan, t), mask


@dataclass(frozen=True)
class LinearGD:
    """Per-pixel gain and offset as polynomials of t_amb: GL = G(t_amb) * t_obj + D(t_amb).

    ``g_poly[k]`` and ``d_poly[k]`` multiply ``t_amb**k``.
    """

    g_poly: np.ndarray
    d_poly: np.ndarray
    min_abs_gain: float

    @property
    def m_ambient(self) -> int:
        return self.g_poly.shape[0] - 1

    def gain(self, t_amb: float) -> np.ndarray:
        return _lsq.polyval_power(self.g_poly, t_amb)

    def offset(self, t_amb: float) -> np.ndarray:
        return _lsq.polyval_power(self.d_poly, t_amb)


def fit_linear_gd(points: list[OperatingPoint], m_ambient: int) -> LinearGD:
    by_amb: dict[float, list[OperatingPoint]] = defaultdict(list)
    for p in points:
        by_amb[p.t_amb].append(p)
    t_ambs = sorted(by_amb)
    if len(t_ambs) < m_ambient + 1:
        raise SingularFitError(f"{len(t_ambs)} ambient temperatures cannot determine degree {m_ambient}")
    shape = points[0].shape
    gains, offsets = [], []
    for t in t_ambs:
        pts = by_amb[t]
        x = np.array([p.t_obj for p in pts])
        Y = np.stack([p.mean_frame.ravel() for p in pts])
        c = _lsq.power_fit(x, Y, 1, what=f"gain/offset fit at t_amb={t}")
        offsets.append(c[0])
        gains.append(c[1])
    gains = np.stack(gains)
    g = _lsq.power_fit(t_ambs, gains, m_ambient, what="gain ambient fit")
    d = _lsq.power_fit(t_ambs, np.stack(offsets), m_ambient, what="offset ambient fit")
    k = m_ambient + 1
    return LinearGD(g.reshape((k,) + shape), d.reshape((k,) + shape), float(np.abs(gains).min()))


def estimate_linear(cal: LinearGD, frame, t_amb: float, gain_floor: float | None = None):
    """``(GL - D(t_amb)) / G(t_amb)`` per pixel; returns ``(temperatures, mask)``.

    Pixels whose |G| falls below ``gain_floor`` (default: half the smallest
    gain seen during calibration) are masked and set to NaN.
    """
    frame = np.asarray(frame, dtype=float)
    G = cal.gain(t_amb)
    D = cal.offset(t_amb)
    if frame.shape != G.shape:
        raise ValueError(f"frame {frame.shape} does not match calibration {G.shape}")
    floor = 0.5 * cal.min_abs_gain if gain_floor is None else gain_floor
    mask = np.abs(G) <= floor
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (frame - D) / G
    return np.where(mask, np.nan, t), mask


def linear_gd_from_model(model: CameraModel, n_obj: int = 9, n_amb: int | None = None) -> LinearGD:
    """Fit the gain/offset form to noiseless responses of ``model`` over its bounds."""
    from .simulate import simulate_frame

    n_amb = n_amb or model.m_ambient + 4
    lo, hi = model.t_amb_range
    t_ambs = np.linspace(lo, hi, n_amb) if hi > lo else np.array([lo])
    t_objs = np.linspace(*model.temp_bounds, n_obj)
    zero = np.zeros(model.shape)
    pts = [
        OperatingPoint(float(ta), float(to), simulate_frame(model, np.full(model.shape, to), ta), zero)
        for ta in t_ambs
        for to in t_objs
    ]
    return fit_linear_gd(pts, min(model.m_ambient, len(t_ambs) - 1))
