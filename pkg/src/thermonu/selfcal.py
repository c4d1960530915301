"""End-to-end oracle: synthesize a campaign from a known model, re-characterize, compare."""

from __future__ import annotations

import time

import numpy as np
from numpy.polynomial import Polynomial

from .characterize import characterize_camera
from .estimate import invert_polynomial
from .model import CameraModel, FitConfig, OperatingPoint
from .simulate import make_rng, simulate_frame

CHAMBER_T_AMB = (27.0, 31.0, 37.2, 38.9, 40.4, 41.5, 43.6, 44.7, 46.2, 46.8, 48.0, 50.8)
CHAMBER_T_OBJ = tuple(float(t) for t in range(20, 61, 5))

# Center-pixel response at t_amb = 38.9 C: 2215.32 + 0.36 t + 2.55 t^2.
_CENTER_AT_389 = (2215.32, 0.36, 2.55)
# Ambient sensitivity of each order, as polynomial coefficients in (t_amb - 38.9).
_AMBIENT_TERMS = ((14.0, 0.05, 0.001), (0.004,), (-0.003,))


def reference_model(height: int = 256, width: int = 336, nu_depth: float = 0.014) -> CameraModel:
    """A radially symmetric, skew-free synthetic camera.

    Every coefficient map falls off from the center as
    ``1 - nu_depth * (0.7 u^2 + 0.3 u^4)`` with ``u = P / P_corner``, so a flat
    scene shows a center-to-corner nonuniformity of ``nu_depth``.
    """
    pc2 = 0.5  # P_corner^2
    rho = np.array([1.0, 0.0, -nu_depth * 0.7 / pc2, 0.0, -nu_depth * 0.3 / pc2**2])
    shift = Polynomial([-38.9, 1.0])
    gamma = []
    for c0, terms in zip(_CENTER_AT_389, _AMBIENT_TERMS):
        raw = Polynomial((c0,) + terms)(shift).coef
        raw = np.pad(raw, (0, 4 - raw.size))
        gamma.append(np.outer(raw, rho))
    gamma = np.array(gamma)
    model = CameraModel(gamma, height, width, temp_bounds=(20.0, 60.0),
                        t_amb_range=(CHAMBER_T_AMB[0], CHAMBER_T_AMB[-1]))
    frames = [simulate_frame(model, np.full(model.shape, t), a)
              for a in (CHAMBER_T_AMB[0], CHAMBER_T_AMB[-1]) for t in (20.0, 60.0)]
    return CameraModel(gamma, height, width, temp_bounds=(20.0, 60.0),
                       gl_bounds=(min(f.min() for f in frames), max(f.max() for f in frames)),
                       t_amb_range=model.t_amb_range)


def synthesize_campaign(model: CameraModel, t_ambs=CHAMBER_T_AMB, t_objs=CHAMBER_T_OBJ,
                        noise_var: float = 0.0, n_frames: int = 1, seed: int = 0) -> list[OperatingPoint]:
    """Operating points a chamber run of ``model`` would produce.

    With noise, the N-frame average and sample variance are drawn from their
    exact distributions (normal with variance var/N, and var * chi2(N-1)/(N-1))
    instead of averaging N explicit frames.
    """
    points = []
    for i, ta in enumerate(t_ambs):
        for j, to in enumerate(t_objs):
            clean = simulate_frame(model, np.full(model.shape, float(to)), float(ta))
            if noise_var > 0:
                rng = make_rng(seed, i, j)
                mean = clean + np.sqrt(noise_var / n_frames) * rng.standard_normal(clean.shape)
                if n_frames > 1:
                    var = noise_var * rng.chisquare(n_frames - 1, clean.shape) / (n_frames - 1)
                else:
                    var = np.zeros_like(clean)
            else:
                mean, var = clean, np.zeros_like(clean)
            points.append(OperatingPoint(float(ta), float(to), mean, var, n_frames))
    return points


def pixel_r2(truth: np.ndarray, pred: np.ndarray) -> np.ndarray:
    """Per-pixel R^2 of responses stacked along axis 0 (one slice per t_obj)."""
    ss_res = ((truth - pred) ** 2).sum(axis=0)
    ss_tot = ((truth - truth.mean(axis=0)) ** 2).sum(axis=0)
    return 1.0 - ss_res / ss_tot


def selfcal_check(reference: CameraModel, t_ambs=CHAMBER_T_AMB, t_objs=CHAMBER_T_OBJ,
                  noise_var: float = 0.0, n_frames: int = 64, seed: int = 0,
                  cfg: FitConfig | None = None) -> tuple[dict, CameraModel]:
    """Re-characterize a synthetic campaign of ``reference`` and score the rebuilt model.

    R^2 is computed per pixel across the object-temperature series at each
    ambient temperature, against the noiseless reference responses.
    Relative error is |rebuilt - reference| / reference per pixel.
    """
    cfg = cfg or FitConfig()
    points = synthesize_campaign(reference, t_ambs, t_objs, noise_var, n_frames, seed)
    start = time.perf_counter()
    rebuilt = characterize_camera(points, cfg)
    elapsed = time.perf_counter() - start

    ops, series = [], []
    for ta in t_ambs:
        truth, pred = [], []
        for to in t_objs:
            tmap = np.full(reference.shape, float(to))
            y = simulate_frame(reference, tmap, ta)
            s = simulate_frame(rebuilt, tmap, ta)
            truth.append(y)
            pred.append(s)
            rel = np.abs(s - y) / np.abs(y)
            spatial_tot = ((y - y.mean()) ** 2).sum()
            ops.append({
                "t_amb": ta,
                "t_obj": to,
                "max_rel_err": float(rel.max()),
                "mean_rel_err": float(rel.mean()),
                "spatial_r2": float(1 - ((s - y) ** 2).sum() / spatial_tot) if spatial_tot > 0 else None,
            })
        r2 = pixel_r2(np.stack(truth), np.stack(pred))
        series.append({"t_amb": ta, "min_pixel_r2": float(r2.min()), "mean_pixel_r2": float(r2.mean())})

    maes = []
    interior = [t for t in t_objs if reference.temp_bounds[0] < t < reference.temp_bounds[1]]
    lo, hi = rebuilt.temp_bounds
    for ta in t_ambs:
        for to in interior:
            if not lo <= to <= hi:
                continue
            gl = simulate_frame(reference, np.full(reference.shape, to), ta)
            est, mask = invert_polynomial(rebuilt, gl, ta)
            if (~mask).any():
                maes.append(float(np.abs(est[~mask] - to).mean()))

    report = {
        "shape": list(reference.shape),
        "n_t_amb": len(t_ambs),
        "n_t_obj": len(t_objs),
        "noise_var_gl2": noise_var,
        "n_frames": n_frames,
        "characterize_seconds": elapsed,
        "min_pixel_r2": min(s["min_pixel_r2"] for s in series),
        "max_rel_err": max(o["max_rel_err"] for o in ops),
        "roundtrip_mae_c": float(np.mean(maes)) if maes else None,
        "series": series,
        "operating_points": ops,
    }
    return report, rebuilt
