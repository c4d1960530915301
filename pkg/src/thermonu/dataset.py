"""Normalization, augmentation and generation of (gray-level input, temperature target) pairs."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import GeometryError
from .frameio import FrameHeader, write_frame, write_manifest
from .model import CameraModel
from .simulate import NoiseSpec, gaussian_field, gen_fpn, make_rng, simulate_frame

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"


@dataclass(frozen=True)
class NormBounds:
    i_min: float
    i_max: float
    t_min: float
    t_max: float

    def __post_init__(self):
        if not (self.i_min < self.i_max and self.t_min < self.t_max):
            raise ValueError("normalization bounds must satisfy min < max")

    @classmethod
    def from_model(cls, model: CameraModel) -> "NormBounds":
        return cls(*model.gl_bounds, *model.temp_bounds)

    @property
    def gl_range(self) -> float:
        return self.i_max - self.i_min


def normalize_gl(frame, b: NormBounds):
    return (np.asarray(frame, dtype=float) - b.i_min) / (b.i_max - b.i_min)


def denormalize_gl(frame, b: NormBounds):
    return np.asarray(frame, dtype=float) * (b.i_max - b.i_min) + b.i_min


def normalize_temp(t, b: NormBounds):
    return (np.asarray(t, dtype=float) - b.t_min) / (b.t_max - b.t_min)


def denormalize_temp(t, b: NormBounds):
    return np.asarray(t, dtype=float) * (b.t_max - b.t_min) + b.t_min


@dataclass(frozen=True)
class AugmentSpec:
    """Crop/flip/rotation settings.

    ``crop=None`` keeps the full frame. In train mode a flip or rotation left
    as ``None`` is drawn at random; val mode always center-crops and never
    flips or rotates.
    """

    crop: tuple[int, int] | None = (256, 256)
    hflip: bool | None = None
    vflip: bool | None = None
    rot90: int | None = None
    mode: str = "train"

    def __post_init__(self):
        if self.mode not in ("train", "val"):
            raise ValueError(f"mode must be 'train' or 'val', got {self.mode!r}")

    @classmethod
    def identity(cls) -> "AugmentSpec":
        return cls(crop=None, hflip=False, vflip=False, rot90=0)


def augment(t_map, spec: AugmentSpec, seed: int = 0, rng: np.random.Generator | None = None):
    """Crop, flip and rotate a temperature map; returns ``(map, record)``."""
    t_map = np.asarray(t_map, dtype=float)
    h, w = t_map.shape
    ch, cw = spec.crop if spec.crop is not None else (h, w)
    if ch > h or cw > w:
        raise GeometryError(f"crop {ch}x{cw} larger than frame {h}x{w}")
    rng = rng if rng is not None else make_rng(seed)
    if spec.mode == "val":
        r0, c0 = (h - ch) // 2, (w - cw) // 2
        hflip = vflip = False
        k = 0
    else:
        r0 = int(rng.integers(0, h - ch + 1))
        c0 = int(rng.integers(0, w - cw + 1))
        hflip = bool(rng.integers(2)) if spec.hflip is None else spec.hflip
        vflip = bool(rng.integers(2)) if spec.vflip is None else spec.vflip
        k = int(rng.integers(4)) if spec.rot90 is None else spec.rot90 % 4
    out = t_map[r0 : r0 + ch, c0 : c0 + cw]
    if hflip:
        out = out[:, ::-1]
    if vflip:
        out = out[::-1, :]
    if k:
        out = np.rot90(out, k)
    record = {"crop_offset": [r0, c0], "crop_size": [ch, cw], "hflip": hflip, "vflip": vflip, "rot90": k}
    return np.ascontiguousarray(out), record


def generate_dataset(
    model: CameraModel,
    temp_maps,
    spec: AugmentSpec,
    noise: NoiseSpec,
    out_dir,
    count: int | None = None,
    bounds: NormBounds | None = None,
) -> list[dict]:
    """Synthesize training or validation pairs and write them with a JSON-lines manifest.

    Per sample: augment the temperature map, draw t_amb uniformly over the
    model's ambient range, simulate gray levels, normalize, then apply the
    multiplicative Gaussian and column FPN degradation. Sample ``i`` uses map
    ``i % len(temp_maps)``. Train samples draw from stream ``(seed, i)``; val
    samples draw from ``(seed, source index)``, so every reuse of a source map
    sees the same crop, t_amb, noise and FPN.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    temp_maps = list(temp_maps)
    bounds = bounds or NormBounds.from_model(model)
    n = len(temp_maps) if count is None else count
    if n and not temp_maps:
        raise ValueError("no temperature maps to sample from")
    t_lo, t_hi = model.t_amb_range
    records = []
    for i in range(n):
        src = i % len(temp_maps)
        key = src if spec.mode == "val" else i
        rng = make_rng(noise.seed, key)
        t_aug, aug = augment(temp_maps[src], spec, rng=rng)
        t_amb = float(rng.uniform(t_lo, t_hi))
        gl = simulate_frame(model, t_aug, t_amb, any_geometry=True)
        fpn = gen_fpn(*gl.shape, noise, rng=rng)
        field = gaussian_field(gl.shape, noise, bounds.gl_range, rng=rng)
        x = field * fpn * normalize_gl(gl, bounds)
        target = normalize_temp(t_aug, bounds)
        h, w = gl.shape
        in_name, tg_name = f"input_{i:06d}.tframe", f"target_{i:06d}.tframe"
        write_frame(FrameHeader("f32", h, w, "graylevel", t_amb=t_amb, seed=noise.seed), x, out_dir / in_name)
        write_frame(FrameHeader("f32", h, w, "temperature", t_amb=t_amb, seed=noise.seed), target, out_dir / tg_name)
        records.append({
            "index": i,
            "source_index": src,
            "input_frame_path": in_name,
            "target_frame_path": tg_name,
            "t_amb": t_amb,
            "seed": noise.seed,
            "stream": [noise.seed, key],
            "augmentation": aug,
            "split": spec.mode,
            "norm": asdict(bounds),
        })
    write_manifest(records, out_dir / MANIFEST_NAME)
    log.info("wrote %d %s samples to %s", n, spec.mode, out_dir)
    return records
