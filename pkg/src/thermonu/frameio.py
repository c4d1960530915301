"""Frame container I/O, campaign ingestion and dataset manifests.

A ``.tframe`` file is one JSON header line, a newline, then the row-major
little-endian payload (``<f4`` or ``<u2``).
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import FrameFormatError, IngestError
from .model import OperatingPoint

log = logging.getLogger(__name__)

FRAME_MAGIC = "tframe1"
_DTYPES = {"f32": np.dtype("<f4"), "u16": np.dtype("<u2")}
_KINDS = ("temperature", "graylevel")


@dataclass(frozen=True)
class FrameHeader:
    dtype: str
    height: int
    width: int
    kind: str
    t_amb: float | None = None
    t_obj: float | None = None
    seed: int | None = None
    magic: str = FRAME_MAGIC

    def validate(self) -> None:
        if self.magic != FRAME_MAGIC:
            raise FrameFormatError(f"bad magic {self.magic!r}")
        if self.dtype not in _DTYPES:
            raise FrameFormatError(f"unknown dtype {self.dtype!r}")
        if self.kind not in _KINDS:
            raise FrameFormatError(f"unknown kind {self.kind!r}")
        if self.dtype == "u16" and self.kind != "graylevel":
            raise FrameFormatError("dtype u16 is only valid for kind 'graylevel'")
        if not (isinstance(self.height, int) and isinstance(self.width, int)):
            raise FrameFormatError("height and width must be integers")
        if self.height < 2 or self.width < 2:
            raise FrameFormatError(f"dims must be >= 2, got {self.height}x{self.width}")

    def to_json(self) -> str:
        doc = {k: v for k, v in asdict(self).items() if v is not None}
        return json.dumps(doc, sort_keys=True)


def _first_bad(mask: np.ndarray) -> tuple[int, int]:
    return tuple(int(i) for i in np.argwhere(mask)[0])


def write_frame(header: FrameHeader, payload, path) -> None:
    header.validate()
    arr = np.asarray(payload)
    if arr.shape != (header.height, header.width):
        raise FrameFormatError(
            f"payload shape {arr.shape} != header {(header.height, header.width)}"
        )
    if header.dtype == "u16":
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
                raise FrameFormatError("u16 payload must hold integers")
        out_of_range = (arr < 0) | (arr > 65535)
        if out_of_range.any():
            raise FrameFormatError(
                f"value {arr[out_of_range][0]} at pixel {_first_bad(out_of_range)} outside u16 range"
            )
    else:
        bad = ~np.isfinite(arr)
        if bad.any():
            raise FrameFormatError(f"non-finite value at pixel {_first_bad(bad)}")
    data = np.ascontiguousarray(arr, dtype=_DTYPES[header.dtype])
    with open(path, "wb") as fh:
        fh.write(header.to_json().encode() + b"\n")
        fh.write(data.tobytes())


def read_frame(path) -> tuple[FrameHeader, np.ndarray]:
    path = Path(path)
    raw = path.read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise FrameFormatError(f"{path}: missing header line")
    try:
        doc = json.loads(raw[:nl])
        header = FrameHeader(**doc)
    except (json.JSONDecodeError, TypeError, UnicodeDecodeError) as exc:
        raise FrameFormatError(f"{path}: malformed header ({exc})") from exc
    try:
        header.validate()
    except FrameFormatError as exc:
        raise FrameFormatError(f"{path}: {exc}") from exc
    dt = _DTYPES[header.dtype]
    body = raw[nl + 1 :]
    want = header.height * header.width * dt.itemsize
    if len(body) != want:
        raise FrameFormatError(
            f"{path}: payload has {len(body)} bytes, header "
            f"{header.height}x{header.width} {header.dtype} needs {want}"
        )
    arr = np.frombuffer(body, dtype=dt).reshape(header.height, header.width).copy()
    if header.dtype == "f32":
        bad = ~np.isfinite(arr)
        if bad.any():
            raise FrameFormatError(f"{path}: non-finite value at pixel {_first_bad(bad)}")
    return header, arr


def ingest_campaign(directory, pattern: str = "*.tframe") -> list[OperatingPoint]:
    """Average every (t_amb, t_obj) group of gray-level frames found in ``directory``.

    Returns operating points sorted by (t_amb, t_obj). The variance map is the
    per-pixel sample variance (divisor N-1); it is zero when N == 1.
    """
    files = sorted(Path(directory).glob(pattern))
    if not files:
        raise IngestError(f"no frames matching {pattern!r} in {directory}")
    groups: dict[tuple[float, float], list[np.ndarray]] = defaultdict(list)
    shape = None
    for f in files:
        header, arr = read_frame(f)
        if header.t_amb is None or header.t_obj is None:
            raise IngestError(f"{f}: header lacks t_amb/t_obj tags")
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise IngestError(f"{f}: dims {arr.shape} differ from campaign dims {shape}")
        groups[(float(header.t_amb), float(header.t_obj))].append(arr.astype(float))
    points = []
    for (t_amb, t_obj), frames in sorted(groups.items()):
        stack = np.stack(frames)
        n = stack.shape[0]
        mean = stack.mean(axis=0)
        var = stack.var(axis=0, ddof=1) if n > 1 else np.zeros_like(mean)
        points.append(OperatingPoint(t_amb, t_obj, mean, var, n))
    log.info("ingested %d frames into %d operating points", len(files), len(points))
    return points


def write_manifest(records, path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_manifest(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
