"""Command-line entry point: ``thermonu <subcommand> ...``.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .characterize import characterize_camera
from .dataset import AugmentSpec, NormBounds, denormalize_gl, generate_dataset, normalize_gl
from .errors import ThermoNUError
from .estimate import estimate_linear, invert_polynomial, linear_gd_from_model
from .frameio import FrameHeader, ingest_campaign, read_frame, write_frame
from .metrics import MetricsConfig, frame_report
from .model import FitConfig, load_model, save_model
from .selfcal import reference_model, selfcal_check, synthesize_campaign
from .simulate import NoiseSpec, degrade, quantize, simulate_frame

log = logging.getLogger("thermonu")


class UsageError(Exception):
    pass


def parse_noise(text: str, seed: int) -> NoiseSpec:
    """Parse ``gaussian=5,fpn=0.9:1.0`` (either part optional)."""
    kw = {"gaussian_var": 0.0, "fpn_vmin": 1.0, "fpn_vmax": 1.0}
    for part in filter(None, text.split(",")):
        key, _, val = part.partition("=")
        try:
            if key == "gaussian":
                kw["gaussian_var"] = float(val)
            elif key == "fpn":
                lo, _, hi = val.partition(":")
                kw["fpn_vmin"], kw["fpn_vmax"] = float(lo), float(hi or lo)
            else:
                raise UsageError(f"unknown noise component {key!r}")
        except ValueError as exc:
            raise UsageError(f"bad noise spec {part!r}: {exc}") from exc
    try:
        return NoiseSpec(seed=seed, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _require(path: str | Path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise ThermoNUError(f"{what} not found: {p}")
    return p


def cmd_characterize(args) -> dict:
    campaign = _require(args.campaign, "campaign directory")
    cfg = FitConfig(m_gl=args.m_gl, m_spatial_fine=args.m_spatial_fine, m_radial=args.m_radial,
                    m_ambient=args.m_ambient, smoothing_sigma=args.sigma)
    points = ingest_campaign(campaign)
    model = characterize_camera(points, cfg)
    save_model(model, args.out)
    return {"model": str(args.out), "operating_points": len(points), "degrees": model.degrees,
            "noise_var_gl2": model.noise_var_gl2}


def cmd_simulate(args) -> dict:
    model = load_model(_require(args.model, "model file"))
    _, tmap = read_frame(_require(args.tobj, "temperature frame"))
    gl = simulate_frame(model, tmap.astype(float), args.tamb, any_geometry=args.any_geometry)
    if args.noise:
        if args.seed is None:
            raise UsageError("--seed is required with --noise")
        spec = parse_noise(args.noise, args.seed)
        b = NormBounds.from_model(model)
        gl = denormalize_gl(degrade(normalize_gl(gl, b), spec, b.gl_range), b)
    h, w = gl.shape
    clamped = 0
    if args.quantize:
        gl, clamped = quantize(gl)
        header = FrameHeader("u16", h, w, "graylevel", t_amb=args.tamb, seed=args.seed)
    else:
        header = FrameHeader("f32", h, w, "graylevel", t_amb=args.tamb, seed=args.seed)
    write_frame(header, gl, args.out)
    return {"out": str(args.out), "clamped": clamped}


def cmd_gen_dataset(args) -> dict:
    model = load_model(_require(args.model, "model file"))
    maps_dir = _require(args.maps, "maps directory")
    maps = [read_frame(p)[1].astype(float) for p in sorted(maps_dir.glob("*.tframe"))]
    spec = AugmentSpec(crop=tuple(args.crop) if args.crop else None, mode=args.mode)
    noise = parse_noise(args.noise, args.seed)
    records = generate_dataset(model, maps, spec, noise, args.out, count=args.count)
    return {"out": str(args.out), "samples": len(records), "mode": args.mode}


def cmd_estimate(args) -> dict:
    model = load_model(_require(args.model, "model file"))
    _, frame = read_frame(_require(args.frame, "gray-level frame"))
    frame = frame.astype(float)
    if args.method == "invert":
        temps, mask = invert_polynomial(model, frame, args.tamb)
    else:
        temps, mask = estimate_linear(linear_gd_from_model(model), frame, args.tamb)
    # the container rejects NaN: masked pixels are stored as T_min, see --mask
    temps = np.where(mask, model.temp_bounds[0], temps)
    h, w = temps.shape
    write_frame(FrameHeader("f32", h, w, "temperature", t_amb=args.tamb), temps, args.out)
    if args.mask:
        write_frame(FrameHeader("u16", h, w, "graylevel"), mask.astype(np.uint16), args.mask)
    return {"out": str(args.out), "masked_pixels": int(mask.sum())}


def _frames(path: Path) -> dict[str, Path]:
    if path.is_dir():
        return {p.name: p for p in sorted(path.glob("*.tframe"))}
    return {path.name: path}


def cmd_evaluate(args) -> dict:
    pred = _frames(_require(args.pred, "prediction path"))
    truth = _frames(_require(args.truth, "truth path"))
    if len(pred) == 1 and len(truth) == 1:
        pairs = [(next(iter(pred)), next(iter(pred.values())), next(iter(truth.values())))]
    else:
        missing = sorted(set(truth) - set(pred))
        if missing:
            raise ThermoNUError(f"no prediction for truth frames: {missing[:5]}")
        pairs = [(name, pred[name], truth[name]) for name in sorted(truth)]
    mask = read_frame(_require(args.mask, "mask frame"))[1].astype(bool) if args.mask else None
    cfg = MetricsConfig(data_range=args.data_range)
    rows = []
    for name, p, t in pairs:
        row = frame_report(read_frame(t)[1], read_frame(p)[1], cfg, mask)
        rows.append({"frame": name, **row})
    agg = {k: float(np.mean([r[k] for r in rows])) for k in ("mae", "psnr", "ssim")}
    report = {"data_range": cfg.data_range, "frames": rows, "aggregate": agg}
    Path(args.report).write_text(json.dumps(report, indent=1) + "\n")
    return report


def cmd_selfcal(args) -> dict:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.reference:
        ref = load_model(_require(args.reference, "reference model"))
    else:
        ref = reference_model(args.height, args.width, args.nu_depth)
    cfg = FitConfig(m_gl=args.m_gl, m_spatial_fine=args.m_spatial_fine, m_radial=args.m_radial,
                    m_ambient=args.m_ambient)
    report, rebuilt = selfcal_check(ref, noise_var=args.noise_var, n_frames=args.n_frames,
                                    seed=args.seed, cfg=cfg)
    save_model(ref, out / "reference.tcam.json")
    save_model(rebuilt, out / "rebuilt.tcam.json")
    if args.write_campaign:
        camp = out / "campaign"
        camp.mkdir(exist_ok=True)
        pts = synthesize_campaign(ref, noise_var=args.noise_var, n_frames=args.n_frames, seed=args.seed)
        h, w = ref.shape
        for i, p in enumerate(pts):
            header = FrameHeader("f32", h, w, "graylevel", t_amb=p.t_amb, t_obj=p.t_obj, seed=args.seed)
            write_frame(header, p.mean_frame, camp / f"op_{i:04d}.tframe")
    (out / "report.json").write_text(json.dumps(report, indent=1) + "\n")
    return report


def _add_fit_args(p, m_spatial_fine=15):
    p.add_argument("--m-gl", type=int, default=2)
    p.add_argument("--m-spatial-fine", type=int, default=m_spatial_fine)
    p.add_argument("--m-radial", type=int, default=8)
    p.add_argument("--m-ambient", type=int, default=3)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thermonu", description=__doc__.splitlines()[0])
    ap.add_argument("--json", action="store_true", help="print a JSON report on stdout")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("characterize", help="build a camera model from a campaign directory")
    p.add_argument("--campaign", required=True)
    p.add_argument("--out", required=True)
    _add_fit_args(p)
    p.add_argument("--sigma", type=float, default=1.0, help="coefficient smoothing sigma [px]")
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("simulate", help="synthesize a gray-level frame from a temperature map")
    p.add_argument("--model", required=True)
    p.add_argument("--tobj", required=True)
    p.add_argument("--tamb", type=float, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", help="e.g. gaussian=5,fpn=0.9:1.0")
    p.add_argument("--quantize", action="store_true", help="write 14-bit u16 gray levels")
    p.add_argument("--any-geometry", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-dataset", help="generate a supervised dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--maps", required=True)
    p.add_argument("--mode", choices=("train", "val"), default="train")
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--crop", type=int, nargs=2, default=(256, 256), metavar=("H", "W"))
    p.add_argument("--noise", default="gaussian=5,fpn=0.9:1.0")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("estimate", help="estimate temperatures from a gray-level frame")
    p.add_argument("--model", required=True)
    p.add_argument("--frame", required=True)
    p.add_argument("--tamb", type=float, required=True)
    p.add_argument("--method", choices=("invert", "linear"), default="invert")
    p.add_argument("--out", required=True)
    p.add_argument("--mask")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", help="score predicted temperature maps against truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--mask")
    p.add_argument("--data-range", type=float, default=100.0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("selfcal-check", help="synthesize, re-characterize and report reconstruction error")
    p.add_argument("--reference", help="reference model (default: built-in synthetic camera)")
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--width", type=int, default=336)
    p.add_argument("--nu-depth", type=float, default=0.014)
    p.add_argument("--noise-var", type=float, default=0.0)
    p.add_argument("--n-frames", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    _add_fit_args(p)
    p.add_argument("--write-campaign", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_selfcal)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            result = args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ThermoNUError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.json:
        print(json.dumps(result, indent=1))
    return 0


if __name__ == "__main__":
    sys.exit(main())
