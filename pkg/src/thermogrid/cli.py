"""Command-line entry point.

One subcommand per operation; ``pipeline`` chains calibration, NDVI,
emissivity and LST without intermediate files.  Exit codes: 0 ok, 2 usage,
3 input format, 4 worker/task failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import pipeline, sceneio, tiff
from .calibration import DEFAULT_DARK_FRACTION
from .classifier import confusion_matrix, parse_training_regions, train_classes
from .engine import scheduler
from .engine.worker import serve_worker
from .indices import EmissivityConfig
from .raster import RasterGrid, grid_stats
from .sceneio import SceneFormatError

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_TASK = 4

THERMAL_BAND = {"TM": "6", "ETM+": "6.1"}
RED_BAND, NIR_BAND = "3", "4"


def read_raster(path) -> RasterGrid:
    path = Path(path)
    if path.suffix.lower() in (".tif", ".tiff"):
        return tiff.read_tiff(path)
    return sceneio.read_ascii_grid(path)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--metadata", required=True,
                   help="scene metadata file (key = value)")
    p.add_argument("--band", action="append", default=[], metavar="ID=PATH",
                   help="band raster, repeatable")
    p.add_argument("--out", default=".", metavar="DIR",
                   help="output directory")
    p.add_argument("--tag", default="scene",
                   help="tag used in output file names")
    p.add_argument("--workers", default="local:1", metavar="local:N",
                   help="local worker slots")
    p.add_argument("--worker", action="append", default=[],
                   metavar="HOST:PORT", help="remote worker, repeatable")
    p.add_argument("--retry", type=int, default=1, metavar="N",
                   help="retries per failed job")
    p.add_argument("--static-tiling", action="store_true",
                   help="one-tile-per-worker static assignment")
    p.add_argument("--dos-fraction", type=float,
                   default=DEFAULT_DARK_FRACTION,
                   help="dark-object cumulative pixel fraction")
    p.add_argument("--ndvi-toa", action="store_true",
                   help="skip path-radiance removal before NDVI")


def _add_emissivity_knobs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ndvi-low", type=float, default=0.157)
    p.add_argument("--ndvi-high", type=float, default=0.727)
    p.add_argument("--eps-soil", type=float, default=0.97)
    p.add_argument("--eps-veg", type=float, default=0.99)
    p.add_argument("--eps-water", type=float, default=0.995)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermogrid",
        description="Landsat TM/ETM+ LST, NDVI, emissivity and land-cover "
                    "classification with tiled execution")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in [
        ("calibrate", "DN bands to at-surface reflectance rasters"),
        ("ndvi", "NDVI from bands 3 and 4"),
        ("emissivity", "land surface emissivity from NDVI"),
        ("lst", "LST map and LST text file"),
        ("pipeline", "calibrate, NDVI, emissivity and LST in one pass"),
    ]:
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        if name in ("emissivity", "lst", "pipeline"):
            _add_emissivity_knobs(p)

    p = sub.add_parser("classify", help="parallelepiped land-cover map")
    _add_common(p)
    p.add_argument("--train", required=True,
                   help="training regions: name row0 col0 row1 col1")
    p.add_argument("--classifier-mode", default="minmax",
                   metavar="minmax|meansigma:K")
    p.add_argument("--truth", help="reference classified TIFF for a "
                                   "confusion report")

    p = sub.add_parser("compare",
                       help="measured vs remote-sensed mean LST")
    p.add_argument("--lst-map", required=True,
                   help="LST raster (.tif) or LST text file")
    p.add_argument("--reading", action="append", default=[],
                   metavar="HH:MM=degC", required=True,
                   help="station reading, repeatable")
    p.add_argument("--overpass", required=True, metavar="HH:MM",
                   help="satellite overpass local time")
    p.add_argument("--reference", type=float,
                   help="station-reported LST at overpass, echoed verbatim")

    p = sub.add_parser("worker", help="serve as a remote worker")
    p.add_argument("--bind", default="127.0.0.1:0", metavar="HOST:PORT")
    p.add_argument("--die-after", type=int, metavar="N",
                   help="fault injection: exit after N results")

    return parser


# ---------------------------------------------------------------------------

def _workers(args) -> list[scheduler.WorkerDescriptor]:
    workers = [scheduler.parse_worker(args.workers)]
    workers.extend(scheduler.parse_worker(w) for w in args.worker)
    return workers


def _bands(args) -> dict[str, Path]:
    out = {}
    for item in args.band:
        if "=" not in item:
            raise UsageError(f"--band needs ID=PATH, got {item!r}")
        band_id, _, path = item.partition("=")
        out[band_id] = Path(path)
    return out


def _require_band(paths: dict, band_id: str) -> RasterGrid:
    if band_id not in paths:
        raise UsageError(f"--band {band_id}=PATH is required for this "
                         "operation")
    return read_raster(paths[band_id])


def _emissivity_cfg(args) -> EmissivityConfig:
    return EmissivityConfig(
        ndvi_low=args.ndvi_low, ndvi_high=args.ndvi_high,
        eps_soil=args.eps_soil, eps_veg=args.eps_veg,
        eps_water=args.eps_water)


class UsageError(Exception):
    pass


class Manifest:
    """Records every output file with a checksum."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.entries: list[dict] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def add(self, path: Path) -> None:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.entries.append({"file": path.name, "sha256": digest})
        print(f"wrote {path}")

    def write(self) -> None:
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps({"outputs": self.entries}, indent=2)
                        + "\n")


def _scene(args):
    ctx, cals = sceneio.read_scene_metadata(args.metadata)
    return ctx, cals


def _ndvi_grid(args, ctx, cals, workers):
    paths = _bands(args)
    red = _require_band(paths, RED_BAND)
    nir = _require_band(paths, NIR_BAND)
    return pipeline.ndvi_map(
        red, nir, ctx, cals[RED_BAND], cals[NIR_BAND], workers=workers,
        dos_fraction=args.dos_fraction, toa=args.ndvi_toa,
        retry_limit=args.retry, static=args.static_tiling)


def cmd_calibrate(args) -> int:
    ctx, cals = _scene(args)
    workers = _workers(args)
    paths = _bands(args)
    if not paths:
        raise UsageError("at least one --band ID=PATH is required")
    manifest = Manifest(Path(args.out))
    for band_id, path in paths.items():
        if band_id not in cals:
            raise UsageError(f"band {band_id!r} has no calibration in "
                             f"{args.metadata}")
        grid = read_raster(path)
        out = pipeline.reflectance_band(
            grid, ctx, cals[band_id], workers=workers,
            dos_fraction=args.dos_fraction, toa=args.ndvi_toa,
            retry_limit=args.retry, static=args.static_tiling)
        dest = manifest.out_dir / f"reflectance_{band_id}_{args.tag}.tif"
        tiff.write_tiff(out, dest)
        manifest.add(dest)
    manifest.write()
    return EXIT_OK


def cmd_ndvi(args) -> int:
    ctx, cals = _scene(args)
    workers = _workers(args)
    manifest = Manifest(Path(args.out))
    grid = _ndvi_grid(args, ctx, cals, workers)
    dest = manifest.out_dir / f"ndvi_{args.tag}.tif"
    tiff.write_tiff(grid, dest)
    manifest.add(dest)
    manifest.write()
    return EXIT_OK


def cmd_emissivity(args) -> int:
    ctx, cals = _scene(args)
    workers = _workers(args)
    manifest = Manifest(Path(args.out))
    ndvi_grid = _ndvi_grid(args, ctx, cals, workers)
    eps = pipeline.emissivity_map(ndvi_grid, _emissivity_cfg(args),
                                  workers=workers, retry_limit=args.retry,
                                  static=args.static_tiling)
    dest = manifest.out_dir / f"emissivity_{args.tag}.tif"
    tiff.write_tiff(eps, dest)
    manifest.add(dest)
    manifest.write()
    return EXIT_OK


def _run_lst(args, emit_intermediate: bool) -> int:
    ctx, cals = _scene(args)
    ctx.require_water_vapour()
    workers = _workers(args)
    paths = _bands(args)
    thermal_id = THERMAL_BAND[ctx.sensor]
    thermal = _require_band(paths, thermal_id)
    manifest = Manifest(Path(args.out))

    ndvi_grid = _ndvi_grid(args, ctx, cals, workers)
    if emit_intermediate:
        dest = manifest.out_dir / f"ndvi_{args.tag}.tif"
        tiff.write_tiff(ndvi_grid, dest)
        manifest.add(dest)
        eps = pipeline.emissivity_map(ndvi_grid, _emissivity_cfg(args),
                                      workers=workers,
                                      retry_limit=args.retry,
                                      static=args.static_tiling)
        dest = manifest.out_dir / f"emissivity_{args.tag}.tif"
        tiff.write_tiff(eps, dest)
        manifest.add(dest)

    lst_grid = pipeline.lst_scene(
        thermal, ndvi_grid, ctx, cals[thermal_id], _emissivity_cfg(args),
        workers=workers, retry_limit=args.retry, static=args.static_tiling)

    text_dest = manifest.out_dir / f"lst_{args.tag}.txt"
    sceneio.write_lst_text(lst_grid, text_dest)
    manifest.add(text_dest)
    map_dest = manifest.out_dir / f"lst_{args.tag}.tif"
    tiff.write_tiff(lst_grid, map_dest)
    manifest.add(map_dest)
    manifest.write()

    stats = grid_stats(lst_grid)
    if stats.count:
        print(f"mean LST (degC): {stats.mean:.2f} "
              f"(min {stats.min:.2f}, max {stats.max:.2f}, "
              f"{stats.count} pixels)")
    else:
        print("mean LST (degC): no valid pixels")
    return EXIT_OK


def cmd_lst(args) -> int:
    return _run_lst(args, emit_intermediate=False)


def cmd_pipeline(args) -> int:
    return _run_lst(args, emit_intermediate=True)


def cmd_classify(args) -> int:
    ctx, cals = _scene(args)
    workers = _workers(args)
    paths = _bands(args)
    if not paths:
        raise UsageError("at least one --band ID=PATH is required")
    bands = {band_id: read_raster(path) for band_id, path in paths.items()}

    mode, k = "minmax", 2.0
    if args.classifier_mode != "minmax":
        if not args.classifier_mode.startswith("meansigma"):
            raise UsageError(
                f"--classifier-mode must be minmax or meansigma:K, got "
                f"{args.classifier_mode!r}")
        _, _, ktext = args.classifier_mode.partition(":")
        mode = "mean_sigma"
        if ktext:
            k = float(ktext)

    regions = parse_training_regions(args.train)
    band_list = list(bands.values())
    signatures = train_classes(band_list, regions, mode=mode, k=k)

    classified = pipeline.classify_scene(bands, signatures, workers=workers,
                                         retry_limit=args.retry,
                                         static=args.static_tiling)
    manifest = Manifest(Path(args.out))
    dest = manifest.out_dir / f"classified_{args.tag}.tif"
    tiff.write_classified_tiff(classified, dest)
    manifest.add(dest)

    sig_dest = manifest.out_dir / f"signatures_{args.tag}.txt"
    sceneio.write_signatures(signatures, sig_dest)
    manifest.add(sig_dest)

    if args.truth:
        truth = tiff.read_classified_tiff(args.truth)
        result = confusion_matrix(classified, truth)
        report = manifest.out_dir / f"confusion_{args.tag}.txt"
        with report.open("w") as fh:
            fh.write("confusion matrix (rows=truth, cols=predicted)\n")
            for row in result.matrix:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")
            fh.write(f"overall accuracy: {result.overall_accuracy:.4f}\n")
        manifest.add(report)
        print(f"overall accuracy: {result.overall_accuracy:.4f}")
    manifest.write()
    return EXIT_OK


def _parse_time(text: str) -> float:
    hh, _, mm = text.partition(":")
    return int(hh) + int(mm) / 60.0


def cmd_compare(args) -> int:
    path = Path(args.lst_map)
    if path.suffix.lower() in (".tif", ".tiff"):
        grid = tiff.read_tiff(path)
    else:
        grid = sceneio.read_lst_text(path)
    stats = grid_stats(grid)
    if stats.count == 0:
        print("remote sensed LST: no valid pixels", file=sys.stderr)
        return EXIT_INPUT

    readings = []
    for item in args.reading:
        when, _, value = item.partition("=")
        readings.append((_parse_time(when), float(value)))
    readings.sort()
    overpass = _parse_time(args.overpass)

    print(f"remote sensed mean LST (degC): {stats.mean:.2f}")
    lo = max((r for r in readings if r[0] <= overpass), default=None)
    hi = min((r for r in readings if r[0] >= overpass), default=None)
    if lo and hi:
        if hi[0] == lo[0]:
            interpolated = lo[1]
        else:
            frac = (overpass - lo[0]) / (hi[0] - lo[0])
            interpolated = lo[1] + frac * (hi[1] - lo[1])
        print(f"station LST at overpass, linear interpolation (degC): "
              f"{interpolated:.2f}")
        print(f"  difference vs remote sensed (degC): "
              f"{stats.mean - interpolated:+.2f}")
    else:
        print("station readings do not bracket the overpass time; "
              "no interpolation")
    if args.reference is not None:
        # station networks interpolate by their own (undocumented)
        # convention; the user-supplied figure is reported as given
        print(f"station-reported LST at overpass (degC): {args.reference}")
        print(f"  difference vs remote sensed (degC): "
              f"{stats.mean - args.reference:+.2f}")
    return EXIT_OK


def cmd_worker(args) -> int:
    serve_worker(args.bind, die_after_results=args.die_after)
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "ndvi": cmd_ndvi,
    "emissivity": cmd_emissivity,
    "lst": cmd_lst,
    "pipeline": cmd_pipeline,
    "classify": cmd_classify,
    "compare": cmd_compare,
    "worker": cmd_worker,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SceneFormatError, FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except scheduler.TaskError as exc:
        print(f"task error: {exc}", file=sys.stderr)
        return EXIT_TASK


if __name__ == "__main__":
    sys.exit(main())
