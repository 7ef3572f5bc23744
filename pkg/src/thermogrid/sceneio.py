"""Scene metadata, ESRI ASCII grids, and the LST text artifact.

The metadata carrier is a small line-oriented ``key = value`` format with
``[band <id>]`` sections for per-band calibration constants; full MTL
parsing is out of scope.  Default calibration tables for TM and ETM+ are
shipped and any value can be overridden in the file.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .raster import DEFAULT_NODATA, RasterGrid


class SceneFormatError(ValueError):
    """Malformed scene file (ASCII grid, metadata, TIFF)."""


@dataclass(frozen=True)
class SceneContext:
    """Per-scene acquisition facts needed by the correction and LST steps."""

    sensor: str                                  # "TM" or "ETM+"
    acquisition_doy: int
    sun_zenith_deg: float
    earth_sun_distance_au: float | None = None
    water_vapour_g_cm2: float | None = None

    def __post_init__(self):
        if self.sensor not in ("TM", "ETM+"):
            raise SceneFormatError(f"unknown sensor {self.sensor!r}")
        if not 1 <= self.acquisition_doy <= 366:
            raise SceneFormatError(f"doy {self.acquisition_doy} outside 1..366")
        if not 0.0 <= self.sun_zenith_deg < 90.0:
            raise SceneFormatError(
                f"sun_zenith_deg {self.sun_zenith_deg} outside [0, 90)")
        if self.earth_sun_distance_au is not None and not (
                0.9 <= self.earth_sun_distance_au <= 1.1):
            raise SceneFormatError(
                f"earth_sun_distance_au {self.earth_sun_distance_au} "
                "outside [0.9, 1.1]")
        if self.water_vapour_g_cm2 is not None and self.water_vapour_g_cm2 < 0:
            raise SceneFormatError("water_vapour_g_cm2 must be >= 0")

    @property
    def sun_zenith_rad(self) -> float:
        return math.radians(self.sun_zenith_deg)

    def distance_au(self) -> float:
        """Earth-Sun distance, from the file or approximated from DOY."""
        if self.earth_sun_distance_au is not None:
            return self.earth_sun_distance_au
        return earth_sun_distance(self.acquisition_doy)

    def require_water_vapour(self) -> float:
        if self.water_vapour_g_cm2 is None:
            raise SceneFormatError(
                "water_vapour_g_cm2 is required for LST retrieval but "
                "missing from the scene metadata")
        return self.water_vapour_g_cm2


def earth_sun_distance(doy: int) -> float:
    """Earth-Sun distance in AU from day of year (annual cosine model)."""
    return 1.0 - 0.01672 * math.cos(math.radians(0.9856 * (doy - 4)))


@dataclass(frozen=True)
class BandCalibration:
    """Per-band constants: DN-to-radiance scaling plus thermal/solar terms.

    ``k1``/``k2``/``lambda_um`` are present for thermal bands only; ``e0``
    (exo-atmospheric solar irradiance) for reflective bands only.
    """

    band_id: str
    gain: float
    bias: float
    k1: float | None = None
    k2: float | None = None
    e0: float | None = None
    lambda_um: float | None = None

    def __post_init__(self):
        if self.gain <= 0:
            raise SceneFormatError(f"band {self.band_id}: gain must be > 0")
        for name in ("k1", "k2", "e0"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise SceneFormatError(
                    f"band {self.band_id}: {name} must be > 0")

    def require(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise SceneFormatError(
                    f"band {self.band_id}: calibration constant {name!r} "
                    "is required but not set")


# Defaults transcribed from the standard Landsat radiometric calibration
# summary; every value is overridable in the metadata file.
DEFAULT_CALIBRATIONS: dict[str, dict[str, BandCalibration]] = {
    "TM": {
        "1": BandCalibration("1", gain=0.765827, bias=-2.29, e0=1957.0),
        "2": BandCalibration("2", gain=1.448224, bias=-4.29, e0=1826.0),
        "3": BandCalibration("3", gain=1.043976, bias=-2.21, e0=1554.0),
        "4": BandCalibration("4", gain=0.876024, bias=-2.39, e0=1036.0),
        "5": BandCalibration("5", gain=0.120354, bias=-0.49, e0=215.0),
        "6": BandCalibration("6", gain=0.055158, bias=1.2378,
                             k1=607.76, k2=1260.56, lambda_um=11.457),
        "7": BandCalibration("7", gain=0.065551, bias=-0.22, e0=80.67),
    },
    "ETM+": {
        "1": BandCalibration("1", gain=0.778740, bias=-6.98, e0=1997.0),
        "2": BandCalibration("2", gain=0.798819, bias=-7.20, e0=1812.0),
        "3": BandCalibration("3", gain=0.621654, bias=-5.62, e0=1533.0),
        "4": BandCalibration("4", gain=0.639764, bias=-5.74, e0=1039.0),
        "5": BandCalibration("5", gain=0.126220, bias=-1.13, e0=230.8),
        "6.1": BandCalibration("6.1", gain=0.067087, bias=-0.07,
                               k1=666.09, k2=1282.71, lambda_um=11.269),
        "6.2": BandCalibration("6.2", gain=0.037205, bias=3.16,
                               k1=666.09, k2=1282.71, lambda_um=11.269),
        "7": BandCalibration("7", gain=0.043898, bias=-0.39, e0=84.90),
    },
}


@dataclass
class ClassifiedGrid:
    """Per-pixel class indices; index 0 is reserved for 'unclassified'."""

    labels: np.ndarray
    legend: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        if self.labels.ndim != 2:
            raise ValueError("labels must be 2-D")
        if self.labels.size and self.labels.max() > len(self.legend):
            raise ValueError(
                f"label {int(self.labels.max())} exceeds legend of "
                f"{len(self.legend)} classes")

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape


# ---------------------------------------------------------------------------
# ESRI ASCII grid

_ASCII_HEADER_KEYS = {
    "ncols": int, "nrows": int,
    "xllcorner": float, "yllcorner": float,
    "cellsize": float, "nodata_value": float,
}


def read_ascii_grid(path) -> RasterGrid:
    """Read an ESRI ASCII grid; header keys are case-insensitive."""
    path = Path(path)
    header: dict[str, float] = {}
    samples: list[float] = []
    expected = None
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            key = tokens[0].lower()
            if expected is None and key in _ASCII_HEADER_KEYS:
                if len(tokens) != 2:
                    raise SceneFormatError(
                        f"{path}:{lineno}: header line needs exactly one "
                        f"value, got {line.strip()!r}")
                try:
                    header[key] = _ASCII_HEADER_KEYS[key](tokens[1])
                except ValueError:
                    raise SceneFormatError(
                        f"{path}:{lineno}: bad value for {key}: "
                        f"{tokens[1]!r}") from None
                continue
            if expected is None:
                for req in ("ncols", "nrows"):
                    if req not in header:
                        raise SceneFormatError(
                            f"{path}:{lineno}: data encountered before "
                            f"header key {req}")
                expected = int(header["ncols"]) * int(header["nrows"])
            for tok in tokens:
                try:
                    samples.append(float(tok))
                except ValueError:
                    raise SceneFormatError(
                        f"{path}:{lineno}: non-numeric sample "
                        f"{tok!r}") from None
    if expected is None:
        raise SceneFormatError(f"{path}: no sample data found")
    if len(samples) != expected:
        raise SceneFormatError(
            f"{path}: expected {expected} samples "
            f"({int(header['ncols'])}x{int(header['nrows'])}), "
            f"got {len(samples)}")
    nodata = header.get("nodata_value", DEFAULT_NODATA)
    data = np.array(samples, dtype=np.float64).reshape(
        int(header["nrows"]), int(header["ncols"]))
    return RasterGrid(data, nodata=nodata)


def write_ascii_grid(grid: RasterGrid, path) -> None:
    """Write an ESRI ASCII grid; %.17g keeps float64 round-trips exact."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"ncols {grid.width}\n")
        fh.write(f"nrows {grid.height}\n")
        fh.write("xllcorner 0.0\n")
        fh.write("yllcorner 0.0\n")
        fh.write("cellsize 1.0\n")
        fh.write(f"NODATA_value {grid.nodata:.17g}\n")
        for row in grid.data:
            fh.write(" ".join(f"{v:.17g}" for v in row))
            fh.write("\n")


# ---------------------------------------------------------------------------
# Scene metadata

_SECTION_RE = re.compile(r"^\[band\s+(?P<id>\S+)\]$")

_CONTEXT_KEYS = {
    "sun_zenith_deg": float,
    "doy": int,
    "water_vapour_g_cm2": float,
    "earth_sun_distance_au": float,
}
_BAND_KEYS = ("gain", "bias", "k1", "k2", "e0", "lambda_um")


def read_scene_metadata(path) -> tuple[SceneContext, dict[str, BandCalibration]]:
    """Parse the key=value metadata file.

    Returns the scene context plus the band calibration table: shipped
    defaults for the declared sensor, updated by any ``[band <id>]``
    sections in the file.
    """
    path = Path(path)
    scalars: dict[str, object] = {}
    band_overrides: dict[str, dict[str, float]] = {}
    current: dict[str, float] | None = None

    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            m = _SECTION_RE.match(line)
            if m:
                current = band_overrides.setdefault(m.group("id"), {})
                continue
            if "=" not in line:
                raise SceneFormatError(
                    f"{path}:{lineno}: expected key = value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip().lower()
            value = value.strip()
            if current is not None:
                if key not in _BAND_KEYS:
                    raise SceneFormatError(
                        f"{path}:{lineno}: unknown band key {key!r}")
                try:
                    current[key] = float(value)
                except ValueError:
                    raise SceneFormatError(
                        f"{path}:{lineno}: unparsable number {value!r} "
                        f"for {key}") from None
            elif key == "sensor":
                scalars["sensor"] = value
            elif key in _CONTEXT_KEYS:
                try:
                    scalars[key] = _CONTEXT_KEYS[key](value)
                except ValueError:
                    raise SceneFormatError(
                        f"{path}:{lineno}: unparsable number {value!r} "
                        f"for {key}") from None
            else:
                raise SceneFormatError(
                    f"{path}:{lineno}: unknown key {key!r}")

    for req in ("sensor", "sun_zenith_deg", "doy"):
        if req not in scalars:
            raise SceneFormatError(f"{path}: missing required key {req!r}")

    ctx = SceneContext(
        sensor=str(scalars["sensor"]),
        acquisition_doy=int(scalars["doy"]),
        sun_zenith_deg=float(scalars["sun_zenith_deg"]),
        earth_sun_distance_au=scalars.get("earth_sun_distance_au"),
        water_vapour_g_cm2=scalars.get("water_vapour_g_cm2"),
    )

    bands = dict(DEFAULT_CALIBRATIONS[ctx.sensor])
    for band_id, overrides in band_overrides.items():
        base = bands.get(band_id)
        if base is None:
            if "gain" not in overrides or "bias" not in overrides:
                raise SceneFormatError(
                    f"{path}: band {band_id!r} has no default calibration; "
                    "gain and bias are required")
            bands[band_id] = BandCalibration(band_id, **overrides)
        else:
            bands[band_id] = replace(base, **overrides)
    return ctx, bands


def write_signatures(signatures, path) -> None:
    """Serialize class signatures in the same key=value idiom as metadata."""
    path = Path(path)
    with path.open("w") as fh:
        for sig in signatures:
            fh.write(f"[class {sig.class_name}]\n")
            for i, (lo, hi) in enumerate(sig.intervals):
                fh.write(f"band{i} = {lo:.17g} {hi:.17g}\n")


# ---------------------------------------------------------------------------
# LST text artifact

def write_lst_text(grid: RasterGrid, path) -> None:
    """One text line per pixel row, 2 decimals, nodata written as NA."""
    path = Path(path)
    mask = grid.valid_mask()
    with path.open("w") as fh:
        for r in range(grid.height):
            cells = [
                f"{grid.data[r, c]:.2f}" if mask[r, c] else "NA"
                for c in range(grid.width)
            ]
            fh.write(" ".join(cells))
            fh.write("\n")


def read_lst_text(path, nodata: float = DEFAULT_NODATA) -> RasterGrid:
    """Parse back a file produced by :func:`write_lst_text`."""
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            tokens = line.split()
            if tokens:
                rows.append([nodata if t == "NA" else float(t)
                             for t in tokens])
    if not rows:
        raise SceneFormatError(f"{path}: empty LST text file")
    return RasterGrid(np.array(rows, dtype=np.float64), nodata=nodata)
