"""Operation kernels and their JSON-serializable parameter forms.

A kernel sees only its tile's pixel data plus scalar parameters, so the
same code runs in-process and on a remote worker; everything scene-global
(calibration, atmospheric functions, class signatures, path radiance) is
resolved before splitting and travels inside the parameter block.
"""

from __future__ import annotations

from dataclasses import asdict

from ..calibration import at_surface_reflectance, dn_to_radiance
from ..classifier import ClassSignature, classify_map
from ..indices import EmissivityConfig, lse, ndvi
from ..lst import lst_map
from ..raster import RasterGrid, dn_histogram
from ..sceneio import BandCalibration, SceneContext

OP_CALIBRATE = "calibrate"
OP_NDVI = "ndvi"
OP_HISTOGRAM = "histogram"
OP_LST_MAP = "lst_map"
OP_CLASSIFY = "classify_map"
OP_EMISSIVITY = "emissivity"

OP_CODES = {
    OP_CALIBRATE: 1,
    OP_NDVI: 2,
    OP_HISTOGRAM: 3,
    OP_LST_MAP: 4,
    OP_CLASSIFY: 5,
    OP_EMISSIVITY: 6,
}
OP_NAMES = {code: name for name, code in OP_CODES.items()}

# which ops return what: needed to decode RESULT payloads
RASTER_OPS = {OP_CALIBRATE, OP_NDVI, OP_LST_MAP, OP_EMISSIVITY}
LABEL_OPS = {OP_CLASSIFY}
HISTOGRAM_OPS = {OP_HISTOGRAM}


def cal_to_params(cal: BandCalibration) -> dict:
    return {k: v for k, v in asdict(cal).items() if v is not None}


def cal_from_params(d: dict) -> BandCalibration:
    return BandCalibration(**d)


def ctx_to_params(ctx: SceneContext) -> dict:
    return {k: v for k, v in asdict(ctx).items() if v is not None}


def ctx_from_params(d: dict) -> SceneContext:
    return SceneContext(**d)


def signatures_to_params(signatures: list[ClassSignature]) -> list[dict]:
    return [{"class_name": s.class_name,
             "intervals": [list(iv) for iv in s.intervals]}
            for s in signatures]


def signatures_from_params(items: list[dict]) -> list[ClassSignature]:
    return [ClassSignature(d["class_name"],
                           tuple(tuple(iv) for iv in d["intervals"]))
            for d in items]


def run_op(op: str, bands: dict[str, RasterGrid], params: dict):
    """Execute one operation on one tile's bands."""
    if op == OP_CALIBRATE:
        cal = cal_from_params(params["cal"])
        radiance = dn_to_radiance(bands["dn"], cal)
        l_path = params.get("l_path")
        if l_path is None:
            return radiance
        # calibrate-to-reflectance: DOS path radiance was resolved globally
        ctx = ctx_from_params(params["ctx"])
        return at_surface_reflectance(radiance, l_path, ctx, cal)
    if op == OP_NDVI:
        return ndvi(bands["red"], bands["nir"])
    if op == OP_HISTOGRAM:
        return dn_histogram(bands["dn"], max_dn=params.get("max_dn", 255))
    if op == OP_EMISSIVITY:
        cfg = EmissivityConfig(**params.get("emissivity", {}))
        return lse(bands["ndvi"], cfg)
    if op == OP_LST_MAP:
        ctx = ctx_from_params(params["ctx"])
        cal = cal_from_params(params["cal"])
        cfg = EmissivityConfig(**params.get("emissivity", {}))
        return lst_map(bands["dn"], bands["ndvi"], ctx, cal, cfg)
    if op == OP_CLASSIFY:
        signatures = signatures_from_params(params["signatures"])
        ordered = [bands[name] for name in params["band_order"]]
        return classify_map(ordered, signatures)
    raise ValueError(f"unknown operation {op!r}")
