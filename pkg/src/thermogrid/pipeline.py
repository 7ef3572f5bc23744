"""Scene-level composition of the processing stages.

Each function resolves the scene-global scalars (DOS path radiance,
atmospheric functions, calibration) on the coordinator, then fans the
pixel work out through the execution engine.
"""

from __future__ import annotations

from .calibration import (DEFAULT_DARK_FRACTION, estimate_path_radiance)
from .classifier import ClassSignature
from .engine import ops, scheduler
from .indices import EmissivityConfig
from .raster import RasterGrid
from .sceneio import BandCalibration, SceneContext


def reflectance_band(dn: RasterGrid, ctx: SceneContext, cal: BandCalibration,
                     workers=None, dos_fraction: float = DEFAULT_DARK_FRACTION,
                     toa: bool = False, retry_limit: int = 1,
                     static: bool = False) -> RasterGrid:
    """DN band to (at-surface or TOA) reflectance.

    At-surface runs in two phases: a global histogram reduce for the
    dark-object statistic, then the per-pixel pass with the resolved path
    radiance.
    """
    if toa:
        l_path = 0.0
    else:
        hist = scheduler.run_task(ops.OP_HISTOGRAM, {"dn": dn},
                                  {"max_dn": 255}, workers=workers,
                                  retry_limit=retry_limit, static=static)
        correction = estimate_path_radiance(hist, ctx, cal,
                                            fraction=dos_fraction)
        l_path = correction.l_path
    params = {"cal": ops.cal_to_params(cal), "ctx": ops.ctx_to_params(ctx),
              "l_path": l_path}
    return scheduler.run_task(ops.OP_CALIBRATE, {"dn": dn}, params,
                              workers=workers, retry_limit=retry_limit,
                              static=static)


def ndvi_map(red_dn: RasterGrid, nir_dn: RasterGrid, ctx: SceneContext,
             red_cal: BandCalibration, nir_cal: BandCalibration,
             workers=None, dos_fraction: float = DEFAULT_DARK_FRACTION,
             toa: bool = False, retry_limit: int = 1,
             static: bool = False) -> RasterGrid:
    red = reflectance_band(red_dn, ctx, red_cal, workers, dos_fraction, toa,
                           retry_limit, static)
    nir = reflectance_band(nir_dn, ctx, nir_cal, workers, dos_fraction, toa,
                           retry_limit, static)
    return scheduler.run_task(ops.OP_NDVI, {"red": red, "nir": nir}, {},
                              workers=workers, retry_limit=retry_limit,
                              static=static)


def emissivity_map(ndvi_grid: RasterGrid,
                   cfg: EmissivityConfig = EmissivityConfig(),
                   workers=None, retry_limit: int = 1,
                   static: bool = False) -> RasterGrid:
    return scheduler.run_task(
        ops.OP_EMISSIVITY, {"ndvi": ndvi_grid},
        {"emissivity": _cfg_params(cfg)}, workers=workers,
        retry_limit=retry_limit, static=static)


def lst_scene(thermal_dn: RasterGrid, ndvi_grid: RasterGrid,
              ctx: SceneContext, thermal_cal: BandCalibration,
              cfg: EmissivityConfig = EmissivityConfig(),
              workers=None, retry_limit: int = 1,
              static: bool = False) -> RasterGrid:
    """LST in Celsius from the thermal DN band and a ready NDVI grid."""
    params = {
        "ctx": ops.ctx_to_params(ctx),
        "cal": ops.cal_to_params(thermal_cal),
        "emissivity": _cfg_params(cfg),
    }
    return scheduler.run_task(ops.OP_LST_MAP,
                              {"dn": thermal_dn, "ndvi": ndvi_grid},
                              params, workers=workers,
                              retry_limit=retry_limit, static=static)


def classify_scene(bands: dict[str, RasterGrid],
                   signatures: list[ClassSignature],
                   workers=None, retry_limit: int = 1, static: bool = False):
    params = {
        "signatures": ops.signatures_to_params(signatures),
        "band_order": list(bands),
    }
    return scheduler.run_task(ops.OP_CLASSIFY, dict(bands), params,
                              workers=workers, retry_limit=retry_limit,
                              static=static)


def _cfg_params(cfg: EmissivityConfig) -> dict:
    return {
        "ndvi_low": cfg.ndvi_low, "ndvi_high": cfg.ndvi_high,
        "eps_soil": cfg.eps_soil, "eps_veg": cfg.eps_veg,
        "eps_water": cfg.eps_water,
    }
