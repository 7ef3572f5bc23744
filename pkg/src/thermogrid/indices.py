"""NDVI and NDVI-threshold land surface emissivity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import RasterGrid


@dataclass(frozen=True)
class EmissivityConfig:
    """Thresholds and constant emissivities for the NDVI-thresholds method.

    Between the two NDVI thresholds the logarithmic fit applies; outside,
    the constant soil/vegetation/water emissivities are used.
    """

    ndvi_low: float = 0.157
    ndvi_high: float = 0.727
    eps_soil: float = 0.97
    eps_veg: float = 0.99
    eps_water: float = 0.995

    def __post_init__(self):
        if not self.ndvi_low < self.ndvi_high:
            raise ValueError("ndvi_low must be below ndvi_high")
        for name in ("eps_soil", "eps_veg", "eps_water"):
            v = getattr(self, name)
            if not 0.9 < v <= 1.0:
                raise ValueError(f"{name}={v} outside (0.9, 1.0]")


def ndvi(red: RasterGrid, nir: RasterGrid) -> RasterGrid:
    """(NIR - red) / (NIR + red), nodata where undefined.

    A zero denominator or nodata in either input propagates as nodata.
    """
    if red.shape != nir.shape:
        raise ValueError(f"band shapes differ: {red.shape} vs {nir.shape}")
    num = nir.data - red.data
    den = nir.data + red.data
    valid = red.valid_mask() & nir.valid_mask() & (den != 0)
    out = np.full(red.shape, red.nodata, dtype=np.float64)
    np.divide(num, den, out=out, where=valid)
    return red.with_data(out)


def lse_scalar(ndvi_value: float, cfg: EmissivityConfig = EmissivityConfig()
               ) -> float:
    """Emissivity for one NDVI value."""
    if ndvi_value < 0:
        return cfg.eps_water
    if ndvi_value < cfg.ndvi_low:
        return cfg.eps_soil
    if ndvi_value > cfg.ndvi_high:
        return cfg.eps_veg
    return 1.0094 + 0.047 * np.log(ndvi_value)


def lse(ndvi_grid: RasterGrid, cfg: EmissivityConfig = EmissivityConfig()
        ) -> RasterGrid:
    """Per-pixel emissivity from an NDVI grid; nodata passes through."""
    v = ndvi_grid.data
    valid = ndvi_grid.valid_mask()
    out = np.full(ndvi_grid.shape, ndvi_grid.nodata, dtype=np.float64)

    out[valid & (v < 0)] = cfg.eps_water
    out[valid & (v >= 0) & (v < cfg.ndvi_low)] = cfg.eps_soil
    out[valid & (v > cfg.ndvi_high)] = cfg.eps_veg
    fit = valid & (v >= cfg.ndvi_low) & (v <= cfg.ndvi_high)
    out[fit] = 1.0094 + 0.047 * np.log(v[fit])
    return ndvi_grid.with_data(out)
