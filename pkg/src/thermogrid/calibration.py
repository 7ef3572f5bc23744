"""Radiometric conversion and image-based atmospheric correction.

DN to at-sensor radiance is a per-band affine scaling; path radiance is
estimated from the image itself by dark-object subtraction: the darkest
occupied DN bin is assumed to be a 1%-reflector, and everything it shows
above the radiance such a surface should produce is attributed to the
atmosphere.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .raster import DnHistogram, RasterGrid
from .sceneio import BandCalibration, SceneContext, SceneFormatError

log = logging.getLogger(__name__)

# the dark-object threshold: the cumulative pixel fraction that defines the
# "darkest" digital count
DEFAULT_DARK_FRACTION = 1e-4

REFLECTANCE_MAX = 1.2


@dataclass(frozen=True)
class AtmosphericCorrection:
    """Dark-object radiance, the 1%-reflector radiance, and their difference."""

    l_min: float
    l_one_percent: float

    @property
    def l_path(self) -> float:
        return max(self.l_min - self.l_one_percent, 0.0)


def dn_to_radiance(dn, cal: BandCalibration):
    """At-sensor radiance gain*DN + bias; works on scalars and grids."""
    if isinstance(dn, RasterGrid):
        out = cal.gain * dn.data + cal.bias
        out[~dn.valid_mask()] = dn.nodata
        return dn.with_data(out)
    return cal.gain * dn + cal.bias


def dark_object_radiance(hist: DnHistogram, cal: BandCalibration,
                         fraction: float = DEFAULT_DARK_FRACTION) -> float:
    """Radiance of the dark-object DN.

    The dark DN is the smallest value whose cumulative pixel count reaches
    ``fraction`` of the image; its radiance anchors the haze estimate.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    total = hist.total
    if total < 1:
        raise ValueError("cannot take a dark object from an empty histogram")
    # whole-pixel threshold: floor, but never below one pixel
    threshold = max(1, math.floor(fraction * total))
    cumulative = np.cumsum(hist.counts)
    dark_dn = int(np.searchsorted(cumulative, threshold, side="left"))
    return dn_to_radiance(dark_dn, cal)


def haze_radiance(ctx: SceneContext, cal: BandCalibration) -> float:
    """Radiance a 1%-reflector would produce at the sensor.

    Transmissivity is approximated by cos(zenith), so the zenith factor
    enters squared.
    """
    cal.require("e0")
    cz = math.cos(ctx.sun_zenith_rad)
    d = ctx.distance_au()
    return 0.01 * cz * cz * cal.e0 / (math.pi * d * d)


def path_radiance(l_min: float, l_one_percent: float) -> float:
    """Haze radiance difference, clamped at zero for very clear scenes."""
    l_p = l_min - l_one_percent
    if l_p < 0:
        log.warning(
            "negative path radiance %.4f clamped to 0 (scene clearer than "
            "the 1%%-reflector assumption)", l_p)
        return 0.0
    return l_p


def estimate_path_radiance(hist: DnHistogram, ctx: SceneContext,
                           cal: BandCalibration,
                           fraction: float = DEFAULT_DARK_FRACTION,
                           ) -> AtmosphericCorrection:
    """Full dark-object subtraction for one band."""
    l_min = dark_object_radiance(hist, cal, fraction)
    l_one = haze_radiance(ctx, cal)
    return AtmosphericCorrection(l_min=l_min, l_one_percent=l_one)


def at_surface_reflectance(l_sensor, l_path: float, ctx: SceneContext,
                           cal: BandCalibration):
    """Reflectance from at-sensor radiance; l_path=0 gives TOA reflectance.

    Grid results are clamped to [0, 1.2]; out-of-range pixels are counted
    and logged rather than treated as fatal.
    """
    cal.require("e0")
    cz = math.cos(ctx.sun_zenith_rad)
    if cz <= 0:
        raise SceneFormatError("sun zenith angle must be below 90 degrees")
    d = ctx.distance_au()
    scale = math.pi * d * d / (cal.e0 * cz * cz)
    if isinstance(l_sensor, RasterGrid):
        rho = (l_sensor.data - l_path) * scale
        valid = l_sensor.valid_mask()
        out_of_range = int(((rho < 0) | (rho > REFLECTANCE_MAX))[valid].sum())
        if out_of_range:
            log.warning("band %s: %d reflectance pixels outside [0, %.1f] "
                        "clamped", cal.band_id, out_of_range, REFLECTANCE_MAX)
        rho = np.clip(rho, 0.0, REFLECTANCE_MAX)
        rho[~valid] = l_sensor.nodata
        return l_sensor.with_data(rho)
    return (l_sensor - l_path) * scale
