"""Single-channel land surface temperature retrieval.

The chain per pixel: DN -> at-sensor radiance -> brightness temperature ->
linearization (gamma, delta) -> emissivity correction with the three
water-vapour-dependent atmospheric functions.  Only one ground parameter
(total column water vapour) is needed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .calibration import dn_to_radiance
from .indices import EmissivityConfig, lse
from .raster import RasterGrid
from .sceneio import BandCalibration, SceneContext

log = logging.getLogger(__name__)

# Planck-law constants for wavelength in um and radiance in W m^-2 sr^-1 um^-1
C1 = 1.19104e8
C2 = 14387.7

KELVIN_OFFSET = 273.15

# polynomial fit validity range for the atmospheric functions
PSI_FIT_RANGE = (0.5, 3.0)


@dataclass(frozen=True)
class PsiCoefficients:
    """Atmospheric functions evaluated at one water-vapour content."""

    psi1: float
    psi2: float
    psi3: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.psi1, self.psi2, self.psi3)


def psi(w: float) -> PsiCoefficients:
    """Atmospheric functions from column water vapour w (g/cm^2).

    Quadratic fits particular to the TM/ETM+ thermal band.  Outside
    roughly 0.5..3 g/cm^2 the fit is extrapolating; a warning is logged.
    """
    if w < 0:
        raise ValueError(f"water vapour must be >= 0, got {w}")
    if not PSI_FIT_RANGE[0] <= w <= PSI_FIT_RANGE[1]:
        log.warning("water vapour %.2f g/cm^2 outside fit range %s; "
                    "coefficients are extrapolated", w, PSI_FIT_RANGE)
    return PsiCoefficients(
        psi1=0.1471 * w * w - 0.15583 * w + 1.1234,
        psi2=-1.1836 * w * w - 0.37607 * w - 0.52894,
        psi3=-0.04554 * w * w + 1.8719 * w - 0.39071,
    )


def brightness_temperature(l_sensor, cal: BandCalibration):
    """Blackbody-equivalent temperature in kelvin from thermal radiance.

    Scalars with nonpositive radiance return NaN; grid pixels become
    nodata.
    """
    cal.require("k1", "k2")
    if isinstance(l_sensor, RasterGrid):
        valid = l_sensor.valid_mask() & (l_sensor.data > 0)
        out = np.full(l_sensor.shape, l_sensor.nodata, dtype=np.float64)
        l = l_sensor.data
        np.divide(cal.k2, np.log1p(np.divide(cal.k1, l, where=valid,
                                             out=np.ones_like(l))),
                  where=valid, out=out)
        out[~valid] = l_sensor.nodata
        return l_sensor.with_data(out)
    if l_sensor <= 0:
        return float("nan")
    return cal.k2 / math.log(cal.k1 / l_sensor + 1.0)


def radiance_from_temperature(t_kelvin: float, cal: BandCalibration) -> float:
    """Inverse of :func:`brightness_temperature` for scalars."""
    cal.require("k1", "k2")
    return cal.k1 / (math.exp(cal.k2 / t_kelvin) - 1.0)


def gamma_delta(l_sensor, t_sensor, cal: BandCalibration):
    """Linearization terms of the Planck law around the sensor radiance.

    delta is defined so that delta + gamma * L_sensor = T_sensor exactly.
    """
    cal.require("lambda_um")
    lam = cal.lambda_um
    if isinstance(l_sensor, np.ndarray) or isinstance(t_sensor, np.ndarray):
        l = np.asarray(l_sensor, dtype=np.float64)
        t = np.asarray(t_sensor, dtype=np.float64)
        gamma = 1.0 / ((C2 * l / (t * t)) * (lam ** 4 * l / C1 + 1.0 / lam))
        return gamma, -gamma * l + t
    if l_sensor <= 0 or t_sensor <= 0:
        return float("nan"), float("nan")
    gamma = 1.0 / ((C2 * l_sensor / (t_sensor * t_sensor))
                   * (lam ** 4 * l_sensor / C1 + 1.0 / lam))
    return gamma, -gamma * l_sensor + t_sensor


def lst_pixel(l_sensor: float, eps: float, coeffs: PsiCoefficients,
              cal: BandCalibration) -> float:
    """Surface temperature in kelvin for one pixel."""
    if not 0.0 < eps <= 1.0 or l_sensor <= 0:
        return float("nan")
    t_sensor = brightness_temperature(l_sensor, cal)
    gamma, delta = gamma_delta(l_sensor, t_sensor, cal)
    return gamma * ((coeffs.psi1 * l_sensor + coeffs.psi2) / eps
                    + coeffs.psi3) + delta


def lst_map(thermal_dn: RasterGrid, ndvi_grid: RasterGrid,
            ctx: SceneContext, cal: BandCalibration,
            cfg: EmissivityConfig = EmissivityConfig()) -> RasterGrid:
    """LST in Celsius over a scene; nodata propagates from either input.

    The atmospheric functions are evaluated once per scene from the scalar
    water vapour value, then every pixel is independent, which is what
    makes the tiled execution exact.
    """
    if thermal_dn.shape != ndvi_grid.shape:
        raise ValueError(
            f"thermal and NDVI shapes differ: {thermal_dn.shape} vs "
            f"{ndvi_grid.shape}")
    cal.require("k1", "k2", "lambda_um")
    w = ctx.require_water_vapour()
    coeffs = psi(w)

    radiance = dn_to_radiance(thermal_dn, cal)
    eps_grid = lse(ndvi_grid, cfg)
    # the log fit exceeds 1 above the vegetation threshold; cap defensively
    eps = np.minimum(eps_grid.data, 1.0)

    valid = (radiance.valid_mask() & (radiance.data > 0)
             & eps_grid.valid_mask() & (eps > 0))
    l = np.where(valid, radiance.data, 1.0)
    e = np.where(valid, eps, 1.0)

    t_sensor = cal.k2 / np.log1p(cal.k1 / l)
    gamma, delta = gamma_delta(l, t_sensor, cal)
    ts = gamma * ((coeffs.psi1 * l + coeffs.psi2) / e + coeffs.psi3) + delta

    out = np.full(thermal_dn.shape, thermal_dn.nodata, dtype=np.float64)
    out[valid] = ts[valid] - KELVIN_OFFSET
    return thermal_dn.with_data(out)
