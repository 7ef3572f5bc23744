"""Straight-line scalar reference evaluator for the whole retrieval chain.

Written independently of the package, from the published formulas, using only
``math``.  Tests compare the engine against these functions; nothing in here
may import from thermogrid.
"""

import math

C1 = 1.19104e8   # W um^4 m^-2 sr^-1
C2 = 14387.7     # um K


def oracle_radiance(dn, gain, bias):
    return gain * dn + bias


def oracle_reflectance(l_sensor, l_path, e0, sun_zenith_deg, d_au):
    cz = math.cos(math.radians(sun_zenith_deg))
    # transmissivity approximated by cos(zenith)
    return math.pi * (l_sensor - l_path) * d_au * d_au / (e0 * cz * cz)


def oracle_haze_radiance(e0, sun_zenith_deg, d_au):
    cz = math.cos(math.radians(sun_zenith_deg))
    return 0.01 * cz * cz * e0 / (math.pi * d_au * d_au)


def oracle_ndvi(red, nir):
    if red + nir == 0:
        return None
    return (nir - red) / (nir + red)


def oracle_lse(ndvi, eps_water=0.995, eps_soil=0.97, eps_veg=0.99,
               lo=0.157, hi=0.727):
    if ndvi < 0:
        return eps_water
    if ndvi < lo:
        return eps_soil
    if ndvi > hi:
        return eps_veg
    return 1.0094 + 0.047 * math.log(ndvi)


def oracle_brightness_temperature(l_sensor, k1, k2):
    return k2 / math.log(k1 / l_sensor + 1.0)


def oracle_psi(w):
    psi1 = 0.1471 * w * w - 0.15583 * w + 1.1234
    psi2 = -1.1836 * w * w - 0.37607 * w - 0.52894
    psi3 = -0.04554 * w * w + 1.8719 * w - 0.39071
    return psi1, psi2, psi3


def oracle_gamma_delta(l_sensor, t_sensor, lambda_um):
    gamma = 1.0 / ((C2 * l_sensor / (t_sensor * t_sensor))
                   * (lambda_um ** 4 * l_sensor / C1 + 1.0 / lambda_um))
    delta = -gamma * l_sensor + t_sensor
    return gamma, delta


def oracle_lst_kelvin(l_sensor, eps, w, k1, k2, lambda_um):
    t_sensor = oracle_brightness_temperature(l_sensor, k1, k2)
    gamma, delta = oracle_gamma_delta(l_sensor, t_sensor, lambda_um)
    psi1, psi2, psi3 = oracle_psi(w)
    return gamma * ((psi1 * l_sensor + psi2) / eps + psi3) + delta


def oracle_lst_from_dn(dn, ndvi, w, gain, bias, k1, k2, lambda_um,
                       eps_cap=1.0):
    """Full per-pixel chain: DN -> radiance -> emissivity -> LST in Celsius."""
    l_sensor = oracle_radiance(dn, gain, bias)
    if l_sensor <= 0:
        return None
    eps = oracle_lse(ndvi)
    if eps > eps_cap:
        eps = eps_cap
    return oracle_lst_kelvin(l_sensor, eps, w, k1, k2, lambda_um) - 273.15
