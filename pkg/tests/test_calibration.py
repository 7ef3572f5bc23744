import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracle import oracle_haze_radiance, oracle_radiance, oracle_reflectance
from scenes import SCENE_1989, TM3, TM6, dos_scene
from thermogrid.calibration import (AtmosphericCorrection,
                                    at_surface_reflectance,
                                    dark_object_radiance, dn_to_radiance,
                                    estimate_path_radiance, haze_radiance,
                                    path_radiance)
from thermogrid.raster import DnHistogram, RasterGrid, dn_histogram
from thermogrid.sceneio import BandCalibration, SceneContext


CTX_40 = SceneContext("TM", 232, 40.0, earth_sun_distance_au=1.0106)


class TestDnToRadiance:
    def test_zero_dn_gives_bias(self):
        assert dn_to_radiance(0, TM6) == TM6.bias

    def test_tm6_scalar(self):
        assert dn_to_radiance(128, TM6) == pytest.approx(
            oracle_radiance(128, 0.055158, 1.2378), abs=1e-12)
        assert dn_to_radiance(128, TM6) == pytest.approx(8.2980, abs=5e-5)

    def test_example_255(self):
        cal = BandCalibration("x", gain=0.0370588, bias=3.2)
        assert dn_to_radiance(255, cal) == pytest.approx(12.65, abs=5e-5)

    def test_grid_nodata_passthrough(self):
        g = RasterGrid(np.array([[10.0, -9999.0]]))
        out = dn_to_radiance(g, TM6)
        assert out.data[0, 0] == pytest.approx(0.055158 * 10 + 1.2378)
        assert out.data[0, 1] == -9999.0


class TestDarkObject:
    def test_all_pixels_at_zero(self):
        counts = np.zeros(256, dtype=np.int64)
        counts[0] = 10 ** 6
        assert dark_object_radiance(DnHistogram(counts), TM6) == TM6.bias

    def test_threshold_scan(self):
        counts = np.zeros(256, dtype=np.int64)
        counts[5] = 100
        counts[50] = 10 ** 6
        hist = DnHistogram(counts)
        # brute-force cumulative scan at fraction 1e-4 (threshold 100 pixels)
        total = hist.total
        threshold = int(1e-4 * total)
        cum = 0
        expected_dn = None
        for dn, c in enumerate(counts):
            cum += c
            if cum >= threshold:
                expected_dn = dn
                break
        assert expected_dn == 5
        assert dark_object_radiance(hist, TM6, 1e-4) == pytest.approx(
            TM6.gain * 5 + TM6.bias)

    def test_empty_histogram(self):
        with pytest.raises(ValueError, match="empty"):
            dark_object_radiance(DnHistogram(np.zeros(256, dtype=int)), TM6)

    def test_bad_fraction(self):
        counts = np.zeros(256, dtype=np.int64)
        counts[0] = 1
        with pytest.raises(ValueError, match="fraction"):
            dark_object_radiance(DnHistogram(counts), TM6, 1.5)

    @given(st.integers(0, 2 ** 31), st.floats(1e-5, 0.5), st.floats(1e-5, 0.5))
    def test_monotone_in_fraction(self, seed, f1, f2):
        rng = np.random.default_rng(seed)
        counts = rng.integers(0, 50, size=256)
        if counts.sum() == 0:
            counts[10] = 1
        hist = DnHistogram(counts)
        lo_f, hi_f = sorted((f1, f2))
        assert (dark_object_radiance(hist, TM6, lo_f)
                <= dark_object_radiance(hist, TM6, hi_f))


class TestHazeRadiance:
    def test_constructed_identity(self):
        ctx = SceneContext("TM", 100, 0.0, earth_sun_distance_au=1.0)
        cal = BandCalibration("x", gain=1.0, bias=0.0, e0=math.pi / 0.01)
        assert haze_radiance(ctx, cal) == pytest.approx(1.0, abs=1e-12)

    def test_oracle_value(self):
        assert haze_radiance(CTX_40, TM3) == pytest.approx(
            oracle_haze_radiance(1554, 40, 1.0106), abs=1e-12)
        assert haze_radiance(CTX_40, TM3) == pytest.approx(2.842, abs=5e-4)

    def test_decreases_with_zenith(self):
        values = [haze_radiance(
            SceneContext("TM", 1, z, earth_sun_distance_au=1.0), TM3)
            for z in (0, 20, 40, 60, 80, 89.9)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_missing_e0(self):
        with pytest.raises(Exception, match="e0"):
            haze_radiance(CTX_40, TM6)


class TestPathRadiance:
    def test_equal_inputs(self):
        assert path_radiance(2.842, 2.842) == 0.0

    def test_difference(self):
        assert path_radiance(4.0, 2.842) == pytest.approx(1.158)

    def test_negative_clamped_with_warning(self, caplog):
        with caplog.at_level("WARNING"):
            assert path_radiance(1.0, 2.0) == 0.0
        assert "clamped" in caplog.text

    def test_correction_invariant(self):
        c = AtmosphericCorrection(l_min=4.0, l_one_percent=2.842)
        assert c.l_path == pytest.approx(4.0 - 2.842)


class TestReflectance:
    def test_sensor_equals_path(self):
        assert at_surface_reflectance(2.5, 2.5, CTX_40, TM3) == 0.0

    def test_oracle_value(self):
        rho = at_surface_reflectance(60.0, 2.5, CTX_40, TM3)
        assert rho == pytest.approx(
            oracle_reflectance(60, 2.5, 1554, 40, 1.0106), abs=1e-12)
        assert rho == pytest.approx(0.20231, abs=5e-6)

    def test_linearity(self):
        a = at_surface_reflectance(10.0, 2.0, CTX_40, TM3)
        b = at_surface_reflectance(18.0, 2.0, CTX_40, TM3)
        assert b == pytest.approx(2 * a, rel=1e-12)

    def test_affine_slope(self):
        d = CTX_40.distance_au()
        cz = math.cos(math.radians(40))
        expected_slope = math.pi * d * d / (TM3.e0 * cz * cz)
        r1 = at_surface_reflectance(10.0, 0.0, CTX_40, TM3)
        r2 = at_surface_reflectance(11.0, 0.0, CTX_40, TM3)
        assert (r2 - r1) == pytest.approx(expected_slope, rel=1e-12)

    def test_grid_clamped_and_counted(self, caplog):
        g = RasterGrid(np.array([[1000.0, 10.0, -9999.0]]))
        with caplog.at_level("WARNING"):
            out = at_surface_reflectance(g, 0.0, CTX_40, TM3)
        assert out.data[0, 0] == 1.2
        assert out.data[0, 2] == -9999.0
        assert "1 reflectance pixels" in caplog.text


class TestDosRecovery:
    def test_recovers_known_path_radiance(self):
        rng = np.random.default_rng(42)
        l_path_true = 1.8
        dn = dos_scene(rng, 256, 256, TM3, SCENE_1989, l_path_true)
        hist = dn_histogram(dn)
        correction = estimate_path_radiance(hist, SCENE_1989, TM3,
                                            fraction=1e-4)
        assert abs(correction.l_path - l_path_true) <= TM3.gain
