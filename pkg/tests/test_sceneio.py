import math

import numpy as np
import pytest

from thermogrid.raster import RasterGrid
from thermogrid.sceneio import (DEFAULT_CALIBRATIONS, BandCalibration,
                                SceneContext, SceneFormatError,
                                earth_sun_distance, read_ascii_grid,
                                read_lst_text, read_scene_metadata,
                                write_ascii_grid, write_lst_text)


class TestSceneContext:
    def test_valid(self):
        ctx = SceneContext("TM", 232, 40.0, water_vapour_g_cm2=2.0)
        assert ctx.sensor == "TM"

    def test_bad_sensor(self):
        with pytest.raises(SceneFormatError):
            SceneContext("MSS", 100, 30.0)

    def test_zenith_at_90_rejected(self):
        with pytest.raises(SceneFormatError):
            SceneContext("TM", 100, 90.0)

    def test_distance_from_doy(self):
        # independent evaluation of 1 - 0.01672 cos(0.9856 deg (doy - 4))
        expected = 1 - 0.01672 * math.cos(math.radians(0.9856 * (232 - 4)))
        ctx = SceneContext("TM", 232, 40.0)
        assert ctx.distance_au() == pytest.approx(expected, abs=1e-12)
        assert earth_sun_distance(232) == pytest.approx(expected)

    def test_explicit_distance_wins(self):
        ctx = SceneContext("TM", 232, 40.0, earth_sun_distance_au=1.0106)
        assert ctx.distance_au() == 1.0106

    def test_missing_water_vapour_named_in_error(self):
        ctx = SceneContext("TM", 232, 40.0)
        with pytest.raises(SceneFormatError, match="water_vapour_g_cm2"):
            ctx.require_water_vapour()


class TestBandCalibration:
    def test_tm6_defaults(self):
        cal = DEFAULT_CALIBRATIONS["TM"]["6"]
        # transcribed from the cited calibration reference
        assert cal.gain == 0.055158
        assert cal.bias == 1.2378
        assert cal.k1 == 607.76
        assert cal.k2 == 1260.56
        assert cal.lambda_um == 11.457

    def test_etm_thermal_defaults(self):
        cal = DEFAULT_CALIBRATIONS["ETM+"]["6.1"]
        assert cal.k1 == 666.09
        assert cal.k2 == 1282.71
        assert cal.lambda_um == 11.269

    def test_gain_must_be_positive(self):
        with pytest.raises(SceneFormatError):
            BandCalibration("x", gain=0.0, bias=1.0)

    def test_require_names_missing_constant(self):
        cal = BandCalibration("3", gain=1.0, bias=0.0, e0=1554.0)
        with pytest.raises(SceneFormatError, match="k1"):
            cal.require("k1")


class TestAsciiGrid:
    def test_minimal(self, tmp_path):
        p = tmp_path / "g.asc"
        p.write_text("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\n"
                     "cellsize 1\n5 7\n")
        g = read_ascii_grid(p)
        assert g.shape == (1, 2)
        assert list(g.data[0]) == [5.0, 7.0]

    def test_nodata_honoured(self, tmp_path):
        p = tmp_path / "g.asc"
        p.write_text("ncols 2\nnrows 1\nNODATA_value -9999\n1 -9999\n")
        g = read_ascii_grid(p)
        assert g.nodata == -9999
        assert g.valid_values().tolist() == [1.0]

    def test_short_data_reports_count(self, tmp_path):
        p = tmp_path / "g.asc"
        p.write_text("ncols 3\nnrows 2\n1 2 3\n")
        with pytest.raises(SceneFormatError, match="expected 6 samples"):
            read_ascii_grid(p)

    def test_non_numeric_token_reports_line(self, tmp_path):
        p = tmp_path / "g.asc"
        p.write_text("ncols 2\nnrows 1\n1 oops\n")
        with pytest.raises(SceneFormatError, match=r"g\.asc:3"):
            read_ascii_grid(p)

    def test_bad_header_value_reports_line(self, tmp_path):
        p = tmp_path / "g.asc"
        p.write_text("ncols two\nnrows 1\n1 2\n")
        with pytest.raises(SceneFormatError, match=r"g\.asc:1"):
            read_ascii_grid(p)

    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(11)
        data = rng.standard_normal((64, 64)) * 1e3
        data[rng.random((64, 64)) < 0.05] = -9999.0
        g = RasterGrid(data)
        p = tmp_path / "rt.asc"
        write_ascii_grid(g, p)
        back = read_ascii_grid(p)
        assert np.array_equal(back.data, g.data)
        assert back.nodata == g.nodata


class TestSceneMetadata:
    def test_minimal_1989_scene(self, tmp_path):
        p = tmp_path / "scene.txt"
        p.write_text("# 20 Aug 1989 acquisition\n"
                     "sensor = TM\nsun_zenith_deg = 40\ndoy = 232\n"
                     "water_vapour_g_cm2 = 2.0\n")
        ctx, bands = read_scene_metadata(p)
        assert ctx.sensor == "TM"
        assert ctx.acquisition_doy == 232
        assert ctx.water_vapour_g_cm2 == 2.0
        assert bands["6"].k1 == 607.76

    def test_missing_required_key(self, tmp_path):
        p = tmp_path / "scene.txt"
        p.write_text("sensor = TM\ndoy = 100\n")
        with pytest.raises(SceneFormatError, match="sun_zenith_deg"):
            read_scene_metadata(p)

    def test_unparsable_number(self, tmp_path):
        p = tmp_path / "scene.txt"
        p.write_text("sensor = TM\nsun_zenith_deg = forty\ndoy = 1\n")
        with pytest.raises(SceneFormatError, match="forty"):
            read_scene_metadata(p)

    def test_zenith_over_90(self, tmp_path):
        p = tmp_path / "scene.txt"
        p.write_text("sensor = TM\nsun_zenith_deg = 95\ndoy = 1\n")
        with pytest.raises(SceneFormatError):
            read_scene_metadata(p)

    def test_band_override(self, tmp_path):
        p = tmp_path / "scene.txt"
        p.write_text("sensor = TM\nsun_zenith_deg = 40\ndoy = 232\n"
                     "[band 6]\ngain = 0.06\n")
        _, bands = read_scene_metadata(p)
        assert bands["6"].gain == 0.06
        assert bands["6"].k1 == 607.76  # untouched default

    def test_new_band_needs_gain_and_bias(self, tmp_path):
        p = tmp_path / "scene.txt"
        p.write_text("sensor = TM\nsun_zenith_deg = 40\ndoy = 232\n"
                     "[band 9]\ngain = 0.5\n")
        with pytest.raises(SceneFormatError, match="band '9'"):
            read_scene_metadata(p)

    def test_custom_band_accepted(self, tmp_path):
        p = tmp_path / "scene.txt"
        p.write_text("sensor = ETM+\nsun_zenith_deg = 35\ndoy = 159\n"
                     "[band 9]\ngain = 0.5\nbias = -1.0\ne0 = 100\n")
        _, bands = read_scene_metadata(p)
        assert bands["9"].e0 == 100


class TestLstText:
    def test_paper_means_line(self, tmp_path):
        g = RasterGrid(np.array([[38.64, 41.58]]))
        p = tmp_path / "lst.txt"
        write_lst_text(g, p)
        assert p.read_text().splitlines()[0] == "38.64 41.58"

    def test_nodata_written_as_na(self, tmp_path):
        g = RasterGrid(np.full((2, 2), -9999.0))
        p = tmp_path / "lst.txt"
        write_lst_text(g, p)
        assert p.read_text() == "NA NA\nNA NA\n"

    def test_round_trip_within_half_centidegree(self, tmp_path):
        rng = np.random.default_rng(2)
        data = rng.uniform(-10, 50, size=(8, 8))
        data[0, 0] = -9999.0
        g = RasterGrid(data)
        p = tmp_path / "lst.txt"
        write_lst_text(g, p)
        back = read_lst_text(p)
        valid = g.valid_mask()
        assert np.array_equal(valid, back.valid_mask())
        assert np.max(np.abs(back.data[valid] - g.data[valid])) < 0.005
