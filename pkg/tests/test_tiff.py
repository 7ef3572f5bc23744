import struct

import numpy as np
import pytest

from thermogrid.raster import RasterGrid
from thermogrid.sceneio import ClassifiedGrid, SceneFormatError
from thermogrid.tiff import (read_classified_tiff, read_tiff, write_tiff,
                             write_classified_tiff)


class TestGrayscale:
    def test_8bit_2x2(self, tmp_path):
        g = RasterGrid(np.array([[0.0, 1.0], [2.0, 3.0]]))
        p = tmp_path / "a.tif"
        write_tiff(g, p, dtype="u1")
        back = read_tiff(p)
        assert back.data.tolist() == [[0, 1], [2, 3]]

    def test_16bit_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        g = RasterGrid(rng.integers(0, 65536, size=(17, 9)).astype(float))
        p = tmp_path / "b.tif"
        write_tiff(g, p, dtype="u2")
        assert np.array_equal(read_tiff(p).data, g.data)

    @pytest.mark.parametrize("dtype", ["f4", "f8"])
    def test_float_round_trip_bit_exact(self, tmp_path, dtype):
        rng = np.random.default_rng(2)
        data = rng.standard_normal((12, 7)) * 100
        if dtype == "f4":
            data = data.astype(np.float32).astype(np.float64)
        g = RasterGrid(data)
        p = tmp_path / "c.tif"
        write_tiff(g, p, dtype=dtype)
        back = read_tiff(p)
        assert np.array_equal(back.data, g.data)

    def test_non_integer_to_u8_rejected(self, tmp_path):
        g = RasterGrid(np.array([[0.5]]))
        with pytest.raises(ValueError, match="non-integer"):
            write_tiff(g, tmp_path / "x.tif", dtype="u1")

    def test_out_of_range_u8_rejected(self, tmp_path):
        g = RasterGrid(np.array([[300.0]]))
        with pytest.raises(ValueError, match="range"):
            write_tiff(g, tmp_path / "x.tif", dtype="u1")


class TestRejections:
    def _ifd(self, entries):
        out = struct.pack("<H", len(entries))
        for tag, typ, n, value in entries:
            out += struct.pack("<HHII", tag, typ, n, value)
        return out + struct.pack("<I", 0)

    def _tiff(self, entries):
        return b"II" + struct.pack("<HI", 42, 8) + self._ifd(entries)

    def test_not_a_tiff(self, tmp_path):
        p = tmp_path / "no.tif"
        p.write_bytes(b"PNG whatever")
        with pytest.raises(SceneFormatError, match="not a TIFF"):
            read_tiff(p)

    def test_compressed_names_tag(self, tmp_path):
        p = tmp_path / "lzw.tif"
        p.write_bytes(self._tiff([(256, 4, 1, 2), (257, 4, 1, 2),
                                  (259, 3, 1, 5)]))
        with pytest.raises(SceneFormatError, match="Compression"):
            read_tiff(p)

    def test_tiled_names_tag(self, tmp_path):
        p = tmp_path / "tiled.tif"
        p.write_bytes(self._tiff([(256, 4, 1, 2), (257, 4, 1, 2),
                                  (322, 4, 1, 16)]))
        with pytest.raises(SceneFormatError, match="TileWidth"):
            read_tiff(p)

    def test_multiband_names_tag(self, tmp_path):
        p = tmp_path / "rgb.tif"
        p.write_bytes(self._tiff([(256, 4, 1, 2), (257, 4, 1, 2),
                                  (277, 3, 1, 3)]))
        with pytest.raises(SceneFormatError, match="SamplesPerPixel"):
            read_tiff(p)

    def test_truncated_strip_data(self, tmp_path):
        p = tmp_path / "short.tif"
        p.write_bytes(self._tiff([(256, 4, 1, 4), (257, 4, 1, 4),
                                  (258, 3, 1, 8), (273, 4, 1, 8),
                                  (279, 4, 1, 2)]))
        with pytest.raises(SceneFormatError, match="truncated"):
            read_tiff(p)


class TestBigEndianRead:
    def test_mm_byte_order(self, tmp_path):
        # hand-built big-endian 1x2 8-bit file
        pixels = bytes([7, 9])
        ifd = struct.pack(">H", 6)
        for tag, typ, n, value in [(256, 4, 1, 2), (257, 4, 1, 1),
                                   (258, 3, 1, 8 << 16), (273, 4, 1, 8),
                                   (277, 3, 1, 1 << 16), (279, 4, 1, 2)]:
            ifd += struct.pack(">HHII", tag, typ, n, value)
        ifd += struct.pack(">I", 0)
        p = tmp_path / "mm.tif"
        p.write_bytes(b"MM" + struct.pack(">HI", 42, 10) + pixels + ifd)
        g = read_tiff(p)
        assert g.data.tolist() == [[7, 9]]


class TestPalette:
    def test_classified_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        labels = rng.integers(0, 8, size=(20, 20)).astype(np.uint8)
        legend = [f"class_{i}" for i in range(1, 8)]
        cg = ClassifiedGrid(labels, legend)
        p = tmp_path / "cls.tif"
        write_classified_tiff(cg, p)
        back = read_classified_tiff(p)
        assert np.array_equal(back.labels, labels)

    def test_seven_distinct_colors_plus_unclassified(self, tmp_path):
        labels = np.arange(8, dtype=np.uint8).reshape(2, 4)
        cg = ClassifiedGrid(labels, [f"c{i}" for i in range(1, 8)])
        p = tmp_path / "cls.tif"
        write_classified_tiff(cg, p)
        data = p.read_bytes()
        # locate the ColorMap values through a fresh parse
        from thermogrid.tiff import _read_ifd, TAG_COLOR_MAP, TAG_PHOTOMETRIC
        tags = _read_ifd(data, "<")
        assert tags[TAG_PHOTOMETRIC][0] == 3
        cmap = tags[TAG_COLOR_MAP]
        colors = {(cmap[i], cmap[256 + i], cmap[512 + i]) for i in range(8)}
        assert len(colors) == 8  # 7 classes + unclassified, all distinct
