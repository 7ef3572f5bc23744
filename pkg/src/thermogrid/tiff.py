"""Baseline TIFF reader/writer for the subset the pipeline needs.

Supported: uncompressed grayscale, 8/16-bit unsigned or 32/64-bit float,
single or multiple strips, and 8-bit palette-color for classified maps.
Anything else (compression, tiling, multi-band) is rejected with an error
naming the offending tag, rather than decoded approximately.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .raster import RasterGrid
from .sceneio import ClassifiedGrid, SceneFormatError

# tag ids
TAG_IMAGE_WIDTH = 256
TAG_IMAGE_LENGTH = 257
TAG_BITS_PER_SAMPLE = 258
TAG_COMPRESSION = 259
TAG_PHOTOMETRIC = 262
TAG_STRIP_OFFSETS = 273
TAG_SAMPLES_PER_PIXEL = 277
TAG_ROWS_PER_STRIP = 278
TAG_STRIP_BYTE_COUNTS = 279
TAG_PLANAR_CONFIG = 284
TAG_COLOR_MAP = 320
TAG_TILE_WIDTH = 322
TAG_TILE_LENGTH = 323
TAG_SAMPLE_FORMAT = 339

_TYPE_SIZES = {1: 1, 2: 1, 3: 2, 4: 4, 5: 8, 6: 1, 7: 1, 8: 2, 9: 4, 10: 8,
               11: 4, 12: 8}
_TYPE_FMT = {1: "B", 3: "H", 4: "I", 8: "h", 9: "i", 11: "f", 12: "d"}

# 16 visually distinct palette colors; class indices cycle beyond that.
_CLASS_COLORS = [
    (0, 0, 0),          # 0 = unclassified
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200),
    (245, 130, 48), (145, 30, 180), (70, 240, 240), (240, 50, 230),
    (210, 245, 60), (250, 190, 190), (0, 128, 128), (170, 110, 40),
    (128, 0, 0), (128, 128, 0), (0, 0, 128),
]


def _read_ifd(data: bytes, bo: str):
    if len(data) < 8:
        raise SceneFormatError("TIFF file shorter than its header")
    offset, = struct.unpack(bo + "I", data[4:8])
    if offset + 2 > len(data):
        raise SceneFormatError("TIFF IFD offset beyond end of file")
    count, = struct.unpack(bo + "H", data[offset:offset + 2])
    tags = {}
    pos = offset + 2
    for _ in range(count):
        tag, typ, n = struct.unpack(bo + "HHI", data[pos:pos + 8])
        size = _TYPE_SIZES.get(typ, 1) * n
        if size <= 4:
            raw = data[pos + 8:pos + 8 + size]
        else:
            val_off, = struct.unpack(bo + "I", data[pos + 8:pos + 12])
            raw = data[val_off:val_off + size]
        if typ in _TYPE_FMT:
            tags[tag] = list(struct.unpack(bo + _TYPE_FMT[typ] * n, raw))
        pos += 12
    return tags


def _tag1(tags, tag, default=None):
    if tag in tags:
        return tags[tag][0]
    return default


def read_tiff(path) -> RasterGrid:
    """Read a baseline grayscale or palette TIFF into a RasterGrid.

    Palette images come back as their raw index values; use
    :func:`read_classified_tiff` to get a ClassifiedGrid.
    """
    data = Path(path).read_bytes()
    if data[:2] == b"II":
        bo = "<"
    elif data[:2] == b"MM":
        bo = ">"
    else:
        raise SceneFormatError(f"{path}: not a TIFF file")
    magic, = struct.unpack(bo + "H", data[2:4])
    if magic != 42:
        raise SceneFormatError(f"{path}: bad TIFF magic {magic}")
    tags = _read_ifd(data, bo)

    if TAG_TILE_WIDTH in tags or TAG_TILE_LENGTH in tags:
        raise SceneFormatError(
            f"{path}: tiled TIFF not supported (tag TileWidth)")
    compression = _tag1(tags, TAG_COMPRESSION, 1)
    if compression != 1:
        raise SceneFormatError(
            f"{path}: compressed TIFF not supported "
            f"(tag Compression = {compression})")
    spp = _tag1(tags, TAG_SAMPLES_PER_PIXEL, 1)
    if spp != 1:
        raise SceneFormatError(
            f"{path}: multi-band TIFF not supported "
            f"(tag SamplesPerPixel = {spp})")

    width = _tag1(tags, TAG_IMAGE_WIDTH)
    height = _tag1(tags, TAG_IMAGE_LENGTH)
    if width is None or height is None:
        raise SceneFormatError(
            f"{path}: missing tag ImageWidth or ImageLength")
    bits = _tag1(tags, TAG_BITS_PER_SAMPLE, 1)
    fmt = _tag1(tags, TAG_SAMPLE_FORMAT, 1)

    if fmt == 1 and bits == 8:
        dtype = np.dtype(bo + "u1")
    elif fmt == 1 and bits == 16:
        dtype = np.dtype(bo + "u2")
    elif fmt == 3 and bits == 32:
        dtype = np.dtype(bo + "f4")
    elif fmt == 3 and bits == 64:
        dtype = np.dtype(bo + "f8")
    else:
        raise SceneFormatError(
            f"{path}: unsupported sample layout (tag BitsPerSample = {bits}, "
            f"tag SampleFormat = {fmt})")

    offsets = tags.get(TAG_STRIP_OFFSETS)
    counts = tags.get(TAG_STRIP_BYTE_COUNTS)
    if offsets is None or counts is None:
        raise SceneFormatError(
            f"{path}: missing tag StripOffsets or StripByteCounts")
    raw = b"".join(data[o:o + c] for o, c in zip(offsets, counts))
    expected = width * height * dtype.itemsize
    if len(raw) < expected:
        raise SceneFormatError(
            f"{path}: strip data truncated ({len(raw)} < {expected} bytes)")
    samples = np.frombuffer(raw[:expected], dtype=dtype).astype(np.float64)
    return RasterGrid(samples.reshape(height, width))


def read_classified_tiff(path) -> ClassifiedGrid:
    """Read an 8-bit palette TIFF back as a ClassifiedGrid.

    Class names are not stored in the file; the legend is rebuilt with
    placeholder names sized to the largest label present.
    """
    grid = read_tiff(path)
    labels = grid.data.astype(np.uint8)
    n = int(labels.max()) if labels.size else 0
    return ClassifiedGrid(labels, [f"class_{i}" for i in range(1, n + 1)])


def _write(path, ifd_entries, pixel_bytes, extra_blocks=()):
    # layout: header | pixel data | extra blocks | IFD
    header_size = 8
    pixel_off = header_size
    pos = pixel_off + len(pixel_bytes)
    block_offsets = []
    for block in extra_blocks:
        block_offsets.append(pos)
        pos += len(block)
    ifd_off = pos

    entries = []
    for tag, typ, values in sorted(ifd_entries):
        n = len(values)
        fmt = _TYPE_FMT[typ]
        packed = struct.pack("<" + fmt * n, *values)
        if len(packed) <= 4:
            entries.append(struct.pack("<HHI", tag, typ, n)
                           + packed.ljust(4, b"\0"))
        else:
            raise ValueError("oversize tag values must go in extra_blocks")

    with Path(path).open("wb") as fh:
        fh.write(b"II" + struct.pack("<HI", 42, ifd_off))
        fh.write(pixel_bytes)
        for block in extra_blocks:
            fh.write(block)
        fh.write(struct.pack("<H", len(entries)))
        fh.write(b"".join(entries))
        fh.write(struct.pack("<I", 0))
    return pixel_off, block_offsets


def write_tiff(grid: RasterGrid, path, dtype: str = "f8") -> None:
    """Write a single-strip grayscale TIFF.

    ``dtype`` is one of u1, u2, f4, f8; integer types require the samples
    to already be exact integers in range.
    """
    np_dtype = np.dtype("<" + dtype)
    data = grid.data
    if np_dtype.kind == "u":
        if not np.all(data == np.floor(data)):
            raise ValueError("non-integer samples cannot be written as "
                             f"{dtype} TIFF")
        info = np.iinfo(np_dtype)
        if data.min() < info.min or data.max() > info.max:
            raise ValueError(f"samples outside {dtype} range "
                             f"[{info.min}, {info.max}]")
    pixels = np.ascontiguousarray(data.astype(np_dtype)).tobytes()

    bits = np_dtype.itemsize * 8
    sample_format = 1 if np_dtype.kind == "u" else 3
    height, width = grid.shape
    pixel_off_guess = 8  # pixel data directly after header
    entries = [
        (TAG_IMAGE_WIDTH, 4, [width]),
        (TAG_IMAGE_LENGTH, 4, [height]),
        (TAG_BITS_PER_SAMPLE, 3, [bits]),
        (TAG_COMPRESSION, 3, [1]),
        (TAG_PHOTOMETRIC, 3, [1]),  # BlackIsZero
        (TAG_STRIP_OFFSETS, 4, [pixel_off_guess]),
        (TAG_SAMPLES_PER_PIXEL, 3, [1]),
        (TAG_ROWS_PER_STRIP, 4, [height]),
        (TAG_STRIP_BYTE_COUNTS, 4, [len(pixels)]),
        (TAG_SAMPLE_FORMAT, 3, [sample_format]),
    ]
    _write(path, entries, pixels)


def class_color(index: int) -> tuple[int, int, int]:
    if index == 0:
        return _CLASS_COLORS[0]
    return _CLASS_COLORS[1 + (index - 1) % (len(_CLASS_COLORS) - 1)]


def write_classified_tiff(classified: ClassifiedGrid, path) -> None:
    """Write a classified map as an 8-bit palette-color TIFF."""
    pixels = np.ascontiguousarray(classified.labels).tobytes()
    # ColorMap: 256 reds, 256 greens, 256 blues, 16-bit each
    cmap = [0] * 768
    for i in range(256):
        r, g, b = class_color(i) if i <= len(classified.legend) else (0, 0, 0)
        cmap[i] = r * 257
        cmap[256 + i] = g * 257
        cmap[512 + i] = b * 257
    cmap_bytes = struct.pack("<" + "H" * 768, *cmap)

    height, width = classified.shape
    pixel_off = 8
    cmap_off = pixel_off + len(pixels)
    entries = [
        (TAG_IMAGE_WIDTH, 4, [width]),
        (TAG_IMAGE_LENGTH, 4, [height]),
        (TAG_BITS_PER_SAMPLE, 3, [8]),
        (TAG_COMPRESSION, 3, [1]),
        (TAG_PHOTOMETRIC, 3, [3]),  # palette color
        (TAG_STRIP_OFFSETS, 4, [pixel_off]),
        (TAG_SAMPLES_PER_PIXEL, 3, [1]),
        (TAG_ROWS_PER_STRIP, 4, [height]),
        (TAG_STRIP_BYTE_COUNTS, 4, [len(pixels)]),
    ]

    # ColorMap is too large for an inline value; write it as an extra block
    # and patch its offset in manually.
    with Path(path).open("wb") as fh:
        ifd_off = cmap_off + len(cmap_bytes)
        fh.write(b"II" + struct.pack("<HI", 42, ifd_off))
        fh.write(pixels)
        fh.write(cmap_bytes)
        all_entries = entries + [(TAG_COLOR_MAP, 3, None)]
        fh.write(struct.pack("<H", len(all_entries)))
        for tag, typ, values in sorted(all_entries,
                                       key=lambda e: e[0]):
            if tag == TAG_COLOR_MAP:
                fh.write(struct.pack("<HHII", tag, typ, 768, cmap_off))
            else:
                packed = struct.pack("<" + _TYPE_FMT[typ] * len(values),
                                     *values)
                fh.write(struct.pack("<HHI", tag, typ, len(values))
                         + packed.ljust(4, b"\0"))
        fh.write(struct.pack("<I", 0))
