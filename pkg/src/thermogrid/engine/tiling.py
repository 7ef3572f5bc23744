"""Row-band tiling and result stitching.

Every supported operation is pixel-local once scene scalars are known, so
tiles need no halo and stitching is pure concatenation.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..raster import RasterGrid
from ..sceneio import ClassifiedGrid


class Tile(NamedTuple):
    row0: int
    rows: int
    col0: int
    cols: int


def split(height: int, width: int, n: int) -> list[Tile]:
    """Split into up to n horizontal row bands with heights differing by <= 1."""
    if n < 1:
        raise ValueError(f"worker count must be >= 1, got {n}")
    n = min(n, height)
    base, extra = divmod(height, n)
    tiles = []
    row = 0
    for i in range(n):
        rows = base + (1 if i < extra else 0)
        tiles.append(Tile(row, rows, 0, width))
        row += rows
    return tiles


def extract(grid: RasterGrid, tile: Tile) -> RasterGrid:
    view = grid.data[tile.row0:tile.row0 + tile.rows,
                     tile.col0:tile.col0 + tile.cols]
    return RasterGrid(view.copy(), nodata=grid.nodata)


def aggregate_grids(tiles: list[Tile], results: list[RasterGrid],
                    height: int, width: int) -> RasterGrid:
    """Stitch per-tile rasters back into the full image."""
    _check_cover(tiles, height, width)
    nodata = results[0].nodata
    out = np.empty((height, width), dtype=np.float64)
    for tile, sub in zip(tiles, results):
        if sub.shape != (tile.rows, tile.cols):
            raise ValueError(
                f"tile {tile} produced shape {sub.shape}, expected "
                f"({tile.rows}, {tile.cols})")
        out[tile.row0:tile.row0 + tile.rows,
            tile.col0:tile.col0 + tile.cols] = sub.data
    return RasterGrid(out, nodata=nodata)


def aggregate_labels(tiles: list[Tile], results: list[ClassifiedGrid],
                     height: int, width: int) -> ClassifiedGrid:
    _check_cover(tiles, height, width)
    out = np.zeros((height, width), dtype=np.uint8)
    legend: list[str] = []
    for tile, sub in zip(tiles, results):
        if sub.shape != (tile.rows, tile.cols):
            raise ValueError(
                f"tile {tile} produced shape {sub.shape}, expected "
                f"({tile.rows}, {tile.cols})")
        out[tile.row0:tile.row0 + tile.rows,
            tile.col0:tile.col0 + tile.cols] = sub.labels
        if len(sub.legend) > len(legend):
            legend = list(sub.legend)
    return ClassifiedGrid(out, legend)


def _check_cover(tiles: list[Tile], height: int, width: int) -> None:
    covered = np.zeros((height, width), dtype=bool)
    for tile in tiles:
        patch = covered[tile.row0:tile.row0 + tile.rows,
                        tile.col0:tile.col0 + tile.cols]
        if patch.any():
            raise ValueError(f"tile {tile} overlaps another tile")
        covered[tile.row0:tile.row0 + tile.rows,
                tile.col0:tile.col0 + tile.cols] = True
    if not covered.all():
        raise ValueError("tiles do not cover the image")
