"""Core raster container plus statistics and DN histograms.

Every processing stage (raw DN, radiance, reflectance, NDVI, temperature)
moves through the same :class:`RasterGrid` so the engine only has to know
one carrier type.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_NODATA = -9999.0


@dataclass(frozen=True)
class RasterGrid:
    """Rectangular grid of float64 samples with a nodata sentinel.

    Row-major, row 0 at the top, addressed as (row, col).  Immutable after
    construction so tiles can be read from many workers concurrently.
    """

    data: np.ndarray
    nodata: float = DEFAULT_NODATA

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"grid must be at least 1x1, got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def valid_mask(self) -> np.ndarray:
        return self.data != self.nodata

    def valid_values(self) -> np.ndarray:
        return self.data[self.valid_mask()]

    def with_data(self, data: np.ndarray) -> "RasterGrid":
        """New grid with the same nodata sentinel."""
        return RasterGrid(data, nodata=self.nodata)

    @classmethod
    def full(cls, height: int, width: int, value: float,
             nodata: float = DEFAULT_NODATA) -> "RasterGrid":
        return cls(np.full((height, width), value, dtype=np.float64), nodata)


@dataclass(frozen=True)
class GridStats:
    """Moments over the valid (non-nodata) pixels of a grid.

    When ``count`` is 0 the moment fields are meaningless and set to NaN.
    """

    count: int
    min: float
    max: float
    mean: float
    stddev: float


@dataclass
class DnHistogram:
    """Occurrence counts per integer digital number 0..max_dn.

    Histograms from disjoint tiles merge by element-wise addition, which is
    what lets the dark-object statistic run as a distributed reduce.
    """

    counts: np.ndarray = field()

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 1:
            raise ValueError("histogram counts must be 1-D")

    @property
    def max_dn(self) -> int:
        return len(self.counts) - 1

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merge(self, other: "DnHistogram") -> "DnHistogram":
        if len(self.counts) != len(other.counts):
            raise ValueError(
                f"cannot merge histograms with max_dn {self.max_dn} and "
                f"{other.max_dn}")
        return DnHistogram(self.counts + other.counts)

    @classmethod
    def empty(cls, max_dn: int) -> "DnHistogram":
        return cls(np.zeros(max_dn + 1, dtype=np.int64))


def grid_stats(grid: RasterGrid) -> GridStats:
    """Count/min/max/mean/stddev over non-nodata pixels.

    An all-nodata grid yields count 0 with NaN moments rather than an error;
    callers check ``count``.
    """
    values = grid.valid_values()
    if values.size == 0:
        nan = float("nan")
        return GridStats(0, nan, nan, nan, nan)
    lo, hi = float(values.min()), float(values.max())
    # summation rounding can push the mean an ulp past the extremes
    mean = min(max(float(values.mean()), lo), hi)
    return GridStats(
        count=int(values.size),
        min=lo,
        max=hi,
        mean=mean,
        stddev=float(values.std()),
    )


def dn_histogram(grid: RasterGrid, max_dn: int = 255) -> DnHistogram:
    """Histogram of integer DN values in [0, max_dn], nodata excluded.

    Rejects grids whose valid samples are not integers in range, since a
    histogram of radiances would silently produce garbage downstream.
    """
    values = grid.valid_values()
    if values.size:
        if not np.all(values == np.floor(values)):
            raise ValueError("histogram input contains non-integer samples")
        if values.min() < 0 or values.max() > max_dn:
            raise ValueError(
                f"histogram input outside [0, {max_dn}]: "
                f"range [{values.min()}, {values.max()}]")
    counts = np.bincount(values.astype(np.int64), minlength=max_dn + 1)
    return DnHistogram(counts)
