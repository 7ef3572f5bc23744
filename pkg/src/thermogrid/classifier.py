"""Parallelepiped (box decision rule) supervised classification.

A class is a set of per-band closed intervals learned from a training
region; a pixel belongs to the first class (in training order) whose every
interval contains it.  First-match is the tie-break: tools differ here, so
it is stated once and tested, never left to iteration order.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .raster import RasterGrid
from .sceneio import ClassifiedGrid


@dataclass(frozen=True)
class TrainingRegion:
    """Named inclusive pixel rectangle (row0, col0, row1, col1)."""

    class_name: str
    row0: int
    col0: int
    row1: int
    col1: int

    def __post_init__(self):
        if self.row0 > self.row1 or self.col0 > self.col1:
            raise ValueError(f"region {self.class_name}: empty rectangle")
        if min(self.row0, self.col0) < 0:
            raise ValueError(f"region {self.class_name}: negative corner")


@dataclass(frozen=True)
class ClassSignature:
    """Per-band closed intervals for one class."""

    class_name: str
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for lo, hi in self.intervals:
            if lo > hi:
                raise ValueError(
                    f"class {self.class_name}: interval [{lo}, {hi}] "
                    "is inverted")

    def contains(self, values) -> bool:
        return all(lo <= v <= hi
                   for (lo, hi), v in zip(self.intervals, values))


def parse_training_regions(path) -> list[TrainingRegion]:
    """One region per line: ``class_name row0 col0 row1 col1``."""
    regions = []
    with Path(path).open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise ValueError(
                    f"{path}:{lineno}: expected 'name row0 col0 row1 col1', "
                    f"got {line!r}")
            try:
                coords = [int(p) for p in parts[1:]]
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: non-integer coordinate in "
                    f"{line!r}") from None
            regions.append(TrainingRegion(parts[0], *coords))
    return regions


def _region_values(band: RasterGrid, region: TrainingRegion) -> np.ndarray:
    if region.row1 >= band.height or region.col1 >= band.width:
        raise ValueError(
            f"region {region.class_name} exceeds image bounds "
            f"{band.height}x{band.width}")
    patch = band.data[region.row0:region.row1 + 1,
                      region.col0:region.col1 + 1]
    return patch[patch != band.nodata]


def train_class(bands: list[RasterGrid], region: TrainingRegion,
                mode: str = "minmax", k: float = 2.0) -> ClassSignature:
    """Learn one class box from a training rectangle.

    minmax takes the observed extremes; mean_sigma takes mean +/- k
    population standard deviations.
    """
    intervals = []
    for band in bands:
        values = _region_values(band, region)
        if values.size == 0:
            raise ValueError(
                f"region {region.class_name} has no valid pixels")
        if mode == "minmax":
            intervals.append((float(values.min()), float(values.max())))
        elif mode == "mean_sigma":
            mean = float(values.mean())
            sigma = float(values.std())
            intervals.append((mean - k * sigma, mean + k * sigma))
        else:
            raise ValueError(f"unknown training mode {mode!r}")
    return ClassSignature(region.class_name, tuple(intervals))


def train_classes(bands, regions, mode="minmax", k=2.0) -> list[ClassSignature]:
    return [train_class(bands, r, mode=mode, k=k) for r in regions]


def classify_pixel(values, signatures: list[ClassSignature]) -> int:
    """Label index of the first matching box, 0 if none match."""
    for sig in signatures:
        if len(sig.intervals) != len(values):
            raise ValueError(
                f"class {sig.class_name} has {len(sig.intervals)} intervals "
                f"but the pixel has {len(values)} bands")
    for i, sig in enumerate(signatures, start=1):
        if sig.contains(values):
            return i
    return 0


def classify_map(bands: list[RasterGrid],
                 signatures: list[ClassSignature]) -> ClassifiedGrid:
    """Classify a whole scene; nodata in any band leaves a pixel unclassified."""
    if not bands:
        raise ValueError("at least one band is required")
    shape = bands[0].shape
    for band in bands:
        if band.shape != shape:
            raise ValueError(f"band shapes differ: {shape} vs {band.shape}")
    for sig in signatures:
        if len(sig.intervals) != len(bands):
            raise ValueError(
                f"class {sig.class_name} has {len(sig.intervals)} intervals "
                f"but {len(bands)} bands were given")

    valid = np.ones(shape, dtype=bool)
    for band in bands:
        valid &= band.valid_mask()

    labels = np.zeros(shape, dtype=np.uint8)
    unassigned = valid.copy()
    for i, sig in enumerate(signatures, start=1):
        inside = unassigned.copy()
        for band, (lo, hi) in zip(bands, sig.intervals):
            inside &= (band.data >= lo) & (band.data <= hi)
        labels[inside] = i
        unassigned &= ~inside
    return ClassifiedGrid(labels, [s.class_name for s in signatures])


@dataclass(frozen=True)
class ConfusionResult:
    """Confusion matrix over class labels 1..n plus predicted-unclassified 0.

    Rows are truth, columns are prediction; truth-unclassified pixels are
    excluded before counting.
    """

    matrix: np.ndarray
    legend: list[str]

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    @property
    def overall_accuracy(self) -> float:
        total = self.total
        if total == 0:
            return float("nan")
        return float(np.trace(self.matrix)) / total


def confusion_matrix(predicted: ClassifiedGrid,
                     truth: ClassifiedGrid) -> ConfusionResult:
    if predicted.shape != truth.shape:
        raise ValueError(
            f"shapes differ: {predicted.shape} vs {truth.shape}")
    n = max(len(truth.legend), len(predicted.legend))
    evaluated = truth.labels != 0
    t = truth.labels[evaluated].astype(np.int64)
    p = predicted.labels[evaluated].astype(np.int64)
    matrix = np.zeros((n + 1, n + 1), dtype=np.int64)
    np.add.at(matrix, (t, p), 1)
    legend = list(truth.legend) if len(truth.legend) >= len(predicted.legend) \
        else list(predicted.legend)
    return ConfusionResult(matrix, legend)


class ParallelepipedClassifier(BaseEstimator, ClassifierMixin):
    """Scikit-learn style front end over the box decision rule.

    X is (n_samples, n_bands); classes are boxed in order of first
    appearance in y, which fixes the first-match tie-break.  Samples
    matching no box predict as ``unclassified_label``.
    """

    def __init__(self, mode: str = "minmax", k: float = 2.0,
                 unclassified_label=0):
        self.mode = mode
        self.k = k
        self.unclassified_label = unclassified_label

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        seen: dict = {}
        for label in y:
            if label not in seen:
                seen[label] = None
        self.classes_ = np.array(list(seen))
        boxes = []
        for label in self.classes_:
            rows = X[y == label]
            if self.mode == "minmax":
                lo, hi = rows.min(axis=0), rows.max(axis=0)
            elif self.mode == "mean_sigma":
                mean, sigma = rows.mean(axis=0), rows.std(axis=0)
                lo, hi = mean - self.k * sigma, mean + self.k * sigma
            else:
                raise ValueError(f"unknown training mode {self.mode!r}")
            boxes.append((lo, hi))
        self.signatures_ = [
            ClassSignature(str(label), tuple(zip(map(float, lo),
                                                 map(float, hi))))
            for label, (lo, hi) in zip(self.classes_, boxes)
        ]
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "signatures_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected "
                f"{self.n_features_in_}")
        out = np.full(X.shape[0], self.unclassified_label, dtype=object)
        unassigned = np.ones(X.shape[0], dtype=bool)
        for label, sig in zip(self.classes_, self.signatures_):
            inside = unassigned.copy()
            for j, (lo, hi) in enumerate(sig.intervals):
                inside &= (X[:, j] >= lo) & (X[:, j] <= hi)
            out[inside] = label
            unassigned &= ~inside
        return out
