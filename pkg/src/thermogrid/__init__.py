"""Landsat TM/ETM+ thermal analysis toolkit.

Retrieves land surface temperature, NDVI and emissivity from band data,
classifies land cover with a parallelepiped box rule, and executes raster
work through a split-and-aggregate tiled scheduler with optional remote
workers.
"""

from .classifier import ParallelepipedClassifier
from .indices import EmissivityConfig
from .raster import DnHistogram, GridStats, RasterGrid, dn_histogram, grid_stats
from .sceneio import BandCalibration, ClassifiedGrid, SceneContext

__version__ = "0.1.0"

__all__ = [
    "BandCalibration", "ClassifiedGrid", "DnHistogram", "EmissivityConfig",
    "GridStats", "ParallelepipedClassifier", "RasterGrid", "SceneContext",
    "dn_histogram", "grid_stats",
]
