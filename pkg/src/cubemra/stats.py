"""Scalar per-cube statistics: RMS, histogram entropy, sigma-clipped noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cube_io import Cube


@dataclass(frozen=True)
class LevelStats:
    """Statistics of one multiresolution level's reconstruction."""

    level: int
    rms: float
    entropy: float
    voxel_count: int


def rms(cube: Cube) -> float:
    """Root mean square of the non-blank voxels (full-signal RMS, not noise)."""
    values = cube.valid_values()
    if values.size == 0:
        raise ValueError("cannot compute rms: cube is entirely blank")
    return float(np.sqrt(np.mean(np.square(values))))


def entropy(cube: Cube, bins: int = 256) -> float:
    """Shannon entropy (bits) of the non-blank intensity histogram.

    The histogram uses `bins` equal-width bins spanning [min, max]; a
    zero-width range (constant cube) has entropy 0 by convention.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    values = cube.valid_values()
    if values.size == 0:
        raise ValueError("cannot compute entropy: cube is entirely blank")
    lo = float(values.min())
    hi = float(values.max())
    if lo == hi:
        return 0.0
    counts, _ = np.histogram(values, bins=bins, range=(lo, hi))
    p = counts[counts > 0] / values.size
    return float(-np.sum(p * np.log2(p)))


def sigma_clipped_rms(
    cube: Cube, kappa: float = 3.0, max_iter: int = 10, tol: float = 0.0
) -> float:
    """Iteratively clipped standard deviation, a noise-level estimate.

    Voxels outside median +/- kappa*std are discarded until the kept set
    stabilizes (or max_iter passes).  Offered as an alternative scale for the
    clumping threshold when the full-signal RMS is dominated by bright
    emission.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    values = cube.valid_values()
    if values.size == 0:
        raise ValueError("cannot estimate noise: cube is entirely blank")
    kept = values
    for _ in range(max_iter):
        center = np.median(kept)
        spread = np.std(kept)
        if spread == 0.0:
            break
        selected = kept[np.abs(kept - center) <= kappa * spread]
        if selected.size == kept.size or selected.size == 0:
            break
        if tol > 0 and (kept.size - selected.size) <= tol * kept.size:
            kept = selected
            break
        kept = selected
    return float(np.std(kept))
