"""Kernel-mass vectorization of diagrams around learned centroids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DuplicateCenterError
from .quantization import DEFAULT_RADIUS, CentroidSet

# sup |d/du exp(-u^2)|
KERNEL_LIPSCHITZ = float(np.sqrt(2.0 / np.e))


@dataclass(frozen=True)
class Vectorizer:
    centers: np.ndarray
    bandwidths: np.ndarray
    homology_order: int = 0

    @property
    def k(self) -> int:
        return len(self.centers)

    def __call__(self, diagram) -> np.ndarray:
        return vectorize(self, diagram)


def bandwidths(centers, radius=DEFAULT_RADIUS) -> np.ndarray:
    """Half the distance from each center to its nearest other center.

    A lone center gets ``radius`` (the support radius) as bandwidth.
    """
    c = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    if len(c) == 1:
        return np.array([float(radius)])
    d = np.sqrt(((c[:, None, :] - c[None, :, :]) ** 2).sum(axis=2))
    np.fill_diagonal(d, np.inf)
    nearest = d.min(axis=1)
    if np.any(nearest == 0):
        dup = np.flatnonzero(nearest == 0).tolist()
        raise DuplicateCenterError(f"centers {dup} coincide; bandwidth would be zero")
    return nearest / 2


def build_vectorizer(centers, radius=DEFAULT_RADIUS, order=None) -> Vectorizer:
    if isinstance(centers, CentroidSet):
        order = centers.homology_order if order is None else order
        centers = centers.centers
    c = np.array(centers, dtype=np.float64).reshape(-1, 2)
    return Vectorizer(c, bandwidths(c, radius), 0 if order is None else order)


def vectorize(v: Vectorizer, diagram) -> np.ndarray:
    """``v_j = sum_points weight * exp(-(|u - c_j| / sigma_j)^2)``."""
    pts = np.asarray(diagram.points, dtype=np.float64).reshape(-1, 2)
    if not len(pts):
        return np.zeros(v.k)
    w = np.asarray(diagram.weights, dtype=np.float64)
    sq = ((pts[:, None, :] - v.centers[None, :, :]) ** 2).sum(axis=2)
    # row-by-row sum, not BLAS: appending a point then never lowers a coordinate
    return (w[:, None] * np.exp(-sq / v.bandwidths ** 2)).sum(axis=0)


def vectorize_many(v: Vectorizer, diagrams) -> np.ndarray:
    return np.array([vectorize(v, d) for d in diagrams]).reshape(len(diagrams), v.k)
