"""Vietoris-Rips persistence diagrams of complete weighted graphs.

Diagrams are kept as weighted point measures in the birth-death plane.
Essential classes are closed at ``alpha_max`` so every diagram is a finite
measure supported in ``[alpha_min, alpha_max]^2``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import comb

import numpy as np

from . import _backend
from .errors import ConfigError, DimensionError, OrderTooLargeError, SizeLimitError

ESSENTIAL_POLICY = "closed_at_alpha_max"
WEIGHT_FUNCTIONS = ("unit", "persistence")

# exact bottleneck search is quadratic in memory per candidate value
MAX_BOTTLENECK_POINTS = 256


@dataclass(frozen=True)
class FilteredGraph:
    weights: np.ndarray
    alpha_min: float = 0.0
    alpha_max: float | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionError(f"weights must be a square matrix, got shape {w.shape}")
        if not np.array_equal(w, w.T):
            raise DimensionError("weights must be symmetric")
        off = w[~np.eye(len(w), dtype=bool)]
        if off.size and self.alpha_min > off.min():
            raise ConfigError(f"alpha_min={self.alpha_min} exceeds the smallest weight {off.min()}")
        alpha_max = self.alpha_max
        if alpha_max is None:
            alpha_max = float(off.max()) if off.size else float(self.alpha_min)
        elif off.size and alpha_max < off.max():
            raise ConfigError(f"alpha_max={alpha_max} is below the largest weight {off.max()}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "alpha_max", float(alpha_max))

    @property
    def n_vertices(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class PersistenceDiagram:
    """Weighted multiset of (birth, death) points for one homology order.

    ``points`` is an ``(m, 2)`` array sorted lexicographically, ``weights`` the
    matching ``(m,)`` masses.
    """

    points: np.ndarray
    weights: np.ndarray
    order: int
    essential_policy: str = ESSENTIAL_POLICY

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        wts = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if len(wts) != len(pts):
            raise DimensionError("points and weights differ in length")
        if np.any(pts[:, 0] > pts[:, 1]):
            raise ConfigError("diagram point with birth > death")
        if np.any(wts < 0):
            raise ConfigError("negative diagram weight")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    def __len__(self):
        return len(self.points)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @classmethod
    def from_points(cls, points, order=0, weight="unit"):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return cls(pts, _weigh(pts, weight), order)


def _weigh(points, weight):
    if weight == "unit":
        return np.ones(len(points))
    if weight == "persistence":
        return points[:, 1] - points[:, 0]
    if callable(weight):
        return np.array([weight(b, d) for b, d in points], dtype=np.float64)
    raise ConfigError(f"unknown weight function {weight!r}; expected one of {WEIGHT_FUNCTIONS}")


def rips_persistence(graph, max_order: int = 2, weight="unit", alpha_min=0.0, alpha_max=None):
    """Diagrams of orders ``0 .. max_order - 1`` of the clique filtration.

    ``graph`` is a :class:`FilteredGraph` or a symmetric weight matrix.
    Simplices enter at the largest weight among their edges, vertices at
    ``alpha_min``. Zero-persistence pairs are dropped.
    """
    if not isinstance(graph, FilteredGraph):
        graph = FilteredGraph(graph, alpha_min, alpha_max)
    n = graph.n_vertices
    if max_order < 1:
        raise ConfigError(f"max_order must be >= 1, got {max_order}")
    if max_order > n - 1:
        raise OrderTooLargeError(
            f"max_order={max_order} needs simplices of dimension {max_order}, "
            f"impossible with {n} vertices"
        )
    raw = _backend.rips_pairs(graph.weights, max_order, float(graph.alpha_min))
    diagrams = []
    for d, (births, deaths, essential) in enumerate(raw):
        keep = deaths > births
        pts = np.concatenate([
            np.column_stack([births[keep], deaths[keep]]),
            np.column_stack([essential, np.full(len(essential), graph.alpha_max)]),
        ])
        pts = pts[pts[:, 1] > pts[:, 0]]
        pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
        diagrams.append(PersistenceDiagram(pts, _weigh(pts, weight), d))
    return diagrams


def max_points(n_vertices: int, order: int) -> int:
    """Upper bound on the number of points of an order-``order`` diagram."""
    return comb(n_vertices, order + 1)


def _max_matching(adj, n_left, n_right):
    match_right = [-1] * n_right

    def augment(u, seen):
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                if match_right[v] < 0 or augment(match_right[v], seen):
                    match_right[v] = u
                    return True
        return False

    size = 0
    for u in range(n_left):
        if augment(u, [False] * n_right):
            size += 1
    return size


def bottleneck_distance(a, b) -> float:
    """Exact bottleneck distance between two diagrams (weights ignored).

    Points may be matched to each other at their l-infinity distance or to
    the diagonal at half their persistence. The optimum is one of finitely
    many candidate values; the smallest one admitting a perfect matching of
    the diagonal-augmented bipartite graph is returned.
    """
    pa = a.points if isinstance(a, PersistenceDiagram) else np.asarray(a, dtype=np.float64).reshape(-1, 2)
    pb = b.points if isinstance(b, PersistenceDiagram) else np.asarray(b, dtype=np.float64).reshape(-1, 2)
    if isinstance(a, PersistenceDiagram) and isinstance(b, PersistenceDiagram) and a.order != b.order:
        raise ConfigError(f"diagrams of different orders ({a.order} vs {b.order})")
    n, m = len(pa), len(pb)
    if n + m > MAX_BOTTLENECK_POINTS:
        raise SizeLimitError(f"{n + m} points exceed the exact-search bound {MAX_BOTTLENECK_POINTS}")
    if n + m == 0:
        return 0.0
    cross = np.abs(pa[:, None, :] - pb[None, :, :]).max(axis=2, initial=0.0)
    diag_a = (pa[:, 1] - pa[:, 0]) / 2
    diag_b = (pb[:, 1] - pb[:, 0]) / 2

    # left: a points then diagonal copies of b; right: b points then diagonal copies of a
    size = n + m
    cost = np.full((size, size), np.inf)
    cost[:n, :m] = cross
    cost[:n, m:] = np.where(np.eye(n, dtype=bool), diag_a[:, None], np.inf)
    cost[n:, :m] = np.where(np.eye(m, dtype=bool), diag_b[None, :], np.inf)
    cost[n:, m:] = 0.0

    candidates = np.unique(cost[np.isfinite(cost)])
    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        eps = candidates[mid]
        adj = [np.flatnonzero(cost[u] <= eps).tolist() for u in range(size)]
        if _max_matching(adj, size, size) == size:
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def write_diagrams_csv(path, diagram_series, window_indices=None):
    """One row per point: ``window_index, order, birth, death, weight``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window_index", "order", "birth", "death", "weight"])
        for t, diagrams in enumerate(diagram_series):
            idx = window_indices[t] if window_indices is not None else t
            for dgm in diagrams:
                for (birth, death), w in zip(dgm.points, dgm.weights):
                    writer.writerow([idx, dgm.order, repr(float(birth)), repr(float(death)), repr(float(w))])


def read_diagrams_csv(path):
    """Inverse of :func:`write_diagrams_csv`; returns ``{window: {order: diagram}}``."""
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            key = (int(rec["window_index"]), int(rec["order"]))
            rows.setdefault(key, []).append(
                (float(rec["birth"]), float(rec["death"]), float(rec["weight"]))
            )
    out = {}
    for (t, d), pts in sorted(rows.items()):
        arr = np.array(pts)
        out.setdefault(t, {})[d] = PersistenceDiagram(arr[:, :2], arr[:, 2], d)
    return out
