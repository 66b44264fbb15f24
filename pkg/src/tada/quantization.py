"""Quantization of the empirical mean measure of a diagram sequence.

Two centroid estimators are provided: a batch Lloyd iteration on the mean
measure with random restarts, and a single-pass minibatch variant where cell
masses and barycenter numerators come from different minibatches.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptySequenceError, TooFewMeasuresError, TooLargeKError

log = logging.getLogger(__name__)

# points of diagrams on [0, 2]^2 have norm at most 2*sqrt(2)
DEFAULT_RADIUS = 2.0 * math.sqrt(2.0)
SPACING_MODES = ("dense", "spaced")


@dataclass(frozen=True)
class QuantizeConfig:
    k: int = 10
    t_max: int | None = None          # None -> 2 * ceil(ln n)
    minibatch_q: int | None = None    # None -> ceil(n / 40)
    r_projection: float = DEFAULT_RADIUS
    n_start: int = 10
    seed: int = 0
    spacing_mode: str = "dense"

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.t_max is not None and self.t_max < 1:
            raise ConfigError(f"t_max must be >= 1, got {self.t_max}")
        if self.minibatch_q is not None and self.minibatch_q < 1:
            raise ConfigError(f"minibatch size must be >= 1, got {self.minibatch_q}")
        if self.n_start < 1:
            raise ConfigError(f"n_start must be >= 1, got {self.n_start}")
        if self.r_projection <= 0:
            raise ConfigError("projection radius must be positive")
        if self.spacing_mode not in SPACING_MODES:
            raise ConfigError(f"spacing_mode must be one of {SPACING_MODES}")


@dataclass(frozen=True)
class Measure:
    """Discrete planar measure: atoms ``points`` with masses ``weights``."""

    points: np.ndarray
    weights: np.ndarray
    order: int = 0

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def __len__(self):
        return len(self.points)


def as_measure(m):
    """Accept diagrams, ``(points, weights)`` pairs or bare point arrays (unit masses)."""
    if hasattr(m, "points") and hasattr(m, "weights"):
        return m
    if isinstance(m, tuple) and len(m) == 2:
        pts = np.asarray(m[0], dtype=np.float64).reshape(-1, 2)
        return Measure(pts, np.asarray(m[1], dtype=np.float64).reshape(-1))
    pts = np.asarray(m, dtype=np.float64).reshape(-1, 2)
    return Measure(pts, np.ones(len(pts)))


@dataclass
class MeasureSequence:
    """A sequence of discrete measures of one homology order.

    The optional bounds (support radius, total mass, support size) are
    checked on construction when given.
    """

    measures: list
    radius: float | None = None
    mass_bound: float | None = None
    support_bound: int | None = None

    def __post_init__(self):
        self.measures = [as_measure(m) for m in self.measures]
        for i, m in enumerate(self.measures):
            if self.radius is not None and len(m) and np.linalg.norm(m.points, axis=1).max() > self.radius + 1e-12:
                raise ConfigError(f"measure {i} has support outside the ball of radius {self.radius}")
            if self.mass_bound is not None and m.mass > self.mass_bound:
                raise ConfigError(f"measure {i} has mass {m.mass} > {self.mass_bound}")
            if self.support_bound is not None and len(m) > self.support_bound:
                raise ConfigError(f"measure {i} has {len(m)} atoms > {self.support_bound}")

    def __len__(self):
        return len(self.measures)

    def mean_measure(self):
        """Atoms and masses of ``(1/n) sum_i X_i``, duplicates merged."""
        if not self.measures:
            raise EmptySequenceError("empty measure sequence")
        return _average(self.measures)


def _average(measures):
    pts = np.concatenate([m.points for m in measures])
    wts = np.concatenate([m.weights for m in measures]) / len(measures)
    if not len(pts):
        return pts.reshape(0, 2), wts
    atoms, inverse = np.unique(pts, axis=0, return_inverse=True)
    masses = np.bincount(inverse.reshape(-1), weights=wts, minlength=len(atoms))
    keep = masses > 0
    return atoms[keep], masses[keep]


@dataclass(frozen=True)
class CentroidSet:
    centers: np.ndarray
    homology_order: int = 0
    restarts_used: int = 1
    final_cost: float = float("nan")
    # per restart: (cost after each iteration starting from init, resampled flag per iteration)
    trajectories: list = field(default_factory=list, compare=False, repr=False)

    @property
    def k(self) -> int:
        return len(self.centers)


def _sqdist(points, centers):
    diff = points[:, None, :] - centers[None, :, :]
    return (diff * diff).sum(axis=2)


def _cost(atoms, masses, centers):
    if not len(atoms):
        return 0.0
    return float(masses @ _sqdist(atoms, centers).min(axis=1))


def quantization_cost(seq, centers) -> float:
    """``mean_measure(du) min_j |u - c_j|^2``."""
    if not isinstance(seq, MeasureSequence):
        seq = MeasureSequence(list(seq))
    c = centers.centers if isinstance(centers, CentroidSet) else np.asarray(centers, dtype=np.float64)
    atoms, masses = seq.mean_measure()
    return _cost(atoms, masses, np.asarray(c, dtype=np.float64).reshape(-1, 2))


def _init_centers(atoms, masses, k, rng):
    idx = rng.choice(len(atoms), size=k, replace=False, p=masses / masses.sum())
    return atoms[np.sort(idx)].copy()


def _check_k(atoms, k):
    if not len(atoms):
        raise EmptySequenceError("mean measure has zero mass; no centroid can be placed")
    if k > len(atoms):
        raise TooLargeKError(f"k={k} exceeds the {len(atoms)} distinct support points of the mean measure")


def _lloyd_step(atoms, masses, centers, rng):
    k = len(centers)
    assign = _sqdist(atoms, centers).argmin(axis=1)
    cell_mass = np.bincount(assign, weights=masses, minlength=k)
    num = np.column_stack([
        np.bincount(assign, weights=masses * atoms[:, 0], minlength=k),
        np.bincount(assign, weights=masses * atoms[:, 1], minlength=k),
    ])
    new = centers.copy()
    full = cell_mass > 0
    new[full] = num[full] / cell_mass[full, None]
    empty = np.flatnonzero(~full)
    if len(empty):
        draw = rng.choice(len(atoms), size=len(empty), p=masses / masses.sum())
        new[empty] = atoms[draw]
    return new, bool(len(empty))


def _separate_duplicates(centers, atoms, masses, rng):
    centers = centers.copy()
    for j in range(1, len(centers)):
        if np.any(np.all(centers[:j] == centers[j], axis=1)):
            taken = (atoms[:, None, :] == centers[None, :, :]).all(axis=2).any(axis=1)
            free = np.flatnonzero(~taken)
            if not len(free):
                break
            log.warning("duplicate centroid %d re-sampled from the support", j)
            p = masses[free] / masses[free].sum()
            centers[j] = atoms[free[rng.choice(len(free), p=p)]]
    return centers


def default_t_max(n: int) -> int:
    return max(1, 2 * math.ceil(math.log(n))) if n > 1 else 1


def atol_batch(seq, cfg: QuantizeConfig = QuantizeConfig(), order=None) -> CentroidSet:
    """Lloyd iterations on the mean measure, best of ``cfg.n_start`` restarts.

    Each iteration assigns atoms to their nearest center and moves every
    center to its cell barycenter; a center whose cell has no mass is
    re-sampled from the mean measure. Iteration stops after ``t_max`` steps
    or earlier at a fixed point.
    """
    if not isinstance(seq, MeasureSequence):
        seq = MeasureSequence(list(seq))
    atoms, masses = seq.mean_measure()
    _check_k(atoms, cfg.k)
    t_max = cfg.t_max or default_t_max(len(seq))
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(cfg.n_start)]

    best, best_cost, trajectories = None, math.inf, []
    for rng in rngs:
        centers = _init_centers(atoms, masses, cfg.k, rng)
        costs, flags = [_cost(atoms, masses, centers)], []
        for _ in range(t_max):
            new, resampled = _lloyd_step(atoms, masses, centers, rng)
            costs.append(_cost(atoms, masses, new))
            flags.append(resampled)
            converged = not resampled and np.array_equal(new, centers)
            centers = new
            if converged:
                break
        trajectories.append((costs, flags))
        if costs[-1] < best_cost:
            best, best_cost = centers, costs[-1]

    best = _separate_duplicates(best, atoms, masses, rngs[0])
    return CentroidSet(best, _order_of(seq, order), cfg.n_start, _cost(atoms, masses, best), trajectories)


def _project(c, radius):
    norm = np.linalg.norm(c, axis=-1, keepdims=True)
    return np.where(norm > radius, c * (radius / np.where(norm > 0, norm, 1.0)), c)


def minibatch_step(centers, mass_batch, numerator_batch, radius):
    """One minibatch update.

    Cell masses are measured on ``mass_batch`` and barycenter numerators on
    ``numerator_batch`` (both lists of diagrams, averaged over the batch),
    each against the current centers. Centers whose cell has zero mass stay
    put; updated centers are projected onto the ball of radius ``radius``.
    """
    centers = np.asarray(centers, dtype=np.float64)
    k = len(centers)
    m_atoms, m_w = _batch_points([as_measure(m) for m in mass_batch])
    n_atoms, n_w = _batch_points([as_measure(m) for m in numerator_batch])
    cell_mass = np.zeros(k)
    if len(m_atoms):
        cell_mass = np.bincount(_sqdist(m_atoms, centers).argmin(axis=1), weights=m_w, minlength=k)
    num = np.zeros((k, 2))
    if len(n_atoms):
        assign = _sqdist(n_atoms, centers).argmin(axis=1)
        num[:, 0] = np.bincount(assign, weights=n_w * n_atoms[:, 0], minlength=k)
        num[:, 1] = np.bincount(assign, weights=n_w * n_atoms[:, 1], minlength=k)
    new = centers.copy()
    full = cell_mass > 0
    new[full] = _project(num[full] / cell_mass[full, None], radius)
    return new


def _batch_points(batch):
    if not batch:
        return np.zeros((0, 2)), np.zeros(0)
    pts = np.concatenate([m.points for m in batch])
    wts = np.concatenate([m.weights for m in batch]) / len(batch)
    return pts, wts


def atol_minibatch(seq, cfg: QuantizeConfig = QuantizeConfig(), order=None) -> CentroidSet:
    """Single-pass minibatch centroids.

    The sequence is cut into consecutive minibatches of ``q`` measures. In
    ``spaced`` mode they are grouped by four and step ``t`` uses the first
    of its group for cell masses and the third for numerators; in ``dense``
    mode they are grouped by two and both are used.
    """
    if not isinstance(seq, MeasureSequence):
        seq = MeasureSequence(list(seq))
    n = len(seq)
    if n == 0:
        raise EmptySequenceError("empty measure sequence")
    q = cfg.minibatch_q or math.ceil(n / 40)
    group = 4 if cfg.spacing_mode == "spaced" else 2
    steps = n // (group * q)
    if steps < 1:
        raise TooFewMeasuresError(
            f"{n} measures cannot fill one group of {group} minibatches of size {q} "
            f"({cfg.spacing_mode} spacing needs n >= {group * q})"
        )
    atoms, masses = seq.mean_measure()
    _check_k(atoms, cfg.k)
    numerator_offset = 2 if cfg.spacing_mode == "spaced" else 1
    batches = [seq.measures[i * q:(i + 1) * q] for i in range(steps * group)]
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(cfg.n_start)]

    best, best_cost, trajectories = None, math.inf, []
    for rng in rngs:
        centers = _project(_init_centers(atoms, masses, cfg.k, rng), cfg.r_projection)
        costs = [_cost(atoms, masses, centers)]
        for t in range(steps):
            centers = minibatch_step(centers, batches[group * t],
                                     batches[group * t + numerator_offset], cfg.r_projection)
            costs.append(_cost(atoms, masses, centers))
        trajectories.append((costs, [False] * steps))
        if costs[-1] < best_cost:
            best, best_cost = centers, costs[-1]

    best = _project(_separate_duplicates(best, atoms, masses, rngs[0]), cfg.r_projection)
    return CentroidSet(best, _order_of(seq, order), cfg.n_start, _cost(atoms, masses, best), trajectories)


def _order_of(seq, order):
    if order is not None:
        return order
    return getattr(seq.measures[0], "order", 0) if seq.measures else 0
