"""Synthetic multivariate series with a known dependency graph.

Wheels layout (``d`` channels, ``m = d / 2`` pairs; pairs ``0 .. a-1`` form
ring A and pairs ``a .. m-1`` ring B, ``a = ceil(m / 2)``). For d = 16, with
``-`` a pair edge and ``~`` a ring edge::

    ring A:  0-1 ~ 2-3 ~ 4-5 ~ 6-7 ~ (back to 0)
    ring B:  8-9 ~ 10-11 ~ 12-13 ~ 14-15 ~ (back to 8)
    middle edge (0, 8) joins the rings (type I, figure eight)
    extra edge (4, 12) joins the opposite pairs (type II only)

Every graph edge carries its own latent AR(2) factor and a channel is the
sum of the factors on its incident edges plus white noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, InvalidGraphError, PositionError
from .timeseries import TimeSeries

MODES = ("type_I", "type_II")


@dataclass(frozen=True)
class LatentGraph:
    mode: str
    n_channels: int
    edges: tuple[tuple[int, int], ...]


def _rings(d):
    m = d // 2
    a = math.ceil(m / 2)
    return list(range(a)), list(range(a, m))


def build_wheel_graph(d: int, mode: str = "type_I") -> LatentGraph:
    if mode not in MODES:
        raise InvalidGraphError(f"mode must be one of {MODES}, got {mode!r}")
    if int(d) != d or d < 8 or d % 2:
        raise InvalidGraphError(f"wheel graphs need an even channel count >= 8, got {d}")
    ring_a, ring_b = _rings(d)
    edges = [(2 * i, 2 * i + 1) for i in range(d // 2)]
    for ring in (ring_a, ring_b):
        for pos, i in enumerate(ring):
            j = ring[(pos + 1) % len(ring)]
            edges.append(tuple(sorted((2 * i + 1, 2 * j))))
    edges.append((2 * ring_a[0], 2 * ring_b[0]))
    if mode == "type_II":
        edges.append((2 * ring_a[len(ring_a) // 2], 2 * ring_b[len(ring_b) // 2]))
    return LatentGraph(mode, d, tuple(edges))


def extra_edges(d: int) -> tuple[tuple[int, int], ...]:
    """Edges present in the type II graph but not in type I."""
    base = set(build_wheel_graph(d, "type_I").edges)
    return tuple(e for e in build_wheel_graph(d, "type_II").edges if e not in base)


def ar2_coefficients(peak_freq, sample_rate, modulus):
    """``(phi1, phi2)`` for characteristic roots ``exp(+-i w) / modulus``."""
    if modulus <= 1:
        raise ConfigError(f"AR(2) modulus must exceed 1 for stationarity, got {modulus}")
    phi1 = 2 * math.cos(2 * math.pi * peak_freq / sample_rate) / modulus
    phi2 = -1 / modulus ** 2
    roots = np.roots([-phi2, -phi1, 1.0])   # of 1 - phi1 z - phi2 z^2
    assert abs(phi2) < 1 and np.all(np.abs(roots) > 1), "non-stationary AR(2)"
    return phi1, phi2


def ar2_variance(phi1, phi2):
    """Stationary variance of an AR(2) driven by unit-variance noise."""
    return (1 - phi2) / ((1 + phi2) * ((1 - phi2) ** 2 - phi1 ** 2))


def ar2_factors(n_factors, length, phi1, phi2, rng, burn_in=None):
    """Independent unit-variance stationary AR(2) paths, shape ``(length, n_factors)``."""
    if burn_in is None:
        burn_in = int(math.ceil(20 / -math.log(math.sqrt(-phi2))))
    eps = rng.standard_normal((length + burn_in, n_factors)) / math.sqrt(ar2_variance(phi1, phi2))
    z = lfilter([1.0], [1.0, -phi1, -phi2], eps, axis=0)
    return z[burn_in:]


def mix(graph: LatentGraph, factors):
    """Channels as sums of the factors on their incident edges."""
    out = np.zeros((factors.shape[0], graph.n_channels))
    for e, (i, j) in enumerate(graph.edges):
        out[:, i] += factors[:, e]
        out[:, j] += factors[:, e]
    return out


@dataclass(frozen=True)
class WheelSpec:
    n_channels: int = 64
    sample_rate: float = 500.0
    duration_s: float = 20.0
    anomaly_len: int = 500
    anomaly_start: int | None = None
    seed: int = 0
    ar2_peak_freq: float = 10.0
    ar2_modulus: float = 1.01
    noise_std: float = 1.0

    @property
    def length(self) -> int:
        return int(round(self.sample_rate * self.duration_s))

    def validate(self):
        if self.n_channels < 8 or self.n_channels % 2:
            raise InvalidGraphError(f"wheel graphs need an even channel count >= 8, got {self.n_channels}")
        if not 0 <= self.anomaly_len <= self.length:
            raise ConfigError(f"anomaly length {self.anomaly_len} does not fit in {self.length} samples")
        if self.anomaly_start is not None and not 0 <= self.anomaly_start <= self.length - self.anomaly_len:
            raise ConfigError(f"anomaly [{self.anomaly_start}, +{self.anomaly_len}) leaves the series")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")


def generate_wheels(spec: WheelSpec = WheelSpec()) -> TimeSeries:
    """Type I wheels series with one type II segment, labelled ``1`` on that segment."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    length = spec.length
    start = spec.anomaly_start
    if start is None:
        start = int(rng.integers(0, length - spec.anomaly_len + 1))
    phi1, phi2 = ar2_coefficients(spec.ar2_peak_freq, spec.sample_rate, spec.ar2_modulus)
    graph = build_wheel_graph(spec.n_channels, "type_II")
    factors = ar2_factors(len(graph.edges), length, phi1, phi2, rng)
    n_base = len(build_wheel_graph(spec.n_channels, "type_I").edges)
    active = np.zeros((length, len(graph.edges)), dtype=bool)
    active[:, :n_base] = True
    active[start:start + spec.anomaly_len, n_base:] = True
    values = mix(graph, factors * active)
    values += spec.noise_std * rng.standard_normal(values.shape)
    labels = np.zeros(length, dtype=np.int8)
    labels[start:start + spec.anomaly_len] = 1
    return TimeSeries(values, sample_rate=spec.sample_rate, labels=labels)


def generate_ar1_pointanomaly(d, length, positions=(), magnitudes=5.0, seed=0, phi=0.9,
                              noise_std=1.0, channels=None) -> TimeSeries:
    """Stationary AR(1) channels with additive spikes.

    Each spike adds its magnitude at one timestamp to ``channels`` (all
    channels by default); labels are 1 at spike timestamps.
    """
    if d < 1 or length < 2:
        raise ConfigError("need d >= 1 channels and length >= 2")
    if not -1 < phi < 1:
        raise ConfigError(f"AR(1) coefficient must lie in (-1, 1), got {phi}")
    positions = np.asarray(positions, dtype=int).reshape(-1)
    if np.any((positions < 0) | (positions >= length)):
        raise PositionError(f"anomaly positions must lie in [0, {length}), got {positions.tolist()}")
    mags = np.broadcast_to(np.asarray(magnitudes, dtype=np.float64), positions.shape)
    rng = np.random.default_rng(seed)
    eps = noise_std * rng.standard_normal((length, d))
    eps[0] /= math.sqrt(1 - phi ** 2)   # start in the stationary law
    values = lfilter([1.0], [1.0, -phi], eps, axis=0)
    cols = np.arange(d) if channels is None else np.asarray(channels, dtype=int)
    labels = np.zeros(length, dtype=np.int8)
    for p, mag in zip(positions, mags):
        values[p, cols] += mag
        labels[p] = 1
    return TimeSeries(values, labels=labels)
