"""End-to-end fit and scoring, window reversing and model files."""

from __future__ import annotations

import json
import logging
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _backend
from .errors import (ChannelMismatchError, ConfigError, CorruptModelError,
                     ModelVersionError, TooFewWindowsError)
from .persistence import rips_persistence
from .quantization import DEFAULT_RADIUS, QuantizeConfig, MeasureSequence, CentroidSet, atol_batch, atol_minibatch
from .scoring import ScoreModel, Threshold, calibrate_threshold, center_scores, fit_mcd, fit_plain, score
from .timeseries import TimeSeries, WindowConfig, correlation_similarity, slice_windows
from .vectorization import Vectorizer, vectorize_many

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
ALPHA_MIN, ALPHA_MAX = 0.0, 2.0


@dataclass(frozen=True)
class TadaConfig:
    delta: int = 100
    stride: int = 10
    k: int = 10
    max_order: int = 2
    h: float = 0.1
    n_start: int = 10
    t_max: int | None = None
    quantizer: str = "batch"
    minibatch_q: int | None = None
    spacing_mode: str = "dense"
    r_projection: float = DEFAULT_RADIUS
    weight: str = "unit"
    seed: int = 0
    alpha: float | None = None
    threshold_delta: float | None = None
    mcd_starts: int = 50
    threads: int | None = None

    def __post_init__(self):
        if self.quantizer not in ("batch", "minibatch"):
            raise ConfigError(f"quantizer must be 'batch' or 'minibatch', got {self.quantizer!r}")
        if self.max_order < 1:
            raise ConfigError(f"max_order must be >= 1, got {self.max_order}")
        if not 0 <= self.h < 1:
            raise ConfigError(f"contamination h must lie in [0, 1), got {self.h}")

    @property
    def window(self) -> WindowConfig:
        return WindowConfig(self.delta, self.stride)


@dataclass(frozen=True)
class TadaModel:
    window: WindowConfig
    max_order: int
    n_channels: int
    vectorizers: tuple
    score_model: ScoreModel
    threshold: Threshold | None = None
    seed: int = 0
    weight: str = "unit"
    config: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION

    @property
    def embedding_dim(self) -> int:
        return sum(v.k for v in self.vectorizers)


@dataclass(frozen=True)
class ScoreSeries:
    window_scores: np.ndarray
    timestamp_scores: np.ndarray
    window_starts: np.ndarray
    delta: int
    center_scores: np.ndarray | None = None


def n_threads(requested=None) -> int:
    """Worker count: ``requested``, else ``TADA_THREADS``, else the CPU count."""
    if requested:
        return max(1, int(requested))
    env = os.environ.get("TADA_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, cap)


@contextmanager
def _timed(stage, timings):
    t0 = time.perf_counter()
    yield
    timings[stage] = time.perf_counter() - t0
    log.info("%s: %.3f s", stage, timings[stage])


def window_diagrams(ts: TimeSeries, window: WindowConfig, max_order=2, weight="unit", threads=None):
    """Per window, the diagrams of orders ``0 .. max_order - 1`` of its correlation graph."""
    windows = slice_windows(ts, window)
    values = ts.values

    def one(w):
        sim, _ = correlation_similarity(values[w.start:w.stop])
        return rips_persistence(sim, max_order, weight, ALPHA_MIN, ALPHA_MAX)

    workers = n_threads(threads)
    if workers > 1 and _backend.RELEASES_GIL and len(windows) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return windows, list(pool.map(one, windows))
    return windows, [one(w) for w in windows]


def _seeds(seed, count):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def embed(vectorizers, diagrams) -> np.ndarray:
    """Concatenate per-order vectorizations, ascending order."""
    blocks = [vectorize_many(v, [dg[v.homology_order] for dg in diagrams]) for v in vectorizers]
    return np.hstack(blocks)


def fit(ts: TimeSeries, cfg: TadaConfig = TadaConfig()) -> TadaModel:
    """Learn centroids, vectorizers and the normal-regime score model from ``ts``."""
    timings = {}
    window = cfg.window
    window.validate_for(ts.length)
    with _timed("diagrams", timings):
        windows, diagrams = window_diagrams(ts, window, cfg.max_order, cfg.weight, cfg.threads)
    if len(windows) < 2:
        raise TooFewWindowsError(
            f"{len(windows)} window(s) from length {ts.length} with window {cfg.delta} and stride {cfg.stride}; need >= 2"
        )
    order_seeds = _seeds(cfg.seed, cfg.max_order + 1)
    vectorizers = []
    with _timed("quantization", timings):
        for d in range(cfg.max_order):
            qcfg = QuantizeConfig(k=cfg.k, t_max=cfg.t_max, minibatch_q=cfg.minibatch_q,
                                  r_projection=cfg.r_projection, n_start=cfg.n_start,
                                  seed=order_seeds[d], spacing_mode=cfg.spacing_mode)
            seq = MeasureSequence([dg[d] for dg in diagrams])
            if not any(len(dg[d]) for dg in diagrams):
                centroids = _placeholder_centroids(cfg.k, d)
                log.warning("order %d: no diagram points in any training window; using %d placeholder centers",
                            d, cfg.k)
            else:
                quantize = atol_batch if cfg.quantizer == "batch" else atol_minibatch
                centroids = quantize(seq, qcfg, order=d)
            vectorizers.append(_vectorizer(centroids, cfg.r_projection))
    with _timed("vectorization", timings):
        vectors = embed(vectorizers, diagrams)
    with _timed("scoring", timings):
        if cfg.h == 0:
            model = fit_plain(vectors)
        else:
            model = fit_mcd(vectors, cfg.h, n_starts=cfg.mcd_starts, seed=order_seeds[-1])
        threshold = None
        if cfg.alpha is not None:
            threshold = calibrate_threshold(score(model, vectors), cfg.alpha, cfg.threshold_delta)
    log.info("fitted %d windows, embedding dim %d", len(windows), vectors.shape[1])
    return TadaModel(window, cfg.max_order, ts.n_channels, tuple(vectorizers), model, threshold,
                     cfg.seed, cfg.weight, asdict(cfg))


def _placeholder_centroids(k, order) -> CentroidSet:
    # evenly spaced on the diagonal segment [0, ALPHA_MAX]: zero-persistence
    # positions no training point occupied, so the embedding dim stays k per order
    t = np.linspace(ALPHA_MIN, ALPHA_MAX, k + 2)[1:-1]
    return CentroidSet(np.column_stack([t, t]), homology_order=order, restarts_used=0)


def _vectorizer(centroids: CentroidSet, radius) -> Vectorizer:
    from .vectorization import build_vectorizer
    return build_vectorizer(centroids, radius)


def window_reverse(window_scores, windows, length) -> np.ndarray:
    """Per timestamp, the sum of the scores of the windows covering it."""
    out = np.zeros(length)
    for w, s in zip(windows, np.asarray(window_scores, dtype=np.float64)):
        out[w.start:w.stop] += s
    last = max((w.stop for w in windows), default=0)
    if last < length:
        warnings.warn(f"timestamps {last}..{length - 1} are covered by no window and score 0", stacklevel=2)
    return out


def score_series(model: TadaModel, ts: TimeSeries, with_centers=False, threads=None) -> ScoreSeries:
    if ts.n_channels != model.n_channels:
        raise ChannelMismatchError(f"series has {ts.n_channels} channels, model was fitted on {model.n_channels}")
    windows, diagrams = window_diagrams(ts, model.window, model.max_order, model.weight, threads)
    vectors = embed(model.vectorizers, diagrams)
    ws = np.atleast_1d(score(model.score_model, vectors))
    cs = center_scores(model.score_model, vectors) if with_centers else None
    return ScoreSeries(ws, window_reverse(ws, windows, ts.length),
                       np.array([w.start for w in windows]), model.window.delta, cs)


def _tolist(a):
    return np.asarray(a).tolist()


def save_model(model: TadaModel, path):
    sm = model.score_model
    doc = {
        "format": "tada-model",
        "version": model.version,
        "window": {"delta": model.window.delta, "stride": model.window.stride},
        "orders": [v.homology_order for v in model.vectorizers],
        "n_channels": model.n_channels,
        "weight": model.weight,
        "centers": [_tolist(v.centers) for v in model.vectorizers],
        "bandwidths": [_tolist(v.bandwidths) for v in model.vectorizers],
        "mu": _tolist(sm.mu),
        "sigma": _tolist(sm.sigma),
        "inv_factor": _tolist(sm.inv_factor),
        "ridge": sm.ridge,
        "estimator": sm.estimator,
        "h": sm.h,
        "c0": sm.c0,
        "threshold": asdict(model.threshold) if model.threshold else None,
        "seed": model.seed,
        "config": model.config,
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_model(path) -> TadaModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModelError(f"{path}: not a valid model file ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != "tada-model":
        raise CorruptModelError(f"{path}: not a model file")
    version = doc.get("version")
    if not isinstance(version, int) or version > FORMAT_VERSION:
        raise ModelVersionError(f"{path}: model format version {version!r}, this build reads <= {FORMAT_VERSION}")
    try:
        vectorizers = tuple(
            Vectorizer(np.array(c, dtype=np.float64).reshape(-1, 2), np.array(b, dtype=np.float64), int(d))
            for c, b, d in zip(doc["centers"], doc["bandwidths"], doc["orders"], strict=True)
        )
        sm = ScoreModel.from_moments(doc["mu"], doc["sigma"], doc["ridge"], doc["h"], doc["estimator"],
                                     doc["c0"], inv_factor=doc["inv_factor"])
        if sm.inv_factor.shape != (sm.dim, sm.dim) or sm.dim != sum(v.k for v in vectorizers):
            raise ValueError("embedding dimensions disagree")
        th = doc["threshold"]
        return TadaModel(
            WindowConfig(int(doc["window"]["delta"]), int(doc["window"]["stride"])),
            len(vectorizers), int(doc["n_channels"]), vectorizers, sm,
            Threshold(**th) if th else None, int(doc["seed"]), doc["weight"], doc.get("config", {}), version,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModelError(f"{path}: malformed model file ({exc})") from None
