"""Normal-regime model of embedding vectors and Mahalanobis anomaly scores.

Location and scatter come either from plain sample moments or from a
Minimum Covariance Determinant fit computed with random elemental starts and
concentration steps. The inverse scatter is always regularized by a small
ridge so scores stay finite when some embedding coordinate never varies.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSubsetError, DimensionError, LevelError, TooFewSamplesError

log = logging.getLogger(__name__)

RIDGE_SCALE = 1e-9
RIDGE_FLOOR = 1e-12


@dataclass(frozen=True)
class ScoreModel:
    mu: np.ndarray
    sigma: np.ndarray
    inv_factor: np.ndarray   # W with W.T @ W = (sigma + ridge I)^-1
    ridge: float
    h: float = 0.0
    estimator: str = "plain"
    c0: float = 1.0

    @property
    def dim(self) -> int:
        return len(self.mu)

    @classmethod
    def from_moments(cls, mu, sigma, ridge=None, h=0.0, estimator="plain", c0=1.0, inv_factor=None):
        mu = np.asarray(mu, dtype=np.float64).reshape(-1)
        sigma = np.asarray(sigma, dtype=np.float64).reshape(len(mu), len(mu))
        lam = auto_ridge(sigma) if ridge is None else float(ridge)
        if inv_factor is None:
            inv_factor = inverse_factor(sigma, lam)
        return cls(mu, sigma, np.asarray(inv_factor, dtype=np.float64), lam, h, estimator, c0)


@dataclass(frozen=True)
class Threshold:
    t_hat: float
    alpha: float
    delta: float


def auto_ridge(sigma) -> float:
    k = len(sigma)
    return max(RIDGE_SCALE * float(np.trace(sigma)) / max(k, 1), RIDGE_FLOOR)


def inverse_factor(sigma, ridge) -> np.ndarray:
    evals, evecs = np.linalg.eigh(sigma + ridge * np.eye(len(sigma)))
    if np.any(evals <= 0):
        raise DegenerateSubsetError(
            f"scatter matrix is singular (smallest eigenvalue {evals.min():.3g}) and ridge={ridge} does not repair it"
        )
    return evecs.T / np.sqrt(evals)[:, None]


def _as_matrix(vectors):
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DimensionError(f"expected an n x k matrix, got shape {x.shape}")
    return x


def fit_plain(vectors, ridge=None) -> ScoreModel:
    """Sample mean and biased (1/n) sample covariance."""
    x = _as_matrix(vectors)
    if len(x) < 2:
        raise TooFewSamplesError(f"need at least 2 vectors, got {len(x)}")
    mu = x.mean(axis=0)
    c = x - mu
    sigma = c.T @ c / len(x)
    return ScoreModel.from_moments(mu, sigma, ridge)


def subset_size(n: int, h: float) -> int:
    return min(n, math.ceil(n * (1.0 - h) - 1e-9))


def _moments(x, idx):
    sub = x[idx]
    mu = sub.mean(axis=0)
    c = sub - mu
    return mu, c.T @ c / len(sub)


def _logdet(sigma, lam):
    sign, ld = np.linalg.slogdet(sigma + lam * np.eye(len(sigma)))
    return ld if sign > 0 else -math.inf if sign == 0 else math.nan


def _c_step(x, idx, size, lam):
    mu, sigma = _moments(x, idx)
    w = inverse_factor(sigma, lam)
    d2 = (((x - mu) @ w.T) ** 2).sum(axis=1)
    new = np.sort(np.argsort(d2, kind="stable")[:size])
    return new


def fit_mcd(vectors, h=0.1, c0=1.0, n_starts=50, max_steps=100, tol=1e-9, n_refine=2,
            seed=0, ridge=None) -> ScoreModel:
    """Minimum Covariance Determinant location and scatter.

    Approximates the subset of ``ceil(n(1-h))`` vectors whose covariance has
    the smallest determinant: each random start of ``k + 1`` vectors (grown
    until its covariance has full rank) gets two concentration steps, the
    ``n_refine`` best are iterated until the determinant stops decreasing,
    and the best subset wins. The returned scatter is ``c0`` times the subset
    covariance.
    """
    x = _as_matrix(vectors)
    n, k = x.shape
    if n < 2:
        raise TooFewSamplesError(f"need at least 2 vectors, got {n}")
    if not 0 <= h < 1:
        raise LevelError(f"contamination h must lie in [0, 1), got {h}")
    size = subset_size(n, h)
    if size < k + 1:
        raise TooFewSamplesError(f"subset size {size} = ceil(n(1-h)) is below dimension + 1 = {k + 1}")
    if size == n:
        m = fit_plain(x, ridge)
        return ScoreModel.from_moments(m.mu, c0 * m.sigma, ridge, h, "mcd", c0)

    lam = auto_ridge(np.cov(x.T, bias=True).reshape(k, k))
    rng = np.random.default_rng(seed)
    candidates = []
    for _ in range(n_starts):
        perm = rng.permutation(n)
        m = k + 1
        idx = np.sort(perm[:m])
        while m < n and np.linalg.matrix_rank(_moments(x, idx)[1]) < k:
            m += 1
            idx = np.sort(perm[:m])
        for _ in range(2):
            idx = _c_step(x, idx, size, lam)
        candidates.append((_logdet(_moments(x, idx)[1], lam), idx))

    finite = [c for c in candidates if np.isfinite(c[0])]
    if not finite:
        raise DegenerateSubsetError("every candidate subset has a degenerate covariance")
    finite.sort(key=lambda c: c[0])

    best_ld, best_idx = math.inf, None
    for ld, idx in finite[:n_refine]:
        for _ in range(max_steps):
            new = _c_step(x, idx, size, lam)
            new_ld = _logdet(_moments(x, new)[1], lam)
            done = np.array_equal(new, idx) or abs(math.expm1(new_ld - ld)) < tol
            idx, ld = new, new_ld
            if done:
                break
        if ld < best_ld:
            best_ld, best_idx = ld, idx

    mu, sigma = _moments(x, best_idx)
    log.debug("MCD kept %d of %d vectors, log det %.4g", size, n, best_ld)
    return ScoreModel.from_moments(mu, c0 * sigma, ridge, h, "mcd", c0)


def _check_dim(model, v):
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != model.dim:
        raise DimensionError(f"vector has dimension {v.shape[-1]}, model expects {model.dim}")
    return v


def score(model: ScoreModel, v) -> float | np.ndarray:
    """Mahalanobis norm ``sqrt((v - mu)^T (sigma + ridge I)^-1 (v - mu))``.

    ``v`` may be a single vector or an ``n x k`` matrix of row vectors.
    """
    v = _check_dim(model, v)
    z = (v - model.mu) @ model.inv_factor.T
    s = np.sqrt((z * z).sum(axis=-1))
    return float(s) if np.ndim(s) == 0 else s


def center_scores(model: ScoreModel, v) -> np.ndarray:
    """Per-coordinate standardized deviations ``|v_i - mu_i| / sqrt(sigma_ii)``."""
    v = _check_dim(model, v)
    scale = np.sqrt(np.diag(model.sigma) + model.ridge)
    return np.abs(v - model.mu) / scale


def calibrate_threshold(scores, alpha=0.05, delta=None, q=1) -> Threshold:
    """Smallest observed score whose empirical exceedance is at most ``alpha - delta``.

    ``delta`` defaults to ``alpha / 2``. A warning is emitted when ``delta`` is
    below ``5 sqrt(alpha) sqrt(log(n) q / n)``, the margin under which the
    held-out level guarantee for dependent samples with spacing ``q`` no
    longer applies.
    """
    if delta is None:
        delta = alpha / 2
    if not (0 < delta < alpha < 1):
        raise LevelError(f"need 0 < delta < alpha < 1, got alpha={alpha}, delta={delta}")
    s = np.sort(np.asarray(scores, dtype=np.float64).reshape(-1))
    n = len(s)
    if n == 0:
        raise TooFewSamplesError("no scores to calibrate on")
    level = alpha - delta
    above = n - np.searchsorted(s, s, side="right")
    ok = np.flatnonzero(above <= level * n * (1 + 1e-12))
    t_hat = float(s[ok[0]])
    bound = 5 * math.sqrt(alpha) * math.sqrt(math.log(n) * q / n) if n > 1 else math.inf
    if bound > delta:
        warnings.warn(
            f"delta={delta:.4g} is below the dependent-sample margin {bound:.4g} for n={n}, q={q}; "
            "the level guarantee may not hold",
            stacklevel=2,
        )
    return Threshold(t_hat, float(alpha), float(delta))
