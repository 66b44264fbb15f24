"""Multivariate series ingestion, window slicing and correlation similarity."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, NonFiniteError, ParseError

log = logging.getLogger(__name__)

LABEL_COLUMN = "is_anomaly"


@dataclass(frozen=True)
class TimeSeries:
    """``L x D`` real samples with optional per-timestamp binary labels."""

    values: np.ndarray
    sample_rate: float | None = None
    labels: np.ndarray | None = None
    channel_names: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionError(f"values must be 2-D (timestamps x channels), got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            r, c = np.argwhere(~np.isfinite(values))[0]
            raise NonFiniteError(f"non-finite value at timestamp {r}, channel {c}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = np.asarray(self.labels).astype(np.int8)
            if labels.shape != (values.shape[0],):
                raise DimensionError(
                    f"labels length {labels.shape[0] if labels.ndim else 0} != series length {values.shape[0]}"
                )
            if np.any((labels != 0) & (labels != 1)):
                raise ParseError("labels must be binary (0/1)")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)
        if self.channel_names is not None:
            names = tuple(str(n) for n in self.channel_names)
            if len(names) != values.shape[1]:
                raise DimensionError("channel_names length does not match channel count")
            object.__setattr__(self, "channel_names", names)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class WindowConfig:
    delta: int = 100
    stride: int = 10

    def __post_init__(self):
        if int(self.delta) != self.delta or self.delta < 2:
            raise ConfigError(f"window length must be an integer >= 2, got {self.delta}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ConfigError(f"stride must be an integer >= 1, got {self.stride}")

    def validate_for(self, length: int):
        if self.delta > length:
            raise ConfigError(f"window length {self.delta} exceeds series length {length}")


@dataclass(frozen=True)
class SimilarityMatrix:
    weights: np.ndarray
    window_index: int = 0
    constant_channels: tuple[int, ...] = field(default=())


def _parse_float(text, row, col):
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"row {row}, column {col}: cannot parse {text!r} as a number") from None


def load_csv(path, header="auto", label_column=None, sample_rate=None) -> TimeSeries:
    """Read a comma-separated series, one row per timestamp.

    ``header`` is ``True``, ``False`` or ``"auto"`` (a first row that does not
    parse as numbers is taken as a header). ``label_column`` is a column name
    (needs a header) or a zero-based column index; that column becomes the
    label vector and is excluded from the channels. When a header is present
    and contains ``is_anomaly`` it is picked up without asking.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ParseError(f"{path}: empty file")

    names = None
    if header == "auto":
        try:
            [float(c) for c in rows[0]]
            has_header = False
        except ValueError:
            has_header = True
    else:
        has_header = bool(header)
    if has_header:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        first_row = 2
    else:
        first_row = 1

    width = len(rows[0]) if rows else (len(names) if names else 0)
    if names is not None and len(names) != width and rows:
        raise DimensionError(f"{path}: header has {len(names)} fields but row {first_row} has {width}")

    label_idx = None
    if label_column is None and names is not None and LABEL_COLUMN in names:
        label_idx = names.index(LABEL_COLUMN)
    elif isinstance(label_column, str):
        if names is None or label_column not in names:
            raise ParseError(f"{path}: label column {label_column!r} not found in header")
        label_idx = names.index(label_column)
    elif label_column is not None:
        label_idx = int(label_column)
        if not 0 <= label_idx < width:
            raise ParseError(f"{path}: label column index {label_idx} out of range")

    data = np.empty((len(rows), width), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DimensionError(
                f"{path}: row {i + first_row} has {len(row)} fields, expected {width}"
            )
        for j, cell in enumerate(row):
            v = _parse_float(cell.strip(), i + first_row, j)
            if not np.isfinite(v):
                raise NonFiniteError(f"{path}: non-finite value {cell!r} at row {i + first_row}, column {j}")
            data[i, j] = v

    labels = None
    if label_idx is not None:
        labels = data[:, label_idx]
        data = np.delete(data, label_idx, axis=1)
        if names is not None:
            names = names[:label_idx] + names[label_idx + 1:]
    return TimeSeries(data, sample_rate=sample_rate, labels=labels,
                      channel_names=tuple(names) if names is not None else None)


def save_csv(ts: TimeSeries, path):
    path = Path(path)
    names = list(ts.channel_names or (f"ch_{j}" for j in range(ts.n_channels)))
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + ([LABEL_COLUMN] if ts.labels is not None else []))
        for i in range(ts.length):
            row = [repr(float(v)) for v in ts.values[i]]
            if ts.labels is not None:
                row.append(str(int(ts.labels[i])))
            writer.writerow(row)


def slice_windows(ts_or_length, cfg: WindowConfig) -> list[range]:
    """Half-open sample ranges ``[t*s, t*s + delta)`` for ``t = 0 .. (L - delta) // s``."""
    length = ts_or_length.length if isinstance(ts_or_length, TimeSeries) else int(ts_or_length)
    cfg.validate_for(length)
    count = (length - cfg.delta) // cfg.stride + 1
    return [range(t * cfg.stride, t * cfg.stride + cfg.delta) for t in range(count)]


def correlation_similarity(block: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    """``1 - Pearson correlation`` between the columns of ``block``.

    Constant columns (and columns whose variance underflows) get correlation
    0 (weight 1) with every other column. Sums run along contiguous rows of
    the transposed block so every entry is reduced the same way regardless of
    column position: permuting columns permutes the result exactly.
    """
    block = np.asarray(block, dtype=np.float64)
    rows = np.ascontiguousarray(block.T)
    centered = rows - (rows.sum(axis=1) / rows.shape[1])[:, None]
    cov = (centered[:, None, :] * centered[None, :, :]).sum(axis=-1)
    var = np.diag(cov).copy()
    constant = (np.ptp(block, axis=0) == 0) | ~(var > 0)
    var[constant] = 1.0
    sd = np.sqrt(var)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        corr = cov / (sd[:, None] * sd[None, :])
    corr[~np.isfinite(corr)] = 0.0   # scale products that under- or overflow
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    weights = np.clip(1.0 - corr, 0.0, 2.0)
    np.fill_diagonal(weights, 0.0)
    return weights, tuple(int(j) for j in np.flatnonzero(constant))


def similarity(ts: TimeSeries, window: range, window_index: int = 0) -> SimilarityMatrix:
    if window.start < 0 or window.stop > ts.length or len(window) < 2:
        raise ConfigError(f"window [{window.start}, {window.stop}) invalid for series of length {ts.length}")
    weights, constant = correlation_similarity(ts.values[window.start:window.stop])
    if constant:
        log.debug("window %d: %d constant channel(s)", window_index, len(constant))
    return SimilarityMatrix(weights, window_index, constant)
