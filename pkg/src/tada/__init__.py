"""Topological anomaly detection for multivariate time series."""

from ._backend import BACKEND
from .errors import TadaError
from .evaluation import EvalResult, evaluate
from .persistence import FilteredGraph, PersistenceDiagram, bottleneck_distance, rips_persistence
from .pipeline import TadaConfig, TadaModel, fit, load_model, save_model, score_series
from .quantization import QuantizeConfig, atol_batch, atol_minibatch
from .scoring import calibrate_threshold, fit_mcd, fit_plain, score
from .synthgen import WheelSpec, generate_ar1_pointanomaly, generate_wheels
from .timeseries import TimeSeries, WindowConfig, load_csv, save_csv
from .vectorization import build_vectorizer, vectorize

__version__ = "0.1.0"
