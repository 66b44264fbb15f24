"""``tada`` command line: generate, fit, score, eval, diagrams."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import _backend
from .errors import ConfigError, LengthMismatchError, TadaError
from .evaluation import RANGE_METRIC_NAME, evaluate
from .persistence import write_diagrams_csv
from .pipeline import TadaConfig, fit, load_model, save_model, score_series, window_diagrams
from .synthgen import WheelSpec, generate_ar1_pointanomaly, generate_wheels
from .timeseries import WindowConfig, load_csv, save_csv

log = logging.getLogger("tada")

# flag name -> TadaConfig field
PIPELINE_FLAGS = {
    "window": "delta", "stride": "stride", "k": "k", "h": "h", "max_order": "max_order",
    "restarts": "n_start", "seed": "seed", "quantizer": "quantizer", "q": "minibatch_q",
    "spacing": "spacing_mode", "weight": "weight", "alpha": "alpha", "delta": "threshold_delta",
}


def _announce(command, settings):
    print(f"# tada {command} {json.dumps(settings, sort_keys=True)}", file=sys.stderr)


def _pipeline_config(args) -> TadaConfig:
    values = {}
    if args.config:
        try:
            values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        known = {f.name for f in fields(TadaConfig)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"{args.config}: unknown config keys {unknown}")
    for flag, name in PIPELINE_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    return TadaConfig(**values)


def cmd_generate(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i in range(args.n):
        seed = args.seed + i
        if args.kind == "wheels":
            spec = WheelSpec(n_channels=args.channels or 64, duration_s=args.duration, anomaly_len=args.anomaly_len,
                             seed=seed, ar2_modulus=args.modulus, noise_std=args.noise)
            _announce("generate", {"kind": "wheels", **asdict(spec)})
            ts = generate_wheels(spec)
        else:
            rng = np.random.default_rng(seed)
            positions = np.sort(rng.choice(args.length, size=args.anomalies, replace=False))
            d = args.channels or 4
            _announce("generate", {"kind": "ar1", "d": d, "length": args.length, "seed": seed,
                                   "positions": positions.tolist()})
            ts = generate_ar1_pointanomaly(d, args.length, positions, seed=seed)
        path = out / f"{args.kind}_{i:03d}.csv"
        save_csv(ts, path)
        written.append(str(path))
    print("\n".join(written))


def cmd_fit(args):
    cfg = _pipeline_config(args)
    _announce("fit", {"input": args.input, "backend": _backend.BACKEND, **asdict(cfg)})
    ts = load_csv(args.input)
    model = fit(ts, cfg)
    save_model(model, args.model)
    print(f"wrote {args.model} (embedding dim {model.embedding_dim})")


def cmd_score(args):
    _announce("score", {"input": args.input, "model": args.model, "centers": args.centers})
    model = load_model(args.model)
    ts = load_csv(args.input)
    res = score_series(model, ts, with_centers=args.centers)
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        flag = model.threshold is not None
        w.writerow(["timestamp", "score"] + (["flag"] if flag else []))
        for t, s in enumerate(res.timestamp_scores):
            w.writerow([t, repr(float(s))] + ([int(s > model.threshold.t_hat * _coverage(t, res))] if flag else []))
    if args.centers:
        cpath = out.with_name(out.stem + "_centers.csv")
        with open(cpath, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["window_start", "window_score"] + [f"c{i}" for i in range(res.center_scores.shape[1])])
            for st, s, row in zip(res.window_starts, res.window_scores, res.center_scores):
                w.writerow([int(st), repr(float(s))] + [repr(float(x)) for x in row])
        print(cpath)
    print(out)


def _coverage(t, res):
    # number of windows covering timestamp t, so summed scores compare to a per-window threshold
    starts = res.window_starts
    return max(1, int(np.sum((starts <= t) & (t < starts + res.delta))))


def _read_scores(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "score" not in rows[0]:
        raise ConfigError(f"{path}: expected a CSV with a 'score' column")
    return np.array([float(r["score"]) for r in rows])


def cmd_eval(args):
    if len(args.scores) != len(args.data):
        raise LengthMismatchError(f"{len(args.scores)} score files vs {len(args.data)} data files")
    _announce("eval", {"scores": args.scores, "data": args.data})
    results = []
    for s_path, d_path in zip(args.scores, args.data):
        ts = load_csv(d_path)
        if ts.labels is None:
            raise ConfigError(f"{d_path}: no label column")
        results.append(evaluate(_read_scores(s_path), ts.labels))
    if len(results) == 1:
        text = results[0].to_json()
    else:
        per = [json.loads(r.to_json()) for r in results]
        keys = ("roc_auc", "pr_auc", "range_pr_auc")
        text = json.dumps({
            "results": per,
            "median": {k: float(np.median([p[k] for p in per])) for k in keys},
            "n_range_pr_auc_above_0.9": sum(p["range_pr_auc"] > 0.9 for p in per),
            "range_metric": RANGE_METRIC_NAME,
        }, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)


def cmd_diagrams(args):
    window = WindowConfig(args.window or 100, args.stride or 10)
    max_order = args.max_order or 2
    _announce("diagrams", {"input": args.input, "delta": window.delta, "stride": window.stride,
                           "max_order": max_order, "weight": args.weight or "unit"})
    ts = load_csv(args.input)
    window.validate_for(ts.length)
    windows, diagrams = window_diagrams(ts, window, max_order, args.weight or "unit")
    write_diagrams_csv(args.out, diagrams, list(range(len(windows))))
    print(args.out)


def _pipeline_flags(p, fit_flags=True):
    p.add_argument("--window", type=int, help="window length (default 100)")
    p.add_argument("--stride", type=int, help="window stride (default 10)")
    p.add_argument("--max-order", dest="max_order", type=int, help="homology orders 0 .. max-order - 1 (default 2)")
    p.add_argument("--weight", choices=("unit", "persistence"))
    if not fit_flags:
        return
    p.add_argument("--k", type=int, help="centroids per order (default 10)")
    p.add_argument("--h", type=float, help="MCD contamination fraction, 0 for plain moments (default 0.1)")
    p.add_argument("--restarts", type=int, help="quantizer restarts (default 10)")
    p.add_argument("--seed", type=int)
    p.add_argument("--quantizer", choices=("batch", "minibatch"))
    p.add_argument("--q", type=int, help="minibatch size")
    p.add_argument("--spacing", choices=("dense", "spaced"))
    p.add_argument("--alpha", type=float, help="calibrate a threshold at this level")
    p.add_argument("--delta", type=float, help="threshold margin (default alpha / 2)")
    p.add_argument("--config", help="JSON file of pipeline settings; flags override it")


def build_parser():
    parser = argparse.ArgumentParser(prog="tada", description="Topological anomaly detection for multivariate series.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage timings")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write synthetic labelled series")
    g.add_argument("kind", choices=("wheels", "ar1"))
    g.add_argument("--n", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--channels", type=int)
    g.add_argument("--length", type=int, default=2000, help="ar1 series length")
    g.add_argument("--anomalies", type=int, default=5, help="ar1 spike count")
    g.add_argument("--duration", type=float, default=20.0, help="wheels duration in seconds")
    g.add_argument("--anomaly-len", dest="anomaly_len", type=int, default=500)
    g.add_argument("--modulus", type=float, default=WheelSpec.ar2_modulus)
    g.add_argument("--noise", type=float, default=WheelSpec.noise_std)
    g.add_argument("--out", default=".")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="fit a model on a CSV series")
    f.add_argument("input")
    f.add_argument("--model", required=True, help="output model file")
    _pipeline_flags(f)
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("score", help="score a CSV series with a fitted model")
    s.add_argument("input")
    s.add_argument("--model", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--centers", action="store_true", help="also write per-window center scores")
    s.set_defaults(func=cmd_score)

    e = sub.add_parser("eval", help="evaluate score files against labelled series")
    e.add_argument("--scores", nargs="+", required=True)
    e.add_argument("--data", nargs="+", required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    d = sub.add_parser("diagrams", help="export per-window persistence diagrams")
    d.add_argument("input")
    d.add_argument("--out", required=True)
    _pipeline_flags(d, fit_flags=False)
    d.set_defaults(func=cmd_diagrams)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s %(levelname)s %(message)s")
    try:
        args.func(args)
    except (TadaError, OSError) as exc:
        print(f"tada {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
