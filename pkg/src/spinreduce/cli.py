"""Command-line entry point: ``spinreduce reduce|discrepancy|benchmark``.

Exit status is 0 on success, 2 for invalid flags or input files and 1 when
the computation itself fails. Output files are written to a temporary file
and renamed into place, so a failed run never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import secrets
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import _accel
from .bench import _S_ACTIVE, TestFunction, random_active_set, results_csv, run_experiment
from .data import DataError, Dataset, DistributionSpec, PointSet, load_csv, nearest_rows, standardize, unstandardize
from .discrepancy import discrepancy
from .kernels import Energy, SpinClosed, StdGaussian
from .reducers import METHODS, ReducerConfig, reduce
from .weights import GammaPrior, first_order_weights

log = logging.getLogger("spinreduce")

DIST_ALIASES = {"normal": "normal", "exp": "exponential", "beta": "beta"}
ORDER_DECAYS = {"exp": None, "first": tuple(first_order_weights())}


class UsageError(Exception):
    """Invalid flags or inputs; maps to exit status 2."""


# --------------------------------------------------------------------------
# argument types


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (v > 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return vals


def _method_list(text):
    vals = [t.strip() for t in text.split(",") if t.strip()]
    bad = [v for v in vals if v not in METHODS]
    if not vals or bad:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad or text!r}; choose from {', '.join(METHODS)}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinreduce", description="Reduce big data to representative points.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("reduce", help="reduce a CSV dataset to n points")
    r.add_argument("--input", required=True, type=Path)
    r.add_argument("--output", required=True, type=Path)
    r.add_argument("--n", required=True, type=_positive_int)
    r.add_argument("--method", required=True, choices=METHODS)
    r.add_argument("--nu", type=_positive_float, default=0.1)
    r.add_argument("--lambda", dest="lam", type=_positive_float, default=0.01)
    r.add_argument("--order-decay", choices=sorted(ORDER_DECAYS), default="exp",
                   help="exp: Gamma_k = exp(-k); first: main effects only")
    r.add_argument("--ns", type=_positive_int, default=None, help="data subsample per update (default min(N, 100))")
    r.add_argument("--r", dest="R", type=_positive_int, default=20, help="product-weight draws per update")
    r.add_argument("--max-sweeps", type=_positive_int, default=200)
    r.add_argument("--tol", type=_positive_float, default=1e-4)
    r.add_argument("--seed", type=_nonneg_int, default=None)
    r.add_argument("--init", choices=("support-points", "random-subsample"), default="support-points")
    r.add_argument("--round-to-data", action="store_true")
    r.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    r.add_argument("--threads", type=_positive_int, default=None)

    d = sub.add_parser("discrepancy", help="kernel discrepancy between a dataset and a point set")
    d.add_argument("--data", required=True, type=Path)
    d.add_argument("--points", required=True, type=Path)
    d.add_argument("--kernel", required=True, choices=("spin", "gaussian", "energy"))
    d.add_argument("--nu", type=_positive_float, default=0.1)
    d.add_argument("--lambda", dest="lam", type=_positive_float, default=0.01)
    d.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    d.add_argument("--threads", type=_positive_int, default=None)

    b = sub.add_parser("benchmark", help="integration-error benchmark on synthetic data")
    b.add_argument("--dist", required=True, choices=sorted(DIST_ALIASES))
    b.add_argument("--p", required=True, type=_positive_int)
    b.add_argument("--func", required=True, choices=("gapk", "add"))
    b.add_argument("--q", required=True, type=_positive_float)
    b.add_argument("--sizes", required=True, type=_int_list)
    b.add_argument("--methods", required=True, type=_method_list)
    b.add_argument("--reps", type=_positive_int, default=20)
    b.add_argument("--seed", type=_nonneg_int, default=None)
    b.add_argument("--output", required=True, type=Path)
    b.add_argument("--big-n", dest="N", type=_positive_int, default=10_000, help="rows of big data per replicate")
    b.add_argument("--reference-count", type=_positive_int, default=1_000_000)
    b.add_argument("--active", choices=("first", "random"), default="first")
    b.add_argument("--timings", choices=("none", "wall"), default="none",
                   help="wall: fill the seconds column (output then varies run to run)")
    b.add_argument("--threads", type=_positive_int, default=1)
    return parser


# --------------------------------------------------------------------------
# helpers


def _read(path: Path, header_mode: str) -> Dataset:
    if not path.is_file():
        raise UsageError(f"input file not found: {path}")
    if header_mode == "auto":
        has_header = _looks_like_header(path)
    else:
        has_header = header_mode == "yes"
    try:
        return load_csv(path, has_header=has_header)
    except DataError as exc:
        raise UsageError(str(exc)) from None


def _looks_like_header(path: Path) -> bool:
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or not any(c.strip() for c in row):
                continue
            try:
                [float(c) for c in row]
            except ValueError:
                return True
            return False
    return False


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _matrix_csv(values, header=None) -> str:
    lines = []
    if header is not None:
        lines.append(",".join(header))
    for row in np.atleast_2d(values):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _resolve_seed(seed):
    if seed is None:
        seed = secrets.randbits(63)
        print(f"seed: {seed}", file=sys.stderr)
    return seed


def _check_output_dir(path: Path):
    parent = path.resolve().parent
    if not parent.is_dir():
        raise UsageError(f"output directory does not exist: {parent}")


# --------------------------------------------------------------------------
# subcommands


def cmd_reduce(args) -> int:
    _check_output_dir(args.output)
    prior = GammaPrior(args.nu, args.lam)
    seed = _resolve_seed(args.seed)
    raw = _read(args.input, args.header)
    if args.n > raw.N:
        raise UsageError(f"--n {args.n} exceeds the {raw.N} data rows")
    try:
        cfg = ReducerConfig(method=args.method, n=args.n, ns=args.ns, R=args.R, max_sweeps=args.max_sweeps,
                            tol=args.tol, seed=seed, prior=prior, order_weights=ORDER_DECAYS[args.order_decay],
                            init=args.init)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data = standardize(raw)
    res = reduce(data, cfg)
    pts = res.points
    # rows picked from the data are copied from the raw file so they match it exactly
    if res.indices is not None:
        out = raw.values[res.indices]
    elif args.round_to_data:
        out = raw.values[nearest_rows(pts.points, data.values)]
    else:
        out = unstandardize(pts, data).points
    log.info("%s: %d points, %d sweeps, converged=%s", args.method, len(out), res.sweeps_used, res.converged)
    _atomic_write(args.output, _matrix_csv(out, raw.header))
    return 0


def cmd_discrepancy(args) -> int:
    data = _read(args.data, args.header)
    pts = _read(args.points, args.header)
    if data.p != pts.p:
        raise UsageError(f"dimension mismatch: data has {data.p} columns, points have {pts.p}")
    if args.kernel == "spin":
        kernel = SpinClosed(args.nu, args.lam)
    elif args.kernel == "gaussian":
        kernel = StdGaussian()
    else:
        kernel = Energy()
    rep = discrepancy(kernel, data, PointSet(pts.values))
    print(json.dumps(rep.as_dict(), indent=2))
    return 0


def cmd_benchmark(args) -> int:
    _check_output_dir(args.output)
    seed = _resolve_seed(args.seed)
    if not args.q <= 1.0:
        raise UsageError("--q must lie in (0, 1]")
    if max(args.sizes) > args.N:
        raise UsageError(f"--sizes must not exceed --big-n {args.N}")
    spec = DistributionSpec(DIST_ALIASES[args.dist], args.p)
    active = random_active_set(args.p, args.q, [seed, _S_ACTIVE]) if args.active == "random" else None
    f = TestFunction.for_distribution(args.func, spec, args.q, active=active)
    rows = run_experiment(args.methods, spec, f, args.sizes, args.reps, seed, N=args.N, threads=args.threads,
                          reference_count=args.reference_count)
    _atomic_write(args.output, results_csv(rows, timings=args.timings == "wall"))
    return 0


COMMANDS = {"reduce": cmd_reduce, "discrepancy": cmd_discrepancy, "benchmark": cmd_benchmark}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", None):
        _accel.set_threads(args.threads)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"spinreduce {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # noqa: BLE001 - report, don't traceback
        log.debug("failure", exc_info=True)
        print(f"spinreduce {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
