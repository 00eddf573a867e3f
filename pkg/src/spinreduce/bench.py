"""Integration benchmarks: test functions, reference means and the experiment loop.

Each replicate draws one big dataset that every (method, n) pair reduces, so
methods are compared on common data. Integration errors are measured in the
original units; discrepancies use the closed-form SpIn kernel on the
standardized data.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .data import DistributionSpec, sample, standardize, unstandardize
from .discrepancy import discrepancy, integration_error
from .kernels import SpinClosed
from .reducers import METHODS, ReducerConfig, reduce

log = logging.getLogger(__name__)

KINDS = ("gapk", "add")
DEFAULT_N = 10_000
DEFAULT_REFERENCE_COUNT = 1_000_000
CSV_COLUMNS = ("method", "n", "rep", "error", "discrepancy", "seconds")

# seed-stream purposes
_S_DATA, _S_REDUCE, _S_REF, _S_ACTIVE = range(4)


def active_count(p: int, q: float) -> int:
    # the epsilon keeps q*p = 4.000000001 from rounding up to 5
    return max(1, math.ceil(q * p - 1e-9))


@dataclass(frozen=True)
class TestFunction:
    """GAPK ``exp(-sum a_l^2 (x_l - u_l)^2)`` or ADD ``exp(-sum b_l x_l)``.

    ``coefficients`` defaults to ``0.25/(q p)`` on the active coordinates and
    zero elsewhere. The active set is the first ``ceil(q p)`` coordinates
    unless ``active`` lists them explicitly.
    """

    __test__ = False  # not a pytest class

    kind: str
    p: int
    q: float = 1.0
    u: tuple | None = None
    active: tuple | None = None
    coefficients: tuple = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown test function {self.kind!r}; expected one of {KINDS}")
        if int(self.p) < 1:
            raise ValueError("p must be >= 1")
        if not 0.0 < self.q <= 1.0:
            raise ValueError("q must lie in (0, 1]")
        p = int(self.p)
        if self.coefficients is None:
            k = active_count(p, self.q)
            act = tuple(range(k)) if self.active is None else tuple(int(i) for i in self.active)
            if len(act) != k or len(set(act)) != k or not all(0 <= i < p for i in act):
                raise ValueError(f"active set must hold {k} distinct coordinates in [0, {p})")
            coef = np.zeros(p)
            coef[list(act)] = 0.25 / (self.q * p)
        else:
            coef = np.asarray(self.coefficients, dtype=float).ravel()
            if coef.size != p or np.any(coef < 0):
                raise ValueError("coefficients must be p non-negative values")
            act = tuple(int(i) for i in np.flatnonzero(coef))
        u = np.zeros(p) if self.u is None else np.asarray(self.u, dtype=float).ravel()
        if u.size != p:
            raise ValueError("u must have length p")
        object.__setattr__(self, "coefficients", tuple(coef.tolist()))
        object.__setattr__(self, "active", act)
        object.__setattr__(self, "u", tuple(u.tolist()))

    @classmethod
    def for_distribution(cls, kind: str, spec: DistributionSpec, q: float, active=None):
        """Test function centred on the marginal means of ``spec``."""
        return cls(kind, spec.p, q, u=(spec.marginal_mean,) * spec.p, active=active)

    @property
    def n_active(self) -> int:
        return len(self.active)

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.p:
            raise ValueError(f"test function has p={self.p}, got {X.shape[1]} columns")
        c = np.asarray(self.coefficients)
        if self.kind == "gapk":
            return np.exp(-(((X - np.asarray(self.u)) * c) ** 2).sum(axis=1))
        return np.exp(-(X @ c))


def random_active_set(p: int, q: float, seed) -> tuple:
    rng = np.random.default_rng(seed)
    return tuple(sorted(rng.choice(p, active_count(p, q), replace=False).tolist()))


def eval_test_function(f: TestFunction, x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    return float(f(x[None, :])[0])


def reference_mean(f: TestFunction, spec: DistributionSpec, count: int = DEFAULT_REFERENCE_COUNT,
                   seed=0, chunk: int = 100_000) -> tuple[float, float]:
    """Monte Carlo estimate of E_F[f] and its standard error.

    Draws in chunks and merges chunk means and sums of squared deviations
    (Chan et al.), so memory stays bounded and the variance is stable.
    """
    if spec.p != f.p:
        raise ValueError("test function and distribution disagree on p")
    if count < 2:
        raise ValueError("count must be >= 2")
    ss = np.random.SeedSequence(seed if isinstance(seed, (list, tuple)) else [int(seed)])
    total, mean, m2 = 0, 0.0, 0.0
    for start in range(0, int(count), chunk):
        m = min(chunk, int(count) - start)
        vals = f(sample(spec, m, seed=np.random.default_rng(ss.spawn(1)[0])).values)
        cm = float(vals.mean())
        cm2 = float(((vals - cm) ** 2).sum())
        delta = cm - mean
        new_total = total + m
        mean += delta * m / new_total
        m2 += cm2 + delta * delta * total * m / new_total
        total = new_total
    var = m2 / (total - 1)
    return mean, math.sqrt(var / total)


@dataclass(frozen=True)
class ExperimentResult:
    method: str
    n: int
    rep: int
    error: float
    discrepancy: float
    seconds: float


def _derived_seed(seed, *key) -> int:
    return int(np.random.SeedSequence([int(seed), *key]).generate_state(1, np.uint64)[0] >> 1)


def _run_replicate(job):
    methods, spec, f, sizes, rep, seed, N, reference, options = job
    if options.pop("_single_thread", False):
        _accel.set_threads(1)
    raw = sample(spec, N, seed=np.random.default_rng([int(seed), _S_DATA, rep]))
    data = standardize(raw)
    kernel = SpinClosed()
    red_seed = _derived_seed(seed, _S_REDUCE, rep)
    out = []
    for method in methods:
        for n in sizes:
            cfg = ReducerConfig(method=method, n=int(n), seed=red_seed, **options)
            t0 = time.perf_counter()
            res = reduce(data, cfg)
            elapsed = time.perf_counter() - t0
            pts = unstandardize(res.points, data)
            err = integration_error(f, reference, pts)
            disc = discrepancy(kernel, data, res.points).value
            out.append(ExperimentResult(method, int(n), rep, err, disc, elapsed))
    return out


def run_experiment(methods, spec: DistributionSpec, f: TestFunction, sizes, reps: int, seed: int,
                   N: int = DEFAULT_N, threads: int = 1, reference=None,
                   reference_count: int = DEFAULT_REFERENCE_COUNT, reducer_options=None) -> list[ExperimentResult]:
    """Run every (method, n, rep) combination; rows sorted by (method, n, rep).

    ``reference`` overrides the Monte Carlo reference mean. With ``threads > 1``
    replicates run in separate processes; the numbers do not change.
    """
    methods = list(methods)
    sizes = [int(n) for n in sizes]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
    if int(reps) < 1:
        raise ValueError("reps must be >= 1")
    if any(n < 1 or n > N for n in sizes):
        raise ValueError(f"sizes must lie in [1, N={N}]")
    if f.p != spec.p:
        raise ValueError("test function and distribution disagree on p")
    log.info("%s test function: %d active coordinates of %d, coefficient %.6g",
             f.kind.upper(), f.n_active, f.p, max(f.coefficients))
    if reference is None:
        reference, se = reference_mean(f, spec, reference_count, seed=[int(seed), _S_REF])
        log.info("reference mean %.10g (s.e. %.2g, %d draws)", reference, se, reference_count)
    options = dict(reducer_options or {})
    threads = max(1, int(threads or 1))
    jobs = [(methods, spec, f, sizes, rep, seed, int(N), float(reference), dict(options))
            for rep in range(int(reps))]
    if threads == 1 or len(jobs) == 1:
        per_rep = [_run_replicate(j) for j in jobs]
    else:
        for j in jobs:
            j[-1]["_single_thread"] = True
        # fork after numba has started OpenMP threads is unsafe, so always spawn
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs)), mp_context=ctx) as pool:
            per_rep = list(pool.map(_run_replicate, jobs))
    rows = [r for chunk in per_rep for r in chunk]
    order = {m: i for i, m in enumerate(methods)}
    rows.sort(key=lambda r: (order[r.method], r.n, r.rep))
    return rows


def results_csv(rows, timings: bool = True) -> str:
    """CSV text for ``rows``. ``timings=False`` leaves ``seconds`` empty so the
    output depends only on the seed."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.method, r.n, r.rep, repr(float(r.error)), repr(float(r.discrepancy)),
                    f"{r.seconds:.6f}" if timings else ""])
    return buf.getvalue()


def summarize(rows) -> dict:
    """Median error and discrepancy per (method, n)."""
    groups = {}
    for r in rows:
        groups.setdefault((r.method, r.n), []).append(r)
    return {k: {"median_error": float(np.median([r.error for r in v])),
                "median_discrepancy": float(np.median([r.discrepancy for r in v])),
                "reps": len(v)} for k, v in groups.items()}
