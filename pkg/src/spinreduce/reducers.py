"""Reduction algorithms: one-shot and sequential PSPs plus baselines.

All reducers work on the dataset's own coordinates (callers standardize
first) and are fully determined by ``ReducerConfig.seed``. Every random draw
inside a reducer comes from a stream keyed by ``(seed, purpose, point, sweep)``,
so the order of execution never changes the draws.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import _hot
from .data import Dataset, PointSet
from .discrepancy import objective_from_weights
from .kernels import StdGaussian, rowsums
from .mm import CURVATURE_FORMS, MMContext, mm_update
from .weights import GammaPrior, exponential_order_weights, omega_rows, sample_theta

log = logging.getLogger(__name__)

METHODS = ("psp-oneshot", "psp-seq", "herding", "support-points", "monte-carlo")
INITS = ("support-points", "random-subsample")

HERDING_MAX_CANDIDATES = 10_000
TRACE_ROWS = 1000
TRACE_R = 20

# stream purposes
_S_INIT, _S_SWEEP, _S_TRACE, _S_FROZEN, _S_SEQ_START, _S_SEQ_ITER, _S_SP, _S_MC, _S_HERD = range(9)


@dataclass(frozen=True)
class ReducerConfig:
    """Settings shared by all reducers.

    ``ns``: data subsample size per MM update (default ``min(N, 100)``); with
    ``ns >= N`` every update uses the full data.
    ``R``: product-weight draws per update. ``tol``: convergence threshold on
    the largest coordinate move within a sweep. ``resample=False`` freezes one
    subsample and one set of draws for the whole run. ``curvature``: rank-one
    majorizer form passed to :class:`spinreduce.mm.MMContext`.
    """

    method: str = "psp-seq"
    n: int = 50
    ns: int | None = None
    R: int = 20
    max_sweeps: int = 200
    tol: float = 1e-4
    seed: int = 0
    prior: GammaPrior = field(default_factory=GammaPrior)
    order_weights: tuple | None = None
    kernel: object = None
    init: str = "support-points"
    warm_sweeps: int = 20
    inner_max: int = 100
    resample: bool = True
    parallel_sweep: bool = False
    sp_batch: int | None = None
    curvature: str = "tight"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.init not in INITS:
            raise ValueError(f"unknown init {self.init!r}; expected one of {INITS}")
        if int(self.n) < 1:
            raise ValueError("n must be >= 1")
        if self.ns is not None and int(self.ns) < 1:
            raise ValueError("ns must be >= 1")
        if int(self.R) < 1:
            raise ValueError("R must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if int(self.max_sweeps) < 1 or int(self.inner_max) < 1:
            raise ValueError("sweep limits must be >= 1")
        if self.curvature not in CURVATURE_FORMS:
            raise ValueError(f"unknown curvature form {self.curvature!r}")
        if self.seed is None or int(self.seed) < 0:
            raise ValueError("seed must be a non-negative integer")

    def order_for(self, p: int) -> np.ndarray:
        if self.order_weights is None:
            return exponential_order_weights(p)
        return np.asarray(self.order_weights, dtype=float)[:p]


@dataclass
class ReductionResult:
    points: PointSet
    sweeps_used: int
    objective_trace: list
    converged: bool
    initial_objective: float | None = None
    indices: np.ndarray | None = None
    inner_iterations: list | None = None


def _stream(seed, *key):
    return np.random.default_rng([int(seed), *[int(k) for k in key]])


def _check(data: Dataset, cfg: ReducerConfig):
    if cfg.n > data.N:
        raise ValueError(f"n={cfg.n} exceeds the number of data rows N={data.N}")
    if cfg.method.startswith("psp") and not data.standardized:
        log.debug("PSP reducer called on unstandardized data; default hyperparameters assume unit variance")


def _ns(data, cfg):
    return min(data.N, 100) if cfg.ns is None else int(cfg.ns)


def _draw(rng, Y, ns, prior, R, order):
    # a subsample as large as the data is replaced by the data itself
    rows = Y if ns >= Y.shape[0] else Y[rng.integers(0, Y.shape[0], size=ns)]
    thetas = sample_theta(prior, Y.shape[1], R, rng)
    return rows, omega_rows(thetas, order)


def _trace_set(data, cfg, order):
    rng = _stream(cfg.seed, _S_TRACE)
    rows = min(data.N, TRACE_ROWS)
    idx = rng.choice(data.N, rows, replace=False) if rows < data.N else np.arange(data.N)
    W = omega_rows(sample_theta(cfg.prior, data.p, max(cfg.R, TRACE_R), rng), order)
    return np.ascontiguousarray(data.values[idx]), W


# --------------------------------------------------------------------------


def psp_oneshot(data: Dataset, cfg: ReducerConfig, initial_points=None) -> ReductionResult:
    """Blockwise MM over all n points, one closed-form update per point per sweep."""
    _check(data, cfg)
    Y = data.values
    N, p = Y.shape
    n = int(cfg.n)
    ns = _ns(data, cfg)
    order = cfg.order_for(p)
    if initial_points is not None:
        X = np.array(initial_points, dtype=float).reshape(n, p)
    elif cfg.init == "support-points":
        warm = replace(cfg, method="support-points", max_sweeps=max(1, cfg.warm_sweeps))
        X = support_points(data, warm).points.points.copy()
    else:
        X = Y[_stream(cfg.seed, _S_INIT).choice(N, n, replace=False)].copy()

    if cfg.resample:
        Y_tr, W_tr = _trace_set(data, cfg, order)
    else:
        Y_fix, W_fix = _draw(_stream(cfg.seed, _S_FROZEN), Y, ns, cfg.prior, cfg.R, order)
        Y_tr, W_tr = Y_fix, W_fix

    initial = objective_from_weights(W_tr, Y_tr, X)
    trace = []
    converged = False
    sweep = 0
    for sweep in range(1, int(cfg.max_sweeps) + 1):
        prev = X.copy() if cfg.parallel_sweep else None
        move = 0.0
        for i in range(n):
            if cfg.resample:
                Ys, W = _draw(_stream(cfg.seed, _S_SWEEP, i, sweep), Y, ns, cfg.prior, cfg.R, order)
            else:
                Ys, W = Y_fix, W_fix
            src = prev if cfg.parallel_sweep else X
            others = np.delete(src, i, axis=0)
            new = mm_update(MMContext(W, Ys, others, n, cfg.curvature), src[i])
            move = max(move, float(np.abs(new - X[i]).max()))
            X[i] = new
        trace.append(objective_from_weights(W_tr, Y_tr, X))
        if move < cfg.tol:
            converged = True
            break
    return ReductionResult(PointSet(X), sweep, trace, converged, initial_objective=initial)


def psp_seq(data: Dataset, cfg: ReducerConfig) -> ReductionResult:
    """Greedy PSPs: each new point is optimized by MM with earlier points held fixed.

    The first point is a random data row. Streams depend only on the point
    index, so a longer run reproduces every point of a shorter one.
    """
    _check(data, cfg)
    Y = data.values
    N, p = Y.shape
    n = int(cfg.n)
    ns = _ns(data, cfg)
    order = cfg.order_for(p)
    Y_tr, W_tr = _trace_set(data, cfg, order)
    R_tr = W_tr.shape[0]

    X = np.empty((n, p))
    inner = []
    trace = []
    all_converged = True
    pp_sum = 0.0
    cross_sum = 0.0
    for i in range(n):
        x = Y[_stream(cfg.seed, _S_SEQ_START, i).integers(N)].copy()
        its = 0
        if i > 0:
            fixed = X[:i]
            ok = False
            for it in range(int(cfg.inner_max)):
                Ys, W = _draw(_stream(cfg.seed, _S_SEQ_ITER, i, it), Y, ns, cfg.prior, cfg.R, order)
                new = mm_update(MMContext(W, Ys, fixed, i + 1, cfg.curvature), x)
                its = it + 1
                move = float(np.abs(new - x).max())
                x = new
                if move < cfg.tol:
                    ok = True
                    break
            all_converged &= ok
        X[i] = x
        inner.append(its)
        # running objective of the first i+1 points on the fixed trace set
        xi = x[None, :]
        if i:
            pp_sum += 2.0 * R_tr * _hot.gauss_mix_rowsums(xi, X[:i], W_tr)[0]
        pp_sum += R_tr * 1.0
        cross_sum += R_tr * _hot.gauss_mix_rowsums(xi, Y_tr, W_tr)[0]
        k = i + 1
        trace.append(pp_sum / (k * k * R_tr) - 2.0 * cross_sum / (k * Y_tr.shape[0] * R_tr))
    return ReductionResult(PointSet(X), n, trace, all_converged, inner_iterations=inner)


def herding(data: Dataset, cfg: ReducerConfig) -> ReductionResult:
    """Kernel herding over the data rows (or a 10^4-row subsample of them)."""
    _check(data, cfg)
    kernel = cfg.kernel if cfg.kernel is not None else StdGaussian()
    Y = data.values
    if data.N > HERDING_MAX_CANDIDATES:
        cand_idx = np.sort(_stream(cfg.seed, _S_HERD).choice(data.N, HERDING_MAX_CANDIDATES, replace=False))
    else:
        cand_idx = np.arange(data.N)
    C = np.ascontiguousarray(Y[cand_idx])
    mean_k = rowsums(kernel, C, C) / C.shape[0]
    picked_sum = np.zeros(C.shape[0])
    chosen = []
    trace = []
    pp = 0.0
    dd = float(mean_k.mean())
    for t in range(int(cfg.n)):
        score = mean_k - picked_sum / (t + 1)
        j = int(np.argmax(score))
        chosen.append(j)
        col = rowsums(kernel, C, C[j:j + 1])
        pp += 2.0 * picked_sum[j] + col[j]
        picked_sum += col
        k = t + 1
        cross = float(mean_k[chosen].sum()) / k
        trace.append(dd - 2.0 * cross + pp / (k * k))
    idx = cand_idx[np.asarray(chosen)]
    return ReductionResult(PointSet(Y[idx]), int(cfg.n), trace, True, indices=idx)


def _energy_objective(X, Y):
    n = X.shape[0]
    cross = _hot.dist_rowsums(X, Y).sum() / (n * Y.shape[0])
    within = _hot.dist_rowsums(X, X).sum() / n ** 2
    return float(2.0 * cross - within)


def support_points(data: Dataset, cfg: ReducerConfig) -> ReductionResult:
    """Energy-distance support points by convex-concave (MM) fixed-point sweeps.

    Each sweep moves every point to
    ``(sum_m y_m/|x-y_m| + (N/n) sum_j (x-x_j)/|x-x_j|) / sum_m 1/|x-y_m|``,
    using all data rows, or a fresh ``sp_batch``-row resample per sweep.
    """
    _check(data, cfg)
    Y = np.ascontiguousarray(data.values)
    N = data.N
    n = int(cfg.n)
    X = np.ascontiguousarray(Y[_stream(cfg.seed, _S_INIT).choice(N, n, replace=False)])
    batch = cfg.sp_batch
    tr_idx = _stream(cfg.seed, _S_TRACE).choice(N, min(N, TRACE_ROWS), replace=False)
    Y_tr = np.ascontiguousarray(Y[tr_idx])
    initial = _energy_objective(X, Y_tr)
    trace = []
    converged = False
    sweep = 0
    for sweep in range(1, int(cfg.max_sweeps) + 1):
        if batch is not None and batch < N:
            Ys = np.ascontiguousarray(Y[_stream(cfg.seed, _S_SP, sweep).integers(0, N, size=int(batch))])
        else:
            Ys = Y
        new = _hot.energy_sweep(X, Ys)
        move = float(np.abs(new - X).max())
        X = np.ascontiguousarray(new)
        trace.append(_energy_objective(X, Y_tr))
        if move < cfg.tol:
            converged = True
            break
    return ReductionResult(PointSet(X), sweep, trace, converged, initial_objective=initial)


def monte_carlo(data: Dataset, cfg: ReducerConfig) -> ReductionResult:
    """Uniform random n-subset of the rows, without replacement."""
    _check(data, cfg)
    idx = _stream(cfg.seed, _S_MC).choice(data.N, int(cfg.n), replace=False)
    return ReductionResult(PointSet(data.values[idx]), 0, [], True, indices=idx)


_DISPATCH = {
    "psp-oneshot": psp_oneshot,
    "psp-seq": psp_seq,
    "herding": herding,
    "support-points": support_points,
    "monte-carlo": monte_carlo,
}


def reduce(data: Dataset, cfg: ReducerConfig) -> ReductionResult:
    return _DISPATCH[cfg.method](data, cfg)
