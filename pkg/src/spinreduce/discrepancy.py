"""Kernel discrepancy, its subsampled objective estimate, and diagnostics."""

from __future__ import annotations

import logging
import pickle
from dataclasses import dataclass

import numpy as np

from . import _hot, kernels
from .data import Dataset, PointSet
from .weights import omega_rows

log = logging.getLogger(__name__)

DATA_TERM_MAX_ROWS = 5000
_NEGATIVE_WARN = -1e-8


@dataclass(frozen=True)
class DiscrepancyReport:
    """``value**2 == data_data - 2 * cross + point_point`` (clamped at zero).

    ``data_subsampled`` is set when the data-data mean was estimated from a
    fixed 5000-row subsample rather than all N^2 pairs.
    """

    value: float
    data_data: float
    cross: float
    point_point: float
    data_subsampled: bool = False

    @property
    def squared(self) -> float:
        return self.data_data - 2.0 * self.cross + self.point_point

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "squared": max(self.squared, 0.0),
            "data_data": self.data_data,
            "cross": self.cross,
            "point_point": self.point_point,
            "data_subsampled": self.data_subsampled,
        }


_data_term_cache: dict = {}


def data_term(spec, values: np.ndarray, max_rows: int = DATA_TERM_MAX_ROWS) -> tuple[float, bool]:
    """Mean of gamma over all data pairs; cached per (kernel, data array).

    Above ``max_rows`` rows the mean is taken over a fixed, seeded row subsample.
    """
    key = (id(values), values.shape, pickle.dumps(spec), max_rows)
    hit = _data_term_cache.get(key)
    if hit is not None and hit[0] is values:
        return hit[1]
    sub = values
    subsampled = values.shape[0] > max_rows
    if subsampled:
        rows = np.sort(np.random.default_rng(0).choice(values.shape[0], max_rows, replace=False))
        sub = values[rows]
    result = (float(kernels.rowsums(spec, sub, sub).sum() / sub.shape[0] ** 2), subsampled)
    if len(_data_term_cache) > 32:
        _data_term_cache.clear()
    _data_term_cache[key] = (values, result)
    return result


def _values(d):
    if isinstance(d, Dataset):
        return d.values
    if isinstance(d, PointSet):
        return d.points
    return np.atleast_2d(np.asarray(d, dtype=float))


def discrepancy(spec, data, ps) -> DiscrepancyReport:
    """Kernel discrepancy between the e.d.f.s of ``data`` and ``ps``."""
    Y = _values(data)
    X = _values(ps)
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: data p={Y.shape[1]}, points p={X.shape[1]}")
    dd, sub = data_term(spec, Y)
    cross = float(kernels.rowsums(spec, X, Y).sum() / (X.shape[0] * Y.shape[0]))
    pp = float(kernels.rowsums(spec, X, X).sum() / X.shape[0] ** 2)
    sq = dd - 2.0 * cross + pp
    if sq < _NEGATIVE_WARN:
        log.warning("squared discrepancy %.3g < 0 from cancellation; clamped to 0", sq)
    return DiscrepancyReport(float(np.sqrt(max(sq, 0.0))), dd, cross, pp, sub)


def objective_from_weights(W, Y, X) -> float:
    """Subsampled objective for a precomputed coordinate-weight matrix ``W`` (R, p)."""
    W = np.ascontiguousarray(W, dtype=float)
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    n = X.shape[0]
    pp = _hot.gauss_mix_rowsums(X, X, W).sum() / n ** 2
    cross = _hot.gauss_mix_rowsums(X, Y, W).sum() / (n * Y.shape[0])
    return float(pp - 2.0 * cross)


def objective_estimate(thetas, data_subsample, ps, order_weights=None) -> float:
    """Unbiased estimate of the PSP objective from R product-weight draws and N_s data rows.

    ``order_weights=None`` treats each theta as an anisotropic weight vector.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    W = thetas if order_weights is None else omega_rows(thetas, order_weights)
    return objective_from_weights(W, _values(data_subsample), _values(ps))


def integration_error(g, reference_mean: float, ps) -> float:
    """``|reference_mean - mean_i g(x_i)|``; ``g`` maps an (n, p) array to n values."""
    X = _values(ps)
    return float(abs(reference_mean - np.mean(g(X))))


@dataclass(frozen=True)
class MaxProValue:
    value: float
    singular: bool


def maxpro_criterion(ps, lam: float) -> MaxProValue:
    """Space-filling-on-projections criterion of a point set (shape parameter fixed at 1).

    Coincident coordinates with ``lam == 0`` give an infinite value, flagged
    as ``singular`` rather than raised.
    """
    X = _values(ps)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    total = 0.0
    singular = False
    for i in range(n):
        d2 = (X[i] - X) ** 2 + lam
        d2 = np.delete(d2, i, axis=0)
        zero = np.any(d2 == 0.0, axis=1)
        if zero.any():
            singular = True
            continue
        total += float(np.exp(-np.log(d2).sum(axis=1)).sum())
    if singular:
        log.warning("maxpro criterion is infinite: coincident coordinates with lambda=0")
        return MaxProValue(float("inf"), True)
    return MaxProValue(total / n ** 2, False)
