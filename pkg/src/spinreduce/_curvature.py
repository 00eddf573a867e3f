"""Optimal rank-one curvature for majorizing exp(-z' Omega z).

Write ``a = z0' Omega z0`` and ``g = Omega z0``. Along any step ``d`` with
``s = g' d`` the kernel is at most ``exp(-a) exp(-2 s - s^2 / a)`` (the
minimum of ``d' Omega d`` given ``s``), so ``c g g'`` majorizes exactly when

    exp(-a) * (exp(-2 s - s^2/a) - 1 + 2 s) <= 2 c s^2   for all s.

With ``s = a t`` the smallest such ``c`` is ``psi(a) / a`` where

    psi(a) = sup_t [exp(-a (1+t)^2) - exp(-a) (1 - 2 a t)] / (2 a t^2).

``psi`` is tabulated on a log grid; lookups return the larger endpoint of the
grid cell inflated by ``SAFETY`` so the tabulated value is an upper bound.
Below the grid ``psi(a) <= a / 2``; above it ``a * psi(a)`` decreases to 1/2.
"""

import math
from pathlib import Path

import numpy as np

from ._accel import njit

A_MIN = 1e-6
A_MAX = 1e6
LOG_STEP = math.log(1.005)
SAFETY = 1.01
_TABLE_FILE = Path(__file__).with_name("psi_table.npy")


def _psi_at(a, t):
    return (np.exp(-a * (1 + t) ** 2) - np.exp(-a) * (1 - 2 * a * t)) / (2 * a * t * t)


def build_psi_table():
    """Raw psi on the grid, by dense search plus bounded refinement. Takes ~2 s."""
    from scipy.optimize import minimize_scalar

    grid = np.exp(np.arange(math.log(A_MIN), math.log(A_MAX) + LOG_STEP / 2, LOG_STEP))
    out = np.empty_like(grid)
    for k, a in enumerate(grid):
        hi = 10 + 20 / math.sqrt(a) + 10 / a
        half = np.geomspace(1e-4, hi, 4000)
        t = np.concatenate([-half[::-1], half])
        v = _psi_at(a, t)
        i = int(v.argmax())
        lo_, hi_ = t[max(i - 1, 0)], t[min(i + 1, t.size - 1)]
        r = minimize_scalar(lambda s: -_psi_at(a, s), bounds=(lo_, hi_), method="bounded",
                            options={"xatol": 1e-12})
        out[k] = max(v[i], -r.fun)
    return grid, out


def _load():
    if _TABLE_FILE.exists():
        raw = np.load(_TABLE_FILE)
    else:  # pragma: no cover
        raw = build_psi_table()[1]
    env = np.maximum(raw[:-1], raw[1:]) * SAFETY
    return np.ascontiguousarray(env)


PSI_ENVELOPE = _load()
_HIGH = A_MAX * PSI_ENVELOPE[-1]


@njit(cache=True)
def psi_upper(a, env, high):
    if a <= A_MIN:
        return 0.5 * a
    if a >= A_MAX:
        return high / a
    k = int((math.log(a) - math.log(A_MIN)) / LOG_STEP)
    if k >= env.shape[0]:
        k = env.shape[0] - 1
    return env[k]


def psi_upper_np(a, env, high):
    a = np.asarray(a, dtype=float)
    k = np.clip(((np.log(np.maximum(a, A_MIN)) - math.log(A_MIN)) / LOG_STEP).astype(np.int64), 0, env.shape[0] - 1)
    return np.where(a <= A_MIN, 0.5 * a, np.where(a >= A_MAX, high / np.maximum(a, A_MAX), env[k]))


def tight_coefficient(a: float) -> float:
    """Smallest valid ``c`` (up to table safety) for curvature ``c g g'``."""
    return psi_upper(float(a), PSI_ENVELOPE, _HIGH) / a
