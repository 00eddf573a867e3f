"""Majorization-minimization pieces for one point of the design.

For a shift-invariant POD Gaussian ``gamma(z) = exp(-z' Omega z)`` the kernel
is sandwiched between two paraboloids touching it at ``z0``:

* the minorizer is the tangent of ``exp(-q)`` in ``q = z' Omega z`` (convexity);
* the majorizer adds a rank-one curvature ``c (Omega z0)(Omega z0)^T`` to the
  first-order expansion.

Three curvature forms are available. ``"tight"`` (the default) uses the
smallest valid ``c``, from :mod:`spinreduce._curvature`. ``"scaled"`` uses
``c = 4 / (e z0' Omega z0)``, valid for every Omega but up to ~7x stiffer for
nearby points and far stiffer for distant ones. ``"unit-trace"`` uses
``c = 4 / (e ||Omega z0||^2)``; it has trace 4/e regardless of Omega and stops
being an upper bound once Omega's entries exceed roughly 6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _hot
from ._curvature import PSI_ENVELOPE, _HIGH, tight_coefficient
from .weights import omega_rows

_E = math.e
_EPS = 1e-12


class SingularSystemError(np.linalg.LinAlgError):
    """The MM system matrix is not positive definite."""


CURVATURE_FORMS = {"tight": 0, "scaled": 1, "unit-trace": 2}


def curvature(omega, z, form: str = "tight") -> np.ndarray:
    """Rank-one curvature matrix of the majorizing paraboloid at ``z``.

    Zero when ``||Omega z|| < 1e-12`` (coincident points): the direction is
    undefined there and the flat paraboloid still majorizes, since
    ``gamma(0) = 1`` is the kernel's maximum.
    """
    om = np.asarray(getattr(omega, "diag", omega), dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    g = om * z
    a = float(g @ z)
    gn2 = float(g @ g)
    if np.sqrt(gn2) < _EPS or a <= 0.0:
        return np.zeros((z.size, z.size))
    if form == "tight":
        c = tight_coefficient(a)
    elif form == "scaled":
        c = 4.0 / (_E * a)
    elif form == "unit-trace":
        c = 4.0 / (_E * gn2)
    else:
        raise ValueError(f"unknown curvature form {form!r}")
    return c * np.outer(g, g)


def majorizer(omega, gamma_at_zprime: float, z, zprime, form: str = "tight") -> float:
    om = np.asarray(getattr(omega, "diag", omega), dtype=float).ravel()
    zprime = np.asarray(zprime, dtype=float)
    d = np.asarray(z, dtype=float) - zprime
    grad = gamma_at_zprime * (om * zprime)
    return float(gamma_at_zprime - 2.0 * grad @ d + 2.0 * d @ curvature(om, zprime, form) @ d)


def minorizer(omega, gamma_at_zprime: float, z, zprime) -> float:
    om = np.asarray(getattr(omega, "diag", omega), dtype=float).ravel()
    z = np.asarray(z, dtype=float)
    zprime = np.asarray(zprime, dtype=float)
    return float(gamma_at_zprime * (1.0 + zprime @ (om * zprime)) - gamma_at_zprime * (z @ (om * z)))


@dataclass
class MMContext:
    """Everything a single-point MM update needs.

    ``omegas`` holds one Omega diagonal per product-weight draw, shape (R, p);
    ``others`` the remaining design points, shape (n_other, p); ``n_total``
    the design size used in the objective's normalisation.
    """

    omegas: np.ndarray
    data_subsample: np.ndarray
    others: np.ndarray
    n_total: int
    curvature_form: str = "tight"

    def __post_init__(self):
        self.omegas = np.ascontiguousarray(np.atleast_2d(self.omegas), dtype=float)
        self.data_subsample = np.ascontiguousarray(np.atleast_2d(self.data_subsample), dtype=float)
        p = self.omegas.shape[1]
        others = np.asarray(self.others, dtype=float)
        self.others = np.ascontiguousarray(others.reshape(-1, p))
        if self.data_subsample.shape[1] != p:
            raise ValueError("data subsample and weights disagree on p")
        if self.curvature_form not in CURVATURE_FORMS:
            raise ValueError(f"unknown curvature form {self.curvature_form!r}")
        if self.n_total < self.others.shape[0] + 1:
            raise ValueError("n_total must count the updated point and all others")

    @classmethod
    def from_thetas(cls, thetas, order_weights, data_subsample, others, n_total, curvature_form="tight"):
        return cls(omega_rows(thetas, order_weights), data_subsample, others, n_total, curvature_form)

    @property
    def R(self) -> int:
        return self.omegas.shape[0]


def mm_system(ctx: MMContext, x_prime) -> tuple[np.ndarray, np.ndarray]:
    xp = np.ascontiguousarray(x_prime, dtype=float).ravel()
    form = CURVATURE_FORMS[ctx.curvature_form]
    return _hot.mm_system(xp, ctx.data_subsample, ctx.others, ctx.omegas, int(ctx.n_total),
                          form, PSI_ENVELOPE, _HIGH)


def mm_update(ctx: MMContext, x_prime) -> np.ndarray:
    """Closed-form minimizer of the quadratic majorizer ``h_i(. | x_prime)``."""
    A, b = mm_system(ctx, x_prime)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise SingularSystemError(
            f"MM system not positive definite at x'={np.asarray(x_prime).tolist()} "
            f"(diag min {np.diag(A).min():.3g}, {ctx.data_subsample.shape[0]} data rows, R={ctx.R})"
        ) from None
    return np.linalg.solve(L.T, np.linalg.solve(L, b))


def blockwise_objective(ctx: MMContext, x) -> float:
    """The terms of the subsampled objective that depend on the updated point.

    ``(1/(nR)) sum_{j,r} gamma_r(x - x_j) - (1/(N_s R)) sum_{m,r} gamma_r(x - y_m)``
    """
    x = np.asarray(x, dtype=float).ravel()
    R = ctx.R
    val = 0.0
    if ctx.others.shape[0]:
        z = x - ctx.others
        val += np.exp(-(z * z) @ ctx.omegas.T).sum() / (ctx.n_total * R)
    d = x - ctx.data_subsample
    val -= np.exp(-(d * d) @ ctx.omegas.T).sum() / (ctx.data_subsample.shape[0] * R)
    return float(val)


def surrogate(ctx: MMContext, x, x_prime) -> float:
    """The majorizer ``h_i(x | x_prime)`` of :func:`blockwise_objective`."""
    x = np.asarray(x, dtype=float).ravel()
    xp = np.asarray(x_prime, dtype=float).ravel()
    R = ctx.R
    val = 0.0
    for j in range(ctx.others.shape[0]):
        for om in ctx.omegas:
            zp = xp - ctx.others[j]
            gp = math.exp(-float(om @ (zp * zp)))
            val += majorizer(om, gp, x - ctx.others[j], zp, ctx.curvature_form) / (ctx.n_total * R)
    for y in ctx.data_subsample:
        for om in ctx.omegas:
            zp = xp - y
            gp = math.exp(-float(om @ (zp * zp)))
            val -= minorizer(om, gp, x - y, zp) / (ctx.data_subsample.shape[0] * R)
    return val
