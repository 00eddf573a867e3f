"""Kernels: POD/anisotropic/standard Gaussian, SpIn (closed form and sampled), energy.

Every Gaussian-family kernel is a mixture ``(1/R) sum_r exp(-sum_l W[r,l] (x_l-y_l)^2)``
for some non-negative weight matrix ``W``; :func:`weight_rows` returns it. For
POD weights the exponent ``sum_u theta_u ||z_u||^2`` equals ``sum_l Omega_l z_l^2``
(swap the order of summation), so ``W`` is just the Omega diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _hot
from .weights import GammaPrior, PODConfig, compute_omega, exponential_order_weights, omega_rows, sample_theta

DEFAULT_NU = 0.1
DEFAULT_LAMBDA = 0.01


@dataclass(frozen=True)
class PODGaussian:
    cfg: PODConfig


@dataclass(frozen=True)
class AnisoGaussian:
    theta: tuple

    def __post_init__(self):
        t = tuple(float(v) for v in np.ravel(self.theta))
        if any(v < 0 for v in t):
            raise ValueError("anisotropic weights must be non-negative")
        object.__setattr__(self, "theta", t)


@dataclass(frozen=True)
class StdGaussian:
    pass


@dataclass(frozen=True)
class SpinClosed:
    """Gamma-averaged anisotropic kernel, ``prod_l (lam / ((x_l - y_l)^2 + lam))^nu``."""

    nu: float = DEFAULT_NU
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if not (self.nu > 0 and self.lam > 0):
            raise ValueError("nu and lambda must be strictly positive")


@dataclass(frozen=True)
class SpinSampled:
    """Monte Carlo SpIn kernel: R product-weight draws from ``prior``, frozen by ``seed``.

    ``order_weights=None`` gives the anisotropic (main effects only) kernel;
    pass e.g. ``exponential_order_weights(p)`` for the full POD form.
    """

    prior: GammaPrior = field(default_factory=GammaPrior)
    R: int = 20
    seed: int = 0
    order_weights: tuple | None = None

    def __post_init__(self):
        if int(self.R) < 1:
            raise ValueError("R must be >= 1")
        if self.order_weights is not None:
            object.__setattr__(self, "order_weights", tuple(float(v) for v in np.ravel(self.order_weights)))


@dataclass(frozen=True)
class Energy:
    """Distance kernel ``-||x - y||_2``; its discrepancy is the energy distance."""


KernelSpec = PODGaussian | AnisoGaussian | StdGaussian | SpinClosed | SpinSampled | Energy

GAUSSIAN_FAMILY = (PODGaussian, AnisoGaussian, StdGaussian, SpinSampled)


@lru_cache(maxsize=64)
def _sampled_weights(shape, rate, R, seed, order, p):
    thetas = sample_theta(GammaPrior(shape, rate), p, R, seed)
    if order is None:
        return thetas
    return omega_rows(thetas, np.asarray(order))


def weight_rows(spec, p: int) -> np.ndarray:
    """Coordinate weight matrix (R, p) of a Gaussian-family kernel."""
    if isinstance(spec, PODGaussian):
        if spec.cfg.p != p:
            raise ValueError(f"kernel built for p={spec.cfg.p}, got p={p}")
        return compute_omega(spec.cfg).diag[None, :]
    if isinstance(spec, AnisoGaussian):
        if len(spec.theta) != p:
            raise ValueError(f"kernel built for p={len(spec.theta)}, got p={p}")
        return np.asarray(spec.theta)[None, :]
    if isinstance(spec, StdGaussian):
        return np.ones((1, p))
    if isinstance(spec, SpinSampled):
        w = _sampled_weights(spec.prior.shape, spec.prior.rate, int(spec.R), spec.seed, spec.order_weights, p)
        return w
    raise TypeError(f"{type(spec).__name__} is not a Gaussian-family kernel")


def evaluate(spec, x, y) -> float:
    """Kernel value gamma(x, y)."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError("x and y must have the same dimension")
    d2 = (x - y) ** 2
    if isinstance(spec, Energy):
        return -float(np.sqrt(d2.sum()))
    if isinstance(spec, SpinClosed):
        return float(np.exp(spec.nu * np.log(spec.lam / (d2 + spec.lam)).sum()))
    W = weight_rows(spec, x.size)
    return float(np.exp(-(W @ d2)).mean())


def eval_pod_shiftinvariant(cfg: PODConfig, z) -> float:
    """POD Gaussian kernel as a function of the difference ``z = x - y``."""
    z = np.asarray(z, dtype=float).ravel()
    return float(np.exp(-(compute_omega(cfg).diag @ (z * z))))


def spin_sampled_eval(prior: GammaPrior, R: int, seed, x, y, order_weights=None) -> float:
    """Average of the Gaussian kernel over R product-weight draws.

    An unbiased estimate of the SpIn kernel under ``prior``.
    """
    x = np.asarray(x, dtype=float).ravel()
    thetas = sample_theta(prior, x.size, R, seed)
    W = thetas if order_weights is None else omega_rows(thetas, order_weights)
    d2 = (x - np.asarray(y, dtype=float).ravel()) ** 2
    return float(np.exp(-(W @ d2)).mean())


def rowsums(spec, X, Y) -> np.ndarray:
    """``out[i] = sum_j gamma(X[i], Y[j])``."""
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    if X.shape[1] != Y.shape[1]:
        raise ValueError("dimension mismatch")
    if isinstance(spec, Energy):
        return -_hot.dist_rowsums(X, Y)
    if isinstance(spec, SpinClosed):
        return _hot.imq_rowsums(X, Y, float(spec.nu), float(spec.lam))
    W = np.ascontiguousarray(weight_rows(spec, X.shape[1]))
    return _hot.gauss_mix_rowsums(X, Y, W)


def default_psp_kernel(p: int, prior: GammaPrior | None = None, R: int = 20, seed: int = 0, order_weights=None):
    """Sampled SpIn kernel with exp(-k) order decay, the PSP default."""
    prior = prior or GammaPrior(DEFAULT_NU, DEFAULT_LAMBDA)
    order = exponential_order_weights(p) if order_weights is None else order_weights
    return SpinSampled(prior, R, seed, tuple(order))


__all__ = [
    "AnisoGaussian", "Energy", "KernelSpec", "PODGaussian", "SpinClosed", "SpinSampled", "StdGaussian",
    "evaluate", "eval_pod_shiftinvariant", "rowsums", "spin_sampled_eval", "weight_rows",
    "default_psp_kernel",
]
