"""Product-and-order (POD) weights and the diagonal curvature weights Omega.

For product weights ``theta`` and order weights ``Gamma_k`` the subset weight is
``theta_u = Gamma_|u| * prod_{l in u} theta_l``. The MM machinery only needs the
per-coordinate totals ``Omega_l = sum_{u containing l} theta_u``, which the
recursion in :func:`compute_omega` gets in O(K p) per coordinate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _hot

MAX_ORDER = 18
BRUTEFORCE_MAX_P = 20


def exponential_order_weights(p: int, K: int | None = None) -> np.ndarray:
    """``Gamma_k = exp(-k)`` for k = 1..K, with K = min(p, 18) by default."""
    if K is None:
        K = min(p, MAX_ORDER)
    return np.exp(-np.arange(1, K + 1, dtype=float))


def first_order_weights() -> np.ndarray:
    """Order weights of the anisotropic kernel: only main effects."""
    return np.array([1.0])


def _check_order(order, p):
    order = np.asarray(order, dtype=float).ravel()
    if order.size < 1:
        raise ValueError("need at least one order weight")
    if order.size > p:
        order = order[:p]
    if np.any(order < 0):
        raise ValueError("order weights must be non-negative")
    if np.any(np.diff(order) > 0):
        raise ValueError("order weights must be non-increasing")
    return order


@dataclass(frozen=True)
class PODConfig:
    """Product weights (length p) and order weights (length K <= p).

    Orders above ``K = len(order_weights)`` carry zero weight.
    """

    product_weights: np.ndarray
    order_weights: np.ndarray = None

    def __post_init__(self):
        theta = np.asarray(self.product_weights, dtype=float).ravel()
        if theta.size < 1:
            raise ValueError("need at least one product weight")
        if np.any(theta < 0) or not np.all(np.isfinite(theta)):
            raise ValueError("product weights must be finite and non-negative")
        order = exponential_order_weights(theta.size) if self.order_weights is None else self.order_weights
        object.__setattr__(self, "product_weights", theta)
        object.__setattr__(self, "order_weights", _check_order(order, theta.size))

    @property
    def p(self) -> int:
        return self.product_weights.size

    @property
    def truncation_order(self) -> int:
        return self.order_weights.size


@dataclass(frozen=True)
class GammaPrior:
    """i.i.d. Gamma(shape, rate) prior on each product weight (mean shape / rate)."""

    shape: float = 0.1
    rate: float = 0.01

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("Gamma shape and rate must be strictly positive")

    @property
    def mean(self) -> float:
        return self.shape / self.rate


@dataclass(frozen=True)
class OmegaDiag:
    diag: np.ndarray


def compute_omega(cfg: PODConfig) -> OmegaDiag:
    theta = cfg.product_weights[None, :]
    return OmegaDiag(_hot.omega_batch(theta, cfg.order_weights)[0])


def omega_rows(thetas, order_weights) -> np.ndarray:
    """Omega for a batch of product-weight vectors, shape (R, p)."""
    thetas = np.ascontiguousarray(np.atleast_2d(thetas), dtype=float)
    order = _check_order(order_weights, thetas.shape[1])
    return _hot.omega_batch(thetas, np.ascontiguousarray(order))


def omega_bruteforce(cfg: PODConfig) -> OmegaDiag:
    """Direct summation over every subset of size <= K. Exponential in p; a test oracle."""
    p = cfg.p
    if p > BRUTEFORCE_MAX_P:
        raise ValueError(f"brute force limited to p <= {BRUTEFORCE_MAX_P}, got {p}")
    theta = cfg.product_weights
    order = cfg.order_weights
    out = np.zeros(p)
    for size in range(1, cfg.truncation_order + 1):
        for u in itertools.combinations(range(p), size):
            w = order[size - 1] * np.prod(theta[list(u)])
            for l in u:
                out[l] += w
    return OmegaDiag(out)


def sample_theta(prior: GammaPrior, p: int, count: int, seed=None) -> np.ndarray:
    """Draw ``count`` product-weight vectors, shape (count, p).

    numpy's Gamma generator handles shape < 1 (Marsaglia-Tsang with the
    U^(1/shape) boost), which the default shape 0.1 requires.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.gamma(prior.shape, 1.0 / prior.rate, size=(int(count), int(p)))
