"""Inner loops, each in a numba and a numpy flavour.

The public names at the bottom dispatch on :data:`spinreduce._accel.USE_NUMBA`.
Row-parallel kernels write one partial sum per row and reduce serially, so
results do not depend on the thread count.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit, prange
from ._curvature import psi_upper, psi_upper_np

_E = math.e
_CURV_EPS = 1e-12
# exp(-x) is exactly 0.0 in double precision beyond this, so partial
# exponents that pass it can stop accumulating (weights are non-negative)
_UNDERFLOW = 746.0


# --------------------------------------------------------------------------
# POD diagonal: omega[r, l] = theta[r, l] * sum_k order[k] * e_{k}(theta[r, -l])

@njit(cache=True)
def omega_batch_nb(thetas, order):
    R, p = thetas.shape
    K = order.shape[0]
    out = np.zeros((R, p))
    roll = np.zeros(K)
    for r in range(R):
        for l in range(p):
            roll[:] = 0.0
            roll[0] = 1.0
            used = 0
            for s in range(p):
                if s == l:
                    continue
                used += 1
                t = thetas[r, s]
                top = min(K - 1, used)
                for k in range(top, 0, -1):
                    roll[k] += t * roll[k - 1]
            acc = 0.0
            for k in range(K):
                acc += order[k] * roll[k]
            out[r, l] = thetas[r, l] * acc
    return out


def omega_batch_np(thetas, order):
    thetas = np.asarray(thetas, dtype=float)
    R, p = thetas.shape
    K = order.shape[0]
    roll = np.zeros((R, p, K))
    roll[:, :, 0] = 1.0
    others = ~np.eye(p, dtype=bool)
    for s in range(p):
        if K > 1:
            mult = thetas[:, s, None] * others[s][None, :]
            roll[:, :, 1:] = roll[:, :, 1:] + mult[:, :, None] * roll[:, :, :-1]
    return thetas * (roll @ order)


# --------------------------------------------------------------------------
# Row sums of kernel matrices

@njit(cache=True)
def _mix_value(x, y, W, d2):
    p = x.shape[0]
    for l in range(p):
        d = x[l] - y[l]
        d2[l] = d * d
    inner = 0.0
    for r in range(W.shape[0]):
        e = 0.0
        for l in range(p):
            e += W[r, l] * d2[l]
            if e > _UNDERFLOW:
                break
        if e <= _UNDERFLOW:
            inner += math.exp(-e)
    return inner


@njit(cache=True, parallel=True)
def gauss_mix_rowsums_nb(X, Y, W):
    a, p = X.shape
    b = Y.shape[0]
    R = W.shape[0]
    out = np.zeros(a)
    for i in prange(a):
        d2 = np.empty(p)
        acc = 0.0
        for j in range(b):
            acc += _mix_value(X[i], Y[j], W, d2)
        out[i] = acc / R
    return out


def _row_blocks(a, b, width):
    step = max(1, int(4_000_000 // max(1, b * width)))
    for start in range(0, a, step):
        yield slice(start, min(a, start + step))


def gauss_mix_rowsums_np(X, Y, W):
    R = W.shape[0]
    out = np.empty(X.shape[0])
    for blk in _row_blocks(X.shape[0], Y.shape[0], max(R, X.shape[1])):
        d2 = (X[blk, None, :] - Y[None, :, :]) ** 2
        expo = d2 @ W.T
        out[blk] = np.exp(-expo).sum(axis=(1, 2)) / R
    return out


@njit(cache=True, parallel=True)
def imq_rowsums_nb(X, Y, nu, lam):
    a, p = X.shape
    b = Y.shape[0]
    out = np.zeros(a)
    for i in prange(a):
        acc = 0.0
        for j in range(b):
            s = 0.0
            for l in range(p):
                d = X[i, l] - Y[j, l]
                s += math.log(lam / (d * d + lam))
            acc += math.exp(nu * s)
        out[i] = acc
    return out


def imq_rowsums_np(X, Y, nu, lam):
    out = np.empty(X.shape[0])
    for blk in _row_blocks(X.shape[0], Y.shape[0], X.shape[1]):
        d2 = (X[blk, None, :] - Y[None, :, :]) ** 2
        s = np.log(lam / (d2 + lam)).sum(axis=2)
        out[blk] = np.exp(nu * s).sum(axis=1)
    return out


@njit(cache=True, parallel=True)
def dist_rowsums_nb(X, Y):
    a, p = X.shape
    b = Y.shape[0]
    out = np.zeros(a)
    for i in prange(a):
        acc = 0.0
        for j in range(b):
            s = 0.0
            for l in range(p):
                d = X[i, l] - Y[j, l]
                s += d * d
            acc += math.sqrt(s)
        out[i] = acc
    return out


def dist_rowsums_np(X, Y):
    out = np.empty(X.shape[0])
    for blk in _row_blocks(X.shape[0], Y.shape[0], X.shape[1]):
        d2 = ((X[blk, None, :] - Y[None, :, :]) ** 2).sum(axis=2)
        out[blk] = np.sqrt(d2).sum(axis=1)
    return out


@njit(cache=True, parallel=True)
def gauss_mix_matrix_nb(X, Y, W):
    a, p = X.shape
    b = Y.shape[0]
    R = W.shape[0]
    out = np.zeros((a, b))
    for i in prange(a):
        d2 = np.empty(p)
        for j in range(b):
            out[i, j] = _mix_value(X[i], Y[j], W, d2) / R
    return out


def gauss_mix_matrix_np(X, Y, W):
    R = W.shape[0]
    out = np.empty((X.shape[0], Y.shape[0]))
    for blk in _row_blocks(X.shape[0], Y.shape[0], max(R, X.shape[1])):
        d2 = (X[blk, None, :] - Y[None, :, :]) ** 2
        out[blk] = np.exp(-(d2 @ W.T)).sum(axis=2) / R
    return out


# --------------------------------------------------------------------------
# MM system for one point: A v = b
#
# form 0: tight rank-one curvature psi(a)/a g g'
# form 1: 4/(e a) g g'
# form 2: 4/(e |g|^2) g g'  (not a majorizer once Omega entries grow; kept for comparison)

@njit(cache=True)
def _curv_coef(a, gn2, form, env, high):
    if form == 0:
        return psi_upper(a, env, high) / a
    if form == 1:
        return 4.0 / (_E * a)
    return 4.0 / (_E * gn2)


@njit(cache=True)
def mm_system_nb(xp, Y, others, omegas, n_total, form, env, high):
    p = xp.shape[0]
    Ns = Y.shape[0]
    R = omegas.shape[0]
    A = np.zeros((p, p))
    b = np.zeros(p)
    cy = 2.0 / (Ns * R)
    g = np.zeros(p)
    for m in range(Ns):
        for r in range(R):
            e = 0.0
            for l in range(p):
                d = xp[l] - Y[m, l]
                e += omegas[r, l] * d * d
                if e > _UNDERFLOW:
                    break
            w = math.exp(-e)
            if w == 0.0:
                continue
            for l in range(p):
                c = cy * w * omegas[r, l]
                A[l, l] += c
                b[l] += c * Y[m, l]
    cx = 2.0 / (n_total * R)
    cc = 4.0 / (n_total * R)
    for j in range(others.shape[0]):
        for r in range(R):
            a = 0.0
            gn = 0.0
            for l in range(p):
                z = xp[l] - others[j, l]
                g[l] = omegas[r, l] * z
                a += g[l] * z
                gn += g[l] * g[l]
            w = math.exp(-a)
            for l in range(p):
                b[l] += cx * w * g[l]
            if math.sqrt(gn) < _CURV_EPS or a <= 0.0:
                continue
            scale = cc * _curv_coef(a, gn, form, env, high)
            gx = 0.0
            for l in range(p):
                gx += g[l] * xp[l]
            for l in range(p):
                sg = scale * g[l]
                b[l] += sg * gx
                for k in range(l, p):
                    A[l, k] += sg * g[k]
    for l in range(p):
        for k in range(l + 1, p):
            A[k, l] = A[l, k]
    return A, b


def mm_system_np(xp, Y, others, omegas, n_total, form, env, high):
    Ns = Y.shape[0]
    R = omegas.shape[0]
    dy = xp[None, :] - Y
    wy = np.exp(-(dy * dy) @ omegas.T)  # (Ns, R)
    cy = 2.0 / (Ns * R)
    per_point = wy @ omegas  # (Ns, p): sum_r w * omega_r
    A = np.diag(cy * per_point.sum(axis=0))
    b = cy * (per_point * Y).sum(axis=0)
    if others.shape[0]:
        z = xp[None, :] - others  # (J, p)
        G = z[:, None, :] * omegas[None, :, :]  # (J, R, p)
        a = (G * z[:, None, :]).sum(axis=2)
        gn2 = (G * G).sum(axis=2)
        b = b + (2.0 / (n_total * R)) * (np.exp(-a)[:, :, None] * G).sum(axis=(0, 1))
        ok = (np.sqrt(gn2) >= _CURV_EPS) & (a > 0.0)
        coef = np.zeros_like(a)
        if form == 0:
            coef[ok] = psi_upper_np(a[ok], env, high) / a[ok]
        elif form == 1:
            coef[ok] = 4.0 / (_E * a[ok])
        else:
            coef[ok] = 4.0 / (_E * gn2[ok])
        Gs = G.reshape(-1, G.shape[2])
        sw = (4.0 / (n_total * R)) * coef.reshape(-1)
        C = (Gs * sw[:, None]).T @ Gs
        A = A + C
        b = b + C @ xp
    return A, b


# --------------------------------------------------------------------------
# Energy-distance convex-concave sweep (all points from the previous iterate)

@njit(cache=True, parallel=True)
def energy_sweep_nb(X, Y):
    n, p = X.shape
    Ns = Y.shape[0]
    out = np.empty((n, p))
    ratio = Ns / n
    for i in prange(n):
        q = 0.0
        num = np.zeros(p)
        for m in range(Ns):
            s = 0.0
            for l in range(p):
                d = X[i, l] - Y[m, l]
                s += d * d
            dist = math.sqrt(s)
            if dist < 1e-12:
                continue
            q += 1.0 / dist
            for l in range(p):
                num[l] += Y[m, l] / dist
        for j in range(n):
            if j == i:
                continue
            s = 0.0
            for l in range(p):
                d = X[i, l] - X[j, l]
                s += d * d
            dist = math.sqrt(s)
            if dist < 1e-12:
                continue
            for l in range(p):
                num[l] += ratio * (X[i, l] - X[j, l]) / dist
        if q == 0.0:
            for l in range(p):
                out[i, l] = X[i, l]
        else:
            for l in range(p):
                out[i, l] = num[l] / q
    return out


def energy_sweep_np(X, Y):
    n = X.shape[0]
    dy = np.sqrt(((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=2))
    inv_y = np.where(dy < 1e-12, 0.0, 1.0 / np.maximum(dy, 1e-300))
    q = inv_y.sum(axis=1)
    num = inv_y @ Y
    diff = X[:, None, :] - X[None, :, :]
    dx = np.sqrt((diff ** 2).sum(axis=2))
    inv_x = np.where(dx < 1e-12, 0.0, 1.0 / np.maximum(dx, 1e-300))
    num = num + (Y.shape[0] / n) * (diff * inv_x[:, :, None]).sum(axis=1)
    out = X.copy()
    ok = q > 0
    out[ok] = num[ok] / q[ok, None]
    return out


# --------------------------------------------------------------------------

if USE_NUMBA:
    omega_batch = omega_batch_nb
    gauss_mix_rowsums = gauss_mix_rowsums_nb
    gauss_mix_matrix = gauss_mix_matrix_nb
    imq_rowsums = imq_rowsums_nb
    dist_rowsums = dist_rowsums_nb
    mm_system = mm_system_nb
    energy_sweep = energy_sweep_nb
else:
    omega_batch = omega_batch_np
    gauss_mix_rowsums = gauss_mix_rowsums_np
    gauss_mix_matrix = gauss_mix_matrix_np
    imq_rowsums = imq_rowsums_np
    dist_rowsums = dist_rowsums_np
    mm_system = mm_system_np
    energy_sweep = energy_sweep_np
