"""Time the numba kernels against their numpy twins.

Usage: python3 benchmarks/bench_accel.py [--repeat 5] [--threads N]

Both flavours live side by side in ``spinreduce._hot`` so one process can
time them; the ``SPINREDUCE_DISABLE_NUMBA`` flag only picks which one the
package dispatches to. Also checks the two agree before reporting.
"""

import argparse
import time

import numpy as np

from spinreduce import _accel, _hot
from spinreduce._curvature import _HIGH, PSI_ENVELOPE
from spinreduce.weights import GammaPrior, exponential_order_weights, omega_rows, sample_theta


def _cases(rng):
    p = 10
    order = exponential_order_weights(p)
    thetas = sample_theta(GammaPrior(), p, 20, rng)
    W = omega_rows(thetas, order)
    X, Y = rng.normal(size=(50, p)), rng.normal(size=(10_000, p))
    Ys, others = rng.normal(size=(100, p)), rng.normal(size=(49, p))
    xp = rng.normal(size=p)
    big_th = rng.gamma(0.5, 1.0, size=(2000, 20))
    return {
        "omega_batch (2000x20)": ("omega_batch", (big_th, exponential_order_weights(20))),
        "gauss_mix_rowsums (50x10000, R=20)": ("gauss_mix_rowsums", (X, Y, W)),
        "imq_rowsums (50x10000)": ("imq_rowsums", (X, Y, 0.1, 0.01)),
        "dist_rowsums (50x10000)": ("dist_rowsums", (X, Y)),
        "mm_system (ns=100, n=50, R=20)": ("mm_system", (xp, Ys, others, W, 50, 0, PSI_ENVELOPE, _HIGH)),
        "energy_sweep (50x10000)": ("energy_sweep", (X, Y[:2000])),
    }


def _best(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    _accel.set_threads(args.threads)
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for label, (name, fargs) in _cases(rng).items():
        nb, ref = getattr(_hot, name + "_nb"), getattr(_hot, name + "_np")
        nb(*fargs)  # compile outside the timing
        t_np, out_np = _best(ref, fargs, args.repeat)
        t_nb, out_nb = _best(nb, fargs, args.repeat)
        pairs = zip(out_np, out_nb) if isinstance(out_np, tuple) else [(out_np, out_nb)]
        for a, b in pairs:
            np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-300)
        print(f"{label:40s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
