"""Time the phase-space update with the numba and numpy kernels.

    python3 benchmarks/bench_kernels.py [--sizes 128x64 512x96] [--repeat 5]

Both kernels get the same random field and fluid velocity; the script also
reports the largest difference between their outputs.
"""
import argparse
import time

import numpy as np

from bvlab import _accel, kernels


def bench(fn, args, repeat):
    fn(*args)  # warm-up, includes numba compilation
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    p = argparse.ArgumentParser()
    p.add_argument("--sizes", nargs="+", default=["160x48", "640x48", "1280x96"])
    p.add_argument("--repeat", type=int, default=5)
    a = p.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"backend: {_accel.backend()}")
    print(f"{'nx x nv':>10} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'max diff':>10}")
    for s in a.sizes:
        nx, nv = (int(k) for k in s.split("x"))
        f = rng.random((nx, nv))
        u = 0.5 * np.sin(np.linspace(-3, 3, nx))
        args = (f, u, 0.0, 0.0, -4.0, 8.0 / nx, -3.0, 6.0 / nv, 0.01)
        t_np = bench(kernels.vlasov_update_numpy, args, a.repeat)
        if _accel.HAVE_NUMBA:
            t_nb = bench(kernels.vlasov_update_numba, args, a.repeat)
            diff = np.max(np.abs(kernels.vlasov_update_numba(*args) - kernels.vlasov_update_numpy(*args)))
            print(f"{s:>10} {1e3 * t_np:10.2f} {1e3 * t_nb:10.2f} {t_np / t_nb:8.1f} {diff:10.1e}")
        else:
            print(f"{s:>10} {1e3 * t_np:10.2f} {'n/a':>10} {'n/a':>8} {'n/a':>10}")


if __name__ == "__main__":
    main()
