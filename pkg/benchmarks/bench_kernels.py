"""Compare the compiled and pure-Python weight kernels.

    python3 benchmarks/bench_kernels.py [--steps 50000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from ctqec import _kernels

W0 = np.array([1.0, 0.0, 0.0, 0.0])


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def run(steps, repeat):
    backends = {"python": _kernels.python_backend}
    if _kernels.compiled_backend is not None:
        backends["cython"] = _kernels.compiled_backend
    cases = {
        "rk4 constant": lambda b: b.rk4_weights(W0, 1.0, 100.0, _kernels.CONSTANT, 1e-4, steps, 100),
        "rk4 optimal": lambda b: b.rk4_weights(W0, 1.0, 100.0, _kernels.OPTIMAL, 1e-4, steps, 100),
        "discrete map": lambda b: b.discrete_weight_map(W0, 1.0, 100.0, _kernels.OPTIMAL, 1e-4, steps),
    }
    print(f"{'case':<14}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, case in cases.items():
        t = {name: _best(lambda: case(b), repeat) for name, b in backends.items()}
        ref = case(backends["python"])[0]
        for name, b in backends.items():
            assert np.allclose(case(b)[0], ref, rtol=0, atol=1e-12), f"{name} disagrees on {label}"
        speed = t["python"] / t["cython"] if "cython" in t else float("nan")
        print(f"{label:<14}" + "".join(f"{t[n] * 1e3:>10.2f}ms" for n in backends) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=50_000)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    run(a.steps, a.repeat)
