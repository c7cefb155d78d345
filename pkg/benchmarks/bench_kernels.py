"""Time the numba and pure-numpy kernels side by side.

    python benchmarks/bench_kernels.py --size 2048 --repeat 5

Each row reports the best wall time of ``--repeat`` runs after one warm-up
call (which absorbs numba compilation).
"""

import argparse
import timeit

import numpy as np

from povmremap import _accel, kernels


def _prefix(rng, n):
    w = rng.integers(1, 1000, n).astype(np.float64)
    x = np.arange(n, dtype=np.float64)
    return np.concatenate(([0.0], np.cumsum(w))), np.concatenate(([0.0], np.cumsum(w * x)))


def cases(size, threads, seed=0):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, (size, size)).astype(np.uint8)
    lut = rng.random(256)
    W, S = _prefix(rng, 256)
    return {
        f"apply_lut {size}x{size} t={threads}": lambda b: kernels.apply_lut(pixels, lut, threads=threads, backend=b),
        "otsu_table n=256 k=8": lambda b: kernels.otsu_table(W, S, 8, backend=b),
    }


def run(size=1024, repeat=5, threads=1):
    backends = [b for b in kernels.BACKENDS if b != "numba" or _accel.HAVE_NUMBA]
    rows = []
    for name, fn in cases(size, threads).items():
        times = {}
        for b in backends:
            fn(b)
            times[b] = min(timeit.repeat(lambda: fn(b), number=1, repeat=repeat))
        rows.append((name, times))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=1024, help="side of the square test image")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args(argv)
    rows = run(args.size, args.repeat, args.threads)
    print(f"{'kernel':<32}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>9}")
    for name, t in rows:
        nb = t.get("numba", float("nan"))
        print(f"{name:<32}{nb * 1e3:>12.3f}{t['numpy'] * 1e3:>12.3f}{t['numpy'] / nb:>9.1f}")


if __name__ == "__main__":
    main()
