"""Compare the compiled and numpy projection kernels.

Usage: python benchmarks/bench_kernels.py [--repeat 5]

For each problem size both backends run on the same channel batch; the
script checks that their outputs agree and prints the best wall time of
each and the speed ratio.
"""

import argparse
import time

import numpy as np

from cfrelay import kernels
from cfrelay.channel import draw_realization
from cfrelay.config import SystemConfig
from cfrelay.model import draw_large_scale
from cfrelay.rng import CHANNEL, stream

SIZES = [  # (M, N, W, realizations)
    (20, 2, 2, 256),
    (50, 3, 5, 256),
    (200, 3, 5, 256),
    (400, 3, 5, 128),
]


def _inputs(M, N, W, R):
    cfg = SystemConfig(num_aps=M, antennas_per_ap=N, num_pairs=W, pilot_symbols=max(10, 2 * W))
    _, ls = draw_large_scale(cfg)
    ch = draw_realization(ls, N, stream(0, CHANNEL, 0), num=R)
    s = np.sqrt(np.random.default_rng(0).uniform(0.5, 1.5, size=(M, W)))
    return ch.h_hat, ch.h_err, ch.g_hat, ch.g_err, s, s[::-1].copy()


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'M':>5} {'N':>3} {'W':>3} {'R':>5} " + " ".join(f"{b + ' [ms]':>14}" for b in backends)
          + ("     ratio" if len(backends) == 2 else ""))
    for M, N, W, R in SIZES:
        x = _inputs(M, N, W, R)
        times, outs = [], []
        for b in backends:
            t, out = _best(lambda b=b: kernels.projections(*x, backend=b), args.repeat)
            times.append(t)
            outs.append(out)
        if len(outs) == 2:
            for a, c in zip(*outs):
                scale = max(np.max(np.abs(c)), 1e-300)
                assert np.max(np.abs(a - c)) <= 1e-10 * scale, "backends disagree"
        line = f"{M:>5} {N:>3} {W:>3} {R:>5} " + " ".join(f"{1e3 * t:>14.2f}" for t in times)
        if len(times) == 2:
            line += f" {times[1] / times[0]:>9.2f}x"
        print(line)


if __name__ == "__main__":
    main()
