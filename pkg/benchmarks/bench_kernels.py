"""Compare the compiled and numpy kernel backends on the hot paths.

    python benchmarks/bench_kernels.py [--repeat 3]

Each case runs a fixed batch of trials per backend and reports the best
wall time and the speed-up.  Outputs of the two backends are also checked
for equality, since they are meant to be bit-identical.
"""
import argparse
import time

import numpy as np

from rumorperc import kernels
from rumorperc.graph_core import generate_complete, generate_hypercube, generate_random_regular
from rumorperc.protocols import default_round_cap
from rumorperc.rng import PERCOLATION, PUSH, PWR, RngStream, bernoulli_threshold


def _keys(purpose, count, seed=1):
    return np.array([RngStream(seed, i).key(purpose) for i in range(count)], dtype=np.uint64)


def cases():
    k512 = generate_complete(512)
    q12 = generate_hypercube(12)
    reg = generate_random_regular(20_000, 8, 3)
    k2048 = generate_complete(2048)
    eu, ev = k2048.edges
    thr = bernoulli_threshold(16 / 2047)
    for g, trials in ((k512, 2000), (q12, 200), (reg, 100)):
        cap = default_round_cap(g.n)
        yield (f"push  {g.name} x{trials}",
               lambda be, g=g, k=_keys(PUSH, trials), cap=cap: be.push_completion_batch(g.indptr, g.indices, 0, k, cap))
        yield (f"pwr   {g.name} x{trials}",
               lambda be, g=g, k=_keys(PWR, trials), cap=cap: be.pwr_completion_batch(g.indptr, g.indices, 0, k, cap))
    pk, rk = _keys(PERCOLATION, 20), _keys(PUSH, 20)
    yield ("perc+push complete:2048 p=16/2047 x20",
           lambda be: be.percolated_completion_batch(k2048.n, eu, ev, pk, thr, rk, 0,
                                                     default_round_cap(k2048.n), 0))


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = kernels.available_backends()
    if "cython" not in names:
        print("compiled kernels are not built; only the numpy backend is available")
    backends = {n: kernels.get_backend(n) for n in names}
    print(f"{'case':<42}" + "".join(f"{n:>12}" for n in names) + ("   speed-up  same" if len(names) > 1 else ""))
    for label, fn in cases():
        times, outs = {}, {}
        for n, be in backends.items():
            times[n], outs[n] = best_time(lambda: fn(be), args.repeat)
        row = f"{label:<42}" + "".join(f"{times[n] * 1e3:>10.1f}ms" for n in names)
        if len(names) > 1:
            same = np.array_equal(outs["cython"], outs["python"])
            row += f"   {times['python'] / times['cython']:>7.1f}x  {same}"
        print(row, flush=True)


if __name__ == "__main__":
    main()
