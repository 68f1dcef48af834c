"""Timing comparison of the two alignment kernels.

Runs identical global-alignment workloads through the compiled backend
and the pure-Python fallback, checks that they agree pair by pair, and
prints per-length timings plus the speedup.

    python3 benchmarks/bench_alignment.py --pairs 200 --lengths 40,80,160
"""

import argparse
import time

import numpy as np

from enzood import _alignment_py
from enzood.augment import AMINO_ACIDS

try:
    from enzood import _alignment_cy
except ImportError:
    _alignment_cy = None


def random_sequences(rng, count, length):
    return [
        "".join(AMINO_ACIDS[int(i)] for i in rng.integers(0, 20, size=length))
        for _ in range(count)
    ]


def time_backend(backend, pairs):
    start = time.perf_counter()
    results = [backend.align_stats(a, b) for a, b in pairs]
    return time.perf_counter() - start, results


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="compare the compiled and pure-Python alignment kernels"
    )
    parser.add_argument("--pairs", type=int, default=200, help="alignments per length")
    parser.add_argument(
        "--lengths", default="40,80,160", help="comma-separated sequence lengths"
    )
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if _alignment_cy is None:
        parser.error("compiled backend is not built; install the package first")

    rng = np.random.default_rng(args.seed)
    lengths = [int(piece) for piece in args.lengths.split(",")]
    print(f"{'length':>6} {'pairs':>6} {'python':>10} {'cython':>10} {'speedup':>8}")
    for length in lengths:
        seqs = random_sequences(rng, 2 * args.pairs, length)
        pairs = [
            (a.encode("ascii"), b.encode("ascii"))
            for a, b in zip(seqs[::2], seqs[1::2])
        ]
        t_py, r_py = time_backend(_alignment_py, pairs)
        t_cy, r_cy = time_backend(_alignment_cy, pairs)
        if r_py != r_cy:
            raise SystemExit(f"backends disagree at length {length}; aborting")
        print(
            f"{length:>6} {len(pairs):>6} {t_py:>9.3f}s {t_cy:>9.3f}s "
            f"{t_py / t_cy:>7.1f}x"
        )


if __name__ == "__main__":
    main()
