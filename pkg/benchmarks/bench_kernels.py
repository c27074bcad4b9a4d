"""Time the compiled kernels against the numpy fallback on the same inputs.

    python3 benchmarks/bench_kernels.py [--size 1024] [--side 4] [--repeat 3]
"""
import argparse
import timeit

import numpy as np

from supertiles.kernels import backends


def inputs(size: int, n: int, seed: int):
    rng = np.random.default_rng(seed)
    occ = (rng.random((size, size)) < 0.02).astype(np.uint8)
    anchors = backends()["python"].greedy_fill(np.zeros((size, size), np.uint8), n, 0, 0, size, size)
    # jitter every other row of squares so neighbours are not all aligned
    anchors = anchors[(anchors[:, 1] // n) % 3 != 1].astype(np.int32)
    sqmap = np.full((size, size), -1, dtype=np.int32)
    for i, (x, y) in enumerate(anchors):
        sqmap[y:y + n, x:x + n] = i
    tiles = (np.arange(size)[:, None] // 16) * (size // 16 + 1) + np.arange(size)[None, :] // 16
    owner = np.ascontiguousarray(tiles, dtype=np.int64)
    return occ, anchors, sqmap, owner, int(owner.max()) + 1


def cases(size: int, n: int, seed: int):
    occ, anchors, sqmap, owner, n_tiles = inputs(size, n, seed)
    return {
        "greedy_fill": lambda k: k.greedy_fill(occ.copy(), n, 0, 0, size, size),
        "nearest_squares": lambda k: k.nearest_squares(sqmap, anchors, n, 0, 0, size, size),
        "reference_cells": lambda k: k.reference_cells(owner, n_tiles),
    }


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=1024)
    p.add_argument("--side", type=int, default=4)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    impls = backends()
    names = list(impls)
    print(f"window {args.size}x{args.size}, N={args.side}, best of {args.repeat}")
    print(f"{'kernel':<18}" + "".join(f"{n:>12}" for n in names) + ("    speedup" if len(names) > 1 else ""))
    for name, fn in cases(args.size, args.side, args.seed).items():
        results = {b: fn(k) for b, k in impls.items()}
        if len(names) > 1 and not same(results["python"], results["cython"]):
            raise SystemExit(f"{name}: backends disagree")
        times = {b: min(timeit.repeat(lambda k=k: fn(k), number=1, repeat=args.repeat))
                 for b, k in impls.items()}
        row = f"{name:<18}" + "".join(f"{times[b] * 1e3:>10.1f}ms" for b in names)
        if len(names) > 1:
            row += f"   {times['python'] / times['cython']:>7.1f}x"
        print(row)
    if len(names) == 1:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
