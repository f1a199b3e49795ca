"""Join speedup sweep: median wall time per worker count, relative to p = 1.

    python scripts/bench_speedup.py --n 200000 --d 4 --epsilon 0.05 --workers 1,2,4,8
"""

import argparse
import os
import statistics
import time

from coloop.io import generate, join_digest
from coloop.kernels import EngineConfig, JoinParams, epsilon_self_join


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--epsilon", type=float, default=0.05)
    ap.add_argument("--workers", default="1,2,4,8")
    ap.add_argument("--order", default="hilbert")
    ap.add_argument("--mode", default="stealing")
    ap.add_argument("--block-size", type=int, default=256)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    pts = generate("uniform", args.n, args.d, args.seed)
    params = JoinParams(args.epsilon, block_size=args.block_size)
    print(f"# {os.cpu_count()} cores visible, n={args.n} d={args.d} eps={args.epsilon}")
    print("workers,median_s,speedup,efficiency,steals,pairs,digest")
    base = None
    for p in [int(v) for v in args.workers.split(",")]:
        eng = EngineConfig(args.order, p, args.mode)
        epsilon_self_join(pts, params, eng)
        times = []
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            res = epsilon_self_join(pts, params, eng)
            times.append(time.perf_counter() - t0)
        t = statistics.median(times)
        base = base or t
        print(f"{p},{t:.4f},{base / t:.3f},{base / t / p:.3f},{res.report.steals},"
              f"{len(res)},{join_digest(res.pairs, res.distances)}")


if __name__ == "__main__":
    main()
