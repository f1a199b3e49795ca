"""Static vs stealing makespan with one slowed worker on a uniform sleep workload."""

import argparse
import statistics
import time

from coloop.curves import GridDomain, make_order
from coloop.scheduler import SchedulePlan, execute


class SleepWorkload:
    def __init__(self, cells, cost):
        self.domain = GridDomain((cells,))
        self.cost = cost

    def run(self, coords):
        time.sleep(len(coords) * self.cost)
        return len(coords)

    def combine(self, a, b):
        return a + b


def median_wall(kernel, order, plan, runs):
    return statistics.median(execute(kernel, order, plan)[1].wall_time for _ in range(runs))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=10 ** 6)
    ap.add_argument("--cost", type=float, default=1e-6, help="seconds of work per cell")
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--factor", type=float, default=10.0)
    ap.add_argument("--packet-size", type=int, default=4096)
    ap.add_argument("--runs", type=int, default=5)
    args = ap.parse_args()

    kernel = SleepWorkload(args.cells, args.cost)
    order = make_order(kernel.domain, "hilbert")
    p, ps = args.workers, args.packet_size
    slow = {p - 1: args.factor}
    base = median_wall(kernel, order, SchedulePlan("stealing", p - 1, ps), args.runs)
    print("config,median_s,ratio_vs_p_minus_1")
    print(f"undelayed p={p - 1},{base:.4f},1.000")
    for mode in ("stealing", "static"):
        t = median_wall(kernel, order, SchedulePlan(mode, p, ps, delays=slow), args.runs)
        print(f"{mode} p={p} one worker x{args.factor:g},{t:.4f},{t / base:.3f}")


if __name__ == "__main__":
    main()
