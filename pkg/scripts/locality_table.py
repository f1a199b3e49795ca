"""LRU miss table for the pairwise access pattern, plus transfer-cost estimates."""

import argparse

from coloop.cli import locality_rows
from coloop.curves import GridDomain, make_order
from coloop.scheduler import (contiguous_assignment, pairwise_pattern, partition,
                              round_robin_assignment, transfer_cost)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--lines", default="16,64,256,1024")
    ap.add_argument("--nodes", type=int, default=4)
    ap.add_argument("--packet-size", type=int, default=64)
    args = ap.parse_args()

    lines = [int(v) for v in args.lines.split(",")]
    print("order,lines,misses")
    for r in locality_rows(args.size, ["hilbert", "zorder", "rowmajor"], lines):
        print(f"{r['order']},{r['lines']},{r['misses']}")

    domain = GridDomain((args.size, args.size))
    pattern = pairwise_pattern(args.size)
    print("\norder,assignment,model,bytes")
    for kind in ("hilbert", "zorder", "rowmajor"):
        order = make_order(domain, kind)
        pk = partition(order, args.packet_size)
        for name, assign in (("contiguous", contiguous_assignment),
                             ("round-robin", round_robin_assignment)):
            for model in ("replicate", "home"):
                b = transfer_cost(pk, assign(len(pk), args.nodes), order, domain, pattern, 8, model)
                print(f"{kind},{name},{model},{b}")


if __name__ == "__main__":
    main()
