"""Command-line harness: ``coloop {gen,join,kmeans,matmul,bench,locality,depcheck}``.

Exit codes: 0 success, 1 runtime failure, 2 invalid usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .curves import GridDomain, make_order
from .io import (DatasetError, RunReport, digest, generate, join_digest, read_points,
                 write_matrix, write_pairs_csv, write_points)
from .kernels import (EngineConfig, JoinParams, brute_force_join, epsilon_self_join, kmeans,
                      lloyd_reference, matmul_with_report, naive_matmul)
from .loops import (AffineMap, BudgetError, FLOAT_SUM, SUM, LoopNest, dependence_check, read,
                    reduce, write)
from .scheduler import CacheModel, locality_score, pairwise_pattern

ORDERS = ("hilbert", "zorder", "rowmajor", "composite")


class UsageError(Exception):
    """Invalid configuration; maps to exit code 2."""


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------------------
# argument groups


def _add_data(p):
    p.add_argument("--input", help="dataset file (text or .bin)")
    p.add_argument("--kind", default="uniform", choices=("uniform", "gaussian-blobs"),
                   help="generator used when --input is absent")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--centers", type=int, default=2)


def _add_engine(p):
    p.add_argument("--order", default="hilbert", choices=ORDERS)
    p.add_argument("--monotone-dims", type=_int_list, default=[])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--packet-size", type=int, default=256)
    p.add_argument("--mode", default="stealing", choices=("static", "stealing"))


def _add_run(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle", action="store_true", help="compare with the brute-force oracle")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--output", help="result file")
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--report", help="write the RunReport JSON here as well as stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coloop", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded synthetic dataset")
    g.add_argument("--kind", default="uniform", choices=("uniform", "gaussian-blobs"))
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--centers", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", required=True)
    g.add_argument("--format", choices=("csv", "bin"))

    j = sub.add_parser("join", help="epsilon self-join")
    _add_data(j), _add_engine(j), _add_run(j)
    j.add_argument("--epsilon", type=float, required=True)
    j.add_argument("--block-size", type=int, default=256)
    j.add_argument("--dim-permutation", default=None,
                   help="'auto' or comma-separated dimension order")

    k = sub.add_parser("kmeans", help="Lloyd k-means")
    _add_data(k), _add_engine(k), _add_run(k)
    k.add_argument("--k", type=int, required=True)
    k.add_argument("--iters", type=int, default=20)

    m = sub.add_parser("matmul", help="blocked matrix product of seeded random matrices")
    _add_engine(m), _add_run(m)
    m.add_argument("--size", type=_int_list, default=[128, 128, 128], help="M,K,N")
    m.add_argument("--block-size", type=int, default=32)

    b = sub.add_parser("bench", help="parameter sweep, one CSV row per combination")
    b.add_argument("--kernel", default="join", choices=("join", "kmeans", "matmul"))
    _add_data(b)
    b.add_argument("--orders", type=_str_list, default=["hilbert"])
    b.add_argument("--workers", type=_int_list, default=[1])
    b.add_argument("--packet-sizes", type=_int_list, default=[256])
    b.add_argument("--mode", default="stealing", choices=("static", "stealing"))
    b.add_argument("--monotone-dims", type=_int_list, default=[])
    b.add_argument("--epsilon", type=float, default=0.05)
    b.add_argument("--k", type=int, default=8)
    b.add_argument("--iters", type=int, default=10)
    b.add_argument("--size", type=_int_list, default=[128, 128, 128])
    b.add_argument("--block-size", type=int, default=None)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--warmup", type=int, default=1)
    b.add_argument("--output")

    lo = sub.add_parser("locality", help="LRU miss counts per order and cache size")
    lo.add_argument("--size", type=int, default=64, help="side of the square pairwise domain")
    lo.add_argument("--orders", type=_str_list, default=["hilbert", "zorder", "rowmajor"])
    lo.add_argument("--lines", type=_int_list, default=[64, 256, 1024])
    lo.add_argument("--line-size", type=int, default=1)
    lo.add_argument("--shared", action="store_true", help="rows and columns share one array")
    lo.add_argument("--output")
    lo.add_argument("--format", default="csv", choices=("csv", "json"))

    dc = sub.add_parser("depcheck", help="dependence report of a built-in loop nest")
    dc.add_argument("--nest", default="prefix-sum", choices=sorted(NESTS))
    dc.add_argument("--size", type=_int_list, default=[])
    dc.add_argument("--output")
    return ap


# ---------------------------------------------------------------------------
# helpers


def _engine(args, **overrides) -> EngineConfig:
    kw = dict(order=args.order, workers=args.workers, mode=args.mode,
              packet_size=args.packet_size, seed=args.seed,
              monotone_dims=tuple(args.monotone_dims))
    kw.update(overrides)
    if kw["workers"] < 1 or kw["packet_size"] < 1:
        raise UsageError("--workers and --packet-size must be >= 1")
    if kw["order"] == "composite" and not kw["monotone_dims"]:
        raise UsageError("--order composite needs --monotone-dims")
    return EngineConfig(**kw)


def _dataset(args):
    if args.input:
        if not Path(args.input).is_file():
            raise UsageError(f"dataset {args.input} not found")
        try:
            return read_points(args.input), {"input": args.input}
        except (DatasetError, ValueError) as exc:
            raise UsageError(f"cannot read {args.input}: {exc}")
    if args.n < 1 or args.d < 1:
        raise UsageError("--n and --d must be >= 1")
    spec = {"kind": args.kind, "n": args.n, "d": args.d, "seed": args.seed}
    if args.kind == "gaussian-blobs":
        spec["centers"] = args.centers
    return generate(args.kind, args.n, args.d, args.seed, args.centers), spec


def _timed(fn, repeats, warmup):
    if repeats < 1 or warmup < 0:
        raise UsageError("--repeats must be >= 1 and --warmup >= 0")
    for _ in range(warmup):
        fn()
    times, out = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, statistics.median(times)


def _check_output(path):
    if path and not Path(path).resolve().parent.is_dir():
        raise UsageError(f"output directory for {path} does not exist")


def _emit(report: RunReport, args):
    text = report.to_json()
    if getattr(args, "report", None):
        Path(args.report).write_text(text)
    print(text)


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func",)}


# ---------------------------------------------------------------------------
# kernel runners shared by the single commands and bench


def _run_join(data, args, engine):
    perm = args.dim_permutation if hasattr(args, "dim_permutation") else None
    if perm not in (None, "auto"):
        perm = _int_list(perm)
    block = getattr(args, "block_size", None) or 256
    params = JoinParams(args.epsilon, dim_permutation=perm, block_size=block)
    res = epsilon_self_join(data, params, engine)
    return res, res.report, join_digest(res.pairs, res.distances)


def _run_kmeans(data, args, engine):
    model = kmeans(data, args.k, args.seed, args.iters, engine)
    merged = _merge_reports(model.reports)
    return model, merged, digest(model.assignment, model.centroids)


def _matrices(args):
    if len(args.size) != 3 or min(args.size) < 1:
        raise UsageError("--size takes M,K,N positive integers")
    m, k, n = args.size
    rng = np.random.default_rng(args.seed)
    return rng.standard_normal((m, k)), rng.standard_normal((k, n))


def _run_matmul(ab, args, engine):
    a, b = ab
    block = getattr(args, "block_size", None) or 32
    c, rep = matmul_with_report(a, b, block, engine=engine)
    return c, rep.to_dict(), digest(c)


def _merge_reports(reports):
    if not reports:
        return {}
    first = reports[0].to_dict()
    out = dict(first)
    out["passes"] = len(reports)
    out["packets"] = sum(r.packets for r in reports)
    out["steals"] = sum(r.steals for r in reports)
    out["wall_time"] = sum(r.wall_time for r in reports)
    out["packets_per_worker"] = np.sum([r.packets_per_worker for r in reports], axis=0).tolist()
    out["busy_time"] = np.sum([r.busy_time for r in reports], axis=0).tolist()
    out["phases"] = sum(r.phases for r in reports)
    return out


def _as_dict(rep):
    return rep if isinstance(rep, dict) else rep.to_dict()


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args):
    _check_output(args.output)
    try:
        data = generate(args.kind, args.n, args.d, args.seed, args.centers)
    except DatasetError as exc:
        raise UsageError(str(exc))
    write_points(args.output, data, args.format)
    print(json.dumps({"output": args.output, "n": args.n, "d": args.d}))
    return 0


def cmd_join(args):
    _check_output(args.output)
    if args.epsilon < 0 or not np.isfinite(args.epsilon):
        raise UsageError("--epsilon must be finite and >= 0")
    engine = _engine(args)
    data, source = _dataset(args)
    (res, rep, dig), wall = _timed(lambda: _run_join(data, args, engine), args.repeats, args.warmup)
    extra = {"pairs": len(res), "permutation": list(res.permutation), "source": source}
    if args.oracle:
        pairs, dist = brute_force_join(data, args.epsilon)
        extra["oracle_match"] = bool(np.array_equal(pairs, res.pairs))
    if args.output:
        if args.format == "json":
            Path(args.output).write_text(json.dumps(
                {"pairs": res.pairs.tolist(), "distances": res.distances.tolist()}))
        else:
            write_pairs_csv(args.output, res.pairs, res.distances)
    _emit(RunReport("join", _config(args), wall, _as_dict(rep or {}), dig, extra=extra), args)
    return 0 if extra.get("oracle_match", True) else 1


def cmd_kmeans(args):
    _check_output(args.output)
    engine = _engine(args)
    data, source = _dataset(args)
    if not 1 <= args.k <= len(data):
        raise UsageError(f"--k must be in [1, n={len(data)}]")
    if args.iters < 1:
        raise UsageError("--iters must be >= 1")
    (model, rep, dig), wall = _timed(lambda: _run_kmeans(data, args, engine),
                                      args.repeats, args.warmup)
    extra = {"inertia": model.inertia, "iterations": model.n_iter, "converged": model.converged,
             "inertia_history": model.inertia_history, "source": source}
    if args.oracle:
        ref = lloyd_reference(data, args.k, args.seed, args.iters)
        extra["oracle_match"] = bool(np.array_equal(ref.assignment, model.assignment)
                                     and np.allclose(ref.centroids, model.centroids,
                                                     rtol=0, atol=1e-9))
    if args.output:
        payload = {"k": model.k, "centroids": model.centroids.tolist(),
                   "assignment": model.assignment.tolist(), "inertia": model.inertia}
        if args.format == "json":
            Path(args.output).write_text(json.dumps(payload))
        else:
            with open(args.output, "w") as fh:
                fh.write("id,label\n")
                for i, lab in enumerate(model.assignment.tolist()):
                    fh.write(f"{i},{lab}\n")
    _emit(RunReport("kmeans", _config(args), wall, rep, dig, extra=extra), args)
    return 0 if extra.get("oracle_match", True) else 1


def cmd_matmul(args):
    _check_output(args.output)
    engine = _engine(args)
    if args.block_size < 1:
        raise UsageError("--block-size must be >= 1")
    ab = _matrices(args)
    (c, rep, dig), wall = _timed(lambda: _run_matmul(ab, args, engine), args.repeats, args.warmup)
    extra = {"shape": list(c.shape)}
    if args.oracle:
        a, b = ab
        ref = naive_matmul(a, b)
        rel = float((np.abs(c - ref) / np.maximum(np.abs(a) @ np.abs(b), 1e-300)).max())
        extra["max_relative_error"] = rel
        extra["oracle_match"] = rel <= 1e-10
    if args.output:
        write_matrix(args.output, c, args.format)
    _emit(RunReport("matmul", _config(args), wall, rep, dig, extra=extra), args)
    return 0 if extra.get("oracle_match", True) else 1


BENCH_FIELDS = ["kernel", "order", "workers", "packet_size", "mode", "wall_time", "speedup",
                "steals", "digest"]


def cmd_bench(args):
    if not (args.orders and args.workers and args.packet_sizes):
        raise UsageError("sweep lists must be non-empty")
    if any(o not in ORDERS for o in args.orders):
        raise UsageError(f"orders must be among {ORDERS}")
    _check_output(args.output)
    if args.kernel == "matmul":
        payload, runner = _matrices(args), _run_matmul
    else:
        payload, _ = _dataset(args)
        runner = _run_join if args.kernel == "join" else _run_kmeans
    rows = []
    for order in args.orders:
        for ps in args.packet_sizes:
            base = None
            for p in sorted(set(args.workers) | {1}):
                ns = argparse.Namespace(**{**vars(args), "order": order, "workers": p,
                                           "packet_size": ps})
                engine = _engine(ns)
                (_, rep, dig), wall = _timed(lambda: runner(payload, ns, engine),
                                              args.repeats, args.warmup)
                if p == 1:
                    base = wall
                if p not in args.workers:
                    continue
                rows.append({"kernel": args.kernel, "order": order, "workers": p,
                             "packet_size": ps, "mode": args.mode, "wall_time": wall,
                             "speedup": base / wall if wall > 0 else float("nan"),
                             "steals": _as_dict(rep).get("steals", 0), "digest": dig})
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    if args.output:
        Path(args.output).write_text(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return 0


def locality_rows(size, orders, lines, line_size=1, shared=False):
    domain = GridDomain((size, size))
    pattern = pairwise_pattern(size, shared=shared)
    rows = []
    for name in orders:
        order = make_order(domain, name)
        for cap in lines:
            misses = locality_score(order, domain, pattern, CacheModel(line_size, cap))
            rows.append({"order": name, "lines": cap, "misses": misses})
    return rows


def cmd_locality(args):
    if args.size < 1 or not args.lines or not args.orders or args.line_size < 1:
        raise UsageError("need --size >= 1, --line-size >= 1 and non-empty sweeps")
    if any(o not in ORDERS[:3] for o in args.orders):
        raise UsageError("locality orders: hilbert, zorder, rowmajor")
    _check_output(args.output)
    try:
        rows = locality_rows(args.size, args.orders, args.lines, args.line_size, args.shared)
    except BudgetError as exc:
        raise UsageError(str(exc))
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["order", "lines", "misses"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    if args.output:
        Path(args.output).write_text(text)
    sys.stdout.write(text)
    return 0


# built-in nests for depcheck


def _nest_map(size):
    n = size[0] if size else 100
    return LoopNest(GridDomain((n,)), [write("C", AffineMap([[1]])), read("A", AffineMap([[1]]))],
                    name="map")


def _nest_reduce(size):
    n = size[0] if size else 100
    return LoopNest(GridDomain((n,)), [read("A", AffineMap([[1]])), reduce("s", SUM)],
                    name="reduce")


def _nest_prefix(size):
    n = size[0] if size else 50
    return LoopNest(GridDomain((n,)), [read("B", AffineMap([[1]], [-1], extent=(n,))),
                                       write("B", AffineMap([[1]]))], name="prefix-sum")


def _nest_descending(size):
    n, m = (size + [6, 6])[:2] if size else (6, 6)
    eye = [[1, 0], [0, 1]]
    return LoopNest(GridDomain((n, m)), [
        write("B", AffineMap(eye)),
        read("B", AffineMap(eye, [-1, 1], extent=(n, m))),
        read("B", AffineMap(eye, [0, 1], extent=(n, m))),
    ], directions=(1, -1), name="descending-stencil")


def _nest_matmul(size):
    from .kernels.matmul import block_nest

    mb, nb, kb = (size + [4, 4, 4])[:3] if size else (4, 4, 4)
    return block_nest(mb, nb, kb)


NESTS = {"map": _nest_map, "reduce": _nest_reduce, "prefix-sum": _nest_prefix,
         "descending-stencil": _nest_descending, "matmul": _nest_matmul}


def cmd_depcheck(args):
    _check_output(args.output)
    nest = NESTS[args.nest](args.size)
    try:
        report = dependence_check(nest)
    except BudgetError as exc:
        raise UsageError(str(exc))
    payload = {"nest": nest.name, "bounds": list(nest.domain.bounds), **report.to_dict()}
    text = json.dumps(payload, indent=2)
    if args.output:
        Path(args.output).write_text(text)
    print(text)
    return 0


COMMANDS = {"gen": cmd_gen, "join": cmd_join, "kmeans": cmd_kmeans, "matmul": cmd_matmul,
            "bench": cmd_bench, "locality": cmd_locality, "depcheck": cmd_depcheck}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"coloop {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"coloop {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
