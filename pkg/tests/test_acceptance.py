"""Acceptance suite. Each test records one PASS/FAIL line (see conftest) and
then asserts, so the summary lists every criterion even when some fail."""

import itertools
import os
import statistics
import threading
import time

import numpy as np
import pytest

from coloop.curves import CurveKind, CurveOrder, GridDomain, band, composite_order, make_order
from coloop.io import digest, generate, join_digest
from coloop.kernels import (EngineConfig, JoinParams, brute_force_join, epsilon_self_join,
                            kmeans, lloyd_reference, matmul, matmul_with_report, naive_matmul)
from coloop.loops import SUM, AffineMap, LoopNest, dependence_check, read, reduce, write
from coloop.scheduler import CacheModel, SchedulePlan, execute, locality_score, pairwise_pattern

CELL_LIMIT = 1 << 20


def curve_grid():
    for n in range(2, 5):
        level = 1
        while (1 << (n * level)) <= CELL_LIMIT:
            yield n, level
            level += 1


def test_c1_curve_bijectivity(criterion):
    t0 = time.perf_counter()
    failures = []
    checked = 0
    for kind in (CurveKind.HILBERT, CurveKind.ZORDER):
        for n, level in curve_grid():
            order = CurveOrder(kind, level, n)
            ords = np.arange(order.size, dtype=np.int64)
            cells = order.decode(ords)
            lin = np.ravel_multi_index(tuple(cells.T), (order.side,) * n)
            onto = len(np.unique(lin)) == order.size
            if not (onto and np.array_equal(order.encode(cells), ords)):
                failures.append((kind.value, n, level))
            checked += 1
    # one-dimensional Z-order is the identity map
    for level in range(1, 21):
        order = CurveOrder(CurveKind.ZORDER, level, 1)
        ords = np.arange(order.size, dtype=np.int64)
        if not np.array_equal(order.encode(order.decode(ords)), ords):
            failures.append(("zorder", 1, level))
        checked += 1
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 30
    criterion("C1", ok, f"{checked} (kind, n, level) maps round-trip, failures={failures}, "
                        f"{elapsed:.1f}s (limit 30s)")
    assert ok


def test_c2_hilbert_adjacency(criterion):
    steps = bad = 0
    for n, level in curve_grid():
        order = CurveOrder(CurveKind.HILBERT, level, n)
        cells = order.decode(np.arange(order.size, dtype=np.int64))
        l1 = np.abs(np.diff(cells, axis=0)).sum(axis=1)
        steps += len(l1)
        bad += int((l1 != 1).sum())
    ok = bad == 0
    criterion("C2", ok, f"{steps - bad}/{steps} consecutive Hilbert pairs at L1 distance 1")
    assert ok


def join_cases():
    eps = {2: (0.004, 0.02, 0.06, 0.15), 4: (0.04, 0.1, 0.2, 0.35), 8: (0.2, 0.35, 0.5, 0.7)}
    cases = []
    seed = 0
    for d, grid in eps.items():
        for e in grid:
            for kind in ("uniform", "gaussian-blobs"):
                n = 2000 if kind == "uniform" else 1500
                cases.append((kind, n, d, e, seed))
                seed += 1
    return cases


def test_c3_join_exactness(criterion):
    t0 = time.perf_counter()
    cases = join_cases()
    mismatches = []
    selectivity = []
    for kind, n, d, eps, seed in cases:
        pts = generate(kind, n, d, seed, centers=4, spread=0.1)
        res = epsilon_self_join(pts, JoinParams(eps, dim_permutation="auto"),
                                EngineConfig(workers=2, seed=seed))
        bp, _ = brute_force_join(pts, eps)
        if res.as_set() != set(map(tuple, bp.tolist())):
            mismatches.append((kind, d, eps, seed))
        selectivity.append(len(bp) / (n * (n - 1) / 2))
    elapsed = time.perf_counter() - t0
    ok = not mismatches and len(cases) >= 20 and elapsed < 120
    criterion("C3", ok, f"{len(cases) - len(mismatches)}/{len(cases)} datasets set-equal, "
                        f"selectivity {min(selectivity):.1e}..{max(selectivity):.2f}, "
                        f"{elapsed:.1f}s (limit 120s)")
    assert ok


def test_c4_scheduler_determinism(criterion):
    pts = generate("uniform", 3000, 3, 11)
    blobs = generate("gaussian-blobs", 4000, 4, 12, centers=6)
    rng = np.random.default_rng(13)
    a, b = rng.standard_normal((96, 80)), rng.standard_normal((80, 112))
    digs = {"join": set(), "kmeans": set(), "matmul": set()}
    for p in (1, 2, 4, 8):
        for mode in ("static", "stealing"):
            eng = EngineConfig(workers=p, mode=mode, packet_size=4)
            r = epsilon_self_join(pts, JoinParams(0.06, block_size=64), eng)
            digs["join"].add(join_digest(r.pairs, r.distances))
            m = kmeans(blobs, 6, 3, 25, eng)
            digs["kmeans"].add(digest(m.assignment, m.centroids))
            digs["matmul"].add(digest(matmul(a, b, 16, engine=eng)))
    counts = {k: len(v) for k, v in digs.items()}
    ok = all(v == 1 for v in counts.values())
    criterion("C4", ok, f"distinct digests over p in {{1,2,4,8}} x {{static,stealing}}: {counts}")
    assert ok


class VisitCounter:
    def __init__(self, domain):
        self.domain = domain
        self.visits = np.zeros(domain.bounds, dtype=np.int64)
        self._lock = threading.Lock()

    def run(self, coords):
        with self._lock:
            np.add.at(self.visits, tuple(coords.T), 1)
        return None


def test_c5_exactly_once_under_stealing(criterion):
    domain = GridDomain((37, 53), mask=band(20))
    included = domain.contains(np.indices(domain.bounds).reshape(2, -1).T).reshape(domain.bounds)
    schedules = 60
    bad = []
    total_steals = 0
    for seed in range(schedules):
        rng = np.random.default_rng(seed)
        p = int(rng.integers(2, 9))
        packet = int(rng.choice([4, 8, 16, 32]))
        kind = str(rng.choice(["hilbert", "zorder", "rowmajor"]))
        pauses = rng.exponential(1e-4, size=2048)
        slow = {int(rng.integers(p)): float(rng.uniform(2, 10))}
        lock = threading.Lock()
        tick = [0]

        def hook(w, idx, pauses=pauses, lock=lock, tick=tick):
            with lock:
                dt = pauses[tick[0] % len(pauses)]
                tick[0] += 1
            time.sleep(dt)

        k = VisitCounter(domain)
        plan = SchedulePlan("stealing", p, packet, seed, delays=slow, delay_hook=hook)
        _, rep = execute(k, make_order(domain, kind), plan)
        total_steals += rep.steals
        if not (np.array_equal(k.visits[included], np.ones(included.sum(), np.int64))
                and not k.visits[~included].any()):
            bad.append(seed)
    ok = not bad
    criterion("C5", ok, f"{schedules - len(bad)}/{schedules} randomized schedules visit every "
                        f"cell exactly once ({total_steals} steals in total)")
    assert ok


class SleepWorkload:
    """Uniform synthetic work: 1 microsecond of sleep per cell."""

    def __init__(self, cells):
        self.domain = GridDomain((cells,))

    def run(self, coords):
        time.sleep(len(coords) * 1e-6)
        return len(coords)

    def combine(self, a, b):
        return a + b


def _median_wall(kernel, order, plan, runs=5):
    times = []
    for _ in range(runs):
        total, rep = execute(kernel, order, plan)
        assert total == kernel.domain.volume
        times.append(rep.wall_time)
    return statistics.median(times)


def test_c6_load_balancing(criterion):
    kernel = SleepWorkload(10 ** 6)
    order = make_order(kernel.domain, "hilbert")
    packet = 4096
    npk = -(-order.size // packet)
    delayed = {3: 10.0}
    base = _median_wall(kernel, order, SchedulePlan("stealing", 3, packet))
    steal = _median_wall(kernel, order, SchedulePlan("stealing", 4, packet, delays=delayed))
    static = _median_wall(kernel, order, SchedulePlan("static", 4, packet, delays=delayed))
    rs, rt = steal / base, static / base
    ok = npk >= 64 and rs <= 1.3 and rt >= 1.8
    criterion("C6", ok, f"{npk} packets; (p-1)=3 undelayed {base:.3f}s; stealing {steal:.3f}s "
                        f"= {rs:.2f}x (<= 1.3); static {static:.3f}s = {rt:.2f}x (>= 1.8)")
    assert ok


def _join_time(pts, params, p, runs=3):
    eng = EngineConfig(workers=p)
    epsilon_self_join(pts, params, eng)  # warm-up
    times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        epsilon_self_join(pts, params, eng)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


@pytest.mark.slow
def test_c7_parallel_speedup(criterion):
    pts = generate("uniform", 200_000, 4, 0)
    params = JoinParams(0.05)
    t1 = _join_time(pts, params, 1)
    speedups = {p: t1 / _join_time(pts, params, p) for p in (2, 4, 8)}
    ok = all(s >= 0.6 * p for p, s in speedups.items())
    shown = ", ".join(f"p={p}: {s:.2f} (need {0.6 * p:.1f})" for p, s in speedups.items())
    criterion("C7", ok, f"join speedups {shown}; t1={t1:.2f}s on {os.cpu_count()} visible cores")
    assert ok


def test_c8_locality_dominance(criterion):
    domain = GridDomain((64, 64))
    pattern = pairwise_pattern(64)
    rows = {}
    for lines in (64, 256, 1024):
        cache = CacheModel(1, lines)
        rows[lines] = tuple(locality_score(make_order(domain, k), domain, pattern, cache)
                            for k in ("hilbert", "rowmajor"))
    ok = all(h <= r for h, r in rows.values()) and any(h < r for h, r in rows.values())
    shown = ", ".join(f"{l} lines: hilbert {h} vs rowmajor {r}" for l, (h, r) in rows.items())
    criterion("C8", ok, shown)
    assert ok


def test_c9_monotony_correctness(criterion):
    rng = np.random.default_rng(9)
    a, b = rng.standard_normal((128, 128)), rng.standard_normal((128, 128))
    ref = naive_matmul(a, b)
    errs = {}
    for kind in ("hilbert", "zorder", "rowmajor"):
        c, rep = matmul_with_report(a, b, 16, kind)
        errs[kind] = float((np.abs(c - ref) / np.abs(ref)).max())
    mat_ok = all(e <= 1e-10 for e in errs.values())

    domain = GridDomain((4, 4, 4))
    violations = 0
    orders = 0
    for k in (1, 2, 3):
        for md in itertools.permutations(range(3), k):
            for free in ("hilbert", "zorder"):
                order = composite_order(domain, md, free)
                cells = [tuple(c) for c in order.cursor(domain)]
                assert len(set(cells)) == 64
                keys = np.array([[c[m] for m in md] for c in cells])
                # every ordered pair: lexicographically smaller key comes first
                for i, j in itertools.combinations(range(64), 2):
                    if tuple(keys[j]) < tuple(keys[i]):
                        violations += 1
                orders += 1
    ok = mat_ok and violations == 0
    shown = ", ".join(f"{k} {e:.1e}" for k, e in errs.items())
    criterion("C9", ok, f"matmul 128x128 max elementwise relative error {shown} (<= 1e-10); "
                        f"{orders} composite orders on 4x4x4, {violations} precedence violations")
    assert ok


def pair_oracle(nest):
    """Brute-force pair enumeration, independent of the checker's grouping."""
    its = nest.iterations()
    conflicts = set()
    for a, b in itertools.combinations(its, 2):
        for xa in nest.accesses:
            for xb in nest.accesses:
                if xa.array_id != xb.array_id or not (xa.writes or xb.writes):
                    continue
                ca, cb = xa.index_map(a), xb.index_map(b)
                if ca is None or ca != cb:
                    continue
                if xa.mode == xb.mode == "reduce" and xa.reduction.reorderable:
                    continue
                conflicts.add((a, b, xa.array_id))
    return conflicts


def test_c10_dependence_checker(criterion):
    i1 = AffineMap([[1]])
    nests = {
        "map": (LoopNest(GridDomain((100,)), [write("C", i1), read("A", i1)]), True, []),
        "reduce": (LoopNest(GridDomain((100,)), [read("A", i1), reduce("s", SUM)]), True, []),
        "prefix-sum": (LoopNest(GridDomain((50,)), [read("B", AffineMap([[1]], [-1], (50,))),
                                                    write("B", i1)]), False, [0]),
    }
    verdicts = {}
    for name, (nest, safe, dims) in nests.items():
        rep = dependence_check(nest)
        oracle = pair_oracle(nest)
        got = {(c.a, c.b, c.array_id) for c in rep.conflicts}
        verdicts[name] = (got == oracle and rep.safe_unordered == safe
                          and rep.safe_unordered == (not oracle)
                          and rep.required_monotone_dims == dims)
    ok = all(verdicts.values())
    criterion("C10", ok, ", ".join(f"{k}: {'ok' if v else 'wrong'}" for k, v in verdicts.items()))
    assert ok


def test_c11_kmeans_oracle(criterion):
    pts = generate("uniform", 10_000, 4, 0)
    m = kmeans(pts, 8, init_seed=0, max_iters=50, engine=EngineConfig(workers=4))
    ref = lloyd_reference(pts, 8, init_seed=0, max_iters=50)
    same = bool(np.array_equal(m.assignment, ref.assignment))
    cdiff = float(np.abs(m.centroids - ref.centroids).max())
    steps = np.diff(m.inertia_history)
    mono = bool((steps <= 0).all())
    ok = same and cdiff <= 1e-9 and mono
    criterion("C11", ok, f"labels identical={same}, max centroid diff {cdiff:.1e} (<= 1e-9), "
                         f"inertia non-increasing over {len(m.inertia_history)} values={mono}")
    assert ok
