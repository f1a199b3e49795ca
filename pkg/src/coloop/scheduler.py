"""Packet partitioning, multi-threaded execution and locality diagnostics.

Execution model
---------------
``partition`` tiles the curve's ordinal range into packets. Each worker
thread owns a queue of packet indices. In ``static`` mode packet ``i`` goes
to worker ``i % p``. In ``stealing`` mode each worker starts with a
contiguous run of packets. A worker whose queue runs dry takes the trailing
half (rounded down) of the largest remaining queue. Ties go to the lowest
worker index.

Every packet produces a partial result. Partials are folded along a binary
tree indexed by packet number, so the result does not depend on which
worker ran which packet.

Kernels
-------
A kernel is any object with a ``domain`` and a ``run(coords)`` method that
takes the curve-ordered ``(m, n)`` array of cells of one packet. A kernel
may also define ``combine(a, b)`` (default: partials are ignored),
``finalize(total)`` and ``dependences`` (a
:class:`~coloop.loops.DependenceReport`). Kernels with ordering constraints
run one monotone slab at a time, with a barrier between slabs.
"""

from __future__ import annotations

import json
import threading
import time
from collections import OrderedDict, deque
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .curves import CurveOrder, GridDomain
from .loops import (BudgetError, DependenceReport, LoopNest, dependence_check,
                    order_serializes, serializes)

DEFAULT_PACKET_SIZE = 1 << 12
TRACE_BUDGET = 1 << 20


class ScheduleError(RuntimeError):
    """A nest cannot be executed safely in the requested order."""

    def __init__(self, message, report: Optional[DependenceReport] = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class Packet:
    start: int
    end: int
    domain_ref: str = ""

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"empty packet [{self.start}, {self.end})")

    def __len__(self):
        return self.end - self.start


@dataclass
class SchedulePlan:
    mode: str = "stealing"
    workers: int = 1
    packet_size: int = DEFAULT_PACKET_SIZE
    seed: int = 0
    # worker index -> slowdown factor; a factor f makes each packet take f x as long
    delays: dict = field(default_factory=dict)
    # optional hook(worker, packet_index) called after each packet, for fault injection
    delay_hook: Optional[Callable] = None

    def __post_init__(self):
        if self.mode not in ("static", "stealing"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.packet_size < 1:
            raise ValueError("packet_size must be >= 1")


@dataclass
class ExecutionReport:
    mode: str
    workers: int
    packet_size: int
    packets: int
    packets_per_worker: list
    steals: int
    wall_time: float
    busy_time: list
    phases: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def partition(order: CurveOrder, packet_size: int, domain_ref: str = "") -> list:
    """Tile ``[0, order.size)`` with consecutive packets of ``packet_size``."""
    if packet_size < 1:
        raise ValueError("packet_size must be >= 1")
    ref = domain_ref or order.name
    return [Packet(s, min(s + packet_size, order.size), ref)
            for s in range(0, order.size, packet_size)]


def tree_reduce(partials: Sequence, combine: Callable) -> Any:
    """Fold partials pairwise by index: ``((p0+p1)+(p2+p3))+...``.

    ``None`` acts as the identity.
    """
    level = list(partials)
    if not level:
        return None
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            a, b = level[i], level[i + 1]
            nxt.append(a if b is None else b if a is None else combine(a, b))
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


class _Queues:
    """Per-worker deques of packet indices behind a single lock."""

    def __init__(self, assignment: list, stealing: bool):
        self._q = [deque(a) for a in assignment]
        self._lock = threading.Lock()
        self.stealing = stealing
        self.steals = 0

    def take(self, w: int) -> Optional[int]:
        with self._lock:
            q = self._q[w]
            if q:
                return q.popleft()
            if not self.stealing:
                return None
            sizes = [len(x) for x in self._q]
            victim = max(range(len(sizes)), key=lambda i: (sizes[i], -i))
            k = sizes[victim] // 2
            if k == 0:
                return None
            vq = self._q[victim]
            stolen = [vq.pop() for _ in range(k)]
            stolen.reverse()
            q.extend(stolen)
            self.steals += 1
            return q.popleft()


def _assign(indices: list, p: int, mode: str) -> list:
    if mode == "static":
        return [indices[w::p] for w in range(p)]
    chunk, extra = divmod(len(indices), p)
    out, pos = [], 0
    for w in range(p):
        size = chunk + (1 if w < extra else 0)
        out.append(indices[pos:pos + size])
        pos += size
    return out


class _NestKernel:
    """Adapter running a :class:`LoopNest` body cell by cell.

    Arrays touched by reorderable reductions are privatised per packet and
    merged through the reduction's ufunc after the tree fold.
    """

    def __init__(self, nest: LoopNest, report: Optional[DependenceReport]):
        self.domain = nest.domain
        self.nest = nest
        self.dependences = report
        self._private = {}
        for acc in nest.accesses:
            # ordered nests update storage in place, slab by slab
            if report is None or not report.safe_unordered:
                break
            if acc.mode == "reduce" and acc.reduction.reorderable:
                self._private[acc.array_id] = acc.reduction

    def run(self, coords):
        arrays = dict(self.nest.arrays)
        local = {}
        for aid, red in self._private.items():
            base = np.asarray(self.nest.arrays[aid])
            local[aid] = np.full_like(base, red.identity)
            arrays[aid] = local[aid]
        for c in coords:
            self.nest.body(tuple(int(v) for v in c), arrays)
        return local or None

    def combine(self, a, b):
        return {aid: self._private[aid].ufunc(a[aid], b[aid]) for aid in a}

    def finalize(self, total):
        if total:
            for aid, part in total.items():
                target = self.nest.arrays[aid]
                target[...] = self._private[aid].ufunc(target, part)
        return self.nest.arrays


def _phase_size(order: CurveOrder, deps: DependenceReport) -> int:
    """Ordinals per phase: one value of the shortest serializing monotone prefix."""
    md = order.monotone_dims
    for r in range(1, len(md) + 1):
        if serializes(md[:r], deps.conflicts):
            return order.slab_size * order.side ** (len(md) - r)
    return order.slab_size


def execute(kernel, order: CurveOrder, plan: Optional[SchedulePlan] = None,
            dependence_budget: Optional[int] = None):
    """Run ``kernel`` over its domain in ``order``; returns ``(result, report)``.

    ``kernel`` may be a :class:`LoopNest`, in which case it is dependence
    checked first. An unsafe nest is refused with :class:`ScheduleError`
    unless ``order`` serializes every conflict.
    """
    plan = plan or SchedulePlan()
    if isinstance(kernel, LoopNest):
        kw = {"budget": dependence_budget} if dependence_budget else {}
        try:
            report = dependence_check(kernel, **kw)
        except BudgetError as exc:
            raise ScheduleError(f"cannot verify nest for parallel execution: {exc}") from exc
        kernel = _NestKernel(kernel, report)
    domain: GridDomain = kernel.domain
    if not order.covers(domain):
        raise ScheduleError(f"order {order.name} does not cover domain {domain.bounds}")

    deps = getattr(kernel, "dependences", None)
    ordered = deps is not None and not deps.safe_unordered
    if ordered and not order_serializes(order, deps):
        raise ScheduleError("nest has conflicts the order does not serialize", deps)

    packet_size = plan.packet_size
    if ordered:
        phase_size = _phase_size(order, deps)
        # packets must not straddle phases; phase_size is a power of two
        packet_size = min(packet_size, phase_size)
        if phase_size % packet_size:
            packet_size = 1 << (packet_size.bit_length() - 1)
    packets = partition(order, packet_size)
    npk = len(packets)
    if ordered:
        per_phase = phase_size // packet_size
        phases = [list(range(s, min(s + per_phase, npk))) for s in range(0, npk, per_phase)]
    else:
        phases = [list(range(npk))]

    p = plan.workers
    partials = [None] * npk
    counts = [0] * p
    busy = [0.0] * p
    steals = 0
    errors = []
    combine = getattr(kernel, "combine", None)

    def work(w, queues):
        factor = plan.delays.get(w, 1.0)
        while not errors:
            idx = queues.take(w)
            if idx is None:
                return
            pk = packets[idx]
            t0 = time.perf_counter()
            try:
                coords = order.cells_in_range(pk.start, pk.end, domain)
                partials[idx] = kernel.run(coords) if len(coords) else None
            except BaseException as exc:  # surfaced after join
                errors.append(exc)
                return
            elapsed = time.perf_counter() - t0
            if factor > 1.0:
                time.sleep(elapsed * (factor - 1.0))
            if plan.delay_hook is not None:
                plan.delay_hook(w, idx)
            busy[w] += time.perf_counter() - t0
            counts[w] += 1

    t_start = time.perf_counter()
    for phase in phases:
        queues = _Queues(_assign(phase, p, plan.mode), plan.mode == "stealing")
        if p == 1:
            work(0, queues)
        else:
            threads = [threading.Thread(target=work, args=(w, queues), daemon=True)
                       for w in range(p)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        steals += queues.steals
        if errors:
            raise errors[0]
    total = tree_reduce(partials, combine) if combine else None
    finalize = getattr(kernel, "finalize", None)
    result = finalize(total) if finalize else total
    wall = time.perf_counter() - t_start
    report = ExecutionReport(plan.mode, p, packet_size, npk, counts, steals, wall, busy,
                             len(phases))
    return result, report


def run_sequential(kernel, order: CurveOrder, packet_size: int = DEFAULT_PACKET_SIZE):
    """Single-threaded reference run with the same packet tree."""
    return execute(kernel, order, SchedulePlan("static", 1, packet_size))[0]


# ---------------------------------------------------------------------------
# locality


@dataclass(frozen=True)
class CacheModel:
    """Fully associative LRU cache: ``lines`` lines of ``line_size`` cells."""

    line_size: int = 1
    lines: int = 256
    policy: str = "LRU"

    def __post_init__(self):
        if self.lines < 1 or self.line_size < 1:
            raise ValueError("cache needs lines >= 1 and line_size >= 1")
        if self.policy != "LRU":
            raise ValueError("only LRU is simulated")


def simulate_lru(addresses, cache: CacheModel) -> int:
    """Miss count of an address trace."""
    resident = OrderedDict()
    misses = 0
    cap = cache.lines
    for a in addresses:
        line = int(a) // cache.line_size
        if line in resident:
            resident.move_to_end(line)
            continue
        misses += 1
        resident[line] = None
        if len(resident) > cap:
            resident.popitem(last=False)
    return misses


def pairwise_pattern(rows: int, shared: bool = False) -> Callable:
    """Pairwise kernel access: cell ``(i, j)`` reads record ``i`` and record ``j``.

    With ``shared`` both come from one array (a self-join). Otherwise the
    column records live after the ``rows`` row records.
    """
    offset = 0 if shared else rows

    def pattern(coords):
        return np.stack([coords[:, 0], coords[:, 1] + offset], axis=1)

    return pattern


def access_trace(order: CurveOrder, domain: GridDomain, access_pattern: Callable,
                 budget: int = TRACE_BUDGET) -> np.ndarray:
    from .curves import domain_cells

    cells = domain_cells(domain, order)
    trace = np.asarray(access_pattern(cells)).reshape(len(cells), -1).ravel()
    if trace.size > budget:
        raise BudgetError(f"trace of {trace.size} accesses exceeds budget {budget}")
    return trace


def locality_score(order: CurveOrder, domain: GridDomain, access_pattern: Callable,
                   cache: CacheModel, budget: int = TRACE_BUDGET) -> int:
    """LRU miss count for the trace ``access_pattern`` induces in ``order``."""
    if domain.volume > budget:
        raise BudgetError(f"domain of {domain.volume} cells exceeds trace budget {budget}")
    return simulate_lru(access_trace(order, domain, access_pattern, budget), cache)


# ---------------------------------------------------------------------------
# transfer cost


def contiguous_assignment(npackets: int, nodes: int) -> list:
    return [w for w, idx in enumerate(_assign(list(range(npackets)), nodes, "stealing"))
            for _ in idx]


def round_robin_assignment(npackets: int, nodes: int) -> list:
    return [i % nodes for i in range(npackets)]


def transfer_cost(packets: Sequence[Packet], assignment, order: CurveOrder,
                  domain: GridDomain, access_pattern: Callable, record_size_bytes: int,
                  replication_model: str = "replicate") -> int:
    """Bytes that must reach each node for its packets; purely analytical.

    ``replicate``: every node receives each distinct record it touches.
    ``home``: each record lives on the node that first touches it in curve
    order, and only fetches by other nodes are charged.
    """
    if len(assignment) != len(packets) or any(a is None for a in assignment):
        raise ValueError("every packet must be assigned to a node")
    if replication_model not in ("replicate", "home"):
        raise ValueError(f"unknown replication model {replication_model!r}")
    touched = {}
    home = {}
    for pk, node in zip(packets, assignment):
        cells = order.cells_in_range(pk.start, pk.end, domain)
        if not len(cells):
            continue
        addrs = np.unique(np.asarray(access_pattern(cells)).ravel())
        bucket = touched.setdefault(node, set())
        bucket.update(addrs.tolist())
        for a in addrs.tolist():
            home.setdefault(a, node)
    if replication_model == "replicate":
        cells = sum(len(s) for s in touched.values())
    else:
        cells = sum(1 for node, s in touched.items() for a in s if home[a] != node)
    return cells * record_size_bytes
