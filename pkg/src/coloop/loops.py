"""Declarative loop nests and brute-force dependence analysis.

A :class:`LoopNest` couples a :class:`~coloop.curves.GridDomain` with the
storage cells each iteration touches. Dependence analysis enumerates every
iteration, groups accesses by storage cell and reports the conflicting
iteration pairs. It is exact, which is why it only runs on small domains
(``budget`` cells).
"""

from __future__ import annotations

import itertools
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .curves import CurveKind, CurveOrder, GridDomain

DEFAULT_BUDGET = 10_000

Cell = tuple


class BudgetError(RuntimeError):
    """The domain is too large for exhaustive analysis."""


@dataclass(frozen=True)
class Reduction:
    """Reduction operator attached to ``reduce`` accesses.

    Only operators flagged both commutative and associative may be reordered
    freely. Floating-point addition is commutative but not associative.
    """

    name: str
    ufunc: Any
    identity: Any
    commutative: bool = True
    associative: bool = True

    @property
    def reorderable(self) -> bool:
        return self.commutative and self.associative


SUM = Reduction("sum", np.add, 0)
MAX = Reduction("max", np.maximum, -np.inf)
MIN = Reduction("min", np.minimum, np.inf)
FLOAT_SUM = Reduction("float-sum", np.add, 0.0, commutative=True, associative=False)


class AffineMap:
    """``cell = matrix @ coord + offset``.

    Cells that fall outside ``extent`` (when ``extent`` is given) are treated
    as no access, which models boundary guards such as ``if i > 0``.
    """

    def __init__(self, matrix, offset=None, extent=None):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=np.int64))
        rows = self.matrix.shape[0]
        self.offset = np.zeros(rows, dtype=np.int64) if offset is None else np.asarray(offset, dtype=np.int64)
        self.extent = None if extent is None else tuple(extent)

    def __call__(self, coord):
        cell = self.matrix @ np.asarray(coord, dtype=np.int64) + self.offset
        if self.extent is not None and any(c < 0 or c >= e for c, e in zip(cell, self.extent)):
            return None
        return tuple(int(c) for c in cell)

    def __repr__(self):
        return f"AffineMap({self.matrix.tolist()}, {self.offset.tolist()})"


def scalar_map(coord):
    return (0,)


@dataclass
class AccessDescriptor:
    """One storage access per iteration: ``mode`` is read, write or reduce.

    ``index_map`` maps an iteration coordinate to a storage cell tuple, or to
    ``None`` when the iteration makes no access.
    """

    array_id: str
    mode: str
    index_map: Callable = scalar_map
    reduction: Optional[Reduction] = None

    def __post_init__(self):
        if self.mode not in ("read", "write", "reduce"):
            raise ValueError(f"unknown access mode {self.mode!r}")
        if self.mode == "reduce" and self.reduction is None:
            raise ValueError("reduce access needs a Reduction")
        if not callable(self.index_map):
            self.index_map = AffineMap(self.index_map)

    @property
    def writes(self) -> bool:
        return self.mode != "read"


def read(array_id, index_map=scalar_map):
    return AccessDescriptor(array_id, "read", index_map)


def write(array_id, index_map=scalar_map):
    return AccessDescriptor(array_id, "write", index_map)


def reduce(array_id, reduction, index_map=scalar_map):
    return AccessDescriptor(array_id, "reduce", index_map, reduction)


@dataclass
class LoopNest:
    """Loop domain, declared accesses and an optional body.

    ``body(coord, arrays)`` runs one iteration against the mapping ``arrays``.
    ``directions`` gives the sequential loop direction per dimension: ``+1``
    for ascending (the default) and ``-1`` for a loop that runs downward.
    Together they define the original execution order.
    """

    domain: GridDomain
    accesses: list
    body: Optional[Callable] = None
    arrays: dict = field(default_factory=dict)
    directions: Optional[tuple] = None
    name: str = "nest"

    def __post_init__(self):
        if self.directions is None:
            self.directions = (1,) * self.domain.dims
        self.directions = tuple(self.directions)
        if len(self.directions) != self.domain.dims or any(d not in (1, -1) for d in self.directions):
            raise ValueError("directions must be +1/-1 per dimension")

    def sequential_key(self, coord) -> tuple:
        return tuple(c * s for c, s in zip(coord, self.directions))

    def iterations(self) -> list:
        cells = [tuple(int(v) for v in c) for c in self.domain.row_major_cells()]
        return sorted(cells, key=self.sequential_key)


@dataclass(frozen=True)
class Conflict:
    a: tuple
    b: tuple
    array_id: str
    kind: str


@dataclass
class DependenceReport:
    """Ordering-relevant conflicts of a nest.

    ``conflicts`` lists each (a, b, array, kind) once, where ``a`` runs
    before ``b`` in the original sequential order. Pairs whose accesses on a
    cell are all reorderable reductions with the same operator are counted
    (once per shared cell) in ``reduction_pairs`` and not listed, because
    they impose no order.
    ``required_monotone_dims`` is ``None`` when no monotone order can
    serialize the conflicts.
    """

    conflicts: list
    safe_unordered: bool
    required_monotone_dims: Optional[list]
    reduction_pairs: int = 0
    cells: int = 0

    @property
    def schedulable(self) -> bool:
        return self.required_monotone_dims is not None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conflicts"] = [
            {"a": list(c.a), "b": list(c.b), "array_id": c.array_id, "kind": c.kind}
            for c in self.conflicts
        ]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


UNSCHEDULABLE = None


def _collect(nest: LoopNest, budget: int):
    volume = nest.domain.volume
    if volume > budget:
        raise BudgetError(f"domain of {volume} cells exceeds brute-force budget {budget}")
    order = nest.iterations()
    by_cell = defaultdict(list)
    for rank, it in enumerate(order):
        for acc in nest.accesses:
            cell = acc.index_map(it)
            if cell is None:
                continue
            by_cell[(acc.array_id, tuple(cell))].append((rank, acc))
    return order, by_cell


def _kind(first, second) -> str:
    if first.writes and second.writes:
        return "WAW"
    return "RAW" if first.writes else "WAR"


def dependence_check(nest: LoopNest, budget: int = DEFAULT_BUDGET) -> DependenceReport:
    """Enumerate all iteration pairs that share a storage cell."""
    order, by_cell = _collect(nest, budget)
    found = set()
    reduction_pairs = 0
    for (array_id, _), touches in by_cell.items():
        if not any(acc.writes for _, acc in touches):
            continue
        red = touches[0][1].reduction
        if red is not None and red.reorderable and all(
                acc.mode == "reduce" and acc.reduction == red for _, acc in touches):
            ranks = defaultdict(int)
            for r, _ in touches:
                ranks[r] += 1
            k = len(touches)
            reduction_pairs += k * (k - 1) // 2 - sum(v * (v - 1) // 2 for v in ranks.values())
            continue
        for (ra, xa), (rb, xb) in itertools.combinations(touches, 2):
            if ra == rb:
                continue
            if not (xa.writes or xb.writes):
                continue
            if ra > rb:
                (ra, xa), (rb, xb) = (rb, xb), (ra, xa)
            if (xa.mode == xb.mode == "reduce" and xa.reduction == xb.reduction
                    and xa.reduction.reorderable):
                reduction_pairs += 1
                continue
            found.add((ra, rb, array_id, _kind(xa, xb)))
    conflicts = [Conflict(order[ra], order[rb], aid, kind)
                 for ra, rb, aid, kind in sorted(found)]
    report = DependenceReport(conflicts, not conflicts, [], reduction_pairs, len(order))
    report.required_monotone_dims = monotony_infer(report, nest)
    return report


def serializes(dims: Sequence[int], conflicts: Sequence[Conflict]) -> bool:
    """True if ascending lexicographic order over ``dims`` puts every ``a`` before its ``b``."""
    dims = list(dims)
    for c in conflicts:
        pa = [c.a[d] for d in dims]
        pb = [c.b[d] for d in dims]
        if not pa < pb:
            return False
    return True


def monotony_infer(report: DependenceReport, nest: LoopNest) -> Optional[list]:
    """Smallest ordered list of dimensions whose ascending scan keeps every conflict in order.

    Candidates are tried by size, then in ``itertools.permutations`` order.
    Returns ``UNSCHEDULABLE`` (``None``) if no list works. That can happen
    only when the nest runs some dimension in descending order.
    """
    if not report.conflicts:
        return []
    n = nest.domain.dims
    for size in range(1, n + 1):
        for dims in itertools.permutations(range(n), size):
            if serializes(dims, report.conflicts):
                return list(dims)
    return UNSCHEDULABLE


def order_serializes(order: CurveOrder, report: DependenceReport) -> bool:
    """Whether executing in ``order`` (slab by slab) honours every conflict."""
    if report.safe_unordered:
        return True
    if order.kind is not CurveKind.COMPOSITE:
        return False
    return serializes(order.monotone_dims, report.conflicts)


# ---------------------------------------------------------------------------
# instrumented validation


@dataclass
class ValidationResult:
    status: str  # "pass" | "fail" | "unverifiable"
    iteration: Optional[tuple] = None
    access: Optional[tuple] = None
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


class _Recorder:
    def __init__(self, array_id, target, log):
        self.array_id = array_id
        self.target = target
        self.log = log

    @staticmethod
    def _norm(idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return tuple(int(i) for i in idx)

    def __getitem__(self, idx):
        self.log.append((self.array_id, self._norm(idx), "read"))
        return self.target[idx]

    def __setitem__(self, idx, value):
        self.log.append((self.array_id, self._norm(idx), "write"))
        self.target[idx] = value


def validate_instrumented(nest: LoopNest, sample_iterations=None) -> ValidationResult:
    """Run the body on sampled iterations and check every access is declared.

    Arrays are wrapped in recording proxies, so only element get/set through
    the ``arrays`` mapping is observed. Bodies not written against that
    mapping (or nests without a body) are reported as unverifiable.
    """
    if nest.body is None or getattr(nest.body, "opaque", False):
        return ValidationResult("unverifiable", message="body cannot be sandboxed")
    if sample_iterations is None:
        sample_iterations = nest.iterations()
    for it in sample_iterations:
        it = tuple(int(v) for v in it)
        log = []
        scratch = {k: np.array(v, copy=True) for k, v in nest.arrays.items()}
        proxies = {k: _Recorder(k, v, log) for k, v in scratch.items()}
        nest.body(it, proxies)
        declared_reads = set()
        declared_writes = set()
        for acc in nest.accesses:
            cell = acc.index_map(it)
            if cell is None:
                continue
            key = (acc.array_id, tuple(cell))
            declared_reads.add(key)
            if acc.writes:
                declared_writes.add(key)
        for array_id, cell, mode in log:
            key = (array_id, cell)
            allowed = declared_writes if mode == "write" else declared_reads
            if key not in allowed:
                return ValidationResult(
                    "fail", it, (array_id, cell, mode),
                    f"undeclared {mode} of {array_id}{list(cell)} at iteration {it}")
    return ValidationResult("pass")
