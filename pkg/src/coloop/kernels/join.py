"""Exact epsilon similarity self-join over the Epsilon Grid Order.

Points are bucketed into grid cells of width epsilon (``floor(x / eps)``)
and sorted lexicographically by cell. Any join partner of a point lies in a
cell that differs by at most one step in every dimension. The sorted
sequence is split into blocks. The engine traverses the upper-triangular
block-pair domain in curve order and masks out pairs whose cell bounding
boxes are more than one step apart in some dimension. Surviving pairs are
compared point by point: cell filter first, then the exact distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from numba import njit

from ..curves import GridDomain
from ..scheduler import ExecutionReport, execute
from .common import DataError, EngineConfig, PointSet, as_points


@dataclass
class JoinParams:
    epsilon: float
    metric: str = "euclidean"
    # None, a permutation of 0..d-1, or "auto" for choose_dim_permutation
    dim_permutation: Union[None, str, Sequence[int]] = None
    block_size: int = 256
    sample_pairs: int = 10_000

    def __post_init__(self):
        if self.metric != "euclidean":
            raise ValueError("only the Euclidean metric is supported")
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")


@dataclass
class JoinResult:
    """Pairs ``(a, b)`` with ``a < b`` sorted lexicographically, plus distances."""

    pairs: np.ndarray
    distances: np.ndarray
    permutation: tuple = ()
    report: Optional[ExecutionReport] = None
    block_pairs: int = 0

    def as_set(self) -> set:
        return set(map(tuple, self.pairs.tolist()))

    def __len__(self):
        return len(self.pairs)


def _check_permutation(perm, d):
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(d)):
        raise ValueError(f"{perm} is not a permutation of 0..{d - 1}")
    return perm


def grid_cells(data: np.ndarray, width: float, perm: Sequence[int]) -> np.ndarray:
    scaled = np.floor(data[:, list(perm)] / width)
    if len(scaled) and np.abs(scaled).max() >= 2.0 ** 62:
        raise DataError("coordinates too large for an integer grid at this epsilon")
    return scaled.astype(np.int64)


def ego_sort(points, epsilon: float, dim_permutation: Optional[Sequence[int]] = None) -> np.ndarray:
    """Stable permutation sorting points by their epsilon-grid cells, lexicographically."""
    pts = as_points(points)
    if not epsilon > 0:
        raise ValueError("epsilon grid needs epsilon > 0")
    perm = _check_permutation(dim_permutation or range(pts.d), pts.d)
    return _lex_order(grid_cells(pts.data, epsilon, perm))


def ego_less(x, y, epsilon: float, dim_permutation: Optional[Sequence[int]] = None) -> bool:
    """Strict Epsilon Grid Order comparison of two points."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    perm = list(dim_permutation) if dim_permutation is not None else list(range(len(x)))
    cx = np.floor(x[perm] / epsilon).astype(np.int64).tolist()
    cy = np.floor(y[perm] / epsilon).astype(np.int64).tolist()
    return cx < cy


def choose_dim_permutation(points, epsilon: float, sample_pairs: int = 10_000,
                           seed: int = 0) -> tuple:
    """Dimensions ordered by decreasing pruning power.

    Pruning power of a dimension is estimated as the fraction of randomly
    sampled point pairs whose coordinates differ by more than ``epsilon``
    in that dimension alone. Ties keep the lower index first.
    """
    pts = as_points(points)
    if pts.d == 1:
        return (0,)
    if pts.n < 2:
        raise ValueError("need at least two points to sample pairs")
    rng = np.random.default_rng(seed)
    i = rng.integers(0, pts.n, sample_pairs)
    j = rng.integers(0, pts.n - 1, sample_pairs)
    j += j >= i
    frac = (np.abs(pts.data[i] - pts.data[j]) > epsilon).mean(axis=0)
    return tuple(int(v) for v in np.argsort(-frac, kind="stable"))


@njit(nogil=True, cache=True)
def _packet_pairs(x, cells, blocks, bs, eps2, reach):
    """All verified pairs of the block pairs of one packet, in one GIL-free call."""
    n, d = x.shape
    cap = 1024
    oa = np.empty(cap, np.int64)
    ob = np.empty(cap, np.int64)
    od = np.empty(cap, np.float64)
    m = 0
    for q in range(blocks.shape[0]):
        bi = blocks[q, 0]
        bj = blocks[q, 1]
        i1 = min((bi + 1) * bs, n)
        j0 = bj * bs
        j1 = min(j0 + bs, n)
        for a in range(bi * bs, i1):
            start = a + 1 if bi == bj else j0
            for b in range(start, j1):
                near = True
                for k in range(d):
                    step = cells[a, k] - cells[b, k]
                    if step > reach or step < -reach:
                        near = False
                        break
                if not near:
                    continue
                s = 0.0
                for k in range(d):
                    t = x[a, k] - x[b, k]
                    s += t * t
                if s <= eps2:
                    if m == cap:
                        cap *= 2
                        na = np.empty(cap, np.int64)
                        nb = np.empty(cap, np.int64)
                        nd = np.empty(cap, np.float64)
                        na[:m] = oa[:m]
                        nb[:m] = ob[:m]
                        nd[:m] = od[:m]
                        oa, ob, od = na, nb, nd
                    oa[m] = a
                    ob[m] = b
                    od[m] = s
                    m += 1
    return oa[:m], ob[:m], od[:m]


class _JoinKernel:
    """Partials are lists of arrays; they are concatenated once at the end."""

    def __init__(self, x, cells, block_size, eps2, reach):
        self.x = x
        self.cells = cells
        self.bs = block_size
        self.eps2 = eps2
        self.reach = reach
        n = len(x)
        nb = -(-n // block_size)
        starts = np.arange(nb) * block_size
        self.lo = np.minimum.reduceat(cells, starts, axis=0)
        self.hi = np.maximum.reduceat(cells, starts, axis=0)
        self.domain = GridDomain((nb, nb), mask=self._joinable, box_mask=self._box_joinable)

    def _joinable(self, c):
        bi, bj = c[:, 0], c[:, 1]
        ok = bi <= bj
        r = self.reach
        near = np.all((self.lo[bj] <= self.hi[bi] + r) & (self.lo[bi] <= self.hi[bj] + r), axis=1)
        return ok & near

    def _box_joinable(self, lo, hi):
        (a0, b0), (a1, b1) = lo, hi
        if a0 > b1:
            return False
        r = self.reach
        lo_a, hi_a = self.lo[a0:a1 + 1].min(axis=0), self.hi[a0:a1 + 1].max(axis=0)
        lo_b, hi_b = self.lo[b0:b1 + 1].min(axis=0), self.hi[b0:b1 + 1].max(axis=0)
        return bool(np.all((lo_b <= hi_a + r) & (lo_a <= hi_b + r)))

    def run(self, coords):
        a, b, s = _packet_pairs(self.x, self.cells, np.ascontiguousarray(coords), self.bs,
                                self.eps2, self.reach)
        return [a], [b], [s], len(coords)

    def combine(self, p, q):
        return p[0] + q[0], p[1] + q[1], p[2] + q[2], p[3] + q[3]


@njit(nogil=True, cache=True)
def _pair_order(lo, hi, n):
    """Permutation sorting pairs by (lo, hi): counting sort on lo, then an
    insertion sort of each (short) lo group by hi."""
    m = lo.shape[0]
    start = np.zeros(n + 1, np.int64)
    for q in range(m):
        start[lo[q] + 1] += 1
    for v in range(n):
        start[v + 1] += start[v]
    fill = start[:n].copy()
    order = np.empty(m, np.int64)
    for q in range(m):
        order[fill[lo[q]]] = q
        fill[lo[q]] += 1
    for v in range(n):
        for i in range(start[v] + 1, start[v + 1]):
            cur = order[i]
            j = i - 1
            while j >= start[v] and hi[order[j]] > hi[cur]:
                order[j + 1] = order[j]
                j -= 1
            order[j + 1] = cur
    return order


def _canonical(ids_a, ids_b, d2):
    lo = np.minimum(ids_a, ids_b)
    hi = np.maximum(ids_a, ids_b)
    n = int(hi.max()) + 1 if len(hi) else 1
    order = _pair_order(lo, hi, n)
    pairs = np.stack([lo[order], hi[order]], axis=1).astype(np.int64)
    return pairs, np.sqrt(d2[order])


def _lex_order(cells: np.ndarray) -> np.ndarray:
    """Stable lexicographic row order; one mixed-radix key when it fits in int64."""
    if not len(cells):
        return np.zeros(0, dtype=np.int64)
    base = cells.min(axis=0)
    span = cells.max(axis=0) - base + 1
    if float(np.prod(span.astype(np.float64))) < 2.0 ** 62:
        key = np.zeros(len(cells), dtype=np.int64)
        for k in range(cells.shape[1]):
            key = key * span[k] + (cells[:, k] - base[k])
        return np.argsort(key, kind="stable")
    # lexsort treats the last key as primary
    return np.lexsort(cells.T[::-1])


def epsilon_self_join(points, params, engine: Optional[EngineConfig] = None) -> JoinResult:
    """All pairs ``(a, b)``, ``a < b``, with Euclidean distance ``<= epsilon``."""
    if not isinstance(params, JoinParams):
        params = JoinParams(float(params))
    pts = as_points(points)
    engine = engine or EngineConfig()
    eps = float(params.epsilon)
    empty = JoinResult(np.zeros((0, 2), dtype=np.int64), np.zeros(0), ())
    if pts.n < 2:
        return empty

    if params.dim_permutation == "auto":
        perm = choose_dim_permutation(pts, eps, params.sample_pairs, engine.seed)
    elif params.dim_permutation is None:
        perm = tuple(range(pts.d))
    else:
        perm = _check_permutation(params.dim_permutation, pts.d)

    # zero radius: any positive width works, partners share a cell
    width, reach = (eps, 1) if eps > 0 else (1.0, 0)
    # any width >= eps keeps partners within one cell, so a grid too fine
    # for int64 is coarsened
    width = max(width, float(np.abs(pts.data).max()) / 2.0 ** 52)
    cells = grid_cells(pts.data, width, perm)
    order = _lex_order(cells)
    x = np.ascontiguousarray(pts.data[order][:, list(perm)])
    cells = np.ascontiguousarray(cells[order])

    kernel = _JoinKernel(x, cells, params.block_size, eps * eps, reach)
    curve = engine.order_for(kernel.domain)
    total, report = execute(kernel, curve, engine.plan())
    if total is None:
        empty.permutation, empty.report = perm, report
        return empty
    a, b, d2 = (np.concatenate(v) for v in total[:3])
    blocks = total[3]
    pairs, dist = _canonical(order[a], order[b], d2)
    return JoinResult(pairs, dist, perm, report, blocks)


def brute_force_join(points, epsilon: float, chunk: int = 512):
    """O(n^2) reference: ``(pairs, distances)`` with the same canonical ordering."""
    pts = as_points(points)
    x = pts.data
    eps2 = float(epsilon) ** 2
    out_a, out_b, out_d = [], [], []
    for s in range(0, pts.n, chunk):
        blk = x[s:s + chunk]
        d2 = ((blk[:, None, :] - x[None, :, :]) ** 2).sum(-1)
        ia, ib = np.nonzero(d2 <= eps2)
        ia = ia + s
        keep = ia < ib
        out_a.append(ia[keep])
        out_b.append(ib[keep])
        out_d.append(d2[ia[keep] - s, ib[keep]])
    if not out_a:
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0)
    return _canonical(np.concatenate(out_a), np.concatenate(out_b), np.concatenate(out_d))
