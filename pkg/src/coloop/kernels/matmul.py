"""Blocked matrix multiplication over a monotony-constrained curve order.

The iteration space is the 3D block grid ``(I, J, K)`` with
``C[I, J] += A[I, K] @ B[K, J]``. Floating-point accumulation is not
associative, so the block-level nest is dependence checked. Analysis finds
that ``K`` must be monotone, and the engine then runs one ``K`` slab at a
time, traversing the ``(I, J)`` blocks of each slab in the requested curve
order. Each C block therefore accumulates its K blocks in ascending order,
whatever the worker count.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..curves import GridDomain
from ..loops import (DEFAULT_BUDGET, FLOAT_SUM, AffineMap, LoopNest, dependence_check,
                     read, reduce)
from ..scheduler import execute
from .common import EngineConfig


class ShapeError(ValueError):
    pass


def block_nest(mb: int, nb: int, kb: int) -> LoopNest:
    """Access declaration of the block-level product loop."""
    return LoopNest(
        GridDomain((mb, nb, kb)),
        [
            read("A", AffineMap([[1, 0, 0], [0, 0, 1]])),
            read("B", AffineMap([[0, 0, 1], [0, 1, 0]])),
            reduce("C", FLOAT_SUM, AffineMap([[1, 0, 0], [0, 1, 0]])),
        ],
        name="matmul",
    )


class _MatmulKernel:
    def __init__(self, a, b, c, bs, dependences):
        self.a, self.b, self.c, self.bs = a, b, c, bs
        m, k = a.shape
        n = b.shape[1]
        self.domain = GridDomain((-(-m // bs), -(-n // bs), -(-k // bs)))
        self.dependences = dependences

    def run(self, coords):
        bs = self.bs
        for i, j, k in coords.tolist():
            ri = slice(i * bs, (i + 1) * bs)
            rj = slice(j * bs, (j + 1) * bs)
            rk = slice(k * bs, (k + 1) * bs)
            self.c[ri, rj] += self.a[ri, rk] @ self.b[rk, rj]


def matmul_with_report(a, b, block_size: int = 32, order_kind: Optional[str] = None,
                       engine: Optional[EngineConfig] = None):
    """``(A @ B, ExecutionReport)``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("matrices must be finite")
    if block_size < 1:
        raise ShapeError("block_size must be >= 1")
    engine = engine or EngineConfig()
    if order_kind is not None:
        engine = EngineConfig(**{**engine.to_dict(), "order": order_kind})
    c = np.zeros((a.shape[0], b.shape[1]))
    grid = tuple(-(-s // block_size) for s in (a.shape[0], b.shape[1], a.shape[1]))
    # the dependence structure does not depend on the extents, so large grids
    # are analysed at a reduced size
    nest = block_nest(*grid)
    if nest.domain.volume > DEFAULT_BUDGET:
        nest = block_nest(*(min(g, 4) for g in grid))
    deps = dependence_check(nest)
    monotone = deps.required_monotone_dims
    kernel = _MatmulKernel(a, b, c, block_size, deps)
    _, report = execute(kernel, engine.order_for(kernel.domain, monotone), engine.plan())
    return c, report


def matmul(a, b, block_size: int = 32, order_kind: Optional[str] = None,
           engine: Optional[EngineConfig] = None) -> np.ndarray:
    return matmul_with_report(a, b, block_size, order_kind, engine)[0]


def naive_matmul(a, b) -> np.ndarray:
    """Triple-loop reference product."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, kk = a.shape
    n = b.shape[1]
    al, bt = a.tolist(), b.T.tolist()
    out = [[0.0] * n for _ in range(m)]
    for i in range(m):
        row = al[i]
        for j in range(n):
            col = bt[j]
            s = 0.0
            for k in range(kk):
                s += row[k] * col[k]
            out[i][j] = s
    return np.asarray(out)
