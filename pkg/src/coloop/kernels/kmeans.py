"""Lloyd k-means on the loop engine.

Each iteration makes two passes:

* assignment: 2D domain of (point block, centroid block) cells. A cell finds
  each point's nearest centroid inside its centroid block. Partials merge by
  elementwise minimum, with ties going to the lower centroid index.
* update: 1D domain over point blocks. Per-cluster coordinate sums and
  counts are folded along the packet tree, so the centroids are bit-identical
  for any worker count.

An empty cluster takes as its new centroid the point farthest from its own
assigned centroid (lowest point index on ties). If several clusters are
empty, they are handled in ascending order, and a point chosen once is not
chosen again in the same iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..curves import GridDomain
from ..scheduler import execute
from .common import EngineConfig, PointSet, as_points


class KMeansConfigError(ValueError):
    pass


@dataclass
class KMeansModel:
    k: int
    centroids: np.ndarray
    assignment: np.ndarray
    inertia: float
    n_iter: int = 0
    converged: bool = False
    inertia_history: list = field(default_factory=list)
    reports: list = field(default_factory=list, repr=False)


def init_indices(n: int, k: int, seed: int) -> np.ndarray:
    """``k`` distinct point indices, drawn with a seeded generator."""
    return np.random.default_rng(seed).choice(n, size=k, replace=False)


def reseed_empty(x, centroids, labels, d2, counts):
    """Move the centroid of every empty cluster onto the farthest remaining point."""
    empty = np.flatnonzero(counts == 0)
    if not len(empty):
        return centroids
    centroids = centroids.copy()
    taken = np.zeros(len(x), dtype=bool)
    for c in empty:
        cand = np.where(taken, -np.inf, d2)
        far = int(np.argmax(cand))
        taken[far] = True
        centroids[c] = x[far]
    return centroids


class _AssignKernel:
    def __init__(self, x, centroids, point_block, centroid_block):
        self.x = x
        self.c = centroids
        self.pb = point_block
        self.cb = centroid_block
        self.domain = GridDomain((-(-len(x) // point_block), -(-len(centroids) // centroid_block)))

    def run(self, coords):
        out = {}
        for p, q in coords.tolist():
            xs = self.x[p * self.pb:(p + 1) * self.pb]
            q0 = q * self.cb
            cs = self.c[q0:q0 + self.cb]
            d2 = ((xs[:, None, :] - cs[None, :, :]) ** 2).sum(-1)
            idx = np.argmin(d2, axis=1)
            best = (d2[np.arange(len(xs)), idx], idx + q0)
            out[p] = _merge_best(out[p], best) if p in out else best
        return out

    def combine(self, a, b):
        out = dict(a)
        for p, best in b.items():
            out[p] = _merge_best(out[p], best) if p in out else best
        return out


def _merge_best(a, b):
    da, ia = a
    db, ib = b
    take_b = (db < da) | ((db == da) & (ib < ia))
    return np.where(take_b, db, da), np.where(take_b, ib, ia)


class _UpdateKernel:
    def __init__(self, x, labels, k, point_block):
        self.x = x
        self.labels = labels
        self.k = k
        self.pb = point_block
        self.domain = GridDomain((-(-len(x) // point_block),))

    def run(self, coords):
        sums = np.zeros((self.k, self.x.shape[1]))
        counts = np.zeros(self.k, dtype=np.int64)
        for (p,) in coords.tolist():
            sl = slice(p * self.pb, (p + 1) * self.pb)
            lab = self.labels[sl]
            np.add.at(sums, lab, self.x[sl])
            counts += np.bincount(lab, minlength=self.k)
        return sums, counts

    def combine(self, a, b):
        return a[0] + b[0], a[1] + b[1]


def _assign(x, centroids, engine, point_block, centroid_block):
    kernel = _AssignKernel(x, centroids, point_block, centroid_block)
    best, report = execute(kernel, engine.order_for(kernel.domain), engine.plan())
    blocks = sorted(best)
    d2 = np.concatenate([best[p][0] for p in blocks])
    labels = np.concatenate([best[p][1] for p in blocks]).astype(np.int64)
    return labels, d2, report


def _update(x, labels, k, engine, point_block):
    kernel = _UpdateKernel(x, labels, k, point_block)
    (sums, counts), report = execute(kernel, engine.order_for(kernel.domain), engine.plan())
    return sums, counts, report


def kmeans(points, k: int, init_seed: int = 0, max_iters: int = 100,
           engine: Optional[EngineConfig] = None, point_block: int = 64,
           centroid_block: int = 16) -> KMeansModel:
    pts = as_points(points)
    if k < 1 or k > pts.n:
        raise KMeansConfigError(f"need 1 <= k <= n, got k={k}, n={pts.n}")
    if max_iters < 1:
        raise KMeansConfigError("max_iters must be >= 1")
    engine = engine or EngineConfig()
    x = pts.data
    centroids = x[init_indices(pts.n, k, init_seed)].copy()
    labels = None
    history, reports = [], []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        new_labels, d2, rep = _assign(x, centroids, engine, point_block, centroid_block)
        reports.append(rep)
        history.append(float(d2.sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
        sums, counts, rep = _update(x, labels, k, engine, point_block)
        reports.append(rep)
        means = sums / np.maximum(counts, 1)[:, None]
        centroids = np.where(counts[:, None] > 0, means, centroids)
        centroids = reseed_empty(x, centroids, labels, d2, counts)
    if not converged:
        d2 = ((x - centroids[labels]) ** 2).sum(-1)
        history.append(float(d2.sum()))
    return KMeansModel(k, centroids, labels, history[-1], it, converged, history, reports)


def lloyd_reference(points, k: int, init_seed: int = 0, max_iters: int = 100) -> KMeansModel:
    """Plain sequential Lloyd with the same initialisation and rules."""
    x = as_points(points).data
    n = len(x)
    centroids = x[init_indices(n, k, init_seed)].copy()
    labels = None
    history = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        d2 = np.empty((n, k))
        for j in range(k):
            d2[:, j] = ((x - centroids[j]) ** 2).sum(axis=1)
        new_labels = np.argmin(d2, axis=1)
        best = d2[np.arange(n), new_labels]
        history.append(float(best.sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
        counts = np.bincount(labels, minlength=k)
        taken = set()
        for j in range(k):
            if counts[j]:
                centroids[j] = x[labels == j].mean(axis=0)
                continue
            far = max((i for i in range(n) if i not in taken), key=lambda i: (best[i], -i))
            taken.add(far)
            centroids[j] = x[far]
    if not converged:
        best = ((x - centroids[labels]) ** 2).sum(-1)
        history.append(float(best.sum()))
    return KMeansModel(k, centroids, labels, history[-1], it, converged, history)
