"""Point sets and engine configuration shared by the kernels."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..curves import GridDomain, make_order
from ..scheduler import SchedulePlan

KERNEL_PACKET_SIZE = 256


class DataError(ValueError):
    """Input data violates a kernel precondition (e.g. non-finite values)."""


@dataclass
class PointSet:
    """``n`` records of dimension ``d``; ids are row positions ``0..n-1``."""

    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        if data.ndim != 2 or data.shape[1] < 1:
            raise DataError(f"expected an (n, d) array, got shape {data.shape}")
        if not np.isfinite(data).all():
            raise DataError("point coordinates must be finite")
        self.data = data

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    @property
    def ids(self) -> np.ndarray:
        return np.arange(self.n)


@dataclass
class EngineConfig:
    """Engine knobs for the kernels. A kernel cell is one block, so packets
    default to fewer cells than the scheduler's own default."""

    order: str = "hilbert"
    workers: int = 1
    mode: str = "stealing"
    packet_size: int = KERNEL_PACKET_SIZE
    seed: int = 0
    monotone_dims: tuple = ()

    def plan(self, **overrides) -> SchedulePlan:
        kw = dict(mode=self.mode, workers=self.workers, packet_size=self.packet_size,
                  seed=self.seed)
        kw.update(overrides)
        return SchedulePlan(**kw)

    def order_for(self, domain: GridDomain, monotone_dims=()):
        """Order of the configured kind.

        Required ``monotone_dims`` become the outer scan and the configured
        kind traverses the remaining dimensions. ``rowmajor`` extends them to
        a full lexicographic order.
        """
        free_kind = self.order if self.order in ("hilbert", "zorder") else "hilbert"
        if not monotone_dims:
            if self.order == "composite":
                return make_order(domain, "composite", self.monotone_dims, free_kind)
            return make_order(domain, self.order)
        if self.order == "rowmajor":
            rest = [d for d in range(domain.dims) if d not in monotone_dims]
            return make_order(domain, "composite", list(monotone_dims) + rest)
        return make_order(domain, "composite", monotone_dims, free_kind)

    def to_dict(self) -> dict:
        return asdict(self)


def as_points(points) -> PointSet:
    return points if isinstance(points, PointSet) else PointSet(np.asarray(points))
