"""Space-filling-curve traversal orders over n-dimensional integer grids.

Conventions
-----------
All curves live on the enclosing hypercube of side ``2**level`` that covers
the domain. Cells outside the domain (or rejected by its mask) are skipped.

* Z-order: bit ``j`` of coordinate ``d`` lands at ordinal bit ``j*n + d``, so
  dimension 0 is the least significant interleaved bit.
* Hilbert: table-driven form of the Gray-code (Butz/Hamilton) construction.
  The curve starts at the origin, and its first step moves along the last
  dimension. In 2D the level-1 curve is ``(0,0), (0,1), (1,1), (1,0)``.
  Each level is described by a state ``(entry, direction)``. One lookup per
  level yields the child digit's coordinate bits and the next state.
* Composite: the listed monotone dimensions are scanned lexicographically,
  outermost first. The remaining free dimensions are traversed by a Hilbert
  (or Z) curve inside each fixed assignment. With one free dimension it is an
  ascending scan, and with none the order is plain row-major.
* One-dimensional domains always use ascending order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

Mask = Callable[[np.ndarray], np.ndarray]

MAX_HILBERT_DIMS = 8


class CurveKind(str, Enum):
    HILBERT = "hilbert"
    ZORDER = "zorder"
    COMPOSITE = "composite"


class CurveConfigError(ValueError):
    """Raised when an order cannot cover a domain or is ill-formed."""


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class GridDomain:
    """Integer iteration domain ``[0, b0) x [0, b1) x ...`` with optional mask.

    ``mask`` receives an ``(m, n)`` int64 array of coordinates and returns a
    boolean array of length ``m``. ``box_mask(lo, hi)`` is an optional
    conservative test for the inclusive box ``[lo, hi]``. It may return
    True for a box without included cells, but must never return False for
    a box that has one. Traversals use it to skip whole sub-cubes.
    """

    bounds: tuple[int, ...]
    mask: Optional[Mask] = field(default=None, compare=False)
    box_mask: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        bounds = tuple(int(b) for b in self.bounds)
        if not bounds:
            raise CurveConfigError("domain needs at least one dimension")
        if any(b < 1 for b in bounds):
            raise CurveConfigError(f"extents must be >= 1, got {bounds}")
        object.__setattr__(self, "bounds", bounds)

    @property
    def dims(self) -> int:
        return len(self.bounds)

    @property
    def volume(self) -> int:
        return math.prod(self.bounds)

    def contains(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, self.dims)
        ok = np.all((coords >= 0) & (coords < np.asarray(self.bounds)), axis=1)
        if self.mask is not None and ok.any():
            sel = np.flatnonzero(ok)
            ok[sel] = np.asarray(self.mask(coords[sel]), dtype=bool)
        return ok

    def box_may_contain(self, lo, hi) -> bool:
        """Conservative: False only if the inclusive box has no included cell."""
        if any(l >= b for l, b in zip(lo, self.bounds)):
            return False
        if self.box_mask is None:
            return True
        return bool(self.box_mask(lo, tuple(min(h, b - 1) for h, b in zip(hi, self.bounds))))

    def row_major_cells(self) -> np.ndarray:
        """All included cells in row-major order, shape ``(count, dims)``."""
        grids = np.indices(self.bounds).reshape(self.dims, -1).T.astype(np.int64)
        return grids[self.contains(grids)]

    def cell_count(self) -> int:
        if self.mask is None:
            return self.volume
        return len(self.row_major_cells())


def upper_triangle(i: int = 0, j: int = 1) -> Mask:
    """Mask keeping cells with ``coord[i] <= coord[j]``."""

    def mask(c):
        return c[:, i] <= c[:, j]

    return mask


def band(width: int, i: int = 0, j: int = 1) -> Mask:
    """Mask keeping cells with ``|coord[i] - coord[j]| <= width``."""

    def mask(c):
        return np.abs(c[:, i] - c[:, j]) <= width

    return mask


def level_for(bounds: Sequence[int]) -> int:
    """Smallest level whose hypercube side covers every extent."""
    return max(0, (max(bounds) - 1).bit_length())


# ---------------------------------------------------------------------------
# Z-order


def _check_coord(coord, level):
    side = 1 << level
    for c in coord:
        if c < 0 or c >= side:
            raise ValueError(f"coordinate {tuple(coord)} outside hypercube side {side}")


def z_encode(coord: Sequence[int], level: int) -> int:
    coord = [int(c) for c in coord]
    _check_coord(coord, level)
    n = len(coord)
    out = 0
    for j in range(level):
        for d, c in enumerate(coord):
            out |= ((c >> j) & 1) << (j * n + d)
    return out


def z_decode(ordinal: int, level: int, n: int) -> tuple[int, ...]:
    ordinal = int(ordinal)
    if ordinal < 0 or ordinal >= 1 << (level * n):
        raise ValueError(f"ordinal {ordinal} outside [0, 2^{level * n})")
    coord = [0] * n
    for j in range(level):
        for d in range(n):
            coord[d] |= ((ordinal >> (j * n + d)) & 1) << j
    return tuple(coord)


def _z_decode_array(ordinals: np.ndarray, level: int, n: int) -> np.ndarray:
    out = np.zeros((len(ordinals), n), dtype=np.int64)
    for j in range(level):
        for d in range(n):
            out[:, d] |= ((ordinals >> (j * n + d)) & 1) << j
    return out


def _z_encode_array(coords: np.ndarray, level: int) -> np.ndarray:
    n = coords.shape[1]
    out = np.zeros(len(coords), dtype=np.int64)
    for j in range(level):
        for d in range(n):
            out |= ((coords[:, d] >> j) & 1) << (j * n + d)
    return out


# ---------------------------------------------------------------------------
# Hilbert state tables


def _rotl(x: int, r: int, n: int) -> int:
    r %= n
    mask = (1 << n) - 1
    return ((x << r) | (x >> (n - r))) & mask


def _rotr(x: int, r: int, n: int) -> int:
    return _rotl(x, n - (r % n), n)


def _gray(w: int) -> int:
    return w ^ (w >> 1)


def _gray_inverse(g: int) -> int:
    w = g
    shift = 1
    while g >> shift:
        w ^= g >> shift
        shift += 1
    return w


def _trailing_ones(w: int) -> int:
    c = 0
    while w & 1:
        c += 1
        w >>= 1
    return c


def _entry(w: int) -> int:
    return 0 if w == 0 else _gray(2 * ((w - 1) // 2))


def _direction(w: int, n: int) -> int:
    if w == 0:
        return 0
    if w % 2 == 0:
        return _trailing_ones(w - 1) % n
    return _trailing_ones(w) % n


@dataclass(frozen=True)
class _HilbertTables:
    n: int
    # indexed [state, digit]; state = entry * n + direction
    bits: np.ndarray
    child: np.ndarray
    # indexed [state, coordinate-bits] -> digit
    digit: np.ndarray
    bits_list: tuple
    child_list: tuple
    digit_list: tuple


@lru_cache(maxsize=None)
def hilbert_tables(n: int) -> _HilbertTables:
    if n < 2:
        raise ValueError("Hilbert tables need n >= 2")
    if n > MAX_HILBERT_DIMS:
        raise ValueError(f"Hilbert order supports at most {MAX_HILBERT_DIMS} dimensions")
    side = 1 << n
    states = side * n
    bits = np.zeros((states, side), dtype=np.int64)
    child = np.zeros((states, side), dtype=np.int64)
    digit = np.zeros((states, side), dtype=np.int64)
    for e in range(side):
        for d in range(n):
            s = e * n + d
            for w in range(side):
                l = _rotl(_gray(w), d + 1, n) ^ e
                ne = e ^ _rotl(_entry(w), d + 1, n)
                nd = (d + _direction(w, n) + 1) % n
                bits[s, w] = l
                child[s, w] = ne * n + nd
                digit[s, l] = w
    return _HilbertTables(
        n, bits, child, digit,
        tuple(map(tuple, bits.tolist())),
        tuple(map(tuple, child.tolist())),
        tuple(map(tuple, digit.tolist())),
    )


def hilbert_coord(ordinal: int, level: int, n: int) -> tuple[int, ...]:
    """Cell visited at ``ordinal`` along the n-dimensional Hilbert curve."""
    if n < 2:
        raise ValueError("Hilbert curve undefined for n = 1; use ascending order")
    ordinal = int(ordinal)
    if ordinal < 0 or ordinal >= 1 << (level * n):
        raise ValueError(f"ordinal {ordinal} outside [0, 2^{level * n})")
    t = hilbert_tables(n)
    mask = (1 << n) - 1
    coord = [0] * n
    s = 0
    for i in range(level - 1, -1, -1):
        w = (ordinal >> (i * n)) & mask
        l = t.bits_list[s][w]
        for d in range(n):
            coord[d] |= ((l >> d) & 1) << i
        s = t.child_list[s][w]
    return tuple(coord)


def hilbert_index(coord: Sequence[int], level: int) -> int:
    """Inverse of :func:`hilbert_coord`."""
    coord = [int(c) for c in coord]
    n = len(coord)
    if n < 2:
        raise ValueError("Hilbert curve undefined for n = 1; use ascending order")
    _check_coord(coord, level)
    t = hilbert_tables(n)
    s = 0
    h = 0
    for i in range(level - 1, -1, -1):
        l = 0
        for d in range(n):
            l |= ((coord[d] >> i) & 1) << d
        w = t.digit_list[s][l]
        h = (h << n) | w
        s = t.child_list[s][w]
    return h


def _hilbert_decode_array(ordinals: np.ndarray, level: int, n: int) -> np.ndarray:
    t = hilbert_tables(n)
    mask = (1 << n) - 1
    out = np.zeros((len(ordinals), n), dtype=np.int64)
    s = np.zeros(len(ordinals), dtype=np.int64)
    for i in range(level - 1, -1, -1):
        w = (ordinals >> (i * n)) & mask
        l = t.bits[s, w]
        for d in range(n):
            out[:, d] |= ((l >> d) & 1) << i
        s = t.child[s, w]
    return out


def _hilbert_encode_array(coords: np.ndarray, level: int) -> np.ndarray:
    n = coords.shape[1]
    t = hilbert_tables(n)
    out = np.zeros(len(coords), dtype=np.int64)
    s = np.zeros(len(coords), dtype=np.int64)
    for i in range(level - 1, -1, -1):
        l = np.zeros(len(coords), dtype=np.int64)
        for d in range(n):
            l |= ((coords[:, d] >> i) & 1) << d
        w = t.digit[s, l]
        out = (out << n) | w
        s = t.child[s, w]
    return out


# ---------------------------------------------------------------------------
# incremental cursors


class HilbertCursor:
    """Incremental walk over ``[start, end)`` of a Z or Hilbert curve.

    The cursor keeps one ``(state, digit)`` pair per level. Advancing
    increments the lowest non-maximal digit and resets the levels under it,
    so on average fewer than two levels change per step. Sub-cubes that lie
    wholly outside ``bounds`` are skipped in one jump, without visiting their
    cells. Cells in bounds but rejected by ``mask`` are stepped over one at
    a time.
    """

    def __init__(self, n: int, level: int, start: int = 0, end: Optional[int] = None,
                 bounds: Optional[Sequence[int]] = None, mask: Optional[Mask] = None,
                 zorder: bool = False):
        if n < 2 and not zorder:
            raise ValueError("Hilbert curve undefined for n = 1; use ascending order")
        self.n = n
        self.level = level
        size = 1 << (level * n)
        self.end = size if end is None else min(int(end), size)
        self.bounds = tuple(bounds) if bounds is not None else (1 << level,) * n
        self.mask = mask
        self._zorder = zorder
        self._maxd = (1 << n) - 1
        self._tables = None if zorder else hilbert_tables(n)
        self._state = [0] * (level + 1)
        self._digit = [0] * level
        self._coord = [0] * n
        self.ordinal = int(start)
        self._done = self.ordinal >= self.end or level == 0 and self.ordinal > 0
        self._fresh = True
        if not self._done and level > 0:
            self._seek(self.ordinal)

    # -- digit bookkeeping
    def _set_digit(self, i: int, w: int):
        self._digit[i] = w
        if self._zorder:
            l = w
        else:
            s = self._state[i + 1]
            l = self._tables.bits_list[s][w]
            self._state[i] = self._tables.child_list[s][w]
        bit = 1 << i
        coord = self._coord
        for d in range(self.n):
            if (l >> d) & 1:
                coord[d] |= bit
            else:
                coord[d] &= ~bit

    def _outside(self, i: int) -> bool:
        # sub-cube at level i: bits >= i of the coordinate are fixed
        for c, b in zip(self._coord, self.bounds):
            if (c >> i) << i >= b:
                return True
        return False

    def _seek(self, ordinal: int):
        L = self.level
        self._state[L] = 0
        for i in range(L - 1, -1, -1):
            self._set_digit(i, (ordinal >> (i * self.n)) & self._maxd)
        for i in range(L - 1, -1, -1):
            if self._outside(i):
                self._skip_from(i)
                return

    def _skip_from(self, i: int) -> bool:
        """Move to the first in-bounds cell after the current level-i sub-cube."""
        n, L = self.n, self.level
        while True:
            while i < L and self._digit[i] == self._maxd:
                i += 1
            if i == L:
                self._done = True
                return False
            self._set_digit(i, self._digit[i] + 1)
            self.ordinal = ((self.ordinal >> (i * n)) + 1) << (i * n)
            if self.ordinal >= self.end:
                self._done = True
                return False
            while not self._outside(i):
                if i == 0:
                    return True
                i -= 1
                self._set_digit(i, 0)

    def _accept(self) -> bool:
        if self.mask is None:
            return True
        return bool(self.mask(np.asarray([self._coord], dtype=np.int64))[0])

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return self

    def __next__(self) -> tuple[int, ...]:
        while True:
            if self._done:
                raise StopIteration
            if self._fresh:
                self._fresh = False
            elif self.level == 0 or not self._skip_from(0):
                self._done = True
                raise StopIteration
            if self._accept():
                return tuple(self._coord)


def hilbert_next(cursor: HilbertCursor) -> Optional[tuple[int, ...]]:
    """Advance ``cursor``; returns ``None`` once the sequence is exhausted."""
    return next(cursor, None)


# ---------------------------------------------------------------------------
# orders


@dataclass(frozen=True)
class CurveOrder:
    """A traversal order over the enclosing hypercube of side ``2**level``."""

    kind: CurveKind
    level: int
    n: int
    monotone_dims: tuple[int, ...] = ()
    free_kind: CurveKind = CurveKind.HILBERT

    def __post_init__(self):
        object.__setattr__(self, "kind", CurveKind(self.kind))
        object.__setattr__(self, "free_kind", CurveKind(self.free_kind))
        object.__setattr__(self, "monotone_dims", tuple(int(m) for m in self.monotone_dims))
        if self.level < 0 or self.n < 1:
            raise CurveConfigError("level must be >= 0 and n >= 1")
        if self.kind is CurveKind.COMPOSITE:
            md = self.monotone_dims
            if not md:
                raise CurveConfigError("composite order needs monotone dimensions")
            if len(set(md)) != len(md) or any(m < 0 or m >= self.n for m in md):
                raise CurveConfigError(f"bad monotone dims {md} for n={self.n}")
            if self.free_kind is CurveKind.COMPOSITE:
                raise CurveConfigError("free dimensions need a Hilbert or Z curve")
        elif self.monotone_dims:
            raise CurveConfigError(f"{self.kind.value} order takes no monotone dims")
        if self.kind is CurveKind.HILBERT and self.n > MAX_HILBERT_DIMS:
            raise CurveConfigError(f"Hilbert order supports at most {MAX_HILBERT_DIMS} dims")

    @property
    def side(self) -> int:
        return 1 << self.level

    @property
    def size(self) -> int:
        return 1 << (self.level * self.n)

    @property
    def free_dims(self) -> tuple[int, ...]:
        return tuple(d for d in range(self.n) if d not in self.monotone_dims)

    @property
    def slab_size(self) -> int:
        """Ordinals sharing one assignment of the monotone dimensions."""
        if self.kind is not CurveKind.COMPOSITE:
            return self.size
        return 1 << (self.level * len(self.free_dims))

    @property
    def name(self) -> str:
        if self.kind is CurveKind.COMPOSITE:
            if self.monotone_dims == tuple(range(self.n)):
                return "rowmajor"
            return f"composite{list(self.monotone_dims)}/{self.free_kind.value}"
        return self.kind.value

    def covers(self, domain: GridDomain) -> bool:
        return domain.dims == self.n and max(domain.bounds) <= self.side

    # -- scalar maps
    def coord(self, ordinal: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.decode(np.asarray([ordinal], dtype=np.int64))[0])

    def ordinal(self, coord: Sequence[int]) -> int:
        coord = [int(c) for c in coord]
        if len(coord) != self.n:
            raise ValueError("coordinate dimensionality mismatch")
        _check_coord(coord, self.level)
        if self.kind is CurveKind.COMPOSITE:
            free = [coord[d] for d in self.free_dims]
            lex = 0
            for m in self.monotone_dims:
                lex = lex * self.side + coord[m]
            return lex * self.slab_size + _curve_ordinal(free, self.level, self.free_kind)
        return _curve_ordinal(coord, self.level, self.kind)

    # -- vectorised decode
    def decode(self, ordinals: np.ndarray) -> np.ndarray:
        """Map an array of ordinals to an ``(m, n)`` coordinate array."""
        if self.level * self.n > 62:
            raise CurveConfigError("vectorised decode limited to 62 ordinal bits")
        ordinals = np.asarray(ordinals, dtype=np.int64)
        if len(ordinals) and (ordinals.min() < 0 or ordinals.max() >= self.size):
            raise ValueError("ordinal outside the hypercube")
        if self.kind is CurveKind.COMPOSITE:
            out = np.zeros((len(ordinals), self.n), dtype=np.int64)
            free = self.free_dims
            out[:, list(free)] = _curve_decode(ordinals % self.slab_size, self.level,
                                               len(free), self.free_kind)
            lex = ordinals // self.slab_size
            for m in reversed(self.monotone_dims):
                out[:, m] = lex % self.side
                lex = lex // self.side
            return out
        return _curve_decode(ordinals, self.level, self.n, self.kind)

    def encode(self, coords: np.ndarray) -> np.ndarray:
        """Vectorised inverse of :meth:`decode`."""
        if self.level * self.n > 62:
            raise CurveConfigError("vectorised encode limited to 62 ordinal bits")
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, self.n)
        if len(coords) and (coords.min() < 0 or coords.max() >= self.side):
            raise ValueError("coordinate outside the hypercube")
        if self.kind is CurveKind.COMPOSITE:
            lex = np.zeros(len(coords), dtype=np.int64)
            for m in self.monotone_dims:
                lex = lex * self.side + coords[:, m]
            free = coords[:, list(self.free_dims)]
            return lex * self.slab_size + _curve_encode(free, self.level, self.free_kind)
        return _curve_encode(coords, self.level, self.kind)

    def cells_in_range(self, start: int, end: int, domain: GridDomain) -> np.ndarray:
        """Domain cells with ordinal in ``[start, end)``, in curve order."""
        parts = []
        for s, e in self._live_runs(start, end, domain):
            coords = self.decode(np.arange(s, e, dtype=np.int64))
            parts.append(coords[domain.contains(coords)])
        if not parts:
            return np.zeros((0, self.n), dtype=np.int64)
        return parts[0] if len(parts) == 1 else np.concatenate(parts)

    def _live_runs(self, start: int, end: int, domain: GridDomain):
        """Split ``[start, end)`` into aligned sub-cubes, dropping those that
        cannot hold a domain cell. Adjacent survivors are merged."""
        if self.kind is CurveKind.COMPOSITE or end - start < 2:
            yield start, end
            return
        n = self.n
        run = None
        pos = start
        while pos < end:
            # largest aligned sub-cube (2**(n*k) ordinals) starting at pos
            k = 0
            while k < self.level and pos % (1 << (n * (k + 1))) == 0 \
                    and pos + (1 << (n * (k + 1))) <= end:
                k += 1
            size = 1 << (n * k)
            lo = [(c >> k) << k for c in _curve_coord(pos, self.level, n, self.kind)]
            hi = [c + (1 << k) - 1 for c in lo]
            if domain.box_may_contain(lo, hi):
                if run is not None and run[1] == pos:
                    run = (run[0], pos + size)
                else:
                    if run is not None:
                        yield run
                    run = (pos, pos + size)
            pos += size
        if run is not None:
            yield run

    def cursor(self, domain: GridDomain, start: int = 0, end: Optional[int] = None):
        """Incremental iterator over domain cells in ``[start, end)``."""
        if not self.covers(domain):
            raise CurveConfigError("order does not cover domain")
        end = self.size if end is None else end
        if self.kind is CurveKind.COMPOSITE:
            return _composite_cells(self, domain, start, end)
        if self.n == 1:
            return _ascending_cells(domain, start, end)
        return HilbertCursor(self.n, self.level, start, end, domain.bounds, domain.mask,
                             zorder=self.kind is CurveKind.ZORDER)


def _curve_ordinal(coord, level, kind):
    if len(coord) == 0:
        return 0
    if len(coord) == 1:
        return coord[0]
    if kind is CurveKind.ZORDER:
        return z_encode(coord, level)
    return hilbert_index(coord, level)


def _curve_decode(ordinals, level, n, kind):
    if n == 0:
        return np.zeros((len(ordinals), 0), dtype=np.int64)
    if n == 1:
        return ordinals.reshape(-1, 1).copy()
    if kind is CurveKind.ZORDER:
        return _z_decode_array(ordinals, level, n)
    return _hilbert_decode_array(ordinals, level, n)


def _curve_coord(ordinal, level, n, kind):
    if n == 1:
        return (ordinal,)
    if kind is CurveKind.ZORDER:
        return z_decode(ordinal, level, n)
    return hilbert_coord(ordinal, level, n)


def _curve_encode(coords, level, kind):
    n = coords.shape[1]
    if n == 0:
        return np.zeros(len(coords), dtype=np.int64)
    if n == 1:
        return coords[:, 0].copy()
    if kind is CurveKind.ZORDER:
        return _z_encode_array(coords, level)
    return _hilbert_encode_array(coords, level)


def _ascending_cells(domain, start, end):
    for i in range(max(start, 0), min(end, domain.bounds[0])):
        if domain.mask is None or domain.contains(np.asarray([[i]]))[0]:
            yield (i,)


def _composite_cells(order: CurveOrder, domain: GridDomain, start: int, end: int):
    md, fd = order.monotone_dims, order.free_dims
    slab = order.slab_size
    free_domain = GridDomain(tuple(domain.bounds[d] for d in fd)) if fd else None
    first, last = start // slab, (end - 1) // slab
    for lex in range(first, last + 1):
        mono = []
        rest = lex
        for _ in md:
            mono.append(rest % order.side)
            rest //= order.side
        mono.reverse()
        if any(v >= domain.bounds[m] for v, m in zip(mono, md)):
            continue
        lo = max(start - lex * slab, 0)
        hi = min(end - lex * slab, slab)
        if fd:
            sub = CurveOrder(order.free_kind if len(fd) > 1 else CurveKind.HILBERT,
                             order.level, len(fd))
            free_iter = sub.cursor(free_domain, lo, hi)
        else:
            free_iter = iter([()]) if lo == 0 else iter([])
        for free in free_iter:
            c = [0] * order.n
            for v, m in zip(mono, md):
                c[m] = v
            for v, d in zip(free, fd):
                c[d] = v
            if domain.mask is None or domain.contains(np.asarray([c]))[0]:
                yield tuple(c)


# ---------------------------------------------------------------------------
# constructors


def make_order(domain: GridDomain, kind: str = "hilbert",
               monotone_dims: Sequence[int] = (), free_kind: str = "hilbert",
               level: Optional[int] = None) -> CurveOrder:
    """Build an order covering ``domain``.

    ``kind`` accepts ``hilbert``, ``zorder``, ``rowmajor`` or ``composite``.
    ``rowmajor`` is the composite order over all dimensions.
    """
    need = level_for(domain.bounds)
    level = need if level is None else level
    if level < need:
        raise CurveConfigError(f"level {level} too small for bounds {domain.bounds}")
    kind = kind.lower()
    if kind == "rowmajor":
        return CurveOrder(CurveKind.COMPOSITE, level, domain.dims, tuple(range(domain.dims)))
    if kind == "composite":
        return composite_order(domain, monotone_dims, free_kind, level)
    return CurveOrder(CurveKind(kind), level, domain.dims)


def composite_order(domain: GridDomain, monotone_dims: Sequence[int],
                    free_kind: str = "hilbert", level: Optional[int] = None) -> CurveOrder:
    """Order that scans ``monotone_dims`` lexicographically (listed priority first).

    Listing every dimension degenerates to row-major order over that priority.
    """
    need = level_for(domain.bounds)
    level = need if level is None else level
    if level < need:
        raise CurveConfigError(f"level {level} too small for bounds {domain.bounds}")
    return CurveOrder(CurveKind.COMPOSITE, level, domain.dims, tuple(monotone_dims),
                      CurveKind(free_kind))


def enumerate_cells(domain: GridDomain, order: CurveOrder) -> Iterator[tuple[int, ...]]:
    """Every included domain cell exactly once, in the order's sequence."""
    if not order.covers(domain):
        raise CurveConfigError(
            f"order hypercube side {order.side} (n={order.n}) does not cover {domain.bounds}")
    return order.cursor(domain)


def domain_cells(domain: GridDomain, order: CurveOrder, chunk: int = 1 << 16) -> np.ndarray:
    """Vectorised counterpart of :func:`enumerate_cells` as an ``(m, n)`` array."""
    if not order.covers(domain):
        raise CurveConfigError("order does not cover domain")
    parts = [order.cells_in_range(s, min(s + chunk, order.size), domain)
             for s in range(0, order.size, chunk)]
    return np.concatenate(parts) if parts else np.zeros((0, domain.dims), dtype=np.int64)
