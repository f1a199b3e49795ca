import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coloop.curves import (CurveConfigError, CurveKind, CurveOrder, GridDomain, HilbertCursor,
                           band, composite_order, domain_cells, enumerate_cells, hilbert_coord,
                           hilbert_index, hilbert_next, make_order, upper_triangle, z_decode,
                           z_encode)


def l1_steps(cells):
    return np.abs(np.diff(np.asarray(cells), axis=0)).sum(axis=1)


# -- z-order


def test_z_encode_examples():
    assert z_encode((0, 0), 1) == 0
    assert z_encode((2, 3), 2) == 14
    assert z_encode((1, 1, 1), 1) == 7


def test_z_decode_examples():
    assert z_decode(0, 1, 2) == (0, 0)
    assert z_decode(14, 2, 2) == (2, 3)


def test_z_round_trip_exhaustive():
    for o in range(1 << 8):
        assert z_encode(z_decode(o, 4, 2), 4) == o


def test_z_dimension_zero_least_significant():
    assert z_encode((1, 0), 1) == 1
    assert z_encode((0, 1), 1) == 2


def test_z_errors():
    with pytest.raises(ValueError):
        z_encode((4, 0), 2)
    with pytest.raises(ValueError):
        z_encode((-1, 0), 2)
    with pytest.raises(ValueError):
        z_decode(16, 2, 2)


@given(st.integers(1, 4), st.integers(1, 6), st.data())
def test_z_round_trip_property(n, level, data):
    coord = tuple(data.draw(st.integers(0, (1 << level) - 1)) for _ in range(n))
    assert z_decode(z_encode(coord, level), level, n) == coord


# -- hilbert


def recursive_hilbert_2d(level):
    """Classic quadrant recursion (rotate and reflect per level)."""
    def d2xy(side, d):
        x = y = 0
        s, t = 1, d
        while s < side:
            rx = 1 & (t // 2)
            ry = 1 & (t ^ rx)
            if ry == 0:
                if rx == 1:
                    x, y = s - 1 - x, s - 1 - y
                x, y = y, x
            x += s * rx
            y += s * ry
            t //= 4
            s *= 2
        return x, y

    side = 1 << level
    return [d2xy(side, d) for d in range(side * side)]


def test_hilbert_origin_and_level1():
    assert hilbert_coord(0, 3, 2) == (0, 0)
    assert hilbert_coord(0, 2, 4) == (0, 0, 0, 0)
    assert [hilbert_coord(o, 1, 2) for o in range(4)] == [(0, 0), (0, 1), (1, 1), (1, 0)]


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_hilbert_2d_matches_recursive_oracle(level):
    ours = [hilbert_coord(o, level, 2) for o in range(1 << (2 * level))]
    assert ours == recursive_hilbert_2d(level)


def test_hilbert_2d_level3_adjacency():
    cells = [hilbert_coord(o, 3, 2) for o in range(64)]
    assert (l1_steps(cells) == 1).all()
    assert len(set(cells)) == 64


@pytest.mark.parametrize("n,level", [(2, 4), (3, 3), (4, 2), (5, 2), (6, 1)])
def test_hilbert_bijective_and_adjacent(n, level):
    cells = [hilbert_coord(o, level, n) for o in range(1 << (n * level))]
    assert len(set(cells)) == 1 << (n * level)
    assert (l1_steps(cells) == 1).all()
    assert all(hilbert_index(c, level) == o for o, c in enumerate(cells))


def test_hilbert_errors():
    with pytest.raises(ValueError):
        hilbert_coord(0, 3, 1)
    with pytest.raises(ValueError):
        hilbert_coord(64, 3, 2)
    with pytest.raises(ValueError):
        hilbert_index((8, 0), 3)


@given(st.integers(2, 4), st.integers(1, 5), st.data())
def test_hilbert_index_inverse_property(n, level, data):
    o = data.draw(st.integers(0, (1 << (n * level)) - 1))
    assert hilbert_index(hilbert_coord(o, level, n), level) == o


@pytest.mark.parametrize("kind", [CurveKind.HILBERT, CurveKind.ZORDER])
def test_vectorised_maps_agree_with_scalar(kind):
    order = CurveOrder(kind, 3, 3)
    ords = np.arange(order.size)
    cells = order.decode(ords)
    scalar = hilbert_coord if kind is CurveKind.HILBERT else z_decode
    assert [tuple(c) for c in cells.tolist()] == [scalar(o, 3, 3) for o in ords.tolist()]
    assert (order.encode(cells) == ords).all()


# -- cursor


def test_cursor_first_cell_and_exhaustion():
    cur = HilbertCursor(2, 1)
    assert hilbert_next(cur) == (0, 0)
    rest = [hilbert_next(cur) for _ in range(3)]
    assert rest == [(0, 1), (1, 1), (1, 0)]
    assert hilbert_next(cur) is None
    assert hilbert_next(cur) is None


def test_cursor_drain_2d_level2():
    cells = list(HilbertCursor(2, 2))
    assert cells == [hilbert_coord(o, 2, 2) for o in range(16)]
    assert len(set(cells)) == 16


def test_cursor_drain_3d_level2():
    cells = list(HilbertCursor(3, 2))
    assert len(set(cells)) == 64
    assert (l1_steps(cells) == 1).all()


def test_cursor_drain_3d_level3():
    cells = list(HilbertCursor(3, 3))
    assert len(cells) == 512 and len(set(cells)) == 512
    assert (l1_steps(cells) == 1).all()
    assert cells == [hilbert_coord(o, 3, 3) for o in range(512)]


@pytest.mark.parametrize("zorder", [False, True])
def test_cursor_subrange_and_bounds(zorder):
    bounds = (5, 3, 6)
    order = CurveOrder(CurveKind.ZORDER if zorder else CurveKind.HILBERT, 3, 3)
    domain = GridDomain(bounds)
    for start, end in [(0, 512), (7, 300), (100, 101), (450, 512)]:
        got = list(HilbertCursor(3, 3, start, end, bounds, zorder=zorder))
        want = order.cells_in_range(start, end, domain)
        assert got == [tuple(c) for c in want.tolist()]


def test_cursor_skips_out_of_bounds_subcubes():
    # a 1 x 1000 strip inside a 1024^2 hypercube: the cursor must not walk
    # the whole hypercube
    cur = HilbertCursor(2, 10, bounds=(1, 1000))
    calls = 0
    orig = cur._set_digit

    def counting(i, w):
        nonlocal calls
        calls += 1
        orig(i, w)

    cur._set_digit = counting
    cells = list(cur)
    assert len(cells) == 1000
    assert calls < 40 * 1000


# -- enumerate


def test_enumerate_singleton():
    d = GridDomain((1, 1))
    for kind in ("hilbert", "zorder", "rowmajor"):
        assert list(enumerate_cells(d, make_order(d, kind))) == [(0, 0)]


def test_enumerate_3x5_hilbert_level3():
    d = GridDomain((3, 5))
    order = CurveOrder(CurveKind.HILBERT, 3, 2)
    cells = list(enumerate_cells(d, order))
    assert len(cells) == 15
    assert set(cells) == set(map(tuple, d.row_major_cells().tolist()))


def test_enumerate_upper_triangle_zorder():
    d = GridDomain((8, 8), mask=upper_triangle())
    cells = list(enumerate_cells(d, make_order(d, "zorder")))
    assert len(cells) == 36 and len(set(cells)) == 36
    assert all(i <= j for i, j in cells)


def test_enumerate_band_mask():
    d = GridDomain((10, 10), mask=band(1))
    cells = list(enumerate_cells(d, make_order(d, "hilbert")))
    assert set(cells) == {(i, j) for i in range(10) for j in range(10) if abs(i - j) <= 1}


def test_enumerate_too_small_hypercube():
    d = GridDomain((9, 2))
    with pytest.raises(CurveConfigError):
        enumerate_cells(d, CurveOrder(CurveKind.HILBERT, 3, 2))
    with pytest.raises(CurveConfigError):
        make_order(d, "hilbert", level=2)


def test_one_dimensional_domain_is_ascending():
    d = GridDomain((7,))
    for kind in ("hilbert", "zorder"):
        assert list(enumerate_cells(d, make_order(d, kind))) == [(i,) for i in range(7)]


@given(st.lists(st.integers(1, 9), min_size=2, max_size=3),
       st.sampled_from(["hilbert", "zorder", "rowmajor"]), st.booleans())
def test_masked_completeness_property(bounds, kind, masked):
    d = GridDomain(tuple(bounds), mask=upper_triangle() if masked else None)
    order = make_order(d, kind)
    cells = list(enumerate_cells(d, order))
    want = [tuple(c) for c in d.row_major_cells().tolist()]
    assert len(cells) == len(set(cells)) == len(want)
    assert set(cells) == set(want)
    assert cells == [tuple(c) for c in domain_cells(d, order).tolist()]


@given(st.lists(st.integers(1, 6), min_size=2, max_size=3))
def test_emission_follows_ordinals(bounds):
    d = GridDomain(tuple(bounds))
    order = make_order(d, "hilbert")
    cells = domain_cells(d, order)
    assert (np.diff(order.encode(cells)) > 0).all()


# -- composite


def test_composite_dim0_blocks():
    d = GridDomain((4, 4))
    cells = list(enumerate_cells(d, composite_order(d, [0])))
    assert [c[0] for c in cells] == sorted(c[0] for c in cells)


def test_composite_4x4x4_dim2_blocks_hilbert_inside():
    d = GridDomain((4, 4, 4))
    cells = list(enumerate_cells(d, composite_order(d, [2])))
    assert len(cells) == 64
    for block in range(4):
        chunk = cells[16 * block:16 * (block + 1)]
        assert {c[2] for c in chunk} == {block}
        free = [(c[0], c[1]) for c in chunk]
        assert free == [hilbert_coord(o, 2, 2) for o in range(16)]


def test_composite_all_dims_is_row_major():
    d = GridDomain((3, 5))
    cells = list(enumerate_cells(d, composite_order(d, [0, 1])))
    assert cells == [(i, j) for i in range(3) for j in range(5)]
    assert make_order(d, "rowmajor").name == "rowmajor"


def test_composite_single_free_dim_ascending():
    d = GridDomain((3, 4))
    cells = list(enumerate_cells(d, composite_order(d, [1])))
    assert cells == [(i, j) for j in range(4) for i in range(3)]


def test_composite_validation():
    with pytest.raises(CurveConfigError):
        CurveOrder(CurveKind.COMPOSITE, 2, 2)
    with pytest.raises(CurveConfigError):
        CurveOrder(CurveKind.HILBERT, 2, 2, (0,))
    with pytest.raises(CurveConfigError):
        CurveOrder(CurveKind.COMPOSITE, 2, 2, (0, 0))
    with pytest.raises(CurveConfigError):
        CurveOrder(CurveKind.COMPOSITE, 2, 2, (2,))


@given(st.lists(st.integers(1, 5), min_size=2, max_size=3), st.data())
def test_composite_monotony_property(bounds, data):
    n = len(bounds)
    dims = data.draw(st.permutations(range(n)))
    k = data.draw(st.integers(1, n))
    md = list(dims[:k])
    d = GridDomain(tuple(bounds))
    order = composite_order(d, md, data.draw(st.sampled_from(["hilbert", "zorder"])))
    cells = list(enumerate_cells(d, order))
    keys = [tuple(c[m] for m in md) for c in cells]
    assert keys == sorted(keys)
    assert len(set(cells)) == d.volume
    assert cells == [tuple(c) for c in domain_cells(d, order).tolist()]


def _banded_box(width):
    def box(lo, hi):
        # some cell with |i - j| <= width exists in [lo, hi]
        return lo[0] - hi[1] <= width and lo[1] - hi[0] <= width

    return box


@given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 5),
       st.sampled_from(["hilbert", "zorder"]), st.integers(1, 70), st.data())
def test_box_pruning_keeps_every_cell(b0, b1, width, kind, packet, data):
    plain = GridDomain((b0, b1), mask=band(width))
    pruned = GridDomain((b0, b1), mask=band(width), box_mask=_banded_box(width))
    order = make_order(plain, kind)
    start = data.draw(st.integers(0, order.size - 1))
    end = min(order.size, start + packet)
    want = order.decode(np.arange(start, end))
    want = want[plain.contains(want)]
    assert np.array_equal(order.cells_in_range(start, end, pruned), want)
    assert np.array_equal(order.cells_in_range(start, end, plain), want)


def test_box_pruning_skips_outside_bounds():
    d = GridDomain((3, 1000))
    order = make_order(d, "hilbert")
    # packets are pruned at the granularity of their aligned sub-cubes
    decoded = sum(e - s for p in range(0, order.size, 256)
                  for s, e in order._live_runs(p, p + 256, d))
    # only the 16 x 16 sub-squares holding rows 0..2 and columns < 1000 survive
    assert decoded == 63 * 256
    assert len(domain_cells(d, order)) == 3000
