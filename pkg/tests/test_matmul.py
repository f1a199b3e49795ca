import numpy as np
import pytest
from hypothesis import given, strategies as st

from coloop.io import digest
from coloop.kernels import EngineConfig, ShapeError, matmul, matmul_with_report, naive_matmul
from coloop.kernels.matmul import block_nest
from coloop.loops import dependence_check


def rel_err(c, a, b):
    ref = naive_matmul(a, b)
    scale = np.abs(a) @ np.abs(b)
    return float((np.abs(c - ref) / np.maximum(scale, 1e-300)).max())


def test_identity_left():
    b = np.random.default_rng(0).random((37, 23))
    assert np.array_equal(matmul(np.eye(37), b, block_size=8), b)


def test_scalar():
    assert matmul(np.array([[2.0]]), np.array([[3.0]])).tolist() == [[6.0]]


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        matmul(np.zeros((2, 3)), np.zeros((2, 3)))


def test_k_is_inferred_monotone():
    rep = dependence_check(block_nest(3, 3, 3))
    assert rep.required_monotone_dims == [2]
    assert not rep.safe_unordered


@pytest.mark.parametrize("kind", ["hilbert", "zorder", "rowmajor"])
def test_random_128_all_orders(kind):
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((128, 128)), rng.standard_normal((128, 128))
    c, rep = matmul_with_report(a, b, 16, kind)
    assert rel_err(c, a, b) <= 1e-10
    assert rep.phases == 8


def test_bitwise_identical_across_workers():
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal((70, 50)), rng.standard_normal((50, 90))
    digs = {digest(matmul(a, b, 8, engine=EngineConfig(order, p, mode)))
            for order in ("hilbert", "zorder", "rowmajor")
            for p in (1, 2, 4) for mode in ("static", "stealing")}
    assert len(digs) == 1


@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 20), st.integers(1, 9))
def test_random_shapes(m, k, n, bs):
    rng = np.random.default_rng(m * 400 + k * 20 + n)
    a, b = rng.standard_normal((m, k)), rng.standard_normal((k, n))
    assert rel_err(matmul(a, b, bs, engine=EngineConfig(workers=2)), a, b) <= 1e-10
