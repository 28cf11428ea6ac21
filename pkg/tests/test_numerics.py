import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from proofmarket.numerics import RootError, find_all_roots, find_root, lambert_w, lambert_w_exp


def test_find_root_linear_example():
    r = find_root(lambda s: 1 + s - 3 * (1 - s), 0.0, 1.0)
    assert r.root == pytest.approx(0.5, abs=1e-10) and abs(r.residual) <= 1e-10


def test_find_root_identity():
    assert find_root(lambda x: x, -1.0, 1.0).root == pytest.approx(0.0, abs=1e-10)


def test_find_root_designated_example():
    # 1 + 4s = 5 (1 - s)^2 has the root near 0.3230
    f = lambda s: 1 + 4 * s - 5 * (1 - s) ** 2
    r = find_root(f, 0.0, 1.0, df=lambda s: 4 + 10 * (1 - s))
    assert abs(r.root - 0.3230) < 5e-4 and abs(r.residual) <= 1e-10


def test_find_root_errors():
    with pytest.raises(RootError, match="not bracketed"):
        find_root(lambda x: x * x + 1, -1.0, 1.0)
    with pytest.raises(RootError, match="maximum iterations"):
        find_root(lambda x: math.tanh(50 * (x - 0.3137)), 0.0, 1.0, ftol=0.0, max_iter=3)


@given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(0.01, 5))
def test_find_root_stays_in_bracket(c, left, right):
    lo, hi = c - left, c + right
    f = lambda x: math.atan(x - c)
    r = find_root(f, lo, hi)
    assert lo <= r.root <= hi and abs(r.residual) <= 1e-10


def test_find_all_roots_examples():
    roots = find_all_roots(lambda s: s * (1 - s), 0.0, 1.0, grid=100)
    assert [r.root for r in roots] == pytest.approx([0.0, 1.0], abs=1e-12)
    assert find_all_roots(lambda s: 1.0, 0.0, 1.0) == []


def test_find_all_roots_symmetric_constraint():
    f = lambda s: 5 * s + 10 * (1 - s) ** 5 - 10 * (1 - s) ** 2
    roots = find_all_roots(f, 1e-9, 1 - 1e-9)
    assert len(roots) == 1 and roots[0].root == pytest.approx(0.4735, abs=5e-4)
    assert abs(roots[0].residual) < 1e-9


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5, unique=True))
def test_find_all_roots_polynomials(rts):
    rts = sorted(rts)
    grid = 4096
    if any(b - a <= 2 * 8.0 / grid for a, b in zip(rts, rts[1:])):
        return  # roots closer than the resolution the scan guarantees
    f = lambda x: float(np.prod([x - r for r in rts]))
    found = find_all_roots(f, -4.0, 4.0, grid=grid)
    # roots of even multiplicity are absent here, so every root is a sign change
    assert [r.root for r in found] == pytest.approx(rts, abs=1e-7)


def test_sign_change_survives_underflowing_products():
    # f(0) = -5e-324 times f(grid step) underflows to -0.0
    found = find_all_roots(lambda x: x - 5e-324, -4.0, 4.0)
    assert len(found) == 1 and abs(found[0].root) < 1e-7
    with pytest.raises(RootError):
        find_root(lambda x: 1e-200, 0.0, 1.0)


def test_lambert_w_examples():
    assert lambert_w(0.0) == 0.0
    assert lambert_w(math.e) == pytest.approx(1.0, rel=1e-14)
    w = lambert_w(1.0)
    assert w == pytest.approx(0.5671432904097838, rel=1e-14)
    assert lambert_w(-1 / math.e) == pytest.approx(-1.0, abs=1e-7)
    with pytest.raises(ValueError):
        lambert_w(-0.4)


def test_lambert_w_random_residuals():
    rng = np.random.default_rng(0)
    xs = np.concatenate([rng.uniform(-1 / math.e, 0, 5000), np.exp(rng.uniform(-20, math.log(1e6), 5000))])
    for x in xs:
        w = lambert_w(float(x))
        assert abs(w * math.exp(w) - x) <= 1e-10 * max(abs(x), 1e-300) + 1e-15


def test_lambert_w_exp_large_arguments():
    for L in (500.0, 1e3, 1e5, 1e7):
        w = lambert_w_exp(L)
        assert w + math.log(w) == pytest.approx(L, rel=1e-14)
