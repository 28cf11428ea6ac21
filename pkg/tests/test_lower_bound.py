import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from proofmarket.core import ShapeKind, StrategyProfile, validate_params
from proofmarket.lower_bound import (designated_branch, eval_g, grid_oracle_minimize_g,
                                     minimize_designated_star, minimize_g,
                                     minimize_symmetric_star, symmetric_branch_roots,
                                     verify_branch_equality)


def ref_designated(h, n, C, B=0.0):
    """Independent D*: scipy brentq on each committee constraint."""
    a, best = n - h, math.inf
    for hj in range(1, h + 1):
        k = hj + a - 1
        f = lambda s: 1 + k * s - (C * (1 - s) ** hj - B)
        best = min(best, 1.0 if f(0) >= 0 else 1 + k * brentq(f, 0, 1, xtol=1e-15))
    return best


def ref_symmetric(h, n, C, B=0.0):
    a, best = n - h, math.inf
    xs = np.linspace(1e-12, 1 - 1e-12, 20001)
    for hk in range(1, h + 1):
        k = hk + a
        f = lambda s: k * s + C * (1 - s) ** k - C * (1 - s) ** hk + B
        v = f(xs)
        for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
            s = brentq(f, xs[i], xs[i + 1], xtol=1e-15)
            best = min(best, C * (1 - s) ** hk - B)
    return best


def test_eval_g_examples():
    ev = eval_g(validate_params(2, 3, 2.0), StrategyProfile((1.0, 0.0, 0.0)))
    assert (ev.left, ev.right, ev.g) == (1.0, 2.0, 2.0)
    ev = eval_g(validate_params(2, 5, 5.0), StrategyProfile((1.0,) + (0.323,) * 4))
    assert ev.g == pytest.approx(2.292, abs=2e-3) and abs(ev.left - ev.right) < 2e-3
    ev = eval_g(validate_params(2, 5, 5.0, 1.5), StrategyProfile((0.0,) * 5))
    assert (ev.left, ev.right, ev.g) == (5.0, 3.5, 5.0)


def test_eval_g_rejects_non_canonical():
    with pytest.raises(ValueError):
        eval_g(validate_params(1, 2, 3.0), [0.2, 0.5])


@given(st.integers(1, 5), st.integers(1, 4), st.floats(1.01, 100), st.floats(0, 5), st.data())
def test_eval_g_structure(h, a, C, B, data):
    n = h + a
    s = sorted(data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)), reverse=True)
    ev = eval_g(validate_params(h, n, C, B), StrategyProfile(tuple(s)))
    assert ev.g == max(ev.left, ev.right)
    assert ev.left >= sum(s) - 1e-12
    assert ev.right == pytest.approx(C * ev.pi_H - B)
    assert 0 <= ev.pi_A <= 1 and 0 <= ev.pi_H <= 1


@pytest.mark.parametrize("h, n, C, hj, s, loss", [
    (1, 2, 3.0, 1, 0.5, 1.5),
    (3, 4, 15.0, 1, 0.875, 1.875),
])
def test_designated_examples(h, n, C, hj, s, loss):
    opt = minimize_designated_star(validate_params(h, n, C))
    assert opt.honest_committee == hj and opt.shape.s == pytest.approx(s) and opt.loss == pytest.approx(loss)


def test_designated_two_of_five_penalty_five():
    opt = minimize_designated_star(validate_params(2, 5, 5.0))
    assert opt.honest_committee == 2 and opt.shape.k == 4
    assert opt.shape.s == pytest.approx(0.323, abs=5e-3)
    assert opt.loss == pytest.approx(1 + 4 * opt.shape.s, abs=1e-12)


def test_designated_degenerate_when_stake_covers_penalty():
    opt = minimize_designated_star(validate_params(2, 5, 3.0, 2.5))
    assert opt.loss == 1.0 and opt.shape.k == 0 and opt.shape.s == 0.0


def test_symmetric_examples():
    roots = symmetric_branch_roots(validate_params(2, 5, 10.0), 2)
    assert len(roots) == 1
    assert roots[0].shape.s == pytest.approx(0.4735, abs=5e-4) and roots[0].loss == pytest.approx(2.772, abs=5e-4)
    assert roots[0].constraint_residual < 1e-9
    assert minimize_symmetric_star(validate_params(1, 2, 3.0)).loss == pytest.approx(2.0)
    assert minimize_symmetric_star(validate_params(1, 3, 1.4)).loss == math.inf


def test_minimize_g_examples():
    opt = minimize_g(validate_params(2, 5, 5.0))
    assert opt.kind is ShapeKind.DESIGNATED and opt.shape.k == 4
    assert verify_branch_equality(validate_params(2, 5, 5.0), opt.expand()) < 1e-8
    assert minimize_g(validate_params(2, 5, 10.0)).kind is ShapeKind.SYMMETRIC
    for n, C in itertools.product([2, 3, 6], [1.1, 3.0, 50.0, 1e4]):
        assert minimize_g(validate_params(n - 1, n, C)).kind is ShapeKind.DESIGNATED


def test_verify_branch_equality_examples():
    p = validate_params(2, 5, 10.0)
    assert verify_branch_equality(p, StrategyProfile((1.0,) * 5)) == pytest.approx(5.0)
    assert verify_branch_equality(p, StrategyProfile((0.926,) * 4 + (0.0,))) == pytest.approx(2.96, abs=5e-3)


def test_two_of_five_larger_penalties_pin_computed_roots():
    # s = 0.4735 balances the branches at C=10, not at C=7
    opt7 = minimize_g(validate_params(2, 5, 7.0))
    assert opt7.kind is ShapeKind.SYMMETRIC and opt7.shape.s == pytest.approx(0.39725, abs=1e-4)
    opt10 = minimize_g(validate_params(2, 5, 10.0))
    assert opt10.shape.s == pytest.approx(0.4735, abs=1e-4) and opt10.loss == pytest.approx(2.77206, abs=1e-4)


@pytest.mark.parametrize("h, n, C, shape", [(1, 3, 2.0, ShapeKind.DESIGNATED), (1, 3, 5.0, ShapeKind.SYMMETRIC)])
def test_grid_oracle_figure_markers(h, n, C, shape):
    opt = grid_oracle_minimize_g(validate_params(h, n, C), 100)
    assert opt.kind is shape


def test_grid_oracle_rejects_large_instances():
    with pytest.raises(ValueError):
        grid_oracle_minimize_g(validate_params(2, 9, 5.0))
    with pytest.raises(ValueError):
        grid_oracle_minimize_g(validate_params(2, 5, 5.0), grid=500)


def test_grid_oracle_matches_brute_force_on_tiny_grid():
    p = validate_params(1, 3, 4.0)
    grid = 12
    best = math.inf
    for combo in itertools.combinations_with_replacement(range(grid + 1), 3):
        s = tuple(sorted((c / grid for c in combo), reverse=True))
        best = min(best, eval_g(p, StrategyProfile(s)).g)
    assert grid_oracle_minimize_g(p, grid).loss == pytest.approx(best, abs=1e-12)


GRID = list(itertools.product(range(1, 7), range(2, 9), [1.5, 2.0, 5.0, 10.0, 50.0, 1e3, 1e5], [0.0, 1.0, 10.0]))
GRID = [(h, n, C, B) for h, n, C, B in GRID if n > h]


def test_shape_minimum_against_grid_oracle_everywhere():
    for h, n, C, B in GRID:
        p = validate_params(h, n, C, B)
        m = minimize_g(p)
        o = grid_oracle_minimize_g(p, 100)
        assert m.loss <= o.loss + 1e-9, (h, n, C, B)
        assert o.loss <= m.loss + n / 100, (h, n, C, B)
        if C - B > 1:
            assert verify_branch_equality(p, m.expand()) < 1e-8, (h, n, C, B)


@given(st.integers(1, 8), st.integers(1, 8), st.floats(1.01, 1e4), st.floats(0, 20))
def test_shape_optima_match_independent_root_solver(h, a, C, B):
    n = h + a
    p = validate_params(h, n, C, B)
    assert minimize_designated_star(p).loss == pytest.approx(ref_designated(h, n, C, B), rel=1e-9)
    s_ref = ref_symmetric(h, n, C, B)
    s_got = minimize_symmetric_star(p).loss
    if math.isfinite(s_ref):
        assert s_got <= s_ref + 1e-9 * max(1, abs(s_ref))


@given(st.integers(1, 6), st.integers(1, 6), st.floats(1.01, 1e3), st.floats(0, 20))
def test_returned_optima_satisfy_their_constraints(h, a, C, B):
    p = validate_params(h, h + a, C, B)
    d = minimize_designated_star(p)
    if C - B > 1:
        k = d.shape.k
        assert abs(1 + k * d.shape.s - (C * (1 - d.shape.s) ** d.honest_committee - B)) < 1e-8
    for hk in range(1, h + 1):
        for r in symmetric_branch_roots(p, hk):
            k, s = r.shape.k, r.shape.s
            assert abs(k * s + C * (1 - s) ** k - (C * (1 - s) ** hk - B)) < 1e-8
            assert r.loss == pytest.approx(C * (1 - s) ** hk - B)


@given(st.integers(1, 5), st.integers(2, 5))
def test_designated_below_small_penalty_threshold(h, a):
    C = 1 + 0.999 / a
    assert minimize_g(validate_params(h, h + a, C)).kind is ShapeKind.DESIGNATED


@given(st.integers(1, 6), st.integers(1, 6), st.floats(1.01, 1e3), st.floats(1.0, 2.0), st.floats(0, 10), st.floats(0, 10))
def test_monotone_in_penalty_and_stake(h, a, C, factor, B1, dB):
    n = h + a
    lo = minimize_g(validate_params(h, n, C, B1)).loss
    hi = minimize_g(validate_params(h, n, C * factor, B1)).loss
    assert hi >= lo - 1e-9
    more_stake = minimize_g(validate_params(h, n, C, B1 + dB)).loss
    assert more_stake <= lo + 1e-9
    assert minimize_g(validate_params(h, n, C, B1)).loss >= minimize_g(validate_params(h, n, C)).loss - B1 - 1e-9
