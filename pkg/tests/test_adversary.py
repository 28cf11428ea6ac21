import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from proofmarket.adversary import (InstanceTooLarge, exact_loss, ic_check, inner_lp_oracle)
from proofmarket.core import StrategyProfile, outcome_probabilities, validate_params
from proofmarket.lower_bound import (designated_branch, eval_g, minimize_designated_star,
                                     symmetric_branch_roots)
from proofmarket.payment import make_designated_rule, make_lottery, random_ic_table
from proofmarket.rules import TableRule, to_table


def brute_loss(table, s, params):
    """Loss straight from the definition: every corruption set and decision."""
    n, a, C = params.n, params.a, params.C
    best = -np.inf
    for A in itertools.combinations(range(n), a):
        for dA in itertools.product((0, 1), repeat=a):
            cost = 0.0
            H = [i for i in range(n) if i not in A]
            for dH in itertools.product((0, 1), repeat=len(H)):
                p = np.prod([s[i] if b else 1 - s[i] for i, b in zip(H, dH)])
                d = [0] * n
                for i, b in zip(A, dA):
                    d[i] = b
                for i, b in zip(H, dH):
                    d[i] = b
                cost += p * (table.pay(d).sum() + (C if sum(d) == 0 else 0.0))
            best = max(best, cost)
    return best


def test_designated_rule_loss_equals_bound():
    p = validate_params(2, 5, 5.0)
    for hj in (1, 2):
        opt = designated_branch(p, hj)
        k, s = opt.shape.k, opt.shape.s
        rule = make_designated_rule(k, s, p.n)
        rep = exact_loss(rule, opt.expand(), p)
        assert rep.loss == pytest.approx(1 + k * s, abs=1e-8)
        assert rep.loss == pytest.approx(p.C * (1 - s) ** hj, abs=1e-8)
    rep = exact_loss(make_designated_rule(4, opt.shape.s, 5), opt.expand(), p)
    assert 0 in rep.argmax_corruption


def test_lottery_full_committee_worst_attack_is_silence():
    for h, n, C in [(1, 3, 5.0), (2, 5, 10.0), (3, 6, 40.0)]:
        p = validate_params(h, n, C)
        s = symmetric_branch_roots(p, h)[0].shape.s
        rule = make_lottery(n, s)
        rep = exact_loss(rule, StrategyProfile((s,) * n), p)
        expect = rule.prize * (1 - (1 - s) ** h) + C * (1 - s) ** h
        assert rep.loss == pytest.approx(expect, rel=1e-10)
        assert rep.argmax_delivery == (0,) * p.a


def test_zero_rule_zero_profile_costs_penalty():
    p = validate_params(2, 4, 7.0)
    rep = exact_loss(TableRule(4, np.zeros((16, 4))), StrategyProfile((0.0,) * 4), p)
    assert rep.loss == 7.0


def test_candidate_table_max_is_loss():
    p = validate_params(2, 4, 6.0)
    r, prof = random_ic_table(4, np.random.default_rng(0))
    rep = exact_loss(r, prof, p, keep_candidates=True)
    assert len(rep.candidates) == 6 * 4
    assert rep.loss == max(c[2] for c in rep.candidates)


def test_exact_loss_matches_definition_on_random_tables():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = int(rng.integers(2, 5))
        p = validate_params(int(rng.integers(1, n)), n, float(rng.uniform(1.5, 20)))
        r, prof = random_ic_table(n, rng)
        assert exact_loss(r, prof, p).loss == pytest.approx(brute_loss(r, prof.s, p), rel=1e-12)


def test_size_and_dimension_errors():
    with pytest.raises(InstanceTooLarge):
        exact_loss(TableRule(15, np.zeros((2 ** 15, 15))), StrategyProfile((0.0,) * 15), validate_params(2, 15, 3.0))
    with pytest.raises(ValueError):
        exact_loss(make_designated_rule(2, 0.5), StrategyProfile((1.0, 0.5)), validate_params(1, 2, 3.0))
    with pytest.raises(InstanceTooLarge):
        inner_lp_oracle(StrategyProfile((0.0,) * 9), validate_params(2, 9, 3.0))


def test_ic_examples():
    p = validate_params(2, 5, 5.0)
    opt = minimize_designated_star(p)
    rule = make_designated_rule(opt.shape.k, opt.shape.s, 5)
    rep = ic_check(rule, opt.expand())
    assert rep.ok
    assert np.allclose(np.asarray(rep.deliver_pay[1:]) - np.asarray(rep.no_deliver_pay[1:]), 1.0, atol=1e-12)
    assert ic_check(make_lottery(4, 0.3), StrategyProfile((0.3,) * 4)).ok
    zero = ic_check(TableRule(3, np.zeros((8, 3))), StrategyProfile((0.5,) * 3))
    assert not zero.ok


@given(st.integers(1, 8), st.floats(0.01, 0.99))
def test_designated_equilibrium_pays_exactly_cost(k, s):
    rule = make_designated_rule(k, s, k + 1)
    rep = ic_check(rule, StrategyProfile((1.0,) + (s,) * k))
    assert rep.ok
    assert abs(rep.deliver_pay[0] - 1.0) <= 1e-10
    assert np.all(np.abs(np.asarray(rep.deliver_pay[1:]) - 1.0) <= 1e-10)


@given(st.integers(1, 10), st.floats(0.01, 0.99))
def test_lottery_equilibrium(k, s):
    from proofmarket.payment import lottery_share
    rule = make_lottery(k, s)
    assert lottery_share(k, s, rule.prize) == pytest.approx(1.0, abs=1e-10)
    assert ic_check(rule, StrategyProfile((s,) * k)).ok


def test_oracle_examples():
    assert inner_lp_oracle(StrategyProfile((1.0, 0.5)), validate_params(1, 2, 3.0))[0] == pytest.approx(1.5)
    assert inner_lp_oracle(StrategyProfile((0.0, 0.0)), validate_params(1, 2, 3.0))[0] == pytest.approx(3.0)
    p = validate_params(2, 5, 5.0)
    prof = minimize_designated_star(p).expand()
    t, table = inner_lp_oracle(prof, p)
    assert t == pytest.approx(eval_g(p, prof).g, abs=1e-6)
    assert ic_check(table, prof).ok
    assert exact_loss(table, prof, p).loss == pytest.approx(t, abs=1e-6)


def test_structured_and_table_losses_agree():
    rng = np.random.default_rng(2)
    for _ in range(25):
        n = int(rng.integers(2, 9))
        p = validate_params(int(rng.integers(1, n)), n, float(rng.uniform(1.5, 50)), float(rng.choice([0.0, 1.0])))
        k = int(rng.integers(1, n))
        s = float(rng.uniform(0.05, 0.95))
        cases = [(make_designated_rule(k, s, n, p.B / n), StrategyProfile((1.0,) + (s,) * k + (0.0,) * (n - 1 - k))),
                 (make_lottery(k, s, n), StrategyProfile((s,) * k + (0.0,) * (n - k)))]
        for rule, prof in cases:
            a = exact_loss(rule, prof, p).loss
            b = exact_loss(to_table(rule), prof, p).loss
            assert a == pytest.approx(b, abs=1e-10)


def test_permuting_equal_probability_provers_keeps_loss():
    rng = np.random.default_rng(4)
    p = validate_params(2, 5, 9.0)
    r, prof = random_ic_table(5, rng, symmetric_k=3)
    base = exact_loss(r, prof, p).loss
    bits = [tuple(int(b) for b in row) for row in np.array(list(itertools.product((0, 1), repeat=5)))]
    for perm in itertools.permutations(range(3)):
        full = list(perm) + [3, 4]
        pay = np.zeros_like(r.payments)
        for idx, d in enumerate(bits):
            src = [d[full.index(i)] for i in range(5)]
            pay[idx] = r.pay(src)[full]
        assert exact_loss(TableRule(5, pay), prof, p).loss == pytest.approx(base, abs=1e-12)


def test_sandwich_on_random_ic_corpus():
    rng = np.random.default_rng(9)
    for _ in range(40):
        n = int(rng.integers(2, 7))
        p = validate_params(int(rng.integers(1, n)), n, float(rng.uniform(1.5, 30)))
        r, prof = random_ic_table(n, rng)
        g = eval_g(p, prof)
        loss = exact_loss(r, prof, p).loss
        t, _ = inner_lp_oracle(prof, p)
        assert g.g <= t + 1e-9
        assert t <= loss + 1e-7
        # the two restricted attacks of the lower bound are real attacks
        assert max(g.left, g.right) <= loss + 1e-9
