"""Worst-case loss against a Byzantine adversary, incentive checks and the
full payment-table LP oracle.

The adversary picks a corruption set A of size a and a delivery decision
for every corrupted prover before the honest provers flip their coins.
The cost of a choice is the expected total payment plus C times the
probability that nobody delivers.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (IcReport, ProtocolParams, StrategyProfile, binomial_pmf,
                   delivery_bits, ic_verdicts, outcome_probabilities)
from .lp import LpProblem, solve_lp
from .rules import PaymentRule, StructuredRule, TableRule, to_table

MAX_TABLE_N = 14
MAX_STRUCTURED_N = 64
MAX_ORACLE_N = 8
IC_TOL = 1e-8


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class LossReport:
    loss: float
    argmax_corruption: tuple[int, ...]
    argmax_delivery: tuple[int, ...]
    candidates: Optional[list[tuple[tuple[int, ...], tuple[int, ...], float]]] = field(
        default=None, repr=False)


def _check_dims(rule: PaymentRule, profile: StrategyProfile, params: Optional[ProtocolParams] = None):
    if rule.n != profile.n:
        raise ValueError(f"rule has n={rule.n} but profile has {profile.n} entries")
    if params is not None and params.n != rule.n:
        raise ValueError(f"rule has n={rule.n} but instance has n={params.n}")


def _class_probs(rule: StructuredRule, profile: StrategyProfile) -> Optional[list[float]]:
    """Common delivery probability of each role class, or None if it varies."""
    s = profile.s
    out = []
    for members in rule.classes():
        vals = {s[i] for i in members}
        if len(vals) > 1:
            return None
        out.append(vals.pop() if vals else 0.0)
    return out


def _count_tensor(rule: StructuredRule, sizes: Sequence[int], C: float) -> np.ndarray:
    """Total payment plus liveness penalty for every vector of class counts."""
    shape = tuple(sz + 1 for sz in sizes)
    tot = np.empty(shape)
    for counts in itertools.product(*(range(m) for m in shape)):
        tot[counts] = rule.total_pay(counts) + (C if sum(counts) == 0 else 0.0)
    return tot


def _shifted_pmf(size: int, corrupt: int, deliver: int, p: float) -> np.ndarray:
    w = np.zeros(size + 1)
    w[deliver: deliver + size - corrupt + 1] = binomial_pmf(size - corrupt, p)
    return w


def _contract(tensor: np.ndarray, weights: Sequence[np.ndarray]) -> float:
    out = tensor
    for w in weights:
        out = np.tensordot(w, out, axes=(0, 0))
    return float(out)


def _structured_loss(rule: StructuredRule, probs: list[float], params: ProtocolParams,
                     keep: bool) -> LossReport:
    classes = rule.classes()
    sizes = [len(c) for c in classes]
    tot = _count_tensor(rule, sizes, params.C)
    best = (-np.inf, None, None)
    table = [] if keep else None
    for corrupt in itertools.product(*(range(m + 1) for m in sizes)):
        if sum(corrupt) != params.a:
            continue
        for deliver in itertools.product(*(range(c + 1) for c in corrupt)):
            ws = [_shifted_pmf(sz, c, e, p) for sz, c, e, p in zip(sizes, corrupt, deliver, probs)]
            cost = _contract(tot, ws)
            if keep or cost > best[0]:
                A, dA = [], []
                for members, c, e in zip(classes, corrupt, deliver):
                    chosen = members[len(members) - c:]
                    A.extend(chosen)
                    dA.extend([1] * e + [0] * (c - e))
                order = np.argsort(A)
                A_t = tuple(int(A[i]) for i in order)
                d_t = tuple(int(dA[i]) for i in order)
                if keep:
                    table.append((A_t, d_t, cost))
                if cost > best[0]:
                    best = (cost, A_t, d_t)
    return LossReport(float(best[0]), best[1], best[2], table)


def table_cost_tensor(rule: TableRule, C: float) -> np.ndarray:
    tot = rule.payments.sum(axis=1).copy()
    tot[0] += C
    return tot.reshape((2,) * rule.n)


def _table_loss(rule: TableRule, profile: StrategyProfile, params: ProtocolParams,
                keep: bool) -> LossReport:
    n, a = params.n, params.a
    if n > MAX_TABLE_N:
        raise InstanceTooLarge(f"table rules are evaluated for n <= {MAX_TABLE_N}")
    tensor = table_cost_tensor(rule, params.C)
    s = profile.s
    best = (-np.inf, None, None)
    table = [] if keep else None
    for A in itertools.combinations(range(n), a):
        H = [i for i in range(n) if i not in A]
        w = outcome_probabilities([s[i] for i in H])
        costs = np.moveaxis(tensor, A, range(a)).reshape(2 ** a, -1) @ w
        j = int(np.argmax(costs))
        if keep:
            for r, bits in enumerate(delivery_bits(a)):
                table.append((A, tuple(int(b) for b in bits), float(costs[r])))
        if costs[j] > best[0]:
            best = (float(costs[j]), A, tuple(int(b) for b in delivery_bits(a)[j]))
    return LossReport(best[0], tuple(best[1]), best[2], table)


def exact_loss(rule: PaymentRule, profile: StrategyProfile, params: ProtocolParams,
               keep_candidates: bool = False) -> LossReport:
    """Exact maximum over corruption sets and corrupted deliveries of the expected cost."""
    _check_dims(rule, profile, params)
    if isinstance(rule, StructuredRule):
        probs = _class_probs(rule, profile)
        if probs is not None:
            if params.n > MAX_STRUCTURED_N:
                raise InstanceTooLarge(f"structured rules are evaluated for n <= {MAX_STRUCTURED_N}")
            return _structured_loss(rule, probs, params, keep_candidates)
        if params.n > MAX_TABLE_N:
            raise InstanceTooLarge("profile breaks the rule's role classes and n is too large for a table")
        rule = to_table(rule)
    return _table_loss(rule, profile, params, keep_candidates)


def _others_weights(s: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Per outcome d and prover i: probability of d_{-i} under s (excluding i)."""
    n = len(s)
    bits = delivery_bits(n).astype(bool)
    sv = np.asarray(s, dtype=float)
    fac = np.where(bits, sv[None, :], 1.0 - sv[None, :])
    q = np.empty_like(fac)
    for i in range(n):
        q[:, i] = np.prod(np.delete(fac, i, axis=1), axis=1)
    return bits, q


def ic_check(rule: PaymentRule, profile: StrategyProfile, tol: float = IC_TOL) -> IcReport:
    """Expected pay with and without delivering, and the two-sided IC verdicts."""
    _check_dims(rule, profile)
    s = profile.s
    if isinstance(rule, StructuredRule):
        probs = _class_probs(rule, profile)
        if probs is not None:
            classes = rule.classes()
            sizes = [len(c) for c in classes]
            dp = np.zeros(rule.n)
            ndp = np.zeros(rule.n)
            for c, members in enumerate(classes):
                if not members:
                    continue
                others = [sz - (1 if j == c else 0) for j, sz in enumerate(sizes)]
                pmfs = [binomial_pmf(m, p) for m, p in zip(others, probs)]
                vals = [0.0, 0.0]
                for counts in itertools.product(*(range(m + 1) for m in others)):
                    w = float(np.prod([pmfs[j][x] for j, x in enumerate(counts)]))
                    if w == 0.0:
                        continue
                    for own in (0, 1):
                        full = list(counts)
                        full[c] += own
                        vals[own] += w * rule.member_pay(c, own, full)
                ndp[members], dp[members] = vals[0], vals[1]
            return ic_verdicts(s, dp, ndp, tol)
        if rule.n > MAX_TABLE_N:
            raise InstanceTooLarge("profile breaks the rule's role classes and n is too large for a table")
        rule = to_table(rule)
    bits, q = _others_weights(s)
    pay = rule.payments
    dp = np.sum(np.where(bits, q * pay, 0.0), axis=0)
    ndp = np.sum(np.where(bits, 0.0, q * pay), axis=0)
    return ic_verdicts(s, dp, ndp, tol)


def inner_lp_oracle(profile: StrategyProfile, params: ProtocolParams) -> tuple[float, TableRule]:
    """Cheapest worst-case loss of any IC payment table implementing ``profile``.

    Variables are p_i(d) for every prover and outcome plus the epigraph
    variable t; rows bound the cost of every attack by t and impose the
    incentive constraints of each prover.
    """
    n, a, C, B = params.n, params.a, params.C, params.B
    if profile.n != n:
        raise ValueError(f"profile has {profile.n} entries, expected {n}")
    if n > MAX_ORACLE_N:
        raise InstanceTooLarge(f"the LP oracle supports n <= {MAX_ORACLE_N}")
    s = profile.s
    N = 2 ** n
    nvar = N * n + 1
    t_col = nvar - 1
    rows, rhs, senses = [], [], []
    outcome = np.arange(N).reshape((2,) * n)
    for A in itertools.combinations(range(n), a):
        H = [i for i in range(n) if i not in A]
        w = outcome_probabilities([s[i] for i in H])
        idx = np.moveaxis(outcome, A, range(a)).reshape(2 ** a, -1)
        block = np.zeros((2 ** a, nvar))
        for r in range(2 ** a):
            cols = (idx[r][:, None] * n + np.arange(n)[None, :]).ravel()
            block[r, cols] = np.repeat(w, n)
        block[:, t_col] = -1.0
        b = np.zeros(2 ** a)
        b[0] = -C * w[0]  # only the all-silent corrupted choice can leave nobody delivering
        rows.append(block)
        rhs.append(b)
        senses.extend(["<="] * (2 ** a))
    bits, q = _others_weights(s)
    eq = np.zeros((n, nvar))
    eq_rhs = np.zeros(n)
    for i in range(n):
        coef = np.where(bits[:, i], q[:, i], -q[:, i])
        eq[i, np.arange(N) * n + i] = coef
        if 0.0 < s[i] < 1.0:
            senses.append("=")
            eq_rhs[i] = 1.0
        elif s[i] >= 1.0:
            senses.append(">=")
            eq_rhs[i] = 1.0
        else:
            senses.append("<=")
            eq_rhs[i] = 1.0
    A_mat = np.vstack(rows + [eq])
    b_vec = np.concatenate(rhs + [eq_rhs])

    # Without stake, paying a prover that did not deliver, or one that never
    # delivers, only ever raises costs: zeroing those payments and scaling the
    # rest down keeps every incentive row satisfied. Those columns are fixed at 0.
    active = np.ones(nvar, dtype=bool)
    if B == 0:
        useful = bits & (np.asarray(s) > 0.0)[None, :]
        active[: N * n] = useful.ravel()
    keep_rows = np.any(A_mat[:, active] != 0.0, axis=1) | (b_vec < 0)
    A_red = A_mat[np.ix_(keep_rows, active)]
    senses_red = [sn for sn, k in zip(senses, keep_rows) if k]
    c = np.zeros(int(active.sum()))
    c[-1] = 1.0
    lower = np.full(c.size, -B / n if B > 0 else 0.0)
    lower[-1] = -np.inf if B > 0 else 0.0
    sol = solve_lp(LpProblem(c, A_red, senses_red, b_vec[keep_rows], lower), pricing="steepest")
    if not sol.optimal:
        raise RuntimeError(f"LP oracle returned {sol.status.value}; this indicates a bug")
    x = np.zeros(nvar)
    x[active] = sol.x
    table = TableRule(n, x[: N * n].reshape(N, n))
    return float(sol.objective), table
