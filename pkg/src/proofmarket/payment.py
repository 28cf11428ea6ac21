"""Payment-rule constructions and the implementable shape optimisers.

* designated rule: exact for the designated lower-bound optimum;
* LS1: the square system obtained by making every attacker row of LP1
  tight with the lowest h prizes at zero (closed form and direct solve);
* LP1: cheapest anonymous prize vector for a symmetric committee;
* lottery: a single prize drawn among committee deliverers;
* two reductions turning an arbitrary IC table into a designated or an
  anonymous rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .adversary import ic_check
from .core import (EquilibriumShape, ProtocolParams, ShapeKind, StrategyProfile,
                   binom_coeffs, binomial_pmf, delivery_bits)
from .lower_bound import ShapeOptimum, minimize_designated_star
from .lp import LpProblem, LpStatus, solve_lp
from .rules import (AnonymousSymmetricRule, DesignatedRule, LotteryRule,
                    PaymentRule, TableRule, _committee_prize, to_table)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
MAX_TRANSFORM_N = 12


# ----------------------------------------------------------------------------
# designated and lottery rules


def make_designated_rule(k: int, s: float, n: Optional[int] = None, slash: float = 0.0) -> DesignatedRule:
    """Designate plus a k-member committee mixing at ``s`` (n defaults to k + 1)."""
    n = k + 1 if n is None else n
    if k >= 1 and not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1) for a non-empty committee")
    return DesignatedRule(n, k, float(s) if k else 0.0, slash)


def make_lottery(k: int, s: float, n: Optional[int] = None) -> LotteryRule:
    """Lottery among committee deliverers with prize k s / (1 - (1-s)^k)."""
    if k < 1:
        raise ValueError("committee size must be at least 1")
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    return LotteryRule(k if n is None else n, k, _committee_prize(k, s))


def lottery_share(k: int, s: float, prize: float) -> float:
    """Expected prize share of a delivering committee member."""
    w = binomial_pmf(k - 1, s)
    return float(np.sum(w * prize / np.arange(1, k + 1)))


# ----------------------------------------------------------------------------
# LS1


@dataclass(frozen=True)
class Ls1Solution:
    h: int
    a: int
    f: tuple[float, ...]          # f_{h+1} .. f_{h+a}
    t: float
    nonnegative: bool
    equilibrium_residual: float
    f_direct: tuple[float, ...] = field(repr=False, default=())

    def prizes(self) -> np.ndarray:
        """Full prize vector f_1..f_{h+a} with the lowest h set to zero."""
        return np.concatenate([np.zeros(self.h), np.asarray(self.f)])


def equilibrium_value(f: np.ndarray, s: float, slash: float = 0.0) -> float:
    """E[f_{1+X}/(1+X)] + slash (1-s)^{k-1} with X ~ Bin(k-1, s)."""
    k = len(f)
    w = binomial_pmf(k - 1, s)
    return float(np.sum(w * np.asarray(f) / np.arange(1, k + 1))) + slash * (1.0 - s) ** (k - 1)


def solve_ls1(h: int, a: int, C: float, s: float) -> Ls1Solution:
    """Prizes making every attacker row tight at t = C (1-s)^h."""
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie strictly between 0 and 1")
    if h < 1 or a < 1:
        raise ValueError("h and a must be at least 1")
    t = C * (1.0 - s) ** h
    r = (1.0 - s) / s
    lead = C * r ** h

    # closed form: alternating sum of binomial(h + j - 1, j) r^j
    closed = np.empty(a)
    term, acc = 1.0, 0.0
    for j in range(a):
        if j:
            term *= -(h + j - 1) / j * r
        acc += term
        closed[j] = lead * acc

    # forward substitution on the attacker rows i = 1..a
    b = binomial_pmf(h, s)
    f = np.zeros(h + a + 1)  # f[m] for m = 0..h+a, f[0..h] = 0
    for i in range(1, a + 1):
        acc = sum(b[j] * f[i + j] for j in range(max(0, h + 1 - i), h))
        f[h + i] = (t - acc) / b[h]
    direct = f[h + 1:]

    scale = max(1.0, float(np.max(np.abs(closed))))
    if np.max(np.abs(closed - direct)) > 1e-8 * scale:
        raise ArithmeticError("closed form and triangular solve disagree")
    prizes = np.concatenate([np.zeros(h), closed])
    resid = equilibrium_value(prizes, s) - 1.0
    return Ls1Solution(h, a, tuple(map(float, closed)), t, bool(closed.min() >= -1e-9), float(resid),
                       tuple(map(float, direct)))


# ----------------------------------------------------------------------------
# LP1


@dataclass
class Lp1Solution:
    status: LpStatus
    t: float
    f: np.ndarray
    rule: Optional[AnonymousSymmetricRule]
    attacker_slack: np.ndarray      # t minus the cost of attack row i = 0..a
    k: int
    a: int
    s: float

    def __iter__(self) -> Iterator:
        yield self.t
        yield self.rule

    @property
    def feasible(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def zero_prizes(self, tol: float = 1e-9) -> list[int]:
        """1-based indices of prizes at zero (at their lower bound when staked)."""
        return [i + 1 for i, v in enumerate(self.f) if abs(v) <= tol * max(1.0, self.t)]

    def slack_rows(self, tol: float = 1e-9) -> list[int]:
        return [i for i, v in enumerate(self.attacker_slack) if v > tol * max(1.0, abs(self.t))]


def lp1_problem(k: int, a: int, C: float, s: float, stake_per_prover: float = 0.0,
                n: Optional[int] = None) -> LpProblem:
    """LP1 over (f_1..f_k, t): attacker rows i = 0..a and the equilibrium row."""
    h_k = k - a
    n = k if n is None else n
    sigma = float(stake_per_prover)
    b = binomial_pmf(h_k, s)
    rows = np.zeros((a + 2, k + 1))
    rhs = np.zeros(a + 2)
    for i in range(a + 1):
        for j in range(h_k + 1):
            m = i + j
            if m == 0:
                rhs[i] -= (C - n * sigma) * b[j]
            else:
                rows[i, m - 1] += b[j]
        rows[i, k] = -1.0
    w = binomial_pmf(k - 1, s)
    rows[a + 1, :k] = w / np.arange(1, k + 1)
    rhs[a + 1] = 1.0 - sigma * (1.0 - s) ** (k - 1)
    lower = np.concatenate([-sigma * np.arange(1, k + 1), [0.0 if sigma == 0 else -np.inf]])
    senses = ["<="] * (a + 1) + ["="]
    return LpProblem(np.eye(k + 1)[k], rows, senses, rhs, lower)


def solve_lp1(k: int, a: int, C: float, s: float, stake_per_prover: float = 0.0,
              n: Optional[int] = None) -> Lp1Solution:
    """Cheapest anonymous prize vector for a k-committee with a corrupted members."""
    if k <= a:
        raise ValueError("committee must contain an honest member (k > a)")
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie strictly between 0 and 1")
    if stake_per_prover < 0:
        raise ValueError("stake must be non-negative")
    prob = lp1_problem(k, a, C, s, stake_per_prover, n)
    sol = solve_lp(prob)
    if not sol.optimal:
        return Lp1Solution(sol.status, math.inf, np.full(k, np.nan), None,
                           np.full(a + 1, np.nan), k, a, s)
    f = sol.x[:k]
    t = float(sol.x[k])
    slack = -(prob.A[: a + 1] @ sol.x - prob.b[: a + 1])
    rule = AnonymousSymmetricRule(k if n is None else n, tuple(f), float(stake_per_prover))
    return Lp1Solution(sol.status, t, f, rule, slack, k, a, s)


# ----------------------------------------------------------------------------
# implementable optima


def implementable_designated(params: ProtocolParams) -> tuple[ShapeOptimum, DesignatedRule]:
    """Designated optimum and its rule (slashing B/n per prover when staked)."""
    opt = minimize_designated_star(params)
    rule = make_designated_rule(opt.shape.k, opt.shape.s, params.n, params.B / params.n)
    return opt, rule


@dataclass
class SymmetricScan:
    """LP1 optimum over s for one honest-committee size."""

    h_k: int
    k: int
    coarse_s: float
    coarse_t: float
    s: float
    t: float
    local_minima: list[tuple[float, float]]
    solution: Optional[Lp1Solution]


def lp1_lower_bound(k: int, a: int, C: float, s: float, stake_per_prover: float = 0.0,
                    n: Optional[int] = None) -> float:
    """Two attacks every LP1 solution must pay for: all corrupted silent, all honest."""
    n = k if n is None else n
    sigma = stake_per_prover
    h_k = k - a
    silent = (C - n * sigma) * (1.0 - s) ** h_k - sigma * h_k * s
    honest = k * s * (1.0 - sigma * (1.0 - s) ** (k - 1)) + (C - n * sigma) * (1.0 - s) ** k
    return max(silent, honest)


def _golden(fun, lo: float, hi: float, tol: float = 1e-9, max_iter: int = 200):
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = fun(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = fun(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def scan_symmetric_committee(params: ProtocolParams, h_k: int, step: float = 1e-3,
                             incumbent: float = math.inf, refine: int = 3) -> SymmetricScan:
    """Minimise LP1's t over s on a grid of the given step, then refine.

    Grid points whose attack lower bound already exceeds the best value seen
    are skipped; they cannot be minimisers.
    """
    a, C = params.a, params.C
    k = h_k + a
    sigma = params.B / params.n
    grid = np.arange(1, int(round(1.0 / step))) * step
    t_of = lambda s: solve_lp1(k, a, C, s, sigma, params.n).t
    bounds = np.array([lp1_lower_bound(k, a, C, s, sigma, params.n) for s in grid])
    values = np.full(grid.size, np.inf)
    best = incumbent
    for idx in np.argsort(bounds, kind="stable"):
        if bounds[idx] >= best:
            break
        values[idx] = t_of(grid[idx])
        best = min(best, values[idx])
    if not np.isfinite(values).any():
        return SymmetricScan(h_k, k, math.nan, math.inf, math.nan, math.inf, [], None)
    filled = np.where(np.isfinite(values), values, np.maximum(bounds, best))
    i0 = int(np.argmin(filled))
    minima = [i for i in range(grid.size) if np.isfinite(values[i])
              and (i == 0 or filled[i] <= filled[i - 1]) and (i == grid.size - 1 or filled[i] <= filled[i + 1])]
    minima.sort(key=lambda i: filled[i])
    refined = []
    for i in minima[:refine]:
        lo = grid[i - 1] if i > 0 else step * 1e-3
        hi = grid[i + 1] if i < grid.size - 1 else 1.0 - step * 1e-3
        s_r, t_r = _golden(t_of, lo, hi)
        if t_r > filled[i]:
            s_r, t_r = float(grid[i]), float(filled[i])
        refined.append((float(s_r), float(t_r)))
    s_best, t_best = min(refined, key=lambda p: p[1])
    return SymmetricScan(h_k, k, float(grid[i0]), float(filled[i0]), s_best, t_best, refined,
                         solve_lp1(k, a, C, s_best, sigma, params.n))


def implementable_symmetric(params: ProtocolParams, step: float = 1e-3) -> tuple[ShapeOptimum, Optional[AnonymousSymmetricRule]]:
    """Best LP1 committee over h_k in 1..h and s in (0, 1); +inf if all infeasible."""
    scans = implementable_symmetric_scans(params, step)
    best = min(scans, key=lambda sc: sc.t)
    if not math.isfinite(best.t):
        shape = EquilibriumShape(ShapeKind.SYMMETRIC, params.n, 0.0, params.n)
        return ShapeOptimum(shape, params.h, math.inf, math.inf), None
    sol = best.solution
    prob = lp1_problem(best.k, params.a, params.C, best.s, params.B / params.n, params.n)
    viol = float(np.max(prob.residuals(np.concatenate([sol.f, [sol.t]])), initial=0.0))
    shape = EquilibriumShape(ShapeKind.SYMMETRIC, best.k, best.s, params.n)
    return ShapeOptimum(shape, best.h_k, best.t, max(viol, 0.0)), sol.rule


def implementable_symmetric_scans(params: ProtocolParams, step: float = 1e-3) -> list[SymmetricScan]:
    """Per honest-committee scans, largest committees first so pruning bites early."""
    scans = []
    incumbent = math.inf
    for h_k in range(params.h, 0, -1):
        sc = scan_symmetric_committee(params, h_k, step, incumbent)
        incumbent = min(incumbent, sc.t)
        scans.append(sc)
    return scans[::-1]


# ----------------------------------------------------------------------------
# reductions


def transform_to_designated(rule: PaymentRule, profile: StrategyProfile,
                            params: ProtocolParams) -> tuple[TableRule, StrategyProfile]:
    """Make the highest-probability prover deliver for sure.

    It is paid exactly 1 when it delivers; every other prover receives, when
    the designate delivers, the s_1-weighted mix of what it used to get with
    and without the first prover's proof. Nothing is paid otherwise.
    """
    n = params.n
    if n > MAX_TRANSFORM_N:
        raise ValueError(f"transform supports n <= {MAX_TRANSFORM_N}")
    if rule.n != n or profile.n != n:
        raise ValueError("rule, profile and instance sizes differ")
    if not ic_check(rule, profile).ok:
        raise ValueError("input rule does not implement the profile (not IC)")
    table = to_table(rule).payments
    half = 2 ** (n - 1)
    s1 = profile.s[0]
    new = np.zeros_like(table)
    # rows with prover 0 delivering are the upper half (prover 0 is the top bit)
    new[half:, 1:] = (1.0 - s1) * table[:half, 1:] + s1 * table[half:, 1:]
    new[half:, 0] = 1.0
    s_new = StrategyProfile((1.0,) + tuple(profile.s[1:]))
    return TableRule(n, new), s_new


def anonymize_symmetric(rule: PaymentRule, profile: StrategyProfile, k: int) -> AnonymousSymmetricRule:
    """Average a rule over committee permutations and rescale to exact indifference."""
    n = profile.n
    s = profile.s
    if not 1 <= k <= n:
        raise ValueError("committee size must lie in 1..n")
    if any(abs(x - s[0]) > 1e-12 for x in s[:k]) or any(x != 0.0 for x in s[k:]) or s[0] <= 0.0:
        raise ValueError("profile is not a symmetric committee profile")
    if n > 14:
        raise ValueError("anonymisation supports n <= 14")
    if not ic_check(rule, profile).ok:
        raise ValueError("input rule does not implement the profile (not IC)")
    table = to_table(rule).payments
    bits = delivery_bits(n)
    on_path = bits[:, k:].sum(axis=1) == 0
    counts = bits[:, :k].sum(axis=1)
    committee_total = table[:, :k].sum(axis=1)
    fbar = np.array([committee_total[on_path & (counts == t)].mean() for t in range(1, k + 1)])
    V = equilibrium_value(fbar, s[0])
    return AnonymousSymmetricRule(n, tuple(fbar / V))


# ----------------------------------------------------------------------------
# random IC corpus


def project_to_ic(payments: np.ndarray, profile: StrategyProfile) -> TableRule:
    """Rescale each prover's delivery-time payments until its incentive rows hold.

    Mixing provers become exactly indifferent, sure deliverers gain exactly
    the unit cost, and non-deliverers are scaled down only when delivering
    would otherwise pay more than the cost.
    """
    from .adversary import _others_weights

    n = profile.n
    pay = np.array(payments, dtype=float, copy=True)
    if pay.shape != (2 ** n, n) or np.any(pay < 0):
        raise ValueError("payments must be a non-negative (2^n, n) array")
    bits, q = _others_weights(profile.s)
    for i, s_i in enumerate(profile.s):
        on = bits[:, i]
        D = float(np.sum(q[on, i] * pay[on, i]))
        N = float(np.sum(q[~on, i] * pay[~on, i]))
        if s_i > 0.0:
            if D <= 0.0:
                pay[on, i] += 1.0
                D = float(np.sum(q[on, i] * pay[on, i]))
            pay[on, i] *= (1.0 + N) / D
        elif D > N + 1.0:
            pay[on, i] *= (N + 1.0) / D
    return TableRule(n, pay)


def random_ic_table(n: int, rng: np.random.Generator, symmetric_k: Optional[int] = None,
                    sparsity: float = 0.3) -> tuple[TableRule, StrategyProfile]:
    """A random non-negative IC table and the profile it implements.

    With ``symmetric_k`` the profile is a symmetric committee of that size;
    otherwise entries are drawn from {0, 1, U(0, 1)} and sorted.
    """
    if symmetric_k is not None:
        s = float(rng.uniform(0.05, 0.95))
        prof = StrategyProfile(tuple([s] * symmetric_k + [0.0] * (n - symmetric_k)))
    else:
        kinds = rng.choice(3, size=n, p=[0.2, 0.2, 0.6])
        raw = np.where(kinds == 0, 0.0, np.where(kinds == 1, 1.0, rng.uniform(0.05, 0.95, n)))
        prof = StrategyProfile(tuple(sorted(raw.tolist(), reverse=True)))
    pay = rng.exponential(1.0, size=(2 ** n, n))
    pay[rng.random(pay.shape) < sparsity] = 0.0
    return project_to_ic(pay, prof), prof
