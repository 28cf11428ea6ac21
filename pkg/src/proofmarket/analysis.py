"""Transition values, regime classification, asymptotics, stake tables and the
counter-example suite built on the shape optimisers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .adversary import MAX_ORACLE_N, InstanceTooLarge, inner_lp_oracle
from .core import PAPER_TOL, ProtocolParams, ShapeKind, StrategyProfile, validate_params
from .lower_bound import (ShapeOptimum, grid_oracle_minimize_g, minimize_designated_star,
                          minimize_g, minimize_symmetric_star)
from .numerics import find_root, lambert_w, lambert_w_exp
from .payment import (implementable_designated, implementable_symmetric,
                      scan_symmetric_committee, solve_ls1, solve_lp1)

REGIME_TOL = 1e-6
C_T_CAP = 1e12


# ----------------------------------------------------------------------------
# transition values


@dataclass(frozen=True)
class TransitionResult:
    C_t: float
    from_shape: Optional[ShapeOptimum]
    to_shape: Optional[ShapeOptimum]
    method: str
    bracket: tuple[float, float] = (math.nan, math.nan)


def _shape_gap(h: int, n: int, C: float, B: float) -> float:
    p = validate_params(h, n, C, B)
    return minimize_designated_star(p).loss - minimize_symmetric_star(p).loss


def transition_ct_discrete(h: int, n: int, B: float = 0.0, rel_tol: float = 1e-10) -> TransitionResult:
    """Smallest C at which the best symmetric shape beats the best designated one."""
    validate_params(h, n, 2.0, B)
    a = n - h
    if a == 1:
        return TransitionResult(math.inf, None, None, "discrete-bisection")
    lo = 1.0 + 1.0 / a
    if _shape_gap(h, n, lo, B) > 0:
        # symmetric already wins at the left edge; walk down towards C = 1
        hi = lo
        while lo > 1.0 + 1e-9 and _shape_gap(h, n, lo, B) > 0:
            hi, lo = lo, 1.0 + (lo - 1.0) / 2
        if _shape_gap(h, n, lo, B) > 0:
            return TransitionResult(lo, None, minimize_g(validate_params(h, n, lo, B)), "discrete-bisection")
    else:
        hi = lo * 1.25
        while _shape_gap(h, n, hi, B) <= 0:
            lo, hi = hi, hi * 1.25
            if hi > C_T_CAP:
                return TransitionResult(math.inf, None, None, "discrete-bisection")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _shape_gap(h, n, mid, B) > 0:
            hi = mid
        else:
            lo = mid
    below = minimize_designated_star(validate_params(h, n, lo, B))
    above = minimize_symmetric_star(validate_params(h, n, hi, B))
    return TransitionResult(0.5 * (lo + hi), below, above, "discrete-bisection", (lo, hi))


@dataclass(frozen=True)
class ContinuousLimitSolution:
    tau: float
    B: float
    x: float
    C_t: float
    t_d: float
    t_s: float
    beta: float
    residual: float


def limit_residual(x: float, tau: float, B: float) -> float:
    """1 + x + B - exp((1 - tau) x), scaled by the exponential term."""
    e = math.exp((1.0 - tau) * x)
    return (1.0 + x + B - e) / e


def transition_ct_limit(tau: float, B: float = 0.0) -> ContinuousLimitSolution:
    """Positive root of 1 + x + B = exp((1 - tau) x) and C_t = exp(x).

    At the transition the designated and symmetric auxiliaries coincide
    (t_d = t_s = x) and the symmetric committee uses the whole honest
    fraction (beta = tau).
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie strictly between 0 and 1")
    if B < 0:
        raise ValueError("B must be non-negative")
    u = 1.0 - tau
    phi = lambda x: u * x - math.log1p(x + B)           # log form, same roots
    dphi = lambda x: u - 1.0 / (1.0 + x + B)
    # phi is convex with phi(0) = -log(1 + B); without stake x = 0 is a root,
    # so start from the minimiser of phi where it is strictly negative
    lo = 1.0 / u - 1.0 if B == 0 else 0.0
    hi = max(2.0 * lo, 1.0)
    while phi(hi) <= 0:
        hi *= 2.0
    res = find_root(phi, lo, hi, df=dphi, ftol=1e-14)
    x = res.root
    return ContinuousLimitSolution(tau, B, x, math.exp(x), x, x, tau, limit_residual(x, tau, B))


# ----------------------------------------------------------------------------
# asymptotics


def asymptotic_designated_loss(tau: float, C: float, B: float = 0.0) -> float:
    """Continuous designated loss W(C tau e^{tau (B+1)}) / tau - B."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1]")
    if C <= 1.0:
        raise ValueError("C must exceed 1")
    if B < 0:
        raise ValueError("B must be non-negative")
    L = math.log(C * tau) + tau * (B + 1.0)
    if L < 500.0:
        w = lambert_w(math.exp(L))
    else:
        w = lambert_w_exp(L)
    # w / tau - B loses digits when B dominates; one Newton step on the
    # defining equation (D + B) e^{tau D} = C e^{tau} restores them
    D = w / tau - B
    for _ in range(2):
        F = math.log(D + B) + tau * D - math.log(C) - tau
        D -= F / (1.0 / (D + B) + tau)
    return D


def designated_loss_by_root(tau: float, C: float, B: float = 0.0) -> float:
    """Same quantity from 1 + t = C e^{-tau t} - B solved directly."""
    f = lambda t: math.log1p(t + B) + tau * t - math.log(C)
    df = lambda t: 1.0 / (1.0 + t + B) + tau
    if f(0.0) >= 0.0:
        return 1.0
    hi = math.log(C) / tau
    return 1.0 + find_root(f, 0.0, hi, df=df, ftol=1e-15).root


# ----------------------------------------------------------------------------
# regimes


class RegimePhase(str, Enum):
    DESIGNATED_TIGHT = "designated_tight"
    DESIGNATED_NOT_TIGHT = "designated_not_tight"
    SYMMETRIC_NOT_TIGHT = "symmetric_not_tight"
    SYMMETRIC_TIGHT = "symmetric_tight"

    @property
    def number(self) -> int:
        return list(RegimePhase).index(self) + 1


@dataclass(frozen=True)
class RegimeReport:
    phase: RegimePhase
    D_star: float
    S_star: float
    D_hat: float
    S_hat: Optional[float]   # None when the phase is settled without it


def _close(x: float, y: float, tol: float = REGIME_TOL) -> bool:
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


def symmetric_star_is_tight(params: ProtocolParams, s_opt: Optional[ShapeOptimum] = None) -> bool:
    """Whether the best symmetric lower-bound shape has an IC rule at equal loss."""
    s_opt = minimize_symmetric_star(params) if s_opt is None else s_opt
    if not math.isfinite(s_opt.loss):
        return False
    if params.B == 0:
        # LP1 meets the bound only if every attack row is tight, which
        # pins the prizes to the LS1 solution
        return solve_ls1(s_opt.honest_committee, params.a, params.C, s_opt.shape.s).nonnegative
    t = solve_lp1(s_opt.shape.k, params.a, params.C, s_opt.shape.s, params.B / params.n, params.n).t
    return _close(t, s_opt.loss)


def classify_regime(params: ProtocolParams, full: bool = False) -> RegimeReport:
    """Phase of (D*, S*, D-hat, S-hat); S-hat is only computed when needed or ``full``."""
    d = minimize_designated_star(params)
    s = minimize_symmetric_star(params)
    D_star, S_star = d.loss, s.loss
    D_hat = D_star  # the designated shape is always implementable at its bound
    S_hat = implementable_symmetric(params)[0].loss if full else None
    if D_star <= S_star or _close(D_star, S_star):
        return RegimeReport(RegimePhase.DESIGNATED_TIGHT, D_star, S_star, D_hat, S_hat)
    if symmetric_star_is_tight(params, s):
        return RegimeReport(RegimePhase.SYMMETRIC_TIGHT, D_star, S_star, D_hat,
                            S_star if S_hat is None else S_hat)
    if S_hat is None:
        S_hat = implementable_symmetric(params)[0].loss
    phase = RegimePhase.DESIGNATED_NOT_TIGHT if D_hat <= S_hat else RegimePhase.SYMMETRIC_NOT_TIGHT
    return RegimeReport(phase, D_star, S_star, D_hat, S_hat)


@dataclass(frozen=True)
class RegimeBoundary:
    C: float
    before: RegimePhase
    after: RegimePhase


def _phase_at(h: int, n: int, C: float, B: float) -> RegimePhase:
    return classify_regime(validate_params(h, n, C, B)).phase


def regime_boundaries(h: int, n: int, C_max: float = 100.0, B: float = 0.0,
                      step: float = 0.5, tol: float = 1e-3) -> list[RegimeBoundary]:
    """Scan C upwards in steps of ``step`` and bisect every phase change to ``tol``."""
    validate_params(h, n, 2.0, B)
    C = 1.0 + step / 10.0
    prev = _phase_at(h, n, C, B)
    out = []
    while C < C_max:
        nxt = min(C + step, C_max)
        ph = _phase_at(h, n, nxt, B)
        if ph is not prev:
            lo, hi = C, nxt
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if _phase_at(h, n, mid, B) is prev:
                    lo = mid
                else:
                    hi = mid
            out.append(RegimeBoundary(0.5 * (lo + hi), prev, ph))
            prev = ph
        C = nxt
    return out


# ----------------------------------------------------------------------------
# stake sensitivity


@dataclass(frozen=True)
class StakeRow:
    n: int
    a: int
    C: float
    B: float
    designated: float
    symmetric: float
    reduction_pct: Optional[float]

    @property
    def stake_ratio(self) -> float:
        return self.B / self.C


def stake_sensitivity_table(scenarios: Iterable[tuple[int, int, float, Sequence[float]]]) -> list[StakeRow]:
    """Designated and symmetric staked optima per (h, n, C, [B...]).

    The reduction is the designated loss measured against the unstaked
    symmetric loss, reported only where the designated loss is lower.
    """
    rows = []
    for h, n, C, Bs in scenarios:
        base = minimize_symmetric_star(validate_params(h, n, C, 0.0)).loss
        for B in Bs:
            p = validate_params(h, n, C, B)
            d = minimize_designated_star(p).loss
            s = minimize_symmetric_star(p).loss
            red = 100.0 * (base - d) / base if (B > 0 and d < base) else None
            rows.append(StakeRow(n, n - h, C, B, d, s, red))
    return rows


STAKE_TABLE_SCENARIOS = [
    (67, 100, 1e4, [0.0, 10.0, 50.0, 100.0, 500.0]),
    (100, 200, 20.0, [0.0, 0.02, 0.1, 0.2, 1.0]),
]


# ----------------------------------------------------------------------------
# counter-examples


@dataclass(frozen=True)
class Check:
    case: str
    label: str
    expected: object
    actual: object
    passed: bool


def _num(case: str, label: str, expected: float, actual: float, tol: float = PAPER_TOL) -> Check:
    return Check(case, label, expected, float(actual), bool(abs(actual - expected) <= tol))


def _eq(case: str, label: str, expected, actual) -> Check:
    return Check(case, label, expected, actual, expected == actual)


def best_implementable(params: ProtocolParams) -> ShapeOptimum:
    """The smaller of the implementable designated and symmetric optima."""
    d = implementable_designated(params)[0]
    s = implementable_symmetric(params)[0]
    return s if s.loss < d.loss - REGIME_TOL * max(1.0, d.loss) else d


def _shape_checks(case: str, tag: str, opt: ShapeOptimum, kind: ShapeKind, k: int, s: float) -> list[Check]:
    return [_eq(case, f"{tag} kind", kind.value, opt.kind.value),
            _eq(case, f"{tag} k", k, opt.shape.k),
            _num(case, f"{tag} s", s, opt.shape.s)]


def _implementable_crossing(h: int, n: int, lo: float, hi: float, tol: float = 1e-6) -> float:
    gap = lambda C: (implementable_designated(validate_params(h, n, C))[0].loss
                     - implementable_symmetric(validate_params(h, n, C))[0].loss)
    if gap(lo) > 0 or gap(hi) <= 0:
        raise ValueError("crossing not bracketed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class LpPattern:
    h: int
    s: float
    t: float
    zero_prizes: list[int]
    slack_rows: list[int]


def lp1_pattern(h: int, n: int, C: float, tol: float = 1e-7) -> LpPattern:
    """Zero prizes and slack attack rows of LP1 for the full committee at the
    coarse-grid minimiser of its optimum over s."""
    p = validate_params(h, n, C)
    scan = scan_symmetric_committee(p, h)
    sol = solve_lp1(n, p.a, C, scan.coarse_s)
    return LpPattern(h, scan.coarse_s, sol.t, sol.zero_prizes(tol), sol.slack_rows(tol))


def counterexample_suite() -> list[Check]:
    """Recompute the five structural counter-examples and compare with the reference values."""
    D, S = ShapeKind.DESIGNATED, ShapeKind.SYMMETRIC
    out: list[Check] = []

    # (i) the lower-bound transition changes committee size
    tr = transition_ct_discrete(14, 19)
    out.append(_num("i", "C_t", 470.2382, tr.C_t))
    out.append(_eq("i", "below kind", D.value, tr.from_shape.kind.value))
    out.append(_eq("i", "below support", 19, tr.from_shape.shape.support))
    out.append(_eq("i", "below honest committee", 14, tr.from_shape.honest_committee))
    out.append(_eq("i", "above kind", S.value, tr.to_shape.kind.value))
    out.append(_eq("i", "above k", 12, tr.to_shape.shape.k))
    out.append(_eq("i", "above honest committee", 7, tr.to_shape.honest_committee))

    # (ii) n = 7, C = 15 over h
    for h, kind, k, s in [(1, S, 7, 0.682), (3, D, 6, 0.393), (5, S, 3, 0.829), (6, D, 1, 0.875)]:
        out += _shape_checks("ii", f"h={h}", best_implementable(validate_params(h, 7, 15.0)), kind, k, s)

    # (iii) h = 3, C = 15 over n
    for n, kind, k, s in [(4, D, 1, 0.875), (5, S, 3, 0.829), (6, D, 5, 0.411), (15, S, 15, 0.311)]:
        out += _shape_checks("iii", f"n={n}", best_implementable(validate_params(3, n, 15.0)), kind, k, s)

    # (iv) LP1 zero and slack patterns
    for h, zeros, slack in [(8, [1, 2, 3, 4, 5, 8, 9, 12, 15, 16], [1, 2, 7]),
                            (7, [1, 2, 3, 4, 5, 8, 11, 14, 15], [1, 2, 5])]:
        pat = lp1_pattern(h, 16, 3000.0)
        out.append(_eq("iv", f"h={h} zero prizes", zeros, pat.zero_prizes))
        out.append(_eq("iv", f"h={h} slack rows", slack, pat.slack_rows))

    # (v) implementable transition changes committee size
    C = _implementable_crossing(4, 7, 25.0, 27.0)
    out.append(_num("v", "C", 26.093, C))
    d = implementable_designated(validate_params(4, 7, C - 1e-4))[0]
    s = implementable_symmetric(validate_params(4, 7, C + 1e-4))[0]
    out.append(_eq("v", "designated honest committee", 4, d.honest_committee))
    out.append(_num("v", "designated s", 0.399, d.shape.s))
    out.append(_eq("v", "symmetric honest committee", 2, s.honest_committee))
    out.append(_num("v", "symmetric s", 0.653, s.shape.s))
    return out


# ----------------------------------------------------------------------------
# conjecture evidence


@dataclass(frozen=True)
class ConjectureReport:
    implementable_best: float
    oracle_best: float
    oracle_profile: tuple[float, ...]
    gap: float                    # implementable_best - oracle_best
    profiles_checked: int
    per_profile: list[tuple[tuple[float, ...], float]] = field(repr=False, default_factory=list)


def conjecture_check(params: ProtocolParams, random_profiles: int = 50, seed: int = 0,
                     grid: int = 100) -> ConjectureReport:
    """Compare the best implementable shape with LP2 over candidate profiles.

    Candidates are the two implementable shape profiles, the grid minimiser
    of the lower bound and ``random_profiles`` random ordered profiles. The
    gap is evidence only; a negative gap means some candidate beats both
    shapes.
    """
    if params.n > MAX_ORACLE_N:
        raise InstanceTooLarge(f"the LP oracle supports n <= {MAX_ORACLE_N}")
    d = implementable_designated(params)[0]
    s = implementable_symmetric(params)[0]
    best_impl = min(d.loss, s.loss)
    cands = [tuple(d.expand().s)]
    if math.isfinite(s.loss):
        cands.append(tuple(s.expand().s))
    cands.append(tuple(grid_oracle_minimize_g(params, grid).expand().s))
    rng = np.random.default_rng(seed)
    for _ in range(random_profiles):
        cands.append(tuple(np.sort(rng.random(params.n))[::-1]))
    results = []
    for prof in cands:
        t, _ = inner_lp_oracle(StrategyProfile(prof), params)
        results.append((prof, t))
    prof, t = min(results, key=lambda r: r[1])
    return ConjectureReport(best_impl, t, prof, best_impl - t, len(results), results)


# ----------------------------------------------------------------------------
# sweeps


def sweep_ct(taus: Sequence[float], Bs: Sequence[float], n: Optional[int] = None) -> list[dict]:
    """C_t over a tau grid for each stake: continuous limit, or discrete at ``n``."""
    rows = []
    for B in Bs:
        for tau in taus:
            if n is None:
                ct = transition_ct_limit(tau, B).C_t
            else:
                h = min(max(1, round(tau * n)), n - 1)
                ct = transition_ct_discrete(h, n, B).C_t
            rows.append({"tau": tau, "B": B, "C_t": ct})
    return rows


def sweep_loss(Cs: Sequence[float], taus: Sequence[float], B: float = 0.0, n: int = 100) -> list[dict]:
    """Lower-bound optimum min(D*, S*) at h = round(tau n) over C and tau."""
    rows = []
    for tau in taus:
        h = min(max(1, round(tau * n)), n - 1)
        for C in Cs:
            opt = minimize_g(validate_params(h, n, C, B))
            rows.append({"C": C, "tau": tau, "B": B, "loss": opt.loss, "shape": opt.kind.value})
    return rows
