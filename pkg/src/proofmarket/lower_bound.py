"""The lower bound g (and its staked form g_B) and its minimisation.

For a sorted profile s the bound is the larger of two attacker options:
the corrupted provers behave honestly (``left``) or the top ``a`` provers
are corrupted and stay silent (``right``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .core import (EquilibriumShape, ProtocolParams, ShapeKind, StrategyProfile,
                   TOL)
from .numerics import find_all_roots, find_root

ROOT_EDGE = 1e-9
MAX_ORACLE_N = 8


@dataclass(frozen=True)
class BoundEvaluation:
    left: float
    right: float
    g: float
    pi_A: float
    pi_H: float


@dataclass(frozen=True)
class ShapeOptimum:
    """Best profile of one equilibrium shape.

    ``honest_committee`` is h_j for designated shapes (so k = h_j + a - 1)
    and h_k for symmetric ones (k = h_k + a).
    """

    shape: EquilibriumShape
    honest_committee: int
    loss: float
    constraint_residual: float
    profile: Optional[StrategyProfile] = None

    @property
    def kind(self) -> ShapeKind:
        return self.shape.kind

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.loss)

    def expand(self) -> StrategyProfile:
        return self.profile if self.profile is not None else self.shape.expand()


def eval_g(params: ProtocolParams, profile: StrategyProfile | Sequence[float]) -> BoundEvaluation:
    """Both branches of the lower bound; raw sequences must already be sorted."""
    s = profile.as_array() if isinstance(profile, StrategyProfile) else np.asarray(profile, dtype=float)
    if s.size != params.n:
        raise ValueError(f"profile has length {s.size}, expected {params.n}")
    if np.any(np.diff(s) > 0):
        raise ValueError("profile must be canonical (non-increasing)")
    q = 1.0 - s
    pi_A = float(np.prod(q[: params.a]))
    pi_H = float(np.prod(q[params.a:]))
    left = float(s.sum()) + params.C * pi_A * pi_H
    right = params.C * pi_H - params.B
    return BoundEvaluation(left, right, max(left, right), pi_A, pi_H)


def verify_branch_equality(params: ProtocolParams, profile: StrategyProfile) -> float:
    ev = eval_g(params, profile)
    return abs(ev.left - ev.right)


def designated_branch(params: ProtocolParams, h_j: int) -> ShapeOptimum:
    """Root of 1 + k s = C (1-s)^h_j - B with k = h_j + a - 1 mixers."""
    C, B = params.C, params.B
    k = h_j + params.a - 1
    f = lambda s: 1.0 + k * s - C * (1.0 - s) ** h_j + B
    df = lambda s: k + C * h_j * (1.0 - s) ** (h_j - 1)
    r = find_root(f, 0.0, 1.0, df=df)
    shape = EquilibriumShape(ShapeKind.DESIGNATED, k, r.root, params.n)
    return ShapeOptimum(shape, h_j, 1.0 + k * r.root, abs(r.residual))


def minimize_designated_star(params: ProtocolParams) -> ShapeOptimum:
    """Best designated profile [1, s*k, 0...] for the lower bound."""
    if params.C - params.B <= 1.0:
        shape = EquilibriumShape(ShapeKind.DESIGNATED, 0, 0.0, params.n)
        return ShapeOptimum(shape, 0, 1.0, 0.0)
    best = None
    for h_j in range(1, params.h + 1):
        cand = designated_branch(params, h_j)
        if best is None or cand.loss < best.loss - TOL:
            best = cand
    return best


def symmetric_branch_roots(params: ProtocolParams, h_k: int, grid: int = 4096) -> list[ShapeOptimum]:
    """All interior roots of k s + C (1-s)^k = C (1-s)^h_k - B, k = h_k + a."""
    C, B = params.C, params.B
    k = h_k + params.a
    f = lambda s: k * s + C * (1.0 - s) ** k - C * (1.0 - s) ** h_k + B
    out = []
    for r in find_all_roots(f, ROOT_EDGE, 1.0 - ROOT_EDGE, grid=grid):
        s = r.root
        shape = EquilibriumShape(ShapeKind.SYMMETRIC, k, s, params.n)
        out.append(ShapeOptimum(shape, h_k, C * (1.0 - s) ** h_k - B, abs(r.residual)))
    return out


def _infeasible_symmetric(params: ProtocolParams) -> ShapeOptimum:
    shape = EquilibriumShape(ShapeKind.SYMMETRIC, params.n, 0.0, params.n)
    return ShapeOptimum(shape, params.h, math.inf, math.inf)


def minimize_symmetric_star(params: ProtocolParams) -> ShapeOptimum:
    """Best symmetric profile [s*k, 0...]; loss is +inf when no interior root exists."""
    best = None
    for h_k in range(1, params.h + 1):
        for cand in symmetric_branch_roots(params, h_k):
            if best is None or cand.loss < best.loss - TOL:
                best = cand
    return best if best is not None else _infeasible_symmetric(params)


def minimize_g(params: ProtocolParams) -> ShapeOptimum:
    """Global minimiser of g over profiles; ties go to the designated shape."""
    d = minimize_designated_star(params)
    s = minimize_symmetric_star(params)
    return s if s.loss < d.loss - TOL else d


# ----------------------------------------------------------------------------
# brute-force grid oracle


@lru_cache(maxsize=4096)
def _min_product_table(length: int, lo: int, hi: int, grid: int):
    """For multisets of ``length`` grid values drawn from ``lo..hi``, the smallest
    product of (1 - v/grid) for every integer sum, with back-pointers."""
    values = np.arange(lo, hi + 1)
    max_sum = length * grid
    best = np.full(max_sum + 1, np.inf)
    best[0] = 1.0
    choices = []
    factors = 1.0 - values / grid
    for _ in range(length):
        nxt = np.full(max_sum + 1, np.inf)
        arg = np.full(max_sum + 1, -1, dtype=np.int64)
        for v, fac in zip(values, factors):
            cand = np.full(max_sum + 1, np.inf)
            src = best[: max_sum + 1 - v]
            cand[v:] = src * fac if fac > 0 else np.where(np.isfinite(src), 0.0, np.inf)
            better = cand < nxt
            nxt[better] = cand[better]
            arg[better] = v
        choices.append(arg)
        best = nxt
    return best, choices


def _rebuild(choices, total: int) -> list[int]:
    vals = []
    for arg in reversed(choices):
        v = int(arg[total])
        vals.append(v)
        total -= v
    return sorted(vals, reverse=True)


def grid_oracle_minimize_g(params: ProtocolParams, grid: int = 100) -> ShapeOptimum:
    """Exact minimum of g over sorted profiles with entries in {0, 1/grid, ..., 1}.

    g only depends on the sum and the product of (1 - s_i) of the top-a block
    and of the bottom-h block, and it increases in all four. For every value
    m of the largest bottom entry we therefore tabulate, per integer sum, the
    smallest achievable product in each block (top entries >= m, bottom
    entries <= m with one entry equal to m) and scan all sum pairs. This visits
    the same optimum as enumerating every sorted grid profile. The grid
    minimum exceeds the continuous one by at most n/grid.
    """
    if params.n > MAX_ORACLE_N:
        raise ValueError(f"grid oracle supports n <= {MAX_ORACLE_N}")
    if grid < 1 or grid > 200:
        raise ValueError("grid must lie in 1..200")
    a, h, C, B = params.a, params.h, params.C, params.B
    best = (math.inf, None)
    for m in range(grid + 1):
        top, top_ch = _min_product_table(a, m, grid, grid)
        # bottom block: one entry fixed at m, the other h-1 in [0, m]
        low, low_ch = _min_product_table(h - 1, 0, m, grid)
        fac_m = 1.0 - m / grid
        top_sum = np.arange(top.size)
        low_sum = np.arange(low.size) + m
        ok_t = np.isfinite(top)
        ok_l = np.isfinite(low)
        St, Pt = top_sum[ok_t] / grid, top[ok_t]
        Sl, Pl = low_sum[ok_l] / grid, low[ok_l] * fac_m
        left = St[:, None] + Sl[None, :] + C * Pt[:, None] * Pl[None, :]
        right = C * Pl[None, :] - B
        g = np.maximum(left, right)
        idx = np.unravel_index(np.argmin(g), g.shape)
        val = float(g[idx])
        if val < best[0] - 1e-12:
            it = int(top_sum[ok_t][idx[0]])
            il = int(np.arange(low.size)[ok_l][idx[1]])
            prof = _rebuild(top_ch, it) + sorted([m] + _rebuild(low_ch, il), reverse=True)
            best = (val, prof)
    s = np.array(best[1], dtype=float) / grid
    profile = StrategyProfile(tuple(s))
    return ShapeOptimum(_classify_profile(s, params.n), 0, best[0],
                        verify_branch_equality(params, profile), profile)


def _classify_profile(s: np.ndarray, n: int) -> EquilibriumShape:
    """Nearest equilibrium shape of a free-form profile (for reporting)."""
    if s[0] >= 1.0 and (n == 1 or s[1] < 1.0):
        rest = s[1:][s[1:] > 0]
        mean = float(rest.mean()) if rest.size else 0.0
        return EquilibriumShape(ShapeKind.DESIGNATED, int(rest.size), mean, n)
    nz = s[s > 0]
    mean = float(nz.mean()) if nz.size else 0.0
    return EquilibriumShape(ShapeKind.SYMMETRIC, int(nz.size), mean, n)
