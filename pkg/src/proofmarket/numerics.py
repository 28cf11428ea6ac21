"""Scalar root finding and the principal branch of Lambert W."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

MAX_ITER = 200
ROOT_TOL = 1e-10
INV_E = math.exp(-1.0)


class RootError(ValueError):
    pass


@dataclass(frozen=True)
class RootResult:
    root: float
    residual: float
    iterations: int
    bracketed: bool


def find_root(f: Callable[[float], float], lo: float, hi: float,
              df: Optional[Callable[[float], float]] = None,
              ftol: float = ROOT_TOL, max_iter: int = MAX_ITER) -> RootResult:
    """Bracketed root of ``f`` on [lo, hi].

    Newton steps are taken when ``df`` is supplied and the step stays inside
    the current bracket; otherwise the bracket is bisected. The loop stops
    once |f| <= ftol or the bracket has collapsed to adjacent floats.
    """
    lo, hi = float(lo), float(hi)
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return RootResult(lo, 0.0, 0, True)
    if fhi == 0.0:
        return RootResult(hi, 0.0, 0, True)
    if (flo < 0) == (fhi < 0):
        raise RootError("not bracketed")

    x = 0.5 * (lo + hi)
    fx = f(x)
    for it in range(1, max_iter + 1):
        if abs(fx) <= ftol:
            return RootResult(x, fx, it, True)
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        nxt = None
        if df is not None:
            d = df(x)
            if d != 0 and np.isfinite(d):
                cand = x - fx / d
                if lo < cand < hi:
                    nxt = cand
        if nxt is None:
            # secant inside the bracket, falling back to the midpoint when it stalls
            mid = 0.5 * (lo + hi)
            nxt = mid
            if it % 3 and fhi != flo:
                cand = hi - fhi * (hi - lo) / (fhi - flo)
                if lo < cand < hi and abs(cand - mid) < 0.5 * (hi - lo) * 0.9:
                    nxt = cand
        if nxt == x or hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(x)):
            # bracket exhausted: return the endpoint with the smaller residual
            best = min((abs(flo), lo, flo), (abs(fhi), hi, fhi), (abs(fx), x, fx))
            return RootResult(best[1], best[2], it, True)
        x = nxt
        fx = f(x)
    if abs(fx) <= ftol:
        return RootResult(x, fx, max_iter, True)
    raise RootError(f"maximum iterations ({max_iter}) exceeded")


def find_all_roots(f: Callable[[float], float], lo: float, hi: float,
                   grid: int = 4096, ftol: float = ROOT_TOL) -> list[RootResult]:
    """Every sign-change root of ``f`` visible on a uniform grid over [lo, hi]."""
    if grid < 2:
        raise ValueError("grid must be at least 2")
    xs = np.linspace(lo, hi, grid + 1)
    fs = np.array([f(x) for x in xs], dtype=float)
    roots: list[RootResult] = []
    for i in range(grid):
        a, b = fs[i], fs[i + 1]
        if a == 0.0:
            roots.append(RootResult(float(xs[i]), 0.0, 0, True))
        elif i == grid - 1 and b == 0.0:
            roots.append(RootResult(float(xs[i + 1]), 0.0, 0, True))
        elif (a < 0) != (b < 0) and b != 0.0:
            roots.append(find_root(f, xs[i], xs[i + 1], ftol=ftol))
    roots.sort(key=lambda r: r.root)
    out: list[RootResult] = []
    for r in roots:
        if out and abs(r.root - out[-1].root) <= 1e-8:
            continue
        out.append(r)
    return out


def _halley(x: float, w: float) -> float:
    for _ in range(100):
        ew = math.exp(w)
        fw = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = fw / (ew * wp1 - (w + 2.0) * fw / (2.0 * wp1))
        w_new = w - step
        if abs(step) <= 1e-15 * (1.0 + abs(w_new)):
            return w_new
        w = w_new
    return w


def lambert_w(x: float) -> float:
    """Principal branch W0(x) for x >= -1/e."""
    x = float(x)
    if math.isnan(x) or x < -INV_E - 1e-15:
        raise ValueError("lambert_w requires x >= -1/e")
    if x == 0.0:
        return 0.0
    if x <= -INV_E:
        return -1.0
    if math.isinf(x):
        return math.inf
    p2 = 2.0 * (math.e * x + 1.0)
    if p2 < 0.25:
        # series about the branch point in p = sqrt(2(ex + 1))
        p = math.sqrt(p2)
        w = -1.0 + p - p2 / 3.0 + 11.0 / 72.0 * p * p2
        if p2 < 1e-6:
            return w
    elif x < 3.0:
        w = math.log1p(x)
        w = w * (1.0 - math.log1p(w) / (2.0 + w))
    else:
        lx = math.log(x)
        w = lx - math.log(lx)
    return _halley(x, w)


def lambert_w_exp(L: float) -> float:
    """W0(e^L) computed without forming e^L, i.e. the root of w + log w = L."""
    L = float(L)
    if L < 500.0:
        return lambert_w(math.exp(L))
    w = L - math.log(L)
    for _ in range(100):
        fw = w + math.log(w) - L
        step = fw / (1.0 + 1.0 / w)
        w -= step
        if abs(step) <= 1e-15 * w:
            break
    return w
