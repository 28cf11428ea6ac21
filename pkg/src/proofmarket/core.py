"""Domain types, instance validation and shared combinatorial helpers.

Money is measured in proof-cost units: producing one proof costs 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

TOL = 1e-9
PAPER_TOL = 5e-3


@dataclass(frozen=True)
class ProtocolParams:
    """A procurement instance.

    ``h`` provers are guaranteed honest out of ``n``; the remaining ``a``
    may be corrupted. ``C`` is the penalty paid when nobody delivers and
    ``B`` the aggregate stake that can be slashed.
    """

    h: int
    n: int
    C: float
    B: float = 0.0

    @property
    def a(self) -> int:
        return self.n - self.h

    @property
    def tau(self) -> float:
        return self.h / self.n

    def with_C(self, C: float) -> "ProtocolParams":
        return validate_params(self.h, self.n, C, self.B)

    def with_B(self, B: float) -> "ProtocolParams":
        return validate_params(self.h, self.n, self.C, B)


def validate_params(h: int, n: int, C: float, B: float | None = 0.0) -> ProtocolParams:
    """Check an instance and return it with ``a`` and ``tau`` derivable."""
    if B is None:
        B = 0.0
    if int(h) != h or int(n) != n:
        raise ValueError("h and n must be integers")
    h, n = int(h), int(n)
    if h < 1:
        raise ValueError("h must be at least 1")
    if n <= h:
        raise ValueError("n must exceed h")
    C = float(C)
    B = float(B)
    if not np.isfinite(C) or C <= 1.0:
        raise ValueError("C must exceed 1")
    if not np.isfinite(B) or B < 0.0:
        raise ValueError("B must be non-negative")
    return ProtocolParams(h=h, n=n, C=C, B=B)


@dataclass(frozen=True)
class StrategyProfile:
    """Delivery probabilities sorted in non-increasing order.

    ``permutation[j]`` is the position in the raw input of the prover that
    now sits at index ``j``.
    """

    s: tuple[float, ...]
    permutation: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        s = tuple(float(x) for x in self.s)
        object.__setattr__(self, "s", s)
        if not self.permutation:
            object.__setattr__(self, "permutation", tuple(range(len(s))))
        if any(not (0.0 <= x <= 1.0) for x in s):
            raise ValueError("profile entries must lie in [0, 1]")
        if any(s[i] < s[i + 1] for i in range(len(s) - 1)):
            raise ValueError("profile must be sorted in non-increasing order")

    @property
    def n(self) -> int:
        return len(self.s)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.s, dtype=float)


def canonicalize_profile(raw: Sequence[float]) -> StrategyProfile:
    """Sort a probability vector in non-increasing order (stable)."""
    arr = np.asarray(raw, dtype=float).ravel()
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("profile entries must lie in [0, 1]")
    perm = np.argsort(-arr, kind="stable")
    return StrategyProfile(tuple(arr[perm]), tuple(int(i) for i in perm))


def check_delivery(d: Sequence[int], n: int) -> tuple[int, ...]:
    """Validate a delivery vector of ``n`` bits."""
    bits = tuple(int(x) for x in d)
    if len(bits) != n:
        raise ValueError(f"delivery vector must have length {n}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("delivery entries must be 0 or 1")
    return bits


class ShapeKind(str, Enum):
    DESIGNATED = "designated"
    SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class EquilibriumShape:
    """Designated: [1, s*k, 0...]. Symmetric: [s*k, 0...]."""

    kind: ShapeKind
    k: int
    s: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "kind", ShapeKind(self.kind))
        if self.k < 0:
            raise ValueError("committee size must be non-negative")
        if not 0.0 <= self.s <= 1.0:
            raise ValueError("mixing probability must lie in [0, 1]")
        limit = self.n - 1 if self.kind is ShapeKind.DESIGNATED else self.n
        if self.k > limit:
            raise ValueError(f"committee size {self.k} too large for n={self.n}")

    @property
    def support(self) -> int:
        """Number of provers that deliver with positive probability."""
        extra = 1 if self.kind is ShapeKind.DESIGNATED else 0
        return extra + (self.k if self.s > 0 else 0)

    def expand(self) -> StrategyProfile:
        if self.kind is ShapeKind.DESIGNATED:
            s = [1.0] + [self.s] * self.k + [0.0] * (self.n - 1 - self.k)
        else:
            s = [self.s] * self.k + [0.0] * (self.n - self.k)
        return StrategyProfile(tuple(s))


@dataclass(frozen=True)
class IcReport:
    deliver_pay: tuple[float, ...]
    no_deliver_pay: tuple[float, ...]
    satisfied: tuple[bool, ...]
    max_residual: float

    @property
    def ok(self) -> bool:
        return all(self.satisfied)


def ic_verdicts(s: Sequence[float], deliver: Sequence[float], no_deliver: Sequence[float],
                tol: float = 1e-8) -> IcReport:
    """Apply the two-sided incentive constraints to expected payments."""
    sat = []
    worst = 0.0
    for si, dp, ndp in zip(s, deliver, no_deliver):
        viol = 0.0
        if si > 0:
            viol = max(viol, (ndp + 1.0) - dp)
        if si < 1:
            viol = max(viol, (dp - 1.0) - ndp)
        worst = max(worst, viol)
        sat.append(viol <= tol)
    return IcReport(tuple(float(x) for x in deliver), tuple(float(x) for x in no_deliver),
                    tuple(sat), float(worst))


def binomial_pmf(m: int, s: float) -> np.ndarray:
    """Probabilities of 0..m successes in ``m`` Bernoulli(s) trials.

    Built from the mode outwards with ratio recurrences, so no factorials
    appear and nothing under- or overflows for m up to a few hundred.
    """
    if m < 0:
        raise ValueError("number of trials must be non-negative")
    if s <= 0.0:
        out = np.zeros(m + 1)
        out[0] = 1.0
        return out
    if s >= 1.0:
        out = np.zeros(m + 1)
        out[m] = 1.0
        return out
    q = 1.0 - s
    out = np.empty(m + 1)
    mode = min(m, int((m + 1) * s))
    out[mode] = 1.0
    for j in range(mode, m):
        out[j + 1] = out[j] * (m - j) / (j + 1) * s / q
    for j in range(mode, 0, -1):
        out[j - 1] = out[j] * j / (m - j + 1) * q / s
    return out / out.sum()


def binom_coeffs(m: int) -> np.ndarray:
    """Row ``m`` of Pascal's triangle as floats."""
    row = np.ones(m + 1)
    for j in range(1, m + 1):
        row[j] = row[j - 1] * (m - j + 1) / j
    return np.round(row)


def delivery_bits(n: int) -> np.ndarray:
    """All 2^n delivery vectors; row ``d`` has prover 0 as its most significant bit."""
    idx = np.arange(2 ** n)
    shifts = np.arange(n - 1, -1, -1)
    return ((idx[:, None] >> shifts) & 1).astype(np.int8)


def outcome_probabilities(s: Sequence[float]) -> np.ndarray:
    """Probability of every delivery vector when each prover i delivers w.p. s_i."""
    prob = np.ones(1)
    for si in s:
        prob = np.outer(prob, [1.0 - si, si]).ravel()
    return prob
