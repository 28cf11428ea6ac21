"""Payment rules and their text serialisation.

Structured rules treat provers in role classes (designate, committee,
idle) symmetrically, so their payments only depend on how many members of
each class delivered. A table rule lists the payment vector for every
delivery outcome; outcome rows follow :func:`core.delivery_bits`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .core import delivery_bits


def _committee_prize(k: int, s: float) -> float:
    """k s / (1 - (1-s)^k): the prize whose expected share per delivery is 1."""
    return k * s / -np.expm1(k * np.log1p(-s))


class StructuredRule:
    """Rules whose payments depend on per-class delivery counts only."""

    n: int

    def classes(self) -> list[list[int]]:
        raise NotImplementedError

    def member_pay(self, cls: int, own: int, counts: Sequence[int]) -> float:
        """Payment to one member of ``cls`` given its own bit and class counts."""
        raise NotImplementedError

    def total_pay(self, counts: Sequence[int]) -> float:
        raise NotImplementedError

    def payments(self, d: Sequence[int]) -> np.ndarray:
        cls_of = {}
        for c, members in enumerate(self.classes()):
            for i in members:
                cls_of[i] = c
        counts = [sum(int(d[i]) for i in members) for members in self.classes()]
        return np.array([self.member_pay(cls_of[i], int(d[i]), counts) for i in range(self.n)])


@dataclass(frozen=True)
class DesignatedRule(StructuredRule):
    """Prover 0 delivers for sure; provers 1..k mix with probability ``s``.

    Nothing is paid unless the designate delivers. The designate gets 1 + ks
    alone and 1 - (1-s)^k Q otherwise, committee deliverers split
    Q = ks / (1 - (1-s)^k). With ``slash`` > 0 every prover forfeits that
    amount whenever the designate fails.
    """

    n: int
    k: int
    s: float
    slash: float = 0.0

    def __post_init__(self):
        if not 0 <= self.k <= self.n - 1:
            raise ValueError("committee size must lie in 0..n-1")
        if self.k >= 1 and not 0.0 < self.s < 1.0:
            raise ValueError("s must lie in (0, 1) for a non-empty committee")
        if self.slash < 0:
            raise ValueError("slash must be non-negative")

    @property
    def prize(self) -> float:
        return _committee_prize(self.k, self.s) if self.k else 0.0

    @property
    def total(self) -> float:
        return 1.0 + self.k * self.s if self.k else 1.0

    def classes(self):
        return [[0], list(range(1, self.k + 1)), list(range(self.k + 1, self.n))]

    def member_pay(self, cls, own, counts):
        if counts[0] == 0:
            return -self.slash
        t = counts[1]
        if cls == 0:
            if t == 0:
                return self.total
            return 1.0 - (1.0 - self.s) ** self.k * self.prize
        if cls == 1 and own:
            return self.prize / t
        return 0.0

    def total_pay(self, counts):
        return -self.n * self.slash if counts[0] == 0 else self.total


@dataclass(frozen=True)
class AnonymousSymmetricRule(StructuredRule):
    """Committee 0..k-1; ``f[t-1]`` is split among t delivering members.

    With ``slash`` > 0 every prover forfeits that amount when no committee
    member delivers.
    """

    n: int
    f: tuple[float, ...]
    slash: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(float(x) for x in self.f))
        if not 1 <= len(self.f) <= self.n:
            raise ValueError("committee size must lie in 1..n")
        if self.slash < 0:
            raise ValueError("slash must be non-negative")

    @property
    def k(self) -> int:
        return len(self.f)

    def classes(self):
        return [list(range(self.k)), list(range(self.k, self.n))]

    def member_pay(self, cls, own, counts):
        t = counts[0]
        if t == 0:
            return -self.slash
        if cls == 0 and own:
            return self.f[t - 1] / t
        return 0.0

    def total_pay(self, counts):
        t = counts[0]
        return -self.n * self.slash if t == 0 else self.f[t - 1]


@dataclass(frozen=True)
class LotteryRule(StructuredRule):
    """One uniformly drawn committee deliverer wins ``prize`` (paid in expectation)."""

    n: int
    k: int
    prize: float

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError("committee size must lie in 1..n")

    def classes(self):
        return [list(range(self.k)), list(range(self.k, self.n))]

    def member_pay(self, cls, own, counts):
        t = counts[0]
        return self.prize / t if (cls == 0 and own and t) else 0.0

    def total_pay(self, counts):
        return self.prize if counts[0] else 0.0


@dataclass(frozen=True, eq=False)
class TableRule:
    """Explicit payments: ``payments[d, i]`` for outcome row d and prover i."""

    n: int
    payments: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.payments, dtype=float)
        if arr.shape != (2 ** self.n, self.n):
            raise ValueError(f"table must have shape ({2 ** self.n}, {self.n})")
        if not np.all(np.isfinite(arr)):
            raise ValueError("table payments must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "payments", arr)

    def pay(self, d: Sequence[int]) -> np.ndarray:
        idx = 0
        for bit in d:
            idx = 2 * idx + int(bit)
        return self.payments[idx]


PaymentRule = DesignatedRule | AnonymousSymmetricRule | LotteryRule | TableRule


def to_table(rule: PaymentRule) -> TableRule:
    if isinstance(rule, TableRule):
        return rule
    bits = delivery_bits(rule.n)
    return TableRule(rule.n, np.array([rule.payments(d) for d in bits]))


def rule_to_dict(rule: PaymentRule) -> dict[str, Any]:
    if isinstance(rule, DesignatedRule):
        return {"type": "designated", "n": rule.n, "k": rule.k, "s": rule.s, "slash": rule.slash}
    if isinstance(rule, AnonymousSymmetricRule):
        return {"type": "anonymous_symmetric", "n": rule.n, "f": list(rule.f), "slash": rule.slash}
    if isinstance(rule, LotteryRule):
        return {"type": "lottery", "n": rule.n, "k": rule.k, "prize": rule.prize}
    if isinstance(rule, TableRule):
        return {"type": "table", "n": rule.n, "payments": rule.payments.tolist()}
    raise TypeError(f"not a payment rule: {type(rule).__name__}")


def rule_from_dict(doc: dict[str, Any]) -> PaymentRule:
    try:
        kind = doc["type"]
        if kind == "designated":
            return DesignatedRule(int(doc["n"]), int(doc["k"]), float(doc["s"]), float(doc.get("slash", 0.0)))
        if kind == "anonymous_symmetric":
            return AnonymousSymmetricRule(int(doc["n"]), tuple(doc["f"]), float(doc.get("slash", 0.0)))
        if kind == "lottery":
            return LotteryRule(int(doc["n"]), int(doc["k"]), float(doc["prize"]))
        if kind == "table":
            return TableRule(int(doc["n"]), np.asarray(doc["payments"], dtype=float))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed payment rule: {exc}") from exc
    raise ValueError(f"unknown payment rule type {kind!r}")


def dumps_rule(rule: PaymentRule) -> str:
    return json.dumps(rule_to_dict(rule), sort_keys=True)


def loads_rule(text: str) -> PaymentRule:
    doc = json.loads(text)
    if isinstance(doc, dict) and "rule" in doc and "type" not in doc:
        doc = doc["rule"]
    return rule_from_dict(doc)
