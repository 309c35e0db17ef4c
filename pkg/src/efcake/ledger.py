"""Ordinal cut budgets and the per-run ledger that charges them.

A budget is an ordinal ``c*w + m`` below ``w**2``.  Every cut strictly lowers
it.  When the finite part is exhausted an observer replaces one ``w`` by a
natural number: the number of cuts it declared sufficient to finish the
current phase.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import NamedTuple

__all__ = [
    "OrdinalBudget",
    "BudgetExhausted",
    "ObserverUnready",
    "OrdinalParseError",
    "PhaseBoundExceeded",
    "charge_cut",
    "parse_ordinal",
    "format_ordinal",
    "leq",
    "QueryEvent",
    "Ledger",
]


class BudgetExhausted(RuntimeError):
    """A cut was requested with the counter already at 0."""


class ObserverUnready(RuntimeError):
    """An ``w`` had to be converted but no phase bound was declared."""


class PhaseBoundExceeded(RuntimeError):
    """A phase made more cuts than the observer declared for it."""


class OrdinalParseError(ValueError):
    def __init__(self, text: str, position: int, reason: str):
        super().__init__(f"{reason} at position {position} in {text!r}")
        self.text = text
        self.position = position


class OrdinalBudget(NamedTuple):
    """``omega * w + finite``; tuple order is exactly the ordinal order."""

    omega: int = 0
    finite: int = 0

    def __str__(self) -> str:
        return format_ordinal(self)

    def __add__(self, other):  # ordinal sum: a finite tail is absorbed by a following w
        if not isinstance(other, OrdinalBudget):
            return NotImplemented
        if other.omega > 0:
            return OrdinalBudget(self.omega + other.omega, other.finite)
        return OrdinalBudget(self.omega, self.finite + other.finite)

    def is_zero(self) -> bool:
        return self.omega == 0 and self.finite == 0


def charge_cut(budget: OrdinalBudget, phase_bound: int | None = None) -> OrdinalBudget:
    c, m = budget
    if m > 0:
        return OrdinalBudget(c, m - 1)
    if c == 0:
        raise BudgetExhausted("cut charged against an exhausted budget")
    if phase_bound is None:
        raise ObserverUnready(f"budget {format_ordinal(budget)} needs a phase bound to descend")
    if phase_bound < 1:
        raise ValueError("phase bound must cover at least the cut being charged")
    return OrdinalBudget(c - 1, phase_bound - 1)


def leq(a: OrdinalBudget, b: OrdinalBudget) -> bool:
    return tuple(a) <= tuple(b)


def parse_ordinal(text: str) -> OrdinalBudget:
    """Parse ``"Aw+B"``, ``"Aw"`` or ``"B"``."""
    s = text.strip()
    if not s:
        raise OrdinalParseError(text, 0, "empty ordinal")
    pos = 0
    digits = re.match(r"\d+", s)
    if not digits:
        raise OrdinalParseError(text, 0, "expected digits")
    first = int(digits.group())
    pos = digits.end()
    if pos == len(s):
        return OrdinalBudget(0, first)
    if s[pos] != "w":
        raise OrdinalParseError(text, pos, f"unexpected {s[pos]!r}")
    pos += 1
    if pos == len(s):
        return OrdinalBudget(first, 0)
    if s[pos] != "+":
        if s[pos] == "^" or s[pos:pos + 1] == "w":
            raise OrdinalParseError(text, pos, "ordinals >= w^2 are not supported")
        raise OrdinalParseError(text, pos, f"unexpected {s[pos]!r}")
    pos += 1
    tail = re.match(r"\d+", s[pos:])
    if not tail:
        raise OrdinalParseError(text, pos, "expected digits after '+'")
    if pos + tail.end() != len(s):
        raise OrdinalParseError(text, pos + tail.end(), "trailing characters")
    return OrdinalBudget(first, int(tail.group()))


def format_ordinal(budget: OrdinalBudget) -> str:
    c, m = budget
    if c == 0:
        return str(m)
    return f"{c}w+{m}"


@dataclass(frozen=True)
class QueryEvent:
    """One transcript record: a query, cut, declaration, assignment or counter update."""

    kind: str
    agent: str
    details: tuple[str, ...] = ()
    stage: int = 0

    def line(self) -> str:
        parts = ["EVT", str(self.stage), self.kind, self.agent, *self.details]
        return " ".join(parts)


@dataclass
class Ledger:
    """Mutable per-run accounting: budget counter, phase bound and transcript.

    ``budget=None`` counts cuts without enforcing any ordinal bound.
    """

    budget: OrdinalBudget | None = None
    events: list[QueryEvent] = field(default_factory=list)
    stage: int = 0
    cuts: int = 0
    omega_conversions: int = 0
    phase_bound: int | None = None
    phase_cuts: int = 0
    initial: OrdinalBudget | None = field(default=None, init=False)

    def __post_init__(self):
        if isinstance(self.budget, str):
            self.budget = parse_ordinal(self.budget)
        self.initial = self.budget

    def begin_phase(self, bound: int) -> None:
        """Declare that the phase starting now needs at most ``bound`` cuts."""
        self.phase_bound = bound
        self.phase_cuts = 0
        self.record("PHASE", "observer", str(bound))

    def end_phase(self) -> None:
        self.phase_bound = None
        self.phase_cuts = 0

    def record(self, kind: str, agent: str, *details: str) -> None:
        self.events.append(QueryEvent(kind, agent, tuple(details), self.stage))

    def charge(self, agent: str, *details: str) -> None:
        """Charge one cut made by ``agent`` and log CUT plus COUNTER events."""
        if self.phase_bound is not None and self.phase_cuts >= self.phase_bound:
            raise PhaseBoundExceeded(f"phase declared {self.phase_bound} cuts")
        if self.budget is not None:
            remaining = None
            if self.phase_bound is not None:
                remaining = self.phase_bound - self.phase_cuts
            before = self.budget
            self.budget = charge_cut(self.budget, remaining)
            if self.budget.omega < before.omega:
                self.omega_conversions += 1
        self.cuts += 1
        self.phase_cuts += 1
        self.record("CUT", agent, *details)
        if self.budget is not None:
            self.record("COUNTER", "observer", format_ordinal(self.budget))

    def count(self, kind: str, agent: str | None = None) -> int:
        return sum(1 for e in self.events if e.kind == kind and (agent is None or e.agent == agent))
