"""Exact post-hoc checkers for divisions, advantages and near-exact splits.

Every comparison is closed (``>=``/``<=``) over exact rationals.  Each check
reports the worst offending pair and a margin: non-negative on success, the
size of the worst violation (negated) on failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .agents import AgentSpec
from .allocation import Allocation
from .cake import PieceSet, measure

__all__ = [
    "CheckResult",
    "VerificationReport",
    "VerificationFailed",
    "check_partition",
    "check_envy_free",
    "check_proportional",
    "check_advantage",
    "check_near_exact",
]


class VerificationFailed(AssertionError):
    def __init__(self, report: "VerificationReport", context: str = ""):
        failed = [c for c in report.checks if not c.passed]
        super().__init__(f"{context}: " + "; ".join(map(str, failed)))
        self.report = report


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: tuple | None
    margin: Fraction

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        where = "" if self.worst is None else " worst=" + ",".join(map(str, self.worst))
        return f"{self.name} {status} margin={self.margin}{where}"


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, result: CheckResult) -> CheckResult:
        self.checks.append(result)
        return result

    def require(self, context: str = "") -> "VerificationReport":
        if not self.overall:
            raise VerificationFailed(self, context)
        return self

    def lines(self) -> list[str]:
        return [f"CHECK {c}" for c in self.checks]


def check_partition(cake: PieceSet, alloc: Allocation) -> CheckResult:
    """Shares and residue are pairwise disjoint and their union is exactly ``cake``."""
    parts = [(name, piece) for name, piece in sorted(alloc.shares.items())]
    parts.append(("<residue>", alloc.residue))
    worst = None
    bad = Fraction(0)
    for a in range(len(parts)):
        for b in range(a + 1, len(parts)):
            overlap = (parts[a][1] & parts[b][1]).length()
            if overlap > 0:
                bad += overlap
                if worst is None:
                    worst = (parts[a][0], parts[b][0])
    union = PieceSet.union_all(p for _, p in parts)
    missing = (cake - union).length()
    extra = (union - cake).length()
    if (missing or extra) and worst is None:
        worst = ("missing" if missing else "extra",)
    bad += missing + extra
    return CheckResult("partition", bad == 0, worst, -bad)


def _by_name(agents: Iterable[AgentSpec]) -> dict[str, AgentSpec]:
    return {a.name: a for a in agents}


def check_envy_free(
    agents: Sequence[AgentSpec],
    alloc: Allocation,
    tolerance: Fraction = Fraction(0),
    scope: Sequence[str] | None = None,
) -> CheckResult:
    """Every in-scope player values its share at least every other in-scope share, less ``tolerance``."""
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    names = list(scope) if scope is not None else [a.name for a in agents]
    lookup = _by_name(agents)
    margin = None
    worst = None
    for i in names:
        v = lookup[i].valuation
        own = measure(v, alloc.share(i))
        for k in names:
            if k == i:
                continue
            gap = own - measure(v, alloc.share(k))
            if margin is None or gap < margin:
                margin, worst = gap, (i, k)
    if margin is None:
        margin = Fraction(0)
    return CheckResult("envy_free", margin >= -tolerance, worst, margin)


def check_proportional(
    agents: Sequence[AgentSpec], alloc: Allocation, cake: PieceSet | None = None
) -> CheckResult:
    cake = PieceSet.full() if cake is None else cake
    n = len(agents)
    margin = None
    worst = None
    for a in agents:
        gap = measure(a.valuation, alloc.share(a.name)) - measure(a.valuation, cake) / n
        if margin is None or gap < margin:
            margin, worst = gap, (a.name,)
    margin = Fraction(0) if margin is None else margin
    return CheckResult("proportional", margin >= 0, worst, margin)


def check_advantage(
    agents: Sequence[AgentSpec], alloc: Allocation, pair: tuple[str, str], residue: PieceSet
) -> CheckResult:
    """Each of the pair would not envy the other even if the other got all of ``residue``."""
    lookup = _by_name(agents)
    i, j = pair
    margins = []
    for a, b in ((i, j), (j, i)):
        v = lookup[a].valuation
        gap = measure(v, alloc.share(a)) - measure(v, alloc.share(b)) - measure(v, residue)
        margins.append((gap, (a, b)))
    margin, worst = min(margins)
    return CheckResult("advantage", margin >= 0, worst, margin)


def check_near_exact(
    agents: Sequence[AgentSpec],
    bundles: Sequence[PieceSet],
    parts: int | None = None,
    epsilon: Fraction = Fraction(0),
    starred: str | None = None,
    ratios: Sequence[Fraction] | None = None,
    whole: PieceSet | None = None,
) -> CheckResult:
    """Every agent sees bundle ``r`` within ``epsilon * v(whole)`` of ``ratio_r * v(whole)``.

    ``ratios`` defaults to ``1/parts`` each; ``starred`` must see every bundle exactly.
    """
    if ratios is None:
        parts = len(bundles) if parts is None else parts
        ratios = [Fraction(1, parts)] * parts
    if len(ratios) != len(bundles):
        raise ValueError("one ratio per bundle required")
    whole = PieceSet.union_all(bundles) if whole is None else whole
    margin = None
    worst = None
    for a in agents:
        total = measure(a.valuation, whole)
        allowed = Fraction(0) if a.name == starred else epsilon * total
        for r, (b, ratio) in enumerate(zip(bundles, ratios)):
            slack = allowed - abs(measure(a.valuation, b) - ratio * total)
            if margin is None or slack < margin:
                margin, worst = slack, (a.name, r)
    margin = Fraction(0) if margin is None else margin
    return CheckResult("near_exact", margin >= 0, worst, margin)
