"""Contract-checked realizations of the near-exact, unfair near-exact,
controversial-shrink and advantage sub-protocols.

Each realization is referee-assisted: the referee sees every density and
computes a construction, the leading player performs the cuts, and the
result is checked against its contract before it is returned.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .agents import AgentSpec, cut
from .allocation import Allocation
from .cake import PieceSet, measure, perfect_partition, refine
from .ledger import Ledger
from .verification import (
    VerificationReport,
    check_advantage,
    check_envy_free,
    check_near_exact,
    check_partition,
)

__all__ = [
    "SubprotocolFailed",
    "InvalidWitness",
    "NearExactResult",
    "ControversyWitness",
    "AdvResult",
    "near_exact_star",
    "near_exact_split",
    "unfair_near_exact",
    "near_exact_cut_bound",
    "controversial_shrink",
    "shrink_cut_bound",
    "witness_from_values",
    "find_controversy",
    "normalized",
    "adv",
    "count_new_cuts",
]


class SubprotocolFailed(RuntimeError):
    def __init__(self, message: str, best_deviation: Fraction | None = None):
        super().__init__(message)
        self.best_deviation = best_deviation


class InvalidWitness(ValueError):
    pass


@dataclass
class NearExactResult:
    bundles: list[PieceSet]
    achieved_deviation: Fraction
    cuts_used: int


@dataclass
class ControversyWitness:
    """``piece`` splits the A-players: ``group_hi`` values it at least ``alpha``,
    ``group_lo`` at most ``beta``.  Groups are listed by value, highest first."""

    piece: PieceSet
    group_hi: tuple[str, ...]
    group_lo: tuple[str, ...]
    alpha: Fraction
    beta: Fraction
    values: dict[str, Fraction] = field(default_factory=dict)
    cuts_used: int = 0


@dataclass
class AdvResult:
    allocation: Allocation
    residue: PieceSet
    pair: tuple[int, int]
    path: str
    cuts_used: int
    report: VerificationReport


def normalized(agent: AgentSpec, piece: PieceSet, whole: PieceSet | None) -> Fraction:
    """Value of ``piece`` as a fraction of the agent's value of ``whole``."""
    if whole is None:
        return measure(agent.valuation, piece)
    total = measure(agent.valuation, whole)
    if total == 0:
        return Fraction(0)
    return measure(agent.valuation, piece) / total


def count_new_cuts(pieces: Sequence[PieceSet], known: set[Fraction]) -> int:
    """Distinct partition boundary points not already present in ``known``."""
    points: set[Fraction] = set()
    for p in pieces:
        points |= p.boundaries()
    return len(points - known)


# near-exact family ---------------------------------------------------------


def near_exact_cut_bound(players: Sequence[AgentSpec], p: PieceSet, k: int) -> int:
    """Cuts a k-way near-exact split of ``p`` may take: the leader's ``k-1``
    cuts plus at most ``k + 1`` assisted cuts per refined segment."""
    if k <= 1:
        return 0
    segments = len(refine(p, [a.valuation for a in players])) + (k - 1)
    return (k - 1) + segments * (k + 1)


def near_exact_split(
    players: Sequence[AgentSpec],
    p: PieceSet,
    ratios: Sequence[Fraction],
    epsilon: Fraction,
    ledger: Ledger | None = None,
    phase: bool = True,
) -> NearExactResult:
    """Split ``p`` into bundles near the given ratios for everyone; exact for ``players[0]``.

    The leader cuts at its own ratio points.  If some player deviates by more
    than ``epsilon`` (relative to its value of ``p``), every constant-density
    segment keeps a ``1 - lam`` slice in its bundle and deals the ``lam``
    remainder out in the target ratios, which shrinks every player's
    deviation by the same factor while the leader stays exact.
    """
    ratios = [Fraction(r) for r in ratios]
    epsilon = Fraction(epsilon)
    if not players:
        raise ValueError("need at least one player")
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must lie in [0, 1)")
    if any(r < 0 for r in ratios) or sum(ratios) != 1:
        raise ValueError("ratios must be non-negative and sum to 1")
    k = len(ratios)
    if k == 1:
        return NearExactResult([p], Fraction(0), 0)
    if ledger is not None and phase:
        ledger.begin_phase(near_exact_cut_bound(players, p, k))
    lead = players[0]
    total = measure(lead.valuation, p)
    acc = Fraction(0)
    points = []
    for r in ratios[:-1]:
        acc += r
        points.append(cut(lead, p, total * acc, ledger))
    edges = [Fraction(0), *points, Fraction(1)]
    base = [p.clip(a, b) for a, b in zip(edges, edges[1:])]

    worst = _relative_deviation(players, base, ratios, p)
    bundles = base
    assisted = 0
    if worst > epsilon:
        lam = 1 - epsilon / worst
        bundles = _mix(players, p, points, ratios, lam)
        assisted = count_new_cuts(bundles, p.boundaries() | set(points))
        for _ in range(assisted):
            if ledger is not None:
                ledger.charge(lead.name, "assisted")
    deviation = _relative_deviation(players, bundles, ratios, p)
    result = check_near_exact(players, bundles, epsilon=epsilon, starred=lead.name, ratios=ratios, whole=p)
    if not result.passed:
        raise SubprotocolFailed(f"near-exact contract violated: {result}", deviation)
    if ledger is not None and phase:
        ledger.end_phase()
    return NearExactResult(bundles, deviation, (k - 1) + assisted)


def _relative_deviation(players, bundles, ratios, whole) -> Fraction:
    worst = Fraction(0)
    for a in players:
        total = measure(a.valuation, whole)
        if total == 0:
            continue
        for b, ratio in zip(bundles, ratios):
            dev = abs(measure(a.valuation, b) / total - ratio)
            if dev > worst:
                worst = dev
    return worst


def _mix(players, p, points, ratios, lam) -> list[PieceSet]:
    spans: list[list[tuple[Fraction, Fraction]]] = [[] for _ in ratios]
    for lo, hi in refine(p, [a.valuation for a in players], extra=points):
        home = bisect_right(points, lo)
        width = hi - lo
        cur = lo + (1 - lam) * width
        spans[home].append((lo, cur))
        for r, ratio in enumerate(ratios):
            nxt = cur + lam * ratio * width
            spans[r].append((cur, nxt))
            cur = nxt
    return [PieceSet(tuple(s)) for s in spans]


def near_exact_star(
    players: Sequence[AgentSpec],
    p: PieceSet,
    parts: int,
    epsilon: Fraction,
    ledger: Ledger | None = None,
    phase: bool = True,
) -> NearExactResult:
    """``parts`` bundles: ``players[0]`` sees each exactly ``1/parts`` of ``p``,
    everyone else within ``epsilon`` (relative to their value of ``p``)."""
    if parts < 1:
        raise ValueError("parts must be >= 1")
    return near_exact_split(players, p, [Fraction(1, parts)] * parts, epsilon, ledger, phase)


def unfair_near_exact(
    players: Sequence[AgentSpec],
    p: PieceSet,
    f1: Fraction,
    f2: Fraction,
    epsilon: Fraction,
    ledger: Ledger | None = None,
    phase: bool = True,
) -> NearExactResult:
    f1, f2 = Fraction(f1), Fraction(f2)
    if f1 + f2 != 1 or not (0 < f1 < 1 and 0 < f2 < 1):
        raise ValueError("need 0 < f1, f2 < 1 with f1 + f2 = 1")
    return near_exact_split(players, p, [f1, f2], epsilon, ledger, phase)


# controversy ---------------------------------------------------------------


def witness_from_values(
    piece: PieceSet, order: Sequence[str], values: dict[str, Fraction]
) -> ControversyWitness | None:
    """Split players at the largest gap in their sorted values (first gap wins ties)."""
    ranked = sorted(order, key=lambda name: (-values[name], order.index(name)))
    best_gap = Fraction(0)
    cut_at = None
    for k in range(len(ranked) - 1):
        gap = values[ranked[k]] - values[ranked[k + 1]]
        if gap > best_gap:
            best_gap, cut_at = gap, k + 1
    if cut_at is None:
        return None
    hi, lo = tuple(ranked[:cut_at]), tuple(ranked[cut_at:])
    return ControversyWitness(
        piece, hi, lo, values[hi[-1]], values[lo[0]], {n: values[n] for n in order}
    )


def find_controversy(
    a_players: Sequence[AgentSpec], bundles: Sequence[PieceSet], whole: PieceSet | None
) -> ControversyWitness | None:
    """First bundle on which the A-players' normalized values are not all equal."""
    names = [a.name for a in a_players]
    for b in bundles:
        values = {a.name: normalized(a, b, whole) for a in a_players}
        witness = witness_from_values(b, names, values)
        if witness is not None:
            return witness
    return None


def _validate_witness(witness: ControversyWitness, a_players, whole) -> None:
    names = {a.name for a in a_players}
    hi, lo = set(witness.group_hi), set(witness.group_lo)
    if not hi or not lo or hi & lo or hi | lo != names:
        raise InvalidWitness("groups must be a nontrivial partition of the A-players")
    if not witness.alpha > witness.beta:
        raise InvalidWitness("alpha must exceed beta")
    for a in a_players:
        x = normalized(a, witness.piece, whole)
        if a.name in hi and x < witness.alpha:
            raise InvalidWitness(f"{a.name} values the piece below alpha")
        if a.name in lo and x > witness.beta:
            raise InvalidWitness(f"{a.name} values the piece above beta")


def _halvings_needed(maxval: Fraction, delta: Fraction) -> int:
    k = 0
    while maxval > delta * 2**k:
        k += 1
    return k


def shrink_cut_bound(players: Sequence[AgentSpec], piece: PieceSet, delta: Fraction, whole=None) -> int:
    """``len(players) * ceil(log2(max value / delta))``."""
    maxval = max(normalized(a, piece, whole) for a in players)
    return len(players) * _halvings_needed(maxval, delta)


def controversial_shrink(
    a_players: Sequence[AgentSpec],
    b_players: Sequence[AgentSpec],
    witness: ControversyWitness,
    delta: Fraction,
    ledger: Ledger | None = None,
    whole: PieceSet | None = None,
    phase: bool = True,
) -> ControversyWitness:
    """Shrink a controversial piece until every player values it at most ``delta``.

    Players bisect the piece in round-robin order by their own measure; the
    half on which the original extreme pair disagrees more is kept, so the
    piece stays controversial.  Values are relative to ``whole`` when given.
    """
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    _validate_witness(witness, a_players, whole)
    everyone = list(a_players) + list(b_players)
    lookup = {a.name: a for a in everyone}
    top, bottom = lookup[witness.group_hi[0]], lookup[witness.group_lo[-1]]

    def diff(x: PieceSet) -> Fraction:
        return normalized(top, x, whole) - normalized(bottom, x, whole)

    if diff(witness.piece) == 0:
        raise InvalidWitness("disagreeing pair values the piece equally")

    def all_small(x: PieceSet) -> bool:
        return all(normalized(a, x, whole) <= delta for a in everyone)

    piece = witness.piece
    if all_small(piece):
        return witness
    if ledger is not None and phase:
        ledger.begin_phase(shrink_cut_bound(everyone, piece, delta, whole))
    used = 0
    while not all_small(piece):
        for a in everyone:
            if all_small(piece):
                break
            x = cut(a, piece, measure(a.valuation, piece) / 2, ledger)
            used += 1
            left = piece.clip(0, x)
            right = piece - left
            piece = left if abs(diff(left)) >= abs(diff(right)) else right
    if ledger is not None and phase:
        ledger.end_phase()
    names = [a.name for a in a_players]
    out = witness_from_values(piece, names, {a.name: normalized(a, piece, whole) for a in a_players})
    if out is None:
        raise SubprotocolFailed("shrunk piece lost its controversy")
    out.cuts_used = used
    return out


# advantage -----------------------------------------------------------------


def adv(
    players: Sequence[AgentSpec],
    pair: tuple[int, int],
    P: PieceSet,
    Q: PieceSet,
    R: PieceSet,
    ledger: Ledger | None = None,
    extra_phase_cuts: int = 0,
) -> AdvResult:
    """Divide all but a residue ``T`` of ``P | Q | R`` envy-free, leaving players
    ``i`` and ``j`` with an advantage over each other regarding ``T``.

    Requires ``i`` to value ``P`` and ``Q`` equally and ``j`` not to.  The
    primary construction (see ``_adv_primary``) always applies when both
    value the cake; otherwise, or if verification fails, the fallback is an
    exact equal perfect partition with ``T`` empty.  ``extra_phase_cuts``
    extends the declared phase bound for cuts the caller makes before the
    next phase begins.
    """
    i, j = pair
    vi, vj = players[i].valuation, players[j].valuation
    if measure(vi, P) != measure(vi, Q):
        raise InvalidWitness(f"{players[i].name} must value P and Q equally")
    if measure(vj, P) == measure(vj, Q):
        raise InvalidWitness(f"{players[j].name} must value P and Q differently")
    if not (P.isdisjoint(Q) and P.isdisjoint(R) and Q.isdisjoint(R)):
        raise ValueError("P, Q, R must be disjoint")
    whole = P | Q | R
    names = (players[i].name, players[j].name)

    path = "primary"
    built = _adv_primary(players, i, j, whole)
    report = None
    if built is not None:
        alloc, residue = built
        report = _adv_report(players, alloc, whole, names, residue)
    if built is None or not report.overall:
        path = "fallback"
        shares = perfect_partition([a.valuation for a in players], whole, [Fraction(1, len(players))] * len(players))
        alloc = Allocation({a.name: s for a, s in zip(players, shares)}, PieceSet())
        residue = PieceSet()
        report = _adv_report(players, alloc, whole, names, residue)
        report.require("adv fallback")

    known = P.boundaries() | Q.boundaries() | R.boundaries()
    cuts = count_new_cuts([*alloc.shares.values(), residue], known)
    if ledger is not None:
        ledger.begin_phase(cuts + extra_phase_cuts)
        for _ in range(cuts):
            ledger.charge(players[i].name, "assisted")
    return AdvResult(alloc, residue, pair, path, cuts, report)


def _adv_report(players, alloc, whole, names, residue) -> VerificationReport:
    report = VerificationReport()
    report.add(check_partition(whole, Allocation(alloc.shares, residue)))
    report.add(check_envy_free(players, alloc))
    report.add(check_advantage(players, alloc, names, residue))
    return report


def _ratio(a: Fraction, b: Fraction):
    return None if b == 0 else a / b


def _relatively_keenest(segs, dens, who, other):
    """Segment maximizing ``who``'s density over ``other``'s (``None`` ratio = infinite)."""
    best = None
    for s, d in enumerate(dens):
        if d[who] == 0:
            continue
        r = _ratio(d[who], d[other])
        key = (r is None, r if r is not None else 0)
        if best is None or key > best[0]:
            best = (key, s)
    if best is None:
        return None
    s = best[1]
    if dens[s][other] and dens[s][who] / dens[s][other] <= 1:
        return None
    return s


def _adv_primary(players, i, j, whole):
    """Bonus slices of two kinds: type 1 from a segment where ``i`` is relatively
    keener than ``j``, type 2 from one where ``j`` is.  Lengths are chosen so
    ``i`` strictly prefers type 1 and ``j`` type 2; bystanders take their
    favourite kind, which keeps the bonus round envy-free.  The remainder
    (minus a small residue) is split into equal parts everyone agrees on."""
    n = len(players)
    vs = [a.valuation for a in players]
    totals = [measure(v, whole) for v in vs]
    if totals[i] == 0 or totals[j] == 0:
        return None
    segs = refine(whole, vs)
    dens = [[v.density_at(lo) / t if t else Fraction(0) for v, t in zip(vs, totals)] for lo, _ in segs]
    s1 = _relatively_keenest(segs, dens, i, j)
    s2 = _relatively_keenest(segs, dens, j, i)
    if s1 is None or s2 is None:
        return None
    d1, d2 = dens[s1], dens[s2]
    lower = d1[j] / d2[j]
    upper = _ratio(d1[i], d2[i])
    r = lower + 1 if upper is None else (lower + upper) / 2
    if r <= 0:
        r = upper / 2
    (lo1, hi1), (lo2, hi2) = segs[s1], segs[s2]
    len1 = min((hi1 - lo1) / (2 * n), (hi2 - lo2) / (2 * n * r))
    len2 = r * len1
    picks = []
    for q in range(n):
        if q == i:
            picks.append(1)
        elif q == j:
            picks.append(2)
        else:
            picks.append(1 if d1[q] * len1 >= d2[q] * len2 else 2)
    bonus = {}
    cur1, cur2 = lo1, lo2
    for q, kind in enumerate(picks):
        if kind == 1:
            bonus[q] = PieceSet.interval(cur1, cur1 + len1)
            cur1 += len1
        else:
            bonus[q] = PieceSet.interval(cur2, cur2 + len2)
            cur2 += len2
    gap_i = d1[i] * len1 - d2[i] * len2
    gap_j = d2[j] * len2 - d1[j] * len1
    t = min(g / (2 * d1[p]) for p, g in ((i, gap_i), (j, gap_j)) if d1[p] > 0)
    t = min(t, hi1 - cur1)
    residue = PieceSet.interval(cur1, cur1 + t)
    rest = whole - PieceSet.union_all(bonus.values()) - residue
    shares = perfect_partition(vs, rest, [Fraction(1, n)] * n)
    alloc = Allocation({a.name: shares[q] | bonus[q] for q, a in enumerate(players)}, PieceSet())
    return alloc, residue
