"""EFRW and its many-group variant.

Each level runs a starred near-exact split.  If the A-players all agree the
bundles are exact, they are handed out.  Otherwise a controversial piece is
shrunk until it is tiny, the remainder is split unfairly so that each value
group of A-players gets a little more or less than its fair size, and every
group recurses on its own part with everyone else moved to the B side.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ..agents import AgentSpec, choose
from ..allocation import Allocation
from ..cake import PieceSet, measure, perfect_partition, refine
from ..ledger import Ledger, OrdinalBudget
from ..subprotocols import (
    ControversyWitness,
    controversial_shrink,
    count_new_cuts,
    find_controversy,
    near_exact_cut_bound,
    near_exact_split,
    near_exact_star,
    normalized,
    shrink_cut_bound,
)
from ..verification import VerificationReport, check_envy_free, check_near_exact

__all__ = ["efrw", "pikhurto", "efrw_budget", "GroupPlan", "line_plan"]


def efrw_budget(n: int) -> OrdinalBudget:
    """``(2n - 3) * w`` for ``n >= 2``; nothing for a single player."""
    return OrdinalBudget(max(2 * n - 3, 0), 0)


@dataclass(frozen=True)
class GroupPlan:
    """How the remainder is shared among value groups (highest first).

    Group ``h`` receives ``share_q[h]`` of the controversy-free remainder Q and
    ``share_p[h]`` of the shrunk piece P, so a member valuing P at ``x``
    sees an average group share of ``a_h (1 - x) + b_h x``.
    """

    groups: tuple[tuple[str, ...], ...]
    share_q: tuple[Fraction, ...]
    share_p: tuple[Fraction, ...]
    margin: Fraction


def line_plan(groups: Sequence[Sequence[str]], values: dict[str, Fraction]) -> GroupPlan:
    """Per-member lines ``a_h + (b_h - a_h) x`` with slopes falling by group and
    intercepts chosen so adjacent lines cross midway between the groups."""
    k = len(groups)
    sizes = [len(g) for g in groups]
    n = sum(sizes)
    raw_b = [Fraction(k - 1 - h) for h in range(k)]
    scale = sum(s * b for s, b in zip(sizes, raw_b))
    b = [x / scale for x in raw_b]
    offsets = [Fraction(0)]
    for g in range(k - 1):
        t = (min(values[p] for p in groups[g]) + max(values[p] for p in groups[g + 1])) / 2
        offsets.append(offsets[-1] + (b[g] - b[g + 1]) * t / (1 - t))
    a1 = (1 - sum(s * c for s, c in zip(sizes, offsets))) / n
    a = [a1 + c for c in offsets]

    def line(h, x):
        return a[h] * (1 - x) + b[h] * x

    margin = None
    for g, members in enumerate(groups):
        for p in members:
            x = values[p]
            gap = line(g, x) - max(line(h, x) for h in range(k) if h != g)
            margin = gap if margin is None else min(margin, gap)
    return GroupPlan(
        tuple(tuple(g) for g in groups),
        tuple(s * x for s, x in zip(sizes, a)),
        tuple(s * x for s, x in zip(sizes, b)),
        margin,
    )


def efrw(
    a_agents: Sequence[AgentSpec],
    b_agents: Sequence[AgentSpec] = (),
    cake: PieceSet | None = None,
    epsilon: Fraction = Fraction(1, 100),
    ledger: Ledger | None = None,
) -> Allocation:
    return _run(a_agents, b_agents, cake, epsilon, ledger, many=False)


def pikhurto(
    a_agents: Sequence[AgentSpec],
    b_agents: Sequence[AgentSpec] = (),
    cake: PieceSet | None = None,
    epsilon: Fraction = Fraction(1, 100),
    ledger: Ledger | None = None,
) -> Allocation:
    return _run(a_agents, b_agents, cake, epsilon, ledger, many=True)


def _run(a_agents, b_agents, cake, epsilon, ledger, many):
    epsilon = Fraction(epsilon)
    if not a_agents:
        raise ValueError("need at least one A-agent")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    cake = PieceSet.full() if cake is None else cake
    if ledger is None:
        ledger = Ledger(efrw_budget(len(a_agents)))
    alloc = _level(list(a_agents), list(b_agents), cake, epsilon, ledger, many)
    alloc.residue = PieceSet()
    return alloc


def _give(alloc, agent, piece, ledger):
    alloc.give(agent.name, piece)
    ledger.record("ASSIGN", agent.name, piece.serialize())


def _level(a_side, b_side, cake, epsilon, ledger, many) -> Allocation:
    n = len(a_side)
    players = a_side + b_side
    alloc = Allocation()
    if n == 1:
        _give(alloc, a_side[0], cake, ledger)
        return alloc
    if n == 2:
        halves = near_exact_star(players, cake, 2, epsilon, ledger).bundles
        pick = choose(a_side[1], halves)
        _give(alloc, a_side[1], halves[pick], ledger)
        _give(alloc, a_side[0], halves[1 - pick], ledger)
        _verify(a_side, players, alloc, cake, epsilon)
        return alloc

    bundles = near_exact_star(players, cake, n, epsilon, ledger).bundles
    if all(measure(a.valuation, x) * n == measure(a.valuation, cake) for a in a_side for x in bundles):
        for a, x in zip(a_side, bundles):
            _give(alloc, a, x, ledger)
        _verify(a_side, players, alloc, cake, epsilon)
        return alloc

    witness = find_controversy(a_side, bundles, cake)
    delta = min(epsilon / 8, Fraction(1, 4 * n))
    shrink_bound = shrink_cut_bound(players, witness.piece, delta, cake)
    # the shrunk piece is the witness clipped to one interval: at most two new boundary points
    segments = len(refine(cake, [p.valuation for p in players], witness.piece.boundaries())) + 2
    groups_max = n if many else 2
    ledger.begin_phase(
        shrink_bound
        + (groups_max - 1) + (segments + groups_max - 1) * (groups_max + 1)
        + segments * (groups_max + 1)
    )
    small = controversial_shrink(a_side, b_side, witness, delta, ledger, whole=cake, phase=False)
    groups = _value_groups(a_side, small) if many else [small.group_hi, small.group_lo]
    plan = line_plan(groups, {a.name: normalized(a, small.piece, cake) for a in a_side})
    sub_eps = min(epsilon / 4, plan.margin / 4)
    q_part = cake - small.piece
    q_split = near_exact_split(players, q_part, plan.share_q, sub_eps, ledger, phase=False).bundles
    if len(groups) == 2:
        p_split = [small.piece, PieceSet()]
    else:
        p_split = perfect_partition([p.valuation for p in players], small.piece, plan.share_p)
        for _ in range(count_new_cuts(p_split, small.piece.boundaries())):
            ledger.charge(a_side[0].name, "assisted")
    ledger.end_phase()

    by_name = {a.name: a for a in a_side}
    for g, members in enumerate(groups):
        sub_a = [by_name[m] for m in members]
        others = [a for a in a_side if a.name not in members]
        sub_cake = q_split[g] | p_split[g]
        alloc.merge(_level(sub_a, others + b_side, sub_cake, sub_eps, ledger, many))
    _verify(a_side, players, alloc, cake, epsilon)
    return alloc


def _value_groups(a_side, witness: ControversyWitness) -> list[tuple[str, ...]]:
    """A-players bucketed by exactly equal value of the piece, highest first."""
    order = [a.name for a in a_side]
    vals = witness.values
    ranked = sorted(order, key=lambda m: (-vals[m], order.index(m)))
    groups: list[list[str]] = []
    for m in ranked:
        if groups and vals[groups[-1][-1]] == vals[m]:
            groups[-1].append(m)
        else:
            groups.append([m])
    return [tuple(g) for g in groups]


def _verify(a_side, players, alloc, cake, epsilon):
    report = VerificationReport()
    report.add(check_envy_free(a_side, alloc))
    names = [a.name for a in a_side]
    n = len(a_side)
    shares = [alloc.share(m) for m in names]
    report.add(
        check_near_exact(players, shares, epsilon=epsilon, ratios=[Fraction(1, n)] * n, whole=cake)
    )
    report.require(f"level with {n} A-players")
