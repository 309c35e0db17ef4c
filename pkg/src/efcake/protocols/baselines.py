"""Bounded baselines: cut-and-choose, Selfridge-Conway and Even-Paz."""

from __future__ import annotations

from typing import Sequence

from ..agents import AgentSpec, choose, cut, cut_equal
from ..allocation import Allocation
from ..cake import PieceSet, measure
from ..ledger import Ledger


def _assign(alloc: Allocation, agent: AgentSpec, piece: PieceSet, ledger: Ledger | None) -> None:
    alloc.give(agent.name, piece)
    if ledger is not None:
        ledger.record("ASSIGN", agent.name, piece.serialize())


def cut_and_choose(agents: Sequence[AgentSpec], cake: PieceSet | None = None, ledger: Ledger | None = None) -> Allocation:
    if len(agents) != 2:
        raise ValueError("cut-and-choose needs exactly 2 agents")
    cake = PieceSet.full() if cake is None else cake
    cutter, chooser = agents
    halves = cut_equal(cutter, cake, 2, ledger)
    pick = choose(chooser, halves)
    alloc = Allocation()
    _assign(alloc, chooser, halves[pick], ledger)
    _assign(alloc, cutter, halves[1 - pick], ledger)
    return alloc


def selfridge_conway(agents: Sequence[AgentSpec], cake: PieceSet | None = None, ledger: Ledger | None = None) -> Allocation:
    """Envy-free division among three agents with at most five cuts."""
    if len(agents) != 3:
        raise ValueError("Selfridge-Conway needs exactly 3 agents")
    cake = PieceSet.full() if cake is None else cake
    p1, p2, p3 = agents
    pieces = cut_equal(p1, cake, 3, ledger)
    values = [measure(p2.valuation, x) for x in pieces]
    ranked = sorted(range(3), key=lambda k: (-values[k], k))
    trimmed_idx = None
    trimming = PieceSet()
    if values[ranked[0]] > values[ranked[1]]:
        trimmed_idx = ranked[0]
        big = pieces[trimmed_idx]
        x = cut(p2, big, values[ranked[1]], ledger)
        pieces[trimmed_idx] = big.clip(0, x)
        trimming = big - pieces[trimmed_idx]

    alloc = Allocation()
    left = [0, 1, 2]
    pick3 = left[choose(p3, [pieces[k] for k in left])]
    left.remove(pick3)
    if trimmed_idx is not None and trimmed_idx in left and p2.follows_advice:
        pick2 = trimmed_idx
    else:
        pick2 = left[choose(p2, [pieces[k] for k in left])]
    left.remove(pick2)
    pick1 = left[0]
    for agent, k in ((p3, pick3), (p2, pick2), (p1, pick1)):
        _assign(alloc, agent, pieces[k], ledger)

    if trimming:
        taker, other = (p2, p3) if pick2 == trimmed_idx else (p3, p2)
        crumbs = cut_equal(other, trimming, 3, ledger)
        order = [0, 1, 2]
        for agent in (taker, p1, other):
            k = order[choose(agent, [crumbs[c] for c in order])]
            order.remove(k)
            _assign(alloc, agent, crumbs[k], ledger)
    return alloc


def even_paz(agents: Sequence[AgentSpec], cake: PieceSet | None = None, ledger: Ledger | None = None) -> Allocation:
    """Proportional divide-and-conquer: at most ``n * ceil(log2 n)`` cuts."""
    if not agents:
        raise ValueError("need at least one agent")
    cake = PieceSet.full() if cake is None else cake
    alloc = Allocation()
    _even_paz(list(agents), cake, ledger, alloc)
    return alloc


def _even_paz(group: list[AgentSpec], piece: PieceSet, ledger, alloc: Allocation) -> None:
    n = len(group)
    if n == 1:
        _assign(alloc, group[0], piece, ledger)
        return
    k = n // 2
    marks = [(cut(a, piece, measure(a.valuation, piece) * k / n, ledger), idx) for idx, a in enumerate(group)]
    marks.sort()
    at = marks[k - 1][0]
    left = piece.clip(0, at)
    _even_paz([group[idx] for _, idx in marks[:k]], left, ledger, alloc)
    _even_paz([group[idx] for _, idx in marks[k:]], piece - left, ledger, alloc)
