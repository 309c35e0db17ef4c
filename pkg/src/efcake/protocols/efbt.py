"""The bounded-by-ordinal EFBT protocol and its cake-free graph dynamics."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Sequence

from ..agents import EQ, NEQ, AgentSpec, ConfigurationError, cut_equal, declare, neq_witness
from ..allocation import Allocation
from ..cake import PieceSet, measure
from ..ledger import Ledger, OrdinalBudget
from ..subprotocols import SubprotocolFailed, adv
from ..verification import VerificationReport, check_envy_free, check_partition

__all__ = ["AdvantageGraph", "StageRecord", "efbt", "efbt_budget", "least_missing_pair"]


def efbt_budget(n: int) -> tuple[OrdinalBudget, int]:
    """``ceil((n^2 - 2n + 2)/2) * w + (L - 1)`` with ``L = lcm(2..n)``."""
    if n < 2:
        raise ValueError("EFBT needs n >= 2")
    big_l = lcm(*range(2, n + 1))
    return OrdinalBudget(-(-(n * n - 2 * n + 2) // 2), big_l - 1), big_l


@dataclass
class AdvantageGraph:
    """Undirected graph of established mutual advantages, edges tagged by stage."""

    n: int
    edges: dict[frozenset, int] = field(default_factory=dict)

    def add(self, i: int, j: int, stage: int) -> None:
        if i == j:
            raise ValueError("no self-loops")
        key = frozenset((i, j))
        if key in self.edges:
            raise ValueError(f"edge {sorted(key)} already present")
        self.edges[key] = stage

    def has(self, i: int, j: int) -> bool:
        return frozenset((i, j)) in self.edges

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    def full_vertices(self) -> list[int]:
        return [v for v in range(self.n) if self.degree(v) == self.n - 1]

    def edge_list(self) -> list[tuple[int, int, int]]:
        return sorted((*sorted(e), s) for e, s in self.edges.items())


@dataclass(frozen=True)
class StageRecord:
    stage_id: int
    declarations: tuple[str, ...]
    case: str
    pair: tuple[int, int] | None = None
    cuts: int = 0
    residue_measures: tuple[Fraction, ...] = ()
    adv_path: str | None = None


def least_missing_pair(graph: AdvantageGraph, eq: Sequence[int], neq: Sequence[int]) -> tuple[int, int] | None:
    """Least ``(i, j)`` with ``i`` in EQ, ``j`` in NEQ and no edge yet."""
    for i in sorted(eq):
        for j in sorted(neq):
            if not graph.has(i, j):
                return i, j
    return None


def efbt(
    agents: Sequence[AgentSpec],
    cake: PieceSet | None = None,
    mode: str = "real",
    ledger: Ledger | None = None,
    rng_seed: int = 0,
) -> tuple[Allocation, AdvantageGraph, list[StageRecord]]:
    n = len(agents)
    if n < 2:
        raise ValueError("EFBT needs n >= 2")
    if mode == "real":
        return _efbt_real(agents, PieceSet.full() if cake is None else cake, ledger)
    if mode == "scripted":
        return _efbt_scripted(agents, ledger, rng_seed)
    raise ValueError(f"unknown mode {mode!r}")


def _efbt_real(agents, cake, ledger):
    n = len(agents)
    budget, big_l = efbt_budget(n)
    if ledger is None:
        ledger = Ledger(budget)
    rng = random.Random(0)
    graph = AdvantageGraph(n)
    alloc = Allocation()
    records: list[StageRecord] = []
    rest = cake
    stage = 0
    while True:
        full = graph.full_vertices()
        if full:
            winner = agents[full[0]]
            alloc.give(winner.name, rest)
            ledger.record("ASSIGN", winner.name, rest.serialize())
            records.append(StageRecord(stage + 1, (), "degree-exit", residue_measures=_measures(agents, rest)))
            rest = PieceSet()
            break
        if not rest:
            break
        stage += 1
        ledger.stage = stage
        before = ledger.cuts
        pieces = cut_equal(agents[0], rest, big_l, ledger)
        decl = tuple(declare(a, pieces, ledger, rng, forced=EQ if k == 0 else None) for k, a in enumerate(agents))
        eq = [k for k, d in enumerate(decl) if d == EQ]
        neq = [k for k, d in enumerate(decl) if d == NEQ]
        pair = least_missing_pair(graph, eq, neq)
        if pair is None:
            per = big_l // len(eq)
            for t, k in enumerate(eq):
                share = PieceSet.union_all(pieces[t * per:(t + 1) * per])
                alloc.give(agents[k].name, share)
                ledger.record("ASSIGN", agents[k].name, share.serialize())
            rest = PieceSet()
            records.append(StageRecord(stage, decl, "case1", cuts=ledger.cuts - before))
            break
        i, j = pair
        witness = neq_witness(agents[j], pieces)
        if witness is None:
            raise ConfigurationError(f"{agents[j].name} declared NEQ but sees all pieces equal")
        big_p, big_q = pieces[witness[0]], pieces[witness[1]]
        try:
            res = adv(agents, pair, big_p, big_q, rest - big_p - big_q, ledger, extra_phase_cuts=big_l - 1)
        except SubprotocolFailed as exc:
            raise SubprotocolFailed(f"stage {stage}: {exc}", exc.best_deviation) from exc
        res.report.require(f"stage {stage} adv")
        for name, share in res.allocation.shares.items():
            alloc.give(name, share)
            ledger.record("ASSIGN", name, share.serialize())
        rest = res.residue
        graph.add(i, j, stage)
        records.append(
            StageRecord(stage, decl, "case2", pair, ledger.cuts - before, _measures(agents, rest), res.path)
        )
    ledger.end_phase()
    alloc.residue = rest
    report = VerificationReport()
    report.add(check_partition(cake, alloc))
    report.add(check_envy_free(agents, alloc))
    report.require("efbt")
    return alloc, graph, records


def _measures(agents, piece) -> tuple[Fraction, ...]:
    return tuple(measure(a.valuation, piece) for a in agents)


def _efbt_scripted(agents, ledger, seed):
    """Graph process only: declarations come from each agent's policy."""
    n = len(agents)
    for a in agents[1:]:
        if a.policy.kind == "honest":
            raise ConfigurationError(f"{a.name}: scripted mode needs a random or script policy")
    if ledger is None:
        ledger = Ledger()
    rng = random.Random(seed)
    graph = AdvantageGraph(n)
    records: list[StageRecord] = []
    placeholder = [PieceSet.full()]
    stage = 0
    while True:
        if graph.full_vertices():
            records.append(StageRecord(stage + 1, (), "degree-exit"))
            break
        stage += 1
        ledger.stage = stage
        decl = tuple(declare(a, placeholder, ledger, rng, forced=EQ if k == 0 else None) for k, a in enumerate(agents))
        eq = [k for k, d in enumerate(decl) if d == EQ]
        neq = [k for k, d in enumerate(decl) if d == NEQ]
        pair = least_missing_pair(graph, eq, neq)
        if pair is None:
            records.append(StageRecord(stage, decl, "case1"))
            break
        graph.add(*pair, stage)
        records.append(StageRecord(stage, decl, "case2", pair))
    return Allocation(), graph, records
