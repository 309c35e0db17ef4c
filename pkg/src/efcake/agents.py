"""Players as query-answering entities over private valuations."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .cake import (
    PieceSet,
    ValuationDensity,
    format_fraction,
    measure,
    parse_fraction,
    quantile_cut,
)
from .ledger import Ledger, QueryEvent

__all__ = [
    "AgentSpec",
    "Policy",
    "HONEST",
    "QueryEvent",
    "ConfigurationError",
    "ProfileError",
    "eval_piece",
    "cut",
    "cut_equal",
    "declare",
    "neq_witness",
    "choose",
    "parse_profile",
    "format_profile",
    "random_valuation",
    "random_profile",
]

EQ = "EQ"
NEQ = "NEQ"


class ConfigurationError(ValueError):
    """An agent's declaration policy cannot answer (e.g. exhausted script)."""


class ProfileError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Policy:
    kind: str = "honest"
    probability: Fraction | None = None
    script: tuple[str, ...] = ()

    def __str__(self) -> str:
        if self.kind == "random":
            return f"random:{self.probability}"
        if self.kind == "script":
            return "script:" + ",".join(self.script)
        return "honest"

    @classmethod
    def parse(cls, text: str) -> "Policy":
        if text == "honest":
            return HONEST
        kind, _, arg = text.partition(":")
        if kind == "random":
            p = parse_fraction(arg)
            if not 0 <= p <= 1:
                raise ValueError(f"probability {p} outside [0,1]")
            return cls("random", p)
        if kind == "script":
            steps = tuple(s.strip() for s in arg.split(",") if s.strip())
            bad = [s for s in steps if s not in (EQ, NEQ)]
            if bad or not steps:
                raise ValueError(f"script must list EQ/NEQ, got {arg!r}")
            return cls("script", script=steps)
        raise ValueError(f"unknown policy {text!r}")


HONEST = Policy()


@dataclass(frozen=True)
class AgentSpec:
    name: str
    valuation: ValuationDensity
    follows_advice: bool = True
    policy: Policy = field(default=HONEST)


def eval_piece(agent: AgentSpec, p: PieceSet, ledger: Ledger | None = None) -> Fraction:
    value = measure(agent.valuation, p)
    if ledger is not None:
        ledger.record("EVAL", agent.name, p.serialize(), format_fraction(value))
    return value


def cut(agent: AgentSpec, p: PieceSet, target: Fraction, ledger: Ledger | None = None) -> Fraction:
    """Robertson-Webb cut query: the leftmost point giving ``target`` of ``p``."""
    x = quantile_cut(agent.valuation, p, target)
    if ledger is not None:
        ledger.charge(agent.name, p.serialize(), format_fraction(target), format_fraction(x))
    return x


def cut_equal(agent: AgentSpec, p: PieceSet, parts: int, ledger: Ledger | None = None) -> list[PieceSet]:
    """Agent divides ``p`` into ``parts`` pieces it values equally (``parts - 1`` cuts)."""
    total = measure(agent.valuation, p)
    points = [cut(agent, p, total * k / parts, ledger) for k in range(1, parts)]
    edges = [Fraction(0), *points, Fraction(1)]
    return [p.clip(a, b) for a, b in zip(edges, edges[1:])]


def declare(
    agent: AgentSpec,
    pieces: Sequence[PieceSet],
    ledger: Ledger | None = None,
    rng: random.Random | None = None,
    forced: str | None = None,
) -> str:
    """Write down EQ or NEQ about ``pieces``."""
    if not pieces:
        raise ValueError("declare needs at least one piece")
    if forced is not None:
        answer = forced
    elif agent.policy.kind == "honest":
        values = {measure(agent.valuation, p) for p in pieces}
        answer = EQ if len(values) == 1 else NEQ
    elif agent.policy.kind == "random":
        if rng is None:
            raise ConfigurationError(f"{agent.name}: random policy needs an rng")
        answer = EQ if rng.random() < agent.policy.probability else NEQ
    else:
        step = ledger.count("DECLARE", agent.name) if ledger is not None else 0
        if step >= len(agent.policy.script):
            raise ConfigurationError(f"{agent.name}: declaration script exhausted at step {step}")
        answer = agent.policy.script[step]
    if ledger is not None:
        ledger.record("DECLARE", agent.name, answer)
    return answer


def neq_witness(agent: AgentSpec, pieces: Sequence[PieceSet]) -> tuple[int, int] | None:
    """Lexicographically least index pair the agent values differently."""
    values = [measure(agent.valuation, p) for p in pieces]
    for a in range(len(values)):
        for b in range(a + 1, len(values)):
            if values[a] != values[b]:
                return a, b
    return None


def choose(agent: AgentSpec, pieces: Sequence[PieceSet]) -> int:
    """Index of the piece the agent takes: its favourite (lowest index on ties).

    Agents that ignore advice take the first piece offered.
    """
    if not agent.follows_advice:
        return 0
    values = [measure(agent.valuation, p) for p in pieces]
    best = max(values)
    return values.index(best)


def parse_profile(text: str) -> list[AgentSpec]:
    """Parse the line-oriented agent profile format.

    ``agent <name> [advice=yes|no] [policy=...]`` starts an agent, followed by
    ``seg <lo> <hi> <density>`` lines tiling [0, 1].  Blank lines and ``#``
    comments are ignored.
    """
    agents: list[AgentSpec] = []
    current: dict | None = None

    def finish(lineno: int):
        if current is None:
            return
        segs = current["segs"]
        if not segs:
            raise ProfileError(lineno, f"agent {current['name']} has no segments")
        expected = Fraction(0)
        for lo, hi, _, ln in segs:
            if lo < expected:
                raise ProfileError(ln, f"segment [{lo},{hi}) overlaps previous segment")
            if lo > expected:
                raise ProfileError(ln, f"gap [{expected},{lo}) before segment")
            expected = hi
        if expected != 1:
            raise ProfileError(segs[-1][3], f"segments end at {expected}, not 1")
        try:
            v = ValuationDensity.from_segments([(lo, hi, d) for lo, hi, d, _ in segs])
        except ValueError as exc:
            raise ProfileError(current["lineno"], str(exc)) from None
        agents.append(AgentSpec(current["name"], v, current["advice"], current["policy"]))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        if words[0] == "agent":
            finish(lineno)
            if len(words) < 2:
                raise ProfileError(lineno, "agent needs a name")
            name = words[1]
            if any(a.name == name for a in agents):
                raise ProfileError(lineno, f"duplicate agent name {name!r}")
            advice, policy = True, HONEST
            for opt in words[2:]:
                key, _, val = opt.partition("=")
                if key == "advice" and val in ("yes", "no"):
                    advice = val == "yes"
                elif key == "policy":
                    try:
                        policy = Policy.parse(val)
                    except ValueError as exc:
                        raise ProfileError(lineno, str(exc)) from None
                else:
                    raise ProfileError(lineno, f"unknown agent option {opt!r}")
            current = {"name": name, "advice": advice, "policy": policy, "segs": [], "lineno": lineno}
        elif words[0] == "seg":
            if current is None:
                raise ProfileError(lineno, "seg before any agent line")
            if len(words) != 4:
                raise ProfileError(lineno, "seg needs <lo> <hi> <density>")
            try:
                lo, hi, d = (parse_fraction(w) for w in words[1:])
            except ValueError as exc:
                raise ProfileError(lineno, str(exc)) from None
            if not lo < hi:
                raise ProfileError(lineno, f"empty segment [{lo},{hi})")
            if d < 0:
                raise ProfileError(lineno, "negative density")
            current["segs"].append((lo, hi, d, lineno))
        else:
            raise ProfileError(lineno, f"unknown directive {words[0]!r}")
    finish(len(text.splitlines()))
    return agents


def format_profile(agents: Sequence[AgentSpec]) -> str:
    lines = []
    for a in agents:
        head = f"agent {a.name}"
        if not a.follows_advice:
            head += " advice=no"
        if a.policy != HONEST:
            head += f" policy={a.policy}"
        lines.append(head)
        for lo, hi, d in a.valuation.segments():
            lines.append(f"seg {lo} {hi} {d}")
    return "\n".join(lines) + "\n"


def random_valuation(rng: random.Random, max_segments: int = 8, grid: int = 24) -> ValuationDensity:
    """Random piecewise-constant density with small rational breakpoints."""
    k = rng.randint(1, max_segments)
    inner = sorted(rng.sample(range(1, grid), min(k - 1, grid - 1)))
    bps = [Fraction(0), *(Fraction(x, grid) for x in inner), Fraction(1)]
    weights = [rng.randint(1, 9) for _ in range(len(bps) - 1)]
    return ValuationDensity.from_weights(bps, weights)


def random_profile(n: int, seed: int, max_segments: int = 8, prefix: str = "A") -> list[AgentSpec]:
    rng = random.Random(seed)
    return [AgentSpec(f"{prefix}{k + 1}", random_valuation(rng, max_segments)) for k in range(n)]
