"""``efcake`` command line: run protocols, simulate dynamics, evaluate
recurrences and re-verify transcripts."""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import analysis
from .agents import AgentSpec, ConfigurationError, ProfileError, parse_profile
from .allocation import Allocation
from .cake import PieceSet, format_fraction, parse_fraction
from .ledger import (
    BudgetExhausted,
    Ledger,
    ObserverUnready,
    OrdinalBudget,
    OrdinalParseError,
    PhaseBoundExceeded,
    format_ordinal,
    leq,
    parse_ordinal,
)
from .protocols import (
    cut_and_choose,
    efbt,
    efbt_budget,
    efrw,
    efrw_budget,
    even_paz,
    pikhurto,
    selfridge_conway,
)
from .subprotocols import InvalidWitness, SubprotocolFailed
from .verification import (
    VerificationFailed,
    VerificationReport,
    check_envy_free,
    check_near_exact,
    check_partition,
    check_proportional,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VERIFY = 3
EXIT_BUDGET = 4

PROTOCOLS = ("cut_and_choose", "selfridge_conway", "even_paz", "efbt", "efrw", "pikhurto")
_ARITY = {"cut_and_choose": 2, "selfridge_conway": 3}


@dataclass
class RunConfig:
    protocol: str
    agents_path: Path
    epsilon: Fraction = Fraction(1, 100)
    budget: OrdinalBudget | None = None
    mode: str = "real"
    seed: int = 0
    out: Path | None = None
    b_count: int = 0


def _fraction_arg(text: str) -> Fraction:
    try:
        return parse_fraction(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _ordinal_arg(text: str) -> OrdinalBudget:
    try:
        return parse_ordinal(text)
    except OrdinalParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def default_budget(protocol: str, n_a: int) -> OrdinalBudget:
    if protocol == "cut_and_choose":
        return OrdinalBudget(0, 1)
    if protocol == "selfridge_conway":
        return OrdinalBudget(0, 5)
    if protocol == "even_paz":
        return OrdinalBudget(0, n_a * math.ceil(math.log2(n_a)) if n_a > 1 else 0)
    if protocol == "efbt":
        return efbt_budget(n_a)[0]
    return efrw_budget(n_a)


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


# run -----------------------------------------------------------------------


def cmd_run(cfg: RunConfig) -> int:
    try:
        agents = parse_profile(cfg.agents_path.read_text())
    except (OSError, ProfileError) as exc:
        return _fail(EXIT_PARSE, str(exc))
    if not agents:
        return _fail(EXIT_PARSE, "profile lists no agents")
    if not 0 <= cfg.b_count < len(agents):
        return _fail(EXIT_PARSE, "--b-count must leave at least one A-agent")
    if cfg.b_count and cfg.protocol not in ("efrw", "pikhurto"):
        return _fail(EXIT_PARSE, "--b-count only applies to efrw and pikhurto")
    a_side = agents[: len(agents) - cfg.b_count]
    b_side = agents[len(agents) - cfg.b_count:]
    need = _ARITY.get(cfg.protocol)
    if need is not None and len(agents) != need:
        return _fail(EXIT_PARSE, f"{cfg.protocol} needs exactly {need} agents, profile has {len(agents)}")
    if cfg.protocol == "efbt" and len(agents) < 2:
        return _fail(EXIT_PARSE, "efbt needs at least 2 agents")
    if not 0 < cfg.epsilon < 1:
        return _fail(EXIT_PARSE, "--epsilon must lie in (0, 1)")

    budget = cfg.budget if cfg.budget is not None else default_budget(cfg.protocol, len(a_side))
    ledger = Ledger(budget)
    header = [f"PROTOCOL {cfg.protocol}", f"BUDGET-INIT {format_ordinal(budget)}"]
    if cfg.protocol == "efbt":
        header.append(f"MODE {cfg.mode}")
    if cfg.protocol in ("efrw", "pikhurto"):
        header.append(f"EPSILON {format_fraction(cfg.epsilon)}")
        header.append("A-AGENTS " + " ".join(a.name for a in a_side))
    footer: list[str] = []
    report = VerificationReport()
    code = EXIT_OK
    try:
        alloc = _dispatch(cfg, agents, a_side, b_side, ledger, footer)
        if alloc is not None:
            report = verify_allocation(cfg.protocol, agents, a_side, alloc, cfg.epsilon)
            footer = _share_lines(agents, alloc) + footer
        if not report.overall:
            code = EXIT_VERIFY
    except (BudgetExhausted, ObserverUnready, PhaseBoundExceeded) as exc:
        footer.append(f"ERROR budget {exc}")
        code = EXIT_BUDGET
    except (VerificationFailed, SubprotocolFailed, InvalidWitness) as exc:
        footer.append(f"ERROR verification {exc}")
        code = EXIT_VERIFY
    except ConfigurationError as exc:
        return _fail(EXIT_PARSE, str(exc))
    footer.append(f"BUDGET-FINAL {format_ordinal(ledger.budget)}")
    footer.append(f"CUTS {ledger.cuts}")
    events = [e.line() for e in ledger.events]
    summary = header + footer + report.lines()
    if cfg.out is not None:
        cfg.out.write_text("\n".join(header + events + footer) + "\n")
        print("\n".join(summary))
    else:
        print("\n".join(header + events + footer + report.lines()))
    return code


def _dispatch(cfg, agents, a_side, b_side, ledger, footer) -> Allocation | None:
    p = cfg.protocol
    if p == "cut_and_choose":
        return cut_and_choose(agents, ledger=ledger)
    if p == "selfridge_conway":
        return selfridge_conway(agents, ledger=ledger)
    if p == "even_paz":
        return even_paz(agents, ledger=ledger)
    if p == "efbt":
        alloc, graph, records = efbt(agents, mode=cfg.mode, ledger=ledger, rng_seed=cfg.seed)
        for r in records:
            pair = "-" if r.pair is None else f"{agents[r.pair[0]].name},{agents[r.pair[1]].name}"
            footer.append(f"STAGE {r.stage_id} {r.case} {pair} {''.join(d[0] for d in r.declarations) or '-'}")
        return alloc if cfg.mode == "real" else None
    runner = efrw if p == "efrw" else pikhurto
    return runner(a_side, b_side, epsilon=cfg.epsilon, ledger=ledger)


def _share_lines(agents: Sequence[AgentSpec], alloc: Allocation) -> list[str]:
    lines = [f"SHARE {a.name} {alloc.share(a.name).serialize()}" for a in agents if a.name in alloc.shares]
    lines.append(f"RESIDUE {alloc.residue.serialize()}")
    return lines


def verify_allocation(protocol, agents, a_side, alloc, epsilon) -> VerificationReport:
    """The guarantees each protocol promises, checked on its final allocation."""
    report = VerificationReport()
    report.add(check_partition(PieceSet.full(), alloc))
    if protocol == "even_paz":
        report.add(check_proportional(agents, alloc))
    elif protocol in ("efrw", "pikhurto"):
        names = [a.name for a in a_side]
        report.add(check_envy_free(a_side, alloc))
        n = len(names)
        report.add(
            check_near_exact(
                agents, [alloc.share(x) for x in names], epsilon=epsilon, ratios=[Fraction(1, n)] * n
            )
        )
    else:
        report.add(check_envy_free(agents, alloc))
        report.add(check_proportional(agents, alloc))
    return report


# verify --------------------------------------------------------------------


@dataclass
class Transcript:
    protocol: str
    budget_init: OrdinalBudget | None
    budget_final: OrdinalBudget | None
    cuts: int | None
    epsilon: Fraction
    a_agents: list[str] | None
    shares: dict[str, PieceSet]
    residue: PieceSet
    counters: list[OrdinalBudget]
    cut_events: int


def parse_transcript(text: str) -> Transcript:
    t = Transcript("", None, None, None, Fraction(1, 100), None, {}, PieceSet(), [], 0)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        words = raw.split()
        if not words:
            continue
        tag = words[0]
        try:
            if tag == "PROTOCOL":
                t.protocol = words[1]
            elif tag == "BUDGET-INIT":
                t.budget_init = parse_ordinal(words[1])
            elif tag == "BUDGET-FINAL":
                t.budget_final = parse_ordinal(words[1])
            elif tag == "CUTS":
                t.cuts = int(words[1])
            elif tag == "EPSILON":
                t.epsilon = parse_fraction(words[1])
            elif tag == "A-AGENTS":
                t.a_agents = words[1:]
            elif tag == "SHARE":
                t.shares[words[1]] = PieceSet.parse(words[2])
            elif tag == "RESIDUE":
                t.residue = PieceSet.parse(words[1])
            elif tag == "EVT":
                if words[2] == "CUT":
                    t.cut_events += 1
                elif words[2] == "COUNTER":
                    t.counters.append(parse_ordinal(words[4]))
        except (IndexError, ValueError) as exc:
            raise ValueError(f"transcript line {lineno}: {exc}") from None
    if t.protocol not in PROTOCOLS:
        raise ValueError(f"transcript names unknown protocol {t.protocol!r}")
    return t


def cmd_verify(transcript_path: Path, agents_path: Path) -> int:
    try:
        agents = parse_profile(agents_path.read_text())
        t = parse_transcript(transcript_path.read_text())
    except (OSError, ValueError) as exc:
        return _fail(EXIT_PARSE, str(exc))
    names = {a.name for a in agents}
    unknown = set(t.shares) - names
    if unknown:
        return _fail(EXIT_PARSE, f"transcript shares name unknown agents {sorted(unknown)}")
    alloc = Allocation(dict(t.shares), t.residue)
    if t.a_agents is not None:
        a_side = [a for a in agents if a.name in t.a_agents]
    else:
        a_side = list(agents)
    report = verify_allocation(t.protocol, agents, a_side, alloc, t.epsilon)
    lines = report.lines()
    ok = report.overall
    if t.cuts is not None and t.cuts != t.cut_events:
        lines.append(f"CHECK cut_count FAIL CUTS {t.cuts} but {t.cut_events} CUT events")
        ok = False
    chain = ([t.budget_init] if t.budget_init is not None else []) + t.counters
    descending = all(tuple(b) < tuple(a) for a, b in zip(chain, chain[1:]))
    if t.budget_final is not None and t.counters and t.counters[-1] != t.budget_final:
        descending = False
    if t.budget_init is not None and t.budget_final is not None and not leq(t.budget_final, t.budget_init):
        descending = False
    lines.append(f"CHECK budget_descent {'PASS' if descending else 'FAIL'} counters={len(t.counters)}")
    ok = ok and descending
    print("\n".join(lines))
    print("VERIFY " + ("PASS" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_VERIFY


# simulate / recurrence -------------------------------------------------------


def cmd_simulate(n: int, trials: int, seed: int, exact: bool | None = None) -> int:
    if n < 2 or trials <= 0:
        return _fail(EXIT_PARSE, "simulate needs --n >= 2 and --trials > 0")
    stats = analysis.efbt_dynamics(n, trials, seed)
    bound = -(-(n * n - 2 * n + 2) // 2)
    rows = [
        ("n", n),
        ("trials", trials),
        ("seed", seed),
        ("mean_stages", repr(stats.mean)),
        ("variance", repr(stats.variance)),
        ("std_error", repr(stats.std_error)),
        ("max_stages", stats.max_stages),
        ("bound_stages", bound),
        ("cause_case1", stats.causes["case1"]),
        ("cause_degree_exit", stats.causes["degree-exit"]),
    ]
    if exact if exact is not None else n <= 8:
        e = analysis.exact_expected_stages(n)
        rows.append(("exact_mean", repr(float(e))))
        rows.append(("exact_mean_fraction", format_fraction(e)))
        rows.append(("z_score", repr((stats.mean - float(e)) / stats.std_error if stats.std_error else 0.0)))
    rows.append(("closed_form_L+2", repr(analysis.closed_form_stages(n, 2))))
    rows.append(("closed_form_L+1", repr(analysis.closed_form_stages(n, 1))))
    rows.append(("closed_form_asymptotic", repr(analysis.closed_form_asymptotic(n))))
    print(f"{'stages':>8} {'count':>10}")
    for k in sorted(stats.histogram):
        print(f"{k:>8} {stats.histogram[k]:>10}")
    for name, value in rows:
        print(f"STAT {name} {value}")
    return EXIT_OK if stats.max_stages <= bound else EXIT_VERIFY


def cmd_recurrence(protocol: str, n: int) -> int:
    if n < 1:
        return _fail(EXIT_PARSE, "--n must be >= 1")
    if protocol == "efbt":
        ok = True
        for k in range(2, max(n, 2) + 1):
            budget, big_l = analysis.efbt_worst_bound(k)
            ok = ok and budget.omega == analysis.lemma2_threshold(k)
            print(f"EFBT({k}) <= {format_ordinal(budget)}  L={big_l}")
        print(f"STAT bound_matches_threshold {ok}")
        return EXIT_OK if ok else EXIT_VERIFY
    if protocol == "efrw":
        fn, cap = analysis.efrw_recurrence, 50
    elif protocol == "pikhurto":
        fn, cap = analysis.pikhurto_recurrence, 15
    else:
        return _fail(EXIT_PARSE, "recurrence supports efbt, efrw, pikhurto")
    if n > cap:
        return _fail(EXIT_PARSE, f"{protocol} recurrence supports n <= {cap}")
    ok = True
    for k in range(1, n + 1):
        values = {fn(k, m) for m in range(4)}
        value = max(values)
        bound = OrdinalBudget(max(2 * k - 3, 0), 0)
        holds = leq(value, bound) and len(values) == 1
        ok = ok and holds
        mark = "≤" if holds else "≰"
        print(f"T({k};*) = {format_ordinal(value)} {mark} {format_ordinal(bound)}")
    print(f"STAT bound_holds {ok}")
    if protocol == "efrw":
        print(f"STAT average_phases {float(analysis.efrw_average_phases(n))!r}")
    return EXIT_OK if ok else EXIT_VERIFY


# entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="efcake", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a protocol on an agent profile")
    run.add_argument("--protocol", required=True, choices=PROTOCOLS)
    run.add_argument("--agents", required=True, type=Path)
    run.add_argument("--epsilon", type=_fraction_arg, default=Fraction(1, 100))
    run.add_argument("--budget", type=_ordinal_arg)
    run.add_argument("--mode", choices=("real", "scripted"), default="real")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", type=Path)
    run.add_argument("--b-count", type=int, default=0, help="treat the last N profile agents as B-side")

    sim = sub.add_parser("simulate", help="Monte-Carlo EFBT stage dynamics")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--trials", type=int, default=100000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--exact", action=argparse.BooleanOptionalAction, default=None)

    rec = sub.add_parser("recurrence", help="evaluate cut-count recurrences")
    rec.add_argument("--protocol", required=True, choices=("efbt", "efrw", "pikhurto"))
    rec.add_argument("--n", type=int, required=True)

    ver = sub.add_parser("verify", help="re-check a transcript against a profile")
    ver.add_argument("--transcript", required=True, type=Path)
    ver.add_argument("--agents", required=True, type=Path)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(
            RunConfig(args.protocol, args.agents, args.epsilon, args.budget, args.mode, args.seed, args.out, args.b_count)
        )
    if args.command == "simulate":
        return cmd_simulate(args.n, args.trials, args.seed, args.exact)
    if args.command == "recurrence":
        return cmd_recurrence(args.protocol, args.n)
    return cmd_verify(args.transcript, args.agents)


if __name__ == "__main__":
    sys.exit(main())
