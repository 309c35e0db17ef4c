"""Acceptance gate: criteria 1-9 at their stated tolerances.

Each test prints one ``CRITERION k PASS|FAIL ...`` line.  The file also runs
standalone (``python tests/test_acceptance.py``) and prints the same lines.
"""

from __future__ import annotations

import importlib
import math
import random
import sys
import time
from fractions import Fraction as F

import pytest

from efcake.agents import cut_equal, random_profile
from efcake.allocation import Allocation
from efcake.analysis import (
    efbt_dynamics,
    efrw_bound_check,
    efrw_recurrence,
    exact_expected_stages,
    lemma2_scan,
    lemma2_threshold,
    closed_form_asymptotic,
    closed_form_stages,
    pikhurto_bound_check,
    pikhurto_recurrence,
)
from efcake.cake import PieceSet, measure
from efcake.ledger import (
    BudgetExhausted,
    Ledger,
    OrdinalBudget,
    charge_cut,
    format_ordinal,
    parse_ordinal,
)
from efcake.protocols import (
    cut_and_choose,
    efbt,
    efbt_budget,
    efrw,
    efrw_budget,
    even_paz,
    pikhurto,
    selfridge_conway,
)
from efcake.subprotocols import (
    controversial_shrink,
    find_controversy,
    near_exact_star,
    shrink_cut_bound,
    unfair_near_exact,
)
from efcake.verification import (
    check_advantage,
    check_envy_free,
    check_near_exact,
    check_partition,
    check_proportional,
)

FULL = PieceSet.full()

# the module, not the same-named function re-exported by the package
EFBT_MODULE = importlib.import_module("efcake.protocols.efbt")


def report(k: int, ok: bool, detail: str, terminal=None) -> None:
    line = f"CRITERION {k} {'PASS' if ok else 'FAIL'} {detail}"
    if terminal is None:
        print(line, flush=True)
    else:
        terminal.write_line(line)


def phase_cut_counts(ledger: Ledger) -> list[tuple[int, int]]:
    """(declared bound, cuts charged) for every phase in the transcript."""
    out = []
    for e in ledger.events:
        if e.kind == "PHASE":
            out.append([int(e.details[0]), 0])
        elif e.kind == "CUT" and out:
            out[-1][1] += 1
    return [tuple(x) for x in out]


# 1 -----------------------------------------------------------------------------


def criterion_1() -> tuple[bool, str]:
    start = time.perf_counter()
    failures, max_cuts = 0, 0
    for seed in range(1000):
        agents = random_profile(3, seed)
        ledger = Ledger(OrdinalBudget(0, 5))
        alloc = selfridge_conway(agents, ledger=ledger)
        max_cuts = max(max_cuts, ledger.cuts)
        ok = check_partition(FULL, alloc).passed and check_envy_free(agents, alloc, F(0)).passed
        failures += not ok or ledger.cuts > 5
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 10
    return ok, f"selfridge_conway profiles=1000 failures={failures} max_cuts={max_cuts} time={elapsed:.2f}s"


# 2 -----------------------------------------------------------------------------


def criterion_2() -> tuple[bool, str]:
    """Every stage's advantage step is re-checked independently of its own report."""
    stages_checked = 0
    failures = []
    module = EFBT_MODULE
    real_adv = module.adv

    def audited(players, pair, P, Q, R, ledger=None, extra_phase_cuts=0):
        nonlocal stages_checked
        res = real_adv(players, pair, P, Q, R, ledger, extra_phase_cuts)
        names = (players[pair[0]].name, players[pair[1]].name)
        whole = Allocation(dict(res.allocation.shares), res.residue)
        checks = [
            check_partition(P | Q | R, whole),
            check_envy_free(players, res.allocation),
            check_advantage(players, res.allocation, names, res.residue),
        ]
        stages_checked += 1
        if not all(c.passed for c in checks):
            failures.append(("adv", [str(c) for c in checks if not c.passed]))
        return res

    module.adv = audited
    try:
        runs = 0
        for n in (3, 4, 5):
            budget, _ = efbt_budget(n)
            for seed in range(200):
                agents = random_profile(n, 1000 * n + seed)
                ledger = Ledger(budget)
                try:
                    alloc, _, _ = efbt(agents, ledger=ledger)
                except Exception as exc:  # any failure is recorded, not raised
                    failures.append((n, seed, repr(exc)))
                    continue
                runs += 1
                if not (check_partition(FULL, alloc).passed and check_envy_free(agents, alloc).passed):
                    failures.append((n, seed, "final division"))
                if ledger.budget < OrdinalBudget(0, 0) or ledger.initial != budget:
                    failures.append((n, seed, "ledger"))
    finally:
        module.adv = real_adv
    ok = not failures and stages_checked > 0
    return ok, (
        f"efbt n=3,4,5 runs={runs} adv_stages_checked={stages_checked} "
        f"budget_n4={format_ordinal(efbt_budget(4)[0])} failures={len(failures)}"
    )


# 3 -----------------------------------------------------------------------------


def criterion_3() -> tuple[bool, str]:
    start = time.perf_counter()
    parts = []
    ok = True
    for n in (4, 6, 8):
        stats = efbt_dynamics(n, 100_000, seed=7)
        exact = float(exact_expected_stages(n))
        z = (stats.mean - exact) / stats.std_error
        bound = lemma2_threshold(n)
        ok &= abs(z) <= 4 and stats.max_stages <= bound
        parts.append(
            f"n={n} mean={stats.mean:.5f} exact={exact:.5f} z={z:+.2f} max={stats.max_stages}<={bound} "
            f"closed_form_L+2={closed_form_stages(n):.4f} closed_form_L+1={closed_form_stages(n, 1):.4f} "
            f"asymptotic={closed_form_asymptotic(n):.4f}"
        )
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    return ok, "; ".join(parts) + f"; time={elapsed:.1f}s"


# 4 -----------------------------------------------------------------------------


def _has_full_vertex(n: int, edges) -> bool:
    return any(sum(v in e for e in edges) == n - 1 for v in range(n))


def criterion_4() -> tuple[bool, str]:
    start = time.perf_counter()
    ok = True
    parts = []
    for n in range(2, 8):
        scan = lemma2_scan(n)
        ok &= scan.forced
        # an even n has a witness one edge short: the complement of a perfect matching
        if n % 2 == 0:
            ok &= scan.tight
        parts.append(f"n={n}:max_without_full={scan.max_edges_without_full},threshold={scan.threshold}")
    cycle = [(0, 1), (1, 2), (2, 3), (3, 0)]
    ok &= len(cycle) == lemma2_threshold(4) - 1 and not _has_full_vertex(4, cycle)
    ok &= all(_has_full_vertex(4, cycle + [e]) for e in [(0, 2), (1, 3)])
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30
    return ok, " ".join(parts) + f" four_cycle_witness=ok time={elapsed:.2f}s"


# 5 -----------------------------------------------------------------------------


def criterion_5() -> tuple[bool, str]:
    eps = F(1, 100)
    failures = []
    runs = 0
    max_phases = {}
    for name, protocol in (("efrw", efrw), ("pikhurto", pikhurto)):
        for n in (2, 3, 4):
            for m in (0, 1):
                for seed in range(100):
                    a = random_profile(n, 10_000 + 100 * n + seed)
                    b = random_profile(m, 20_000 + seed, prefix="B") if m else []
                    ledger = Ledger(efrw_budget(n))
                    try:
                        alloc = protocol(a, b, epsilon=eps, ledger=ledger)
                    except Exception as exc:
                        failures.append((name, n, m, seed, repr(exc)))
                        continue
                    runs += 1
                    shares = [alloc.share(x.name) for x in a]
                    good = (
                        check_partition(FULL, alloc).passed
                        and check_envy_free(a, alloc).passed
                        and check_near_exact(a + b, shares, epsilon=eps).passed
                    )
                    if n == 2:
                        good &= ledger.omega_conversions == 1
                    if not good:
                        failures.append((name, n, m, seed))
                    key = (name, n)
                    max_phases[key] = max(max_phases.get(key, 0), ledger.omega_conversions)
    for m in (0, 1):
        b = random_profile(m, 7, prefix="B") if m else []
        for protocol in (efrw, pikhurto):
            ledger = Ledger(efrw_budget(1))
            alloc = protocol(random_profile(1, 5), b, epsilon=eps, ledger=ledger)
            if ledger.cuts != 0 or alloc.share("A1") != FULL:
                failures.append(("n=1", m))
    phases = " ".join(f"{k[0]}:n={k[1]}:max_w_phases={v}" for k, v in sorted(max_phases.items()))
    return not failures, f"runs={runs} failures={len(failures)} n1_cuts=0 n2_w_phases=1 {phases}"


# 6 -----------------------------------------------------------------------------


def criterion_6() -> tuple[bool, str]:
    efrw_ok = efrw_bound_check(50, 3)
    pik_ok = pikhurto_bound_check(15, 3)
    four = {format_ordinal(efrw_recurrence(4, m)) for m in range(4)} | {
        format_ordinal(pikhurto_recurrence(4, m)) for m in range(4)
    }
    ok = efrw_ok and pik_ok and four == {"5w+0"}
    return ok, f"efrw<=50:{efrw_ok} pikhurto<=15:{pik_ok} T(4)={','.join(sorted(four))}"


# 7 -----------------------------------------------------------------------------


def criterion_7() -> tuple[bool, str]:
    rng = random.Random(2024)
    sequences = 1_000_000
    bad = 0
    for _ in range(sequences):
        b = OrdinalBudget(rng.randrange(3), rng.randrange(4))
        steps = 0
        while b != (0, 0):
            nxt = charge_cut(b, rng.randrange(1, 4) if b.finite == 0 else None)
            if not nxt < b:
                bad += 1
                break
            b = nxt
            steps += 1
        try:
            charge_cut(b, 1)
            bad += 1
        except BudgetExhausted:
            pass
    trips = 0
    for c in range(30):
        for m in range(30):
            x = OrdinalBudget(c, m)
            trips += parse_ordinal(format_ordinal(x)) == x
    ok = bad == 0 and trips == 900
    return ok, f"sequences={sequences} violations={bad} round_trips={trips}/900 exhausted_at_zero=ok"


# 8 -----------------------------------------------------------------------------


def criterion_8() -> tuple[bool, str]:
    failures = []
    checked = 0
    for seed in range(100):
        players = random_profile(3, 50_000 + seed)
        for p in range(2, 7):
            ledger = Ledger("1w")
            eps = F(1, 100)
            res = near_exact_star(players, FULL, p, eps, ledger)
            checked += 1
            good = check_near_exact(players, res.bundles, p, eps, starred=players[0].name).passed
            good &= PieceSet.union_all(res.bundles) == FULL
            good &= all(cuts <= bound for bound, cuts in phase_cut_counts(ledger))
            if not good:
                failures.append(("star", seed, p))
        for f1 in (F(1, 4), F(1, 3), F(2, 5)):
            ledger = Ledger("1w")
            eps = F(1, 50)
            res = unfair_near_exact(players, FULL, f1, 1 - f1, eps, ledger)
            checked += 1
            good = check_near_exact(players, res.bundles, epsilon=eps, ratios=[f1, 1 - f1]).passed
            good &= all(cuts <= bound for bound, cuts in phase_cut_counts(ledger))
            if not good:
                failures.append(("unfair", seed, f1))
        bystander = random_profile(1, 60_000 + seed, prefix="B")
        halves = cut_equal(players[0], FULL, 2)
        witness = find_controversy(players, halves, None)
        if witness is None:
            continue
        for delta in (F(1, 16), F(1, 64)):
            ledger = Ledger("1w")
            out = controversial_shrink(players, bystander, witness, delta, ledger)
            checked += 1
            everyone = players + bystander
            good = all(measure(a.valuation, out.piece) <= delta for a in everyone)
            good &= out.piece.issubset(witness.piece) and out.alpha > out.beta
            good &= ledger.cuts <= shrink_cut_bound(everyone, witness.piece, delta)
            good &= all(cuts <= bound for bound, cuts in phase_cut_counts(ledger))
            if not good:
                failures.append(("shrink", seed, delta))
    return not failures, f"contract_runs={checked} failures={len(failures)}"


# 9 -----------------------------------------------------------------------------


def criterion_9() -> tuple[bool, str]:
    failures = []
    for seed in range(100):
        two = random_profile(2, 70_000 + seed)
        ledger = Ledger()
        alloc = cut_and_choose(two, ledger=ledger)
        if ledger.cuts != 1 or not check_envy_free(two, alloc).passed:
            failures.append(("cut_and_choose", seed))
        n = seed % 64 + 1
        agents = random_profile(n, 80_000 + seed)
        ledger = Ledger()
        alloc = even_paz(agents, ledger=ledger)
        limit = n * math.ceil(math.log2(n)) if n > 1 else 0
        if ledger.cuts > limit or not (check_proportional(agents, alloc).passed and check_partition(FULL, alloc).passed):
            failures.append(("even_paz", seed, n))
    return not failures, f"profiles=100 n_max=64 failures={len(failures)}"


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, request):
    ok, detail = CRITERIA[k]()
    report(k, ok, detail, request.config.pluginmanager.get_plugin("terminalreporter"))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for k, fn in CRITERIA.items():
        ok, detail = fn()
        report(k, ok, detail)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
