"""One bounded-time envy-free run for four players, stage by stage.

Watch the ordinal counter: the first cut of each phase converts one w into
the finite bound the observer declares for that phase.
"""

from __future__ import annotations

from efcake import Ledger, format_ordinal, random_profile
from efcake.protocols import efbt, efbt_budget
from efcake.verification import check_envy_free


def main() -> None:
    agents = random_profile(4, seed=21)
    budget, big_l = efbt_budget(4)
    print(f"initial budget {format_ordinal(budget)}, opening split into L = {big_l} pieces")
    ledger = Ledger(budget)
    alloc, graph, records = efbt(agents, ledger=ledger)
    for r in records:
        decl = " ".join(r.declarations) or "-"
        extra = f" pair={r.pair} adv={r.adv_path}" if r.pair else ""
        residue = ", ".join(str(x) for x in r.residue_measures)
        print(f"stage {r.stage_id}: {r.case:12} declarations [{decl}] cuts={r.cuts}{extra}")
        if residue:
            print(f"          residue as each player sees it: {residue}")
    print("advantage edges (i, j, stage):", graph.edge_list())
    counters = [e.details[0] for e in ledger.events if e.kind == "COUNTER"]
    print("counter trace head:", " > ".join(counters[:14]), "...")
    print(f"final budget {format_ordinal(ledger.budget)} after {ledger.cuts} cuts")
    print(check_envy_free(agents, alloc))


if __name__ == "__main__":
    main()
