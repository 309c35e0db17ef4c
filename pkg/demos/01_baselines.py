"""Cut-and-choose, Selfridge-Conway and Even-Paz on small seeded profiles."""

from __future__ import annotations

from efcake import Ledger, measure, random_profile
from efcake.protocols import cut_and_choose, even_paz, selfridge_conway
from efcake.verification import check_envy_free, check_proportional


def show(title, agents, alloc, ledger):
    print(f"== {title}: {ledger.cuts} cuts")
    for a in agents:
        share = alloc.share(a.name)
        print(f"  {a.name:4} {share.serialize():40} own value {measure(a.valuation, share)}")


def main() -> None:
    two = random_profile(2, seed=1)
    ledger = Ledger()
    alloc = cut_and_choose(two, ledger=ledger)
    show("cut and choose", two, alloc, ledger)
    print("  ", check_envy_free(two, alloc))

    three = random_profile(3, seed=2)
    ledger = Ledger()
    alloc = selfridge_conway(three, ledger=ledger)
    show("Selfridge-Conway", three, alloc, ledger)
    print("  ", check_envy_free(three, alloc))

    five = random_profile(5, seed=3)
    ledger = Ledger()
    alloc = even_paz(five, ledger=ledger)
    show("Even-Paz", five, alloc, ledger)
    print("  ", check_proportional(five, alloc))
    print("  ", check_envy_free(five, alloc), "(envy is allowed here)")


if __name__ == "__main__":
    main()
