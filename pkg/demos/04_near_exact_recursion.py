"""Recursive near-exact protocols: A-players end envy-free, B-players near-proportional."""

from __future__ import annotations

from fractions import Fraction

from efcake import Ledger, format_ordinal, random_profile
from efcake.analysis import efrw_average_phases, efrw_recurrence
from efcake.protocols import efrw, efrw_budget, pikhurto
from efcake.verification import check_envy_free, check_near_exact


def main() -> None:
    a = random_profile(4, seed=31)
    b = random_profile(1, seed=32, prefix="B")
    eps = Fraction(1, 100)
    for name, protocol in (("efrw", efrw), ("pikhurto", pikhurto)):
        ledger = Ledger(efrw_budget(4))
        alloc = protocol(a, b, epsilon=eps, ledger=ledger)
        shares = [alloc.share(x.name) for x in a]
        print(f"== {name}: {ledger.cuts} cuts, {ledger.omega_conversions} w-phases, "
              f"budget {format_ordinal(ledger.initial)} -> {format_ordinal(ledger.budget)}")
        for check in (check_envy_free(a, alloc), check_near_exact(a + b, shares, epsilon=eps)):
            status = "PASS" if check.passed else "FAIL"
            print(f"   {check.name} {status} margin {float(check.margin):.3g}")
    print("\nworst-case recurrence vs random-split average:")
    for n in (2, 3, 4, 6, 10):
        print(f"  n={n:2}: T = {format_ordinal(efrw_recurrence(n))}, average w-phases {float(efrw_average_phases(n)):.3f}")


if __name__ == "__main__":
    main()
