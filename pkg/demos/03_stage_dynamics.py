"""Stage counts of the scripted declaration model against the exact oracle."""

from __future__ import annotations

from efcake.analysis import (
    efbt_dynamics,
    exact_expected_stages,
    lemma2_scan,
    closed_form_stages,
)


def main() -> None:
    print(" n   exact E      Monte Carlo (SE)        closed form (shift 2 / shift 1)")
    for n in range(2, 9):
        exact = exact_expected_stages(n)
        stats = efbt_dynamics(n, 20000, seed=7)
        print(
            f"{n:2}   {float(exact):8.5f}   {stats.mean:8.5f} ({stats.std_error:.5f})"
            f"      {closed_form_stages(n):.4f} / {closed_form_stages(n, 1):.4f}"
        )
    print("\nmost edges without a full vertex, by brute force:")
    for n in range(2, 8):
        scan = lemma2_scan(n)
        print(f"  n={n}: {scan.max_edges_without_full} (threshold {scan.threshold}, tight={scan.tight})")


if __name__ == "__main__":
    main()
