"""Exact-arithmetic laboratory for envy-free cake cutting under ordinal cut budgets."""

from .agents import AgentSpec, Policy, parse_profile, random_profile
from .allocation import Allocation
from .cake import PieceSet, ValuationDensity, measure, perfect_partition, quantile_cut
from .ledger import Ledger, OrdinalBudget, format_ordinal, parse_ordinal

__all__ = [
    "AgentSpec",
    "Policy",
    "parse_profile",
    "random_profile",
    "Allocation",
    "PieceSet",
    "ValuationDensity",
    "measure",
    "perfect_partition",
    "quantile_cut",
    "Ledger",
    "OrdinalBudget",
    "format_ordinal",
    "parse_ordinal",
]
