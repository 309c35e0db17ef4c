"""Protocol drivers: bounded baselines and the ordinal-budget protocols."""

from .baselines import cut_and_choose, even_paz, selfridge_conway
from .efbt import AdvantageGraph, StageRecord, efbt, efbt_budget
from .efrw import efrw, efrw_budget, pikhurto

__all__ = [
    "cut_and_choose",
    "selfridge_conway",
    "even_paz",
    "efbt",
    "efbt_budget",
    "AdvantageGraph",
    "StageRecord",
    "efrw",
    "pikhurto",
    "efrw_budget",
]
