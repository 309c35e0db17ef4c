from __future__ import annotations

from fractions import Fraction as F

import pytest

from efcake.agents import AgentSpec
from efcake.cake import ValuationDensity, uniform


@pytest.fixture
def lefty() -> ValuationDensity:
    """Density 2 on [0,1/4) and 2/3 on [1/4,1)."""
    return ValuationDensity.from_segments([(0, F(1, 4), 2), (F(1, 4), 1, F(2, 3))])


def make_agent(name: str, valuation: ValuationDensity | None = None, **kw) -> AgentSpec:
    return AgentSpec(name, valuation if valuation is not None else uniform(), **kw)


def block(lo, hi) -> ValuationDensity:
    """Uniform on [lo, hi), zero elsewhere."""
    lo, hi = F(lo), F(hi)
    segs = []
    if lo > 0:
        segs.append((0, lo, 0))
    segs.append((lo, hi, 1 / (hi - lo)))
    if hi < 1:
        segs.append((hi, 1, 0))
    return ValuationDensity.from_segments(segs)
