"""Exact rational algebra for cake pieces and piecewise-constant valuations.

The cake is the half-open unit interval ``[0, 1)``.  A piece is a finite union
of disjoint half-open intervals with rational endpoints, kept in a canonical
form so that equal sets compare equal.  Valuations are piecewise-constant
densities with rational breakpoints and rational density values; every
measurement is an exact :class:`fractions.Fraction`.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "Fraction",
    "PieceSet",
    "ValuationDensity",
    "measure",
    "quantile_cut",
    "split_equal",
    "perfect_partition",
    "refine",
    "parse_fraction",
    "format_fraction",
    "uniform",
]

_FRACTION_RE = re.compile(r"^-?\d+(/\d+)?$")


def parse_fraction(text: str) -> Fraction:
    """Parse ``"num/den"`` or ``"num"``; decimals and exponents are rejected."""
    text = text.strip()
    if not _FRACTION_RE.match(text):
        raise ValueError(f"not a rational literal: {text!r}")
    value = Fraction(text)
    return value


def format_fraction(value: Fraction | int) -> str:
    return str(Fraction(value))


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not accepted; pass a Fraction or an int")
    return Fraction(x)


@dataclass(frozen=True)
class PieceSet:
    """Canonical finite union of disjoint half-open rational intervals in [0, 1)."""

    intervals: tuple[tuple[Fraction, Fraction], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", _canonical(self.intervals))

    @classmethod
    def interval(cls, lo, hi) -> "PieceSet":
        return cls(((_as_fraction(lo), _as_fraction(hi)),))

    @classmethod
    def full(cls) -> "PieceSet":
        return cls(((Fraction(0), Fraction(1)),))

    @classmethod
    def empty(cls) -> "PieceSet":
        return cls()

    @classmethod
    def union_all(cls, pieces: Iterable["PieceSet"]) -> "PieceSet":
        spans = [iv for p in pieces for iv in p.intervals]
        return cls(tuple(spans))

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def is_empty(self) -> bool:
        return not self.intervals

    def length(self) -> Fraction:
        return sum((hi - lo for lo, hi in self.intervals), Fraction(0))

    def boundaries(self) -> set[Fraction]:
        return {x for iv in self.intervals for x in iv}

    def __or__(self, other: "PieceSet") -> "PieceSet":
        return PieceSet(self.intervals + other.intervals)

    union = __or__

    def __and__(self, other: "PieceSet") -> "PieceSet":
        out = []
        a, b = self.intervals, other.intervals
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo < hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return PieceSet(tuple(out))

    intersection = __and__

    def __sub__(self, other: "PieceSet") -> "PieceSet":
        out = []
        b = other.intervals
        j = 0
        for lo, hi in self.intervals:
            cur = lo
            while j < len(b) and b[j][1] <= cur:
                j += 1
            k = j
            while k < len(b) and b[k][0] < hi:
                if b[k][0] > cur:
                    out.append((cur, b[k][0]))
                cur = max(cur, b[k][1])
                if cur >= hi:
                    break
                k += 1
            if cur < hi:
                out.append((cur, hi))
        return PieceSet(tuple(out))

    difference = __sub__

    def clip(self, lo, hi) -> "PieceSet":
        """Intersection with ``[lo, hi)``."""
        lo, hi = _as_fraction(lo), _as_fraction(hi)
        if lo >= hi:
            return PieceSet()
        return self & PieceSet(((lo, hi),))

    def issubset(self, other: "PieceSet") -> bool:
        return (self - other).is_empty()

    def isdisjoint(self, other: "PieceSet") -> bool:
        return (self & other).is_empty()

    def __str__(self) -> str:
        return self.serialize()

    def serialize(self) -> str:
        if not self.intervals:
            return "empty"
        return ",".join(f"{lo}..{hi}" for lo, hi in self.intervals)

    @classmethod
    def parse(cls, text: str) -> "PieceSet":
        text = text.strip()
        if text in ("", "empty"):
            return cls()
        spans = []
        for chunk in text.split(","):
            try:
                lo_s, hi_s = chunk.split("..")
            except ValueError:
                raise ValueError(f"malformed span {chunk!r}") from None
            lo, hi = parse_fraction(lo_s), parse_fraction(hi_s)
            if not (0 <= lo < hi <= 1):
                raise ValueError(f"span {chunk!r} outside [0,1) or empty")
            spans.append((lo, hi))
        return cls(tuple(spans))


def _canonical(spans) -> tuple[tuple[Fraction, Fraction], ...]:
    items = []
    for lo, hi in spans:
        lo, hi = _as_fraction(lo), _as_fraction(hi)
        if lo < 0 or hi > 1:
            raise ValueError(f"interval [{lo}, {hi}) leaves the cake")
        if lo < hi:
            items.append((lo, hi))
    if not items:
        return ()
    items.sort()
    merged = [items[0]]
    for lo, hi in items[1:]:
        plo, phi = merged[-1]
        if lo <= phi:
            if hi > phi:
                merged[-1] = (plo, hi)
        else:
            merged.append((lo, hi))
    return tuple(merged)


@dataclass(frozen=True)
class ValuationDensity:
    """Piecewise-constant density on [0, 1) that integrates to exactly 1."""

    breakpoints: tuple[Fraction, ...]
    densities: tuple[Fraction, ...]
    _cumulative: tuple[Fraction, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bps = tuple(_as_fraction(b) for b in self.breakpoints)
        ds = tuple(_as_fraction(d) for d in self.densities)
        if len(bps) != len(ds) + 1 or not ds:
            raise ValueError("need K densities and K+1 breakpoints")
        if bps[0] != 0 or bps[-1] != 1:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if any(a >= b for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(d < 0 for d in ds):
            raise ValueError("densities must be non-negative")
        cum = [Fraction(0)]
        for k, d in enumerate(ds):
            cum.append(cum[-1] + d * (bps[k + 1] - bps[k]))
        if cum[-1] != 1:
            raise ValueError(f"density integrates to {cum[-1]}, not 1")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "densities", ds)
        object.__setattr__(self, "_cumulative", tuple(cum))

    @classmethod
    def from_segments(cls, segments: Sequence[tuple]) -> "ValuationDensity":
        """Build from ``(lo, hi, density)`` triples that tile [0, 1)."""
        segments = sorted((_as_fraction(a), _as_fraction(b), _as_fraction(d)) for a, b, d in segments)
        bps = [segments[0][0]]
        for a, b, _ in segments:
            if a != bps[-1]:
                raise ValueError(f"segments leave a gap or overlap at {a}")
            bps.append(b)
        return cls(tuple(bps), tuple(d for _, _, d in segments))

    @classmethod
    def from_weights(cls, breakpoints: Sequence, weights: Sequence) -> "ValuationDensity":
        """Normalize non-negative raw density weights so the total is 1."""
        bps = [_as_fraction(b) for b in breakpoints]
        ws = [_as_fraction(w) for w in weights]
        total = sum(w * (b - a) for w, a, b in zip(ws, bps, bps[1:]))
        if total <= 0:
            raise ValueError("weights give zero total mass")
        return cls(tuple(bps), tuple(w / total for w in ws))

    def density_at(self, x: Fraction) -> Fraction:
        k = min(bisect_right(self.breakpoints, x) - 1, len(self.densities) - 1)
        return self.densities[k]

    def cdf(self, x: Fraction) -> Fraction:
        """Measure of ``[0, x)``."""
        if x <= 0:
            return Fraction(0)
        if x >= 1:
            return Fraction(1)
        k = bisect_right(self.breakpoints, x) - 1
        return self._cumulative[k] + self.densities[k] * (x - self.breakpoints[k])

    def segments(self):
        return [
            (self.breakpoints[k], self.breakpoints[k + 1], d) for k, d in enumerate(self.densities)
        ]


def uniform() -> ValuationDensity:
    return ValuationDensity((Fraction(0), Fraction(1)), (Fraction(1),))


def measure(v: ValuationDensity, p: PieceSet) -> Fraction:
    total = Fraction(0)
    for lo, hi in p.intervals:
        total += v.cdf(hi) - v.cdf(lo)
    return total


def quantile_cut(v: ValuationDensity, p: PieceSet, target) -> Fraction:
    """Leftmost ``x`` with ``measure(v, p & [0, x)) == target``."""
    target = _as_fraction(target)
    if target < 0 or target > measure(v, p):
        raise ValueError(f"target {target} outside [0, {measure(v, p)}]")
    if target == 0:
        return Fraction(0)
    acc = Fraction(0)
    for lo, hi in p.intervals:
        k = bisect_right(v.breakpoints, lo) - 1
        pos = lo
        while pos < hi:
            seg_hi = min(hi, v.breakpoints[k + 1])
            d = v.densities[k]
            val = d * (seg_hi - pos)
            if d > 0 and acc + val >= target:
                return pos + (target - acc) / d
            acc += val
            pos = seg_hi
            k += 1
    raise AssertionError("unreachable: target within range but not located")


def split_equal(v: ValuationDensity, p: PieceSet, parts: int) -> list[PieceSet]:
    """Cut ``p`` into ``parts`` pieces of equal ``v``-measure with ``parts - 1`` cuts."""
    if parts < 1:
        raise ValueError("parts must be >= 1")
    total = measure(v, p)
    cuts = [quantile_cut(v, p, total * k / parts) for k in range(1, parts)]
    return pieces_between(p, cuts)


def pieces_between(p: PieceSet, cuts: Sequence[Fraction]) -> list[PieceSet]:
    """Slice ``p`` at the given nondecreasing cut points."""
    edges = [Fraction(0), *cuts, Fraction(1)]
    return [p.clip(a, b) for a, b in zip(edges, edges[1:])]


def refine(p: PieceSet, vs: Iterable[ValuationDensity], extra: Iterable[Fraction] = ()) -> list[tuple[Fraction, Fraction]]:
    """Split ``p`` into maximal intervals on which every density in ``vs`` is constant."""
    points = set(extra)
    for v in vs:
        points.update(v.breakpoints)
    ordered = sorted(points)
    out = []
    for lo, hi in p.intervals:
        start = bisect_right(ordered, lo)
        cur = lo
        for x in ordered[start:]:
            if x >= hi:
                break
            out.append((cur, x))
            cur = x
        out.append((cur, hi))
    return out


def perfect_partition(vs: Sequence[ValuationDensity], p: PieceSet, ratios: Sequence) -> list[PieceSet]:
    """Partition ``p`` so every share is exactly ``ratio * measure(v, p)`` for every ``v``.

    Each constant-density segment of the common refinement is sliced by length
    in the given ratios and slice ``r`` goes to share ``r``.
    """
    ratios = [_as_fraction(r) for r in ratios]
    if any(r < 0 for r in ratios) or sum(ratios) != 1:
        raise ValueError("ratios must be non-negative and sum to exactly 1")
    spans: list[list[tuple[Fraction, Fraction]]] = [[] for _ in ratios]
    for lo, hi in refine(p, vs):
        width = hi - lo
        cur = lo
        for r, ratio in enumerate(ratios):
            nxt = cur + ratio * width
            spans[r].append((cur, nxt))
            cur = nxt
    return [PieceSet(tuple(s)) for s in spans]
