from __future__ import annotations

from dataclasses import dataclass, field

from .cake import PieceSet


@dataclass
class Allocation:
    """Shares by player name plus the unallocated residue."""

    shares: dict[str, PieceSet] = field(default_factory=dict)
    residue: PieceSet = field(default_factory=PieceSet)

    def give(self, name: str, piece: PieceSet) -> None:
        self.shares[name] = self.shares.get(name, PieceSet()) | piece

    def merge(self, other: "Allocation") -> None:
        for name, piece in other.shares.items():
            self.give(name, piece)

    def allocated(self) -> PieceSet:
        return PieceSet.union_all(self.shares.values())

    def share(self, name: str) -> PieceSet:
        return self.shares.get(name, PieceSet())
