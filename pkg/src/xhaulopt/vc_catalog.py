"""The five virtual configurations (VCs): split pairs, colocation and function placement."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class FunctionalSplit(str, enum.Enum):
    FS2 = "FS2"
    FS6 = "FS6"
    FS72X = "FS72x"


class RanFunction(str, enum.Enum):
    RF = "RF"
    LPHY = "LPHY"
    HPHY = "HPHY"
    MAC = "MAC"
    RLC = "RLC"
    PDCP = "PDCP"
    RRC = "RRC"


# Downlink processing chain, radio side first.
CHAIN: tuple[RanFunction, ...] = tuple(RanFunction)


class Unit(str, enum.Enum):
    CU = "CU"
    DU = "DU"
    RU = "RU"


class Colocation(str, enum.Enum):
    DUAL_SPLIT = "DualSplit"
    DU_WITH_RU = "DuWithRu"
    DU_WITH_CU = "DuWithCu"


class Segment(str, enum.Enum):
    MH = "MH"  # CU <-> DU
    FH = "FH"  # DU <-> RU


class VC(enum.IntEnum):
    VC1 = 1
    VC2 = 2
    VC3 = 3
    VC4 = 4
    VC5 = 5

    def __str__(self) -> str:
        return self.name


# Number of chain functions kept at the radio side of each split boundary.
_RADIO_SIDE = {
    FunctionalSplit.FS72X: 2,  # RF, LPHY
    FunctionalSplit.FS6: 3,    # RF, LPHY, HPHY
    FunctionalSplit.FS2: 5,    # everything below PDCP
}


@dataclass(frozen=True)
class VirtualConfig:
    id: VC
    colocation: Colocation
    high_split: FunctionalSplit | None
    low_split: FunctionalSplit | None
    functions_at: dict

    @property
    def segments(self) -> frozenset[Segment]:
        out = set()
        if self.colocation is not Colocation.DU_WITH_CU:
            out.add(Segment.MH)
        if self.colocation is not Colocation.DU_WITH_RU:
            out.add(Segment.FH)
        return frozenset(out)

    @property
    def sites(self) -> int:
        """Distinct nodes needed to host CU, DU and RU."""
        return 3 if self.colocation is Colocation.DUAL_SPLIT else 2

    def split_of(self, segment: Segment) -> FunctionalSplit:
        if segment not in self.segments:
            raise KeyError(f"{self.id} has no {segment.value} segment")
        return self.high_split if segment is Segment.MH else self.low_split

    def __hash__(self):
        return hash(self.id)

    def __eq__(self, other):
        return isinstance(other, VirtualConfig) and other.id == self.id


def _partition(high: FunctionalSplit | None, low: FunctionalSplit | None, colocation: Colocation):
    # Boundaries are counted from the radio end of the chain.
    cu_from = _RADIO_SIDE[FunctionalSplit.FS2]
    if colocation is Colocation.DU_WITH_RU:
        ru_upto = 1  # only the radio front end is RU-specific when DU sits at the cell site
    else:
        ru_upto = _RADIO_SIDE[low]
    return {
        Unit.RU: frozenset(CHAIN[:ru_upto]),
        Unit.DU: frozenset(CHAIN[ru_upto:cu_from]),
        Unit.CU: frozenset(CHAIN[cu_from:]),
    }


def _make(vc: VC, colocation: Colocation, high, low) -> VirtualConfig:
    return VirtualConfig(vc, colocation, high, low, _partition(high, low, colocation))


CATALOG: dict[VC, VirtualConfig] = {
    VC.VC1: _make(VC.VC1, Colocation.DUAL_SPLIT, FunctionalSplit.FS2, FunctionalSplit.FS72X),
    VC.VC2: _make(VC.VC2, Colocation.DUAL_SPLIT, FunctionalSplit.FS2, FunctionalSplit.FS6),
    VC.VC3: _make(VC.VC3, Colocation.DU_WITH_RU, FunctionalSplit.FS2, None),
    VC.VC4: _make(VC.VC4, Colocation.DU_WITH_CU, None, FunctionalSplit.FS6),
    VC.VC5: _make(VC.VC5, Colocation.DU_WITH_CU, None, FunctionalSplit.FS72X),
}

DUAL_SPLIT = frozenset(v for v, c in CATALOG.items() if c.colocation is Colocation.DUAL_SPLIT)
SINGLE_HIGH = frozenset(v for v, c in CATALOG.items() if c.colocation is Colocation.DU_WITH_RU)
SINGLE_LOW = frozenset(v for v, c in CATALOG.items() if c.colocation is Colocation.DU_WITH_CU)


def get(vc: VC | int | VirtualConfig) -> VirtualConfig:
    if isinstance(vc, VirtualConfig):
        return vc
    return CATALOG[VC(int(vc))]


def segments(vc) -> frozenset[Segment]:
    return get(vc).segments


def split_functions(vc, unit: Unit) -> frozenset[RanFunction]:
    return get(vc).functions_at[Unit(unit)]
