import pytest

from xhaulopt.vc_catalog import (
    CATALOG,
    CHAIN,
    DUAL_SPLIT,
    SINGLE_HIGH,
    SINGLE_LOW,
    VC,
    FunctionalSplit,
    RanFunction as F,
    Segment,
    Unit,
    get,
    segments,
    split_functions,
)


@pytest.mark.parametrize("vc, segs", [
    (VC.VC1, {Segment.MH, Segment.FH}),
    (VC.VC2, {Segment.MH, Segment.FH}),
    (VC.VC3, {Segment.MH}),
    (VC.VC4, {Segment.FH}),
    (VC.VC5, {Segment.FH}),
])
def test_segments(vc, segs):
    assert segments(vc) == segs


def test_split_pairs():
    assert (get(1).high_split, get(1).low_split) == (FunctionalSplit.FS2, FunctionalSplit.FS72X)
    assert (get(2).high_split, get(2).low_split) == (FunctionalSplit.FS2, FunctionalSplit.FS6)
    assert (get(3).high_split, get(3).low_split) == (FunctionalSplit.FS2, None)
    assert get(4).low_split is FunctionalSplit.FS6
    assert get(5).low_split is FunctionalSplit.FS72X
    assert get(3).split_of(Segment.MH) is FunctionalSplit.FS2
    with pytest.raises(KeyError):
        get(3).split_of(Segment.FH)


def test_named_function_sets():
    assert split_functions(VC.VC1, Unit.RU) == {F.RF, F.LPHY}
    assert split_functions(VC.VC2, Unit.RU) == {F.RF, F.LPHY, F.HPHY}
    assert split_functions(VC.VC3, Unit.DU) == {F.RLC, F.MAC, F.HPHY, F.LPHY}
    assert split_functions(VC.VC3, Unit.RU) == {F.RF}
    for vc in VC:
        assert split_functions(vc, Unit.CU) == {F.PDCP, F.RRC}


def test_fs2_is_the_only_midhaul_split():
    for vc in VC:
        cfg = get(vc)
        if Segment.MH in cfg.segments:
            assert cfg.split_of(Segment.MH) is FunctionalSplit.FS2
        if Segment.FH in cfg.segments:
            assert cfg.split_of(Segment.FH) in (FunctionalSplit.FS6, FunctionalSplit.FS72X)


def test_partitions():
    assert DUAL_SPLIT == {VC.VC1, VC.VC2}
    assert SINGLE_HIGH == {VC.VC3}
    assert SINGLE_LOW == {VC.VC4, VC.VC5}


@pytest.mark.parametrize("vc", list(VC))
def test_every_function_hosted_exactly_once(vc):
    sets = [split_functions(vc, u) for u in Unit]
    assert sum(len(s) for s in sets) == len(CHAIN)
    assert set().union(*sets) == set(CHAIN)


@pytest.mark.parametrize("vc", list(VC))
def test_sites_match_segments(vc):
    assert len(segments(vc)) + 1 == CATALOG[vc].sites


def test_chain_order():
    assert CHAIN == (F.RF, F.LPHY, F.HPHY, F.MAC, F.RLC, F.PDCP, F.RRC)
