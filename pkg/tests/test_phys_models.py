import math

import pytest
from hypothesis import given, strategies as st

from reference import fs72x_mbps, hand_delays
from xhaulopt.phys_models import (
    Flow,
    FlowClass,
    RanFunction,
    ReferenceTable,
    RfConfig,
    ScenarioConstants,
    Slice,
    SliceDemand,
    function_gops,
    pp_energy_wh,
    queuing_us,
    segment_bandwidth,
    self_queuing_us,
    static_latency_us,
    switch_energy_wh,
    transmission_delay_us,
    unit_gops,
)
from xhaulopt.topology import Edge, Node, NodeKind
from xhaulopt.vc_catalog import VC, FunctionalSplit, Unit

C = ScenarioConstants()
REF = ReferenceTable()
# radio exactly at the reference point: every ratio in the load formulas is 1
RF_REF = RfConfig(bw_mhz=20, mod_order=6, layers=4, coding_rate=1.0, prb=100, numerology_mu=0,
                  subcarriers=1200, antennas=4)
NR100 = RfConfig(bw_mhz=100, mod_order=8, layers=8, coding_rate=1 / 3, prb=273, numerology_mu=1,
                 subcarriers=3276, antennas=8)


def _pp(cpus):
    return Node(1, NodeKind.REGIONAL_PP, cpus, cpus * 864.0)


def _demand(rate, peak=1000.0):
    return SliceDemand(0, Slice.EMBB, rate, 0, peak)


# --- computing ---------------------------------------------------------------

def test_rrc_at_reference_antennas():
    assert function_gops(RanFunction.RRC, RF_REF, 1.0, REF) == REF.c_ref[RanFunction.RRC]


def test_hphy_is_quadratic_in_antennas():
    rf = RfConfig(20, 6, 4, 1.0, 100, 0, 1200, antennas=8)
    assert function_gops(RanFunction.HPHY, rf, 1.0, REF) == pytest.approx(4 * REF.c_ref[RanFunction.HPHY])


def test_rf_scales_with_bandwidth():
    rf = RfConfig(40, 6, 4, 1.0, 100, 0, 1200, 4)
    assert function_gops(RanFunction.RF, rf, 1.0, REF) == pytest.approx(2 * REF.c_ref[RanFunction.RF])


def test_vc3_cu_load_is_pdcp_plus_rrc():
    d = _demand(200.0, 200.0)
    c = REF.c_ref
    assert unit_gops(VC.VC3, Unit.CU, RF_REF, d, REF) == pytest.approx(c[RanFunction.PDCP] + c[RanFunction.RRC])
    rf = RfConfig(20, 6, 4, 1.0, 100, 0, 1200, antennas=8)
    assert unit_gops(VC.VC3, Unit.CU, rf, d, REF) == pytest.approx(2 * (c[RanFunction.PDCP] + c[RanFunction.RRC]))


def test_zero_demand_keeps_only_load_independent_terms():
    d = _demand(0.0)
    c = REF.c_ref
    # VC1 DU hosts HPHY, MAC, RLC: only RLC has no load term
    assert unit_gops(VC.VC1, Unit.DU, RF_REF, d, REF) == pytest.approx(c[RanFunction.RLC])
    assert unit_gops(VC.VC1, Unit.RU, RF_REF, d, REF) == pytest.approx(c[RanFunction.RF])


def test_vc1_ru_at_reference():
    d = _demand(1000.0)
    c = REF.c_ref
    assert unit_gops(VC.VC1, Unit.RU, RF_REF, d, REF) == pytest.approx(c[RanFunction.RF] + c[RanFunction.LPHY])


def test_load_fraction_out_of_range():
    with pytest.raises(ValueError):
        function_gops(RanFunction.MAC, RF_REF, 1.5, REF)


# --- bandwidth ---------------------------------------------------------------

@pytest.mark.parametrize("split", list(FunctionalSplit))
def test_zero_demand_zero_bandwidth(split):
    assert segment_bandwidth(split, NR100, _demand(0.0), C) == 0.0


def test_fs72x_full_load_matches_iq_formula():
    got = segment_bandwidth(FunctionalSplit.FS72X, NR100, _demand(1000.0, 1000.0), C)
    assert got == pytest.approx(fs72x_mbps(layers=8, prb=273, mu=1), rel=1e-12)
    # roughly 23 Gbps: a single 100 MHz RU nearly fills a 25 Gbps port
    assert 22_000 < got < 24_000


def test_fs72x_scales_with_prb_share():
    full = segment_bandwidth(FunctionalSplit.FS72X, NR100, _demand(1000.0), C)
    assert segment_bandwidth(FunctionalSplit.FS72X, NR100, _demand(250.0), C) == pytest.approx(full / 4)


def test_fs6_adds_control_rate():
    d = _demand(300.0)
    fs2 = segment_bandwidth(FunctionalSplit.FS2, RF_REF, d, C)
    assert fs2 == pytest.approx(300.0)
    assert segment_bandwidth(FunctionalSplit.FS6, RF_REF, d, C) == pytest.approx(330.0)


@given(st.floats(0, 2000), st.floats(0, 2000), st.sampled_from(list(FunctionalSplit)))
def test_bandwidth_monotone_in_demand(a, b, split):
    lo, hi = sorted((a, b))
    assert segment_bandwidth(split, NR100, _demand(lo, 2000.0), C) <= segment_bandwidth(split, NR100, _demand(hi, 2000.0), C)


@given(st.floats(0, 2000))
def test_fs6_not_below_fs2(rate):
    d = _demand(rate, 2000.0)
    assert segment_bandwidth(FunctionalSplit.FS6, NR100, d, C) >= segment_bandwidth(FunctionalSplit.FS2, NR100, d, C)


# --- latency -----------------------------------------------------------------

def test_transmission_delay_examples():
    assert abs(transmission_delay_us(1542, 100) - 0.12336) <= 1e-9
    assert abs(transmission_delay_us(1542, 25) - 0.49344) <= 1e-9
    assert transmission_delay_us(0, 100) == 0.0


def test_static_latency_examples():
    assert static_latency_us([], C) == 0.0
    assert static_latency_us([Edge(0, 0, 1, 100, 10.0)], C) == pytest.approx(55.0)
    assert static_latency_us([Edge(0, 0, 1, 100, 2.0), Edge(1, 1, 2, 100, 3.0)], C) == pytest.approx(35.0)


# Y-graph: 0 -e0- 2, 1 -e1- 2, 2 -e2- 3; all 100 Gbps
Y = {0: Edge(0, 0, 2, 100, 1.0), 1: Edge(1, 1, 2, 100, 1.0), 2: Edge(2, 2, 3, 100, 1.0)}
D100 = 0.12336


def test_lone_flow_has_no_self_queuing():
    f = Flow("a", FlowClass.HPF, (0, 2))
    for e in f.path:
        assert self_queuing_us(f, Y[e], [f], C) == 0.0
        assert queuing_us(f, Y[e], [f], C) == 0.0


def test_merging_flows_wait_one_frame_each():
    a = Flow("a", FlowClass.HPF, (0, 2))
    b = Flow("b", FlowClass.HPF, (1, 2))
    flows = [a, b]
    for f in flows:
        assert self_queuing_us(f, Y[2], flows, C) == pytest.approx(D100, abs=1e-12)
        total = sum(self_queuing_us(f, Y[e], flows, C) for e in f.path)
        assert total == pytest.approx(D100, abs=1e-12)


def test_flows_sharing_previous_edge_do_not_interfere():
    a = Flow("a", FlowClass.HPF, (0, 2))
    b = Flow("b", FlowClass.HPF, (0, 2))
    # both enter on e0 as their first hop (distinct ingress ports there), then share the ingress of e2
    assert self_queuing_us(a, Y[2], [a, b], C) == 0.0
    assert self_queuing_us(a, Y[0], [a, b], C) == pytest.approx(D100)


def test_fronthaul_waits_for_one_midhaul_frame():
    fh = Flow("fh", FlowClass.HPF, (2,))
    assert queuing_us(fh, Y[2], [fh], C) == 0.0
    mh = Flow("mh", FlowClass.MPF, (2,))
    mh2 = Flow("mh2", FlowClass.MPF, (1, 2))
    assert queuing_us(fh, Y[2], [fh, mh], C) == pytest.approx(D100)
    assert queuing_us(fh, Y[2], [fh, mh, mh2], C) == pytest.approx(D100)
    assert queuing_us(mh, Y[2], [fh, mh], C) == pytest.approx(D100)


def test_midhaul_waits_per_coresident_flow():
    mh = Flow("mh", FlowClass.MPF, (2,))
    others = [Flow("f1", FlowClass.HPF, (2,)), Flow("f2", FlowClass.HPF, (0, 2)), Flow("m2", FlowClass.MPF, (1, 2))]
    assert queuing_us(mh, Y[2], [mh] + others, C) == pytest.approx(3 * D100)


def test_edge_not_on_flow():
    f = Flow("a", FlowClass.HPF, (0,))
    with pytest.raises(ValueError):
        self_queuing_us(f, Y[2], [f], C)


# small graph: 0-1-2-3-4 line plus chord 1-3, and a spur 2-5; mixed capacities
SMALL = {0: Edge(0, 0, 1, 100, 1), 1: Edge(1, 1, 2, 25, 1), 2: Edge(2, 2, 3, 200, 1),
         3: Edge(3, 3, 4, 100, 1), 4: Edge(4, 1, 3, 100, 1), 5: Edge(5, 2, 5, 25, 1)}
SMALL_PATHS = [(0,), (0, 1), (0, 1, 2), (0, 4), (0, 4, 3), (1, 2, 3), (4, 3), (2, 3), (1,), (5, 2), (5, 1, 0),
               (3,), (3, 4), (3, 2, 1), (5, 2, 3), (2,), (1, 4)]


@given(st.lists(st.tuples(st.sampled_from(["HPF", "MPF"]), st.sampled_from(SMALL_PATHS)), min_size=1, max_size=4))
def test_delays_match_pairwise_inspection(spec):
    flows = [Flow(i, FlowClass(c), p) for i, (c, p) in enumerate(spec)]
    ref = hand_delays({i: (c, p) for i, (c, p) in enumerate(spec)}, {e: SMALL[e].capacity_gbps for e in SMALL})
    for f in flows:
        q = sum(queuing_us(f, SMALL[e], flows, C) for e in f.path)
        sq = sum(self_queuing_us(f, SMALL[e], flows, C) for e in f.path)
        assert q == pytest.approx(ref[f.id][0], abs=1e-12)
        assert sq == pytest.approx(ref[f.id][1], abs=1e-12)


@given(st.lists(st.sampled_from(SMALL_PATHS), min_size=1, max_size=4, unique=True))
def test_edge_disjoint_flows_never_self_queue(paths):
    chosen, used = [], set()
    for p in paths:
        if not used & set(p):
            chosen.append(p)
            used |= set(p)
    flows = [Flow(i, FlowClass.HPF, p) for i, p in enumerate(chosen)]
    for f in flows:
        assert all(self_queuing_us(f, SMALL[e], flows, C) == 0.0 for e in f.path)


# --- energy -----------------------------------------------------------------

def test_pp_energy_examples():
    assert pp_energy_wh(_pp(2), 0.0, 1.0, C) == 0.0
    assert abs(pp_energy_wh(_pp(2), 2 * 864.0, 1.0, C) - 581.2) <= 1e-6
    assert abs(pp_energy_wh(_pp(5), 0.5 * 5 * 864.0, 1.0, C) - 726.5) <= 1e-6


def test_pp_energy_over_capacity():
    with pytest.raises(ValueError):
        pp_energy_wh(_pp(1), 865.0, 1.0, C)


@given(st.floats(0, 0.5), st.integers(1, 6))
def test_pp_energy_linear_in_load(u, cpus):
    node = _pp(cpus)
    one = pp_energy_wh(node, u * node.capacity_gops, 1.0, C)
    two = pp_energy_wh(node, 2 * u * node.capacity_gops, 1.0, C)
    assert two == pytest.approx(2 * one, abs=1e-9)


def test_switch_energy_examples():
    assert switch_energy_wh(1, {100.0: 4}, 1.0, C, active=False) == 0.0
    assert abs(switch_energy_wh(1, {100.0: 4}, 1.0, C) - 2124.0) <= 1e-6
    assert abs(switch_energy_wh(0, {}, 1.0, C) - 940.0) <= 1e-6


def test_switch_energy_negative_counts():
    with pytest.raises(ValueError):
        switch_energy_wh(-1, {}, 1.0, C)


def test_modulation_264_reads_as_256qam():
    rf = RfConfig.from_profile({"bw_mhz": 100, "modulation": 264, "layers": 8, "prb": 273})
    assert rf.mod_order == 8 == RfConfig.from_profile({"bw_mhz": 100, "modulation": 256, "layers": 8,
                                                        "prb": 273}).mod_order


def test_rf_config_invariants():
    with pytest.raises(ValueError):
        RfConfig(20, 6, 8, 1.0, 100, 0, 1200, antennas=4)
    with pytest.raises(ValueError):
        RfConfig(20, 6, 4, 0.0, 100, 0, 1200, antennas=4)
    assert math.isclose(REF.bw_ref, 20.0)
