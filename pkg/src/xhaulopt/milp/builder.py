"""Build the placement/routing MILP for one hour of a scenario.

Row tags name the constraint family they instantiate (``vnf_1`` ... ``enr_2``).
Products of two binaries use the rows ``pl-2``/``pl-3``/``pl-4``
(z <= x, z <= y, z >= x + y - 1); the energy terms APP*E and ASW*E use the
Big-M rows ``l-1`` ... ``l-4``. Rows that only tie auxiliaries together are
tagged ``plumbing``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .. import vc_catalog as vcs
from ..feasibility import HourContext, Mode, candidate_paths, placement_options
from ..phys_models import edge_static_us, pp_infra_wh, port_power_w, transmission_delay_us
from ..scenario_io import Scenario
from ..vc_catalog import VC, Segment, Unit
from .model import LinExpr, MilpModel, Sense, VarKind

DEFAULT_MAX_VARS = 250_000


@dataclass(frozen=True)
class Product:
    """z = x * y over binary-valued x, y."""

    z: int
    x: int
    y: int
    family: str


@dataclass(frozen=True)
class BigM:
    """eps = n * q, with q an affine expression bounded by [0, m]."""

    eps: int
    n: int
    q: LinExpr
    m: float
    node: int


def _pname(pair) -> str:
    return f"g{pair[0]}_{pair[1].value}"


def _fname(flow) -> str:
    pair, seg = flow
    return f"{_pname(pair)}_{seg.value}"


def worst_case_energy(scen: Scenario) -> float:
    """Upper bound on the energy any single node or switch can draw; sums all of them."""
    topo, c = scen.topology, scen.constants
    T = c.period_h
    total = 0.0
    for n in topo.pp_nodes:
        total += n.cpus * (c.w_full - c.w_idle) * T + pp_infra_wh(n, T, c)
    for w in topo.switches:
        ports = sum(port_power_w(topo.edge(e).capacity_gbps, c) for _, e in topo.neighbors(w.id))
        total += (c.w_chassis + w.linecards * c.w_linecard + ports + c.sw_infra_w) * T
    return total


def build(scen: Scenario, mode: Mode | str = Mode.ENERGY, hour: int = 0, k_paths: int | None = None,
          max_vars: int | None = DEFAULT_MAX_VARS) -> MilpModel:
    mode = Mode(mode)
    topo, consts = scen.topology, scen.constants
    ctx = HourContext(scen, hour)
    k_paths = scen.k_paths if k_paths is None else k_paths
    m = MilpModel(name=f"{scen.name}_h{hour}", mode=mode, max_vars=max_vars)
    T = consts.period_h

    static = {e.id: edge_static_us(e, consts) for e in topo.edges}
    dtr = {e.id: transmission_delay_us(consts.frame_bytes, e.capacity_gbps) for e in topo.edges}

    vc_var = {}
    unit_var = {}  # (pair, k, unit, node) -> var
    path_var = {}  # (pair, k, seg, src, dst, z) -> var
    path_of = {}  # var id -> (pair, seg, edge tuple, src)
    units_at = defaultdict(list)  # node -> [(var, gops)]
    act_rows = defaultdict(list)  # (pair, unit, node) -> [var]

    # --- VNF placement ------------------------------------------------------------
    for pair in scen.pairs:
        gnb, sl = pair
        cell = scen.gnb(gnb).cell_node
        pn = _pname(pair)
        for k in VC:
            x = m.binary(f"VC_{pn}_k{int(k)}")
            vc_var[(pair, k)] = x
        m.add_row(LinExpr.sum(vc_var[(pair, k)] for k in VC), Sense.EQ, 1, "vnf_1")

        for k in VC:
            x = vc_var[(pair, k)]
            opts = placement_options(scen, gnb, k)
            cus = sorted({a for a, _ in opts})
            dus = sorted({b for _, b in opts})
            ru = m.binary(f"RU_{pn}_k{int(k)}_v{cell}")
            unit_var[(pair, k, Unit.RU, cell)] = ru
            for v in dus:
                unit_var[(pair, k, Unit.DU, v)] = m.binary(f"DU_{pn}_k{int(k)}_v{v}")
            for v in cus:
                unit_var[(pair, k, Unit.CU, v)] = m.binary(f"CU_{pn}_k{int(k)}_v{v}")
            m.add_row(ru - x, Sense.EQ, 0, "vnf_2")
            m.add_row(LinExpr.sum(unit_var[(pair, k, Unit.DU, v)] for v in dus) - x, Sense.EQ, 0, "vnf_3")
            m.add_row(LinExpr.sum(unit_var[(pair, k, Unit.CU, v)] for v in cus) - x, Sense.EQ, 0, "vnf_4")

            hosts = sorted({cell} | set(cus) | set(dus))

            def at(unit, v):
                return unit_var.get((pair, k, unit, v))

            for v in hosts:
                if k in vcs.DUAL_SPLIT:
                    terms = [t for t in (at(Unit.RU, v), at(Unit.DU, v), at(Unit.CU, v)) if t is not None]
                    m.add_row(LinExpr.sum(terms), Sense.LE, 1, "vnf_5")
                elif k in vcs.SINGLE_HIGH:
                    terms = [t for t in (at(Unit.RU, v), at(Unit.CU, v)) if t is not None]
                    m.add_row(LinExpr.sum(terms), Sense.LE, 1, "vnf_6")
                else:
                    terms = [t for t in (at(Unit.RU, v), at(Unit.DU, v)) if t is not None]
                    m.add_row(LinExpr.sum(terms), Sense.LE, 1, "vnf_9")
            if k in vcs.SINGLE_HIGH and at(Unit.DU, cell) is not None:
                m.add_row(at(Unit.DU, cell) - at(Unit.RU, cell), Sense.LE, 0, "vnf_7")
            if k in vcs.SINGLE_LOW:
                for v in cus:
                    du = at(Unit.DU, v)
                    m.add_row(at(Unit.CU, v) - (du if du is not None else 0.0), Sense.LE, 0, "vnf_10")

            for unit in Unit:
                g = ctx.unit_gops(pair, k, unit)
                for v in {Unit.RU: [cell], Unit.DU: dus, Unit.CU: cus}[unit]:
                    var = unit_var[(pair, k, unit, v)]
                    units_at[v].append((var, g))
                    act_rows[(pair, unit, v)].append(var)

        m.add_row(LinExpr.sum(unit_var[(pair, k, u, cell)] for k in VC if k in vcs.SINGLE_HIGH
                              for u in (Unit.DU, Unit.RU) if (pair, k, u, cell) in unit_var), Sense.LE, 2, "vnf_8")
        sl_terms = [var for (p, k, u, v), var in unit_var.items()
                    if p == pair and k in vcs.SINGLE_LOW and u in (Unit.CU, Unit.DU)]
        m.add_row(LinExpr.sum(sl_terms), Sense.LE, 2, "vnf_11")

    # --- routing ---------------------------------------------------------------------
    pk_var = {}  # (pair, k, seg, e) -> var
    p_var = {}  # (pair, seg, e) -> var
    flow_paths = defaultdict(list)  # (pair, seg) -> [(var, path)]
    for pair in scen.pairs:
        gnb, _ = pair
        cell = scen.gnb(gnb).cell_node
        pn = _pname(pair)
        for k in VC:
            segs = vcs.segments(k)
            opts = placement_options(scen, gnb, k)
            for seg in (Segment.MH, Segment.FH):
                if seg not in segs:
                    continue
                ends = sorted(set(opts)) if seg is Segment.MH else sorted({(b, cell) for _, b in opts})
                prefix = "CD" if seg is Segment.MH else "DR"
                vars_here = []
                for a, b in ends:
                    for z, path in enumerate(candidate_paths(scen, a, b, k_paths)):
                        v = m.binary(f"{prefix}_{pn}_k{int(k)}_a{a}_b{b}_z{z}")
                        path_var[(pair, k, seg, a, b, z)] = v
                        path_of[v.id] = (pair, seg, path, a)
                        vars_here.append((v, a, b, path))
                        flow_paths[(pair, seg)].append((v, path))
                        src_unit, dst_unit = (Unit.CU, Unit.DU) if seg is Segment.MH else (Unit.DU, Unit.RU)
                        tag = "rot_02" if seg is Segment.MH else "rot_03"
                        m.add_row(v - unit_var[(pair, k, src_unit, a)], Sense.LE, 0, tag)
                        m.add_row(v - unit_var[(pair, k, dst_unit, b)], Sense.LE, 0, tag)
                m.add_row(LinExpr.sum(v for v, *_ in vars_here) - vc_var[(pair, k)], Sense.EQ, 0, "rot_01")
                if seg is Segment.MH:
                    for a in sorted({a for a, _ in ends}):
                        m.add_row(LinExpr.sum(v for v, aa, _, _ in vars_here if aa == a)
                                  - unit_var[(pair, k, Unit.CU, a)], Sense.GE, 0, "rot_06")
                    for b in sorted({b for _, b in ends}):
                        m.add_row(LinExpr.sum(v for v, _, bb, _ in vars_here if bb == b)
                                  - unit_var[(pair, k, Unit.DU, b)], Sense.GE, 0, "rot_07")
                else:
                    for b in sorted({b for b, _ in ends}):
                        m.add_row(LinExpr.sum(v for v, bb, _, _ in vars_here if bb == b)
                                  - unit_var[(pair, k, Unit.DU, b)], Sense.GE, 0, "rot_08")
                    m.add_row(LinExpr.sum(v for v, *_ in vars_here)
                              - unit_var[(pair, k, Unit.RU, cell)], Sense.GE, 0, "rot_09")
                by_edge = defaultdict(list)
                for v, _, _, path in vars_here:
                    for e in path:
                        by_edge[e].append(v)
                for e in sorted(by_edge):
                    pk = m.add_var(f"Pk_{seg.value}_{pn}_k{int(k)}_e{e}", lb=0, ub=1)
                    pk_var[(pair, k, seg, e)] = pk
                    m.add_row(pk - LinExpr.sum(by_edge[e]), Sense.EQ, 0,
                              "rot_10" if seg is Segment.MH else "rot_11")
        for seg in (Segment.MH, Segment.FH):
            kv = [(kk, e, v) for (p, kk, s, e), v in pk_var.items() if p == pair and s is seg]
            seg_vcs = [k for k in VC if seg in vcs.segments(k)]
            tag = "rot_04" if seg is Segment.MH else "rot_05"
            m.add_row(LinExpr.sum(v for (p, k, s, *_), v in path_var.items() if p == pair and s is seg)
                      - LinExpr.sum(vc_var[(pair, k)] for k in seg_vcs), Sense.EQ, 0, tag)
            for e in sorted({e for _, e, _ in kv}):
                pv = m.add_var(f"P_{seg.value}_{pn}_e{e}", lb=0, ub=1)
                p_var[(pair, seg, e)] = pv
                m.add_row(pv - LinExpr.sum(v for _, ee, v in kv if ee == e), Sense.EQ, 0,
                          "lat_04" if seg is Segment.FH else "lat_05")

    # --- link capacity ------------------------------------------------------------------
    for e in topo.edges:
        loads = {}
        for seg, tag in ((Segment.FH, "link_1"), (Segment.MH, "link_2")):
            lv = m.add_var(f"L_{seg.value}_e{e.id}", lb=0)
            expr = LinExpr.of(lv)
            for (pair, k, s, ee), pk in pk_var.items():
                if s is seg and ee == e.id:
                    expr.add(pk, -ctx.segment_mbps(pair, k, seg))
            m.add_row(expr, Sense.EQ, 0, tag)
            loads[seg] = lv
        tot = m.add_var(f"L_e{e.id}", lb=0)
        m.add_row(tot - loads[Segment.FH] - loads[Segment.MH], Sense.EQ, 0, "link_3")
        m.add_row(LinExpr.of(tot), Sense.LE, e.capacity_gbps * 1e3, "link_4")

    # --- computing -------------------------------------------------------------------------
    app = {}
    pp_load = {}
    for v in sorted(units_at):
        node = topo.node(v)
        a = m.binary(f"APP_v{v}")
        app[v] = a
        load = m.add_var(f"PP_v{v}", lb=0)
        pp_load[v] = load
        expr = LinExpr.of(load)
        for var, g in units_at[v]:
            expr.add(var, -g)
        m.add_row(expr, Sense.EQ, 0, "comp_1")
        m.add_row(load - node.capacity_gops * a, Sense.LE, 0, "comp_2")
        m.add_row(a - LinExpr.sum(var for var, _ in units_at[v]), Sense.LE, 0, "plumbing")
    for (pair, unit, v), vars_ in sorted(act_rows.items(), key=lambda kv: (kv[0][0][0], kv[0][0][1].value,
                                                                          kv[0][1].value, kv[0][2])):
        tag = {Unit.CU: "comp_3", Unit.DU: "comp_4", Unit.RU: "comp_5"}[unit]
        m.add_row(LinExpr.sum(vars_) - app[v], Sense.LE, 0, tag)

    # --- switch and port activation ---------------------------------------------------------
    switch_ids = {w.id for w in topo.switches}
    visits = defaultdict(list)  # switch -> [(pair, seg, var)]
    for vid, (pair, seg, path, src) in path_of.items():
        for w in topo.path_nodes(path, src)[1:-1]:
            if w in switch_ids:
                visits[w].append((pair, seg, m.variables[vid]))
    asw = {}
    for w in sorted(visits):
        a = m.binary(f"ASW_v{w}")
        asw[w] = a
        groups = defaultdict(list)
        for pair, seg, var in visits[w]:
            groups[(pair[0], pair[1].value, seg.value)].append(var)
        for key in sorted(groups):
            m.add_row(LinExpr.sum(groups[key]) - a, Sense.LE, 0, "enr_2")
        m.add_row(a - LinExpr.sum(var for *_, var in visits[w]), Sense.LE, 0, "plumbing")
    edge_on = {}
    for w in sorted(asw):
        for _, e in topo.neighbors(w):
            if e in edge_on:
                continue
            users = [pv for (pair, seg, ee), pv in p_var.items() if ee == e]
            if not users:
                continue
            ae = m.add_var(f"A_e{e}", lb=0, ub=1)
            edge_on[e] = ae
            for pv in users:
                m.add_row(ae - pv, Sense.GE, 0, "plumbing")
            m.add_row(ae - LinExpr.sum(users), Sense.LE, 0, "plumbing")

    # --- energy objective with Big-M ----------------------------------------------------------
    big_m = worst_case_energy(scen)
    bigms = []
    energy = LinExpr()

    def bigm(name, n, q, node):
        eps = m.add_var(name, lb=0, ub=big_m)
        m.add_row(eps - big_m * n, Sense.LE, 0, "l-1", f"l-1.{eps.name}")
        m.add_row(eps - q, Sense.LE, 0, "l-2", f"l-2.{eps.name}")
        m.add_row(eps - q - big_m * n, Sense.GE, -big_m, "l-3", f"l-3.{eps.name}")
        m.add_row(LinExpr.of(eps), Sense.GE, 0, "l-4", f"l-4.{eps.name}")
        bigms.append(BigM(eps.id, n.id, q, big_m, node))
        energy.add(eps)

    for v in sorted(app):
        node = topo.node(v)
        q = LinExpr.of(pp_load[v], node.cpus * (consts.w_full - consts.w_idle) * T / node.capacity_gops)
        q.add(pp_infra_wh(node, T, consts))
        bigm(f"y_v{v}", app[v], q, v)
    for w in sorted(asw):
        q = LinExpr(constant=(consts.w_chassis + topo.node(w).linecards * consts.w_linecard + consts.sw_infra_w) * T)
        for _, e in topo.neighbors(w):
            if e in edge_on:
                q.add(edge_on[e], port_power_w(topo.edge(e).capacity_gbps, consts) * T)
        bigm(f"z_v{w}", asw[w], q, w)

    # --- latency ----------------------------------------------------------------------------------
    products: list[Product] = []

    def product(name, x, y, family):
        z = m.add_var(name, lb=0, ub=1)
        # the row names keep the constraint family the product belongs to
        m.add_row(z - x, Sense.LE, 0, "pl-2", f"{family}.pl-2.{name}")
        m.add_row(z - y, Sense.LE, 0, "pl-3", f"{family}.pl-3.{name}")
        m.add_row(z - x - y, Sense.GE, -1, "pl-4", f"{family}.pl-4.{name}")
        products.append(Product(z.id, x.id, y.id, family))
        return z

    flows = [(pair, seg) for pair in scen.pairs for seg in (Segment.MH, Segment.FH) if flow_paths[(pair, seg)]]
    on_edge = defaultdict(list)
    for f in flows:
        for e in sorted({e for _, path in flow_paths[f] for e in path}):
            on_edge[e].append(f)

    # products of co-resident flows, one per ordered pair for mixed classes
    prod = {}
    for e in sorted(on_edge):
        fl = on_edge[e]
        for i, f in enumerate(fl):
            for g in fl[i + 1:]:
                x, y = p_var[(f[0], f[1], e)], p_var[(g[0], g[1], e)]
                if f[1] is g[1]:
                    fam = "lat_06" if f[1] is Segment.FH else "lat_08"
                    z = product(f"m_{_fname(f)}_{_fname(g)}_e{e}", x, y, fam)
                    prod[(f, g, e)] = prod[(g, f, e)] = z
                else:
                    fh, mh = (f, g) if f[1] is Segment.FH else (g, f)
                    xf, xm = p_var[(fh[0], fh[1], e)], p_var[(mh[0], mh[1], e)]
                    prod[(fh, mh, e)] = product(f"m_{_fname(fh)}_{_fname(mh)}_e{e}", xf, xm, "lat_07")
                    prod[(mh, fh, e)] = product(f"m_{_fname(mh)}_{_fname(fh)}_e{e}", xm, xf, "lat_09")

    aux = {}

    def aux_var(name, terms, tag):
        if name not in aux:
            v = m.add_var(name, lb=0, ub=1)
            m.add_row(v - LinExpr.sum(terms), Sense.EQ, 0, tag)
            aux[name] = v
        return aux[name]

    dyn = {f: LinExpr() for f in flows}
    for e in sorted(on_edge):
        fl = on_edge[e]
        d = dtr[e]
        for f in fl:
            others = [g for g in fl if g != f]
            if not others:
                continue
            is_fh = f[1] is Segment.FH
            fam_q, fam_sq = ("lat_10", "lat_11") if is_fh else ("lat_12", "lat_13")
            same = [g for g in others if g[1] is f[1]]
            if same:
                # other same-class flows, minus those entering through our previous edge
                count = LinExpr.sum(prod[(f, g, e)] for g in same)
                prevs = sorted({path[i - 1] for _, path in flow_paths[f]
                                for i in range(1, len(path)) if path[i] == e})
                for ep in prevs:
                    sharers = [g for g in same if _both(flow_paths[g], e, ep)]
                    if not sharers:
                        continue
                    ev = aux_var(f"E_{_fname(f)}_e{e}_p{ep}",
                                 [v for v, path in flow_paths[f] if _precedes(path, ep, e)], fam_sq)
                    for g in sharers:
                        gv = aux_var(f"G_{_fname(g)}_e{e}_p{ep}",
                                     [v for v, path in flow_paths[g] if e in path and ep in path], fam_sq)
                        count.add(product(f"s_{_fname(f)}_{_fname(g)}_e{e}_p{ep}", ev, gv, fam_sq), -1.0)
                sq = m.add_var(f"SQ_{_fname(f)}_e{e}", lb=0)
                m.add_row(sq - d * count, Sense.EQ, 0, fam_sq)
                dyn[f].add(sq)
            if is_fh:
                cross = [prod[(f, g, e)] for g in others if g[1] is Segment.MH]
                if not cross:
                    continue
                # one lower-priority frame at most: OR over the co-resident midhaul flows
                bv = m.add_var(f"b_{_fname(f)}_e{e}", lb=0, ub=1)
                for z in cross:
                    m.add_row(bv - z, Sense.GE, 0, "plumbing")
                m.add_row(bv - LinExpr.sum(cross), Sense.LE, 0, "plumbing")
                q = m.add_var(f"Q_{_fname(f)}_e{e}", lb=0)
                m.add_row(q - d * bv, Sense.EQ, 0, fam_q)
            else:
                q = m.add_var(f"Q_{_fname(f)}_e{e}", lb=0)
                m.add_row(q - d * LinExpr.sum(prod[(f, g, e)] for g in others), Sense.EQ, 0, fam_q)
            dyn[f].add(q)

    lat_fh = {}
    b = scen.bounds
    for pair in scen.pairs:
        pn = _pname(pair)
        seg_total = {}
        for seg, st_tag, dyn_tag, tot_tag in ((Segment.FH, "lat_01", "lat_15", "lat_17"),
                                              (Segment.MH, "lat_02", "lat_14", "lat_16")):
            ls = m.add_var(f"LS_{seg.value}_{pn}", lb=0)
            expr = LinExpr.of(ls)
            for (p, s, e), pv in p_var.items():
                if p == pair and s is seg:
                    expr.add(pv, -static[e])
            m.add_row(expr, Sense.EQ, 0, st_tag)
            ld = m.add_var(f"LD_{seg.value}_{pn}", lb=0)
            f = (pair, seg)
            m.add_row(ld - (dyn[f] if f in dyn else LinExpr()), Sense.EQ, 0, dyn_tag)
            lt = m.add_var(f"LAT_{seg.value}_{pn}", lb=0)
            m.add_row(lt - ls - ld, Sense.EQ, 0, tot_tag)
            seg_total[seg] = (ls, lt)
        ls_tot = m.add_var(f"LS_{pn}", lb=0)
        m.add_row(ls_tot - seg_total[Segment.FH][0] - seg_total[Segment.MH][0], Sense.EQ, 0, "lat_03")
        lat = m.add_var(f"LAT_{pn}", lb=0)
        m.add_row(lat - seg_total[Segment.FH][1] - seg_total[Segment.MH][1], Sense.EQ, 0, "lat_18")
        m.add_row(LinExpr.of(lat), Sense.LE, b.slice_us[pair[1]], "lat_19")
        m.add_row(LinExpr.of(seg_total[Segment.MH][1]), Sense.LE, b.mh_us, "lat_20")
        m.add_row(LinExpr.of(seg_total[Segment.FH][1]), Sense.LE, b.fh_us, "lat_21")
        lat_fh[pair] = seg_total[Segment.FH][1]

    fh_sum = LinExpr.sum(lat_fh[p] for p in scen.pairs)
    m.objective = fh_sum.copy() if mode is Mode.FH_LATENCY else energy.copy()
    m.metadata.update(
        scenario=scen,
        hour=hour,
        k_paths=k_paths,
        big_m=big_m,
        bigm=bigms,
        products=products,
        energy=energy,
        fh_latency=fh_sum,
        vc_var={key: v.id for key, v in vc_var.items()},
        unit_var={key: v.id for key, v in unit_var.items()},
        path_var={key: v.id for key, v in path_var.items()},
        path_of=path_of,
    )
    return m


def _both(paths, e1, e2) -> bool:
    return any(e1 in path and e2 in path for _, path in paths)


def _precedes(path, first, second) -> bool:
    for i in range(1, len(path)):
        if path[i] == second and path[i - 1] == first:
            return True
    return False
