import heapq
import io
import math

import numpy as np
import pytest

from ngpon import model, routing

G = 1e9


def metro(n_r=4, n_tdm=0, n_wdm=32, n_lr=0, w=8, awg=0):
    return model.build_topology(p=4, h=1, n_r=n_r, n_tdm=n_tdm, n_wdm=n_wdm,
                                n_lr=n_lr, c_tdm=G, c_wdm=G, w=w, c_psc=10 * G,
                                c_rpr=10 * G, c_awg=10 * G, awg_channels=awg)


def min_hop_cost(top, a, b):
    """Independent oracle: Dijkstra over ring links + PSC CO-CO edges."""
    size = top.ring_size
    dist = {a: 0}
    heap = [(0, a)]
    while heap:
        d, u = heapq.heappop(heap)
        if u == b:
            return d
        if d > dist.get(u, math.inf):
            continue
        neigh = [(u + 1) % size, (u - 1) % size]
        if top.co_at_pos(u) >= 0:
            neigh += [top.pos_of_co(k) for k in range(top.p)
                      if top.pos_of_co(k) != u]
        for v in neigh:
            if d + 1 < dist.get(v, math.inf):
                dist[v] = d + 1
                heapq.heappush(heap, (d + 1, v))
    raise AssertionError("unreachable")


def path_cost(legs):
    return sum(1 for leg in legs if leg[0] in ("ring", "psc"))


class TestRoute:
    def test_adjacent_ring_nodes_single_hop(self):
        top = metro()
        r = top.ring_node_ids
        paths = routing.route(top, r[0], r[1])
        assert len(paths) == 1
        p, legs = paths[0]
        assert p == 1.0
        assert [l[0] for l in legs] == ["ring"] * path_cost(legs)

    def test_diametric_ring_nodes_split_half(self):
        # single-CO ring (no PSC shortcut): 8 positions, ring nodes 1..7;
        # positions 1 and 5 are diametrically opposite
        top = model.build_topology(p=1, h=0, n_r=7, n_tdm=4, c_tdm=G, w=0,
                                   ring_circumference_m=100e3)
        r1 = next(i for i in top.ring_node_ids if top.position_of(i) == 1)
        r5 = next(i for i in top.ring_node_ids if top.position_of(i) == 5)
        paths = routing.route(top, r1, r5)
        probs = sorted(p for p, _ in paths)
        assert probs == [0.5, 0.5]
        dirs = set()
        for _, legs in paths:
            ring = [l for l in legs if l[0] == "ring"]
            assert len(ring) == 4
            dirs.add((ring[0][2] - ring[0][1]) % top.ring_size)
        assert dirs == {1, top.ring_size - 1}

    def test_inter_co_onus_take_psc(self):
        top = metro()
        i = top.onus_of(0)[0]
        j = top.onus_of(1)[0]
        ((p, legs),) = routing.route(top, i, j)
        assert p == 1.0
        assert legs == (("tree_up", 0), ("psc", 0, 1), ("tree_down", 1))

    def test_intra_co_is_tree_only(self):
        top = metro()
        i, j = top.onus_of(0)[:2]
        ((p, legs),) = routing.route(top, i, j)
        assert legs == (("tree_up", 0), ("tree_down", 0))

    def test_no_self_routes(self):
        top = metro()
        with pytest.raises(routing.RoutingError):
            routing.route(top, top.onus_of(0)[0], top.onus_of(0)[0])

    def test_costs_match_dijkstra_for_co_destinations(self):
        """For CO-bound middles the policy is plain shortest path."""
        for n_r in (4, 12):
            top = metro(n_r=n_r)
            targets = [top.pos_of_co(k) for k in range(top.p)]
            sources = targets + [top.position_of(i) for i in top.ring_node_ids]
            router = routing._MiddleRouter(top)
            for a in sources:
                for b in targets:
                    if a == b:
                        continue
                    best = min_hop_cost(top, a, b)
                    for _, legs in router.paths(a, b):
                        assert path_cost(legs) == best

    def test_ring_destination_cost_never_beats_dijkstra(self):
        for n_r in (4, 12):
            top = metro(n_r=n_r)
            router = routing._MiddleRouter(top)
            positions = list(range(top.ring_size))
            ring_dests = [p for p in positions if top.co_at_pos(p) < 0]
            for a in positions:
                for b in ring_dests:
                    if a == b:
                        continue
                    best = min_hop_cost(top, a, b)
                    for _, legs in router.paths(a, b):
                        assert path_cost(legs) >= best


class TestTraversalProbs:
    def test_flow_conservation(self):
        top = metro(n_wdm=4)
        tm = model.generate_traffic(top, model.TrafficSpec(sigma=1.0))
        probs = routing.traversal_probs(top, tm.t, tm.t_awg)
        for (i, j), paths in probs.flow_items():
            assert sum(p for p, _ in paths) == pytest.approx(1.0, abs=1e-12)

    def test_symmetric_links_carry_equal_load(self):
        """Same-role tree links on a symmetric uniform topology."""
        top = metro()
        tm = model.generate_traffic(top, model.TrafficSpec(sigma=1.0))
        probs = routing.traversal_probs(top, tm.t, tm.t_awg)
        loads = probs.link_packet_rates(tm.t)
        ups = [loads[("tree_up", k)] for k in top.epon_cos]
        assert max(ups) - min(ups) < 1e-9

    def test_reference_psc_contribution_sums(self):
        """Home-channel loads reproduce the hand-derived enumerations.

        Four-ring-node metro: 2176 units of sigma*Lbar/(eta-1) toward a CO
        adjacent to the hotspot; twelve-ring-node variant: 2512 units.
        """
        cases = [(4, 0, 32, 2176.0), (12, 32, 0, 2512.0)]
        for n_r, n_tdm, n_wdm, expect in cases:
            top = metro(n_r=n_r, n_tdm=n_tdm, n_wdm=n_wdm,
                        w=8 if n_wdm else 1)
            tm = model.generate_traffic(top, model.TrafficSpec(sigma=1.0))
            probs = routing.traversal_probs(top, tm.t, tm.t_awg)
            lam = 0.0
            for (i, j), paths in probs.flow_items():
                rate = tm.t[i, j]
                for p, legs in paths:
                    lam += p * rate * sum(1 for leg in legs
                                          if leg[0] == "psc" and leg[2] == 0)
            units = lam * (top.eta - 1)
            assert units == pytest.approx(expect, rel=1e-12)

    def test_dump_csv_is_stable(self):
        top = metro(n_wdm=2)
        tm = model.generate_traffic(top, model.TrafficSpec(sigma=1.0))
        probs = routing.traversal_probs(top, tm.t, tm.t_awg)
        a, b = io.StringIO(), io.StringIO()
        probs.dump_csv(a)
        probs.dump_csv(b)
        assert a.getvalue() == b.getvalue()
        assert a.getvalue().startswith("i,j,link,probability\n")
