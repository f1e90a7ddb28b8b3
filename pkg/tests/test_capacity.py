import math

import pytest

from ngpon import capacity, model, reference, routing

G = 1e9


def bounds_for(top, spec, mode=capacity.EMPTY_CARRIER):
    tm = model.generate_traffic(top, spec)
    probs = routing.traversal_probs(top, tm.t, tm.t_awg)
    return capacity.constraint_bounds(top, tm, probs, mode), tm


class TestChannelLoads:
    def test_no_tdm_onus_zero_load(self):
        top = reference.metro4_topology()
        tm = model.generate_traffic(top, model.TrafficSpec(sigma=1.0))
        probs = routing.traversal_probs(top, tm.t, tm.t_awg)
        loads = capacity.channel_loads(top, tm, probs)
        assert all(v == 0 for v in loads.lam_tdm_up.values())
        assert all(v == 0 for v in loads.lam_tdm_down.values())

    def test_wdm_load_meets_bound_with_equality(self):
        """Scaled to the WDM limit, the upstream WDM load equals (W+1)C."""
        top = reference.metro4_topology()
        tm = model.generate_traffic(top, model.TrafficSpec(sigma=1.0))
        probs = routing.traversal_probs(top, tm.t, tm.t_awg)
        rep = capacity.constraint_bounds(top, tm, probs)
        tm_at = tm.scaled_to_rt(rep.bound("wdm_up[0]"))
        loads = capacity.channel_loads(top, tm_at, probs)
        assert loads.lam_wdm_up[0] == pytest.approx(9 * G, rel=1e-12)

    def test_awg_zero_without_channels(self):
        top = reference.metro4_topology(n_wdm=24, n_lr=8, awg=False)
        tm = model.generate_traffic(top, model.TrafficSpec(sigma=1.0))
        probs = routing.traversal_probs(top, tm.t, tm.t_awg)
        loads = capacity.channel_loads(top, tm, probs)
        assert loads.lam_awg == {}


class TestConstraintBounds:
    def test_metro_uniform_headline_numbers(self):
        top = reference.metro4_topology()
        rep, _ = bounds_for(top, model.TrafficSpec(sigma=1.0),
                            capacity.REFLECTION)
        assert rep.bound("wdm_up[0]") == pytest.approx(28.40625 * G, rel=1e-12)
        assert rep.bound("wdm_down[0]") == pytest.approx(28.40625 * G, rel=1e-12)
        assert rep.bottleneck == "wdm_up[0]"
        assert rep.max_rt == pytest.approx(28.40625 * G, rel=1e-12)

    def test_homogeneity(self):
        top = reference.metro4_topology()
        rep1, tm = bounds_for(top, model.TrafficSpec(sigma=1.0))
        tm2 = tm.scaled(7.5)
        probs = routing.traversal_probs(top, tm2.t, tm2.t_awg)
        rep2 = capacity.constraint_bounds(top, tm2, probs,
                                          capacity.EMPTY_CARRIER)
        for (c1, b1), (c2, b2) in zip(rep1.bounds, rep2.bounds):
            assert c1 == c2
            if math.isfinite(b1):
                assert b1 == pytest.approx(b2, rel=1e-12)

    def test_monotone_in_capacity(self):
        spec = model.TrafficSpec(sigma=1.0)
        rep_lo, _ = bounds_for(reference.ring12_topology(16, 8, 8), spec)
        big = model.build_topology(
            p=4, h=1, n_r=12, n_tdm=16, n_wdm=8, n_lr=8, c_tdm=2 * G,
            c_wdm=2 * G, w=1, c_awg=G, c_psc=G, c_rpr=G, awg_channels=1)
        rep_hi, _ = bounds_for(big, spec)
        for (c1, b1), (c2, b2) in zip(rep_lo.bounds, rep_hi.bounds):
            if math.isfinite(b1):
                assert b2 >= b1 - 1e-6

    def test_more_wavelengths_raise_wdm_bound(self):
        spec = model.TrafficSpec(sigma=1.0)
        r1, _ = bounds_for(reference.metro4_topology(w=4), spec)
        r2, _ = bounds_for(reference.metro4_topology(w=8), spec)
        assert r2.bound("wdm_up[0]") > r1.bound("wdm_up[0]")

    def test_empty_carrier_is_half_of_reflection_when_symmetric(self):
        top = reference.metro4_topology()
        rep, _ = bounds_for(top, model.TrafficSpec(sigma=1.0))
        assert rep.bound("wdm_empty[0]") == pytest.approx(
            rep.bound("wdm_up[0]") / 2, rel=1e-12)

    def test_zero_capacity_with_load_is_infeasible(self):
        top = model.build_topology(p=4, h=1, n_r=4, n_wdm=24, n_lr=8,
                                   c_tdm=G, c_wdm=G, w=8, c_psc=10 * G,
                                   c_rpr=10 * G, c_awg=10 * G,
                                   awg_channels=[[0, 1, 1, 1], [1, 0, 1, 1],
                                                 [1, 1, 0, 1], [1, 1, 1, 0]])
        # same-CO LR pairs keep their traffic on the tree; cross pairs use
        # the AWG, all constraints finite and positive
        rep, _ = bounds_for(top, model.TrafficSpec(sigma=1.0))
        assert not rep.infeasible
        assert all(b > 0 for _, b in rep.bounds)

    def test_tie_break_order_documented(self):
        # constraints are listed tree-up, tree-down, empty, PSC, AWG,
        # per-ONU; the bottleneck is the first constraint achieving the min
        top = reference.ring12_topology(16, 8, 8)
        rep, _ = bounds_for(top, model.TrafficSpec(sigma=1.0))
        ids = [cid for cid, _ in rep.bounds]
        order = {"tdm_up": 0, "wdm_up": 0, "tdm_down": 1, "wdm_down": 1,
                 "wdm_empty": 2, "psc": 3, "awg": 4, "onu_up": 5,
                 "onu_awg": 5}
        ranks = [order[cid.split("[")[0]] for cid in ids]
        assert ranks == sorted(ranks)
        first_min = next(cid for cid, b in rep.bounds if b == rep.max_rt)
        assert rep.bottleneck == first_min


class TestOracleEquivalence:
    """The engine on generated matrices reproduces every closed form that is
    itself consistent with the traffic model (1e-9 relative)."""

    def test_uniform_family(self):
        for col, (nt, nw, nl) in reference.A_COLUMNS.items():
            top, spec, cf = reference.table_scenario("A", col)
            rep, _ = bounds_for(top, spec)
            for key, val in cf.items():
                if not math.isfinite(val):
                    continue
                eng = reference.engine_bound_for(rep, key)
                assert eng == pytest.approx(val, rel=1e-9), (col, key)

    def test_nonuniform_src_family_consistent_rows(self):
        top, spec, cf = reference.table_scenario("B", "upgraded")
        rep, _ = bounds_for(top, spec)
        for key in ("tdm_up", "wdm_up", "tdm_down", "wdm_down", "awg"):
            eng = reference.engine_bound_for(rep, key)
            assert eng == pytest.approx(cf[key], rel=1e-9), key

    def test_nonuniform_src_dst_family_consistent_rows(self):
        top, spec, cf = reference.table_scenario("C", "beta075")
        rep, _ = bounds_for(top, spec)
        for key in ("tdm_up", "wdm_up", "tdm_down", "wdm_empty", "psc"):
            eng = reference.engine_bound_for(rep, key)
            assert eng == pytest.approx(cf[key], rel=1e-9), key


class TestClosedFormFamilies:
    def test_metro_psc_closed_form(self):
        cf = capacity.closed_form_bounds(
            "uniform", n_tdm=0, n_wdm=32, n_lr=0, w=8, c=G, c_psc=10 * G,
            c_awg=10 * G, ring_gap=1)
        assert cf["psc"] == pytest.approx(31.5625 * G, rel=1e-12)
        assert cf["wdm_up"] == pytest.approx(28.40625 * G, rel=1e-12)

    def test_alpha_family_single_gap(self):
        vals = {1.0: 28.40625, 2.0: 28.6875, 4.0: 28.636364}
        for alpha, expect in vals.items():
            cf = capacity.wide_area_alpha_bounds(
                n_low=16, n_med=8, n_high=8, alpha=alpha, w=8, c=G,
                c_psc=10 * G, c_awg=10 * G)
            assert cf["wdm_up"] == pytest.approx(expect * G, rel=1e-6)

    def test_alpha_family_downstream(self):
        vals = {1.0: 28.40625, 2.0: 28.40346, 4.0: 28.40397}
        for alpha, expect in vals.items():
            cf = capacity.wide_area_alpha_bounds(
                n_low=16, n_med=8, n_high=8, alpha=alpha, w=8, c=G,
                c_psc=10 * G, c_awg=10 * G)
            assert cf["wdm_down"] == pytest.approx(expect * G, rel=1e-5)

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            capacity.closed_form_bounds("nope")
