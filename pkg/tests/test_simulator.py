import math

import numpy as np
import pytest

from ngpon import capacity, delay, model, reference, routing
from ngpon.simulator import (EMPTY_CARRIER, SimConfig, run_epon_tree,
                             run_gpon_tree, run_mg1_reference, run_network)

G = 1e9
LENGTHS = model.PacketLengthDist.uniform_bytes()


def tree(n=32, c=G, tau=100e-6):
    return model.build_topology(p=1, h=0, n_r=0, n_tdm=n, c_tdm=c, w=0,
                                tau_tree=tau)


def loaded(top, rt, spec=None):
    tm = model.generate_traffic(top, spec or model.TrafficSpec(sigma=1.0))
    return tm.scaled_to_rt(rt)


class TestMg1Reference:
    def test_wait_matches_pk_formula(self):
        rho = 0.5
        lam = rho * G / LENGTHS.mean_bits
        stats = run_mg1_reference(lam, LENGTHS, G,
                                  SimConfig(seed=42, replications=6),
                                  n_packets=150_000)
        phi = delay.mg1_wait(rho, G, LENGTHS)
        assert abs(stats.mean_delay["wait"] - phi) <= 3 * stats.ci_halfwidth["wait"] + 2e-8

    def test_deterministic_service(self):
        d = model.PacketLengthDist.deterministic(8000)
        rho = 0.5
        lam = rho * G / 8000
        stats = run_mg1_reference(lam, d, G, SimConfig(seed=9, replications=6),
                                  n_packets=150_000)
        assert stats.mean_delay["wait"] == pytest.approx(4e-6, rel=0.03)

    def test_identical_seed_identical_stats(self):
        cfg = SimConfig(seed=5, replications=5)
        a = run_mg1_reference(1e4, LENGTHS, G, cfg, n_packets=20_000)
        b = run_mg1_reference(1e4, LENGTHS, G, cfg, n_packets=20_000)
        assert a.mean_delay == b.mean_delay
        assert a.ci_halfwidth == b.ci_halfwidth


class TestEponTree:
    def test_near_zero_load_matches_four_tau(self):
        top = tree()
        tm = loaded(top, 2e5)  # ~30 packets/s across the PON
        stats = run_epon_tree(top, tm, SimConfig(seed=2, warmup_s=0.5,
                                                 duration_s=4.0,
                                                 replications=5))
        expect = 4 * 100e-6 + 6328 / G
        assert stats.mean_delay["tdm_up"] == pytest.approx(expect, rel=0.04)

    def test_mid_load_within_analysis_band(self):
        top = tree()
        tm = loaded(top, 0.5 * G)
        probs = routing.traversal_probs(top, tm.t, tm.t_awg)
        _, ana_up, _ = delay.epon_tdm_delays(top, tm, probs, 0)
        stats = run_epon_tree(top, tm, SimConfig(seed=2, warmup_s=0.1,
                                                 duration_s=0.4,
                                                 replications=5))
        assert stats.mean_delay["tdm_up"] == pytest.approx(ana_up, rel=0.15)

    def test_determinism(self):
        top = tree(n=8)
        tm = loaded(top, 0.3 * G)
        cfg = SimConfig(seed=77, warmup_s=0.02, duration_s=0.1, replications=5)
        a = run_epon_tree(top, tm, cfg)
        b = run_epon_tree(top, tm, cfg)
        assert a.mean_delay == b.mean_delay
        assert a.throughput_bps == b.throughput_bps

    def test_packet_conservation_and_audit(self):
        top = tree(n=8)
        tm = loaded(top, 0.4 * G)
        stats = run_epon_tree(top, tm, SimConfig(seed=3, warmup_s=0.02,
                                                 duration_s=0.1,
                                                 replications=2), audit=True)
        assert stats.delivered == stats.generated  # fully drained
        assert math.isnan(stats.ci_halfwidth["tdm_up"])  # < 5 replications

    def test_throughput_tracks_offered_load(self):
        top = tree(n=8)
        rt = 0.4 * G
        tm = loaded(top, rt)
        stats = run_epon_tree(top, tm, SimConfig(seed=3, warmup_s=0.05,
                                                 duration_s=0.3,
                                                 replications=5))
        assert stats.throughput_bps == pytest.approx(rt, rel=0.05)


class TestGponTree:
    def test_near_zero_load_chain(self):
        top = model.build_topology(p=1, h=0, n_r=0, n_tdm=32, c_tdm=1.25e9,
                                   w=0, tau_tree=100e-6)
        tm = loaded(top, 2e5)
        stats = run_gpon_tree(top, tm, SimConfig(seed=4, warmup_s=0.5,
                                                 duration_s=4.0,
                                                 replications=5))
        expect = 312.5e-6 + 50e-6 + 300e-6 + 6328 / 1.25e9
        assert stats.mean_delay["tdm_up"] == pytest.approx(expect, rel=0.03)

    def test_gpon_slower_than_epon_at_low_load(self):
        top_e = tree()
        top_g = model.build_topology(p=1, h=0, n_r=0, n_tdm=32, c_tdm=1.25e9,
                                     w=0, tau_tree=100e-6)
        cfg = SimConfig(seed=5, warmup_s=0.2, duration_s=1.0, replications=5)
        e = run_epon_tree(top_e, loaded(top_e, 5e6), cfg)
        g = run_gpon_tree(top_g, loaded(top_g, 5e6), cfg)
        assert g.mean_delay["tdm_up"] > e.mean_delay["tdm_up"]


class TestCarrierModes:
    def wdm_tree(self, tau=20e-6):
        return model.build_topology(p=1, h=0, n_r=0, n_tdm=0, n_wdm=8,
                                    c_tdm=G, c_wdm=G, w=2, tau_tree=tau)

    def test_empty_carrier_slower_than_reflection(self):
        top = self.wdm_tree()
        cfg = SimConfig(seed=6, warmup_s=0.05, duration_s=0.25, replications=5)
        for rt in (0.3e9, 0.8e9):
            tm = loaded(top, rt)
            refl = run_epon_tree(top, tm, cfg)
            empty = run_epon_tree(top, tm, cfg, carrier_mode=EMPTY_CARRIER)
            assert empty.mean_delay["wdm_up"] > refl.mean_delay["wdm_up"]
            assert empty.mean_delay["wdm_down"] > refl.mean_delay["wdm_down"]


class TestFullNetwork:
    def metro_tm(self, rt):
        top = reference.metro4_topology()
        tm = model.generate_traffic(top, model.TrafficSpec(sigma=1.0))
        return top, tm.scaled_to_rt(rt)

    def test_metro_run_is_stable_and_conserves(self):
        top, tm = self.metro_tm(8e9)
        cfg = SimConfig(seed=8, warmup_s=0.02, duration_s=0.08, replications=2)
        stats = run_network(top, tm, cfg, audit=True)
        assert stats.generated == stats.delivered
        assert stats.throughput_bps == pytest.approx(8e9, rel=0.05)
        for cls in ("wdm_up", "wdm_down", "psc", "ring", "end_to_end"):
            assert cls in stats.mean_delay

    def test_metro_delay_matches_analysis_moderate_load(self):
        top, tm = self.metro_tm(8e9)
        probs = routing.traversal_probs(top, tm.t, tm.t_awg)
        rep = delay.overall_delay(top, tm, probs)
        cfg = SimConfig(seed=9, warmup_s=0.05, duration_s=0.25, replications=5)
        stats = run_network(top, tm, cfg)
        assert stats.mean_delay["end_to_end"] == pytest.approx(rep.overall,
                                                               rel=0.20)

    def test_single_pon_network_equals_tree_run(self):
        top = tree(n=8)
        tm = loaded(top, 0.3 * G)
        cfg = SimConfig(seed=11, warmup_s=0.02, duration_s=0.1, replications=3)
        a = run_network(top, tm, cfg)
        b = run_epon_tree(top, tm, cfg)
        assert a.mean_delay == b.mean_delay

    def test_psc_zero_load_delay(self):
        # a single cross-CO packet stream at vanishing rate traverses
        # tree up + PSC + tree down
        top = reference.metro4_topology(n_wdm=4, w=2)
        tm = model.generate_traffic(top, model.TrafficSpec(sigma=1.0))
        tm = tm.scaled_to_rt(1e5)
        cfg = SimConfig(seed=13, warmup_s=1.0, duration_s=6.0, replications=5)
        stats = run_network(top, tm, cfg)
        probs = routing.traversal_probs(top, tm.t, tm.t_awg)
        expect = top.psc_frame / 2 + 2 * top.tau_psc + 6328 / top.c_psc
        assert stats.mean_delay["psc"] == pytest.approx(expect, rel=0.05)

    def test_saturation_throughput_near_wdm_bound(self):
        """Offered load beyond the bottleneck: delivered throughput settles
        at the 28.40625 Gb/s WDM limit (within 5%)."""
        top, tm = self.metro_tm(1.15 * 28.40625e9)
        cfg = SimConfig(seed=21, warmup_s=0.02, duration_s=0.05,
                        replications=3)
        stats = run_network(top, tm, cfg)
        assert stats.throughput_bps == pytest.approx(28.40625e9, rel=0.05)

    def test_awg_offload_raises_saturation_throughput(self):
        """Delivered throughput under overload grows with the share of
        traffic routed over the AWG."""
        top = model.build_topology(p=4, h=1, n_r=4, n_tdm=0, n_wdm=6, n_lr=2,
                                   c_tdm=G, c_wdm=G, w=2, c_psc=10 * G,
                                   c_rpr=10 * G, c_awg=10 * G, awg_channels=1)
        eta, eta_lh = top.eta, len(top.lr_and_hotspot_ids())
        beta_lo = (eta_lh - 1) / (eta - 1)
        cfg = SimConfig(seed=15, warmup_s=0.03, duration_s=0.12,
                        replications=3)
        tputs = []
        for beta in (beta_lo, 0.6, 1.0):
            spec = model.TrafficSpec(kind=model.NONUNIFORM_SRC_DST, sigma=1.0,
                                     alpha=2.0, beta=beta, n_low=3, n_med=2,
                                     n_high=3)
            tm = model.generate_traffic(top, spec)
            tm = tm.scaled_to_rt(12e9)  # far beyond the tree bound
            stats = run_network(top, tm, cfg)
            tputs.append(stats.throughput_bps)
        assert tputs[0] < tputs[1] < tputs[2]
