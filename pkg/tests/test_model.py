import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ngpon import model

G = 1e9


def metro_topology(**kw):
    args = dict(p=4, h=1, n_r=4, n_tdm=0, n_wdm=32, n_lr=0, c_tdm=G, c_wdm=G,
                w=8, c_psc=10 * G, c_rpr=10 * G, c_awg=10 * G, awg_channels=0)
    args.update(kw)
    return model.build_topology(**args)


class TestPacketLengths:
    def test_default_moments_are_exact(self):
        d = model.PacketLengthDist.uniform_bytes()
        assert d.mean_bits == 791 * 8 == 6328
        n = 1518 - 64 + 1
        assert d.var_bits == pytest.approx((n * n - 1) / 12 * 64, rel=1e-15)

    def test_sampler_range_and_moments(self):
        d = model.PacketLengthDist.uniform_bytes()
        rng = np.random.Generator(np.random.PCG64(0))
        bits = d.sample_bits(rng, 200_000)
        assert bits.min() >= 64 * 8 and bits.max() <= 1518 * 8
        assert np.all(bits % 8 == 0)
        assert bits.mean() == pytest.approx(d.mean_bits, rel=2e-3)
        assert bits.var() == pytest.approx(d.var_bits, rel=2e-2)

    def test_deterministic_dist(self):
        d = model.PacketLengthDist.deterministic(8000)
        assert d.var_bits == 0 and d.second_moment == 8000 ** 2


class TestTopology:
    def test_metro_counts(self):
        top = metro_topology()
        assert top.eta == 101
        assert len(top.epon_cos) == 3 and top.hotspot_cos == [3]

    def test_twelve_ring_nodes(self):
        top = metro_topology(n_r=12, n_tdm=32, n_wdm=0)
        assert top.eta == 109
        assert top.ring_size == 16
        # COs equally spaced, four positions apart
        assert [top.pos_of_co(k) for k in range(4)] == [0, 4, 8, 12]

    def test_single_isolated_tree(self):
        top = model.build_topology(p=1, h=0, n_r=0, n_tdm=8, c_tdm=G, w=0)
        assert top.eta == 8
        assert top.axis_positions() == ()

    def test_hotspot_carries_no_onus(self):
        with pytest.raises(model.ModelError):
            model.build_topology(p=2, h=1, n_r=2, n_tdm=[4, 4], c_tdm=G, w=0)

    def test_rejects_bad_offset(self):
        with pytest.raises(model.ModelError):
            metro_topology(gpon_omega=200e-6)

    def test_rejects_uneven_ring(self):
        with pytest.raises(model.ModelError):
            metro_topology(n_r=5)

    def test_node_numbering_is_deterministic(self):
        top = metro_topology(n_tdm=2, n_wdm=2, n_lr=2, n_r=4, awg_channels=1)
        a = [(n.ident, n.kind, n.co, n.onu_kind) for n in top.nodes]
        b = [(n.ident, n.kind, n.co, n.onu_kind)
             for n in metro_topology(n_tdm=2, n_wdm=2, n_lr=2, n_r=4,
                                     awg_channels=1).nodes]
        assert a == b
        onus = top.onus_of(0)
        kinds = [top.nodes[i].onu_kind for i in onus]
        assert kinds == ["tdm", "tdm", "wdm", "wdm", "lr", "lr"]


class TestTraffic:
    def test_uniform_rate_and_conservation(self):
        top = metro_topology()
        tm = model.generate_traffic(top, model.TrafficSpec(sigma=2.5))
        eta = top.eta
        # r_T = eta * sigma * Lbar
        assert tm.r_t == pytest.approx(eta * 2.5 * tm.lengths.mean_bits,
                                       rel=1e-12)

    def test_row_sum_identity_nonuniform(self):
        top = metro_topology(n_r=12, n_tdm=16, n_wdm=8, n_lr=8, w=1,
                             awg_channels=1)
        spec = model.TrafficSpec(kind=model.NONUNIFORM_SRC, sigma=1.0,
                                 alpha=2.0, n_low=16, n_med=8, n_high=8)
        tm = model.generate_traffic(top, spec)
        for k in top.epon_cos:
            onus = top.onus_of(k)
            rates = [tm.sigma_i[i] + tm.sigma_awg_i[i] for i in onus]
            assert rates[:16] == pytest.approx([0.5] * 16, rel=1e-12)
            assert rates[16:24] == pytest.approx([1.0] * 8, rel=1e-12)
            assert rates[24:] == pytest.approx([2.0] * 8, rel=1e-12)
        hotspot = top.hotspot_cos[0]
        assert tm.sigma_i[hotspot] + tm.sigma_awg_i[hotspot] == pytest.approx(2.0)

    def test_equivalent_medium_nodes(self):
        # eta_alpha = (P-H)(N_l/a + N_m + a N_h) + N_r + a H
        top = metro_topology(n_r=12, n_tdm=16, n_wdm=8, n_lr=8, w=1,
                             awg_channels=1)
        spec = model.TrafficSpec(kind=model.NONUNIFORM_SRC, sigma=1.0,
                                 alpha=2.0, n_low=16, n_med=8, n_high=8)
        tm = model.generate_traffic(top, spec)
        assert tm.r_t == pytest.approx(110 * tm.lengths.mean_bits, rel=1e-12)

    def test_awg_exclusivity(self):
        top = metro_topology(n_wdm=24, n_lr=8, awg_channels=1)
        tm = model.generate_traffic(top, model.TrafficSpec(sigma=1.0))
        assert not np.any((tm.t > 0) & (tm.t_awg > 0))
        assert not np.any(np.diag(tm.t)) and not np.any(np.diag(tm.t_awg))

    def test_awg_pairs_need_channels(self):
        top = metro_topology(n_wdm=24, n_lr=8, awg_channels=0)
        tm = model.generate_traffic(top, model.TrafficSpec(sigma=1.0))
        assert tm.t_awg.sum() == 0  # no channels, nothing rides the AWG

    def test_scaling_linearity(self):
        top = metro_topology()
        a = model.generate_traffic(top, model.TrafficSpec(sigma=1.0))
        b = model.generate_traffic(top, model.TrafficSpec(sigma=2.0))
        assert np.allclose(2 * a.t, b.t, rtol=1e-13, atol=0)

    def test_beta_lower_bound_recovers_uniform(self):
        top = metro_topology(n_wdm=24, n_lr=8, awg_channels=1)
        eta, eta_lh = top.eta, len(top.lr_and_hotspot_ids())
        beta0 = (eta_lh - 1) / (eta - 1)
        uni = model.generate_traffic(
            top, model.TrafficSpec(kind=model.NONUNIFORM_SRC, sigma=1.0,
                                   alpha=2.0, n_low=16, n_med=8, n_high=8))
        nud = model.generate_traffic(
            top, model.TrafficSpec(kind=model.NONUNIFORM_SRC_DST, sigma=1.0,
                                   alpha=2.0, beta=beta0, n_low=16, n_med=8,
                                   n_high=8))
        assert np.allclose(uni.t, nud.t, rtol=1e-12, atol=1e-15)
        assert np.allclose(uni.t_awg, nud.t_awg, rtol=1e-12, atol=1e-15)

    def test_beta_below_bound_rejected(self):
        top = metro_topology(n_wdm=24, n_lr=8, awg_channels=1)
        spec = model.TrafficSpec(kind=model.NONUNIFORM_SRC_DST, sigma=1.0,
                                 alpha=2.0, beta=0.1, n_low=16, n_med=8,
                                 n_high=8)
        with pytest.raises(model.ModelError):
            model.generate_traffic(top, spec)

    @given(st.floats(min_value=0.05, max_value=40.0))
    def test_rt_scales_with_sigma(self, sigma):
        top = model.build_topology(p=1, h=0, n_r=0, n_tdm=4, c_tdm=G, w=0)
        tm = model.generate_traffic(top, model.TrafficSpec(sigma=sigma))
        assert tm.r_t == pytest.approx(4 * sigma * tm.lengths.mean_bits,
                                       rel=1e-12)

    def test_group_rates_ignore_intra_co(self):
        top = metro_topology(n_wdm=4)
        tm = model.generate_traffic(top, model.TrafficSpec(sigma=1.0))
        groups = tm.sigma_groups()
        assert all(gi != gj for gi, gj in groups)
        co0_to_co1 = groups[(("co", 0), ("co", 1))]
        # 4 ONUs x 4 ONUs x sigma/(eta-1)
        assert co0_to_co1 == pytest.approx(16 / (top.eta - 1), rel=1e-12)

    def test_single_pair_group_rate(self):
        top = metro_topology(n_wdm=4)
        n = len(top.nodes)
        t = np.zeros((n, n))
        t[top.onus_of(0)[0], top.onus_of(1)[0]] = 3.5
        tm = model.from_raw_matrices(top, t)
        assert tm.sigma_groups() == {(("co", 0), ("co", 1)): 3.5}

    def test_raw_matrix_escape_hatch(self):
        top = model.build_topology(p=1, h=0, n_r=0, n_tdm=3, c_tdm=G, w=0)
        n = len(top.nodes)
        t = np.zeros((n, n))
        t[top.onu_ids[0], top.onu_ids[1]] = 5.0
        tm = model.from_raw_matrices(top, t)
        assert tm.r_t == pytest.approx(5.0 * tm.lengths.mean_bits)
        bad = t.copy()
        bad[top.onu_ids[0], top.onu_ids[0]] = 1.0
        with pytest.raises(model.ModelError):
            model.from_raw_matrices(top, bad)
