"""Analytical mean packet delays: M/G/1 waits with tandem-queue corrections,
EPON/GPON tree delays, WDM carrier-mode delays, ring/PSC/AWG delays, and the
traffic-weighted network-wide mean.

All waits come from the Pollaczek-Khinchine mean-wait formula; where a
channel is fed by queues upstream of it, the already-served share of the
wait is compensated with a Bux-Schlatter correction (subtracting the
feeders' own waits).  Corrections are approximate and may arithmetically
exceed the wait at corner cases; components are clamped at their
transmission-plus-propagation floor and flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (KIND_HOTSPOT, KIND_ONU, KIND_RING, ONU_LR, ONU_TDM,
                    ONU_WDM, PacketLengthDist, Topology, TrafficMatrices)
from .routing import LinkTraversalProbs

NO_PRIORITY = "no_priority"
GRANT_PRIORITY = "nonpreemptive_priority"


class UnstableLoadError(RuntimeError):
    """A channel load reached or exceeded its stability limit."""

    def __init__(self, constraint: str, rho: float):
        super().__init__(f"{constraint} unstable at rho={rho:.6g}")
        self.constraint = constraint
        self.rho = rho


def mg1_wait(rho: float, channel_bps: float, lengths: PacketLengthDist,
             constraint: str = "queue") -> float:
    """Mean M/G/1 queueing wait at relative load rho on a channel."""
    if rho < 0:
        raise ValueError("negative load")
    if rho >= 1:
        raise UnstableLoadError(constraint, rho)
    if rho == 0:
        return 0.0
    kappa = lengths.var_bits / lengths.mean_bits + lengths.mean_bits
    return rho * kappa / (2 * channel_bps * (1 - rho))


def mg1_wait_moments(pkt_rate: float, mean_bits: float, second_moment_bits: float,
                     channel_bps: float, constraint: str = "queue") -> float:
    """Mean wait from explicit service moments (bits on a bit/s server)."""
    rho = pkt_rate * mean_bits / channel_bps
    if rho >= 1:
        raise UnstableLoadError(constraint, rho)
    if pkt_rate == 0:
        return 0.0
    return pkt_rate * second_moment_bits / channel_bps ** 2 / (2 * (1 - rho))


def switchover_prob(lam1: float, lam2: float) -> float:
    """Probability that consecutive arrivals of two merged Poisson streams
    alternate streams: 2*l1*l2/(l1+l2)^2, in [0, 1/2]."""
    if lam1 < 0 or lam2 < 0:
        raise ValueError("rates must be nonnegative")
    if lam1 + lam2 == 0:
        raise ValueError("at least one rate must be positive")
    return 2 * lam1 * lam2 / (lam1 + lam2) ** 2


# ---------------------------------------------------------------------------
# feeder corrections
# ---------------------------------------------------------------------------

def correction_term(feeder_loads, lengths: PacketLengthDist) -> float:
    """Sum of the feeders' own M/G/1 waits.

    ``feeder_loads`` is an iterable of (rho, channel_bps) pairs, each the
    feeder's load restricted to traffic leaving over the arc of interest.
    """
    total = 0.0
    for rho, cap in feeder_loads:
        total += mg1_wait(rho, cap, lengths, "feeder")
    return total


def _feeder_arcs_into_co(topology: Topology, k: int):
    """(link, channel_bps) for every arc feeding CO k's electronics."""
    pos = topology.pos_of_co(k)
    size = topology.ring_size
    arcs = []
    if size > 1:
        for d in (1, -1):
            prev = (pos - d) % size
            arcs.append((("ring", prev, pos), topology.c_rpr))
    for l in range(topology.p):
        if l != k:
            arcs.append((("psc", l, k), topology.c_psc))
    return arcs


def tree_down_correction(topology: Topology, tm: TrafficMatrices,
                         probs: LinkTraversalProbs, k: int,
                         onu_kinds=(ONU_TDM,)) -> float:
    """Bux-Schlatter correction for CO k's downstream channel toward the
    given ONU classes: ring feeders from the two adjacent positions plus
    PSC feeders from the other COs."""
    dests = set()
    for kind in onu_kinds:
        dests.update(topology.onus_of(k, kind))
    if not dests:
        return 0.0
    lbar = tm.lengths.mean_bits
    feeders = []
    for link, cap in _feeder_arcs_into_co(topology, k):
        rate = probs.restricted_link_rate(tm.t, link, dest_filter=dests)
        feeders.append((rate * lbar / cap, cap))
    return correction_term(feeders, tm.lengths)


def psc_correction(topology: Topology, tm: TrafficMatrices,
                   probs: LinkTraversalProbs, l: int) -> float:
    """Correction for the home channel of CO l: per feeding CO k, the ring
    arcs into k, the TDM tree, and the WDM tree, each restricted to traffic
    continuing over the PSC hop (k, l)."""
    lbar = tm.lengths.mean_bits
    size = topology.ring_size
    total = 0.0
    for k in range(topology.p):
        if k == l:
            continue
        hop = ("psc", k, l)
        pos = topology.pos_of_co(k)
        feeders = []
        if size > 1:
            for d in (1, -1):
                prev = (pos - d) % size
                rate = probs.restricted_link_rate(
                    tm.t, ("ring", prev, pos), then_link=hop)
                feeders.append((rate * lbar / topology.c_rpr, topology.c_rpr))
        if not topology.is_hotspot(k):
            tdm_src = set(topology.onus_of(k, ONU_TDM))
            wdm_src = set(topology.onus_of(k, ONU_WDM) + topology.onus_of(k, ONU_LR))
            rate_t = probs.restricted_link_rate(tm.t, hop, src_filter=tdm_src)
            rate_w = probs.restricted_link_rate(tm.t, hop, src_filter=wdm_src)
            feeders.append((rate_t * lbar / topology.c_tdm, topology.c_tdm))
            feeders.append((rate_w * lbar / topology.c_wdm, topology.c_wdm))
        total += correction_term(feeders, tm.lengths)
    return total


# ---------------------------------------------------------------------------
# per-channel loads needed by the delay formulas
# ---------------------------------------------------------------------------

def _tree_loads(topology: Topology, tm: TrafficMatrices):
    lbar = tm.lengths.mean_bits
    lam_tu, lam_wu, lam_td, lam_wd = {}, {}, {}, {}
    for k in topology.epon_cos:
        tdm = topology.onus_of(k, ONU_TDM)
        wdm = topology.onus_of(k, ONU_WDM) + topology.onus_of(k, ONU_LR)
        lam_tu[k] = lbar * float(sum(tm.sigma_i[i] for i in tdm))
        lam_wu[k] = lbar * float(sum(tm.sigma_i[i] for i in wdm))
        lam_td[k] = lbar * float(tm.t[:, tdm].sum()) if tdm else 0.0
        lam_wd[k] = lbar * float(tm.t[:, wdm].sum()) if wdm else 0.0
    return lam_tu, lam_wu, lam_td, lam_wd


def _grant_wait(rho_td: float, c_tdm: float, lengths: PacketLengthDist,
                policy: str) -> float:
    if policy == GRANT_PRIORITY:
        return rho_td * lengths.mean_bits / (2 * c_tdm)
    return mg1_wait(rho_td, c_tdm, lengths, "tdm_down")


# ---------------------------------------------------------------------------
# EPON / GPON tree delays
# ---------------------------------------------------------------------------

def epon_tdm_delays(topology: Topology, tm: TrafficMatrices,
                    probs: LinkTraversalProbs, k: int,
                    policy: str = GRANT_PRIORITY):
    """(downstream, upstream) mean delay on CO k's TDM channel pair."""
    lam_tu, _, lam_td, _ = _tree_loads(topology, tm)
    lengths, tau = tm.lengths, topology.tau_tree
    c = topology.c_tdm
    rho_u, rho_d = lam_tu[k] / c, lam_td[k] / c
    tx = lengths.mean_bits / c
    b = tree_down_correction(topology, tm, probs, k, (ONU_TDM,))
    wait_down = mg1_wait(rho_d, c, lengths, f"tdm_down[{k}]") - b
    clamped = wait_down < 0
    down = max(wait_down, 0.0) + tau + tx
    up = (4 * tau + mg1_wait(rho_u, c, lengths, f"tdm_up[{k}]") + tx
          + _grant_wait(rho_d, c, lengths, policy))
    return down, up, clamped


def wdm_delays_reflection(topology: Topology, tm: TrafficMatrices,
                          probs: LinkTraversalProbs, k: int,
                          policy: str = GRANT_PRIORITY):
    """(downstream, upstream) on CO k's WDM channels with signal reflection;
    the W channels are approximated by one server of rate W*C_W."""
    _, lam_wu, lam_td, lam_wd = _tree_loads(topology, tm)
    lengths, tau = tm.lengths, topology.tau_tree
    agg = topology.w * topology.c_wdm
    if agg <= 0:
        raise UnstableLoadError(f"wdm[{k}]", math.inf)
    rho_d = lam_wd[k] / agg
    rho_u = lam_wu[k] / agg
    rho_td = lam_td[k] / topology.c_tdm
    b = tree_down_correction(topology, tm, probs, k, (ONU_WDM, ONU_LR))
    tx_t = lengths.mean_bits / topology.c_tdm
    wait_down = mg1_wait(rho_d, agg, lengths, f"wdm_down[{k}]") - b
    clamped = wait_down < 0
    down = max(wait_down, 0.0) + tau + tx_t
    up = (3 * tau + _grant_wait(rho_td, topology.c_tdm, lengths, policy)
          + mg1_wait(rho_u, agg, lengths, f"wdm_up[{k}]")
          + tau + lengths.mean_bits / topology.c_wdm)
    return down, up, clamped


def empty_carrier_moments(lam_down: float, lam_up: float, topology: Topology,
                          lengths: PacketLengthDist):
    """Packet-length moments extended by the switchover dead time.

    Each transmission is preceded by a direction switchover with probability
    p_s, costing one tree propagation time, i.e. C_W * tau extra bits of
    service on the shared channel.
    """
    if lam_down + lam_up == 0:
        return lengths.mean_bits, lengths.second_moment, 0.0
    p_s = switchover_prob(lam_down, lam_up)
    extra = topology.c_wdm * topology.tau_tree
    mean = lengths.mean_bits + p_s * extra
    m2 = lengths.second_moment + 2 * lengths.mean_bits * p_s * extra + p_s * extra ** 2
    return mean, m2, p_s


def wdm_delays_empty(topology: Topology, tm: TrafficMatrices,
                     probs: LinkTraversalProbs, k: int,
                     policy: str = GRANT_PRIORITY):
    """(downstream, upstream) with empty-carrier upstream: up and down share
    one virtual queue over the W channels, packets stretched by switchovers."""
    _, lam_wu, lam_td, lam_wd = _tree_loads(topology, tm)
    lengths, tau = tm.lengths, topology.tau_tree
    agg = topology.w * topology.c_wdm
    if agg <= 0:
        raise UnstableLoadError(f"wdm[{k}]", math.inf)
    mean, m2, _ = empty_carrier_moments(lam_wd[k], lam_wu[k], topology, lengths)
    pkt_rate = (lam_wd[k] + lam_wu[k]) / lengths.mean_bits
    wait = mg1_wait_moments(pkt_rate, mean, m2, agg, f"wdm_empty[{k}]")
    b = tree_down_correction(topology, tm, probs, k, (ONU_WDM, ONU_LR))
    tx_t = lengths.mean_bits / topology.c_tdm
    down_wait = wait - b
    clamped = down_wait < 0
    down = max(down_wait, 0.0) + tau + tx_t
    rho_td = lam_td[k] / topology.c_tdm
    up = tau + _grant_wait(rho_td, topology.c_tdm, lengths, policy) + 2 * tau + down
    return down, up, clamped


def gpon_gammas(tau: float, omega: float, delta: float):
    """Waits to the next downstream frame carrying the grant map (gamma1)
    and to the next upstream frame after the grant returns (gamma2)."""
    if not (0 <= omega < delta):
        raise ValueError("need 0 <= omega < delta")
    g1 = (math.floor((tau - omega) / delta) + 1) * delta - (tau - omega)
    g2 = (math.floor((tau + omega) / delta) + 1) * delta - (tau + omega)
    return g1, g2


def gpon_optimal_offset(tau: float, delta: float) -> float:
    """Offset minimizing gamma1 + gamma2 (midpoint of the optimal band)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    frac = tau / delta - math.floor(tau / delta)
    if frac < 1 - frac:
        return (frac + (1 - frac)) / 2 * delta   # any omega in (frac, 1-frac)
    return (1 - frac) / 2 * delta                # any omega in [0, 1-frac)


def gpon_delays(topology: Topology, tm: TrafficMatrices,
                probs: LinkTraversalProbs, k: int):
    """GPON frame-based delays: (tdm_down, tdm_up, wdm_down, wdm_up)."""
    lam_tu, lam_wu, lam_td, lam_wd = _tree_loads(topology, tm)
    lengths, tau = tm.lengths, topology.tau_tree
    delta, omega = topology.gpon_delta, topology.gpon_omega
    g1, g2 = gpon_gammas(tau, omega, delta)
    c = topology.c_tdm
    tx = lengths.mean_bits / c
    rho_u, rho_d = lam_tu[k] / c, lam_td[k] / c
    up_fixed = 5 * delta / 2 + g1 + g2 + 3 * tau + tx
    tdm_up = up_fixed + mg1_wait(rho_u, c, lengths, f"tdm_up[{k}]")
    b_t = tree_down_correction(topology, tm, probs, k, (ONU_TDM,))
    wait_d = mg1_wait(rho_d, c, lengths, f"tdm_down[{k}]") - b_t
    clamped = wait_d < 0
    tdm_down = delta / 2 + max(wait_d, 0.0) + tau + tx
    wdm_up = wdm_down = math.nan
    if topology.w > 0:
        agg = topology.w * topology.c_wdm
        wdm_up = up_fixed + mg1_wait(lam_wu[k] / agg, agg, lengths, f"wdm_up[{k}]")
        b_w = tree_down_correction(topology, tm, probs, k, (ONU_WDM, ONU_LR))
        wait_wd = mg1_wait(lam_wd[k] / agg, agg, lengths, f"wdm_down[{k}]") - b_w
        clamped = clamped or wait_wd < 0
        wdm_down = delta / 2 + max(wait_wd, 0.0) + tau + tx
    return tdm_down, tdm_up, wdm_down, wdm_up, clamped


def gpon_empty_delays(topology: Topology, tm: TrafficMatrices,
                      probs: LinkTraversalProbs, k: int):
    """Empty-carrier WDM delays under GPON framing (shared virtual queue with
    switchover-stretched packets behind the frame-synchronous report cycle)."""
    _, lam_wu, _, lam_wd = _tree_loads(topology, tm)
    lengths, tau = tm.lengths, topology.tau_tree
    delta, omega = topology.gpon_delta, topology.gpon_omega
    g1, g2 = gpon_gammas(tau, omega, delta)
    agg = topology.w * topology.c_wdm
    mean, m2, _ = empty_carrier_moments(lam_wd[k], lam_wu[k], topology, lengths)
    pkt_rate = (lam_wd[k] + lam_wu[k]) / lengths.mean_bits
    wait = mg1_wait_moments(pkt_rate, mean, m2, agg, f"wdm_empty[{k}]")
    b = tree_down_correction(topology, tm, probs, k, (ONU_WDM, ONU_LR))
    tx = lengths.mean_bits / topology.c_tdm
    down_wait = wait - b
    down = delta / 2 + max(down_wait, 0.0) + tau + tx
    up = 5 * delta / 2 + g1 + g2 + 3 * tau + max(wait, 0.0) + tx
    return down, up, down_wait < 0


# ---------------------------------------------------------------------------
# metro segment delays
# ---------------------------------------------------------------------------

def psc_delay(topology: Topology, tm: TrafficMatrices,
              probs: LinkTraversalProbs, l: int):
    """Mean delay through the PSC onto the home channel(s) of CO l."""
    lbar = tm.lengths.mean_bits
    lam = 0.0
    for (i, j), paths in probs.flow_items():
        r = tm.t[i, j]
        if r == 0:
            continue
        for p, legs in paths:
            lam += p * r * lbar * sum(1 for leg in legs
                                      if leg[0] == "psc" and leg[2] == l)
    cap = topology.home_channels[l] * topology.c_psc
    rho = lam / cap
    wait = mg1_wait(rho, cap, tm.lengths, f"psc[{l}]")
    b = psc_correction(topology, tm, probs, l)
    fixed = (topology.psc_frame / 2 + 2 * topology.tau_psc
             + lbar / topology.c_psc)
    net = wait - b
    return fixed + max(net, 0.0), net < 0


def _ring_link_loads(topology: Topology, tm: TrafficMatrices,
                     probs: LinkTraversalProbs):
    lbar = tm.lengths.mean_bits
    loads: dict = {}
    for (i, j), paths in probs.flow_items():
        r = tm.t[i, j]
        if r == 0:
            continue
        for p, legs in paths:
            for leg in legs:
                if leg[0] == "ring":
                    loads[leg] = loads.get(leg, 0.0) + p * r * lbar
    return loads


def _ring_link_correction(topology: Topology, tm: TrafficMatrices,
                          probs: LinkTraversalProbs, link) -> float:
    """Feeders into the link's upstream node restricted to flows continuing
    over the link: the two incoming ring arcs, plus PSC and tree arrivals
    when that node is a CO."""
    _, u, v = link
    lbar = tm.lengths.mean_bits
    size = topology.ring_size
    feeders = []
    for d in (1, -1):
        prev = (u - d) % size
        if prev == v:
            continue
        rate = probs.restricted_link_rate(tm.t, ("ring", prev, u), then_link=link)
        feeders.append((rate * lbar / topology.c_rpr, topology.c_rpr))
    k = topology.co_at_pos(u)
    if k >= 0:
        for l in range(topology.p):
            if l == k:
                continue
            rate = probs.restricted_link_rate(tm.t, ("psc", l, k), then_link=link)
            feeders.append((rate * lbar / topology.c_psc, topology.c_psc))
        if not topology.is_hotspot(k):
            rate = probs.restricted_link_rate(tm.t, ("tree_up", k), then_link=link)
            feeders.append((rate * lbar / topology.c_tdm, topology.c_tdm))
    return correction_term(feeders, tm.lengths)


class MetroDelays:
    """Caches per-link and per-channel metro delay components."""

    def __init__(self, topology: Topology, tm: TrafficMatrices,
                 probs: LinkTraversalProbs):
        self.top = topology
        self.tm = tm
        self.probs = probs
        self.ring_loads = _ring_link_loads(topology, tm, probs)
        self._ring_cache: dict = {}
        self._psc_cache: dict = {}
        self.clamped = set()

    def ring_link_delay(self, link) -> float:
        if link in self._ring_cache:
            return self._ring_cache[link]
        lam = self.ring_loads.get(link, 0.0)
        rho = lam / self.top.c_rpr
        wait = mg1_wait(rho, self.top.c_rpr, self.tm.lengths,
                        f"ring[{link[1]}->{link[2]}]")
        b = _ring_link_correction(self.top, self.tm, self.probs, link)
        net = wait - b
        if net < 0:
            self.clamped.add(link)
        d = (max(net, 0.0) + self.tm.lengths.mean_bits / self.top.c_rpr
             + self.top.ring_hop_delay)
        self._ring_cache[link] = d
        return d

    def psc_channel_delay(self, l: int) -> float:
        if l not in self._psc_cache:
            d, clamped = psc_delay(self.top, self.tm, self.probs, l)
            if clamped:
                self.clamped.add(("psc", l))
            self._psc_cache[l] = d
        return self._psc_cache[l]

    def middle_delay(self, i: int, j: int) -> float:
        """Expected ring+PSC delay for flow (i, j) over its path mix."""
        total = 0.0
        for p, legs in self.probs.flows[(i, j)]:
            d = 0.0
            for leg in legs:
                if leg[0] == "ring":
                    d += self.ring_link_delay(leg)
                elif leg[0] == "psc":
                    d += self.psc_channel_delay(leg[2])
            total += p * d
        return total


def ring_delay(topology: Topology, tm: TrafficMatrices,
               probs: LinkTraversalProbs, i: int, j: int) -> float:
    """Mean ring/PSC delay from traffic node i to traffic node j (the legs
    between the source CO/ring position and the destination CO/ring
    position; zero for intra-CO pairs)."""
    return MetroDelays(topology, tm, probs).middle_delay(i, j)


def awg_delay(topology: Topology, tm: TrafficMatrices, k: int, l: int,
              policy: str = GRANT_PRIORITY) -> float:
    """Mean delay over the AWG channels from CO k to CO l.

    The report/grant preamble applies to LR ONUs behind an EPON; a hotspot
    CO transmits on its AWG wavelengths directly.
    """
    lbar = tm.lengths.mean_bits
    lh = topology.lr_and_hotspot_ids()
    lam = lbar * float(sum(
        tm.t_awg[i, j] for i in lh for j in lh
        if topology.co_of_traffic_node(i) == k and topology.co_of_traffic_node(j) == l))
    c_kl = topology.awg_c(k, l)
    if c_kl == 0:
        if lam > 0:
            raise UnstableLoadError(f"awg[{k},{l}]", math.inf)
        return math.nan
    rho = lam / (c_kl * topology.c_awg)
    wait = mg1_wait(rho, c_kl * topology.c_awg, tm.lengths, f"awg[{k},{l}]")
    base = wait + topology.tau_awg + lbar / topology.c_awg
    if topology.is_hotspot(k):
        return base
    _, _, lam_td, _ = _tree_loads(topology, tm)
    rho_td = lam_td[k] / topology.c_tdm
    return (3 * topology.tau_tree
            + _grant_wait(rho_td, topology.c_tdm, tm.lengths, policy) + base)


def awg_delay_avg(topology: Topology, tm: TrafficMatrices,
                  policy: str = GRANT_PRIORITY) -> float:
    """Traffic-weighted mean AWG delay over all CO pairs."""
    lbar = tm.lengths.mean_bits
    lh = topology.lr_and_hotspot_ids()
    lam_kl: dict = {}
    for i in lh:
        ki = topology.co_of_traffic_node(i)
        for j in lh:
            if tm.t_awg[i, j] > 0:
                kj = topology.co_of_traffic_node(j)
                lam_kl[(ki, kj)] = lam_kl.get((ki, kj), 0.0) + lbar * tm.t_awg[i, j]
    total = sum(lam_kl.values())
    if total == 0:
        raise ValueError("no AWG traffic to average over")
    return sum(awg_delay(topology, tm, k, l, policy) * lam / total
               for (k, l), lam in lam_kl.items())


# ---------------------------------------------------------------------------
# overall network delay
# ---------------------------------------------------------------------------

@dataclass
class DelayReport:
    protocol: str
    carrier_mode: str
    tdm_down: dict
    tdm_up: dict
    wdm_down: dict
    wdm_up: dict
    psc: dict
    awg_mean: float
    ring_psc_mean: float        # weighted over T traffic
    overall: float
    clamped: list = field(default_factory=list)

    def class_means(self) -> dict:
        out = {}
        for name, per_co in (("tdm_down", self.tdm_down), ("tdm_up", self.tdm_up),
                             ("wdm_down", self.wdm_down), ("wdm_up", self.wdm_up)):
            vals = [v for v in per_co.values() if not math.isnan(v)]
            if vals:
                out[name] = sum(vals) / len(vals)
        if not math.isnan(self.awg_mean):
            out["awg"] = self.awg_mean
        out["overall"] = self.overall
        return out


def overall_delay(topology: Topology, tm: TrafficMatrices,
                  probs: LinkTraversalProbs, protocol: str = "epon",
                  carrier_mode: str = "reflection",
                  policy: str = GRANT_PRIORITY) -> DelayReport:
    """Traffic-weighted mean delay over every path class.

    Per flow, the delay composes the source tree upstream delay (by ONU
    class), the ring/PSC middle, and the destination tree downstream delay;
    AWG flows take the single-hop AWG delay.  The overall mean weighs the
    two matrices by their packet rates.
    """
    lengths = tm.lengths
    tdm_down, tdm_up, wdm_down, wdm_up = {}, {}, {}, {}
    clamped = []
    for k in topology.epon_cos:
        if protocol == "gpon":
            if carrier_mode == "empty_carrier" and topology.w > 0:
                td, tu, _, _, cl1 = gpon_delays(topology, tm, probs, k)
                wd, wu, cl2 = gpon_empty_delays(topology, tm, probs, k)
                cl = cl1 or cl2
            else:
                td, tu, wd, wu, cl = gpon_delays(topology, tm, probs, k)
        else:
            td, tu, cl = epon_tdm_delays(topology, tm, probs, k, policy)
            wd = wu = math.nan
            if topology.w > 0 and (topology.n_wdm[k] + topology.n_lr[k]):
                if carrier_mode == "empty_carrier":
                    wd, wu, cl2 = wdm_delays_empty(topology, tm, probs, k, policy)
                else:
                    wd, wu, cl2 = wdm_delays_reflection(topology, tm, probs, k, policy)
                cl = cl or cl2
        tdm_down[k], tdm_up[k], wdm_down[k], wdm_up[k] = td, tu, wd, wu
        if cl:
            clamped.append(f"tree[{k}]")

    metro = MetroDelays(topology, tm, probs)

    def up_leg(i):
        n = topology.nodes[i]
        if n.kind != KIND_ONU:
            return 0.0
        return tdm_up[n.co] if n.onu_kind == ONU_TDM else wdm_up[n.co]

    def down_leg(j):
        n = topology.nodes[j]
        if n.kind != KIND_ONU:
            return 0.0
        return tdm_down[n.co] if n.onu_kind == ONU_TDM else wdm_down[n.co]

    total_rate = 0.0
    weighted = 0.0
    for (i, j), _paths in probs.flow_items():
        rate = tm.t[i, j]
        if rate == 0:
            continue
        d = up_leg(i) + metro.middle_delay(i, j) + down_leg(j)
        weighted += rate * d
        total_rate += rate
    ring_psc_mean = weighted / total_rate if total_rate else math.nan

    awg_rate = float(tm.t_awg.sum())
    awg_mean = awg_delay_avg(topology, tm, policy) if awg_rate > 0 else math.nan

    if total_rate + awg_rate == 0:
        overall = math.nan
    elif awg_rate == 0:
        overall = ring_psc_mean
    elif total_rate == 0:
        overall = awg_mean
    else:
        overall = ((ring_psc_mean * total_rate + awg_mean * awg_rate)
                   / (total_rate + awg_rate))

    psc_delays = {l: metro.psc_channel_delay(l) for l in range(topology.p)}
    clamped.extend(sorted(str(c) for c in metro.clamped))

    return DelayReport(protocol, carrier_mode, tdm_down, tdm_up, wdm_down,
                       wdm_up, psc_delays, awg_mean, ring_psc_mean, overall,
                       clamped)
