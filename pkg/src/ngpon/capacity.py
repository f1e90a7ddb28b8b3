"""Stability constraints, per-channel loads, and throughput bounds.

Two independent routes to the same numbers:

* a general engine (``channel_loads`` + ``constraint_bounds``) that works on
  any generated traffic matrices and routed traversal probabilities, and
* closed forms (``closed_form_bounds``) for the reference scenario
  families, kept verbatim from the published derivations so the shipped
  reference tables reproduce exactly.

Loads scale linearly in the traffic, so each constraint yields an upper
bound on the aggregate throughput r_T; the smallest bound is the network
bottleneck.  Bounds are open upper limits: operating at the bound is
unstable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ONU_LR, ONU_TDM, ONU_WDM, Topology, TrafficMatrices
from .routing import LinkTraversalProbs

REFLECTION = "reflection"
EMPTY_CARRIER = "empty_carrier"


@dataclass
class LoadReport:
    """Average bit rates offered to each shared channel."""

    lam_tdm_up: dict        # k -> bit/s
    lam_wdm_up: dict
    lam_tdm_down: dict
    lam_wdm_down: dict
    lam_psc: dict           # l -> bit/s arriving on CO l's home channel(s)
    lam_awg: dict           # (k, l) -> bit/s
    onu_up: dict            # i -> bit/s on its tree upstream
    onu_awg: dict           # i -> bit/s on its AWG channels
    ring_links: dict = field(default_factory=dict)  # ("ring", u, v) -> bit/s


def channel_loads(topology: Topology, tm: TrafficMatrices,
                  probs: LinkTraversalProbs) -> LoadReport:
    lbar = tm.lengths.mean_bits
    t, ta = tm.t, tm.t_awg

    lam_tu, lam_wu, lam_td, lam_wd = {}, {}, {}, {}
    for k in topology.epon_cos:
        tdm = topology.onus_of(k, ONU_TDM)
        wdm = topology.onus_of(k, ONU_WDM) + topology.onus_of(k, ONU_LR)
        lam_tu[k] = lbar * float(sum(tm.sigma_i[i] for i in tdm))
        lam_wu[k] = lbar * float(sum(tm.sigma_i[i] for i in wdm))
        lam_td[k] = lbar * float(t[:, tdm].sum()) if tdm else 0.0
        lam_wd[k] = lbar * float(t[:, wdm].sum()) if wdm else 0.0

    lam_psc = {l: 0.0 for l in range(topology.p)}
    ring_links: dict = {}
    for (i, j), paths in probs.flow_items():
        rate = t[i, j]
        if rate == 0:
            continue
        for p, legs in paths:
            for leg in legs:
                if leg[0] == "psc":
                    lam_psc[leg[2]] += p * rate * lbar
                elif leg[0] == "ring":
                    ring_links[leg] = ring_links.get(leg, 0.0) + p * rate * lbar

    lam_awg: dict = {}
    lh = topology.lr_and_hotspot_ids()
    for i in lh:
        ki = topology.co_of_traffic_node(i)
        for j in lh:
            if ta[i, j] == 0:
                continue
            kj = topology.co_of_traffic_node(j)
            lam_awg[(ki, kj)] = lam_awg.get((ki, kj), 0.0) + lbar * float(ta[i, j])

    onu_up = {i: lbar * float(tm.sigma_i[i]) for i in topology.onu_ids}
    onu_awg = {i: lbar * float(tm.sigma_awg_i[i])
               for i in lh if tm.sigma_awg_i[i] > 0}
    return LoadReport(lam_tu, lam_wu, lam_td, lam_wd, lam_psc, lam_awg,
                      onu_up, onu_awg, ring_links)


@dataclass
class CapacityReport:
    bounds: list            # ordered [(constraint_id, r_T bound [bit/s])]
    max_rt: float
    bottleneck: str
    onu_feasible: bool      # per-ONU limits hold for the given matrices
    infeasible: list = field(default_factory=list)

    def bound(self, constraint_id: str) -> float:
        for cid, b in self.bounds:
            if cid == constraint_id:
                return b
        raise KeyError(constraint_id)


def constraint_bounds(topology: Topology, tm: TrafficMatrices,
                      probs: LinkTraversalProbs,
                      carrier_mode: str = REFLECTION) -> CapacityReport:
    """Upper bound on r_T from every stability constraint.

    The supplied matrices fix only the traffic *shape*; bounds are invariant
    under scaling them.
    """
    loads = channel_loads(topology, tm, probs)
    rt = tm.r_t
    bounds = []
    infeasible = []

    def add(cid, load, cap):
        if load <= 0:
            bounds.append((cid, math.inf))
        elif cap <= 0:
            bounds.append((cid, 0.0))
            infeasible.append(cid)
        else:
            bounds.append((cid, rt * cap / load))

    top = topology
    for k in top.epon_cos:
        add(f"tdm_up[{k}]", loads.lam_tdm_up[k], top.c_tdm)
        # WDM/LR traffic may spill onto the TDM channel's leftover capacity
        add(f"wdm_up[{k}]", loads.lam_wdm_up[k] + loads.lam_tdm_up[k],
            top.c_tdm + top.w * top.c_wdm)
    for k in top.epon_cos:
        add(f"tdm_down[{k}]", loads.lam_tdm_down[k], top.c_tdm)
        add(f"wdm_down[{k}]", loads.lam_wdm_down[k] + loads.lam_tdm_down[k],
            top.c_tdm + top.w * top.c_wdm)
    if carrier_mode == EMPTY_CARRIER:
        for k in top.epon_cos:
            combined = (loads.lam_tdm_up[k] + loads.lam_wdm_up[k]
                        + loads.lam_tdm_down[k] + loads.lam_wdm_down[k])
            add(f"wdm_empty[{k}]", combined, top.c_tdm + top.w * top.c_wdm)
    for l in range(top.p):
        add(f"psc[{l}]", loads.lam_psc[l], top.home_channels[l] * top.c_psc)
    for (k, l) in sorted(loads.lam_awg):
        add(f"awg[{k},{l}]", loads.lam_awg[(k, l)], top.awg_c(k, l) * top.c_awg)

    onu_ok = True
    for i in top.onu_ids:
        cap = top.c_tdm if top.nodes[i].onu_kind == ONU_TDM else top.c_tdm + top.c_wdm
        if loads.onu_up[i] >= cap:
            onu_ok = False
        add(f"onu_up[{i}]", loads.onu_up[i], cap)
    for i, lam in sorted(loads.onu_awg.items()):
        if lam >= top.c_awg:
            onu_ok = False
        add(f"onu_awg[{i}]", lam, top.c_awg)

    finite = [(cid, b) for cid, b in bounds if b < math.inf]
    if not finite:
        return CapacityReport(bounds, math.inf, "none", onu_ok, infeasible)
    max_rt = min(b for _, b in finite)
    bottleneck = next(cid for cid, b in bounds if b == max_rt)
    return CapacityReport(bounds, max_rt, bottleneck, onu_ok, infeasible)


# ---------------------------------------------------------------------------
# Closed forms for the reference scenario families.
#
# ring_gap is the number of ring nodes between adjacent COs (1 for the
# four-node metro ring, 3 for the twelve-node variant); it selects the
# matching home-channel enumeration.  P = 4 COs with H = 1 hotspot
# throughout; capacities in bit/s.
# ---------------------------------------------------------------------------

UNIFORM_FAMILY = "uniform"
NONUNIFORM_SRC_FAMILY = "nonuniform_src"
NONUNIFORM_SRC_DST_FAMILY = "nonuniform_src_dst"


def _eta(p, h, n, n_r):
    return (p - h) * n + n_r + h


def closed_form_bounds(scenario: str, **kw) -> dict:
    if scenario == UNIFORM_FAMILY:
        return _uniform_bounds(**kw)
    if scenario == NONUNIFORM_SRC_FAMILY:
        return _nonuniform_src_bounds(**kw)
    if scenario == NONUNIFORM_SRC_DST_FAMILY:
        return _nonuniform_src_dst_bounds(**kw)
    raise ValueError(f"unknown scenario family {scenario!r}")


def _uniform_bounds(n_tdm, n_wdm, n_lr, w, c, c_psc, c_awg, awg_c=1,
                    p=4, h=1, ring_gap=3):
    n = n_tdm + n_wdm + n_lr
    n_r = p * ring_gap
    eta = _eta(p, h, n, n_r)
    eta_twr = (p - h) * (n_tdm + n_wdm) + n_r
    out = {}
    out["tdm_up"] = eta * c / n_tdm if n_tdm else math.inf
    wdm_denom = (eta - 1) * (n_tdm + n_wdm) + eta_twr * n_lr
    if n_wdm + n_lr:
        out["wdm_up"] = eta * (eta - 1) * (w + 1) * c / wdm_denom
        out["wdm_down"] = out["wdm_up"]
        out["wdm_empty"] = eta * (eta - 1) * (w + 1) * c / (2 * wdm_denom)
    out["tdm_down"] = out["tdm_up"]
    if ring_gap == 3:
        d = ((n + 3) * (n_tdm + n_wdm + 2) + (n + 2) * (n_tdm + n_wdm + 4)
             + n_lr * (2 * n_tdm + 2 * n_wdm + 5) + 2 * n + n_tdm + n_wdm + 2)
        out["psc"] = eta * (eta - 1) * c_psc / d
    elif ring_gap == 1:
        d = ((n_tdm + n_wdm) * (3 * n + 1) + n_lr * (3 * n_tdm + 3 * n_wdm + 1)
             + 2 * n + n_tdm + n_wdm)
        out["psc"] = eta * (eta - 1) * c_psc / d
    else:
        raise ValueError("closed PSC form available for ring_gap 1 or 3 only")
    if n_lr:
        out["awg"] = eta * (eta - 1) * awg_c * c_awg / n_lr ** 2
    return out


def _nonuniform_src_bounds(n_low, n_med, n_high, alpha, w, c, c_psc, c_awg,
                           awg_c=1, p=4, h=1, ring_gap=3, upgraded=True):
    n = n_low + n_med + n_high
    n_r = p * ring_gap
    eta = _eta(p, h, n, n_r)
    mix = n_low / alpha + n_med + alpha * n_high
    eta_a = (p - h) * mix + n_r + alpha * h
    out = {}
    if not upgraded:
        # every ONU still TDM
        out["tdm_up"] = eta_a * c / mix
        out["tdm_down"] = eta_a * (eta - 1) * c / (eta_a * n - mix)
        out["psc"] = eta_a * (eta - 1) * c_psc / (
            mix * (2 * n + 5) + 8 * n + 14 + alpha * (n + 2))
        return out
    # upgraded: low -> TDM, medium -> WDM, high -> LR
    eta_twr = (p - h) * (n_low + n_med) + n_r
    eta_twr_a = (p - h) * (n_low / alpha + n_med) + n_r
    out["tdm_up"] = eta_a * c / (n_low / alpha)
    out["wdm_up"] = eta_a * (eta - 1) * (w + 1) * c / (
        (eta - 1) * (n_low / alpha + n_med) + eta_twr * alpha * n_high)
    out["tdm_down"] = eta_a * (eta - 1) * c / ((n_low / alpha) * (alpha * eta_a - 1))
    out["wdm_down"] = eta_a * (eta - 1) * (w + 1) * c / (
        (alpha * eta_a - 1) * n_low / alpha + (eta_a - 1) * n_med
        + eta_twr_a * n_high)
    # published form; its n_low term is quadratic in the node counts
    out["wdm_empty"] = eta_a * (eta - 1) * (w + 1) * c / (
        eta_a * (eta - 1) * n_low + (eta_a + eta - 2) * n_med
        + (alpha * eta_twr + eta_twr_a) * n_high)
    out["psc"] = eta_a * (eta - 1) * c_psc / (
        (n + 3) * (n_low / alpha + n_med + 2)
        + (n + 2) * (n_low / alpha + n_med + 4)
        + alpha * n_high * (2 * n_low + 2 * n_med + 5)
        + 2 * n + n_low + n_med + 2)
    out["awg"] = eta_a * (eta - 1) * awg_c * c_awg / (alpha * n_high ** 2)
    return out


def _nonuniform_src_dst_bounds(n_low, n_med, n_high, alpha, beta, w, c,
                               c_psc, c_awg, awg_c=1, p=4, h=1, ring_gap=3):
    n = n_low + n_med + n_high
    n_r = p * ring_gap
    eta = _eta(p, h, n, n_r)
    mix = n_low / alpha + n_med + alpha * n_high
    eta_a = (p - h) * mix + n_r + alpha * h
    eta_lh = (p - h) * n_high + h
    eta_twr = (p - h) * (n_low + n_med) + n_r
    eta_twr_a = (p - h) * (n_low / alpha + n_med) + n_r
    out = {}
    out["tdm_up"] = eta_a * c / (n_low / alpha)
    out["wdm_up"] = eta_a * (w + 1) * c / (
        n_low / alpha + n_med + alpha * n_high * (1 - beta))
    out["tdm_down"] = eta_a * c / (n_low * (
        (eta_twr_a - 1 / alpha) / (eta - 1)
        + alpha * (1 - beta) * eta_lh / eta_twr))
    out["wdm_down"] = eta_a * (w + 1) * c / (
        (eta_twr_a - 1) * n_med / (eta - 1)
        + alpha * (1 - beta) * eta_lh * n_med / eta_twr
        + eta_twr_a * n_high / (eta - 1))
    out["wdm_empty"] = eta_a * (w + 1) * c / (
        n_low / alpha + n_med + alpha * (1 - beta) * n_high
        + n_low / (eta - 1) * (eta_twr_a - 1 / alpha)
        + n_med / (eta - 1) * (eta_twr_a - 1)
        + alpha * (1 - beta) * eta_lh / eta_twr * (n_low + n_med)
        + eta_twr_a * n_high / (eta - 1))
    out["psc"] = eta_a * c_psc / (
        ((n_low / alpha + n_med) * (2 * n + 5) + 8 * n + 14) / (eta - 1)
        + alpha * (1 - beta) / eta_twr
        * (n_high * (n_low + n_med + 3) + (n_high + 1) * (n_low + n_med + 2)))
    # published form divides by eta_LH rather than the eta_LH - 1 peers a
    # source actually spreads beta over
    out["awg"] = eta_a * eta_lh * awg_c * c_awg / (alpha * beta * n_high ** 2)
    return out


# -- closed forms specific to the four-ring-node metro scenarios -----------

def wide_area_alpha_bounds(n_low, n_med, n_high, alpha, w, c, c_psc, c_awg,
                           awg_c=1, p=4, h=1, with_awg=False):
    """Source-nonuniform limits for the one-ring-node-per-gap interconnect.

    ``with_awg=False``: all ONUs reach the metro over ring and PSC only.
    ``with_awg=True``: the high-rate ONUs are long-reach and offload their
    mutual traffic to the AWG.
    """
    n = n_low + n_med + n_high
    n_r = p
    eta = _eta(p, h, n, n_r)
    mix = n_low / alpha + n_med + alpha * n_high
    eta_a = (p - h) * mix + n_r + alpha * h
    out = {}
    if not with_awg:
        out["wdm_up"] = eta_a * (w + 1) * c / mix
        d = ((n - 1) * mix + n * ((p - h - 1) * mix + n_r + alpha * h))
        out["wdm_down"] = eta_a * (eta - 1) * (w + 1) * c / d
    else:
        eta_twr = (p - h) * (n_low + n_med) + n_r
        out["wdm_up"] = eta_a * (w + 1) * c / (
            n_low / alpha + n_med + alpha * n_high * eta_twr / (eta - 1))
        out["awg"] = eta_a * (eta - 1) * awg_c * c_awg / (alpha * n_high ** 2)
    return out


def wide_area_beta_bounds(n_low, n_med, n_high, alpha, beta, w, c, c_awg,
                          awg_c=1, p=4, h=1):
    """Destination-nonuniform limits for the same interconnect, published
    forms (the WDM-down denominator aggregates whole-EPON destinations)."""
    n = n_low + n_med + n_high
    n_r = p
    eta = _eta(p, h, n, n_r)
    mix = n_low / alpha + n_med + alpha * n_high
    eta_a = (p - h) * mix + n_r + alpha * h
    eta_lh = (p - h) * n_high + h
    eta_twr = (p - h) * (n_low + n_med) + n_r
    eta_twr_a = (p - h) * (n_low / alpha + n_med) + n_r
    out = {}
    out["wdm_up"] = eta_a * (w + 1) * c / (
        n_low / alpha + n_med + alpha * n_high * (1 - beta))
    out["wdm_down"] = eta_a * (w + 1) * c / (
        (n_low / alpha + n_med) * (n_low + n_med - 1) / (eta - 1)
        + eta_twr_a * n / (eta - 1)
        + alpha * (1 - beta) * eta_lh * (n_low + n_med) / eta_twr)
    out["awg"] = eta_a * eta_lh * awg_c * c_awg / (alpha * beta * n_high ** 2)
    return out
