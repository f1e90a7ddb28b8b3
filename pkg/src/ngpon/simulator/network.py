"""Event-driven simulation of the access/metro network.

One engine covers the isolated trees and the full interconnect: EPON gated
online interleaved polling or GPON fixed framing on each tree, WDM channels
in signal-reflection mode or the per-cycle empty-carrier switching policy,
a dual-fiber ring with transit priority, cut-through forwarding, and
destination stripping, a slotted-control PSC with per-destination virtual
queues, and dedicated AWG wavelength channels.

Protocol overheads (guard times, report/grant sizes) are zero so results
are comparable with the analytical model.  Simulated time is integer
nanoseconds; every tie in the event heap is broken by a fixed kind priority
and a sequence number, and all randomness flows through one seeded
generator, so a (scenario, seed) pair reproduces bit-identical statistics.
Each packet's route is pinned per flow (sampled once from the routed path
distribution), which keeps per-flow FIFO ordering intact; probabilistic
tie splits are realized in expectation across flows.  Multi-wavelength
scheduling respects the single-RSOA hardware: one WDM transmit window at a
time per ONU, one AWG window per LR ONU, and one WDM receive window per
ONU, so per-flow order survives the wavelength pool (the per-cycle
empty-carrier policy intentionally parallelizes whole cycle schedules
across wavelengths and is exempt).
"""

from __future__ import annotations

import heapq
import math
from collections import deque

import numpy as np

from ..model import (KIND_HOTSPOT, KIND_ONU, KIND_RING, ONU_LR, ONU_TDM,
                     ONU_WDM, PacketLengthDist, Topology, TrafficMatrices)
from ..routing import traversal_probs
from .core import SimConfig, SimStats, aggregate_replications

EPON = "epon"
GPON = "gpon"
REFLECTION = "reflection"
EMPTY_CARRIER = "empty_carrier"

# event kind priorities (heap tie-break)
_LINK_FREE, _ANNOUNCE, _SEG, _REPORT_TX, _REPORT_RX, _GEN = range(6)


class _Packet:
    __slots__ = ("src", "dst", "bits", "gen", "legs", "idx", "ready",
                 "measured", "flow")

    def __init__(self, src, dst, bits, gen, legs, measured, flow):
        self.src = src
        self.dst = dst
        self.bits = bits
        self.gen = gen
        self.legs = legs
        self.idx = 0
        self.ready = gen
        self.measured = measured
        self.flow = flow


class _Replication:
    def __init__(self, topology: Topology, tm: TrafficMatrices, protocol,
                 carrier, seed, warmup_s, duration_s, grant_priority=True,
                 trace=None, audit=False):
        self.top = topology
        self.tm = tm
        self.protocol = protocol
        self.carrier = carrier
        self.grant_priority = grant_priority
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.trace = trace
        self.audit = audit

        self.now = 0
        self.heap = []
        self.seq = 0
        self.warmup = self._ns(warmup_s)
        self.end = self._ns(warmup_s + duration_s)
        self.duration_s = duration_s

        self.tau = self._ns(topology.tau_tree)
        self.tau_p = self._ns(topology.tau_psc)
        self.tau_a = self._ns(topology.tau_awg)
        self.tau_hop = self._ns(topology.ring_hop_delay)
        self.psc_frame = self._ns(topology.psc_frame)

        # measurement
        self.cls_sum = {}
        self.cls_n = {}
        self.delivered_bits = 0
        self.generated = 0
        self.delivered = 0
        self.outstanding = 0
        self.busy = {}
        self._fifo_check = {}

        self._build_traffic()
        self._build_channels()

    # -- setup ------------------------------------------------------------

    def _ns(self, seconds: float) -> int:
        return int(round(seconds * 1e9))

    def _tx(self, bits, bps) -> int:
        return int(round(bits / bps * 1e9))

    def _build_traffic(self):
        top, tm = self.top, self.tm
        probs = traversal_probs(top, tm.t, tm.t_awg)
        self.src_rate = {}
        self.src_dests = {}
        self.flow_legs = {}
        for i in top.traffic_nodes:
            rate = float(tm.sigma_i[i] + tm.sigma_awg_i[i])
            if rate <= 0:
                continue
            dests, weights = [], []
            for j in top.traffic_nodes:
                w = float(tm.t[i, j] + tm.t_awg[i, j])
                if w > 0:
                    dests.append(j)
                    weights.append(w)
            self.src_rate[i] = rate
            self.src_dests[i] = (dests, np.cumsum(np.array(weights) / rate))
            for j in dests:
                if tm.t_awg[i, j] > 0:
                    ki = top.co_of_traffic_node(i)
                    kj = top.co_of_traffic_node(j)
                    self.flow_legs[(i, j)] = (("awg", ki, kj),)
                else:
                    paths = probs.flows[(i, j)]
                    if len(paths) == 1:
                        self.flow_legs[(i, j)] = paths[0][1]
                    else:
                        r = self.rng.random()
                        acc = 0.0
                        for p, legs in paths:
                            acc += p
                            if r <= acc or legs is paths[-1][1]:
                                self.flow_legs[(i, j)] = legs
                                break

    def _build_channels(self):
        top = self.top
        self.onu_tq = {i: deque() for i in top.onu_ids}
        self.onu_wq = {i: deque() for i in top.onu_ids}
        self.onu_aq = {i: {} for i in top.onu_ids}
        # single-RSOA constraints: one WDM transmit window at a time per
        # ONU, one AWG window per LR ONU, one WDM receive window per ONU
        self.onu_tx_free = {i: 0 for i in top.onu_ids}
        self.onu_awg_free = {i: 0 for i in top.onu_ids}
        self.onu_rx_free = {i: 0 for i in top.onu_ids}
        self.olt = {}
        for k in top.epon_cos:
            self.olt[k] = {
                "tdm_free": 0,
                "wdm_free": [0] * max(top.w, 1),
                "wdm_down_free": [0] * max(top.w, 1),
                "down_free": 0,            # TDM downstream backlog end
                "down_live": deque(),      # (start, end) of scheduled packets
                "gpon_up_free": 0,
                "gpon_down_free": 0,
                "round_need": 0,
                "round_seen": 0,
                "round_idx": 0,
                "round_up": [],
                "round_down": deque(),
                "cycle_free": [0] * max(top.w, 1),
            }
        self.awg_free = {}
        for k in range(top.p):
            for l in range(top.p):
                c = top.awg_c(k, l)
                if c > 0:
                    self.awg_free[(k, l)] = [0] * c
        self.psc_free = {l: [0] * top.home_channels[l] for l in range(top.p)}
        self.links = {}

    def _link(self, u, v):
        st = self.links.get((u, v))
        if st is None:
            st = {"free": 0, "busy": False, "transit": deque(), "station": deque()}
            self.links[(u, v)] = st
        return st

    # -- event plumbing ----------------------------------------------------

    def _push(self, t, prio, handler, args):
        self.seq += 1
        heapq.heappush(self.heap, (t, prio, self.seq, handler, args))

    @staticmethod
    def _pick(free_list, lower):
        """Best-fit channel choice for a window that may start at ``lower``.

        Prefers the latest-freeing channel already free by ``lower`` (no
        idle gap, smaller-free channels stay available); otherwise the
        earliest-freeing one (the window waits, the channel never idles).
        Returns (index, start).
        """
        best_le = best_gt = -1
        t_le = -1
        t_gt = None
        for idx, f in enumerate(free_list):
            if f <= lower:
                if f > t_le:
                    best_le, t_le = idx, f
            elif t_gt is None or f < t_gt:
                best_gt, t_gt = idx, f
        if best_le >= 0:
            return best_le, lower
        return best_gt, t_gt

    def _record(self, cls, packet, t_done):
        if not packet.measured:
            return
        dt = (t_done - packet.ready) * 1e-9
        self.cls_sum[cls] = self.cls_sum.get(cls, 0.0) + dt
        self.cls_n[cls] = self.cls_n.get(cls, 0) + 1

    def _deliver(self, packet, t):
        if packet.measured:
            dt = (t - packet.gen) * 1e-9
            self.cls_sum["end_to_end"] = self.cls_sum.get("end_to_end", 0.0) + dt
            self.cls_n["end_to_end"] = self.cls_n.get("end_to_end", 0) + 1
            if t <= self.end:
                self.delivered_bits += packet.bits
        self.delivered += 1
        self.outstanding -= 1
        if self.audit:
            last = self._fifo_check.get(packet.flow, -1)
            assert packet.gen >= last, "per-flow FIFO ordering violated"
            self._fifo_check[packet.flow] = packet.gen

    def _busy_add(self, label, start, end):
        if end <= self.warmup or start >= self.end:
            return
        lo, hi = max(start, self.warmup), min(end, self.end)
        self.busy[label] = self.busy.get(label, 0) + (hi - lo)

    # -- generation ---------------------------------------------------------

    def _start(self):
        for i in sorted(self.src_rate):
            self._schedule_gen(i, 0)
        if self.protocol == EPON:
            for k in self.top.epon_cos:
                onus = self.top.onus_of(k)
                self.olt[k]["round_need"] = len(onus)
                for idx, i in enumerate(onus):
                    t0 = int(round(idx * 2 * self.tau / max(len(onus), 1)))
                    self._push(t0, _REPORT_TX, "report_tx", (i,))

    def _schedule_gen(self, src, now):
        gap = self.rng.exponential(1e9 / self.src_rate[src])
        t = now + max(1, int(round(gap)))
        if t <= self.end:
            self._push(t, _GEN, "gen", (src,))

    def _h_gen(self, src):
        t = self.now
        dests, cum = self.src_dests[src]
        r = self.rng.random()
        dst = dests[int(np.searchsorted(cum, r, side="left"))] if len(dests) > 1 else dests[0]
        bits = int(self.tm.lengths.sample_bits(self.rng))
        legs = self.flow_legs[(src, dst)]
        measured = t >= self.warmup
        pkt = _Packet(src, dst, bits, t, legs, measured, (src, dst))
        self.generated += 1
        self.outstanding += 1
        node = self.top.nodes[src]
        if node.kind == KIND_ONU:
            if self.protocol == GPON:
                self._gpon_upstream(pkt, node)
            elif legs and legs[0][0] == "awg":
                self.onu_aq[src].setdefault(legs[0][2], deque()).append(pkt)
            elif node.onu_kind == ONU_TDM or (self.top.w == 0):
                self.onu_tq[src].append(pkt)
            else:
                self.onu_wq[src].append(pkt)
        else:
            # ring node or hotspot source
            self._advance(pkt, t)
        self._schedule_gen(src, t)

    # -- generic segment walker ---------------------------------------------

    def _advance(self, pkt, t, entering_ring_as_transit=False):
        pkt.ready = t
        if pkt.idx >= len(pkt.legs):
            self._deliver(pkt, t)
            return
        leg = pkt.legs[pkt.idx]
        kind = leg[0]
        if kind == "tree_up":
            raise AssertionError("tree_up handled at generation")
        if kind == "ring":
            self._ring_enqueue(pkt, leg[1], transit=entering_ring_as_transit,
                               ready=t)
        elif kind == "psc":
            self._psc_submit(pkt, leg[1], leg[2], t)
        elif kind == "tree_down":
            self._down_enqueue(pkt, leg[2] if len(leg) > 2 else leg[1], t)
        elif kind == "awg":
            self._awg_hotspot(pkt, leg[1], leg[2], t)
        else:
            raise AssertionError(f"unknown leg {leg}")

    # -- EPON polling ---------------------------------------------------------

    def _h_report_tx(self, onu):
        """Snapshot the ONU queues and send the report upstream."""
        node = self.top.nodes[onu]
        tq = self.onu_tq[onu]
        wq = self.onu_wq[onu]
        t_pkts = list(tq)
        tq.clear()
        w_pkts = list(wq)
        wq.clear()
        a_pkts = []
        for l in sorted(self.onu_aq[onu]):
            q = self.onu_aq[onu][l]
            if q:
                a_pkts.append((l, list(q)))
                q.clear()
        self._push(self.now + self.tau, _REPORT_RX, "report_rx",
                   (onu, node.co, tuple(t_pkts), tuple(w_pkts), tuple(a_pkts)))

    def _grant_time(self, k):
        """Departure time of a grant on CO k's downstream TDM channel."""
        olt = self.olt[k]
        if not self.grant_priority:
            return max(self.now, olt["down_free"])
        live = olt["down_live"]
        while live and live[0][1] <= self.now:
            live.popleft()
        if live and live[0][0] <= self.now < live[0][1]:
            return live[0][1]
        return self.now

    def _h_report_rx(self, onu, k, t_pkts, w_pkts, a_pkts):
        olt = self.olt[k]
        g = self._grant_time(k)
        earliest = g + 2 * self.tau

        # TDM window: data packets then the (zero length) next report
        start = max(olt["tdm_free"], earliest)
        cum = start
        for pkt in t_pkts:
            cum += self._tx(pkt.bits, self.top.c_tdm)
            self._push(cum, _SEG, "tree_up_done", (pkt, "tdm_up"))
        olt["tdm_free"] = cum
        self._busy_add(f"tdm_up[{k}]", start, cum)
        self._push(max(cum - self.tau, self.now + 1), _REPORT_TX,
                   "report_tx", (onu,))

        if w_pkts:
            if self.carrier == EMPTY_CARRIER:
                olt["round_up"].append(w_pkts)
            else:
                self._wdm_upstream_window(olt, k, onu, w_pkts, earliest)
        elif self.carrier == EMPTY_CARRIER:
            olt["round_up"].append(())

        for l, pkts in a_pkts:
            lower = max(earliest, self.onu_awg_free[onu])
            free = self.awg_free[(k, l)]
            ch, s = self._pick(free, lower)
            for pkt in pkts:
                s += self._tx(pkt.bits, self.top.c_awg)
                self._push(s + self.tau_a, _SEG, "awg_done", (pkt,))
            free[ch] = s
            self.onu_awg_free[onu] = s

    def _wdm_upstream_window(self, olt, k, onu, w_pkts, earliest):
        """Grant one gated window for a WDM/LR ONU's tree-bound queue: the
        best wavelength, or the leftover upstream TDM capacity when that is
        sooner (the grant map carries a TDM window for data too)."""
        lower = max(earliest, self.onu_tx_free[onu])
        free = olt["wdm_free"]
        ch, ws = self._pick(free, lower)
        tdm_start = max(olt["tdm_free"], lower)
        if tdm_start < ws:
            s = tdm_start
            for pkt in w_pkts:
                s += self._tx(pkt.bits, self.top.c_tdm)
                self._push(s, _SEG, "tree_up_done", (pkt, "wdm_up"))
            self._busy_add(f"tdm_up[{k}]", tdm_start, s)
            olt["tdm_free"] = s
        else:
            s = ws
            for pkt in w_pkts:
                s += self._tx(pkt.bits, self.top.c_wdm)
                self._push(s, _SEG, "tree_up_done", (pkt, "wdm_up"))
            free[ch] = s
        self.onu_tx_free[onu] = s

        if self.carrier == EMPTY_CARRIER:
            olt["round_seen"] += 1
            if olt["round_seen"] >= olt["round_need"]:
                self._close_wdm_cycle(k)

    def _close_wdm_cycle(self, k):
        """Per-TDM-cycle switching: upstream batch, switchover, downstream
        batch, switchover, assigned round-robin over the W channels."""
        olt = self.olt[k]
        up_batches = olt["round_up"]
        down_batch = list(olt["round_down"])
        olt["round_down"].clear()
        olt["round_up"] = []
        olt["round_seen"] = 0
        ch = olt["round_idx"] % len(olt["cycle_free"])
        olt["round_idx"] += 1
        start = max(olt["cycle_free"][ch], self.now + 2 * self.tau)
        cum = start
        for batch in up_batches:
            for pkt in batch:
                cum += self._tx(pkt.bits, self.top.c_wdm)
                self._push(cum, _SEG, "tree_up_done", (pkt, "wdm_up"))
        cum += self.tau  # switch to downstream
        for pkt in down_batch:
            cum += self._tx(pkt.bits, self.top.c_wdm)
            self._push(cum + self.tau, _SEG, "down_done", (pkt, "wdm_down"))
        cum += self.tau  # switch back
        olt["cycle_free"][ch] = cum

    def _h_tree_up_done(self, pkt, cls):
        self._record(cls, pkt, self.now)
        pkt.idx += 1
        self._advance(pkt, self.now)

    # -- GPON framing ----------------------------------------------------------

    def _gpon_eligible(self, t):
        """ONU-side instant a packet arriving at t may start upstream."""
        delta = self._ns(self.top.gpon_delta)
        omega = self._ns(self.top.gpon_omega)
        f1 = (t // delta + 1) * delta
        rx = f1 + delta + self.tau
        d = -omega + ((rx + omega + delta - 1) // delta) * delta
        grant_at_onu = d + delta + self.tau
        return (grant_at_onu // delta + 1) * delta

    def _gpon_upstream(self, pkt, node):
        olt = self.olt[node.co]
        e = self._gpon_eligible(self.now)
        if pkt.legs and pkt.legs[0][0] == "awg":
            k, l = pkt.legs[0][1], pkt.legs[0][2]
            lower = max(e, self.onu_awg_free[pkt.src])
            free = self.awg_free[(k, l)]
            ch, s = self._pick(free, lower)
            end = s + self._tx(pkt.bits, self.top.c_awg)
            free[ch] = end
            self.onu_awg_free[pkt.src] = end
            self._push(end + self.tau_a, _SEG, "awg_done", (pkt,))
            return
        if node.onu_kind == ONU_TDM or self.top.w == 0:
            s = max(olt["gpon_up_free"], e)
            end = s + self._tx(pkt.bits, self.top.c_tdm)
            olt["gpon_up_free"] = end
            cls = "tdm_up"
            self._busy_add(f"tdm_up[{node.co}]", s, end)
        else:
            lower = max(e, self.onu_tx_free[pkt.src])
            free = self.olt[node.co]["wdm_free"]
            ch, s = self._pick(free, lower)
            tdm_start = max(olt["gpon_up_free"], lower)
            if tdm_start < s:
                end = tdm_start + self._tx(pkt.bits, self.top.c_tdm)
                olt["gpon_up_free"] = end
                self._busy_add(f"tdm_up[{node.co}]", tdm_start, end)
            else:
                end = s + self._tx(pkt.bits, self.top.c_wdm)
                free[ch] = end
            self.onu_tx_free[pkt.src] = end
            cls = "wdm_up"
        self._push(end + self.tau, _SEG, "tree_up_done", (pkt, cls))

    # -- downstream trees -------------------------------------------------------

    def _down_enqueue(self, pkt, l, t):
        node = self.top.nodes[pkt.dst]
        olt = self.olt[l]
        tdm_dest = node.onu_kind == ONU_TDM or self.top.w == 0
        if self.protocol == GPON:
            delta = self._ns(self.top.gpon_delta)
            omega = self._ns(self.top.gpon_omega)
            eligible = -omega + ((t + omega + delta - 1) // delta) * delta
        else:
            eligible = t
        if tdm_dest:
            s = max(olt["down_free"] if self.protocol == EPON else olt["gpon_down_free"],
                    eligible)
            end = s + self._tx(pkt.bits, self.top.c_tdm)
            if self.protocol == EPON:
                olt["down_free"] = end
                olt["down_live"].append((s, end))
            else:
                olt["gpon_down_free"] = end
            self._push(end + self.tau, _SEG, "down_done", (pkt, "tdm_down"))
        else:
            if self.carrier == EMPTY_CARRIER and self.protocol == EPON:
                olt["round_down"].append(pkt)
                pkt.ready = t
                return
            lower = max(eligible, self.onu_rx_free[pkt.dst])
            free = olt["wdm_down_free"]
            ch, s = self._pick(free, lower)
            if self.protocol == EPON:
                tdm_start = max(olt["down_free"], lower)
            else:
                tdm_start = max(olt["gpon_down_free"], lower)
            if tdm_start < s:
                # leftover downstream TDM capacity carries the packet
                end = tdm_start + self._tx(pkt.bits, self.top.c_tdm)
                if self.protocol == EPON:
                    olt["down_free"] = end
                    olt["down_live"].append((tdm_start, end))
                else:
                    olt["gpon_down_free"] = end
            else:
                end = s + self._tx(pkt.bits, self.top.c_wdm)
                free[ch] = end
            self.onu_rx_free[pkt.dst] = end
            self._push(end + self.tau, _SEG, "down_done", (pkt, "wdm_down"))
        pkt.ready = t

    def _h_down_done(self, pkt, cls):
        self._record(cls, pkt, self.now)
        pkt.idx += 1
        if pkt.idx >= len(pkt.legs):
            self._deliver(pkt, self.now)
        else:  # tree_down is always terminal
            raise AssertionError("tree_down must be the last leg")

    # -- ring ----------------------------------------------------------------

    def _ring_enqueue(self, pkt, u, transit, ready):
        leg = pkt.legs[pkt.idx]
        st = self._link(leg[1], leg[2])
        (st["transit"] if transit else st["station"]).append(pkt)
        if not st["busy"]:
            self._link_start(leg[1], leg[2], ready)

    def _link_start(self, u, v, now):
        st = self._link(u, v)
        q = st["transit"] if st["transit"] else st["station"]
        if not q:
            return
        pkt = q.popleft()
        s = max(now, st["free"])
        end = s + self._tx(pkt.bits, self.top.c_rpr)
        st["free"] = end
        st["busy"] = True
        self._push(end, _LINK_FREE, "link_free", (u, v))
        self._busy_add(f"ring[{u}->{v}]", s, end)
        nxt = pkt.idx + 1
        if nxt < len(pkt.legs) and pkt.legs[nxt][0] == "ring":
            # ring nodes cut through (head forwards on arrival); COs on the
            # transit path store and forward with OEO conversion
            pkt.idx = nxt
            wait_tail = (self._tx(pkt.bits, self.top.c_rpr)
                         if self.top.co_at_pos(v) >= 0 else 0)
            self._push(s + self.tau_hop + wait_tail, _SEG, "ring_head", (pkt,))
        else:
            # leaving the ring at v: wait for the tail (store and forward)
            pkt.idx = nxt
            self._push(s + self.tau_hop + self._tx(pkt.bits, self.top.c_rpr),
                       _SEG, "ring_exit", (pkt,))

    def _h_link_free(self, u, v):
        st = self._link(u, v)
        st["busy"] = False
        if st["transit"] or st["station"]:
            self._link_start(u, v, self.now)

    def _h_ring_head(self, pkt):
        self._ring_enqueue(pkt, pkt.legs[pkt.idx][1], transit=True,
                           ready=self.now)

    def _h_ring_exit(self, pkt):
        self._record("ring", pkt, self.now)
        self._advance(pkt, self.now)

    # -- PSC -------------------------------------------------------------------

    def _psc_submit(self, pkt, k, l, t):
        """Wait for CO k's control slot, broadcast, then join the virtual
        queue for CO l's home channel(s)."""
        slot_len = self.psc_frame // self.top.p
        base = k * slot_len
        if t <= base:
            s_ctrl = base
        else:
            n = (t - base + self.psc_frame - 1) // self.psc_frame
            s_ctrl = base + n * self.psc_frame
        self._push(s_ctrl + self.tau_p, _ANNOUNCE, "psc_announce", (pkt, l))

    def _h_psc_announce(self, pkt, l):
        free = self.psc_free[l]
        ch = min(range(len(free)), key=free.__getitem__)
        s = max(free[ch], self.now)
        end = s + self._tx(pkt.bits, self.top.c_psc)
        free[ch] = end
        self._busy_add(f"psc[{l}]", s, end)
        self._push(end + self.tau_p, _SEG, "psc_done", (pkt,))

    def _h_psc_done(self, pkt):
        self._record("psc", pkt, self.now)
        pkt.idx += 1
        self._advance(pkt, self.now)

    # -- AWG (hotspot direct transmit) ------------------------------------------

    def _awg_hotspot(self, pkt, k, l, t):
        free = self.awg_free[(k, l)]
        ch = min(range(len(free)), key=free.__getitem__)
        s = max(free[ch], t)
        end = s + self._tx(pkt.bits, self.top.c_awg)
        free[ch] = end
        self._push(end + self.tau_a, _SEG, "awg_done", (pkt,))

    def _h_awg_done(self, pkt):
        self._record("awg", pkt, self.now)
        # AWG is single-hop: the receiving LR ONU / hotspot is the endpoint
        pkt.idx = len(pkt.legs)
        self._deliver(pkt, self.now)

    # -- run loop -----------------------------------------------------------------

    _HANDLERS = {
        "gen": "_h_gen",
        "report_tx": "_h_report_tx",
        "report_rx": "_h_report_rx",
        "tree_up_done": "_h_tree_up_done",
        "down_done": "_h_down_done",
        "link_free": "_h_link_free",
        "ring_head": "_h_ring_head",
        "ring_exit": "_h_ring_exit",
        "psc_announce": "_h_psc_announce",
        "psc_done": "_h_psc_done",
        "awg_done": "_h_awg_done",
    }

    def run(self):
        self._start()
        heap = self.heap
        handlers = {k: getattr(self, v) for k, v in self._HANDLERS.items()}
        while heap:
            t, prio, seq, name, args = heapq.heappop(heap)
            if t > self.end and self.outstanding == 0:
                break
            self.now = t
            if self.trace is not None:
                self.trace.append((t, name, args[0] if args else None))
            handlers[name](*args)
        assert self.generated == self.delivered + self.outstanding, \
            "packet conservation violated"
        means = {}
        counts = {}
        for cls, total in self.cls_sum.items():
            n = self.cls_n[cls]
            means[cls] = total / n
            counts[cls] = n
        tput = self.delivered_bits / self.duration_s
        util = {label: busy / (self.end - self.warmup)
                for label, busy in sorted(self.busy.items())}
        return means, counts, tput, util


def run_network(topology: Topology, tm: TrafficMatrices, config: SimConfig,
                protocol: str = EPON, carrier_mode: str = REFLECTION,
                grant_priority: bool = True, trace=None,
                audit: bool = False) -> SimStats:
    """Simulate the network under the given traffic and return SimStats."""
    per_means, per_counts, per_tput, per_util = [], [], [], []
    generated = delivered = 0
    for seed in config.spawned_seeds():
        rep = _Replication(topology, tm, protocol, carrier_mode, seed,
                           config.warmup_s, config.duration_s,
                           grant_priority, trace, audit)
        means, counts, tput, util = rep.run()
        per_means.append(means)
        per_counts.append(counts)
        per_tput.append(tput)
        per_util.append(util)
        generated += rep.generated
        delivered += rep.delivered
    return aggregate_replications(per_means, per_counts, per_tput, per_util,
                                  generated, delivered)


def run_epon_tree(topology: Topology, tm: TrafficMatrices, config: SimConfig,
                  carrier_mode: str = REFLECTION, **kw) -> SimStats:
    """EPON polling on the PON tree(s); same engine as the full network."""
    return run_network(topology, tm, config, EPON, carrier_mode, **kw)


def run_gpon_tree(topology: Topology, tm: TrafficMatrices, config: SimConfig,
                  **kw) -> SimStats:
    """GPON fixed 125 us framing on the tree(s)."""
    return run_network(topology, tm, config, GPON, REFLECTION, **kw)
