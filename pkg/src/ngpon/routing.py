"""Shortest-path ring/PSC routing and link-traversal probabilities.

Links are tuples:

    ("tree_up", k)     upstream leg of the PON at CO k
    ("tree_down", k)   downstream leg at CO k
    ("psc", k, l)      PSC hop from CO k onto the home channel of CO l
    ("ring", u, v)     one directed ring hop between adjacent positions

Hop metric: one per ring link, one per PSC transit.  Between COs the PSC
is taken whenever strictly shorter than the ring.  Traffic to a ring node
leaves the PSC at the node's nearest flanking CO.  Tie conventions, chosen
to reproduce the hand-derived home-channel load enumerations this model is
validated against:

* equidistant flanking gateways: split 1/2-1/2 from a CO on the "side" of
  the ring, resolved to the gateway antipodal to the entry CO when the
  entry lies on the hotspot axis (hotspot CO or its antipode);
* a ring-node source picks its nearest entry CO, resolving equidistant
  entries to the hotspot-axis CO;
* a uniquely-gated ring destination is reached over the PSC only via a
  forward entry CO (one encountered travelling the shortest ring direction
  toward the destination); otherwise the flow stays on the ring;
* exact cost ties between a ring route and a PSC route split 1/2-1/2, as
  do shortest-ring direction ties.

Without a unique hotspot axis every tie falls back to an even split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import KIND_HOTSPOT, KIND_ONU, KIND_RING, Topology


class RoutingError(ValueError):
    pass


def _ring_legs(a: int, b: int, direction: int, size: int):
    legs = []
    pos = a
    while pos != b:
        nxt = (pos + direction) % size
        legs.append(("ring", pos, nxt))
        pos = nxt
    return tuple(legs)


def _ring_distance(a: int, b: int, size: int):
    """(hops, directions): directions holds both +1/-1 on an exact tie."""
    cw = (b - a) % size
    ccw = (a - b) % size
    if cw < ccw:
        return cw, (1,)
    if ccw < cw:
        return ccw, (-1,)
    return cw, (1, -1)


def _walk_distance(a: int, b: int, direction: int, size: int) -> int:
    return (b - a) % size if direction == 1 else (a - b) % size


class _MiddleRouter:
    """Routes between ring positions; caches path distributions."""

    def __init__(self, topology: Topology):
        self.top = topology
        self.size = topology.ring_size
        self.axis = set(topology.axis_positions())
        self._cache: dict = {}

    # -- helpers ---------------------------------------------------------

    def _co_positions(self):
        return [self.top.pos_of_co(k) for k in range(self.top.p)]

    def _flanks(self, pos: int):
        """Nearest CO position in each ring direction: [(co_pos, dist), ...]."""
        out = []
        for direction in (1, -1):
            p, d = pos, 0
            while self.top.co_at_pos(p) < 0:
                p = (p + direction) % self.size
                d += 1
                if d > self.size:
                    raise RoutingError("ring has no COs")
            out.append((p, d))
        return out

    def _entry_choices(self, pos: int):
        """[(co_pos, dist, weight)] for a ring-node source entering the PSC."""
        (p1, d1), (p2, d2) = self._flanks(pos)
        if p1 == p2:
            return [(p1, d1, 1.0)]
        if d1 < d2:
            return [(p1, d1, 1.0)]
        if d2 < d1:
            return [(p2, d2, 1.0)]
        on_axis = [p for p in (p1, p2) if p in self.axis]
        if len(on_axis) == 1:
            return [(on_axis[0], d1, 1.0)]
        return [(p1, d1, 0.5), (p2, d2, 0.5)]

    def _exit_choices(self, entry: int, g1: int, g2: int):
        """Gateway split for a flank-tied ring destination."""
        if entry in self.axis:
            anti = (entry + self.size // 2) % self.size if self.size % 2 == 0 else -1
            if anti in (g1, g2):
                return [(anti, 1.0)]
        return [(g1, 0.5), (g2, 0.5)]

    def _ring_branches(self, a: int, b: int):
        d, dirs = _ring_distance(a, b, self.size)
        share = 1.0 / len(dirs)
        return d, [(share, _ring_legs(a, b, s, self.size)) for s in dirs]

    # -- main ------------------------------------------------------------

    def paths(self, a: int, b: int):
        """Path distribution from ring position a to ring position b."""
        key = (a, b)
        if key in self._cache:
            return self._cache[key]
        result = self._compute(a, b)
        self._cache[key] = result
        return result

    def _compute(self, a: int, b: int):
        if a == b:
            return ((1.0, ()),)
        ring_cost, ring_branches = self._ring_branches(a, b)
        co_a = self.top.co_at_pos(a)
        co_b = self.top.co_at_pos(b)

        psc_cost = None
        psc_branches = []  # (weight, legs) summing to 1 among themselves

        if co_b >= 0:
            entries = ([(a, 0, 1.0)] if co_a >= 0 else self._entry_choices(a))
            options = []
            for c_pos, dist, wt in entries:
                if c_pos == b:
                    continue
                options.append((dist + 1, wt, c_pos))
            if options:
                best = min(o[0] for o in options)
                chosen = [o for o in options if o[0] == best]
                tot = sum(o[1] for o in chosen)
                psc_cost = best
                for _, wt, c_pos in chosen:
                    legs = self._entry_legs(a, c_pos) + (
                        ("psc", self.top.co_at_pos(c_pos), co_b),)
                    psc_branches.append((wt / tot, legs))
        else:
            (g1, d1), (g2, d2) = self._flanks(b)
            if g1 == g2 or d1 != d2:
                g, dg = (g1, min(d1, d2)) if g2 == g1 else (
                    (g1, d1) if d1 < d2 else (g2, d2))
                option = self._unique_gateway_option(a, b, co_a, g, dg)
                if option is not None:
                    psc_cost, psc_branches = option
            else:
                entries = ([(a, 0, 1.0)] if co_a >= 0 else self._entry_choices(a))
                branches = []
                cost = None
                for c_pos, dist, wt in entries:
                    if c_pos in (g1, g2):
                        other = g2 if c_pos == g1 else g1
                        cost_c = dist + 1 + d1
                        exits = [(other, 1.0)]
                    else:
                        cost_c = dist + 1 + d1
                        exits = self._exit_choices(c_pos, g1, g2)
                    cost = cost_c if cost is None else min(cost, cost_c)
                    for g, ew in exits:
                        legs = (self._entry_legs(a, c_pos)
                                + (("psc", self.top.co_at_pos(c_pos),
                                    self.top.co_at_pos(g)),)
                                + self._gateway_legs(g, b))
                        branches.append((wt * ew, legs, cost_c))
                if branches:
                    best = min(c for _, _, c in branches)
                    kept = [(w, l) for w, l, c in branches if c == best]
                    tot = sum(w for w, _ in kept)
                    psc_cost = best
                    psc_branches = [(w / tot, l) for w, l in kept]

        if psc_cost is None or psc_cost > ring_cost:
            return tuple(ring_branches)
        if psc_cost < ring_cost:
            return tuple(psc_branches)
        mix = [(0.5 * w, legs) for w, legs in ring_branches]
        mix += [(0.5 * w, legs) for w, legs in psc_branches]
        return tuple(mix)

    def _unique_gateway_option(self, a, b, co_a, g, dg):
        if co_a >= 0:
            if a == g:
                return None
            legs = (("psc", co_a, self.top.co_at_pos(g)),) + self._gateway_legs(g, b)
            return dg + 1, [(1.0, legs)]
        # ring-node source: forward entries only
        _, dirs = _ring_distance(a, b, self.size)
        options = []
        for direction in dirs:
            pos, walked = a, 0
            while True:
                pos = (pos + direction) % self.size
                walked += 1
                if pos == b:
                    break
                if self.top.co_at_pos(pos) >= 0:
                    if pos != g:
                        options.append((walked + 1 + dg, pos, direction, walked))
                    break
        if not options:
            return None
        best = min(o[0] for o in options)
        chosen = [o for o in options if o[0] == best]
        share = 1.0 / len(chosen)
        branches = []
        for _, c_pos, direction, walked in chosen:
            legs = (_ring_legs(a, c_pos, direction, self.size)
                    + (("psc", self.top.co_at_pos(c_pos), self.top.co_at_pos(g)),)
                    + self._gateway_legs(g, b))
            branches.append((share, legs))
        return best, branches

    def _entry_legs(self, a: int, c_pos: int):
        if a == c_pos:
            return ()
        _, dirs = _ring_distance(a, c_pos, self.size)
        # entry legs follow the shorter arc; a tie would be ambiguous, pick cw
        return _ring_legs(a, c_pos, dirs[0], self.size)

    def _gateway_legs(self, g: int, b: int):
        _, dirs = _ring_distance(g, b, self.size)
        return _ring_legs(g, b, dirs[0], self.size)


def route(topology: Topology, i: int, j: int):
    """Path distribution for traffic from node i to node j (T traffic).

    Returns a tuple of (probability, legs) covering tree, ring, and PSC
    legs end to end.  AWG traffic is not routed here.
    """
    if i == j:
        raise RoutingError("no self routes")
    router = _MiddleRouter(topology)
    return _route_with(router, topology, i, j)


def _route_with(router: _MiddleRouter, topology: Topology, i: int, j: int):
    ni, nj = topology.nodes[i], topology.nodes[j]
    pre: tuple = ()
    post: tuple = ()
    if ni.kind == KIND_ONU:
        a = topology.pos_of_co(ni.co)
        pre = (("tree_up", ni.co),)
    elif ni.kind in (KIND_RING, KIND_HOTSPOT):
        a = ni.ring_pos
    else:
        raise RoutingError("plain COs generate no traffic")
    if nj.kind == KIND_ONU:
        b = topology.pos_of_co(nj.co)
        post = (("tree_down", nj.co),)
    elif nj.kind in (KIND_RING, KIND_HOTSPOT):
        b = nj.ring_pos
    else:
        raise RoutingError("plain COs sink no traffic")
    return tuple((p, pre + legs + post) for p, legs in router.paths(a, b))


@dataclass
class LinkTraversalProbs:
    """Per-flow path distributions plus aggregate per-link helpers."""

    topology: Topology
    flows: dict  # (i, j) -> tuple of (prob, legs)

    def link_prob(self, i: int, j: int, link) -> float:
        return sum(p for p, legs in self.flows.get((i, j), ()) if link in legs)

    def flow_items(self):
        return self.flows.items()

    def link_packet_rates(self, t: np.ndarray) -> dict:
        """Expected packet rate crossing each link."""
        loads: dict = {}
        for (i, j), paths in self.flows.items():
            rate = t[i, j]
            if rate == 0:
                continue
            for p, legs in paths:
                for leg in legs:
                    loads[leg] = loads.get(leg, 0.0) + p * rate
        return loads

    def restricted_link_rate(self, t: np.ndarray, link, dest_filter=None,
                             src_filter=None, then_link=None) -> float:
        """Packet rate over ``link`` restricted to flows matching the filters.

        ``then_link`` keeps only path mass that also crosses that second
        link (joint probability along the same path).
        """
        total = 0.0
        for (i, j), paths in self.flows.items():
            rate = t[i, j]
            if rate == 0:
                continue
            if dest_filter is not None and j not in dest_filter:
                continue
            if src_filter is not None and i not in src_filter:
                continue
            for p, legs in paths:
                if link in legs and (then_link is None or then_link in legs):
                    total += p * rate
        return total

    def dump_csv(self, path_or_fh):
        """Debug dump: one row per (i, j, link, probability)."""
        close = False
        if isinstance(path_or_fh, (str, bytes)):
            fh = open(path_or_fh, "w")
            close = True
        else:
            fh = path_or_fh
        try:
            fh.write("i,j,link,probability\n")
            for (i, j) in sorted(self.flows):
                marg: dict = {}
                for p, legs in self.flows[(i, j)]:
                    for leg in legs:
                        marg[leg] = marg.get(leg, 0.0) + p
                for leg in sorted(marg, key=repr):
                    fh.write(f"{i},{j},{'|'.join(str(x) for x in leg)},"
                             f"{marg[leg]:.9g}\n")
        finally:
            if close:
                fh.close()


def traversal_probs(topology: Topology, t: np.ndarray,
                    t_awg: np.ndarray | None = None) -> LinkTraversalProbs:
    """Precompute path distributions for every pair with positive T rate.

    T^A traffic takes the single-hop AWG and never touches these links, so
    it contributes no entries.
    """
    router = _MiddleRouter(topology)
    flows = {}
    for i, j in np.argwhere(t > 0):
        flows[(int(i), int(j))] = _route_with(router, topology, int(i), int(j))
    return LinkTraversalProbs(topology, flows)
