"""Network model: topology, packet-length statistics, and traffic matrices.

The model covers a metro interconnect of P central offices (COs) on a
bidirectional ring with N_r ring nodes, a passive star coupler (PSC) with
per-CO home channels, and an arrayed waveguide grating (AWG) providing
point-to-point wavelength channels between COs.  Each non-hotspot CO roots
a PON tree with a mix of TDM, WDM, and long-reach (LR) ONUs.  Hotspot COs
carry traffic themselves but have no subscriber tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PROPAGATION_SPEED_M_S = 2.0e8

ONU_TDM = "tdm"
ONU_WDM = "wdm"
ONU_LR = "lr"

KIND_CO = "co"
KIND_HOTSPOT = "hotspot"
KIND_RING = "ring"
KIND_ONU = "onu"

UNIFORM = "uniform"
NONUNIFORM_SRC = "nonuniform_src"
NONUNIFORM_SRC_DST = "nonuniform_src_dst"


class ModelError(ValueError):
    """Raised for inconsistent topology or traffic parameters."""


@dataclass(frozen=True)
class PacketLengthDist:
    """First two moments of the packet length distribution, in bits.

    The default distribution is discrete uniform over whole byte sizes
    64..1518, so the moments are exact for the sampler used in simulation.
    """

    mean_bits: float
    var_bits: float
    min_bytes: int | None = 64
    max_bytes: int | None = 1518

    def __post_init__(self):
        if self.mean_bits <= 0 or self.var_bits < 0:
            raise ModelError("packet length moments must be positive mean, nonneg var")

    @classmethod
    def uniform_bytes(cls, min_bytes: int = 64, max_bytes: int = 1518) -> "PacketLengthDist":
        n = max_bytes - min_bytes + 1
        mean = (min_bytes + max_bytes) / 2.0 * 8.0
        var = (n * n - 1) / 12.0 * 64.0  # byte variance * 8^2
        return cls(mean, var, min_bytes, max_bytes)

    @classmethod
    def deterministic(cls, bits: float) -> "PacketLengthDist":
        return cls(bits, 0.0, None, None)

    @property
    def second_moment(self) -> float:
        return self.var_bits + self.mean_bits ** 2

    def sample_bits(self, rng: np.random.Generator, size=None):
        if self.min_bytes is None:
            # degenerate: constant length
            if size is None:
                return self.mean_bits
            return np.full(size, self.mean_bits)
        return rng.integers(self.min_bytes, self.max_bytes + 1, size=size) * 8


@dataclass(frozen=True)
class Node:
    ident: int
    kind: str                  # co | hotspot | ring | onu
    co: int = -1               # owning CO index for ONUs, own index for COs
    onu_kind: str | None = None
    ring_pos: int = -1         # position on the ring for COs and ring nodes


@dataclass(frozen=True)
class Topology:
    """Fully resolved network topology with deterministic node numbering.

    Node ids: COs 0..P-1 (hotspots last), ring nodes P..P+N_r-1 clockwise
    starting after CO 0, then ONUs grouped by CO (TDM, WDM, LR within each).
    Ring positions place the P COs equally spaced with N_r/P ring nodes in
    each gap; ids and positions are documented so CSV output is reproducible.
    """

    p: int
    h: int
    n_r: int
    n_tdm: tuple            # per-CO counts, zero for hotspot COs
    n_wdm: tuple
    n_lr: tuple
    c_tdm: float            # channel capacities [bit/s]
    c_wdm: float
    w: int                  # WDM channels per CO
    c_awg: float
    c_psc: float
    c_rpr: float
    awg_channels: tuple     # c(k,l) matrix as nested tuple, loopback allowed
    home_channels: tuple    # h(l) per CO
    tau_tree: float         # one-way propagation delays [s]
    tau_psc: float
    tau_awg: float
    ring_hop_delay: float
    psc_frame: float        # PSC control frame duration [s]
    gpon_delta: float
    gpon_omega: float
    nodes: tuple = field(repr=False)
    _pos_of_co: tuple = field(repr=False)
    _co_at_pos: tuple = field(repr=False)

    # ---- derived views -------------------------------------------------

    @property
    def ring_size(self) -> int:
        return self.p + self.n_r

    @property
    def epon_cos(self):
        return [k for k in range(self.p) if not self.is_hotspot(k)]

    @property
    def hotspot_cos(self):
        return [k for k in range(self.p) if self.is_hotspot(k)]

    def is_hotspot(self, k: int) -> bool:
        return k >= self.p - self.h

    def pos_of_co(self, k: int) -> int:
        return self._pos_of_co[k]

    def co_at_pos(self, pos: int) -> int:
        """CO index at a ring position, or -1 for a plain ring node."""
        return self._co_at_pos[pos]

    def position_of(self, node_id: int) -> int:
        return self.nodes[node_id].ring_pos

    def onus_of(self, k: int, onu_kind=None):
        return [n.ident for n in self.nodes
                if n.kind == KIND_ONU and n.co == k
                and (onu_kind is None or n.onu_kind == onu_kind)]

    @property
    def ring_node_ids(self):
        return [n.ident for n in self.nodes if n.kind == KIND_RING]

    @property
    def onu_ids(self):
        return [n.ident for n in self.nodes if n.kind == KIND_ONU]

    @property
    def traffic_nodes(self):
        """All traffic sources/destinations: ONUs, ring nodes, hotspot COs."""
        return [n.ident for n in self.nodes
                if n.kind in (KIND_ONU, KIND_RING, KIND_HOTSPOT)]

    @property
    def eta(self) -> int:
        return len(self.traffic_nodes)

    def lr_and_hotspot_ids(self):
        return [n.ident for n in self.nodes
                if n.kind == KIND_HOTSPOT or (n.kind == KIND_ONU and n.onu_kind == ONU_LR)]

    def co_of_traffic_node(self, i: int) -> int:
        """Attachment CO: own index for hotspots, -1 for ring nodes."""
        n = self.nodes[i]
        if n.kind == KIND_ONU or n.kind == KIND_HOTSPOT:
            return n.co
        return -1

    def awg_c(self, k: int, l: int) -> int:
        return self.awg_channels[k][l]

    def axis_positions(self):
        """Hotspot ring position and its antipode, when uniquely defined.

        Used by the routing tie-break convention for equidistant PSC
        gateways; empty when there is no single hotspot or the antipodal
        position is not a CO.
        """
        if self.h != 1 or self.ring_size % 2:
            return ()
        hpos = self.pos_of_co(self.p - 1)
        anti = (hpos + self.ring_size // 2) % self.ring_size
        if self.co_at_pos(anti) < 0:
            return ()
        return (hpos, anti)


def build_topology(
    p: int = 1,
    h: int = 0,
    n_r: int = 0,
    n_tdm=0,
    n_wdm=0,
    n_lr=0,
    c_tdm: float = 1e9,
    c_wdm: float = 1e9,
    w: int = 0,
    c_awg: float = 10e9,
    c_psc: float = 10e9,
    c_rpr: float = 10e9,
    awg_channels=0,
    hotspot_home_channels: int = 1,
    tau_tree: float = 100e-6,
    tau_psc: float = 125e-6,
    tau_awg: float = 125e-6,
    ring_circumference_m: float = 100e3,
    psc_frame: float = 10e-6,
    gpon_delta: float = 125e-6,
    gpon_omega: float = 0.0,
) -> Topology:
    """Resolve and validate a topology.

    ``n_tdm``/``n_wdm``/``n_lr`` are per-EPON-CO counts (scalars broadcast
    over the P-H tree COs).  ``awg_channels`` is either a scalar c applied
    to every ordered CO pair (including the loopback port pair, which the
    AWG wavelength-routing provides) or a full P x P matrix.
    """
    if p < 1 or h < 0 or h > p or n_r < 0:
        raise ModelError("need p >= 1 and 0 <= h <= p")
    n_epon = p - h
    if n_epon == 0:
        raise ModelError("at least one CO must carry a PON tree")

    def per_co(x):
        if np.isscalar(x):
            return tuple(int(x) if k < n_epon else 0 for k in range(p))
        vals = list(x)
        if len(vals) == n_epon:
            vals = vals + [0] * h
        if len(vals) != p:
            raise ModelError("per-CO ONU counts must cover every tree CO")
        return tuple(int(v) for v in vals)

    nt, nw, nl = per_co(n_tdm), per_co(n_wdm), per_co(n_lr)
    for k in range(p):
        if k >= n_epon and (nt[k] or nw[k] or nl[k]):
            raise ModelError("hotspot COs do not carry ONUs")
    if all(nt[k] + nw[k] + nl[k] == 0 for k in range(n_epon)):
        raise ModelError("no ONUs in any tree")

    for name, cap in (("c_tdm", c_tdm), ("c_wdm", c_wdm), ("c_awg", c_awg),
                      ("c_psc", c_psc), ("c_rpr", c_rpr)):
        if cap <= 0:
            raise ModelError(f"{name} must be positive")
    if w < 0:
        raise ModelError("w must be >= 0")
    if not (0 <= gpon_omega < gpon_delta):
        raise ModelError("gpon offset must satisfy 0 <= omega < delta")

    if np.isscalar(awg_channels):
        c_mat = tuple(tuple(int(awg_channels) for _ in range(p)) for _ in range(p))
    else:
        c_mat = tuple(tuple(int(v) for v in row) for row in awg_channels)
        if len(c_mat) != p or any(len(r) != p for r in c_mat):
            raise ModelError("awg_channels matrix must be P x P")
    if any(v < 0 for row in c_mat for v in row):
        raise ModelError("awg channel counts must be >= 0")

    homes = tuple(hotspot_home_channels if k >= n_epon else 1 for k in range(p))

    # ring layout: COs equally spaced, n_r/p ring nodes per gap
    if n_r and p > 1 and n_r % p:
        raise ModelError("n_r must be divisible by p for equally spaced COs")
    gap = n_r // p if p > 0 and n_r else n_r  # p == 1: all nodes in one gap
    ring_size = p + n_r
    pos_of_co = []
    co_at_pos = [-1] * ring_size
    ring_pos_list = []  # ring positions of plain ring nodes, clockwise
    pos = 0
    for k in range(p):
        pos_of_co.append(pos)
        co_at_pos[pos] = k
        pos += 1
        take = gap if p > 1 else n_r
        for _ in range(take):
            ring_pos_list.append(pos)
            pos += 1
    hop_delay = (ring_circumference_m / ring_size / PROPAGATION_SPEED_M_S
                 if ring_size > 1 else 0.0)

    nodes = []
    for k in range(p):
        kind = KIND_HOTSPOT if k >= n_epon else KIND_CO
        nodes.append(Node(k, kind, co=k, ring_pos=pos_of_co[k]))
    for r, rp in enumerate(ring_pos_list):
        nodes.append(Node(p + r, KIND_RING, ring_pos=rp))
    next_id = p + n_r
    for k in range(n_epon):
        for kind, cnt in ((ONU_TDM, nt[k]), (ONU_WDM, nw[k]), (ONU_LR, nl[k])):
            for _ in range(cnt):
                nodes.append(Node(next_id, KIND_ONU, co=k, onu_kind=kind))
                next_id += 1

    return Topology(
        p=p, h=h, n_r=n_r, n_tdm=nt, n_wdm=nw, n_lr=nl,
        c_tdm=float(c_tdm), c_wdm=float(c_wdm), w=int(w),
        c_awg=float(c_awg), c_psc=float(c_psc), c_rpr=float(c_rpr),
        awg_channels=c_mat, home_channels=homes,
        tau_tree=float(tau_tree), tau_psc=float(tau_psc), tau_awg=float(tau_awg),
        ring_hop_delay=hop_delay, psc_frame=float(psc_frame),
        gpon_delta=float(gpon_delta), gpon_omega=float(gpon_omega),
        nodes=tuple(nodes), _pos_of_co=tuple(pos_of_co), _co_at_pos=tuple(co_at_pos),
    )


@dataclass(frozen=True)
class TrafficSpec:
    """Traffic scenario family and its parameters.

    kind            uniform | nonuniform_src | nonuniform_src_dst
    sigma           medium packet rate [packets/s]
    alpha           source non-uniformity (low nodes sigma/alpha, high alpha*sigma)
    beta            probability an LR/hotspot packet targets the LR/hotspot set
    n_low/.../n_high  per-EPON split of ONUs into rate classes (by node order)
    """

    kind: str = UNIFORM
    sigma: float = 1.0
    alpha: float = 1.0
    beta: float | None = None
    n_low: int = 0
    n_med: int = 0
    n_high: int = 0

    def __post_init__(self):
        if self.kind not in (UNIFORM, NONUNIFORM_SRC, NONUNIFORM_SRC_DST):
            raise ModelError(f"unknown traffic kind {self.kind!r}")
        if self.sigma <= 0:
            raise ModelError("sigma must be positive")
        if self.alpha < 1:
            raise ModelError("alpha must be >= 1")
        if self.kind == NONUNIFORM_SRC_DST and self.beta is None:
            raise ModelError("beta required for nonuniform_src_dst")


class TrafficMatrices:
    """Pair of packet-rate matrices: T over tree/ring/PSC, T^A over the AWG."""

    def __init__(self, topology: Topology, t: np.ndarray, t_awg: np.ndarray,
                 lengths: PacketLengthDist):
        self.topology = topology
        self.t = t
        self.t_awg = t_awg
        self.lengths = lengths
        self.sigma_i = t.sum(axis=1)
        self.sigma_awg_i = t_awg.sum(axis=1)
        self.r_t = lengths.mean_bits * float(self.sigma_i.sum() + self.sigma_awg_i.sum())

    def scaled(self, factor: float) -> "TrafficMatrices":
        return TrafficMatrices(self.topology, self.t * factor,
                               self.t_awg * factor, self.lengths)

    def scaled_to_rt(self, r_t_bps: float) -> "TrafficMatrices":
        return self.scaled(r_t_bps / self.r_t)

    def group_of(self, i: int) -> tuple:
        """Aggregation group: ('co', k) for ONUs, ('node', i) otherwise."""
        n = self.topology.nodes[i]
        if n.kind == KIND_ONU:
            return ("co", n.co)
        return ("node", i)

    def sigma_groups(self) -> dict:
        """Ring/PSC packet rates between COs, ring nodes, and hotspots.

        Intra-group traffic never enters the ring/PSC subnetwork and is
        excluded.
        """
        out: dict = {}
        nz = np.argwhere(self.t > 0)
        for i, j in nz:
            gi, gj = self.group_of(int(i)), self.group_of(int(j))
            if gi == gj:
                continue
            out[(gi, gj)] = out.get((gi, gj), 0.0) + float(self.t[i, j])
        return out


def _node_rates(topology: Topology, spec: TrafficSpec) -> np.ndarray:
    """Packet generation rate per node id (zero for plain COs)."""
    n_nodes = len(topology.nodes)
    rates = np.zeros(n_nodes)
    s, a = spec.sigma, spec.alpha
    uniform = spec.kind == UNIFORM
    for node in topology.nodes:
        if node.kind == KIND_RING:
            rates[node.ident] = s
        elif node.kind == KIND_HOTSPOT:
            rates[node.ident] = s if uniform else a * s
    for k in topology.epon_cos:
        onus = topology.onus_of(k)
        if uniform:
            for i in onus:
                rates[i] = s
            continue
        n = len(onus)
        if spec.n_low + spec.n_med + spec.n_high != n:
            raise ModelError("n_low + n_med + n_high must equal ONUs per CO")
        for idx, i in enumerate(onus):
            if idx < spec.n_low:
                rates[i] = s / a
            elif idx < spec.n_low + spec.n_med:
                rates[i] = s
            else:
                rates[i] = a * s
    return rates


def generate_traffic(topology: Topology, spec: TrafficSpec,
                     lengths: PacketLengthDist | None = None) -> TrafficMatrices:
    """Build (T, T^A) for the scenario.

    Destinations are uniform over the eta-1 other traffic nodes, except
    that under nonuniform_src_dst an LR/hotspot source targets the
    LR/hotspot peer set with total probability beta (uniform within the
    eta_LH - 1 peers) and spreads the rest uniformly over the non-LR/hotspot
    nodes.  Any pair of LR/hotspot nodes whose COs are AWG-connected has its
    traffic carried in T^A instead of T.
    """
    lengths = lengths or PacketLengthDist.uniform_bytes()
    rates = _node_rates(topology, spec)
    traffic = topology.traffic_nodes
    eta = len(traffic)
    if eta < 2:
        raise ModelError("need at least two traffic nodes")
    lh = set(topology.lr_and_hotspot_ids())
    eta_lh = len(lh)
    n_other = eta - eta_lh

    beta = spec.beta
    if spec.kind == NONUNIFORM_SRC_DST:
        beta_min = (eta_lh - 1) / (eta - 1)
        if beta < beta_min - 1e-12 or beta > 1 + 1e-12:
            raise ModelError(
                f"beta={beta} outside [{beta_min:.6f}, 1] for this topology")

    n_nodes = len(topology.nodes)
    t = np.zeros((n_nodes, n_nodes))
    t_awg = np.zeros((n_nodes, n_nodes))
    for i in traffic:
        ri = rates[i]
        if ri == 0:
            continue
        if spec.kind == NONUNIFORM_SRC_DST and i in lh and eta_lh > 1:
            w_lh = beta / (eta_lh - 1)
            w_rest = (1 - beta) / n_other if n_other else 0.0
            for j in traffic:
                if j == i:
                    continue
                t[i, j] = ri * (w_lh if j in lh else w_rest)
        else:
            for j in traffic:
                if j != i:
                    t[i, j] = ri / (eta - 1)

    # split AWG-eligible pairs out of T
    for i in lh:
        ki = topology.co_of_traffic_node(i)
        for j in lh:
            if i == j or t[i, j] == 0:
                continue
            kj = topology.co_of_traffic_node(j)
            if topology.awg_c(ki, kj) > 0:
                t_awg[i, j] = t[i, j]
                t[i, j] = 0.0
    return TrafficMatrices(topology, t, t_awg, lengths)


def from_raw_matrices(topology: Topology, t, t_awg=None,
                      lengths: PacketLengthDist | None = None) -> TrafficMatrices:
    """Escape hatch for caller-supplied per-pair matrices."""
    lengths = lengths or PacketLengthDist.uniform_bytes()
    t = np.asarray(t, dtype=float)
    t_awg = (np.zeros_like(t) if t_awg is None else np.asarray(t_awg, dtype=float))
    n = len(topology.nodes)
    if t.shape != (n, n) or t_awg.shape != (n, n):
        raise ModelError("matrices must be (num_nodes, num_nodes)")
    if np.any(np.diag(t)) or np.any(np.diag(t_awg)):
        raise ModelError("no self traffic allowed")
    if np.any((t > 0) & (t_awg > 0)):
        raise ModelError("a pair's traffic travels either T or T^A, not both")
    return TrafficMatrices(topology, t.copy(), t_awg.copy(), lengths)
