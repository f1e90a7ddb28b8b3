"""Scenario files: one JSON document with topology, traffic, packet_length,
and simulation sections.  Rates are bit/s, times seconds."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .model import (ModelError, PacketLengthDist, Topology, TrafficSpec,
                    build_topology)
from .simulator import SimConfig


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    traffic: TrafficSpec
    lengths: PacketLengthDist
    sim: SimConfig


_TOPOLOGY_KEYS = {
    "p", "h", "n_r", "n_tdm", "n_wdm", "n_lr", "c_tdm", "c_wdm", "w",
    "c_awg", "c_psc", "c_rpr", "awg_channels", "hotspot_home_channels",
    "tau_tree", "tau_psc", "tau_awg", "ring_circumference_m", "psc_frame",
    "gpon_delta", "gpon_omega",
}
_TRAFFIC_KEYS = {"kind", "sigma", "alpha", "beta", "n_low", "n_med", "n_high"}


def _section(doc, name, required=True):
    sec = doc.get(name)
    if sec is None:
        if required:
            raise ScenarioError(f"missing section {name!r}")
        return {}
    if not isinstance(sec, dict):
        raise ScenarioError(f"section {name!r} must be an object")
    return sec


def load_scenario(path: str) -> Scenario:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def scenario_from_dict(doc: dict) -> Scenario:
    topo_sec = _section(doc, "topology")
    unknown = set(topo_sec) - _TOPOLOGY_KEYS
    if unknown:
        raise ScenarioError(f"unknown topology fields: {sorted(unknown)}")
    traffic_sec = _section(doc, "traffic")
    unknown = set(traffic_sec) - _TRAFFIC_KEYS
    if unknown:
        raise ScenarioError(f"unknown traffic fields: {sorted(unknown)}")
    length_sec = _section(doc, "packet_length", required=False)
    sim_sec = _section(doc, "simulation", required=False)

    try:
        topology = build_topology(**topo_sec)
        traffic = TrafficSpec(**{k: v for k, v in traffic_sec.items()
                                 if v is not None})
    except (ModelError, TypeError) as exc:
        raise ScenarioError(str(exc)) from exc

    kind = length_sec.get("kind", "uniform_bytes")
    if kind == "uniform_bytes":
        lengths = PacketLengthDist.uniform_bytes(
            length_sec.get("min_bytes", 64), length_sec.get("max_bytes", 1518))
    elif kind == "deterministic":
        lengths = PacketLengthDist.deterministic(length_sec["bits"])
    else:
        raise ScenarioError(f"unknown packet_length kind {kind!r}")

    seed = int(os.environ.get("NGPON_SEED", sim_sec.get("seed", 1)))
    reps = int(os.environ.get("NGPON_REPLICATIONS",
                              sim_sec.get("replications", 5)))
    try:
        sim = SimConfig(seed=seed,
                        warmup_s=sim_sec.get("warmup_s", 0.1),
                        duration_s=sim_sec.get("duration_s", 1.0),
                        replications=reps)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    return Scenario(topology, traffic, lengths, sim)
