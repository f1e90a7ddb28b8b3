"""Simulation configuration, statistics, and replication helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _stats


@dataclass(frozen=True)
class SimConfig:
    """Replicated-run setup: identical (config, seed) means identical output."""

    seed: int = 1
    warmup_s: float = 0.1
    duration_s: float = 1.0
    replications: int = 5

    def __post_init__(self):
        if self.warmup_s < 0 or self.duration_s <= 0:
            raise ValueError("need warmup >= 0 and duration > 0")
        if self.replications < 1:
            raise ValueError("need at least one replication")

    def spawned_seeds(self):
        ss = np.random.SeedSequence(self.seed)
        return [int(s.generate_state(1)[0]) for s in ss.spawn(self.replications)]


@dataclass
class SimStats:
    """Per-class mean delays with 95% confidence intervals over replications.

    CI half-widths are Student-t based and reported as NaN for fewer than
    five replications.
    """

    mean_delay: dict            # class -> seconds
    ci_halfwidth: dict          # class -> seconds (NaN if < 5 replications)
    sample_count: dict          # class -> packets per replication (summed)
    throughput_bps: float
    throughput_ci: float
    utilization: dict = field(default_factory=dict)
    generated: int = 0
    delivered: int = 0

    def compatible_classes(self):
        return sorted(self.mean_delay)


def t_halfwidth(samples) -> float:
    n = len(samples)
    if n < 5:
        return math.nan
    mean = sum(samples) / n
    var = sum((x - mean) ** 2 for x in samples) / (n - 1)
    if var == 0:
        return 0.0
    return float(_stats.t.ppf(0.975, n - 1)) * math.sqrt(var / n)


def aggregate_replications(per_rep_means, per_rep_counts, per_rep_tput,
                           per_rep_util=None, generated=0, delivered=0) -> SimStats:
    """Combine per-replication class means into a SimStats."""
    classes = sorted({c for m in per_rep_means for c in m})
    mean_delay, ci, counts = {}, {}, {}
    for c in classes:
        vals = [m[c] for m in per_rep_means if c in m]
        mean_delay[c] = sum(vals) / len(vals)
        ci[c] = t_halfwidth(vals)
        counts[c] = sum(m.get(c, 0) for m in per_rep_counts)
    tput = sum(per_rep_tput) / len(per_rep_tput)
    util = {}
    if per_rep_util:
        keys = sorted({k for u in per_rep_util for k in u})
        for k in keys:
            vals = [u[k] for u in per_rep_util if k in u]
            util[k] = sum(vals) / len(vals)
    return SimStats(mean_delay, ci, counts, tput, t_halfwidth(per_rep_tput),
                    util, generated, delivered)
