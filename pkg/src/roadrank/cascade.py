"""Ground-truth importance scores from simulated capacity failures.

A deterministic macroscopic surrogate: each segment carries a static
demand against a capacity proportional to lanes times speed limit.  When
a target segment's capacity is slashed, congestion spills back upstream
period by period; a segment fails the first period its speed drops below
a fraction of its limit, and the per-period failure counts are folded
into a single decayed score.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import RoadNetwork, ValidationError


@dataclass(frozen=True)
class CascadeConfig:
    """Failure-simulation knobs.

    ``capacity_reduction``: fraction of capacity the target keeps.
    ``failure_speed_fraction``: a segment fails when its speed drops
    strictly below this fraction of its limit.  ``gamma``/``periods`` set
    the decayed score; ``spillback_rate`` is the share of unmet demand
    pushed upstream each period.  ``kappa`` converts lanes x speed-limit
    into capacity and ``observation_window`` converts recorded volumes
    into demand; ``period_length`` is carried as metadata (the dynamics
    are scale-invariant in it).
    """

    capacity_reduction: float = 0.10
    failure_speed_fraction: float = 0.10
    gamma: float = 0.9
    periods: int = 10
    period_length: float = 1.0
    spillback_rate: float = 0.5
    kappa: float = 1.0
    observation_window: float = 1.0

    def __post_init__(self):
        for name in ("capacity_reduction", "failure_speed_fraction", "spillback_rate"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValidationError(f"{name} must be in (0, 1), got {v}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.periods < 1:
            raise ValidationError("periods must be >= 1")
        if self.kappa <= 0 or self.observation_window <= 0 or self.period_length <= 0:
            raise ValidationError("kappa, observation_window and period_length must be > 0")


@dataclass(frozen=True)
class ImportanceScores:
    """Per-node ground-truth score with its provenance."""

    aff: np.ndarray
    gamma: float | None
    periods: int | None
    provenance: str

    def __post_init__(self):
        self.aff.flags.writeable = False
        if (self.aff < 0).any() or not np.isfinite(self.aff).all():
            raise ValidationError("importance scores must be finite and >= 0")


@dataclass(frozen=True)
class BaselineState:
    """Pre-failure per-segment capacity, demand, and resulting speed."""

    capacity: np.ndarray
    demand: np.ndarray
    speed: np.ndarray


def _congested_speed(limiv: np.ndarray, capacity: np.ndarray, demand: np.ndarray) -> np.ndarray:
    # free flow at or below capacity, degraded proportionally above it
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(demand > 0, capacity / np.where(demand > 0, demand, 1.0), np.inf)
    return limiv * np.minimum(1.0, ratio)


def assign_baseline_state(net: RoadNetwork, kappa: float = 1.0,
                          observation_window: float = 1.0) -> BaselineState:
    """Derive capacities, demands, and speeds from segment attributes.

    ``capacity = nlan * limiv * kappa`` and ``demand = vol / window``;
    requires the attributes limiv, nlan, len, and vol.
    """
    for name in ("limiv", "nlan", "len", "vol"):
        net.attr_index(name)
    limiv = net.A[:, net.attr_index("limiv")]
    nlan = net.A[:, net.attr_index("nlan")]
    vol = net.A[:, net.attr_index("vol")]
    capacity = nlan * limiv * kappa
    demand = vol / observation_window
    return BaselineState(capacity=capacity, demand=demand,
                         speed=_congested_speed(limiv, capacity, demand))


def cascade_failure(net: RoadNetwork, state: BaselineState, target: int,
                    cfg: CascadeConfig) -> np.ndarray:
    """Simulate the failure of ``target`` and count newly failed segments
    per period.

    Period 1 applies the capacity reduction.  From period 2 on, each
    congested segment pushes ``spillback_rate`` times its unmet demand to
    its upstream in-neighbors (self-loops excluded), split by their demand
    share (uniformly if all upstream demand is zero).  A segment is failed
    the first period its speed is strictly below
    ``failure_speed_fraction * limiv``; each segment counts once.
    """
    if not 0 <= target < net.n:
        raise ValidationError(f"unknown target id {target}")
    limiv = net.A[:, net.attr_index("limiv")]
    in_neighbors = [
        np.array([i for i in np.flatnonzero(net.M[:, j]) if i != j], dtype=np.int64)
        for j in range(net.n)
    ]
    cap = state.capacity.copy()
    cap[target] *= cfg.capacity_reduction
    dem = state.demand.copy()
    failed = np.zeros(net.n, dtype=bool)
    counts = np.zeros(cfg.periods, dtype=np.int64)
    for t in range(1, cfg.periods + 1):
        if t > 1:
            unmet = np.maximum(dem - cap, 0.0)
            inc = np.zeros(net.n)
            for s in np.flatnonzero(unmet > 0):
                ups = in_neighbors[s]
                if ups.size == 0:
                    continue
                weights = dem[ups]
                total = weights.sum()
                share = weights / total if total > 0 else np.full(ups.size, 1.0 / ups.size)
                inc[ups] += cfg.spillback_rate * unmet[s] * share
            dem = dem + inc
        speed = _congested_speed(limiv, cap, dem)
        newly = (speed < cfg.failure_speed_fraction * limiv) & ~failed
        counts[t - 1] = int(newly.sum())
        failed |= newly
    return counts


def importance_score(counts, gamma: float) -> float:
    """Decayed failure count: sum over periods t of gamma^t * n_t."""
    counts = np.asarray(counts, dtype=np.float64)
    if (counts < 0).any():
        raise ValidationError("failure counts must be >= 0")
    t = np.arange(1, counts.size + 1, dtype=np.float64)
    return float(np.sum(np.power(gamma, t) * counts))


def generate_ground_truth(net: RoadNetwork, cfg: CascadeConfig) -> ImportanceScores:
    """Score every node by simulating its failure once."""
    state = assign_baseline_state(net, kappa=cfg.kappa,
                                  observation_window=cfg.observation_window)
    aff = np.empty(net.n)
    for target in range(net.n):
        aff[target] = importance_score(cascade_failure(net, state, target, cfg), cfg.gamma)
    return ImportanceScores(aff=aff, gamma=cfg.gamma, periods=cfg.periods,
                            provenance="simulated")


def save_scores(scores: ImportanceScores, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        fh.write("node_id,aff\n")
        for i, v in enumerate(scores.aff):
            fh.write(f"{i},{float(v)!r}\n")


def import_scores(path, n: int | None = None) -> ImportanceScores:
    """Read externally produced scores from a ``node_id,aff`` CSV.

    Ids must cover ``0..n-1`` exactly (``n`` defaults to the row count);
    scores must be non-negative.  When both imported scores and a simulator
    config are available, the imported scores win.
    """
    path = Path(path)
    rows: dict[int, float] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["node_id", "aff"]:
            raise ValidationError(f"{path}: expected header 'node_id,aff'")
        for ln, row in enumerate(reader, start=2):
            if not row:
                continue
            node = int(row[0])
            value = float(row[1])
            if node in rows:
                raise ValidationError(f"{path}:{ln}: duplicate node id {node}")
            if value < 0:
                raise ValidationError(f"{path}:{ln}: negative score for node {node}")
            rows[node] = value
    count = n if n is not None else len(rows)
    missing = sorted(set(range(count)) - set(rows))
    if missing:
        raise ValidationError(f"{path}: missing score for node {missing[0]}")
    extra = sorted(set(rows) - set(range(count)))
    if extra:
        raise ValidationError(f"{path}: unexpected node id {extra[0]}")
    aff = np.array([rows[i] for i in range(count)], dtype=np.float64)
    return ImportanceScores(aff=aff, gamma=None, periods=None, provenance="imported")
