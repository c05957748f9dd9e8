"""Monte Carlo simulator of the slotted PPP network with a moving UE.

Each replication draws an independent PPP and random-walk trajectory from
its own RNG stream, derived from ``(seed, rep_index)``, so results do not
depend on how replications are spread over worker threads.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .model import (
    Alternate,
    MobilityModel,
    NetworkParams,
    Periodic,
    Scenario0,
    SkippingPolicy,
    ValidationError,
)

__all__ = [
    "SimConfig",
    "MetricEstimate",
    "TrajectoryTrace",
    "ReplicationResult",
    "WindowTooSmall",
    "default_interference_radius",
    "far_field_mean",
    "sample_ppp",
    "run_replication",
    "estimate",
    "replicate",
    "summarize",
    "mean_stderr",
    "crossing_count_oracle",
    "write_trace",
    "TRACE_COLUMNS",
]

TRACE_COLUMNS = ("slot", "x_km", "y_km", "serving_index", "sinr", "rate_nats", "ho_flag")
# far-field interference standard deviation allowed, relative to the signal
# power at half the mean nearest-BS distance
FAR_FIELD_REL_STD = 1e-3
_CHUNK = 2048


class WindowTooSmall(RuntimeError):
    """The trajectory plus guard band leaves the sampled window."""


def default_interference_radius(net: NetworkParams, rel_std: float = FAR_FIELD_REL_STD) -> float:
    """Radius R beyond which the fluctuation of the interference is negligible.

    Chooses the smallest R for which the standard deviation of the faded
    interference from BSs beyond R, sqrt(2 pi lam R^(2-2b) / (b-1)), is at
    most ``rel_std`` times (2 sqrt(lam))^b.
    """
    lam, beta = net.lam, net.beta
    ref = rel_std * (2 * math.sqrt(lam)) ** beta
    return (2 * math.pi * lam / ((beta - 1) * ref * ref)) ** (1 / (2 * beta - 2))


def far_field_mean(net: NetworkParams, radius: float) -> float:
    """Mean interference from BSs beyond ``radius``: 2 pi lam R^(2-b) / (b-2)."""
    return 2 * math.pi * net.lam * radius ** (2 - net.beta) / (net.beta - 2)


@dataclass(frozen=True)
class SimConfig:
    """Replication protocol.

    ``phase="stationary"`` starts the measurement window at a uniformly
    random slot of the first mobility cycle, so a window shorter than the
    skipping period still sees cycle ends at their long-run frequency.
    ``phase="aligned"`` starts it at slot 0, where the UE sits at the origin
    served by its nearest BS.
    """

    replications: int = 1000
    horizon_m: int = 1000
    seed: int = 0
    guard_radius: float | None = None
    interference_radius: float | None = None
    window_half_side: float | None = None
    mobility_cycle: int | None = None
    phase: str = "stationary"
    compute_rate: bool = True
    threads: int | None = None

    def __post_init__(self):
        if int(self.replications) != self.replications or self.replications < 1:
            raise ValidationError("replications must be an integer >= 1")
        if int(self.horizon_m) != self.horizon_m or self.horizon_m < 1:
            raise ValidationError("horizon_m must be an integer >= 1")
        if self.guard_radius is not None and not self.guard_radius > 0:
            raise ValidationError("guard_radius must be positive")
        if self.interference_radius is not None and not self.interference_radius > 0:
            raise ValidationError("interference_radius must be positive")
        if self.window_half_side is not None and not self.window_half_side > 0:
            raise ValidationError("window_half_side must be positive")
        if self.mobility_cycle is not None and (int(self.mobility_cycle) != self.mobility_cycle
                                                or self.mobility_cycle < 1):
            raise ValidationError("mobility_cycle must be an integer >= 1")
        if self.phase not in ("stationary", "aligned"):
            raise ValidationError("phase must be 'stationary' or 'aligned'")
        if self.threads is not None and self.threads < 1:
            raise ValidationError("threads must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer")

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("threads")
        return d

    def resolved_radius(self, net: NetworkParams) -> float:
        if self.interference_radius is not None:
            return self.interference_radius
        return default_interference_radius(net)

    def resolved_guard(self, net: NetworkParams) -> float:
        if self.guard_radius is not None:
            return self.guard_radius
        return max(self.resolved_radius(net), 5 / math.sqrt(net.lam))


@dataclass(frozen=True)
class MetricEstimate:
    mean: float
    stderr: float
    n: int
    kind: str  # "data_rate" or "ho_rate"
    provenance: str = "simulated"
    units: str = ""

    def z_score(self, target: float) -> float:
        diff = abs(target - self.mean)
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.stderr


@dataclass
class TrajectoryTrace:
    slot: np.ndarray
    x_km: np.ndarray
    y_km: np.ndarray
    serving_index: np.ndarray
    sinr: np.ndarray
    rate_nats: np.ndarray
    ho_flag: np.ndarray
    bs_positions: np.ndarray = field(repr=False, default=None)


class ReplicationResult(NamedTuple):
    sum_rate: float
    ho_count: int
    trace: TrajectoryTrace | None


def sample_ppp(window, lam: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP on ``window = (xmin, ymin, xmax, ymax)``; returns (n, 2)."""
    xmin, ymin, xmax, ymax = map(float, window)
    area = max(xmax - xmin, 0.0) * max(ymax - ymin, 0.0)
    if area <= 0:
        return np.empty((0, 2))
    n = rng.poisson(lam * area)
    pts = rng.random((n, 2))
    pts[:, 0] = xmin + pts[:, 0] * (xmax - xmin)
    pts[:, 1] = ymin + pts[:, 1] * (ymax - ymin)
    return pts


def _streams(seed: int, rep: int):
    ss = np.random.SeedSequence(seed, spawn_key=(rep,))
    return [np.random.default_rng(s) for s in ss.spawn(4)]


def _cycle_length(policy: SkippingPolicy, cfg: SimConfig) -> int:
    if cfg.mobility_cycle is not None:
        return int(cfg.mobility_cycle)
    if isinstance(policy, Periodic):
        return policy.s
    return cfg.horizon_m


class _Walk:
    """Piecewise-linear random walk starting at the origin at slot 0."""

    def __init__(self, mob: MobilityModel, cycle: int, n_cycles: int, rng):
        self.cycle = cycle
        speed = mob.speed.sample(rng, n_cycles)
        heading = mob.direction.sample(rng, n_cycles)
        self.vel = np.column_stack([speed * np.cos(heading), speed * np.sin(heading)])
        steps = self.vel * cycle
        self.starts = np.vstack([np.zeros((1, 2)), np.cumsum(steps, axis=0)])

    def at(self, slots: np.ndarray) -> np.ndarray:
        slots = np.asarray(slots)
        n = slots // self.cycle
        return self.starts[n] + (slots - n * self.cycle)[:, None] * self.vel[n]


def run_replication(net: NetworkParams, mob: MobilityModel, policy: SkippingPolicy,
                    cfg: SimConfig, rep_index: int, *, trace: bool = False) -> ReplicationResult:
    """Simulate one PPP and one trajectory over the measurement window.

    Rates are summed over the ``horizon_m`` window slots and handovers are
    counted on the ``horizon_m`` transitions leaving those slots.
    """
    rng_ppp, rng_mob, rng_fade, rng_phase = _streams(cfg.seed, rep_index)
    m = cfg.horizon_m
    cycle = _cycle_length(policy, cfg)
    phase = int(rng_phase.integers(cycle)) if cfg.phase == "stationary" else 0
    last = phase + m  # slot after the window, needed for the final transition
    walk = _Walk(mob, cycle, last // cycle + 1, rng_mob)

    slots = np.arange(phase, last + 1)
    pos = walk.at(slots)
    radius = cfg.resolved_radius(net)
    guard = cfg.resolved_guard(net)
    lo_xy = pos.min(axis=0)
    hi_xy = pos.max(axis=0)
    if isinstance(policy, Periodic):
        bounds_pts = walk.starts[: last // cycle + 1]
        lo_xy = np.minimum(lo_xy, bounds_pts.min(axis=0))
        hi_xy = np.maximum(hi_xy, bounds_pts.max(axis=0))
    if cfg.window_half_side is not None:
        half = cfg.window_half_side
        if np.any(hi_xy + guard > half) or np.any(lo_xy - guard < -half):
            raise WindowTooSmall(
                f"trajectory plus guard {guard:.3g} km exceeds window half-side {half:.3g} km")
        window = (-half, -half, half, half)
    else:
        mid = 0.5 * (lo_xy + hi_xy)
        half = 0.5 * float(np.max(hi_xy - lo_xy)) + guard
        window = (mid[0] - half, mid[1] - half, mid[0] + half, mid[1] + half)
    bs = sample_ppp(window, net.lam, rng_ppp)
    if len(bs) == 0:
        raise WindowTooSmall("no base station fell inside the sampled window")
    tree = cKDTree(bs)
    _, nearest = tree.query(pos)

    # serving BS per slot (window slots plus the one after)
    if isinstance(policy, Scenario0):
        serving = nearest
    elif isinstance(policy, Periodic):
        n_idx = slots // policy.s
        _, boundary_nearest = tree.query(walk.at(np.arange(n_idx[-1] + 1) * policy.s))
        serving = boundary_nearest[n_idx]
    elif isinstance(policy, Alternate):
        serving = _alternate_serving(nearest, tree, walk, phase)
    else:
        raise ValidationError(f"unsupported policy {policy!r}")

    changes = serving[1:] != serving[:-1]
    ho_count = int(np.count_nonzero(changes))

    sum_rate = 0.0
    sinr = np.full(m, np.nan)
    if cfg.compute_rate:
        sinr = _window_sinr(net, bs, pos[:m], serving[:m], radius, rng_fade)
        sum_rate = math.fsum(np.log1p(sinr))

    tr = None
    if trace:
        tr = TrajectoryTrace(
            slot=slots[:m].copy(), x_km=pos[:m, 0].copy(), y_km=pos[:m, 1].copy(),
            serving_index=serving[:m].astype(np.int64), sinr=sinr,
            rate_nats=np.log1p(sinr), ho_flag=changes.astype(np.int8), bs_positions=bs,
        )
    return ReplicationResult(sum_rate, ho_count, tr)


def _alternate_serving(nearest, tree, walk, phase):
    """Toggle execute/skip on every change of the nearest BS, starting with execute.

    The history from slot 0 (where the UE attaches to its nearest BS) up to
    the window start is replayed so the toggle state is consistent.
    """
    if phase > 0:
        _, before = tree.query(walk.at(np.arange(phase)))
        track = np.concatenate([before, nearest])
    else:
        track = nearest
    serving = np.empty_like(track)
    current = track[0]
    execute = True
    serving[0] = current
    for k in range(1, len(track)):
        if track[k] != track[k - 1]:
            if execute:
                current = track[k]
            execute = not execute
        serving[k] = current
    return serving[phase:]


def _window_sinr(net, bs, pos, serving, radius, rng):
    lam_far = far_field_mean(net, radius)
    out = np.empty(len(pos))
    for start in range(0, len(pos), _CHUNK):
        p = pos[start:start + _CHUNK]
        d2 = (p[:, 0:1] - bs[None, :, 0]) ** 2 + (p[:, 1:2] - bs[None, :, 1]) ** 2
        gain = np.power(np.maximum(d2, 1e-18), -net.beta / 2)
        fade = rng.exponential(1.0, d2.shape)
        power = np.where(d2 <= radius * radius, fade * gain, 0.0)
        rows = np.arange(len(p))
        sv = serving[start:start + _CHUNK]
        # the serving link is always faded, even if it lies beyond the radius
        signal = fade[rows, sv] * gain[rows, sv]
        power[rows, sv] = 0.0
        interference = power.sum(axis=1) + lam_far
        out[start:start + len(p)] = signal / (interference + net.sigma2)
    return out


def _thread_count(cfg: SimConfig) -> int:
    if cfg.threads is not None:
        return cfg.threads
    env = os.environ.get("HOSKIP_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValidationError(f"HOSKIP_THREADS must be an integer (got {env!r})") from None
        if n < 1:
            raise ValidationError("HOSKIP_THREADS must be >= 1")
        return n
    return 1


def mean_stderr(values) -> tuple[float, float]:
    x = np.asarray(values, dtype=float)
    n = len(x)
    mean = math.fsum(x) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((x - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def replicate(net, mob, policy, cfg: SimConfig) -> list[ReplicationResult]:
    """Run every replication; order of the returned list is the rep index."""
    reps = range(cfg.replications)
    threads = _thread_count(cfg)
    if threads == 1:
        return [run_replication(net, mob, policy, cfg, i) for i in reps]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: run_replication(net, mob, policy, cfg, i), reps))


def summarize(results, cfg: SimConfig) -> tuple[MetricEstimate, MetricEstimate]:
    m = cfg.horizon_m
    n = len(results)
    ho_mean, ho_se = mean_stderr([r.ho_count / m for r in results])
    ho = MetricEstimate(ho_mean, ho_se, n, "ho_rate", "simulated", "HOs/slot")
    if cfg.compute_rate:
        rate_mean, rate_se = mean_stderr([r.sum_rate / m for r in results])
    else:
        rate_mean = rate_se = math.nan
    rate = MetricEstimate(rate_mean, rate_se, n, "data_rate", "simulated", "nats/slot")
    return rate, ho


def estimate(net: NetworkParams, mob: MobilityModel, policy: SkippingPolicy,
             cfg: SimConfig) -> tuple[MetricEstimate, MetricEstimate]:
    """Per-slot data rate and HO rate averaged over independent replications."""
    return summarize(replicate(net, mob, policy, cfg), cfg)


def _count_changes(tree, a, b, ia, ib, depth):
    if ia == ib:
        return 0
    if depth == 0:
        return 1
    mid = 0.5 * (a + b)
    _, im = tree.query(mid)
    return (_count_changes(tree, a, mid, ia, im, depth - 1)
            + _count_changes(tree, mid, b, im, ib, depth - 1))


def crossing_count_oracle(lam: float, segment_length: float, rng: np.random.Generator,
                          reps: int, *, substeps: int = 4096, depth: int = 12) -> float:
    """Mean number of nearest-BS changes along a straight segment from the origin.

    The segment is sampled at ``substeps`` points; each sub-interval whose end
    points have different nearest BSs is bisected ``depth`` more times so
    that two boundaries inside one sub-interval are counted separately.
    """
    if segment_length < 0:
        raise ValidationError("segment_length must be nonnegative")
    if segment_length == 0:
        return 0.0
    guard = 5 / math.sqrt(lam)
    total = 0
    t = np.linspace(0.0, segment_length, substeps + 1)
    for _ in range(reps):
        psi = rng.uniform(0, 2 * math.pi)
        direction = np.array([math.cos(psi), math.sin(psi)])
        pts = t[:, None] * direction[None, :]
        lo = np.minimum(0, pts[-1]) - guard
        hi = np.maximum(0, pts[-1]) + guard
        bs = sample_ppp((lo[0], lo[1], hi[0], hi[1]), lam, rng)
        if len(bs) == 0:
            continue
        tree = cKDTree(bs)
        _, idx = tree.query(pts)
        for k in np.flatnonzero(idx[1:] != idx[:-1]):
            total += _count_changes(tree, pts[k], pts[k + 1], idx[k], idx[k + 1], depth)
    return total / reps


def write_trace(trace: TrajectoryTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in zip(trace.slot, trace.x_km, trace.y_km, trace.serving_index,
                       trace.sinr, trace.rate_nats, trace.ho_flag):
            w.writerow([int(row[0]), repr(float(row[1])), repr(float(row[2])), int(row[3]),
                        repr(float(row[4])), repr(float(row[5])), int(row[6])])
