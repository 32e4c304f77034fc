"""Discrete-event estimation of the monitored source's average age.

``simulate`` runs independent replications of the parallel-queue system
described by a :class:`~aoiq.models.QueueNetworkSpec`, integrates the age
staircase exactly between events, and aggregates the replications into a
mean with a Student-t 95% confidence interval.  Two interchangeable
engines execute the event loop: a pure-Python one and, when the compiled
extension is present, a Cython kernel that consumes the same random
stream draw for draw and therefore reproduces the Python engine's results
bit for bit.  ``trace`` exposes the raw event log for debugging and
golden tests.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..models import QueueNetworkSpec
from . import _engine
from ._engine import (
    ARRIVAL_OTHER,
    ARRIVAL_SRC1,
    DELIVERY,
    LOSS,
    PREEMPT,
    REPLACE,
)

try:
    from . import _kernel
except ImportError:
    _kernel = None

__all__ = [
    "ARRIVAL_OTHER",
    "ARRIVAL_SRC1",
    "DELIVERY",
    "EVENT_KINDS",
    "EventCounts",
    "LOSS",
    "PREEMPT",
    "REPLACE",
    "SimConfig",
    "SimReport",
    "available_engines",
    "format_trace",
    "simulate",
    "trace",
]

EVENT_KINDS = (ARRIVAL_SRC1, ARRIVAL_OTHER, DELIVERY, LOSS, PREEMPT, REPLACE)


@dataclass(frozen=True)
class SimConfig:
    """One simulation request: system, horizon, warmup fraction, repetitions."""

    spec: QueueNetworkSpec
    horizon: float = 1e5
    warmup: float = 0.1
    replications: int = 20
    seed: int = 42

    def __post_init__(self) -> None:
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if not 0.0 <= self.warmup <= 0.5:
            raise ValueError("warmup must be a fraction in [0, 0.5]")
        if self.replications != int(self.replications) or self.replications < 1:
            raise ValueError("replications must be a positive integer")
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class EventCounts:
    """Event totals accumulated over all replications."""

    arrivals: int
    deliveries: int
    losses: int
    preemptions: int
    replacements: int
    in_flight: int

    def __add__(self, other: "EventCounts") -> "EventCounts":
        return EventCounts(
            self.arrivals + other.arrivals,
            self.deliveries + other.deliveries,
            self.losses + other.losses,
            self.preemptions + other.preemptions,
            self.replacements + other.replacements,
            self.in_flight + other.in_flight,
        )


@dataclass(frozen=True)
class SimReport:
    """Aggregated simulation outcome.

    ``per_rep`` holds the age estimate of every replication that delivered
    at least one packet; ``excluded`` counts replications dropped for
    never delivering.  ``mean_occupancy`` is the time-average number of
    packets in the system, averaged over all replications.
    """

    mean_aoi: float
    ci95_halfwidth: float
    per_rep: tuple[float, ...]
    mean_occupancy: float
    counts: EventCounts
    excluded: int


def available_engines() -> tuple[str, ...]:
    """Engines usable on this installation ('kernel' needs the extension)."""
    return ("python", "kernel") if _kernel is not None else ("python",)


def _resolve_engine(engine: str) -> str:
    if engine == "auto":
        return "kernel" if _kernel is not None else "python"
    if engine == "kernel" and _kernel is None:
        raise RuntimeError(
            "the compiled simulation kernel is not available in this build"
        )
    if engine not in ("python", "kernel"):
        raise ValueError(f"unknown engine {engine!r}")
    return engine


def _queue_rates(spec: QueueNetworkSpec):
    lam1 = [spec.src1_rate(j) for j in range(spec.num_servers)]
    lamo = [spec.other_rate(j) for j in range(spec.num_servers)]
    mu = [s.mu for s in spec.servers]
    theta = [s.theta for s in spec.servers]
    cap = [s.buffer + 1 for s in spec.servers]
    return lam1, lamo, mu, theta, cap


def _rep_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, rep))))


def _run_one(spec_dict, horizon, warmup_time, seed, rep, engine):
    spec = QueueNetworkSpec.from_dict(spec_dict)
    lam1, lamo, mu, theta, cap = _queue_rates(spec)
    rng = _rep_rng(seed, rep)
    if engine == "kernel":
        return _kernel.run_replication(
            np.asarray(lam1), np.asarray(lamo), np.asarray(mu),
            np.asarray(theta), np.asarray(cap, dtype=np.int64),
            horizon, warmup_time, rng,
        )
    return _engine.run_replication(
        lam1, lamo, mu, theta, cap, horizon, warmup_time, rng
    )


def simulate(config: SimConfig, engine: str = "auto", workers: int = 1) -> SimReport:
    """Run all replications and aggregate them into a :class:`SimReport`.

    Replication ``r`` draws from its own generator seeded by
    ``(config.seed, r)``, so results do not depend on ``workers`` and are
    reproducible for a fixed engine.  Replications that never deliver a
    packet are excluded from the age statistics with a warning; if none
    delivers, a ``RuntimeError`` is raised.
    """
    engine = _resolve_engine(engine)
    warmup_time = config.warmup * config.horizon
    args = [
        (config.spec.to_dict(), config.horizon, warmup_time, config.seed, rep, engine)
        for rep in range(config.replications)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, *zip(*args)))
    else:
        outcomes = [_run_one(*a) for a in args]

    estimates = []
    occupancy = []
    counts = EventCounts(0, 0, 0, 0, 0, 0)
    for aoi, occ, raw in outcomes:
        occupancy.append(occ)
        counts = counts + EventCounts(*raw)
        if not math.isnan(aoi):
            estimates.append(aoi)
    excluded = config.replications - len(estimates)
    if not estimates:
        raise RuntimeError("no replication delivered a packet within the horizon")
    if excluded:
        warnings.warn(
            f"{excluded} of {config.replications} replications delivered no "
            "packet and were excluded from the age estimate"
        )
    values = np.asarray(estimates)
    if values.size >= 2:
        sem = values.std(ddof=1) / math.sqrt(values.size)
        halfwidth = float(stats.t.ppf(0.975, values.size - 1) * sem)
    else:
        halfwidth = math.inf
    return SimReport(
        mean_aoi=float(values.mean()),
        ci95_halfwidth=halfwidth,
        per_rep=tuple(estimates),
        mean_occupancy=float(np.mean(occupancy)),
        counts=counts,
        excluded=excluded,
    )


def trace(config: SimConfig, max_events: int = 1000) -> list[tuple[float, int, str]]:
    """Event log of the first replication, capped at ``max_events`` entries.

    Deterministic for a fixed config: the log always comes from the
    Python engine, whose stream the compiled kernel mirrors exactly.
    """
    if max_events < 1:
        raise ValueError("max_events must be positive")
    lam1, lamo, mu, theta, cap = _queue_rates(config.spec)
    events: list[tuple[float, int, str]] = []
    _engine.run_replication(
        lam1, lamo, mu, theta, cap,
        config.horizon, config.warmup * config.horizon,
        _rep_rng(config.seed, 0),
        record=events, max_events=max_events,
    )
    return events[:max_events]


def format_trace(events) -> str:
    """Render an event log as tab-separated ``time<TAB>queue<TAB>kind`` lines."""
    return "".join(f"{t!r}\t{q}\t{kind}\n" for t, q, kind in events)
