"""Closed-form age bounds and reference formulas for parallel queues.

The main result: for K parallel M/M/1/(N+1)* queues without losses, the
average age of source 1 is at most

    (1 / sum_j mu_j) * (1 + K N + sum_j (c_j + mu_j) / s_j)

where s_j is source 1's arrival rate at queue j and c_j the aggregated
background arrival rate there.  The bound follows from a pessimistic
"fake refill" system in which every queue stays permanently full, which
is also reproduced here as an independent recursion
(:func:`bound_recursion_check`).

Two companion formulas support comparisons: the age of a single queue
serving K stacked copies of the flow (:func:`scaled_single_queue_aoi`)
and the age of a centralized dispatcher that always knows the freshest
update (:func:`centralized_routing_aoi`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .models import QueueNetworkSpec

__all__ = [
    "BoundInput",
    "upper_bound",
    "bound_recursion_check",
    "scaled_single_queue_aoi",
    "centralized_routing_aoi",
]


@dataclass(frozen=True)
class BoundInput:
    """Per-queue rates for the bound: service, source-1 and background arrivals.

    ``src1[j]`` may be zero — the bound is then infinite for that queue
    (signaled by :func:`upper_bound` returning ``math.inf``, not an error).
    Losses are outside the bound's assumptions, so inputs are loss-free by
    construction; see :meth:`from_network`.
    """

    mu: tuple[float, ...]
    src1: tuple[float, ...]
    cross: tuple[float, ...]
    n_buffer: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", tuple(float(x) for x in self.mu))
        object.__setattr__(self, "src1", tuple(float(x) for x in self.src1))
        object.__setattr__(self, "cross", tuple(float(x) for x in self.cross))
        k = len(self.mu)
        if k == 0:
            raise ValueError("need at least one queue")
        if len(self.src1) != k or len(self.cross) != k:
            raise ValueError("mu, src1 and cross must have equal length")
        if any(m <= 0 for m in self.mu):
            raise ValueError("service rates must be positive")
        if any(x < 0 for x in self.src1) or any(x < 0 for x in self.cross):
            raise ValueError("arrival rates must be >= 0")
        if self.n_buffer < 0 or int(self.n_buffer) != self.n_buffer:
            raise ValueError("buffer size must be a nonnegative integer")

    @property
    def num_queues(self) -> int:
        return len(self.mu)

    @classmethod
    def from_network(cls, spec: QueueNetworkSpec) -> "BoundInput":
        """Project a loss-free network with uniform buffers onto bound inputs."""
        if any(s.theta > 0 for s in spec.servers):
            raise ValueError(
                "the bound assumes loss-free queues; set theta = 0 everywhere"
            )
        buffers = {s.buffer for s in spec.servers}
        if len(buffers) != 1:
            raise ValueError("the bound assumes one buffer size shared by all queues")
        k = spec.num_servers
        return cls(
            mu=tuple(s.mu for s in spec.servers),
            src1=tuple(spec.src1_rate(j) for j in range(k)),
            cross=tuple(spec.other_rate(j) for j in range(k)),
            n_buffer=buffers.pop(),
        )


def upper_bound(inp: BoundInput) -> float:
    """Evaluate the closed-form bound; ``inf`` if some queue gets no fresh flow."""
    if any(s == 0 for s in inp.src1):
        return math.inf
    k = inp.num_queues
    total_mu = sum(inp.mu)
    tail = sum(
        (c + m) / s for c, m, s in zip(inp.cross, inp.mu, inp.src1)
    )
    return (1.0 + k * inp.n_buffer + tail) / total_mu


def bound_recursion_check(inp: BoundInput) -> float:
    """Rebuild the bound from the fake-refill system's expectations.

    In the always-full system, the last buffer slot of queue j satisfies
    ``mu_j v_jN = 1 + (c_j + mu_j)/s_j``, each earlier slot adds a unit of
    service time (``mu_j v_j1 = N - 1 + mu_j v_jN``), and the monitor is
    refreshed by whichever queue delivers first
    (``v_0 sum_j mu_j = 1 + sum_j mu_j v_j1``).  Must equal
    :func:`upper_bound` identically.
    """
    if any(s == 0 for s in inp.src1):
        return math.inf
    total_mu = sum(inp.mu)
    acc = 1.0
    for c, m, s in zip(inp.cross, inp.mu, inp.src1):
        mu_v_last = 1.0 + (c + m) / s
        mu_v_first = inp.n_buffer - 1 + mu_v_last
        acc += mu_v_first
    return acc / total_mu


def scaled_single_queue_aoi(k: int, lam: float, mu: float) -> float:
    """Age of one preemptive queue serving K stacked copies of the flow: K/lam + 1/mu."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if lam <= 0 or mu <= 0:
        raise ValueError("rates must be positive")
    return k / lam + 1.0 / mu


def centralized_routing_aoi(k: int, rho: float, mu: float) -> float:
    """Age of K homogeneous queues behind an omniscient dispatcher.

    Evaluates, with offered load rho = lam / mu and the conventions
    empty product = 1, empty sum = 0:

        (1/mu) * ( (1/K) prod_{i=1}^{K-1} rho/(i+rho)
                   + 1/rho
                   + (1/rho) sum_{l=1}^{K-1} prod_{i=1}^{l} rho/(i+rho) )
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if rho <= 0 or mu <= 0:
        raise ValueError("rho and mu must be positive")
    prod = 1.0
    partial_sum = 0.0
    for i in range(1, k):
        prod *= rho / (i + rho)
        partial_sum += prod
    return (prod / k + 1.0 / rho + partial_sum / rho) / mu
