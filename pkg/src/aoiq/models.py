"""Parallel lossy-queue networks and their age models.

A network is K exponential servers fed by n Poisson sources through a
probabilistic routing matrix.  Each server j has service rate ``mu``, an
exponential in-service loss rate ``theta``, and a FIFO buffer of size
``buffer``:

* ``buffer == 0``: an arrival preempts the update in service.
* ``buffer >= 1``: arrivals queue behind the one in service; when the
  buffer is full the **last waiting** update is replaced by the new one.

Only source 1's age at the monitor is analyzed; all other sources are
aggregated into a single background Poisson stream per queue.  The age
model for any such network is generated mechanically from the queue
semantics: the discrete state is the vector of queue occupancies, the age
vector holds the monitor age plus one tagged age per queue position, and
every arrival/delivery/loss event contributes one rated transition with a
column-selector reset map.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .shs import RESET_ZERO, ResetMap, ShsModel, ShsTransition

__all__ = [
    "Server",
    "QueueNetworkSpec",
    "ModelKind",
    "kind_of",
    "build_model",
    "build_network_model",
    "closed_form_pi",
    "mm11_exact_aoi",
    "comparison_specs",
]

_ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Server:
    """One exponential server: service rate, in-service loss rate, buffer."""

    mu: float
    theta: float = 0.0
    buffer: int = 0

    def __post_init__(self) -> None:
        if self.mu < 0 or self.theta < 0:
            raise ValueError("service and loss rates must be >= 0")
        if self.buffer < 0 or int(self.buffer) != self.buffer:
            raise ValueError("buffer size must be a nonnegative integer")


@dataclass(frozen=True)
class QueueNetworkSpec:
    """Sources, servers, and the routing matrix p[i][j] (source i -> queue j).

    Source 0 is the monitored source and must have positive rate; every
    routing row lives on the probability simplex.
    """

    sources: tuple[float, ...]
    servers: tuple[Server, ...]
    routing: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sources", tuple(float(s) for s in self.sources))
        object.__setattr__(self, "servers", tuple(self.servers))
        object.__setattr__(
            self, "routing", tuple(tuple(float(p) for p in row) for row in self.routing)
        )
        if not self.sources:
            raise ValueError("need at least one source")
        if any(s < 0 for s in self.sources):
            raise ValueError("source rates must be >= 0")
        if self.sources[0] <= 0:
            raise ValueError("the monitored source must have positive rate")
        if not self.servers:
            raise ValueError("need at least one server")
        if len(self.routing) != len(self.sources):
            raise ValueError("routing needs one row per source")
        for row in self.routing:
            if len(row) != len(self.servers):
                raise ValueError("routing rows need one entry per server")
            if any(p < 0 or p > 1 for p in row):
                raise ValueError("routing entries must lie in [0, 1]")
            if abs(sum(row) - 1.0) > _ROW_SUM_TOL:
                raise ValueError(f"routing row sums to {sum(row)!r}, expected 1")

    # -- convenience constructors -------------------------------------------

    @classmethod
    def single_queue(
        cls,
        lambda1: float,
        lambda_rest: float = 0.0,
        mu: float = 1.0,
        theta: float = 0.0,
        buffer: int = 0,
    ) -> "QueueNetworkSpec":
        return cls(
            sources=(lambda1, lambda_rest),
            servers=(Server(mu=mu, theta=theta, buffer=buffer),),
            routing=((1.0,), (1.0,)),
        )

    @classmethod
    def symmetric_parallel(
        cls,
        num_servers: int,
        lambda1: float,
        lambda_rest: float = 0.0,
        mu: float = 1.0,
        theta: float = 0.0,
        buffer: int = 0,
    ) -> "QueueNetworkSpec":
        row = (1.0 / num_servers,) * num_servers
        return cls(
            sources=(lambda1, lambda_rest),
            servers=tuple(
                Server(mu=mu, theta=theta, buffer=buffer) for _ in range(num_servers)
            ),
            routing=(row, row),
        )

    # -- derived quantities --------------------------------------------------

    @property
    def num_sources(self) -> int:
        return len(self.sources)

    @property
    def num_servers(self) -> int:
        return len(self.servers)

    def src1_rate(self, j: int) -> float:
        """Arrival rate of the monitored source at queue j."""
        return self.sources[0] * self.routing[0][j]

    def other_rate(self, j: int) -> float:
        """Aggregated arrival rate of all background sources at queue j."""
        return sum(
            self.sources[i] * self.routing[i][j] for i in range(1, len(self.sources))
        )

    def arrival_rate(self, j: int) -> float:
        return self.src1_rate(j) + self.other_rate(j)

    def rho(self, j: int) -> float:
        """Load of queue j: total arrivals over (service + loss) rate."""
        denom = self.servers[j].mu + self.servers[j].theta
        if denom <= 0:
            raise ValueError(f"server {j} has mu + theta = 0; load undefined")
        return self.arrival_rate(j) / denom

    # -- (de)serialization ----------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "QueueNetworkSpec":
        servers = tuple(
            Server(
                mu=float(s["mu"]),
                theta=float(s.get("theta", 0.0)),
                buffer=int(s.get("buffer", 0)),
            )
            for s in data["servers"]
        )
        return cls(
            sources=tuple(float(x) for x in data["sources"]),
            servers=servers,
            routing=tuple(tuple(float(p) for p in row) for row in data["routing"]),
        )

    def to_dict(self) -> dict:
        return {
            "sources": list(self.sources),
            "servers": [
                {"mu": s.mu, "theta": s.theta, "buffer": s.buffer}
                for s in self.servers
            ],
            "routing": [list(row) for row in self.routing],
        }

    @classmethod
    def load(cls, path: str) -> "QueueNetworkSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class ModelKind(Enum):
    """The four exactly-solved network shapes."""

    SINGLE_NO_BUFFER = "single-nobuffer"
    TWO_PARALLEL_NO_BUFFER = "two-parallel-nobuffer"
    SINGLE_BUFFER2 = "single-buffer2"
    TWO_PARALLEL_BUFFER1 = "two-parallel-buffer1"


_KIND_SHAPES: dict[ModelKind, tuple[int, ...]] = {
    ModelKind.SINGLE_NO_BUFFER: (0,),
    ModelKind.TWO_PARALLEL_NO_BUFFER: (0, 0),
    ModelKind.SINGLE_BUFFER2: (2,),
    ModelKind.TWO_PARALLEL_BUFFER1: (1, 1),
}


def _require_shape(kind: ModelKind, spec: QueueNetworkSpec) -> None:
    buffers = tuple(s.buffer for s in spec.servers)
    if buffers != _KIND_SHAPES[kind]:
        raise ValueError(
            f"{kind.value} needs per-server buffers {_KIND_SHAPES[kind]}, "
            f"got {buffers}"
        )


def kind_of(spec: QueueNetworkSpec) -> ModelKind | None:
    """The named shape matching this spec, or None for other topologies."""
    buffers = tuple(s.buffer for s in spec.servers)
    for kind, shape in _KIND_SHAPES.items():
        if buffers == shape:
            return kind
    return None


def build_network_model(spec: QueueNetworkSpec) -> ShsModel:
    """Generate the age model of any parallel-queue network.

    State: the occupancy vector (k_1, ..., k_K), k_j in 0..buffer_j + 1,
    enumerated lexicographically.  Age coordinates: 0 is the monitor age,
    then one block per queue with one slot per position (in service first,
    then buffer slots front to back).  Coordinates above a queue's
    occupancy are reset to zero by every transition (they carry no
    information and do not grow).
    """
    k_srv = spec.num_servers
    caps = [s.buffer + 1 for s in spec.servers]
    offsets = [1 + sum(caps[:j]) for j in range(k_srv)]
    age_dim = 1 + sum(caps)

    states = list(itertools.product(*[range(m + 1) for m in caps]))
    index = {occ: i for i, occ in enumerate(states)}

    growth = np.zeros((len(states), age_dim))
    growth[:, 0] = 1.0
    for q, occ in enumerate(states):
        for j in range(k_srv):
            for m in range(occ[j]):
                growth[q, offsets[j] + m] = 1.0

    def finalize(reset: list[int], dst: tuple[int, ...]) -> ResetMap:
        out = list(reset)
        for j in range(k_srv):
            for m in range(dst[j], caps[j]):
                out[offsets[j] + m] = RESET_ZERO
        return ResetMap(tuple(out))

    transitions: list[ShsTransition] = []

    def add(src: tuple[int, ...], dst: tuple[int, ...], rate: float, reset: list[int]):
        transitions.append(
            ShsTransition(
                src=index[src], dst=index[dst], rate=rate, reset=finalize(reset, dst)
            )
        )

    identity = list(range(age_dim))
    for occ in states:
        for j in range(k_srv):
            k, cap, off = occ[j], caps[j], offsets[j]
            a1 = spec.src1_rate(j)
            ao = spec.other_rate(j)
            mu = spec.servers[j].mu
            theta = spec.servers[j].theta

            if k < cap:
                dst = occ[:j] + (k + 1,) + occ[j + 1 :]
                # Fresh update appended at position k+1.
                if a1 > 0:
                    reset = identity.copy()
                    reset[off + k] = RESET_ZERO
                    add(occ, dst, a1, reset)
                if ao > 0:
                    reset = identity.copy()
                    # A background update entering service is as old as the
                    # monitor; one queued behind inherits its predecessor's age.
                    reset[off + k] = 0 if k == 0 else off + k - 1
                    add(occ, dst, ao, reset)
            else:
                # Queue full: preempt the one in service (no buffer) or
                # replace the last waiting update (buffered).
                slot = off if cap == 1 else off + cap - 1
                if a1 > 0:
                    reset = identity.copy()
                    reset[slot] = RESET_ZERO
                    add(occ, occ, a1, reset)
                if ao > 0:
                    reset = identity.copy()
                    reset[slot] = 0 if cap == 1 else slot - 1
                    add(occ, occ, ao, reset)

            if k >= 1:
                dst = occ[:j] + (k - 1,) + occ[j + 1 :]
                shift = identity.copy()
                for m in range(1, k):
                    shift[off + m - 1] = off + m
                if mu > 0:
                    reset = shift.copy()
                    reset[0] = off  # the delivered update refreshes the monitor
                    add(occ, dst, mu, reset)
                if theta > 0:
                    add(occ, dst, theta, shift.copy())

    return ShsModel(
        num_states=len(states),
        age_dim=age_dim,
        transitions=tuple(transitions),
        growth=growth,
        state_labels=tuple(states),
    )


def build_model(kind: ModelKind, spec: QueueNetworkSpec) -> ShsModel:
    """Build the age model for one of the named network shapes."""
    _require_shape(kind, spec)
    return build_network_model(spec)


def closed_form_pi(kind: ModelKind, spec: QueueNetworkSpec) -> np.ndarray:
    """Product of truncated-geometric marginals, one per queue.

    Queue j holding k updates has probability rho_j^k / sum_m rho_j^m with
    rho_j = (arrivals at j) / (mu_j + theta_j); queues are independent, and
    the flattening order matches :func:`build_network_model`'s state order.
    """
    _require_shape(kind, spec)
    pi = np.ones(1)
    for j, srv in enumerate(spec.servers):
        rho = spec.rho(j)
        weights = np.array([rho**m for m in range(srv.buffer + 2)])
        pi = np.outer(pi, weights / weights.sum()).reshape(-1)
    return pi


def mm11_exact_aoi(
    lambda1: float, lambda_rest: float, theta: float, mu: float
) -> float:
    """Exact average age of a preemptive single-server system (no buffer).

    For source rate ``lambda1``, background rate ``lambda_rest``, loss rate
    ``theta``, and service rate ``mu``:

        1/lambda1 + theta/(lambda1 mu) + (lambda1 + lambda_rest)/(lambda1 mu)
    """
    if lambda1 <= 0 or mu <= 0:
        raise ValueError("lambda1 and mu must be positive (age is infinite otherwise)")
    if lambda_rest < 0 or theta < 0:
        raise ValueError("lambda_rest and theta must be >= 0")
    lam = lambda1 + lambda_rest
    return 1.0 / lambda1 + theta / (lambda1 * mu) + lam / (lambda1 * mu)


def comparison_specs(
    family: str,
    lambda1: float,
    lambda_rest: float = 0.0,
    theta: float = 0.0,
    mu: float = 1.0,
) -> dict[str, QueueNetworkSpec]:
    """The classic three-way load-balancing comparison.

    ``routing``: two parallel queues splitting the full traffic 50/50, each
    with service ``mu`` and loss ``theta/2``.  ``half``: one queue seeing
    half the traffic with service ``mu`` and loss ``theta/2`` (same per-queue
    load as ``routing``).  ``double``: one queue seeing all traffic with
    service ``2 mu`` and loss ``theta``.

    ``family`` is ``"nobuffer"`` (preemptive, buffers 0/0/0) or ``"buffer"``
    (routing queues get buffer 1, single queues buffer 2, so total capacity
    matches).
    """
    if family == "nobuffer":
        buf_routing, buf_single = 0, 0
    elif family == "buffer":
        buf_routing, buf_single = 1, 2
    else:
        raise ValueError(f"unknown family {family!r}; use 'nobuffer' or 'buffer'")
    return {
        "routing": QueueNetworkSpec.symmetric_parallel(
            2, lambda1, lambda_rest, mu=mu, theta=theta / 2, buffer=buf_routing
        ),
        "half": QueueNetworkSpec.single_queue(
            lambda1 / 2, lambda_rest / 2, mu=mu, theta=theta / 2, buffer=buf_single
        ),
        "double": QueueNetworkSpec.single_queue(
            lambda1, lambda_rest, mu=2 * mu, theta=theta, buffer=buf_single
        ),
    }
