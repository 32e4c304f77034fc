"""Routing-choice equilibria for sources sharing parallel exponential servers.

Each source spreads its updates over K parallel servers according to a
probability row; its cost is the closed-form age upper bound, which couples
the sources through the cross-traffic each one inflicts on the rest.  The
per-source optimum has a closed form (square-root weights, normalized), so
a Nash equilibrium is a fixed point of the joint best response.  This
module provides:

* the per-source cost and best response,
* a damped fixed-point iteration over the joint best response for a finite
  population of sources,
* the large-population limit, where the equilibrium collapses to K coupled
  scalar equations in transformed loads, solved by a projected damped
  iteration with an explicit sufficient step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_MAX_ITER",
    "DEFAULT_TOL",
    "GameResult",
    "GameSpec",
    "MeanFieldResult",
    "MeanFieldState",
    "best_response",
    "br_residual",
    "default_step_size",
    "finite_n_equilibrium",
    "game_cost",
    "joint_best_response",
    "mean_field_residual",
    "mean_field_routing",
    "mean_field_solve",
    "project_feasible",
    "step_size_bound",
    "uniform_routing",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class GameSpec:
    """Population of sources routing over parallel servers.

    ``lambdas`` are the per-source update rates, ``mus`` the per-server
    service rates, and ``n_buffer`` the common buffer size entering the
    cost through the ``1 + K*N`` offset.
    """

    lambdas: tuple[float, ...]
    mus: tuple[float, ...]
    n_buffer: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        object.__setattr__(self, "mus", tuple(float(m) for m in self.mus))
        if not self.lambdas:
            raise ValueError("at least one source is required")
        if not self.mus:
            raise ValueError("at least one server is required")
        if any(x <= 0 for x in self.lambdas):
            raise ValueError("source rates must be positive")
        if any(m < 0 for m in self.mus):
            raise ValueError("service rates must be nonnegative")
        if sum(self.mus) <= 0:
            raise ValueError("total service rate must be positive")
        if self.n_buffer != int(self.n_buffer) or self.n_buffer < 0:
            raise ValueError("buffer size must be a nonnegative integer")
        object.__setattr__(self, "n_buffer", int(self.n_buffer))

    @property
    def num_sources(self) -> int:
        return len(self.lambdas)

    @property
    def num_queues(self) -> int:
        return len(self.mus)

    @classmethod
    def from_dict(cls, data: dict) -> "GameSpec":
        return cls(
            lambdas=tuple(data["lambdas"]),
            mus=tuple(data["mus"]),
            n_buffer=data.get("n_buffer", 0),
        )

    def to_dict(self) -> dict:
        return {
            "lambdas": list(self.lambdas),
            "mus": list(self.mus),
            "n_buffer": self.n_buffer,
        }


@dataclass(frozen=True)
class GameResult:
    """Outcome of the damped joint-best-response iteration.

    ``residuals[t]`` is the sup-norm fixed-point defect of the iterate
    before the t-th update; ``row_history[t]`` is the first source's
    routing row at the same instant.  ``iterations`` counts the damped
    updates actually applied.
    """

    routing: np.ndarray
    residuals: np.ndarray
    row_history: np.ndarray
    iterations: int
    converged: bool


@dataclass(frozen=True)
class MeanFieldState:
    """Solved large-population loads.

    ``ratios`` are the scaled per-source service rates over the common
    arrival rate, ``y`` the transformed variables, and ``m = y**2 - ratios``
    the per-queue mean loads (summing to one at the fixed point).
    """

    ratios: tuple[float, ...]
    y: np.ndarray
    m: np.ndarray


@dataclass(frozen=True)
class MeanFieldResult:
    state: MeanFieldState
    residuals: np.ndarray
    y_history: np.ndarray
    iterations: int
    converged: bool


def uniform_routing(spec: GameSpec) -> np.ndarray:
    """Routing matrix spreading every source evenly over the servers."""
    k = spec.num_queues
    return np.full((spec.num_sources, k), 1.0 / k)


def _as_routing(routing: object, spec: GameSpec) -> np.ndarray:
    p = np.asarray(routing, dtype=float)
    if p.shape != (spec.num_sources, spec.num_queues):
        raise ValueError(
            f"routing must have shape {(spec.num_sources, spec.num_queues)}, "
            f"got {p.shape}"
        )
    if np.any(p < -1e-12):
        raise ValueError("routing entries must be nonnegative")
    if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("routing rows must sum to one")
    return p


def _cross_traffic(i: int, p: np.ndarray, spec: GameSpec) -> np.ndarray:
    lam = np.asarray(spec.lambdas)
    return lam @ p - lam[i] * p[i]


def game_cost(i: int, routing: object, spec: GameSpec) -> float:
    """Age upper bound seen by source ``i`` under the given routing.

    Returns ``inf`` when the source leaves any server without traffic of
    its own (the bound requires a positive fresh rate at every server).
    """
    p = _as_routing(routing, spec)
    own = spec.lambdas[i] * p[i]
    if np.any(own <= 0):
        return math.inf
    mus = np.asarray(spec.mus)
    cross = _cross_traffic(i, p, spec)
    k = spec.num_queues
    total = 1.0 + k * spec.n_buffer + np.sum((cross + mus) / own)
    return float(total / mus.sum())


def best_response(i: int, routing: object, spec: GameSpec) -> np.ndarray:
    """Cost-minimizing routing row for source ``i`` against the others.

    The minimizer weights each server by the square root of the traffic it
    would present to the source (cross-traffic plus service rate),
    normalized to the simplex; it does not depend on the source's own row.
    """
    p = _as_routing(routing, spec)
    w = np.sqrt(np.maximum(_cross_traffic(i, p, spec) + np.asarray(spec.mus), 0.0))
    total = w.sum()
    if total <= 0:
        raise ValueError(
            "every server has zero service rate and zero cross-traffic"
        )
    return w / total


def joint_best_response(routing: object, spec: GameSpec) -> np.ndarray:
    """Stack of all sources' best responses against the given profile."""
    p = _as_routing(routing, spec)
    lam = np.asarray(spec.lambdas)
    totals = lam @ p
    cross = totals[None, :] - lam[:, None] * p
    w = np.sqrt(np.maximum(cross + np.asarray(spec.mus)[None, :], 0.0))
    sums = w.sum(axis=1, keepdims=True)
    if np.any(sums <= 0):
        raise ValueError(
            "every server has zero service rate and zero cross-traffic"
        )
    return w / sums


def br_residual(routing: object, spec: GameSpec) -> float:
    """Sup-norm distance between a profile and its joint best response."""
    p = _as_routing(routing, spec)
    return float(np.max(np.abs(p - joint_best_response(p, spec))))


def finite_n_equilibrium(
    spec: GameSpec,
    alpha: float = 0.5,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    initial: object | None = None,
) -> GameResult:
    """Damped fixed-point iteration over the joint best response.

    Updates ``P <- (1 - alpha) * P + alpha * BR(P)`` from a uniform start
    (or ``initial``) until the fixed-point defect drops below ``tol``.
    Every iterate is a convex combination of rows on the simplex, hence
    itself on the simplex.  Non-convergence is reported through the
    ``converged`` flag, never as an exception.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("step size must lie in (0, 1]")
    p = uniform_routing(spec) if initial is None else _as_routing(initial, spec).copy()
    residuals = []
    rows = []
    converged = False
    for _ in range(max_iter + 1):
        br = joint_best_response(p, spec)
        residuals.append(float(np.max(np.abs(p - br))))
        rows.append(p[0].copy())
        if residuals[-1] < tol:
            converged = True
            break
        p = (1.0 - alpha) * p + alpha * br
    return GameResult(
        routing=p,
        residuals=np.asarray(residuals),
        row_history=np.asarray(rows),
        iterations=len(residuals) - 1,
        converged=converged,
    )


def step_size_bound(ratios: object) -> float:
    """Sufficient step size for the projected load iteration.

    Valid for strictly positive ratios; below this value the damped map is
    a contraction on the feasible box.
    """
    r = np.asarray(ratios, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("ratios must be a nonempty vector")
    if np.any(r <= 0):
        raise ValueError("the step-size formula needs strictly positive ratios")
    k = r.size
    return 2.0 / (k * k / np.sqrt(r).sum() ** 2 + k + 1.0)


def default_step_size(ratios: object) -> float:
    """Step size used when none is given: 0.9 x the sufficient bound.

    With zero ratios the bound formula is inapplicable; a conservative
    ``1 / (K**2 + K + 1)`` is used instead.
    """
    r = np.asarray(ratios, dtype=float)
    if np.all(r > 0):
        return 0.9 * step_size_bound(r)
    k = r.size
    return 1.0 / (k * k + k + 1.0)


def project_feasible(y: object, ratios: object) -> np.ndarray:
    """Clamp each transformed load into its feasible interval.

    Coordinate ``j`` lives in ``[sqrt(r_j), sqrt(1 + r_j)]``; the
    projection is idempotent and acts coordinatewise.
    """
    r = np.asarray(ratios, dtype=float)
    return np.clip(np.asarray(y, dtype=float), np.sqrt(r), np.sqrt(1.0 + r))


def _mean_field_map(y: np.ndarray, r: np.ndarray) -> np.ndarray:
    return 1.0 / y.sum() + r / y


def mean_field_residual(y: object, ratios: object) -> float:
    """Sup-norm defect of the transformed-load fixed-point equations."""
    yv = np.asarray(y, dtype=float)
    r = np.asarray(ratios, dtype=float)
    return float(np.max(np.abs(yv - _mean_field_map(yv, r))))


def mean_field_solve(
    ratios: object,
    alpha: float | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    initial: object | None = None,
) -> MeanFieldResult:
    """Solve the large-population load equations by projected damping.

    Iterates ``y <- clamp((1 - alpha) * y + alpha * f(y))`` with
    ``f_j(y) = 1/sum(y) + r_j/y_j`` until the sup-norm defect drops below
    ``tol``.  The default step size is 0.9 x the sufficient bound.  The
    per-queue loads are recovered as ``m = y**2 - r`` and sum to one at the
    fixed point.
    """
    r = np.asarray(ratios, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("ratios must be a nonempty vector")
    if np.any(r < 0):
        raise ValueError("ratios must be nonnegative")
    if alpha is None:
        alpha = default_step_size(r)
    if not 0.0 < alpha <= 1.0:
        raise ValueError("step size must lie in (0, 1]")
    if initial is None:
        y = np.sqrt(1.0 / r.size + r)
    else:
        y = project_feasible(initial, r)
    residuals = []
    history = []
    converged = False
    for _ in range(max_iter + 1):
        residuals.append(mean_field_residual(y, r))
        history.append(y.copy())
        if residuals[-1] < tol:
            converged = True
            break
        y = project_feasible((1.0 - alpha) * y + alpha * _mean_field_map(y, r), r)
    state = MeanFieldState(ratios=tuple(r), y=y, m=y * y - r)
    return MeanFieldResult(
        state=state,
        residuals=np.asarray(residuals),
        y_history=np.asarray(history),
        iterations=len(residuals) - 1,
        converged=converged,
    )


def mean_field_routing(state: MeanFieldState) -> np.ndarray:
    """Routing row every source uses in the large-population limit.

    Normalizes the transformed loads; at the fixed point this equals the
    per-queue loads ``m`` themselves.
    """
    return state.y / state.y.sum()
