"""Generic solver for age processes driven by finite-state Markov chains.

A model couples a continuous-time Markov chain (the discrete state ``q``)
with a continuous age vector ``x`` that grows at unit rate wherever the
per-state growth mask is 1 and is linearly remapped on every transition.
All remaps used here are column selectors: each output coordinate either
copies one input coordinate or resets to zero, so a reset map is stored as
one integer per output coordinate.

The long-run average age of coordinate 0 (the monitor age) is obtained by
solving, for every state ``q`` and coordinate ``i``,

    v_q(i) * sum(rates out of q)  =  b_q(i) * pi_q
                                     + sum over transitions l into q of
                                       rate_l * (v_source(l) . A_l)(i)

where self-loops count on both sides, and then summing v_q(0) over states.
The stationary distribution ``pi`` ignores self-loops (they carry no net
probability flow).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RESET_ZERO",
    "ResetMap",
    "ShsTransition",
    "ShsModel",
    "AoiSolution",
    "ShsError",
    "ReducibleChainError",
    "SingularSystemError",
    "NegativeSolutionError",
    "stationary_distribution",
    "solve_v_system",
    "average_aoi",
]

#: Sentinel for "this output coordinate resets to zero".
RESET_ZERO = -1

#: Residual ceiling for the dense linear solves (backward error, relative).
RESIDUAL_TOL = 1e-10

#: How negative a solved expectation may be before we call it invalid.
NONNEGATIVITY_TOL = 1e-9


class ShsError(Exception):
    """Base class for model/solver failures."""


class ReducibleChainError(ShsError):
    """The transition graph is not irreducible."""


class SingularSystemError(ShsError):
    """A linear system was singular or solved with unacceptable residual."""


class NegativeSolutionError(ShsError):
    """The v-system produced a meaningfully negative expectation."""


@dataclass(frozen=True)
class ResetMap:
    """Per-coordinate remap applied to the age vector on a transition.

    ``source[i]`` is the input coordinate copied into output coordinate
    ``i``, or :data:`RESET_ZERO` for a reset to zero.  This encodes exactly
    the 0/1 column-selector matrices ``x' = x A``.
    """

    source: tuple[int, ...]

    def __post_init__(self) -> None:
        for s in self.source:
            if s != RESET_ZERO and s < 0:
                raise ValueError(f"invalid reset source index {s}")

    @property
    def dim(self) -> int:
        return len(self.source)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Return x' = x A for a concrete age vector (used in tests/docs)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(len(self.source))
        for i, s in enumerate(self.source):
            if s != RESET_ZERO:
                out[i] = x[s]
        return out

    def matrix(self) -> np.ndarray:
        """The explicit selector matrix A with x' = x A."""
        n = len(self.source)
        a = np.zeros((n, n))
        for i, s in enumerate(self.source):
            if s != RESET_ZERO:
                a[s, i] = 1.0
        return a


@dataclass(frozen=True)
class ShsTransition:
    """One rated transition ``src -> dst`` with its age remap."""

    src: int
    dst: int
    rate: float
    reset: ResetMap

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise ValueError(f"transition rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class ShsModel:
    """A finite chain with age remaps and per-state growth masks.

    ``growth`` has shape (num_states, age_dim) with entries in {0, 1};
    column 0 must be all ones (the monitor age always grows).
    ``state_labels`` is optional documentation (e.g. occupancy tuples).
    """

    num_states: int
    age_dim: int
    transitions: tuple[ShsTransition, ...]
    growth: np.ndarray
    state_labels: tuple = ()

    def __post_init__(self) -> None:
        if self.num_states < 1 or self.age_dim < 1:
            raise ValueError("model needs at least one state and one age coordinate")
        g = np.asarray(self.growth, dtype=float)
        if g.shape != (self.num_states, self.age_dim):
            raise ValueError(
                f"growth shape {g.shape} != {(self.num_states, self.age_dim)}"
            )
        if not np.all((g == 0) | (g == 1)):
            raise ValueError("growth entries must be 0 or 1")
        if not np.all(g[:, 0] == 1):
            raise ValueError("growth[:, 0] must be all ones (monitor age grows)")
        object.__setattr__(self, "growth", g)
        for t in self.transitions:
            if not (0 <= t.src < self.num_states and 0 <= t.dst < self.num_states):
                raise ValueError(f"transition {t.src}->{t.dst} out of range")
            if t.reset.dim != self.age_dim:
                raise ValueError(
                    f"reset map dimension {t.reset.dim} != age_dim {self.age_dim}"
                )
            for s in t.reset.source:
                if s != RESET_ZERO and s >= self.age_dim:
                    raise ValueError(f"reset source index {s} >= age_dim")
        if self.state_labels and len(self.state_labels) != self.num_states:
            raise ValueError("state_labels length mismatch")


@dataclass(frozen=True)
class AoiSolution:
    """Stationary distribution, solved expectations, and the average age."""

    pi: np.ndarray
    v: np.ndarray
    average_aoi: float
    pi_residual: float = 0.0
    v_residual: float = 0.0


def _reachable(edges: dict[int, set[int]], start: int) -> set[int]:
    seen = {start}
    frontier = deque([start])
    while frontier:
        q = frontier.popleft()
        for nxt in edges.get(q, ()):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def _check_irreducible(model: ShsModel) -> None:
    fwd: dict[int, set[int]] = {}
    rev: dict[int, set[int]] = {}
    for t in model.transitions:
        if t.src != t.dst:
            fwd.setdefault(t.src, set()).add(t.dst)
            rev.setdefault(t.dst, set()).add(t.src)
    everything = set(range(model.num_states))
    unreachable = everything - _reachable(fwd, 0)
    cannot_return = everything - _reachable(rev, 0)
    if unreachable or cannot_return:
        bad = sorted(unreachable | cannot_return)
        labels = [
            model.state_labels[q] if model.state_labels else q for q in bad
        ]
        raise ReducibleChainError(
            f"chain is not irreducible; states not strongly connected to state 0: {labels}"
        )


def _relative_residual(mat: np.ndarray, x: np.ndarray, rhs: np.ndarray) -> float:
    """Backward-error style residual ||Mx - b|| / (||M|| ||x|| + ||b||)."""
    num = float(np.max(np.abs(mat @ x - rhs)))
    den = float(
        np.max(np.sum(np.abs(mat), axis=1)) * np.max(np.abs(x)) + np.max(np.abs(rhs))
    )
    return num / den if den > 0 else num


def stationary_distribution(model: ShsModel) -> np.ndarray:
    """Solve pi Q = 0, sum(pi) = 1 for the chain's generator.

    Self-loops are skipped: they contribute no net probability flow.
    Raises :class:`ReducibleChainError` when some state cannot be reached
    from (or cannot return to) state 0, and :class:`SingularSystemError`
    when the balance system cannot be solved accurately.
    """
    _check_irreducible(model)
    n = model.num_states
    gen = _generator(model)
    # Replace one balance equation with the normalization constraint.
    mat = gen.T.copy()
    mat[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"stationary solve failed: {exc}") from exc
    residual = float(np.max(np.abs(pi @ gen)))
    if not np.all(np.isfinite(pi)) or residual > 1e-8:
        raise SingularSystemError(
            f"stationary solve produced balance residual {residual:.3e}"
        )
    return pi


def _generator(model: ShsModel) -> np.ndarray:
    n = model.num_states
    gen = np.zeros((n, n))
    for t in model.transitions:
        if t.src != t.dst:
            gen[t.src, t.dst] += t.rate
            gen[t.src, t.src] -= t.rate
    return gen


def _assemble_v_system(
    model: ShsModel, pi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    n, d = model.num_states, model.age_dim
    size = n * d
    outflow = np.zeros(n)
    for t in model.transitions:
        outflow[t.src] += t.rate
    mat = np.zeros((size, size))
    for q in range(n):
        for i in range(d):
            mat[q * d + i, q * d + i] = outflow[q]
    for t in model.transitions:
        for i, s in enumerate(t.reset.source):
            if s != RESET_ZERO:
                mat[t.dst * d + i, t.src * d + s] -= t.rate
    rhs = (model.growth * pi[:, None]).reshape(size)
    return mat, rhs


def solve_v_system(model: ShsModel, pi: np.ndarray) -> np.ndarray:
    """Solve the dense linear system for all v_q(i), including coordinates
    that are irrelevant in some states (their equations are consistent and
    they are simply never read by the relevant ones).

    Returns an array of shape (num_states, age_dim).
    """
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (model.num_states,):
        raise ValueError("pi has wrong shape for model")
    mat, rhs = _assemble_v_system(model, pi)
    try:
        flat = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"v-system solve failed: {exc}") from exc
    residual = _relative_residual(mat, flat, rhs)
    if not np.all(np.isfinite(flat)) or residual > RESIDUAL_TOL:
        raise SingularSystemError(
            f"v-system solved with residual {residual:.3e} (> {RESIDUAL_TOL})"
        )
    v = flat.reshape((model.num_states, model.age_dim))
    worst = float(v.min())
    if worst < -NONNEGATIVITY_TOL:
        raise NegativeSolutionError(
            f"v-system has negative expectation {worst:.3e}; "
            "the age process likely diverges for these rates"
        )
    return v


def average_aoi(model: ShsModel) -> AoiSolution:
    """Stationary distribution + v-system; the average age is sum_q v_q(0)."""
    pi = stationary_distribution(model)
    v = solve_v_system(model, pi)
    pi_residual = float(np.max(np.abs(pi @ _generator(model))))
    mat, rhs = _assemble_v_system(model, pi)
    v_residual = _relative_residual(mat, v.reshape(-1), rhs)
    return AoiSolution(
        pi=pi,
        v=v,
        average_aoi=float(v[:, 0].sum()),
        pi_residual=pi_residual,
        v_residual=v_residual,
    )
