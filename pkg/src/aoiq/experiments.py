"""Named experiment sweeps emitting CSV files.

Each experiment kind fixes a CSV schema and a computation per row:

* ``compare-nobuffer`` / ``compare-buffer`` — exact average age of the
  two-queue routing system against its half-rate and double-speed
  single-queue references, swept over the first source's rate.
* ``bound-tightness`` — exact age versus the closed-form upper bound and
  their relative gap, swept over the first source's rate.
* ``sim-validate`` — simulated age with confidence interval against the
  exact value, swept over the first source's rate.
* ``game-converge`` — residual and first-source routing row per iteration
  of the damped best-response iteration.
* ``mean-field`` — residual and per-queue loads per iteration of the
  projected load iteration.

Rows whose computation fails are emitted with empty value cells and the
failure text in the trailing ``reason`` column.  Grid points may be
dispatched to a process pool; rows are always written in grid order, and
a rerun with identical inputs produces a byte-identical file.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundInput, upper_bound
from .game import GameSpec, finite_n_equilibrium, mean_field_solve
from .models import QueueNetworkSpec, build_network_model, comparison_specs
from .shs import average_aoi
from . import sim

__all__ = [
    "KINDS",
    "ExperimentSpec",
    "default_experiments",
    "headers",
    "list_experiments",
    "run",
]

KINDS = (
    "compare-nobuffer",
    "compare-buffer",
    "bound-tightness",
    "sim-validate",
    "game-converge",
    "mean-field",
)

_GRID_KINDS = ("compare-nobuffer", "compare-buffer", "bound-tightness", "sim-validate")


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a kind, its parameters, and an output path."""

    name: str
    kind: str
    params: dict = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(
                f"unknown experiment kind {self.kind!r}; valid kinds: {', '.join(KINDS)}"
            )
        if not self.name:
            raise ValueError("experiment name must be nonempty")
        if self.kind in _GRID_KINDS and len(lambda1_grid(self.params)) == 0:
            raise ValueError("parameter grid must be nonempty")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {"name", "kind", "output"}
        params = dict(data.get("params", {}))
        params.update({k: v for k, v in data.items() if k not in known | {"params"}})
        return cls(
            name=data["name"],
            kind=data["kind"],
            params=params,
            output=data.get("output"),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "params": dict(self.params),
            "output": self.output,
        }


def lambda1_grid(params: dict) -> list[float]:
    """Sweep values for the first source's rate.

    Accepts an explicit list, a ``{"start", "stop", "points"}`` mapping
    (log-spaced), or a single number; defaults to 25 log-spaced points in
    [0.1, 1000].
    """
    grid = params.get("lambda1")
    if grid is None:
        return [float(x) for x in np.logspace(-1.0, 3.0, 25)]
    if isinstance(grid, dict):
        return [
            float(x)
            for x in np.logspace(
                math.log10(grid["start"]), math.log10(grid["stop"]), grid["points"]
            )
        ]
    if isinstance(grid, (int, float)):
        return [float(grid)]
    return [float(x) for x in grid]


def headers(kind: str, params: dict) -> tuple[str, ...]:
    """CSV header for a kind (fixed per kind, plus the reason column)."""
    if kind in ("compare-nobuffer", "compare-buffer"):
        cols = ("lambda1", "aoi_routing", "aoi_half", "aoi_double")
    elif kind == "bound-tightness":
        cols = ("lambda1", "exact", "bound", "rel_gap")
    elif kind == "sim-validate":
        cols = ("lambda1", "exact", "sim_mean", "ci95", "inside_ci")
    elif kind == "game-converge":
        k = len(params.get("mus", ()))
        cols = ("iter", "residual") + tuple(f"p_1_{j + 1}" for j in range(k))
    elif kind == "mean-field":
        k = len(params.get("ratios", ()))
        cols = ("iter", "residual") + tuple(f"m_{j + 1}" for j in range(k))
    else:
        raise ValueError(f"unknown experiment kind {kind!r}")
    return cols + ("reason",)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _compare_point(kind: str, params: dict, lam1: float, seed: int):
    family = "nobuffer" if kind == "compare-nobuffer" else "buffer"
    triple = comparison_specs(
        family,
        lam1,
        lambda_rest=params.get("lambda_rest", 10.0),
        theta=params.get("theta", 10.0),
        mu=params.get("mu", 1.0),
    )
    values = [
        average_aoi(build_network_model(triple[key])).average_aoi
        for key in ("routing", "half", "double")
    ]
    return (lam1, *values)


def _bound_point(kind: str, params: dict, lam1: float, seed: int):
    spec = QueueNetworkSpec.symmetric_parallel(
        params.get("num_servers", 1),
        lam1,
        lambda_rest=params.get("lambda_rest", 10.0),
        mu=params.get("mu", 1.0),
        theta=params.get("theta", 0.0),
        buffer=params.get("buffer", 2),
    )
    exact = average_aoi(build_network_model(spec)).average_aoi
    bound = upper_bound(BoundInput.from_network(spec))
    return (lam1, exact, bound, (bound - exact) / exact)


def _sim_point(kind: str, params: dict, lam1: float, seed: int):
    spec = QueueNetworkSpec.symmetric_parallel(
        params.get("num_servers", 1),
        lam1,
        lambda_rest=params.get("lambda_rest", 0.0),
        mu=params.get("mu", 1.0),
        theta=params.get("theta", 0.0),
        buffer=params.get("buffer", 0),
    )
    exact = average_aoi(build_network_model(spec)).average_aoi
    report = sim.simulate(
        sim.SimConfig(
            spec,
            horizon=params.get("horizon", 1e4),
            warmup=params.get("warmup", 0.1),
            replications=params.get("replications", 10),
            seed=seed,
        ),
        engine=params.get("engine", "auto"),
    )
    inside = abs(report.mean_aoi - exact) <= report.ci95_halfwidth
    return (lam1, exact, report.mean_aoi, report.ci95_halfwidth, inside)


_POINT_FUNCS = {
    "compare-nobuffer": _compare_point,
    "compare-buffer": _compare_point,
    "bound-tightness": _bound_point,
    "sim-validate": _sim_point,
}


def _safe_point(kind: str, params: dict, lam1: float, seed: int, width: int):
    try:
        values = _POINT_FUNCS[kind](kind, params, lam1, seed)
        return list(values) + [None]
    except Exception as exc:  # solver failures become reason cells
        return [lam1] + [None] * (width - 2) + [f"{type(exc).__name__}: {exc}"]


def _grid_rows(spec: ExperimentSpec, seed: int, workers: int) -> list[list]:
    grid = lambda1_grid(spec.params)
    width = len(headers(spec.kind, spec.params))
    args = [(spec.kind, spec.params, lam1, seed, width) for lam1 in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_safe_point, *zip(*args)))
    return [_safe_point(*a) for a in args]


def _game_rows(spec: ExperimentSpec) -> list[list]:
    params = spec.params
    game = GameSpec(
        lambdas=tuple(params["lambdas"]),
        mus=tuple(params["mus"]),
        n_buffer=params.get("n_buffer", 0),
    )
    result = finite_n_equilibrium(
        game,
        alpha=params.get("alpha", 0.5),
        tol=params.get("tol", 1e-8),
        max_iter=params.get("max_iter", 10_000),
    )
    return [
        [t, float(result.residuals[t]), *map(float, result.row_history[t]), None]
        for t in range(result.iterations + 1)
    ]


def _mean_field_rows(spec: ExperimentSpec) -> list[list]:
    params = spec.params
    ratios = np.asarray(params["ratios"], dtype=float)
    result = mean_field_solve(
        ratios,
        alpha=params.get("alpha"),
        tol=params.get("tol", 1e-10),
        max_iter=params.get("max_iter", 100_000),
    )
    return [
        [
            t,
            float(result.residuals[t]),
            *map(float, result.y_history[t] ** 2 - ratios),
            None,
        ]
        for t in range(result.iterations + 1)
    ]


def _summary(kind: str, header: tuple[str, ...], rows: list[list]) -> str:
    good = [row for row in rows if row[-1] is None]
    skipped = len(rows) - len(good)
    note = f"; {skipped} rows carry a failure reason" if skipped else ""
    if kind in ("compare-nobuffer", "compare-buffer") and good:
        gap = max(abs(r[1] - r[3]) / r[3] for r in good)
        return f"max |routing - double| / double = {gap:.4g} over {len(good)} points{note}"
    if kind == "bound-tightness" and good:
        return f"max relative gap = {max(r[3] for r in good):.4g} over {len(good)} points{note}"
    if kind == "sim-validate" and good:
        inside = sum(1 for r in good if r[4])
        return f"{inside}/{len(good)} points inside the 95% CI{note}"
    if kind in ("game-converge", "mean-field") and good:
        return f"final residual {good[-1][1]:.3g} after {int(good[-1][0])} iterations{note}"
    return f"{len(good)} rows{note}"


def run(
    spec: ExperimentSpec,
    output: str | None = None,
    seed: int = 42,
    workers: int = 1,
) -> tuple[str, str]:
    """Execute an experiment; returns (csv_path, one-line summary)."""
    header = headers(spec.kind, spec.params)
    if spec.kind in _GRID_KINDS:
        rows = _grid_rows(spec, seed, workers)
    elif spec.kind == "game-converge":
        rows = _game_rows(spec)
    else:
        rows = _mean_field_rows(spec)
    path = output or spec.output or f"{spec.name}.csv"
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path, _summary(spec.kind, header, rows)


def default_experiments() -> dict[str, ExperimentSpec]:
    """Built-in registry: one ready-to-run experiment per kind."""
    return {
        "compare-nobuffer": ExperimentSpec(
            name="compare-nobuffer",
            kind="compare-nobuffer",
            params={"mu": 1.0, "theta": 10.0, "lambda_rest": 10.0},
        ),
        "compare-buffer": ExperimentSpec(
            name="compare-buffer",
            kind="compare-buffer",
            params={"mu": 1.0, "theta": 10.0, "lambda_rest": 10.0},
        ),
        "bound-tightness": ExperimentSpec(
            name="bound-tightness",
            kind="bound-tightness",
            params={"num_servers": 1, "buffer": 2, "mu": 1.0, "lambda_rest": 10.0},
        ),
        "sim-validate": ExperimentSpec(
            name="sim-validate",
            kind="sim-validate",
            params={
                "lambda1": {"start": 0.1, "stop": 100.0, "points": 12},
                "num_servers": 1,
                "buffer": 0,
                "mu": 1.0,
                "horizon": 1e4,
                "replications": 10,
            },
        ),
        "game-converge": ExperimentSpec(
            name="game-converge",
            kind="game-converge",
            params={
                "lambdas": [100.0, 20.0, 50.0, 10.0, 10.0, 1000.0],
                "mus": [1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 1000.0],
                "alpha": 0.5,
                "tol": 1e-8,
                "max_iter": 10_000,
            },
        ),
        "mean-field": ExperimentSpec(
            name="mean-field",
            kind="mean-field",
            params={"ratios": [0.1, 0.5, 1.0, 2.0, 5.0], "tol": 1e-10},
        ),
    }


def list_experiments() -> list[tuple[str, str]]:
    """Stable (name, description) listing of the built-in experiments."""
    descriptions = {
        "compare-nobuffer": "two preemptive queues vs half-rate and double-speed references",
        "compare-buffer": "two single-buffer queues vs half-rate and double-speed references",
        "bound-tightness": "exact age vs closed-form upper bound over an arrival-rate sweep",
        "sim-validate": "simulated age with 95% CI vs exact age over an arrival-rate sweep",
        "game-converge": "residual history of the damped best-response iteration",
        "mean-field": "residual history of the projected large-population iteration",
    }
    return [(name, descriptions[name]) for name in default_experiments()]
