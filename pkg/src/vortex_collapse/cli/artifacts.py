"""Run artifacts: trajectory CSV, summary JSON and the sweep table."""

from __future__ import annotations

import csv
from typing import TYPE_CHECKING

import numpy as np
from pydantic import BaseModel, ConfigDict, TypeAdapter

from vortex_collapse.logger import get_logger

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

    from vortex_collapse.trajectory import TrajectoryRecord

__all__ = [
    "SCENARIO_FILE",
    "SUMMARY_FILE",
    "SWEEP_CSV",
    "SWEEP_JSON",
    "TRAJECTORY_FILE",
    "ClusterBlock",
    "DriftBlock",
    "HolderBlock",
    "InvariantsBlock",
    "PreventCollapseBlock",
    "RunSummary",
    "SelfSimilarBlock",
    "SweepRow",
    "TerminationBlock",
    "trajectory_header",
    "write_summary",
    "write_sweep",
    "write_trajectory",
]

log = get_logger(__name__)

TRAJECTORY_FILE = "trajectory.csv"
SUMMARY_FILE = "summary.json"
SCENARIO_FILE = "scenario.json"
SWEEP_CSV = "sweep_summary.csv"
SWEEP_JSON = "sweep_summary.json"


class _Block(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class TerminationBlock(_Block):
    kind: str
    message: str
    collapse_time: float | None


class DriftBlock(_Block):
    """Maximal relative drifts; ``identity`` is the residual of L = 2(sum a)I - 2|M|^2."""

    hamiltonian: float
    vorticity_x: float
    vorticity_y: float
    momentum: float
    pair_moment: float
    identity: float


class InvariantsBlock(_Block):
    """(H, Mx, My, I, L) at the first and last sample."""

    initial: list[float]
    final: list[float]


class HolderBlock(_Block):
    index: int
    exponent: float
    expected: float
    constant: float
    fit_residual: float
    n_samples: int
    limit_point: tuple[float, float] | None


class ClusterBlock(_Block):
    """Collision groups of a collapsed run and a certified partition of the last sample."""

    collision: list[list[int]] | None
    separation_floor: float | None
    partition: list[list[int]]
    delta: float
    kappa: float
    certified: bool


class PreventCollapseBlock(_Block):
    kappa: float
    C_kappa: float
    log_C_kappa: float
    C0: float
    C1: float
    eta: float
    passed: bool
    premise_samples: int
    premise_pairs: int
    counterexample: dict[str, float | list[int]] | None


class SelfSimilarBlock(_Block):
    """Constants of the analytic solution and the residuals of its conditions."""

    lam: float
    intensity_a: float
    C: float
    C_prime: float
    D: float
    T: float
    predicted_t_c: float
    rotation_spread: float
    residual_g: float
    residual_condition_1: float
    residual_condition_2: float
    residual_pair_moment: float
    residual_lambda_alpha: float
    residual_lambda_prime: float
    vanishing_functional: str
    t_c_relative_error: float | None


class RunSummary(_Block):
    schema_version: int
    scenario: str
    field: str
    alpha: float
    n_vortices: int
    exit_code: int
    termination: TerminationBlock
    t_c: float | None
    t_c_extrapolated: float | None
    steps_accepted: int
    steps_rejected: int
    samples: int
    drift: DriftBlock
    invariants: InvariantsBlock | None = None
    holder: list[HolderBlock] | None = None
    clusters: ClusterBlock | None = None
    prevent_collapse: PreventCollapseBlock | None = None
    selfsimilar: SelfSimilarBlock | None = None
    analysis_error: str | None = None


class SweepRow(_Block):
    """One row of a sweep; ``beta`` is the mean fitted exponent of the colliding vortices."""

    key: str
    alpha: float
    seed: int | None
    exit_code: int
    termination: str | None
    t_c: float | None
    beta: float | None
    expected_beta: float
    relative_error: float | None
    within_tolerance: bool
    error: str | None = None


_SWEEP_ADAPTER = TypeAdapter(list[SweepRow])


def trajectory_header(n: int) -> list[str]:
    """Column names: t, x1, y1, ..., xN, yN, H, Mx, My, I, L, dmin."""
    coords = [f"{axis}{i}" for i in range(1, n + 1) for axis in ("x", "y")]
    return ["t", *coords, "H", "Mx", "My", "I", "L", "dmin"]


def write_trajectory(record: TrajectoryRecord, path: Path) -> None:
    """Write every sample of a record, 17 significant digits per value."""
    inv = record.invariants
    columns = np.column_stack(
        [
            record.times,
            record.positions.reshape(record.times.size, -1),
            [s.hamiltonian for s in inv],
            [s.vorticity_vector[0] for s in inv],
            [s.vorticity_vector[1] for s in inv],
            [s.momentum for s in inv],
            [s.pair_moment for s in inv],
            [s.min_pair_distance for s in inv],
        ]
    )
    np.savetxt(
        path,
        columns,
        fmt="%.17g",
        delimiter=",",
        header=",".join(trajectory_header(record.n_vortices)),
        comments="",
    )
    log.debug("trajectory written", path=str(path), samples=record.times.size)


def write_summary(summary: RunSummary, path: Path) -> None:
    path.write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")


def write_sweep(rows: Sequence[SweepRow], out_dir: Path) -> tuple[Path, Path]:
    """Write the aggregated sweep table as CSV and JSON.

    Returns:
        Paths of the CSV and JSON files.
    """
    csv_path = out_dir / SWEEP_CSV
    json_path = out_dir / SWEEP_JSON
    names = list(SweepRow.model_fields)
    with csv_path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            values = row.model_dump()
            writer.writerow(
                ["" if values[k] is None else _cell(values[k]) for k in names]
            )
    json_path.write_bytes(_SWEEP_ADAPTER.dump_json(list(rows), indent=2) + b"\n")
    return csv_path, json_path


def _cell(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)
