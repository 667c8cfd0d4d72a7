"""The ``run`` and ``sweep`` commands."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import IntEnum
from functools import partial
from typing import TYPE_CHECKING, Any

import anyio
import anyio.to_thread
import numpy as np

from vortex_collapse.analysis import (
    check_prevent_collapse_implication,
    extrapolate_collapse_time,
    holder_fit,
    prevent_collapse_constant,
)
from vortex_collapse.cli.artifacts import (
    SCENARIO_FILE,
    SUMMARY_FILE,
    TRAJECTORY_FILE,
    ClusterBlock,
    DriftBlock,
    HolderBlock,
    InvariantsBlock,
    PreventCollapseBlock,
    RunSummary,
    SelfSimilarBlock,
    SweepRow,
    TerminationBlock,
    write_summary,
    write_sweep,
    write_trajectory,
)
from vortex_collapse.cli.scenario import SCHEMA_VERSION, Scenario, build_initial_state
from vortex_collapse.clustering import cluster_partition, collision_clusters
from vortex_collapse.core import cluster_barycenter, uniform_cross_constant
from vortex_collapse.disc import boundary_holder_check
from vortex_collapse.exceptions import (
    DegenerateIntensitiesError,
    DomainError,
    InsufficientSamplesError,
    NeutralClusterError,
    NoCollapseError,
    PreconditionError,
    ScenarioError,
    VortexCollapseError,
)
from vortex_collapse.integrator import IntegratorOptions, integrate, invariant_drift
from vortex_collapse.logger import get_logger
from vortex_collapse.selfsimilar import residuals
from vortex_collapse.state import FloatArray
from vortex_collapse.trajectory import FieldKind, TerminationKind

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

    from vortex_collapse.config import Settings
    from vortex_collapse.selfsimilar import SelfSimilarSolution
    from vortex_collapse.trajectory import TrajectoryRecord

__all__ = ["ExitCode", "RunOutcome", "RunOverrides", "run_scenario", "sweep"]

log = get_logger(__name__)

# Horizon of a self-similar run without t_final, in predicted collapse times.
_HORIZON_FACTOR = 1.5
# Disc velocities carry the 1/(2 pi) of the Green function.
_DISC_TIME_FACTOR = 2.0 * math.pi
_TAIL_DECADES = (1.0, 15.0)
_TAIL_SAMPLES = 281
_BETA_TOLERANCE = 0.02

_ANALYSIS_ERRORS = (
    DegenerateIntensitiesError,
    DomainError,
    InsufficientSamplesError,
    NeutralClusterError,
    NoCollapseError,
    PreconditionError,
)


class ExitCode(IntEnum):
    OK = 0
    FAILED_ROWS = 1
    USAGE = 2
    INTEGRATION = 3
    ANALYSIS = 4


@dataclass(frozen=True, slots=True)
class RunOverrides:
    """Command-line values that take precedence over the scenario file."""

    rel_tol: float | None = None
    collapse_radius: float | None = None
    seed: int | None = None


@dataclass(frozen=True, slots=True)
class RunOutcome:
    exit_code: ExitCode
    summary: RunSummary
    record: TrajectoryRecord


def _integrator_options(
    scenario: Scenario,
    sol: SelfSimilarSolution | None,
    settings: Settings,
    overrides: RunOverrides,
) -> IntegratorOptions:
    """Settings < self-similar defaults < scenario file < command line."""
    values: dict[str, Any] = {}
    if sol is not None:
        values["collapse_radius"] = sol.collapse_radius
    values.update(scenario.integrator.model_dump(exclude_none=True))
    if overrides.rel_tol is not None:
        values["rel_tol"] = overrides.rel_tol
    if overrides.collapse_radius is not None:
        values["collapse_radius"] = overrides.collapse_radius
    return IntegratorOptions.from_settings(settings, **values)


def _predicted_collapse(scenario: Scenario, sol: SelfSimilarSolution) -> float:
    """Analytic collapse time in the scenario's field."""
    factor = _DISC_TIME_FACTOR if scenario.field_kind is FieldKind.DISC else 1.0
    return factor * sol.collapse_time


def _horizon(scenario: Scenario, sol: SelfSimilarSolution | None) -> float:
    if scenario.t_final is not None:
        return scenario.t_final
    assert sol is not None
    return _HORIZON_FACTOR * _predicted_collapse(scenario, sol)


def _sample_times(
    scenario: Scenario, sol: SelfSimilarSolution | None, horizon: float, settings: Settings
) -> FloatArray:
    """Uniform dense samples plus, for a known collapse time, a log-spaced tail."""
    n = scenario.dense_samples if scenario.dense_samples is not None else settings.dense_samples
    uniform = np.linspace(0.0, horizon, n + 2)[1:-1] if n > 0 else np.empty(0)
    if sol is None:
        return uniform
    lo, hi = _TAIL_DECADES
    tail = _predicted_collapse(scenario, sol) * (1.0 - np.logspace(-lo, -hi, _TAIL_SAMPLES))
    return np.concatenate([uniform, tail])


def _termination_failed(scenario: Scenario, record: TrajectoryRecord) -> bool:
    kind = record.termination.kind
    if kind in (TerminationKind.STEP_LIMIT, TerminationKind.SINGULAR_FAILURE):
        return True
    return scenario.run_to_collapse and kind is not TerminationKind.COLLAPSED


def _holder_blocks(
    scenario: Scenario,
    record: TrajectoryRecord,
    t_fit: float,
) -> list[HolderBlock]:
    """Fit every vortex that belongs to a colliding group."""
    clusters = collision_clusters(record)
    expected = 1.0 / (record.alpha + 1.0)
    blocks: list[HolderBlock] = []
    for part in clusters.parts:
        if len(part) < 2:
            continue
        members = sorted(part)
        if record.field is FieldKind.DISC:
            candidate = cluster_barycenter(record.states[-1], members)
        for index in members:
            if record.field is FieldKind.DISC:
                fit = boundary_holder_check(record, t_fit, index, candidate)
            else:
                fit = holder_fit(record, t_fit, index, window=scenario.analyses.fit_window)
            blocks.append(
                HolderBlock(
                    index=index,
                    exponent=fit.exponent,
                    expected=expected,
                    constant=fit.constant,
                    fit_residual=fit.fit_residual,
                    n_samples=fit.n_samples,
                    limit_point=fit.limit_point,
                )
            )
    if not blocks:
        raise NoCollapseError("no colliding group to fit")
    return blocks


def _invariants_block(record: TrajectoryRecord) -> InvariantsBlock:
    first, last = record.invariants[0], record.invariants[-1]
    return InvariantsBlock(
        initial=[first.hamiltonian, *first.vorticity_vector, first.momentum, first.pair_moment],
        final=[last.hamiltonian, *last.vorticity_vector, last.momentum, last.pair_moment],
    )


def _cluster_block(scenario: Scenario, record: TrajectoryRecord) -> ClusterBlock:
    collision: list[list[int]] | None = None
    floor: float | None = None
    if record.collapsed:
        groups = collision_clusters(record)
        collision = [sorted(p) for p in groups.parts]
        floor = groups.separation_floor
    last = record.states[-1].positions
    partition = cluster_partition(
        last, scenario.analyses.cluster_scale, scenario.analyses.cluster_kappa
    )
    return ClusterBlock(
        collision=collision,
        separation_floor=floor,
        partition=[sorted(p) for p in partition.parts],
        delta=partition.delta,
        kappa=partition.kappa,
        certified=partition.certify(last),
    )


def _prevent_collapse_block(scenario: Scenario, record: TrajectoryRecord) -> PreventCollapseBlock:
    if record.field is FieldKind.DISC:
        raise PreconditionError("the prevent-collapse constants are derived for the plane")
    a = record.intensities
    c0 = uniform_cross_constant(a)
    bound = prevent_collapse_constant(a, record.alpha, c0, 0.0)
    verdict = check_prevent_collapse_implication(record, bound, scenario.analyses.eta)
    example: dict[str, float | list[int]] | None = None
    if verdict.counterexample is not None:
        raw = asdict(verdict.counterexample)
        example = {k: list(v) if isinstance(v, tuple) else v for k, v in raw.items()}
    return PreventCollapseBlock(
        kappa=bound.kappa,
        C_kappa=bound.C_kappa,
        log_C_kappa=bound.log_C_kappa,
        C0=bound.C0,
        C1=bound.C1,
        eta=verdict.eta,
        passed=verdict.passed,
        premise_samples=verdict.premise_samples,
        premise_pairs=verdict.premise_pairs,
        counterexample=example,
    )


def _selfsimilar_block(
    scenario: Scenario, sol: SelfSimilarSolution, t_c: float | None
) -> SelfSimilarBlock:
    res = residuals(sol)
    predicted = _predicted_collapse(scenario, sol)
    return SelfSimilarBlock(
        lam=sol.lam,
        intensity_a=sol.intensity_a,
        C=sol.C,
        C_prime=sol.C_prime,
        D=sol.D,
        T=sol.T,
        predicted_t_c=predicted,
        rotation_spread=sol.rotation_spread,
        residual_g=res.g,
        residual_condition_1=res.condition_1,
        residual_condition_2=res.condition_2,
        residual_pair_moment=res.pair_moment,
        residual_lambda_alpha=res.lambda_alpha,
        residual_lambda_prime=res.lambda_prime,
        vanishing_functional=res.vanishing_functional,
        t_c_relative_error=None if t_c is None else abs(t_c - predicted) / predicted,
    )


def run_scenario(
    scenario: Scenario,
    out_dir: Path,
    settings: Settings,
    overrides: RunOverrides | None = None,
) -> RunOutcome:
    """Integrate a scenario, run its analyses and write the artifacts.

    Writes ``trajectory.csv``, ``summary.json`` and the effective
    ``scenario.json`` into ``out_dir``. Nothing is written when the scenario
    cannot be turned into an initial state.

    Args:
        scenario: Validated scenario.
        out_dir: Output directory, created if missing.
        settings: Application settings.
        overrides: Command-line values.

    Returns:
        The exit code, the summary and the trajectory record.

    Raises:
        ScenarioError: If the initial configuration is invalid.
    """
    overrides = overrides or RunOverrides()
    scenario = scenario.with_seed(overrides.seed)
    state, sol = build_initial_state(scenario)
    try:
        opts = _integrator_options(scenario, sol, settings, overrides)
    except ValueError as e:
        raise ScenarioError(f"invalid integrator options: {e}") from e
    horizon = _horizon(scenario, sol)

    log.info("scenario run started", scenario=scenario.name, n=state.n, horizon=horizon)
    record = integrate(
        state,
        0.0,
        horizon,
        opts,
        scenario.field_kind,
        sample_times=_sample_times(scenario, sol, horizon, settings),
    )

    exit_code = ExitCode.OK
    if _termination_failed(scenario, record):
        exit_code = ExitCode.INTEGRATION
    t_c = record.termination.collapse_time if record.collapsed else None
    t_c_extrapolated = extrapolate_collapse_time(record) if record.collapsed else None

    drift = invariant_drift(record)
    requests = scenario.analyses
    holder: list[HolderBlock] | None = None
    clusters: ClusterBlock | None = None
    prevent: PreventCollapseBlock | None = None
    analysis_error: str | None = None
    if exit_code is ExitCode.OK:
        try:
            if requests.holder:
                t_fit = t_c_extrapolated if t_c_extrapolated is not None else horizon
                holder = _holder_blocks(scenario, record, t_fit)
            if requests.clusters:
                clusters = _cluster_block(scenario, record)
            if requests.prevent_collapse:
                prevent = _prevent_collapse_block(scenario, record)
        except _ANALYSIS_ERRORS as e:
            analysis_error = f"{type(e).__name__}: {e}"
            exit_code = ExitCode.ANALYSIS
            log.warning("analysis precondition failed", scenario=scenario.name, error=analysis_error)

    summary = RunSummary(
        schema_version=SCHEMA_VERSION,
        scenario=scenario.name,
        field=scenario.field_kind.value,
        alpha=record.alpha,
        n_vortices=record.n_vortices,
        exit_code=int(exit_code),
        termination=TerminationBlock(
            kind=record.termination.kind.value,
            message=record.termination.message,
            collapse_time=record.termination.collapse_time,
        ),
        t_c=t_c,
        t_c_extrapolated=t_c_extrapolated,
        steps_accepted=record.steps_accepted,
        steps_rejected=record.steps_rejected,
        samples=int(record.times.size),
        drift=DriftBlock(**asdict(drift)),
        invariants=_invariants_block(record) if requests.invariants else None,
        holder=holder,
        clusters=clusters,
        prevent_collapse=prevent,
        selfsimilar=_selfsimilar_block(scenario, sol, t_c) if sol is not None else None,
        analysis_error=analysis_error,
    )

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / SCENARIO_FILE).write_text(scenario.model_dump_json(indent=2) + "\n", encoding="utf-8")
    write_trajectory(record, out_dir / TRAJECTORY_FILE)
    write_summary(summary, out_dir / SUMMARY_FILE)
    log.info(
        "scenario run finished",
        scenario=scenario.name,
        termination=summary.termination.kind,
        exit_code=summary.exit_code,
        out=str(out_dir),
    )
    return RunOutcome(exit_code=exit_code, summary=summary, record=record)


@dataclass(frozen=True, slots=True)
class _SweepJob:
    key: str
    alpha: float
    seed: int | None


def _sweep_jobs(alphas: Sequence[float], seeds: Sequence[int] | None) -> list[_SweepJob]:
    seed_list: Sequence[int | None] = seeds if seeds else [None]
    jobs: list[_SweepJob] = []
    for alpha in alphas:
        for seed in seed_list:
            key = f"{len(jobs):03d}_alpha-{alpha:g}" + ("" if seed is None else f"_seed-{seed}")
            jobs.append(_SweepJob(key=key, alpha=alpha, seed=seed))
    return jobs


def _run_row(
    template: Scenario,
    job: _SweepJob,
    out_dir: Path,
    settings: Settings,
    overrides: RunOverrides,
) -> SweepRow:
    expected = 1.0 / (job.alpha + 1.0)
    try:
        scenario = template.with_alpha(job.alpha)
        scenario = scenario.model_copy(
            update={"analyses": scenario.analyses.model_copy(update={"holder": True})}
        )
        row_overrides = RunOverrides(
            rel_tol=overrides.rel_tol,
            collapse_radius=overrides.collapse_radius,
            seed=job.seed if job.seed is not None else overrides.seed,
        )
        outcome = run_scenario(scenario, out_dir / job.key, settings, row_overrides)
    except VortexCollapseError as e:
        log.error("sweep row failed", key=job.key, error=str(e))
        return SweepRow(
            key=job.key,
            alpha=job.alpha,
            seed=job.seed,
            exit_code=int(ExitCode.USAGE),
            termination=None,
            t_c=None,
            beta=None,
            expected_beta=expected,
            relative_error=None,
            within_tolerance=False,
            error=f"{type(e).__name__}: {e}",
        )

    summary = outcome.summary
    beta: float | None = None
    rel: float | None = None
    if summary.holder:
        beta = float(np.mean([h.exponent for h in summary.holder]))
        rel = abs(beta - expected) / expected
    if outcome.exit_code is not ExitCode.OK:
        log.error("sweep row failed", key=job.key, exit_code=int(outcome.exit_code))
    return SweepRow(
        key=job.key,
        alpha=job.alpha,
        seed=job.seed,
        exit_code=int(outcome.exit_code),
        termination=summary.termination.kind,
        t_c=summary.t_c,
        beta=beta,
        expected_beta=expected,
        relative_error=rel,
        within_tolerance=rel is not None and rel <= _BETA_TOLERANCE,
        error=summary.analysis_error,
    )


async def _run_rows(
    template: Scenario,
    jobs: Sequence[_SweepJob],
    out_dir: Path,
    settings: Settings,
    overrides: RunOverrides,
) -> list[SweepRow]:
    limiter = anyio.CapacityLimiter(settings.sweep_workers)
    rows: list[SweepRow | None] = [None] * len(jobs)

    async def worker(k: int, job: _SweepJob) -> None:
        call = partial(_run_row, template, job, out_dir, settings, overrides)
        rows[k] = await anyio.to_thread.run_sync(call, limiter=limiter)

    async with anyio.create_task_group() as tg:
        for k, job in enumerate(jobs):
            tg.start_soon(worker, k, job)
    return [row for row in rows if row is not None]


def sweep(
    template: Scenario,
    alphas: Sequence[float],
    out_dir: Path,
    settings: Settings,
    *,
    seeds: Sequence[int] | None = None,
    overrides: RunOverrides | None = None,
) -> tuple[ExitCode, list[SweepRow]]:
    """Run a planar template for every alpha (and seed) and aggregate the exponents.

    Rows run concurrently in worker threads and write to distinct
    subdirectories keyed by their position and parameters; the table keeps
    the input order.

    Args:
        template: Planar scenario whose alpha is replaced per row.
        alphas: Nonempty list of kernel exponents; duplicates give duplicate rows.
        out_dir: Output directory.
        settings: Application settings.
        seeds: Seeds for random sources, crossed with ``alphas``.
        overrides: Command-line values applied to every row.

    Returns:
        ``FAILED_ROWS`` if any row failed, ``OK`` otherwise, and the rows.

    Raises:
        ScenarioError: If the alpha list is empty or the template is not planar.
    """
    if not alphas:
        raise ScenarioError("the alpha list is empty")
    if template.field_kind is not FieldKind.PLANE:
        raise ScenarioError("sweeps need a planar template")
    overrides = overrides or RunOverrides()
    jobs = _sweep_jobs(alphas, seeds)
    out_dir.mkdir(parents=True, exist_ok=True)
    log.info("sweep started", rows=len(jobs), workers=settings.sweep_workers)
    rows = anyio.run(_run_rows, template, jobs, out_dir, settings, overrides)
    csv_path, json_path = write_sweep(rows, out_dir)
    failed = sum(row.exit_code != ExitCode.OK for row in rows)
    log.info("sweep finished", rows=len(rows), failed=failed, table=str(csv_path), json=str(json_path))
    return (ExitCode.FAILED_ROWS if failed else ExitCode.OK), rows
