"""Scenario-driven command-line surface."""

from vortex_collapse.cli.commands import ExitCode, RunOutcome, RunOverrides, run_scenario, sweep
from vortex_collapse.cli.scenario import Scenario, load_scenario, resolve_template

__all__ = [
    "ExitCode",
    "RunOutcome",
    "RunOverrides",
    "Scenario",
    "load_scenario",
    "resolve_template",
    "run_scenario",
    "sweep",
]
