"""Application configuration via environment variables."""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables.

    Every field can be overridden with a ``VORTEX_`` prefixed variable, e.g.
    ``VORTEX_REL_TOL=1e-10``.

    Attributes:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL).
        log_json: Emit JSON log lines instead of console output.
        rel_tol: Default relative tolerance of the integrator.
        abs_tol: Default absolute tolerance of the integrator.
        collapse_radius: Minimal pair distance at which a run is declared collapsed.
        max_steps: Attempted-step budget of one integration.
        distance_floor: Pair distances below this raise a singular-configuration error.
        dense_samples: Uniform dense-output samples requested per command-line run.
        sweep_workers: Concurrent rows in a parameter sweep.
    """

    model_config = SettingsConfigDict(
        env_prefix="VORTEX_",
        env_file=".env",
        extra="ignore",
        env_file_encoding="utf-8",
    )

    log_level: str = "INFO"
    log_json: bool = False

    # Integration defaults
    rel_tol: float = Field(default=1e-12, gt=0)
    abs_tol: float = Field(default=1e-14, gt=0)
    collapse_radius: float = Field(default=1e-8, gt=0)
    max_steps: int = Field(default=200_000, gt=0)
    distance_floor: float = Field(default=1e-30, gt=0)

    # Command-line runs
    dense_samples: int = Field(default=2000, ge=0)
    sweep_workers: int = Field(default=4, gt=0)
