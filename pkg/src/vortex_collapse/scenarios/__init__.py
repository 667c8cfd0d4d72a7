"""Bundled scenario templates."""

from functools import cache
from pathlib import Path

__all__ = ["load_template", "template_names"]

_TEMPLATES_DIR = Path(__file__).parent


@cache
def load_template(name: str) -> str:
    """Load a bundled scenario template.

    Args:
        name: Template filename without extension (e.g., "selfsimilar").

    Returns:
        The template JSON text.

    Raises:
        FileNotFoundError: If the template file doesn't exist.
    """
    return (_TEMPLATES_DIR / f"{name}.json").read_text(encoding="utf-8")


def template_names() -> tuple[str, ...]:
    """Names of all bundled templates."""
    return tuple(sorted(p.stem for p in _TEMPLATES_DIR.glob("*.json")))
