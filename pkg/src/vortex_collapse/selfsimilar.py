"""Self-similar collapse of three vortices for any alpha > 0.

Vortex intensities are ``(a, 1, 1)`` and the sides are ``A = x2 - x3``,
``B = x3 - x1``, ``C = x1 - x2``. Starting from a right triangle with
``|A| = 1``, ``|B| = lambda`` the three sides shrink by a common factor when
``lambda`` is a root of

    g(lambda) = s**(1 - alpha) (1 - s**(alpha + 1)) / lambda**2 - (1 - lambda**-(alpha + 1)),

with ``s = sqrt(1 + lambda**2)``, and ``a`` solves the two side-rate conditions.
The configuration then follows ``x_j(t) = x_j(0) f(t) exp(i theta(t))`` about its
center of vorticity, with ``f = ((T - t) / T)**(1 / (alpha + 1))`` and
``theta = -D T ln((T - t) / T)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import bisect

from vortex_collapse.core import pair_moment, scaling_functionals, velocity_field
from vortex_collapse.exceptions import (
    BracketError,
    DomainError,
    ExpandingSolutionError,
    InconsistentIntensityError,
)
from vortex_collapse.logger import get_logger
from vortex_collapse.state import FloatArray, VortexState

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

__all__ = [
    "SELF_SIMILAR_COLLAPSE_RADIUS",
    "SelfSimilarResiduals",
    "SelfSimilarSolution",
    "analytic_trajectory",
    "build_configuration",
    "g_eval",
    "intensity_from_lambda",
    "residuals",
    "side_lengths",
    "solve_lambda",
    "triangle_side_rates",
]

log = get_logger(__name__)

# Collapse radius for these runs, relative to |A(0)|.
SELF_SIMILAR_COLLAPSE_RADIUS = 1e-4

_BRACKET = (1e-6, 1.0 - 1e-9)
_XTOL = 1e-14
_ROOT_TOLERANCE = 1e-12
_AGREEMENT = 1e-8


def g_eval(lam: float, alpha: float) -> float:
    """Evaluate the root function g.

    Args:
        lam: Side ratio |B| / |A| in (0, 1].
        alpha: Kernel exponent, positive.

    Returns:
        ``(1 + lam^2) / s^(alpha+1) * (1 - s^(alpha+1)) / lam^2 - (1 - lam^-(alpha+1))``.

    Raises:
        DomainError: If lam is outside (0, 1] or alpha <= 0.
    """
    if not 0 < lam <= 1:
        raise DomainError(f"lambda must lie in (0, 1], got {lam}")
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    p = alpha + 1.0
    s = math.sqrt(1.0 + lam * lam)
    return (1.0 + lam * lam) / s**p * (1.0 - s**p) / (lam * lam) - (1.0 - lam ** (-p))


def solve_lambda(alpha: float) -> float:
    """Root of g in (0, 1) by bisection.

    Args:
        alpha: Kernel exponent, positive.

    Returns:
        lambda with |g(lambda)| <= 1e-12.

    Raises:
        BracketError: If g does not change sign on the bracket.
    """
    lo, hi = _BRACKET
    g_lo, g_hi = g_eval(lo, alpha), g_eval(hi, alpha)
    if not (g_lo > 0 > g_hi):
        raise BracketError(f"g has no sign change on {_BRACKET}: g(lo)={g_lo}, g(hi)={g_hi}")
    lam = float(bisect(g_eval, lo, hi, args=(alpha,), xtol=_XTOL))
    residual = g_eval(lam, alpha)
    if abs(residual) > _ROOT_TOLERANCE:
        log.warning("lambda root residual above tolerance", alpha=alpha, residual=residual)
    return lam


def _intensity_conditions(lam: float, alpha: float) -> tuple[float, float]:
    """Intensity ``a`` from each of the two side-rate conditions."""
    p = alpha + 1.0
    s = math.sqrt(1.0 + lam * lam)
    gap = lam ** (-p) - s ** (-p)
    first = (s ** (-p) - 1.0) / (lam * lam * gap)
    second = (1.0 - lam ** (-p)) / ((1.0 + lam * lam) * gap)
    return first, second


def intensity_from_lambda(lam: float, alpha: float) -> float:
    """Intensity of the first vortex for a root lambda.

    Args:
        lam: Root of g.
        alpha: Kernel exponent.

    Returns:
        The negative intensity ``a`` (the other two are 1).

    Raises:
        InconsistentIntensityError: If the two conditions disagree beyond 1e-8
            relative, i.e. lam is not a root.
        DomainError: If the intensity is not negative.
    """
    if not 0 < lam < 1:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")
    first, second = _intensity_conditions(lam, alpha)
    if abs(first - second) > _AGREEMENT * max(abs(first), abs(second)):
        raise InconsistentIntensityError(
            f"intensity conditions disagree: {first!r} vs {second!r}"
        )
    if first >= 0:
        raise DomainError(f"intensity must be negative, got {first}")
    return first


@dataclass(frozen=True, slots=True, eq=False)
class SelfSimilarSolution:
    """A collapsing self-similar triangle and its analytic constants.

    ``C``, ``C_prime``, ``D`` and ``T`` refer to the unit triangle ``|A(0)| = 1``;
    ``initial_state`` is that triangle dilated by ``scale`` about ``center``.

    Attributes:
        alpha: Kernel exponent.
        lam: Root of g, ``|B(0)| / |A(0)|``.
        intensity_a: Intensity of the first vortex.
        orientation: Sign of the y coordinate of x1 before recentring.
        initial_state: Configuration at t = 0.
        C: Rate in ``d|A|/dt = -C / |A|**alpha``.
        C_prime: ``(alpha + 1) C``.
        D: Angular rate at t = 0.
        T: Collapse time ``1 / C_prime`` of the unit triangle.
        rotation_spread: Spread of ``dx_j/dt / x_j`` across the vortices.
        scale: Dilation applied to the unit triangle.
        center: Limit point of the collapse.
    """

    alpha: float
    lam: float
    intensity_a: float
    orientation: int
    initial_state: VortexState
    C: float
    C_prime: float
    D: float
    T: float
    rotation_spread: float
    scale: float
    center: tuple[float, float]

    @property
    def collapse_time(self) -> float:
        """Collapse time of the dilated configuration."""
        return self.T * self.scale ** (self.alpha + 1.0)

    @property
    def collapse_radius(self) -> float:
        """Default collapse radius for integrating this configuration."""
        return SELF_SIMILAR_COLLAPSE_RADIUS * self.scale

    @property
    def holder_exponent(self) -> float:
        return 1.0 / (self.alpha + 1.0)


def _unit_triangle(lam: float, a: float, alpha: float, orientation: int) -> VortexState:
    """Right triangle with |A| = 1, |B| = lam, center of vorticity at the origin."""
    positions = np.array([[0.0, orientation * lam], [1.0, 0.0], [0.0, 0.0]])
    intensities = np.array([a, 1.0, 1.0])
    barycenter = intensities @ positions / intensities.sum()
    return VortexState(positions - barycenter, intensities, alpha)


def _contraction_rate(state: VortexState) -> float:
    """d|A|^2/dt from the velocity field."""
    v = velocity_field(state)
    side = state.positions[1] - state.positions[2]
    return 2.0 * float(side @ (v[1] - v[2]))


def build_configuration(
    alpha: float,
    orientation: int | None = None,
    *,
    scale: float = 1.0,
    center: ArrayLike = (0.0, 0.0),
) -> SelfSimilarSolution:
    """Build the collapsing right triangle for ``alpha``.

    Args:
        alpha: Kernel exponent, positive.
        orientation: +1 or -1 for the sign of x1's y coordinate; the contracting
            sign is chosen when None.
        scale: Dilation of the unit triangle.
        center: Point the configuration collapses to.

    Returns:
        The self-similar solution.

    Raises:
        ExpandingSolutionError: If the requested orientation expands.
        BracketError: If the root search fails.
    """
    if not scale > 0:
        raise DomainError(f"scale must be positive, got {scale}")
    lam = solve_lambda(alpha)
    a = intensity_from_lambda(lam, alpha)

    candidates = (orientation,) if orientation is not None else (1, -1)
    if any(c not in (1, -1) for c in candidates):
        raise DomainError(f"orientation must be +1 or -1, got {orientation}")
    for sign in candidates:
        assert sign is not None
        unit = _unit_triangle(lam, a, alpha, sign)
        rate = _contraction_rate(unit)
        if rate < 0:
            break
    else:
        raise ExpandingSolutionError(
            f"orientation {orientation} expands; request the opposite sign"
        )

    c = -0.5 * rate
    z = unit.positions[:, 0] + 1j * unit.positions[:, 1]
    v = velocity_field(unit)
    ratio = (v[:, 0] + 1j * v[:, 1]) / z
    d = float(np.mean(ratio.imag))
    spread = float(max(np.ptp(ratio.imag), np.ptp(ratio.real + c)))

    c_arr = np.asarray(center, dtype=np.float64)
    state = unit.with_positions(c_arr + scale * unit.positions)
    sol = SelfSimilarSolution(
        alpha=float(alpha),
        lam=lam,
        intensity_a=a,
        orientation=sign,
        initial_state=state,
        C=c,
        C_prime=(alpha + 1.0) * c,
        D=d,
        T=1.0 / ((alpha + 1.0) * c),
        rotation_spread=spread,
        scale=float(scale),
        center=(float(c_arr[0]), float(c_arr[1])),
    )
    log.debug("self-similar configuration built", alpha=alpha, lam=lam, a=a, T=sol.T, D=d)
    return sol


def analytic_trajectory(sol: SelfSimilarSolution, t: float) -> FloatArray:
    """Positions of the self-similar solution at time ``t``.

    Args:
        sol: The solution.
        t: Time in [0, T) of the dilated configuration.

    Returns:
        Array of shape (3, 2).

    Raises:
        DomainError: If t is outside [0, T).
    """
    t_end = sol.collapse_time
    if not 0 <= t < t_end:
        raise DomainError(f"t must lie in [0, {t_end}), got {t}")
    ratio = (t_end - t) / t_end
    f = ratio ** (1.0 / (sol.alpha + 1.0))
    theta = -sol.D * sol.T * math.log(ratio)
    center = np.asarray(sol.center)
    rel = sol.initial_state.positions - center
    z = (rel[:, 0] + 1j * rel[:, 1]) * f * complex(math.cos(theta), math.sin(theta))
    return np.stack([z.real, z.imag], axis=1) + center


def side_lengths(state: VortexState) -> tuple[float, float, float]:
    """(|A|, |B|, |C|) of a three-vortex state."""
    x1, x2, x3 = state.positions
    return (
        float(np.hypot(*(x2 - x3))),
        float(np.hypot(*(x3 - x1))),
        float(np.hypot(*(x1 - x2))),
    )


def triangle_side_rates(state: VortexState) -> tuple[float, float, float]:
    """Closed-form d|A|^2/dt, d|B|^2/dt and d|C|^2/dt for intensities (a, 1, 1).

    Uses ``d|A|^2/dt = 2 a tri (B^-p - C^-p)`` and its cyclic companions with
    ``tri = A x B`` and ``p = alpha + 1``; the second and third intensities must be 1.
    """
    if state.n != 3:
        raise DomainError("side rates are defined for three vortices")
    a1, a2, a3 = state.intensities
    if a2 != 1.0 or a3 != 1.0:
        raise DomainError("side rates assume intensities (a, 1, 1)")
    x1, x2, x3 = state.positions
    side_a, side_b = x2 - x3, x3 - x1
    tri = float(side_a[0] * side_b[1] - side_a[1] * side_b[0])
    la, lb, lc = side_lengths(state)
    p = state.alpha + 1.0
    return (
        2.0 * a1 * tri * (lb ** (-p) - lc ** (-p)),
        2.0 * tri * (lc ** (-p) - la ** (-p)),
        2.0 * tri * (la ** (-p) - lb ** (-p)),
    )


@dataclass(frozen=True, slots=True)
class SelfSimilarResiduals:
    """Residuals of every condition the construction must satisfy.

    ``pair_moment``, ``lambda_alpha`` and ``lambda_prime`` are relative to the
    same sums with absolute-valued terms. ``vanishing_functional`` names the
    scale functional that vanishes, or ``"none"``.
    """

    g: float
    condition_1: float
    condition_2: float
    pair_moment: float
    lambda_alpha: float
    lambda_prime: float
    vanishing_functional: str


def residuals(sol: SelfSimilarSolution, *, tolerance: float = 1e-10) -> SelfSimilarResiduals:
    """Evaluate every necessary condition on the constructed configuration."""
    first, second = _intensity_conditions(sol.lam, sol.alpha)
    state = sol.initial_state
    la, lb, lc = side_lengths(state)
    a = state.intensities
    prods = np.abs(np.array([a[1] * a[2], a[0] * a[2], a[0] * a[1]]))
    sides = np.array([la, lb, lc])
    lam_alpha, lam_prime = scaling_functionals(state)
    rel_l = abs(pair_moment(state)) / (2.0 * float(prods @ sides**2))
    rel_alpha = abs(lam_alpha) / (2.0 * float(prods @ sides ** (-sol.alpha)))
    rel_prime = abs(lam_prime) / (2.0 * float(prods @ sides ** (1.0 - sol.alpha)))
    if rel_prime <= tolerance and rel_prime <= rel_alpha:
        winner = "lambda_prime"
    elif rel_alpha <= tolerance:
        winner = "lambda_alpha"
    else:
        winner = "none"
    return SelfSimilarResiduals(
        g=abs(g_eval(sol.lam, sol.alpha)),
        condition_1=abs(sol.intensity_a - first),
        condition_2=abs(sol.intensity_a - second),
        pair_moment=rel_l,
        lambda_alpha=rel_alpha,
        lambda_prime=rel_prime,
        vanishing_functional=winner,
    )
