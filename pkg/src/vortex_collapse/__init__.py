"""Generalized alpha point-vortex dynamics: simulation, collapse construction
and verification of conservation and Hölder-regularity predictions.

Typical usage example:

    from vortex_collapse.selfsimilar import build_configuration
    from vortex_collapse.integrator import IntegratorOptions, integrate

    sol = build_configuration(1.0)
    record = integrate(sol.initial_state, 0.0, 2 * sol.T, IntegratorOptions())
"""

__version__ = "0.1.0"
