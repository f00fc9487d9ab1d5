"""Envelope curves of the critical-value orbit.

Over the plot abscissa ``r``, the order-``n`` envelope on branch ``b``
(``b = +1`` or ``-1``) is the n-th iterate of the map started from the
signed critical value::

    E_n^b(r) = g^n(r, b * r),   i.e.  u_0 = b*r,  u_{k+1} = g(r, u_k)

``n = 0`` gives the straight lines ``+-r``; ``n = 1`` gives ``r * f(r)``
and its mirror.  These curves trace the density discontinuities visible
in bifurcation diagrams, and pairwise intersections of curves of
different order land on periodic orbits (see the intersect module).

The parameter derivative ``dE/dr`` follows the forward recurrence

    d_0 = b,    d_{k+1} = f(u_k) + r * f'(u_k) * d_k

with ``f(u) = g(1, u)`` and ``f'(u) = dg/dy(1, u)``.

Both evaluators accept a scalar or an ndarray of abscissae.  The scalar
path iterates plain scalars in the exact same order as orbit sampling,
so an envelope value of order n is bit-identical to the n-th orbit
iterate from the same start.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .families import MapFamily


def _check_args(family: MapFamily, n: int, branch: int):
    family.require_bounded_factor()
    if branch not in (1, -1):
        raise ValueError(f"branch must be +1 or -1, got {branch!r}")
    if n < 0:
        raise ValueError("order n must be >= 0")


def envelope_value(family: MapFamily, n: int, branch: int, r):
    """Value of the order-``n`` envelope on the given branch at ``r``.

    ``r`` may be a float or an ndarray; the result matches its shape.
    """
    _check_args(family, n, branch)
    if np.ndim(r) == 0:
        rr = float(r)
        u = branch * rr
        for _ in range(n):
            u = family.eval(rr, u)
        return float(u)
    r = np.asarray(r, dtype=float)
    u = branch * r
    for _ in range(n):
        u = family.eval(r, u)
    return u


def envelope_derivative(family: MapFamily, n: int, branch: int, r):
    """Parameter derivative ``dE_n/dr`` at ``r`` (scalar or ndarray)."""
    _check_args(family, n, branch)
    scalar = np.ndim(r) == 0
    rr = float(r) if scalar else np.asarray(r, dtype=float)
    u = branch * rr
    d = float(branch) if scalar else np.full_like(rr, float(branch))
    for _ in range(n):
        fu = family.factor(u)
        fpu = family.factor_deriv(u)
        d = fu + rr * fpu * d
        u = family.eval(rr, u)
    return float(d) if scalar else d


@dataclass(frozen=True)
class EnvelopeCurve:
    """Sampled envelope polyline with its derivative channel."""

    family: MapFamily
    n: int
    branch: int
    r_samples: np.ndarray
    values: np.ndarray
    derivs: np.ndarray

    def __len__(self):
        return len(self.r_samples)


def envelope_polyline(family: MapFamily, n: int, branch: int,
                      r_min: float, r_max: float, points: int) -> EnvelopeCurve:
    """Sample the envelope on a uniform grid including both endpoints."""
    _check_args(family, n, branch)
    if points < 2:
        raise ValueError("points must be >= 2")
    if not r_min < r_max:
        raise ValueError("need r_min < r_max")
    r = np.linspace(r_min, r_max, points)
    # One shared pass so values and derivatives see the same iterates.
    u = branch * r
    d = np.full_like(r, float(branch))
    for _ in range(n):
        fu = family.factor(u)
        fpu = family.factor_deriv(u)
        d = fu + r * fpu * d
        u = family.eval(r, u)
    return EnvelopeCurve(family, n, branch, r, u, d)
