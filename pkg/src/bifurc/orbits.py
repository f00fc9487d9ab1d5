"""Orbit iteration, planar-map iterates and period detection.

All iteration here is strictly sequential scalar arithmetic: the k-th
iterate is a deterministic function of the initial value, so two code
paths that start from the same value and call the same family evaluator
produce bit-identical sequences.  Other modules (envelopes, intersection
certification) rely on that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EscapeError
from .families import GENERAL_1D, MapFamily

#: Slack allowed before an iterate of a general-1d map counts as escaped.
DOMAIN_TOL = 1e-12


def eval_step(family: MapFamily, r: float, y: float) -> float:
    """One application of the map: ``g(r, y)``.

    Raises DomainError for non-finite inputs.  No clamping is applied;
    bounded-factor composition semantics are exact.
    """
    if not (math.isfinite(r) and math.isfinite(y)):
        raise DomainError(f"eval_step needs finite inputs, got r={r!r}, y={y!r}")
    return float(family.eval(r, y))


def _out_of_domain(family: MapFamily, y: float) -> bool:
    if not math.isfinite(y):
        return True
    if family.kind != GENERAL_1D:
        return False
    lo, hi = family.domain_hint
    return y < lo - DOMAIN_TOL or y > hi + DOMAIN_TOL


@dataclass(frozen=True)
class Orbit:
    """Post-transient samples of one forward orbit.

    ``samples`` holds ``kept_len`` iterates recorded after the transient.
    If the orbit escaped (general-1d families only), ``escaped`` is set,
    ``escape_step`` is the global iteration index of the first bad
    iterate, and ``samples`` contains only the iterates recorded before
    it (so ``kept_len`` may be short of the request).
    """

    r: float
    samples: np.ndarray
    transient_len: int
    kept_len: int
    escaped: bool = False
    escape_step: int | None = None


def orbit(family: MapFamily, r: float, y0: float,
          transient: int, keep: int) -> Orbit:
    """Iterate ``y <- g(r, y)`` ``transient`` times, then record ``keep``
    further iterates."""
    if transient < 0 or keep < 1:
        raise ValueError("need transient >= 0 and keep >= 1")
    if not (math.isfinite(r) and math.isfinite(y0)):
        raise DomainError(f"orbit needs finite r and y0, got {r!r}, {y0!r}")

    y = y0
    step = 0
    for _ in range(transient):
        y = family.eval(r, y)
        step += 1
        if _out_of_domain(family, y):
            return Orbit(r, np.empty(0), transient, 0, True, step)

    out = np.empty(keep)
    for i in range(keep):
        y = family.eval(r, y)
        step += 1
        if _out_of_domain(family, y):
            return Orbit(r, out[:i].copy(), transient, i, True, step)
        out[i] = y
    return Orbit(r, out, transient, keep)


def planar_iterate(family: MapFamily, branch: int, x: float, n: int):
    """n-th iterate of the planar map ``(u, v) -> (u, u * f(v))`` applied
    to the seed ``(branch * x, x)``.

    Returns the pair ``(branch * x, v_n)`` where ``v_0 = x`` and
    ``v_{k+1} = g(branch * x, v_k)``.  By convention ``n = 0`` returns the
    seed itself.  Only defined for bounded-factor families (the first
    coordinate acts as the frozen parameter).
    """
    family.require_bounded_factor()
    if branch not in (1, -1):
        raise ValueError(f"branch must be +1 or -1, got {branch!r}")
    if n < 0:
        raise ValueError("n must be >= 0")
    a = branch * x
    v = x
    for _ in range(n):
        v = family.eval(a, v)
    return float(a), float(v)


def detect_period(family: MapFamily, r: float, y0: float,
                  transient: int = 10_000, max_period: int = 64,
                  tol: float = 1e-9) -> int | None:
    """Smallest period ``q <= max_period`` of the post-transient orbit.

    After the transient the reference point ``y`` is fixed and the first
    ``q`` with ``|g^q(r, y) - y| < tol`` is returned (None if there is no
    such q).  Scanning in ascending order makes the result minimal: a
    passing proper divisor would have been returned first.

    Raises EscapeError if the orbit leaves the domain of a general-1d
    family before the scan finishes.
    """
    if max_period < 1:
        raise ValueError("max_period must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")

    y = y0
    for step in range(transient):
        y = family.eval(r, y)
        if _out_of_domain(family, y):
            raise EscapeError(
                f"orbit escaped at step {step + 1} (r={r}, y0={y0})")
    ref = y
    z = y
    for q in range(1, max_period + 1):
        z = family.eval(r, z)
        if _out_of_domain(family, z):
            raise EscapeError(
                f"orbit escaped during period scan at q={q} (r={r})")
        if abs(z - ref) < tol:
            return q
    return None
