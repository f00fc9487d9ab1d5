"""Envelope-curve intersections and periodic-point certification.

For orders ``n < m`` and branch signs ``(b1, b2)``, intersections of the
two envelopes are the roots of ``delta(r) = E_n^b1(r) - E_m^b2(r)``.
Every such root at abscissa ``a`` with common ordinate ``b`` lands on a
periodic orbit of the 1-D map at parameter ``a``:

* same branch: ``b`` is fixed by ``g^p(a, .)`` with ``p = m - n``;
* mixed branch: ``b`` is fixed by ``g^{2p}(a, .)``.

``find_intersections`` locates roots by sign-change bracketing on a
uniform scan grid (bisection, then bracket-guarded Newton using the
envelope derivative).  Tangential contacts never change sign, so a
secondary scan refines every interior local minimum of ``|delta|``
below ``sqrt(tol)`` through a root of ``delta'``; contacts sharper than
the scan grid resolves are not guaranteed to be found.

``verify_periodicity`` then certifies the period law for a record by
running Newton on ``F(y) = g^q(r, y) - y`` from the ordinate ``b`` and
reporting the residual at the refined point.  Certification is
algebraic: it does not require the cycle to be attracting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diagram import DiagramSpec, sample_attractor
from .envelopes import envelope_derivative, envelope_value
from .families import MapFamily

#: Scan points per unit of r when no explicit grid size is given.
GRID_DENSITY = 4096
#: Default refinement tolerance (width of the final bracket, in r).
REFINE_TOL = 1e-12
#: Default certification tolerance on |g^q(r, y) - y|.
CERT_TOL = 1e-8
#: Newton iteration cap for periodicity certification.
NEWTON_STEPS = 50


@dataclass(frozen=True)
class IntersectionRecord:
    """One located intersection of two envelope curves."""

    n: int
    m: int
    branches: tuple[int, int]
    r_star: float
    b: float
    expected_period: int
    tangential: bool
    delta_residual: float


@dataclass(frozen=True)
class PeriodicityReport:
    """Outcome of certifying one intersection record."""

    record: IntersectionRecord
    refined_b: float
    period_residual: float
    newton_converged: bool
    minimal_period: int | None


def expected_period(n: int, m: int, branches: tuple[int, int]) -> int:
    p = m - n
    return p if branches[0] == branches[1] else 2 * p


def _check_branches(branches) -> tuple[int, int]:
    b1, b2 = branches
    if b1 not in (1, -1) or b2 not in (1, -1):
        raise ValueError(f"branches must be +-1 pairs, got {branches!r}")
    return int(b1), int(b2)


def _bisect_roots(f, lo, hi, flo, iters=64):
    """Vectorized bisection on brackets [lo, hi] with f(lo) ~ flo.

    Runs a fixed iteration count; widths reach float granularity well
    before 64 halvings, after which midpoints stop moving."""
    lo = lo.copy()
    hi = hi.copy()
    flo = flo.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        done = (mid <= lo) | (mid >= hi)
        if np.all(done):
            break
        fm = f(mid)
        same = np.sign(fm) == np.sign(flo)
        lo = np.where(same & ~done, mid, lo)
        flo = np.where(same & ~done, fm, flo)
        hi = np.where(~same & ~done, mid, hi)
    return 0.5 * (lo + hi), lo, hi


def _refine_transversal(f, fprime, lo, hi, flo, tol):
    """Bisection followed by bracket-guarded Newton, vectorized.

    Brackets first shrink by pure bisection to ~sqrt(tol) scale, then
    Newton proposals (clamped into the open bracket, with midpoint
    fallback) finish the job; the sign bracket is maintained throughout,
    so the result cannot leave the initial interval.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    flo = np.asarray(flo, dtype=float).copy()

    coarse = max(tol, 1e-7)
    for _ in range(64):
        if np.all(hi - lo <= coarse):
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        same = np.sign(fm) == np.sign(flo)
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(~same, mid, hi)

    r = 0.5 * (lo + hi)
    for _ in range(30):
        if np.all(hi - lo <= tol):
            break
        fr = f(r)
        exact = fr == 0.0
        same = (np.sign(fr) == np.sign(flo)) & ~exact
        lo = np.where(same, r, lo)
        flo = np.where(same, fr, flo)
        hi = np.where(~same & ~exact, r, hi)
        lo = np.where(exact, r, lo)
        hi = np.where(exact, r, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = r - fr / fprime(r)
        bad = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
        r = np.where(bad, 0.5 * (lo + hi), cand)

    # Mop up with plain bisection so the final bracket always honors tol
    # even when Newton proposals cluster near one endpoint.
    for _ in range(64):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        stuck = (mid <= lo) | (mid >= hi)
        fm = f(mid)
        same = (np.sign(fm) == np.sign(flo)) & ~stuck
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(~same & ~stuck, mid, hi)
        if np.all(stuck | (hi - lo <= tol)):
            break
    return 0.5 * (lo + hi)


def find_intersections(family: MapFamily, n: int, m: int, branches,
                       r_min: float, r_max: float,
                       grid: int | None = None,
                       tol: float = REFINE_TOL) -> list[IntersectionRecord]:
    """Locate intersections of the order-n and order-m envelopes.

    Scans ``delta(r) = E_n^b1(r) - E_m^b2(r)`` on a uniform grid of
    ``grid`` points (default: 4096 per unit of r), refines every sign
    change to a bracket narrower than ``tol`` and every qualifying
    ``|delta|`` minimum through a root of ``delta'``.  Records within
    ``10 * tol`` of each other in r are merged.  If the window contains
    r = 0, records within ``sqrt(tol)`` of 0 are suppressed: every
    envelope passes through the origin, so that intersection is
    degenerate and carries no period information.
    """
    family.require_bounded_factor()
    if not n < m:
        raise ValueError("need n < m")
    if not r_min < r_max:
        raise ValueError("need r_min < r_max")
    if tol <= 0:
        raise ValueError("tol must be positive")
    b1, b2 = _check_branches(branches)
    if grid is None:
        grid = max(16, int(math.ceil((r_max - r_min) * GRID_DENSITY)))
    if grid < 16:
        raise ValueError("grid must be >= 16")

    def delta(r):
        return envelope_value(family, n, b1, r) - envelope_value(family, m, b2, r)

    def ddelta(r):
        return (envelope_derivative(family, n, b1, r)
                - envelope_derivative(family, m, b2, r))

    rs = np.linspace(r_min, r_max, grid)
    d = delta(rs)
    dp = ddelta(rs)
    sq = math.sqrt(tol)

    roots: list[tuple[float, bool]] = []    # (r_star, tangential)

    # Transversal roots: sign changes between adjacent scan points.
    sign = np.sign(d)
    cross = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if len(cross):
        refined = _refine_transversal(delta, ddelta,
                                      rs[cross], rs[cross + 1], d[cross], tol)
        roots.extend((float(r), False) for r in refined)

    # Tangential contacts: interior minima of |delta| below sqrt(tol),
    # refined through the sign change of delta' in the surrounding cells.
    ad = np.abs(d)
    interior = np.arange(1, grid - 1)
    is_min = (ad[interior] <= ad[interior - 1]) & (ad[interior] <= ad[interior + 1])
    cands = interior[is_min & (ad[interior] < sq)]
    cand_lo, cand_hi, cand_flo = [], [], []
    for i in cands:
        if sign[i - 1] * sign[i + 1] < 0:
            continue    # grid-level sign change: the bracketing pass owns it
        if np.sign(dp[i - 1]) != np.sign(dp[i]) and dp[i - 1] != 0:
            lo, hi, flo = rs[i - 1], rs[i], dp[i - 1]
        elif np.sign(dp[i]) != np.sign(dp[i + 1]) and dp[i] != 0:
            lo, hi, flo = rs[i], rs[i + 1], dp[i]
        else:
            continue    # no stationary point bracketed: shallow noise
        cand_lo.append(lo)
        cand_hi.append(hi)
        cand_flo.append(flo)
    if cand_lo:
        stat, _, _ = _bisect_roots(ddelta, np.asarray(cand_lo),
                                   np.asarray(cand_hi), np.asarray(cand_flo))
        for k, r_hat in enumerate(stat):
            r_hat = float(r_hat)
            v = delta(r_hat)
            v_left = delta(float(cand_lo[k]))
            v_right = delta(float(cand_hi[k]))
            if v != 0.0 and (np.sign(v) != np.sign(v_left)
                             or np.sign(v) != np.sign(v_right)):
                # The dip crosses zero twice inside the cell pair: two
                # transversal roots the grid could not see.
                if np.sign(v) != np.sign(v_left):
                    r1 = _refine_transversal(delta, ddelta,
                                             np.array([cand_lo[k]]),
                                             np.array([r_hat]),
                                             np.array([v_left]), tol)
                    roots.append((float(r1[0]), False))
                if np.sign(v) != np.sign(v_right):
                    r2 = _refine_transversal(delta, ddelta,
                                             np.array([r_hat]),
                                             np.array([cand_hi[k]]),
                                             np.array([v]), tol)
                    roots.append((float(r2[0]), False))
            elif abs(v) < sq:
                roots.append((r_hat, True))

    # Degenerate common point at the origin: all envelopes meet there.
    if r_min <= 0.0 <= r_max:
        roots = [(r, t) for (r, t) in roots if abs(r) >= sq]

    roots.sort()
    merged: list[tuple[float, bool]] = []
    for r, tang in roots:
        if merged and abs(r - merged[-1][0]) <= 10 * tol:
            prev_r, prev_tang = merged[-1]
            if prev_tang and not tang:
                merged[-1] = (r, tang)
            continue
        merged.append((r, tang))

    q = expected_period(n, m, (b1, b2))
    records = []
    for r_star, tang in merged:
        b = envelope_value(family, n, b1, r_star)
        resid = abs(b - envelope_value(family, m, b2, r_star))
        records.append(IntersectionRecord(
            n=n, m=m, branches=(b1, b2), r_star=r_star, b=b,
            expected_period=q, tangential=tang, delta_residual=resid))
    return records


def _cycle_map(family: MapFamily, r: float, y: float, q: int):
    """``(g^q(r, y), d/dy g^q(r, y))`` by the chain rule along the orbit."""
    z = y
    deriv = 1.0
    for _ in range(q):
        deriv = deriv * family.deriv_y(r, z)
        z = family.eval(r, z)
    return float(z), float(deriv)


def verify_periodicity(family: MapFamily, record: IntersectionRecord,
                       tol: float = CERT_TOL) -> PeriodicityReport:
    """Certify that the record's ordinate is a periodic point.

    Runs Newton on ``F(y) = g^q(r, y) - y`` with ``q`` the record's
    expected period, starting from the ordinate ``b``.  The refined
    point, the residual there, and the smallest divisor of ``q`` that
    also certifies at the same tolerance are reported.  Divergence
    (iterates leaving ``[-|r|-1, |r|+1]``) yields ``newton_converged =
    False`` with the raw residual at ``b``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    r = record.r_star
    q = record.expected_period
    bound = abs(r) + 1.0
    y = record.b

    escaped = False
    for _ in range(NEWTON_STEPS):
        z, deriv = _cycle_map(family, r, y, q)
        f = z - y
        if f == 0.0:
            break
        fp = deriv - 1.0
        if fp == 0.0 or not math.isfinite(fp):
            break
        step = f / fp
        y_next = y - step
        if not math.isfinite(y_next) or abs(y_next) > bound:
            escaped = True
            break
        if y_next == y:
            break
        y = y_next

    if escaped:
        y = record.b
    z, _ = _cycle_map(family, r, y, q)
    residual = abs(z - y)

    converged = (not escaped) and residual < tol
    minimal = None
    if converged:
        for div in range(1, q + 1):
            if q % div:
                continue
            zd, _ = _cycle_map(family, r, y, div)
            if abs(zd - y) < tol:
                minimal = div
                break
    return PeriodicityReport(record=record, refined_b=float(y),
                             period_residual=float(residual),
                             newton_converged=converged,
                             minimal_period=minimal)


def limit_proximity(family: MapFamily, n_large: int, r: float,
                    spec: DiagramSpec) -> float:
    """Distance from the order-``n_large`` envelope value to the sampled
    attractor at the same parameter.

    The high-order envelope value is an iterate of the critical-value
    orbit, so with ``n_large`` inside the sampled index window the
    distance is exactly zero; the measurement is meaningful mainly for
    windows that do not overlap.  Requires ``n_large >= spec.transient``
    so the envelope iterate is past the transient.
    """
    if n_large < spec.transient:
        raise ValueError("need n_large >= spec.transient")
    e = envelope_value(family, n_large, +1, r)
    samples = sample_attractor(family, r, spec)
    if len(samples) == 0:
        raise ValueError("attractor sample set is empty (escaped orbit?)")
    return float(np.min(np.abs(samples - e)))
