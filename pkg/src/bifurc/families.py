"""Parameterized one-dimensional map families.

A family is a map ``g(r, y)`` with a single real parameter ``r``.  Two kinds
are distinguished:

* ``bounded-factor``: ``g(r, y) = r * f(y)`` with ``|f| <= 1`` and
  ``f`` attaining the full range ``[-1, 1]``.  Orbits can never leave
  ``[-|r|, |r|]`` after the first step, so these families need no domain
  bookkeeping.  The sine map ``r * sin(y)`` is the canonical member.
* ``general-1d``: any other map (e.g. the logistic map), equipped with a
  ``domain_hint`` interval that orbits must stay inside; iterates leaving
  it are treated as escaped rather than as errors.

Evaluation callables are written with numpy ufuncs so they accept scalars
and arrays alike.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import UnsupportedFamilyError

BOUNDED_FACTOR = "bounded-factor"
GENERAL_1D = "general-1d"


@dataclass(frozen=True)
class MapFamily:
    """A parameterized 1-D map ``g(r, y)`` with its y-derivative.

    Fields
    ------
    name : str
        Identifier used in registries, CSV headers and CLI flags.
    kind : str
        Either ``"bounded-factor"`` or ``"general-1d"``.
    eval : callable
        ``g(r, y)``; must broadcast over numpy arrays.
    deriv_y : callable
        ``dg/dy (r, y)``; same broadcasting contract.
    factor_odd : bool
        True iff the family is bounded-factor and its factor ``f`` is odd.
        Odd factors give orbits that negate exactly when the initial
        condition is negated, which the diagram module exploits.
    domain_hint : (float, float) or None
        For general-1d families, the interval orbits must stay inside.
    """

    name: str
    kind: str
    eval: Callable
    deriv_y: Callable
    factor_odd: bool = False
    domain_hint: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in (BOUNDED_FACTOR, GENERAL_1D):
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == GENERAL_1D and self.domain_hint is None:
            raise ValueError("general-1d families need a domain_hint interval")
        if self.factor_odd and self.kind != BOUNDED_FACTOR:
            raise ValueError("factor_odd only applies to bounded-factor families")

    @property
    def bounded_factor(self) -> bool:
        return self.kind == BOUNDED_FACTOR

    def factor(self, y):
        """The bounded factor ``f(y) = g(1, y)``."""
        self.require_bounded_factor()
        return self.eval(1.0, y)

    def factor_deriv(self, y):
        """``f'(y)``, obtained as ``dg/dy`` at ``r = 1``."""
        self.require_bounded_factor()
        return self.deriv_y(1.0, y)

    def require_bounded_factor(self):
        if not self.bounded_factor:
            raise UnsupportedFamilyError(
                f"operation requires a bounded-factor family, got {self.name!r} "
                f"({self.kind})"
            )


def bounded_factor_family(name, f, f_deriv, odd=False) -> MapFamily:
    """Build a bounded-factor family ``g(r, y) = r * f(y)`` from its factor.

    ``f`` must map the reals into ``[-1, 1]`` and attain both endpoints;
    this is the caller's responsibility (the invariant is sampled by tests,
    not enforced here).
    """
    return MapFamily(
        name=name,
        kind=BOUNDED_FACTOR,
        eval=lambda r, y: r * f(y),
        deriv_y=lambda r, y: r * f_deriv(y),
        factor_odd=odd,
    )


def _rational_factor(y):
    return 2.0 * y / (1.0 + y * y)


def _rational_factor_deriv(y):
    y2 = y * y
    return 2.0 * (1.0 - y2) / ((1.0 + y2) * (1.0 + y2))


SINE = bounded_factor_family("sine", np.sin, np.cos, odd=True)

#: Smooth odd rational factor 2y/(1+y^2); attains +-1 at y = +-1.  Exercises
#: the bounded-factor machinery with a non-trigonometric factor.
RATIONAL_ODD = bounded_factor_family(
    "rational-odd", _rational_factor, _rational_factor_deriv, odd=True
)

LOGISTIC = MapFamily(
    name="logistic",
    kind=GENERAL_1D,
    eval=lambda r, y: r * y * (1.0 - y),
    deriv_y=lambda r, y: r * (1.0 - 2.0 * y),
    domain_hint=(0.0, 1.0),
)

FAMILIES: dict[str, MapFamily] = {
    f.name: f for f in (SINE, LOGISTIC, RATIONAL_ODD)
}


def get_family(name: str) -> MapFamily:
    """Look up a builtin family by name."""
    try:
        return FAMILIES[name]
    except KeyError:
        raise KeyError(
            f"unknown map family {name!r}; available: {sorted(FAMILIES)}"
        ) from None
