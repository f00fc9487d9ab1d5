"""Bifurcation-diagram density rasters.

A raster is a plain integer count grid: for every column a parameter
value is fixed, orbits are run from the configured initial conditions,
and each post-transient sample increments one bin.  Everything visual
(tone mapping, overlays) lives in the render module; keeping raw counts
here makes the data layer testable bit-exactly.

Two exactness guarantees matter and shape the implementation:

* Column parameters are evaluated as ``center + offset * step`` with the
  offset an exact multiple of 0.5, so on a window symmetric about 0 the
  mirrored column's parameter is the exact negation of its partner.
* With symmetric bins (``x_min == -x_max``, even ``rows``) the bin index
  of ``-x`` is ``rows - 1 - index(x)`` for every sample, signed zeros
  included: negative samples are binned by mirroring the index of their
  absolute value.  Positive bins are half-open ``[edge, edge+dx)``, so
  samples exactly on ``+-x_max`` are dropped on both sides alike.

For odd bounded-factor families with the paired initial conditions
``{+r, -r}`` the two orbits are exact negations of each other and the
sample multisets at ``+r`` and ``-r`` coincide.  The sweep exploits both
facts structurally (negate the computed orbit, copy the mirrored
column) instead of re-iterating, which makes the double flip symmetry
of the raster exact by construction and halves the work.

Column chunks have a fixed size regardless of the thread count, and
results merge by column index, so rasters are bit-identical for any
``threads`` value.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import pi

import numpy as np

from .errors import DomainError
from .families import GENERAL_1D, SINE, LOGISTIC, MapFamily
from .orbits import DOMAIN_TOL, orbit

#: Initial-condition policy: the signed critical-value pair {+r, -r}.
CRITICAL_PAIR = "critical-value-pair"

#: Columns per work unit; fixed so thread count cannot change results.
CHUNK = 256


@dataclass(frozen=True)
class DiagramSpec:
    """Sampling plan for one raster."""

    family: MapFamily
    r_min: float
    r_max: float
    columns: int
    x_min: float
    x_max: float
    rows: int
    transient: int
    keep: int
    init_policy: object = CRITICAL_PAIR   # CRITICAL_PAIR or tuple of y0
    symmetric_bins: bool = False

    def __post_init__(self):
        if not self.r_min < self.r_max:
            raise ValueError("need r_min < r_max")
        if not self.x_min < self.x_max:
            raise ValueError("need x_min < x_max")
        if self.columns < 1 or self.rows < 1:
            raise ValueError("need columns >= 1 and rows >= 1")
        if self.transient < 0 or self.keep < 1:
            raise ValueError("need transient >= 0 and keep >= 1")
        if self.symmetric_bins:
            if self.x_min != -self.x_max or self.rows % 2:
                raise ValueError(
                    "symmetric_bins needs x_min == -x_max and an even row count")
        if self.init_policy == CRITICAL_PAIR:
            if not self.family.bounded_factor:
                raise ValueError(
                    "critical-value-pair inits are only defined for "
                    "bounded-factor families; give an explicit y0 list")
        else:
            inits = tuple(float(v) for v in self.init_policy)
            if not inits:
                raise ValueError("init_policy list must not be empty")
            if not all(np.isfinite(inits)):
                raise DomainError("initial conditions must be finite")
            object.__setattr__(self, "init_policy", inits)

    @property
    def n_inits(self) -> int:
        return 2 if self.init_policy == CRITICAL_PAIR else len(self.init_policy)


@dataclass(frozen=True)
class Raster:
    """Count grid produced by build_diagram.

    ``counts[j, c]`` is the number of samples of column ``c`` that fell
    into bin ``j``; bin 0 sits at ``x_min`` (render flips for display).
    """

    spec: DiagramSpec
    counts: np.ndarray
    escaped_columns: tuple[int, ...] = ()


def default_spec(family: MapFamily = SINE) -> DiagramSpec:
    """Desk-scale default raster plan for a family.

    Bounded-factor families get the symmetric window r, x in [-2pi, 2pi]
    at 2000x1200 with the paired critical-value inits; the logistic map
    gets its classic window r in [2.5, 4], x in [0, 1], started at 0.5.
    """
    if family.bounded_factor:
        w = 2 * pi
        return DiagramSpec(family, -w, w, 2000, -w, w, 1200,
                           transient=1000, keep=500,
                           init_policy=CRITICAL_PAIR, symmetric_bins=True)
    if family.name == LOGISTIC.name:
        return DiagramSpec(family, 2.5, 4.0, 2000, 0.0, 1.0, 1200,
                           transient=1000, keep=500, init_policy=(0.5,))
    lo, hi = family.domain_hint
    y0 = 0.5 * (lo + hi)
    return DiagramSpec(family, lo, hi, 2000, lo, hi, 1200,
                       transient=1000, keep=500, init_policy=(y0,))


def column_parameters(spec: DiagramSpec) -> np.ndarray:
    """Midpoint parameter of every column.

    Equals ``r_min + (c + 0.5) * (r_max - r_min) / columns`` up to one
    rounding, but is evaluated as ``center + offset * step`` where the
    offset is an exact multiple of 0.5, so that for windows symmetric
    about zero the mirrored column's parameter is the exact negation.
    """
    step = (spec.r_max - spec.r_min) / spec.columns
    center = 0.5 * (spec.r_min + spec.r_max)
    offset = (np.arange(spec.columns) + 0.5) - spec.columns / 2
    return center + offset * step


def bin_edges(spec: DiagramSpec) -> np.ndarray:
    """The rows+1 bin edges along x."""
    return np.linspace(spec.x_min, spec.x_max, spec.rows + 1)


def bin_centers(spec: DiagramSpec) -> np.ndarray:
    e = bin_edges(spec)
    return 0.5 * (e[:-1] + e[1:])


def _bin_indices(spec: DiagramSpec, x: np.ndarray) -> np.ndarray:
    """Bin index per sample, -1 for dropped (outside window or NaN)."""
    x = np.asarray(x)
    rows = spec.rows
    dx = (spec.x_max - spec.x_min) / rows
    if spec.symmetric_bins:
        half = rows // 2
        with np.errstate(invalid="ignore"):
            base = np.floor(np.abs(x) / dx)
            ok = base < half
        base = np.where(ok, base, 0.0)
        j = np.where(np.signbit(x), half - 1 - base, half + base)
        return np.where(ok, j, -1.0).astype(np.int64)
    with np.errstate(invalid="ignore"):
        t = np.floor((x - spec.x_min) / dx)
        ok = (t >= 0.0) & (t < rows)
    return np.where(ok, t, -1.0).astype(np.int64)


def sample_attractor(family: MapFamily, r: float, spec: DiagramSpec) -> np.ndarray:
    """Concatenated post-transient samples for every configured initial
    condition at parameter ``r``.

    Orbits are iterated literally, one initial condition after the
    other; escaped general-1d orbits contribute whatever samples they
    produced before escaping.
    """
    if spec.init_policy == CRITICAL_PAIR:
        inits = [float(r), -float(r)]
    else:
        inits = list(spec.init_policy)
    parts = [orbit(family, r, y0, spec.transient, spec.keep).samples
             for y0 in inits]
    return np.concatenate(parts) if parts else np.empty(0)


def _iterate_block(family: MapFamily, a: np.ndarray, y0: np.ndarray,
                   transient: int, keep: int) -> np.ndarray:
    """Vectorized orbit block for families that cannot escape.

    Returns the (keep, len(a)) matrix of post-transient samples."""
    y = np.array(y0, dtype=float, copy=True)
    for _ in range(transient):
        y = family.eval(a, y)
    out = np.empty((keep, len(a)))
    for k in range(keep):
        y = family.eval(a, y)
        out[k] = y
    return out


def _iterate_block_escaping(family: MapFamily, a: np.ndarray, y0: np.ndarray,
                            transient: int, keep: int):
    """Vectorized orbit block with per-column escape tracking.

    Escaped columns stop sampling at the escape step; their remaining
    samples are NaN (dropped by binning).  Returns (samples, escaped
    mask)."""
    lo, hi = family.domain_hint
    y = np.array(y0, dtype=float, copy=True)
    alive = np.ones(len(a), dtype=bool)
    out = np.full((keep, len(a)), np.nan)
    with np.errstate(all="ignore"):
        for _ in range(transient):
            y = family.eval(a, y)
            good = (y >= lo - DOMAIN_TOL) & (y <= hi + DOMAIN_TOL)
            alive &= good
            y = np.where(alive, y, 0.5 * (lo + hi))
        for k in range(keep):
            y = family.eval(a, y)
            good = (y >= lo - DOMAIN_TOL) & (y <= hi + DOMAIN_TOL)
            alive &= good
            out[k, alive] = y[alive]
            y = np.where(alive, y, 0.5 * (lo + hi))
    return out, ~alive


def _histogram_chunk(spec: DiagramSpec, sample_blocks) -> np.ndarray:
    """Accumulate bin counts for one column chunk.

    ``sample_blocks`` yields (keep, nc) matrices (one per initial
    condition, or per derived orbit)."""
    nc = None
    flat = None
    for block, mirrored in sample_blocks:
        if nc is None:
            nc = block.shape[1]
            flat = np.zeros(nc * spec.rows, dtype=np.int64)
        j = _bin_indices(spec, block.ravel())
        if mirrored:
            j = np.where(j >= 0, spec.rows - 1 - j, -1)
        cols = np.tile(np.arange(nc, dtype=np.int64), block.shape[0])
        valid = j >= 0
        ids = cols[valid] * spec.rows + j[valid]
        flat += np.bincount(ids, minlength=nc * spec.rows)
    return flat.reshape(nc, spec.rows).T


def _sweep_chunk(spec: DiagramSpec, a: np.ndarray):
    """Counts and escape mask for the columns with parameters ``a``."""
    fam = spec.family
    pair = spec.init_policy == CRITICAL_PAIR
    escaped = np.zeros(len(a), dtype=bool)

    if fam.kind == GENERAL_1D:
        blocks = []
        for y0 in spec.init_policy:
            samples, esc = _iterate_block_escaping(
                fam, a, np.full(len(a), y0), spec.transient, spec.keep)
            blocks.append((samples, False))
            escaped |= esc
        counts = _histogram_chunk(spec, blocks)
        return counts, escaped

    if pair and fam.factor_odd:
        # Orbit of -r is the exact negation of the orbit of +r; with
        # symmetric bins the negation is a pure index mirror.
        samples = _iterate_block(fam, a, a, spec.transient, spec.keep)
        if spec.symmetric_bins:
            blocks = [(samples, False), (samples, True)]
        else:
            blocks = [(samples, False), (-samples, False)]
        return _histogram_chunk(spec, blocks), escaped

    starts = [a, -a] if pair else \
        [np.full(len(a), y0) for y0 in spec.init_policy]
    blocks = [(_iterate_block(fam, a, y0, spec.transient, spec.keep), False)
              for y0 in starts]
    return _histogram_chunk(spec, blocks), escaped


def build_diagram(spec: DiagramSpec, threads: int = 1) -> Raster:
    """Run the column sweep and return the count raster.

    The result is bit-identical for any ``threads`` value: chunking is
    fixed and chunk results merge by column index.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    r_cols = column_parameters(spec)
    counts = np.zeros((spec.rows, spec.columns), dtype=np.uint64)

    mirror_fast = (spec.family.factor_odd
                   and spec.init_policy == CRITICAL_PAIR
                   and spec.symmetric_bins
                   and spec.r_min == -spec.r_max)
    if mirror_fast:
        work = np.nonzero(r_cols >= 0.0)[0]
    else:
        work = np.arange(spec.columns)
    chunks = [work[i:i + CHUNK] for i in range(0, len(work), CHUNK)]

    def run(chunk):
        return _sweep_chunk(spec, r_cols[chunk])

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(chunk) for chunk in chunks]

    escaped: list[int] = []
    for chunk, (chunk_counts, chunk_escaped) in zip(chunks, results):
        counts[:, chunk] = chunk_counts
        escaped.extend(int(c) for c in chunk[chunk_escaped])

    if mirror_fast:
        # Sample multisets at -r and +r coincide for odd factors with
        # paired inits, so mirrored columns are exact copies.
        counts[:, spec.columns - 1 - work] = counts[:, work]
    return Raster(spec, counts, tuple(sorted(escaped)))


def symmetry_report(raster: Raster) -> tuple[float, float]:
    """L1 mismatch of the raster under the two window flips.

    Returns ``(x_flip, r_flip)`` mismatches, each normalized by the
    total count.  Requires symmetric bins and a parameter window
    symmetric about zero.
    """
    spec = raster.spec
    if not spec.symmetric_bins or spec.r_min != -spec.r_max:
        raise ValueError("symmetry_report needs symmetric bins and a "
                         "parameter window symmetric about 0")
    c = raster.counts.astype(np.int64)
    total = int(c.sum())
    if total == 0:
        return 0.0, 0.0
    x_flip = float(np.abs(c - c[::-1, :]).sum()) / total
    r_flip = float(np.abs(c - c[:, ::-1]).sum()) / total
    return x_flip, r_flip
