"""File emission: images, binary count grids and CSV exports.

Everything written here is byte-deterministic for identical inputs.
The mandatory image format is binary PPM (P6): trivial to golden-test,
no codec variance.  Counts are stored in a little-endian binary format
("BIFC") that round-trips exactly; curve and record CSVs print floats
with ``repr``, which round-trips ``float`` exactly in Python 3.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .diagram import DiagramSpec, Raster, bin_centers, column_parameters
from .envelopes import EnvelopeCurve
from .errors import FormatError
from .intersect import IntersectionRecord, PeriodicityReport

#: Overlay palette; the curve order picks the color (cycled).
OVERLAY_PALETTE = (
    (214, 39, 40),    # red
    (31, 119, 180),   # blue
    (44, 160, 44),    # green
    (255, 127, 14),   # orange
    (148, 103, 189),  # purple
    (23, 190, 207),   # cyan
    (227, 119, 194),  # pink
    (127, 127, 127),  # gray
)

_COUNTS_MAGIC = b"BIFC"

RECORD_FIELDS = ("n", "m", "branch1", "branch2", "r_star", "b",
                 "expected_period", "minimal_period", "tangential",
                 "delta_residual", "period_residual", "newton_converged")


@dataclass(frozen=True)
class ToneMap:
    """Count-to-ink mapping for raster images.

    ``log1p`` maps count c to ``round(255 * (ln(1+c)/ln(1+c_max))**(1/gamma))``,
    ``linear`` to ``round(255 * (c/c_max)**(1/gamma))``.  With
    ``invert=False`` zero counts map to white and the maximum count to
    black (ink on paper); ``invert=True`` flips that.
    """

    mode: str = "log1p"
    gamma: float = 1.0
    invert: bool = False

    def __post_init__(self):
        if self.mode not in ("linear", "log1p"):
            raise ValueError(f"unknown tone mode {self.mode!r}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def apply(self, counts: np.ndarray) -> np.ndarray:
        """Map a count grid to uint8 gray levels."""
        c = counts.astype(float)
        c_max = float(c.max()) if c.size else 0.0
        if c_max <= 0:
            t = np.zeros_like(c)
        elif self.mode == "log1p":
            t = np.log1p(c) / np.log1p(c_max)
        else:
            t = c / c_max
        v = np.rint(255.0 * t ** (1.0 / self.gamma)).astype(np.uint8)
        return v if self.invert else (255 - v)


def _pixel_of(spec: DiagramSpec, r: float, value: float) -> tuple[int, int]:
    """Map a data point to (column, image row); row 0 is the top (x_max).

    Points exactly on the right/bottom window edge map to the last
    pixel; everything else floors into its cell."""
    px = int(np.floor((r - spec.r_min) / (spec.r_max - spec.r_min) * spec.columns))
    py = int(np.floor((spec.x_max - value) / (spec.x_max - spec.x_min) * spec.rows))
    px = min(px, spec.columns - 1) if r == spec.r_max else px
    py = min(py, spec.rows - 1) if value == spec.x_min else py
    return px, py


def _draw_segment(img: np.ndarray, x0: int, y0: int, x1: int, y1: int, color):
    """Integer line stepping (Bresenham); pixels outside are clipped."""
    h, w = img.shape[:2]
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        if 0 <= x < w and 0 <= y < h:
            img[y, x] = color
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy


def render_image(raster: Raster, tone: ToneMap | None = None,
                 overlays=()) -> np.ndarray:
    """Rasterize to an (rows, columns, 3) uint8 RGB array.

    Row 0 of the image is the top of the window (x = x_max).  Overlay
    polylines are drawn last, one pixel wide, colored by their order.
    """
    spec = raster.spec
    tone = tone or ToneMap()
    gray = tone.apply(raster.counts)[::-1, :]    # data row 0 is x_min
    img = np.repeat(gray[:, :, None], 3, axis=2).copy()
    for curve in overlays:
        _check_overlay(spec, curve)
        color = np.array(OVERLAY_PALETTE[curve.n % len(OVERLAY_PALETTE)],
                         dtype=np.uint8)
        pts = [_pixel_of(spec, float(r), float(v))
               for r, v in zip(curve.r_samples, curve.values)]
        for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
            _draw_segment(img, x0, y0, x1, y1, color)
    return img


def _check_overlay(spec: DiagramSpec, curve: EnvelopeCurve):
    if curve.family.name != spec.family.name:
        raise ValueError(
            f"overlay family {curve.family.name!r} does not match raster "
            f"family {spec.family.name!r}")
    pad = 1e-9 * (spec.r_max - spec.r_min)
    r0, r1 = float(curve.r_samples[0]), float(curve.r_samples[-1])
    if r0 < spec.r_min - pad or r1 > spec.r_max + pad:
        raise ValueError(
            f"overlay r-window [{r0}, {r1}] exceeds raster window "
            f"[{spec.r_min}, {spec.r_max}]")


def write_image(raster: Raster, tone: ToneMap | None = None,
                overlays=(), path="diagram.ppm") -> None:
    """Write a binary PPM (P6) image of the raster with overlays."""
    if raster.counts.size == 0:
        raise ValueError("raster is empty")
    img = render_image(raster, tone, overlays)
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(img.tobytes())


def write_counts(raster: Raster, path) -> None:
    """Binary count grid: magic "BIFC", u32 rows, u32 columns, 8 doubles
    (r_min, r_max, x_min, x_max, transient, keep, n_inits,
    symmetric_bins), then row-major u64 counts; all little-endian."""
    spec = raster.spec
    with open(path, "wb") as fh:
        fh.write(_COUNTS_MAGIC)
        fh.write(struct.pack("<II", spec.rows, spec.columns))
        fh.write(struct.pack(
            "<8d", spec.r_min, spec.r_max, spec.x_min, spec.x_max,
            float(spec.transient), float(spec.keep),
            float(spec.n_inits), float(bool(spec.symmetric_bins))))
        fh.write(np.ascontiguousarray(raster.counts, dtype="<u8").tobytes())


def read_counts(path):
    """Read a "BIFC" file; returns (counts uint64 array, metadata dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _COUNTS_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        rows, columns = struct.unpack("<II", fh.read(8))
        vals = struct.unpack("<8d", fh.read(64))
        data = fh.read(rows * columns * 8)
        if len(data) != rows * columns * 8:
            raise FormatError(f"{path}: truncated count payload")
    counts = np.frombuffer(data, dtype="<u8").reshape(rows, columns)
    meta = {
        "r_min": vals[0], "r_max": vals[1],
        "x_min": vals[2], "x_max": vals[3],
        "transient": int(vals[4]), "keep": int(vals[5]),
        "n_inits": int(vals[6]), "symmetric_bins": bool(vals[7]),
    }
    return counts.astype(np.uint64), meta


def write_counts_csv(raster: Raster, path, header_lines=()) -> None:
    """CSV of every cell: column parameter r, bin center x, count."""
    rr = column_parameters(raster.spec)
    xx = bin_centers(raster.spec)
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("r,x,count\n")
        counts = raster.counts
        x_reprs = [repr(float(v)) for v in xx]
        for c in range(raster.spec.columns):
            rc = repr(float(rr[c]))
            col = counts[:, c]
            for j in range(raster.spec.rows):
                fh.write(f"{rc},{x_reprs[j]},{int(col[j])}\n")


def write_curve_csv(curve: EnvelopeCurve, path, header_lines=()) -> None:
    """CSV polyline export: r, value, derivative (repr round-trip)."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("r,value,derivative\n")
        for r, v, d in zip(curve.r_samples, curve.values, curve.derivs):
            fh.write(f"{float(r)!r},{float(v)!r},{float(d)!r}\n")


def read_curve_csv(path):
    """Read a curve CSV back; returns (r, values, derivs) float arrays."""
    rs, vs, ds = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("r,"):
                continue
            a, b, c = line.split(",")
            rs.append(float(a))
            vs.append(float(b))
            ds.append(float(c))
    return np.array(rs), np.array(vs), np.array(ds)


def _record_row(item) -> dict:
    if isinstance(item, PeriodicityReport):
        rec = item.record
        return {
            "n": rec.n, "m": rec.m,
            "branch1": "+" if rec.branches[0] > 0 else "-",
            "branch2": "+" if rec.branches[1] > 0 else "-",
            "r_star": repr(rec.r_star), "b": repr(rec.b),
            "expected_period": rec.expected_period,
            "minimal_period": "" if item.minimal_period is None
                              else item.minimal_period,
            "tangential": "true" if rec.tangential else "false",
            "delta_residual": repr(rec.delta_residual),
            "period_residual": repr(item.period_residual),
            "newton_converged": "true" if item.newton_converged else "false",
        }
    rec = item
    return {
        "n": rec.n, "m": rec.m,
        "branch1": "+" if rec.branches[0] > 0 else "-",
        "branch2": "+" if rec.branches[1] > 0 else "-",
        "r_star": repr(rec.r_star), "b": repr(rec.b),
        "expected_period": rec.expected_period,
        "minimal_period": "",
        "tangential": "true" if rec.tangential else "false",
        "delta_residual": repr(rec.delta_residual),
        "period_residual": "",
        "newton_converged": "",
    }


def write_records_csv(items, path, header_lines=()) -> None:
    """CSV of intersection records and/or periodicity reports.

    Bare records leave the certification columns empty; reports fill
    them."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(RECORD_FIELDS) + "\n")
        for item in items:
            row = _record_row(item)
            fh.write(",".join(str(row[k]) for k in RECORD_FIELDS) + "\n")


def read_records_csv(path):
    """Read a records CSV; returns a list of dicts keyed by RECORD_FIELDS
    with numeric fields parsed (empty certification fields become None)."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                if tuple(header) != RECORD_FIELDS:
                    raise FormatError(
                        f"{path}: unexpected record header {header!r}")
                continue
            parts = line.split(",")
            if len(parts) != len(RECORD_FIELDS):
                raise FormatError(f"{path}: malformed row {line!r}")
            raw = dict(zip(RECORD_FIELDS, parts))
            out.append({
                "n": int(raw["n"]),
                "m": int(raw["m"]),
                "branch1": 1 if raw["branch1"] == "+" else -1,
                "branch2": 1 if raw["branch2"] == "+" else -1,
                "r_star": float(raw["r_star"]),
                "b": float(raw["b"]),
                "expected_period": int(raw["expected_period"]),
                "minimal_period": (None if raw["minimal_period"] == ""
                                   else int(raw["minimal_period"])),
                "tangential": raw["tangential"] == "true",
                "delta_residual": float(raw["delta_residual"]),
                "period_residual": (None if raw["period_residual"] == ""
                                    else float(raw["period_residual"])),
                "newton_converged": (None if raw["newton_converged"] == ""
                                     else raw["newton_converged"] == "true"),
            })
    return out


def record_from_row(row: dict) -> IntersectionRecord:
    """Rebuild an IntersectionRecord from a parsed CSV row."""
    return IntersectionRecord(
        n=row["n"], m=row["m"], branches=(row["branch1"], row["branch2"]),
        r_star=row["r_star"], b=row["b"],
        expected_period=row["expected_period"],
        tangential=row["tangential"],
        delta_residual=row["delta_residual"])
