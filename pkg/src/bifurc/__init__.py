"""Bifurcation diagrams of 1-D maps, envelope curves of the
critical-value orbit, and certification of envelope intersections as
periodic points."""

from .diagram import (
    CRITICAL_PAIR,
    DiagramSpec,
    Raster,
    bin_centers,
    bin_edges,
    build_diagram,
    column_parameters,
    default_spec,
    sample_attractor,
    symmetry_report,
)
from .envelopes import (
    EnvelopeCurve,
    envelope_derivative,
    envelope_polyline,
    envelope_value,
)
from .errors import (
    BifurcError,
    DomainError,
    EscapeError,
    FormatError,
    UnsupportedFamilyError,
)
from .families import (
    FAMILIES,
    LOGISTIC,
    RATIONAL_ODD,
    SINE,
    MapFamily,
    bounded_factor_family,
    get_family,
)
from .intersect import (
    IntersectionRecord,
    PeriodicityReport,
    expected_period,
    find_intersections,
    limit_proximity,
    verify_periodicity,
)
from .orbits import (
    Orbit,
    detect_period,
    eval_step,
    orbit,
    planar_iterate,
)
from .render import (
    OVERLAY_PALETTE,
    RECORD_FIELDS,
    ToneMap,
    read_counts,
    read_curve_csv,
    read_records_csv,
    record_from_row,
    render_image,
    write_counts,
    write_counts_csv,
    write_curve_csv,
    write_image,
    write_records_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BifurcError", "CRITICAL_PAIR", "DiagramSpec", "DomainError",
    "EnvelopeCurve", "EscapeError", "FAMILIES", "FormatError",
    "IntersectionRecord", "LOGISTIC", "MapFamily", "OVERLAY_PALETTE",
    "Orbit", "PeriodicityReport", "RATIONAL_ODD", "RECORD_FIELDS",
    "Raster", "SINE", "ToneMap", "UnsupportedFamilyError",
    "bin_centers", "bin_edges", "bounded_factor_family", "build_diagram",
    "column_parameters", "default_spec", "detect_period",
    "envelope_derivative", "envelope_polyline", "envelope_value",
    "eval_step", "expected_period", "find_intersections", "get_family",
    "limit_proximity", "orbit", "planar_iterate", "read_counts",
    "read_curve_csv", "read_records_csv", "record_from_row",
    "render_image", "sample_attractor", "symmetry_report",
    "verify_periodicity", "write_counts", "write_counts_csv",
    "write_curve_csv", "write_image", "write_records_csv",
]
