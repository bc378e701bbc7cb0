"""Construction, ingestion and validation of monotone figure-eight seeds.

The built-in family is the Bernoulli lemniscate; arbitrary point lists can
be ingested from memory or a two-column CSV.  A seed is validated against
the monotone-class conditions: convex lobes, strictly increasing curvature
in the tangent angle, a nonzero second theta-derivative of the curvature at
the rightmost point, and a first-order (not second-order) vanishing of the
signed curvature at the double point.  Real-analyticity cannot be probed
discretely and is taken as given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .curvegeom import (
    MIN_ARC_POINTS,
    GeometryError,
    QuarterArc,
    lobe_curvatures,
    resample_to_count,
    turning_angles,
)
from .diagnostics import theta_profile

# Dense parameter sampling used before reducing to the requested count;
# generous because chordal-arclength ripple in the reduction shows up as
# curvature noise near the tip, where kappa_theta is genuinely small.
_DENSE_FACTOR = 32
_DENSE_MIN = 8192

# Samples dropped at each profile end for the kappa_theta positivity check;
# the discrete curvature is least trustworthy at the endpoints and the
# monotonicity condition is an open-interval one.
END_MARGIN = 3


@dataclass(frozen=True)
class SeedSpec:
    """Declarative description of an initial curve."""

    kind: str = "lemniscate"
    a: float = 1.0
    n: int = 800
    source_path: str | None = None

    def __post_init__(self):
        if self.kind not in ("lemniscate", "from_points"):
            raise ValueError(f"unknown seed kind {self.kind!r}")
        if self.a <= 0.0:
            raise ValueError("scale a must be positive")
        if self.n < 32:
            raise ValueError("vertex count n must be at least 32")


@dataclass(frozen=True)
class MonotoneReport:
    """Discrete checks of the monotone figure-eight conditions."""

    convex: bool
    convex_margin: float
    kappa_theta_positive: bool
    kappa_theta_margin: float
    kappa_thetatheta_at_right: float
    kappa_thetatheta_nonzero: bool
    kx_at_origin: float
    kx_positive: bool

    @property
    def passed(self) -> bool:
        return (self.convex and self.kappa_theta_positive
                and self.kappa_thetatheta_nonzero and self.kx_positive)


def lemniscate_arc(a: float, n: int) -> QuarterArc:
    """Quarter of the Bernoulli lemniscate x^2+y^2 = a sqrt(x^2-y^2) scaled to half-width a.

    Samples x = a cos(u)/(1+sin^2 u), y = a sin(u) cos(u)/(1+sin^2 u) for
    u in [0, pi/2], reordered to run from the origin to the rightmost
    point and resampled to n vertices uniform in arclength.
    """
    if a <= 0.0:
        raise ValueError("scale a must be positive")
    u = np.linspace(0.0, 0.5 * math.pi, max(_DENSE_FACTOR * n, _DENSE_MIN))
    den = 1.0 + np.sin(u) ** 2
    x = a * np.cos(u) / den
    y = a * np.sin(u) * np.cos(u) / den
    pts = np.column_stack([x, y])[::-1]
    pts[0] = (0.0, 0.0)
    pts[-1] = (a, 0.0)
    return resample_to_count(QuarterArc.from_vertices(pts), n)


def read_points_csv(path: str | Path) -> np.ndarray:
    """Read (x, y) rows from a two-column CSV; a header line is skipped."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.replace(",", " ").split()
            if not parts:
                continue
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                if line_no == 1:
                    continue
                raise GeometryError(f"{path}: unparsable line {line_no}: {line.strip()!r}")
            if len(vals) != 2:
                raise GeometryError(f"{path}: expected 2 columns on line {line_no}")
            rows.append(vals)
    return np.asarray(rows, dtype=float)


def ingest_arc(points, n: int | None = None) -> QuarterArc:
    """Build a quarter arc from raw points, fixing orientation and endpoints.

    Accepts the points in either traversal order, snaps the endpoints onto
    their exact constraints, optionally resamples to n vertices, and
    rejects non-x-monotone or non-convex input, naming the offending
    indices.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise GeometryError("expected an (n, 2) point list")
    if pts.shape[0] < MIN_ARC_POINTS:
        raise GeometryError(f"need at least {MIN_ARC_POINTS} points")
    if pts[0, 0] > pts[-1, 0]:
        pts = pts[::-1]
    scale = float(np.abs(pts[:, 0]).max())
    if np.hypot(*pts[0]) > 1e-6 * scale:
        raise GeometryError(f"first point {tuple(pts[0])} is not near the origin")
    if abs(pts[-1, 1]) > 1e-6 * scale:
        raise GeometryError(f"last point {tuple(pts[-1])} is not near the x-axis")
    dx = np.diff(pts[:, 0])
    if np.any(dx <= 0.0):
        bad = (np.nonzero(dx <= 0.0)[0] + 1).tolist()
        raise GeometryError(f"x not strictly increasing at indices {bad[:8]}")
    pts = pts.copy()
    pts[0] = (0.0, 0.0)
    pts[-1, 1] = 0.0
    turns = turning_angles(pts)
    wrong = np.nonzero(turns > 1e-9)[0] + 1
    if wrong.size:
        raise GeometryError(f"convexity fails at indices {wrong.tolist()[:8]}")
    arc = QuarterArc.from_vertices(pts)
    return resample_to_count(arc, n) if n is not None else arc


def validate_monotone(arc: QuarterArc) -> MonotoneReport:
    """Report the discrete monotone-class checks for a seed arc.

    kappa_theta is taken from the tangent-angle profile with a margin of
    END_MARGIN samples at each end; the second theta-derivative at the
    rightmost point comes from a one-sided quadratic fit; the curvature
    slope at the double point is the linear fit of the signed curvature
    against x over the first five vertices.
    """
    turns = turning_angles(arc.vertices)
    convex_margin = float(-turns.max())
    convex = bool(np.all(turns <= 1e-9))

    profile = theta_profile(arc)
    inner = slice(END_MARGIN, -END_MARGIN)
    kt = profile.kappa_theta[inner]
    kt_margin = float(kt.min()) if kt.size else float("nan")
    kt_positive = bool(kt.size and kt_margin > 0.0)

    th, ka = profile.theta[-3:], profile.kappa[-3:]
    coeffs = np.polyfit(th - th[-1], ka, 2)
    ktt_right = float(2.0 * coeffs[0])

    kappa = lobe_curvatures(arc)[:5]
    x = arc.x[:5]
    kx = float(np.polyfit(x, kappa, 1)[0])

    return MonotoneReport(
        convex=convex, convex_margin=convex_margin,
        kappa_theta_positive=kt_positive, kappa_theta_margin=kt_margin,
        kappa_thetatheta_at_right=ktt_right,
        kappa_thetatheta_nonzero=bool(abs(ktt_right) > 0.0),
        kx_at_origin=kx, kx_positive=bool(kx > 0.0))


def build_seed(spec: SeedSpec) -> QuarterArc:
    """Materialize a seed arc from its declarative spec."""
    if spec.kind == "lemniscate":
        return lemniscate_arc(spec.a, spec.n)
    if spec.source_path is None:
        raise ValueError("from_points seed needs source_path")
    return ingest_arc(read_points_csv(spec.source_path), n=spec.n)
