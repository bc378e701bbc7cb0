"""Geometric primitives and measures on polyline curves.

Curvature is estimated per vertex by the Menger (circumscribed circle)
formula, signed counterclockwise-positive.  A quarter arc runs from the
double point at the origin to the rightmost point on the symmetry axis and
carries the top half of the convex right lobe; the full figure-eight is
rebuilt from it by reflections.  Boundary stencils use ghost points: a point
reflection through the origin at the pinned end, a mirror image across the
x-axis at the axis end.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.interpolate import PchipInterpolator


class GeometryError(ValueError):
    """A geometric precondition or invariant failed."""


class DegenerateTripleError(GeometryError):
    pass


class UnderresolvedError(GeometryError):
    pass


class BudgetExceededError(GeometryError):
    pass


class Point2(NamedTuple):
    x: float
    y: float


# Endpoint snap tolerances scale with the half-width so they track the
# shrinking curve.
ENDPOINT_TOL_SCALE = 1e-9
# Wrong-sign turning angle (radians) tolerated before convexity is declared
# broken; absorbs rounding noise on nearly flat stretches.
TURN_SIGN_TOL = 1e-9

MIN_ARC_POINTS = 8


# ---------------------------------------------------------------------------
# low-level vector helpers

def _as_vertices(obj) -> np.ndarray:
    v = obj.vertices if hasattr(obj, "vertices") else obj
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise GeometryError(f"expected (n, 2) vertex array, got shape {v.shape}")
    return v


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _norms(d: np.ndarray) -> np.ndarray:
    return np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1])


def segment_lengths(vertices) -> np.ndarray:
    v = _as_vertices(vertices)
    return _norms(np.diff(v, axis=0))


def arclengths(vertices) -> np.ndarray:
    """Cumulative chordal arclength, starting at 0."""
    ell = segment_lengths(vertices)
    return np.concatenate([[0.0], np.cumsum(ell)])


def turning_angles(vertices) -> np.ndarray:
    """Signed turning angle at each interior vertex (ccw positive)."""
    v = _as_vertices(vertices)
    d = np.diff(v, axis=0)
    a, b = d[:-1], d[1:]
    return np.arctan2(_cross(a, b), np.einsum("ij,ij->i", a, b))


def _menger_signed(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> np.ndarray:
    a, b, c = q - p, r - q, r - p
    la, lb, lc = _norms(a), _norms(b), _norms(c)
    den = la * lb * lc
    if np.any(den == 0.0):
        bad = int(np.argmax(den == 0.0)) if den.ndim else -1
        raise DegenerateTripleError(f"degenerate triple (vertex index {bad})")
    return 2.0 * _cross(a, b) / den


def menger_curvature(p, q, r) -> float:
    """Signed curvature of the circle through three points, ccw positive.

    Returns 2 cross(q-p, r-q) / (|q-p| |r-q| |r-p|); zero for collinear
    points, raises for coincident ones.
    """
    p, q, r = (np.asarray(u, dtype=float) for u in (p, q, r))
    return float(_menger_signed(p, q, r))


def circumcenters(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Circumcenter of each triple; raises on collinear triples."""
    d = 2.0 * _cross(q - p, r - p)
    if np.any(d == 0.0):
        raise DegenerateTripleError("collinear triple has no circumcenter")
    p2 = np.einsum("ij,ij->i", p, p)
    q2 = np.einsum("ij,ij->i", q, q)
    r2 = np.einsum("ij,ij->i", r, r)
    ux = (p2 * (q[:, 1] - r[:, 1]) + q2 * (r[:, 1] - p[:, 1]) + r2 * (p[:, 1] - q[:, 1])) / d
    uy = (p2 * (r[:, 0] - q[:, 0]) + q2 * (p[:, 0] - r[:, 0]) + r2 * (q[:, 0] - p[:, 0])) / d
    return np.stack([ux, uy], axis=1)


# ---------------------------------------------------------------------------
# domain types

@dataclass(frozen=True)
class QuarterArc:
    """Ordered polyline from the double point (origin) to the rightmost point.

    Vertices run with strictly increasing x; interior vertices sit strictly
    inside the open first quadrant, and discrete turning angles share one
    sign (the lobe is convex).
    """

    vertices: np.ndarray

    @classmethod
    def from_vertices(cls, vertices, validate: bool = True, turn_tol: float = TURN_SIGN_TOL) -> "QuarterArc":
        v = _as_vertices(vertices).copy()
        v.flags.writeable = False
        arc = cls(v)
        if validate:
            validate_quarter_arc(v, turn_tol=turn_tol)
        return arc

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.vertices[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.vertices[:, 1]

    @property
    def half_width(self) -> float:
        return float(self.vertices[:, 0].max())

    @property
    def h_min(self) -> float:
        return float(segment_lengths(self.vertices).min())

    @property
    def arclength(self) -> float:
        return float(segment_lengths(self.vertices).sum())


@dataclass(frozen=True)
class ClosedPolyline:
    """Cyclic polyline; closure from last vertex back to the first is implicit."""

    vertices: np.ndarray

    @classmethod
    def from_vertices(cls, vertices, validate: bool = True) -> "ClosedPolyline":
        v = _as_vertices(vertices).copy()
        if validate:
            if v.shape[0] < 3:
                raise GeometryError("closed polyline needs at least 3 vertices")
            loop = np.vstack([v, v[:1]])
            if np.any(segment_lengths(loop) == 0.0):
                raise GeometryError("consecutive vertices must be distinct")
        v.flags.writeable = False
        return cls(v)

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    def loop(self) -> np.ndarray:
        return np.vstack([self.vertices, self.vertices[:1]])


class ArcMeasures(NamedTuple):
    A: float            # area of both lobes
    X: float            # half-width
    Y: float            # half-height
    alpha: float        # tangent angle at the origin, radians
    kappa_top: float    # curvature at the horizontal-tangent point
    kappa_right: float  # curvature at the rightmost point


def validate_quarter_arc(vertices, turn_tol: float = TURN_SIGN_TOL) -> None:
    """Raise GeometryError if the vertices do not form a valid quarter arc."""
    v = _as_vertices(vertices)
    n = v.shape[0]
    if n < MIN_ARC_POINTS:
        raise UnderresolvedError(f"underresolved: {n} < {MIN_ARC_POINTS} vertices")
    if not np.all(np.isfinite(v)):
        raise GeometryError("non-finite vertex coordinates")
    X = float(v[:, 0].max())
    if X <= 0.0:
        raise GeometryError("arc has nonpositive width")
    tol = ENDPOINT_TOL_SCALE * X
    if np.hypot(v[0, 0], v[0, 1]) > tol:
        raise GeometryError(f"first vertex {tuple(v[0])} not at the origin")
    if abs(v[-1, 1]) > tol:
        raise GeometryError(f"last vertex {tuple(v[-1])} not on the x-axis")
    if not np.all(np.diff(v[:, 0]) > 0.0):
        bad = np.nonzero(np.diff(v[:, 0]) <= 0.0)[0]
        raise GeometryError(f"x not strictly increasing at indices {bad.tolist()[:8]}")
    inner = v[1:-1]
    if not (np.all(inner[:, 0] > 0.0) and np.all(inner[:, 1] > 0.0)):
        raise GeometryError("interior vertices must lie in the open first quadrant")
    turns = turning_angles(v)
    # Convex lobe: one turn sign throughout (clockwise for this traversal).
    if np.any(turns > turn_tol):
        bad = np.nonzero(turns > turn_tol)[0] + 1
        raise GeometryError(f"convexity broken at vertex indices {bad.tolist()[:8]}")


# ---------------------------------------------------------------------------
# boundary ghost points and per-vertex fields

def padded_vertices(arc) -> np.ndarray:
    """Vertices with the two symmetry ghost points prepended/appended.

    The ghost before the origin is the point reflection of the second
    vertex (the strand continues smoothly through the double point); the
    ghost past the rightmost vertex is the mirror image of the penultimate
    vertex across the x-axis.
    """
    v = _as_vertices(arc)
    ghost0 = -v[1]
    ghost1 = np.array([v[-2, 0], -v[-2, 1]])
    return np.vstack([ghost0, v, ghost1])


def vertex_curvatures(arc) -> np.ndarray:
    """Signed (ccw) Menger curvature at every vertex, using ghost stencils.

    Exactly zero at the origin vertex by the point-reflection symmetry.
    """
    w = padded_vertices(arc)
    k = _menger_signed(w[:-2], w[1:-1], w[2:])
    k[0] = 0.0
    return k


def lobe_curvatures(arc) -> np.ndarray:
    """Curvature in the convex-lobe-positive convention (>= 0 on valid arcs)."""
    return -vertex_curvatures(arc)


def vertex_thetas(arc) -> np.ndarray:
    """Tangent-angle coordinate per vertex: theta = -(tangent angle vs x-axis).

    Runs from -alpha at the origin to pi/2 at the rightmost vertex, strictly
    increasing on a convex arc.  Tangents come from central differences over
    the ghost-padded vertex list.
    """
    w = padded_vertices(arc)
    t = w[2:] - w[:-2]
    theta = -np.arctan2(t[:, 1], t[:, 0])
    theta[-1] = 0.5 * np.pi  # mirror ghost makes the end tangent exactly vertical
    return theta


def arc_measures(arc) -> ArcMeasures:
    """Bounding-box extents, area, origin angle and extremal curvatures.

    The area counts both lobes of the reconstructed figure-eight: four times
    the shoelace area between the arc and the x-axis.
    """
    v = _as_vertices(arc)
    if v.shape[0] < MIN_ARC_POINTS:
        raise UnderresolvedError(f"underresolved: {v.shape[0]} < {MIN_ARC_POINTS} vertices")
    quarter = 0.5 * abs(float(np.sum(v[:-1, 0] * v[1:, 1] - v[1:, 0] * v[:-1, 1])))
    X = float(v[:, 0].max())
    Y = float(v[:, 1].max())
    alpha = float(np.arctan2(v[1, 1] - v[0, 1], v[1, 0] - v[0, 0]))
    kappa = lobe_curvatures(v)
    theta = vertex_thetas(v)
    kappa_top = float(np.interp(0.0, theta, kappa))
    kappa_right = float(kappa[-1])
    return ArcMeasures(A=4.0 * quarter, X=X, Y=Y, alpha=alpha,
                       kappa_top=kappa_top, kappa_right=kappa_right)


# ---------------------------------------------------------------------------
# resampling

@dataclass(frozen=True)
class ResamplePolicy:
    """Mesh conformity targets for an arc.

    Segments must be no longer than h_max and turn by no more than
    dtheta_max per vertex.  A positive h_floor caps refinement: the turning
    bound is waived wherever both adjacent segments are already at the
    floor, so a blowing-up tip stops absorbing points once it reaches
    floor spacing.
    """

    h_max: float
    dtheta_max: float
    h_floor: float = 0.0
    max_points: int = 32768

    def target_spacing(self, kappa: np.ndarray) -> np.ndarray:
        h = np.minimum(self.h_max, self.dtheta_max / np.maximum(np.abs(kappa), 1e-300))
        if self.h_floor > 0.0:
            h = np.maximum(h, self.h_floor)
        return h


_CONFORM_SLACK = 1.0 + 1e-6


def conforms(vertices, policy: ResamplePolicy) -> bool:
    """True if every segment and turning angle satisfies the policy."""
    v = _as_vertices(vertices)
    ell = segment_lengths(v)
    if np.any(ell > policy.h_max * _CONFORM_SLACK):
        return False
    turns = np.abs(turning_angles(v))
    ok = turns <= policy.dtheta_max * _CONFORM_SLACK
    if policy.h_floor > 0.0:
        at_floor = np.maximum(ell[:-1], ell[1:]) <= policy.h_floor * 1.05
        ok = ok | at_floor
    return bool(np.all(ok))


def _pchip_xy(vertices):
    s = arclengths(vertices)
    return s, PchipInterpolator(s, vertices[:, 0]), PchipInterpolator(s, vertices[:, 1])


def _density_nodes(vertices, policy: ResamplePolicy, boost: float) -> np.ndarray:
    """New arclength nodes, equidistributed against the policy density."""
    v = _as_vertices(vertices)
    s = arclengths(v)
    k = np.abs(_menger_signed(v[:-2], v[1:-1], v[2:]))
    kappa = np.concatenate([[k[0]], k, [k[-1]]])
    w = boost / policy.target_spacing(kappa)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(s))])
    m = max(int(np.ceil(cum[-1])), MIN_ARC_POINTS - 1)
    if m + 1 > policy.max_points:
        raise BudgetExceededError(
            f"budget exceeded: policy needs {m + 1} points > max_points={policy.max_points}")
    return np.interp(np.linspace(0.0, cum[-1], m + 1), cum, s)


def resample_arc(arc, policy: ResamplePolicy, force: bool = False):
    """Resample an arc onto a policy-conforming mesh.

    Interpolates the geometry with monotone cubics of (x, y) against
    arclength (which preserves the x-monotonicity of the data and avoids
    the inward bias of chord midpoint insertion) and equidistributes the
    points against the curvature-adapted density.  A conforming input is
    returned unchanged unless force is set (used to redistribute meshes
    that conform but have been squeezed well below their target spacing).
    The density is re-estimated from each trial mesh, so curvature
    concentrations hidden between input vertices are found within a few
    sweeps.
    """
    is_arc = isinstance(arc, QuarterArc)
    v = _as_vertices(arc)
    if not force and conforms(v, policy):
        return arc
    s0, fx, fy = _pchip_xy(v)
    probe = v
    boost = 1.0
    for _ in range(10):
        snew = _density_nodes(probe, policy, boost)
        snew = snew * (s0[-1] / snew[-1])
        new = np.column_stack([fx(snew), fy(snew)])
        new[0], new[-1] = v[0], v[-1]
        if conforms(new, policy):
            if is_arc:
                return QuarterArc.from_vertices(new, turn_tol=1e-8 + TURN_SIGN_TOL)
            return new
        probe = new
        boost *= 1.2
    raise BudgetExceededError("budget exceeded: no conforming mesh within sweep limit")


def resample_to_count(arc, n: int):
    """Resample onto n vertices uniform in arclength (endpoints exact)."""
    if n < MIN_ARC_POINTS:
        raise UnderresolvedError(f"underresolved: requested {n} < {MIN_ARC_POINTS} vertices")
    is_arc = isinstance(arc, QuarterArc)
    v = _as_vertices(arc)
    s, fx, fy = _pchip_xy(v)
    snew = np.linspace(0.0, s[-1], n)
    new = np.column_stack([fx(snew), fy(snew)])
    new[0], new[-1] = v[0], v[-1]
    if is_arc:
        return QuarterArc.from_vertices(new, turn_tol=1e-8 + TURN_SIGN_TOL)
    return new


# ---------------------------------------------------------------------------
# set distances

def densify(vertices, eps: float, closed: bool = False) -> np.ndarray:
    """Sample points along a polyline with spacing <= eps, keeping vertices."""
    v = _as_vertices(vertices)
    if closed:
        v = np.vstack([v, v[:1]])
    s = arclengths(v)
    extra = np.arange(0.0, s[-1], eps)
    snodes = np.unique(np.concatenate([s, extra]))
    return np.column_stack([np.interp(snodes, s, v[:, 0]), np.interp(snodes, s, v[:, 1])])


def _dist_points_to_segments(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Min distance from each point to any segment [a_k, b_k], chunked."""
    ab = b - a
    den = np.maximum(np.einsum("kj,kj->k", ab, ab), 1e-300)
    out = np.empty(points.shape[0])
    chunk = max(1, int(4e6 // max(a.shape[0], 1)))
    for i in range(0, points.shape[0], chunk):
        p = points[i:i + chunk]
        ap = p[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("mkj,kj->mk", ap, ab) / den, 0.0, 1.0)
        d = ap - t[:, :, None] * ab[None, :, :]
        out[i:i + chunk] = np.sqrt(np.einsum("mkj,mkj->mk", d, d).min(axis=1))
    return out


def _one_sided_hausdorff(src: np.ndarray, dst: np.ndarray, eps: float, closed: bool) -> float:
    samples = densify(src, eps, closed=closed)
    loop = np.vstack([dst, dst[:1]]) if closed else dst
    return float(_dist_points_to_segments(samples, loop[:-1], loop[1:]).max())


def hausdorff_distance(a, b, eps_hd: float | None = None) -> float:
    """Hausdorff distance between two closed polylines.

    Each curve is sampled with spacing <= eps_hd and measured against the
    other with exact point-to-segment distances, both directions.  The
    sampling bounds the error by eps_hd.  Default spacing is a quarter of
    the shortest segment of either curve.
    """
    va, vb = _as_vertices(a), _as_vertices(b)
    if eps_hd is None:
        la = segment_lengths(np.vstack([va, va[:1]])).min()
        lb = segment_lengths(np.vstack([vb, vb[:1]])).min()
        eps_hd = 0.25 * float(min(la, lb))
    return max(_one_sided_hausdorff(va, vb, eps_hd, True),
               _one_sided_hausdorff(vb, va, eps_hd, True))


# ---------------------------------------------------------------------------
# symmetry reconstruction

def reconstruct_figure_eight(arc) -> ClosedPolyline:
    """Rebuild the full figure-eight from its quarter-arc fundamental domain.

    The right lobe is the arc followed by its x-axis mirror image reversed;
    the left lobe is the point reflection of the right one, so the cyclic
    traversal crosses itself exactly once, at the origin.
    """
    v = _as_vertices(arc)
    bottom = v[-2:0:-1] * np.array([1.0, -1.0])
    right = np.vstack([v, bottom])
    full = np.vstack([right, -right])
    keep = np.ones(full.shape[0], dtype=bool)
    keep[1:] = np.any(full[1:] != full[:-1], axis=1)
    return ClosedPolyline.from_vertices(full[keep])


# ---------------------------------------------------------------------------
# osculating disk nesting

class NestedReport(NamedTuple):
    nested: bool
    worst_violation: float


def osculating_disks_nested(arc, tol_nest: float | None = None) -> NestedReport:
    """Check the strict nesting of osculating disks along a monotone arc.

    Requires strictly positive, strictly increasing discrete curvature along
    the input (the caller restricts to such a subarc).  Disk j nests inside
    disk i (i < j) iff |c_i - c_j| <= r_i - r_j; worst_violation is the
    largest excess over all pairs.
    """
    v = _as_vertices(arc)
    p, q, r = v[:-2], v[1:-1], v[2:]
    kappa = np.abs(_menger_signed(p, q, r))
    if np.any(kappa <= 0.0) or np.any(np.diff(kappa) <= 0.0):
        raise GeometryError("precondition violated: curvature not strictly increasing")
    centers = circumcenters(p, q, r)
    radii = 1.0 / kappa
    if tol_nest is None:
        tol_nest = 1e-9 * float(radii.max())
    dc = _norms(centers[:, None, :] - centers[None, :, :])
    dr = radii[:, None] - radii[None, :]
    iu = np.triu_indices(radii.size, k=1)
    worst = float((dc[iu] - dr[iu]).max())
    return NestedReport(nested=worst <= tol_nest, worst_violation=worst)
