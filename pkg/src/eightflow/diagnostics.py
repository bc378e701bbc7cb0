"""Per-time-slice diagnostics of the evolving figure-eight.

Everything here is a pure function of a single arc snapshot: the curvature
profile in the tangent-angle coordinate, the Grim Reaper gaps, the support
function and its curvature identity, the node function of the parabolic
rescaling with its zero count, the sine comparator, and the aggregated
trace record for one diagnostic time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from . import renorm
from .curvegeom import (
    GeometryError,
    QuarterArc,
    _as_vertices,
    _menger_signed,
    arc_measures,
    arclengths,
    lobe_curvatures,
    padded_vertices,
    reconstruct_figure_eight,
    vertex_thetas,
)

HALF_PI = 0.5 * math.pi

# Samples whose local theta spacing is below this are excluded from
# theta-derivative windows: second differences there amplify rounding noise
# faster than they gain resolution.
DTHETA_WINDOW_FLOOR = 5e-4

# Samples whose local theta spacing is above this are likewise excluded:
# they only occur where the mesh has hit its refinement floor under a
# blowing-up tip, and second differences across such gaps are dominated by
# truncation error rather than by the identity being measured.
DTHETA_WINDOW_CAP = 0.12

# Relative clamp under which a node-function value counts as an exact zero
# when counting sign changes.
NODE_ZERO_CLAMP = 1e-9


def _d1_nonuniform(theta: np.ndarray, f: np.ndarray) -> np.ndarray:
    """First derivative on a nonuniform grid; one-sided at the ends."""
    df = np.empty_like(f)
    hm = theta[1:-1] - theta[:-2]
    hp = theta[2:] - theta[1:-1]
    df[1:-1] = (hm * hm * f[2:] + (hp * hp - hm * hm) * f[1:-1] - hp * hp * f[:-2]) \
        / (hm * hp * (hm + hp))
    df[0] = (f[1] - f[0]) / (theta[1] - theta[0])
    df[-1] = (f[-1] - f[-2]) / (theta[-1] - theta[-2])
    return df


def _d2_nonuniform(theta: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Second derivative on a nonuniform grid, interior points only."""
    hm = theta[1:-1] - theta[:-2]
    hp = theta[2:] - theta[1:-1]
    return 2.0 * ((f[2:] - f[1:-1]) / hp - (f[1:-1] - f[:-2]) / hm) / (hm + hp)


@dataclass(frozen=True)
class ThetaProfile:
    """Sampled (theta, kappa, kappa_theta) along the convex lobe's top half.

    theta is strictly increasing with range inside (-alpha, pi/2]; the
    profile extends to (pi/2, pi) through the mirror symmetry
    kappa(pi - theta) = kappa(theta).
    """

    theta: np.ndarray
    kappa: np.ndarray
    kappa_theta: np.ndarray

    @property
    def kappa_right(self) -> float:
        return float(self.kappa[-1])

    def _fold(self, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        th = np.asarray(thetas, dtype=float)
        reflected = th > HALF_PI
        return np.where(reflected, math.pi - th, th), reflected

    def kappa_at(self, thetas) -> np.ndarray:
        th, _ = self._fold(np.atleast_1d(thetas))
        return np.interp(th, self.theta, self.kappa)

    def kappa_theta_at(self, thetas) -> np.ndarray:
        th, refl = self._fold(np.atleast_1d(thetas))
        val = np.interp(th, self.theta, self.kappa_theta)
        return np.where(refl, -val, val)


def _profile_fields(arc):
    """Per-sample positions, arclength, theta and lobe curvature.

    Quarter arcs use the symmetry ghost stencils and drop the origin sample
    (where the curvature vanishes); plain vertex arrays keep interior
    vertices only.  Arclength is measured from the first input vertex.
    """
    if isinstance(arc, QuarterArc):
        pos = arc.vertices[1:]
        s = arclengths(arc.vertices)[1:]
        theta = vertex_thetas(arc)[1:]
        kappa = lobe_curvatures(arc)[1:]
    else:
        v = _as_vertices(arc)
        pos = v[1:-1]
        s = arclengths(v)[1:-1]
        w = v[2:] - v[:-2]
        theta = -np.arctan2(w[:, 1], w[:, 0])
        kappa = -_menger_signed(v[:-2], v[1:-1], v[2:])
    return pos, s, theta, kappa


def _monotone_theta(pos, s, theta, kappa):
    """Enforce strictly increasing theta, coalescing rounding-level ties.

    Dips below resolution (1e-6 rad) mean the lobe lost convexity and are an
    error; smaller wiggles are mesh noise on nearly flat stretches and the
    offending samples are dropped (greedy running-max filter).
    """
    if np.any(np.diff(theta) < -1e-6):
        raise GeometryError("theta not monotone: convexity lost")
    running = np.maximum.accumulate(theta)
    keep = np.concatenate([[True], theta[1:] > running[:-1] + 1e-12])
    return pos[keep], s[keep], theta[keep], kappa[keep]


def theta_profile(arc) -> ThetaProfile:
    """Curvature profile in the tangent-angle coordinate."""
    pos, s, theta, kappa = _monotone_theta(*_profile_fields(arc))
    if theta.size < 4:
        raise GeometryError("too few distinct theta samples for a profile")
    return ThetaProfile(theta=theta, kappa=kappa,
                        kappa_theta=_d1_nonuniform(theta, kappa))


def grim_reaper_gap(profile: ThetaProfile, J: tuple[float, float]) -> tuple[float, float]:
    """Sup-norm gaps of the rescaled profile F = kappa/kappa(pi/2) on J.

    Returns (sup |F - sin|, sup |F_theta - cos|) over J, which may extend
    past pi/2 through the symmetry extension.  Evaluation is linear in
    theta on the profile samples plus a uniform grid over J.
    """
    lo, hi = float(J[0]), float(J[1])
    if not (0.0 < lo < hi < math.pi):
        raise ValueError(f"J={J} must be a closed subinterval of (0, pi)")
    kr = profile.kappa_right
    if kr <= 0.0:
        raise GeometryError("kappa(pi/2) must be positive")
    own = profile.theta[(profile.theta >= lo) & (profile.theta <= hi)]
    refl = math.pi - profile.theta
    refl = refl[(refl >= lo) & (refl <= hi)]
    grid = np.unique(np.concatenate([own, refl, np.linspace(lo, hi, 513)]))
    F = profile.kappa_at(grid) / kr
    Ft = profile.kappa_theta_at(grid) / kr
    gap_f = float(np.abs(F - np.sin(grid)).max())
    gap_ft = float(np.abs(Ft - np.cos(grid)).max())
    return gap_f, gap_ft


# ---------------------------------------------------------------------------
# support function

@dataclass(frozen=True)
class SupportProfile:
    theta: np.ndarray
    p: np.ndarray
    kappa: np.ndarray
    residual: float


def _support_window(theta: np.ndarray) -> np.ndarray:
    """Interior sample mask for theta-second-difference quantities."""
    m = theta.size
    ok = np.zeros(m, dtype=bool)
    if m < 5:
        return ok
    gaps = np.diff(theta)
    local = np.maximum(gaps[1:-2], gaps[2:-1])
    ok[2:-2] = ((np.minimum(gaps[1:-2], gaps[2:-1]) >= DTHETA_WINDOW_FLOOR)
                & (local <= DTHETA_WINDOW_CAP))
    return ok


def support_profile(arc) -> SupportProfile:
    """Support values p = C . n(theta) and the identity residual.

    The residual is max |kappa (p + p_theta_theta) - 1| over the interior
    window, a relative form of the curvature identity p + p'' = 1/kappa for
    curves described by their support function.
    """
    pos, _, theta, kappa = _monotone_theta(*_profile_fields(arc))
    n = np.column_stack([np.sin(theta), np.cos(theta)])
    p = np.einsum("ij,ij->i", pos, n)
    ptt = _d2_nonuniform(theta, p)
    window = _support_window(theta)[1:-1]
    if not window.any():
        return SupportProfile(theta, p, kappa, float("nan"))
    res = np.abs(kappa[1:-1] * (p[1:-1] + ptt) - 1.0)
    return SupportProfile(theta, p, kappa, float(res[window].max()))


def support_positions(profile_theta: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Reconstruct curve points from support samples: C = p n + p_theta n_theta."""
    pt = _d1_nonuniform(profile_theta, p)
    n = np.column_stack([np.sin(profile_theta), np.cos(profile_theta)])
    nt = np.column_stack([np.cos(profile_theta), -np.sin(profile_theta)])
    return p[:, None] * n + pt[:, None] * nt


def integral_identity_residual(profile: ThetaProfile, Y: float, kappa_right: float,
                               eps_q: float | None = None) -> float:
    """Relative mismatch of Y kappa(pi/2) against integral sin(phi)/F dphi.

    The quadrature runs over [eps_q, pi/2] on the profile's own samples and
    is extended to 0 by eps_q times the integrand value at the cutoff (the
    integrand need not stay tame toward 0, so the cutoff is explicit).  By
    default eps_q shrinks to the first positive profile sample, capped at
    0.05, so the cutoff error refines along with the mesh.
    """
    if eps_q is None:
        positive = profile.theta[(profile.theta > 0.0) & (profile.theta < HALF_PI)]
        eps_q = min(0.05, float(positive[0])) if positive.size else 0.05
    if not (0.0 < eps_q <= 0.05):
        raise ValueError("eps_q must lie in (0, 0.05]")
    th = profile.theta[(profile.theta > eps_q) & (profile.theta < HALF_PI)]
    grid = np.concatenate([[eps_q], th, [HALF_PI]])
    g = np.sin(grid) * kappa_right / profile.kappa_at(grid)
    integral = float(np.trapezoid(g, grid)) + float(g[0]) * eps_q
    lhs = Y * kappa_right
    return abs(lhs - integral) / lhs


# ---------------------------------------------------------------------------
# node function of the parabolic rescaling

@dataclass(frozen=True)
class NodeProfile:
    theta: np.ndarray
    nu: np.ndarray
    zero_count: int
    nodal_estimate_ok: bool


def count_sign_changes(samples) -> int:
    """Strict sign alternations, zeros inheriting the previous sign.

    A lower bound on the zero count with multiplicity of the sampled
    function.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("empty sample list")
    signs = np.sign(arr)
    signs = signs[signs != 0.0]
    if signs.size < 2:
        return 0
    return int(np.sum(signs[1:] != signs[:-1]))


def node_profile(arc, t: float, t_hat: float) -> NodeProfile:
    """Node function nu = P/2 - K of the parabolic rescaling at time t.

    P and K are the support values and curvature of the rescaled curve
    C/sqrt(T_hat - t).  nodal_estimate_ok checks P < K at every sample of
    the initial unit-length subarc of the rescaled curve (origin excluded,
    where both vanish), provided that subarc stays in the closed positive
    quadrant.
    """
    if t >= t_hat:
        raise ValueError(f"t={t} must be below T_hat={t_hat}")
    pos, s, theta, kappa = _monotone_theta(*_profile_fields(arc))
    scale = 1.0 / math.sqrt(t_hat - t)
    n = np.column_stack([np.sin(theta), np.cos(theta)])
    P = scale * np.einsum("ij,ij->i", pos, n)
    K = kappa / scale
    nu = 0.5 * P - K
    # Width-3 median before counting: single-sample sign spikes are
    # curvature-estimate artifacts, not crossings, and each would otherwise
    # add a spurious pair of alternations where nu grazes zero.
    filt = nu.copy()
    if nu.size >= 3:
        filt[1:-1] = np.median(np.stack([nu[:-2], nu[1:-1], nu[2:]]), axis=0)
    clamped = np.where(np.abs(filt) <= NODE_ZERO_CLAMP * np.abs(filt).max(), 0.0, filt)
    zero_count = count_sign_changes(clamped)

    sub = (s * scale) <= 1.0
    if not sub.any():
        nodal_ok = True
    else:
        quad = bool(np.all(pos[sub] >= -1e-12 * max(1.0, float(np.abs(pos).max()))))
        nodal_ok = quad and bool(np.all(P[sub] < K[sub]))
    return NodeProfile(theta=theta, nu=nu, zero_count=zero_count,
                       nodal_estimate_ok=nodal_ok)


# ---------------------------------------------------------------------------
# sine comparator

@dataclass(frozen=True)
class SineComparator:
    B: float
    phi: float
    zeros: int


def sine_comparator(profile: ThetaProfile, theta_star: float) -> SineComparator:
    """Sine-wave comparator matched to the profile at theta_star.

    B = kappa^2 + kappa_theta^2 at theta_star and phi is chosen so that
    sqrt(B) sin(phi + theta) matches both kappa and kappa_theta there; zeros
    counts the sign changes of kappa - sqrt(B) sin(phi + theta) over the
    profile range.
    """
    k = float(profile.kappa_at(theta_star)[0])
    kt = float(profile.kappa_theta_at(theta_star)[0])
    if k <= 0.0:
        raise GeometryError("kappa(theta_star) must be positive")
    B = k * k + kt * kt
    phi = math.atan2(k, kt) - theta_star
    diff = profile.kappa - math.sqrt(B) * np.sin(phi + profile.theta)
    return SineComparator(B=B, phi=phi, zeros=count_sign_changes(diff))


# ---------------------------------------------------------------------------
# aggregated trace record

@dataclass(frozen=True)
class TraceRecord:
    """One diagnostics row of the simulation trace."""

    t: float
    T_hat: float
    A: float
    X: float
    Y: float
    alpha: float
    kappa_top: float
    kappa_right: float
    beta: float
    ell: float
    gr_gap_F: float
    gr_gap_Ftheta: float
    support_residual: float
    integral_residual: float
    node_zero_count: int
    bowtie_dist: float
    migration_x: float
    migration_y: float

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def diag_record(state, t_hat: float, J: tuple[float, float]) -> TraceRecord:
    """All single-slice diagnostics for one flow state.

    state carries .arc and .t; t_hat is the current vanishing-time
    estimate feeding beta, ell and the node function.
    """
    arc, t = state.arc, state.t
    if t >= t_hat:
        raise ValueError(f"t={t} must be below T_hat={t_hat}")
    m = arc_measures(arc)
    profile = theta_profile(arc)
    gap_f, gap_ft = grim_reaper_gap(profile, J)
    sup = support_profile(arc)
    integ = integral_identity_residual(profile, m.Y, m.kappa_right)
    node = node_profile(arc, t, t_hat)
    fig8 = reconstruct_figure_eight(arc)
    boxed = renorm.normalize(fig8, renorm.RenormMode("box"))
    bow = renorm.bowtie_distance(boxed)
    mig = renorm.migration_point(boxed)
    beta = m.X / ((t_hat - t) * m.kappa_right)
    ell = math.log(m.X) - 0.5 * math.log(t_hat - t)
    return TraceRecord(
        t=t, T_hat=t_hat, A=m.A, X=m.X, Y=m.Y, alpha=m.alpha,
        kappa_top=m.kappa_top, kappa_right=m.kappa_right,
        beta=beta, ell=ell, gr_gap_F=gap_f, gr_gap_Ftheta=gap_ft,
        support_residual=sup.residual, integral_residual=integ,
        node_zero_count=node.zero_count, bowtie_dist=bow,
        migration_x=mig.x, migration_y=mig.y)
