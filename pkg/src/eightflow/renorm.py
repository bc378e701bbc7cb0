"""Renormalizations of the evolving curve and bowtie/migration measurements.

Four frames are supported: the bounding-box normalization (diagonal, non-
conformal, box becomes [-1,1]^2), the width normalization (divide by the
half-width), the parabolic rescaling (divide by sqrt of remaining time),
and the Grim-Reaper frame (height scaled to pi/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curvegeom import ClosedPolyline, GeometryError, Point2, hausdorff_distance

MODES = ("box", "width", "parabolic", "reaper")

# Sampling step for distances against the bowtie; coarse relative to the
# unit box but far below the thresholds the distance is compared against.
BOWTIE_EPS_HD = 5e-3


@dataclass(frozen=True)
class RenormMode:
    mode: str
    T_hat: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown renormalization mode {self.mode!r}")
        if self.mode == "parabolic" and self.T_hat is None:
            raise ValueError("parabolic mode requires T_hat")


def bowtie() -> ClosedPolyline:
    """The fixed quadrilateral through (-1,-1), (1,1), (1,-1), (-1,1)."""
    return ClosedPolyline.from_vertices(
        np.array([[-1.0, -1.0], [1.0, 1.0], [1.0, -1.0], [-1.0, 1.0]]))


BOWTIE = bowtie()


def normalize(curve: ClosedPolyline, mode: RenormMode, t: float = 0.0) -> ClosedPolyline:
    """Apply the chosen renormalization to a closed curve at time t."""
    v = curve.vertices
    X = float(np.abs(v[:, 0]).max())
    Y = float(np.abs(v[:, 1]).max())
    if X <= 0.0 or Y <= 0.0:
        raise GeometryError("zero bounding-box extent")
    if mode.mode == "box":
        out = v / np.array([X, Y])
    elif mode.mode == "width":
        out = v / X
    elif mode.mode == "parabolic":
        if mode.T_hat is None or mode.T_hat <= t:
            raise GeometryError("parabolic mode requires T_hat > t")
        out = v / math.sqrt(mode.T_hat - t)
    else:  # reaper
        out = v * (0.5 * math.pi / Y)
    return ClosedPolyline.from_vertices(out, validate=False)


def bowtie_distance(boxed: ClosedPolyline, eps_hd: float = BOWTIE_EPS_HD) -> float:
    """Hausdorff distance from a box-normalized curve to the bowtie.

    Very fine curves are decimated to about a thousand vertices first; the
    chord error this introduces is quadratically below eps_hd.
    """
    v = boxed.vertices
    if v.shape[0] > 1200:
        loop = np.vstack([v, v[:1]])
        d = np.diff(loop, axis=0)
        s = np.concatenate([[0.0], np.cumsum(np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2))])
        snew = np.linspace(0.0, s[-1], 1025)[:-1]
        v = np.column_stack([np.interp(snew, s, loop[:, 0]),
                             np.interp(snew, s, loop[:, 1])])
        boxed = ClosedPolyline.from_vertices(v, validate=False)
    return hausdorff_distance(boxed, BOWTIE, eps_hd=eps_hd)


def migration_point(boxed: ClosedPolyline) -> Point2:
    """Among vertices with x > 0, the one of largest y (ties: larger x)."""
    v = boxed.vertices
    right = v[v[:, 0] > 0.0]
    if right.size == 0:
        raise GeometryError("no vertex with positive x")
    order = np.lexsort((right[:, 0], right[:, 1]))
    return Point2(*right[order[-1]])


def to_tau(t: float, t_hat: float) -> float:
    """Logarithmic time tau = -log(T_hat - t)."""
    if t >= t_hat:
        raise ValueError(f"t={t} must be below T_hat={t_hat}")
    return -math.log(t_hat - t)


def from_tau(tau: float, t_hat: float) -> float:
    """Inverse of to_tau: t = T_hat - exp(-tau)."""
    return t_hat - math.exp(-tau)


def lobe_areas(fig8: ClosedPolyline) -> tuple[float, float]:
    """Unsigned areas of the right and left lobes of a figure-eight.

    The traversal is split at its two visits to the double point (the
    vertices closest to the origin) and each lobe is measured by the
    shoelace formula, so the two lobes cannot cancel.
    """
    v = fig8.vertices
    r2 = np.einsum("ij,ij->i", v, v)
    order = np.argsort(r2)[:2]
    i, j = int(order.min()), int(order.max())
    lobes = [np.vstack([v[i:j], v[i:i + 1] * 0.0]), np.vstack([v[j:], v[:i]])]
    areas = []
    for w in lobes:
        areas.append(0.5 * abs(float(np.sum(
            w[:, 0] * np.roll(w[:, 1], -1) - np.roll(w[:, 0], -1) * w[:, 1]))))
    right_first = v[i:j, 0].mean() > 0
    return (areas[0], areas[1]) if right_first else (areas[1], areas[0])
