import math

import numpy as np
import pytest

from eightflow import curvegeom as cg
from eightflow import seeds


@pytest.fixture(scope="session")
def lemniscate400():
    return seeds.lemniscate_arc(1.0, 400)


@pytest.fixture(scope="session")
def lemniscate800():
    return seeds.lemniscate_arc(1.0, 800)


def circle_arc(theta_lo: float, theta_hi: float, n: int, radius: float = 1.0,
               center=(0.0, 0.0)) -> np.ndarray:
    """Vertices (R sin(th) + cx, R cos(th) + cy), convex with increasing theta."""
    th = np.linspace(theta_lo, theta_hi, n)
    return np.column_stack([radius * np.sin(th) + center[0],
                            radius * np.cos(th) + center[1]])


def regular_polygon(n: int, radius: float = 1.0) -> cg.ClosedPolyline:
    phi = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return cg.ClosedPolyline.from_vertices(
        radius * np.column_stack([np.cos(phi), np.sin(phi)]))


def polygon_area(poly: cg.ClosedPolyline) -> float:
    v = poly.loop()
    return 0.5 * abs(float(np.sum(v[:-1, 0] * v[1:, 1] - v[1:, 0] * v[:-1, 1])))
