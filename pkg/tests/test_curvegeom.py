import math

import numpy as np
import pytest

from eightflow import curvegeom as cg
from eightflow import seeds

from conftest import circle_arc, regular_polygon


class TestMengerCurvature:
    def test_unit_circle_ccw(self):
        k = cg.menger_curvature((1, 0), (0, 1), (-1, 0))
        assert abs(k - 1.0) <= 1e-12

    def test_collinear_is_zero(self):
        assert cg.menger_curvature((0, 0), (1, 0), (2, 0)) == 0.0

    def test_clockwise_radius_two(self):
        k = cg.menger_curvature((2, 0), (0, -2), (-2, 0))
        assert abs(k + 0.5) <= 1e-12

    def test_coincident_points_raise(self):
        with pytest.raises(cg.DegenerateTripleError, match="degenerate triple"):
            cg.menger_curvature((1, 1), (1, 1), (2, 0))

    def test_rigid_motion_invariance(self):
        rng = np.random.default_rng(7)
        pts = rng.normal(size=(3, 2))
        k0 = cg.menger_curvature(*pts)
        for _ in range(20):
            ang = rng.uniform(0, 2 * math.pi)
            rot = np.array([[math.cos(ang), -math.sin(ang)],
                            [math.sin(ang), math.cos(ang)]])
            shift = rng.normal(size=2) * 10
            moved = pts @ rot.T + shift
            assert abs(cg.menger_curvature(*moved) - k0) <= 1e-10

    def test_dilation_scaling(self):
        pts = [(1.0, 0.2), (0.3, 1.1), (-0.9, 0.4)]
        k0 = cg.menger_curvature(*pts)
        lam = 3.7
        k1 = cg.menger_curvature(*[(lam * x, lam * y) for x, y in pts])
        assert abs(k1 - k0 / lam) <= 1e-12


class TestArcMeasures:
    def test_quarter_disk_area(self):
        # Quarter of the unit circle spanning the first quadrant; the fan
        # from the origin is the quarter disk.
        arc = circle_arc(0.0, math.pi / 2, 200)
        m = cg.arc_measures(arc)
        assert abs(m.A / 4.0 - math.pi / 4.0) <= 2e-3

    def test_lemniscate_area_against_polar_quadrature(self, lemniscate400):
        # Both lobes by the polar area formula: integral of r^2 dtheta over
        # [-pi/4, pi/4] with r^2 = cos(2 theta), i.e. exactly 1 at a=1.
        th = np.linspace(-math.pi / 4, math.pi / 4, 200001)
        oracle = float(np.trapezoid(np.cos(2.0 * th), th))
        m = cg.arc_measures(lemniscate400)
        assert abs(oracle - 1.0) <= 1e-12
        assert abs(m.A - oracle) <= 1e-3

    def test_lemniscate_width_and_angle(self, lemniscate400):
        m = cg.arc_measures(lemniscate400)
        assert abs(m.X - 1.0) <= 1e-6
        assert abs(m.alpha - math.pi / 4) <= 1e-3

    def test_lemniscate_tip_curvature(self, lemniscate400):
        m = cg.arc_measures(lemniscate400)
        assert abs(m.kappa_right - 3.0) <= 5e-3

    def test_underresolved_rejected(self):
        arc = circle_arc(0.0, math.pi / 2, 5)
        with pytest.raises(cg.UnderresolvedError, match="underresolved"):
            cg.arc_measures(arc)


class TestResample:
    def test_conforming_arc_untouched(self, lemniscate400):
        policy = cg.ResamplePolicy(h_max=1.0, dtheta_max=0.5)
        out = cg.resample_arc(lemniscate400, policy)
        assert out is lemniscate400

    def test_right_angle_corner_refined(self):
        leg = np.linspace(0.0, 1.0, 5)
        pts = np.vstack([np.column_stack([leg, np.zeros(5)]),
                         np.column_stack([np.ones(4), leg[1:]])])
        policy = cg.ResamplePolicy(h_max=0.5, dtheta_max=0.1)
        out = cg.resample_arc(pts, policy)
        turns = np.abs(cg.turning_angles(out))
        assert turns.max() <= 0.1 * (1 + 1e-6)

    def test_halved_h_max_doubles_points_and_stays_close(self):
        arc16 = circle_arc(0.0, math.pi / 2, 16)
        h16 = cg.segment_lengths(arc16).max()
        policy = cg.ResamplePolicy(h_max=h16 / 2, dtheta_max=1.0)
        fine = cg.resample_arc(arc16, policy)
        assert fine.shape[0] >= 32
        d = cg.hausdorff_distance(
            cg.ClosedPolyline.from_vertices(arc16),
            cg.ClosedPolyline.from_vertices(fine))
        assert d <= h16

    def test_budget_exceeded(self):
        arc16 = circle_arc(0.0, math.pi / 2, 16)
        policy = cg.ResamplePolicy(h_max=1e-4, dtheta_max=0.5, max_points=100)
        with pytest.raises(cg.BudgetExceededError, match="budget exceeded"):
            cg.resample_arc(arc16, policy)

    def test_area_invariant_under_resample(self, lemniscate400):
        m0 = cg.arc_measures(lemniscate400)
        policy = cg.ResamplePolicy(h_max=lemniscate400.arclength / 220, dtheta_max=0.2)
        out = cg.resample_arc(lemniscate400, policy)
        m1 = cg.arc_measures(out)
        assert abs(m1.A - m0.A) / m0.A <= 1e-4


class TestHausdorff:
    def test_identical_is_zero(self, lemniscate400):
        fig = cg.reconstruct_figure_eight(lemniscate400)
        assert cg.hausdorff_distance(fig, fig) <= 1e-12

    def test_translated_square(self):
        sq = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        d = 0.37
        a = cg.ClosedPolyline.from_vertices(sq)
        b = cg.ClosedPolyline.from_vertices(sq + [d, 0.0])
        eps = 0.01
        got = cg.hausdorff_distance(a, b, eps_hd=eps)
        assert abs(got - d) <= eps

    def test_circle_vs_bowtie_against_brute_force(self):
        from eightflow.renorm import BOWTIE
        circle = regular_polygon(256)
        got = cg.hausdorff_distance(circle, BOWTIE, eps_hd=2e-3)

        def samples(poly, m):
            v = poly.loop()
            s = np.concatenate([[0.0], np.cumsum(cg.segment_lengths(v))])
            u = np.linspace(0.0, s[-1], m, endpoint=False)
            return np.column_stack([np.interp(u, s, v[:, 0]), np.interp(u, s, v[:, 1])])

        pa, pb = samples(circle, 4000), samples(BOWTIE, 4000)
        d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
        oracle = max(np.sqrt(d2.min(axis=1)).max(), np.sqrt(d2.min(axis=0)).max())
        assert abs(got - oracle) <= 5e-3

    def test_symmetry_and_triangle_inequality(self):
        rng = np.random.default_rng(3)
        eps = 5e-3

        def blob(seed):
            ang = np.sort(rng.uniform(0, 2 * math.pi, 40))
            r = 1.0 + 0.3 * np.sin(3 * ang + seed)
            return cg.ClosedPolyline.from_vertices(
                np.column_stack([r * np.cos(ang), r * np.sin(ang)]))

        a, b, c = blob(0.0), blob(1.0), blob(2.0)
        dab = cg.hausdorff_distance(a, b, eps_hd=eps)
        dba = cg.hausdorff_distance(b, a, eps_hd=eps)
        assert dab == dba
        dac = cg.hausdorff_distance(a, c, eps_hd=eps)
        dcb = cg.hausdorff_distance(c, b, eps_hd=eps)
        assert dab <= dac + dcb + 2 * eps


class TestReconstruct:
    def test_vertex_count(self, lemniscate400):
        fig = cg.reconstruct_figure_eight(lemniscate400)
        assert abs(fig.n - (4 * lemniscate400.n - 4)) <= 2

    def test_reflection_invariance(self, lemniscate400):
        fig = cg.reconstruct_figure_eight(lemniscate400)
        for refl in (np.array([1.0, -1.0]), np.array([-1.0, 1.0])):
            mirrored = cg.ClosedPolyline.from_vertices(fig.vertices * refl)
            assert cg.hausdorff_distance(fig, mirrored) <= 1e-12

    def test_matches_parametric_lemniscate(self):
        arc = seeds.lemniscate_arc(1.0, 400)
        fig = cg.reconstruct_figure_eight(arc)
        u = np.linspace(0.0, 2.0 * math.pi, 1600, endpoint=False)
        den = 1.0 + np.sin(u) ** 2
        oracle = cg.ClosedPolyline.from_vertices(
            np.column_stack([np.cos(u) / den, np.sin(u) * np.cos(u) / den]))
        assert cg.hausdorff_distance(fig, oracle) <= 2e-3

    def test_single_self_intersection_at_origin(self):
        arc = seeds.lemniscate_arc(1.0, 50)
        fig = cg.reconstruct_figure_eight(arc)
        v = fig.loop()
        a, b = v[:-1], v[1:]
        crossings = []
        for i in range(len(a)):
            # skip adjacent segments (shared endpoints)
            for j in range(i + 2, len(a)):
                if i == 0 and j == len(a) - 1:
                    continue
                d1, d2 = b[i] - a[i], b[j] - a[j]
                den = d1[0] * d2[1] - d1[1] * d2[0]
                if den == 0.0:
                    continue
                r = a[j] - a[i]
                t = (r[0] * d2[1] - r[1] * d2[0]) / den
                s = (r[0] * d1[1] - r[1] * d1[0]) / den
                if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= s <= 1 + 1e-12:
                    crossings.append(a[i] + t * d1)
        assert crossings, "the figure-eight must cross itself"
        pts = np.unique(np.round(np.array(crossings), 9), axis=0)
        assert pts.shape[0] == 1
        assert np.hypot(*pts[0]) <= 1e-9


class TestOsculatingDisks:
    @staticmethod
    def _nested_oracle(vertices):
        v = np.asarray(vertices)
        p, q, r = v[:-2], v[1:-1], v[2:]
        centers = cg.circumcenters(p, q, r)
        radii = np.linalg.norm(centers - q, axis=1)
        worst = -np.inf
        for i in range(len(radii)):
            for j in range(i + 1, len(radii)):
                gap = np.linalg.norm(centers[i] - centers[j]) - (radii[i] - radii[j])
                worst = max(worst, gap)
        return worst

    def test_log_spiral_nested(self):
        b = 0.2
        phi = np.linspace(4.0, 0.5, 60)  # curvature increases along the list
        r = np.exp(b * phi)
        pts = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
        rep = cg.osculating_disks_nested(pts)
        assert rep.nested
        assert abs(rep.worst_violation - self._nested_oracle(pts)) <= 1e-12

    def test_constant_curvature_rejected(self):
        arc = circle_arc(0.0, math.pi / 2, 40)
        with pytest.raises(cg.GeometryError, match="precondition"):
            cg.osculating_disks_nested(arc)

    def test_lemniscate_subarc_nested(self, lemniscate400):
        theta = cg.vertex_thetas(lemniscate400)
        mask = (theta >= 0.2) & (theta <= math.pi / 2)
        sub = lemniscate400.vertices[mask]
        rep = cg.osculating_disks_nested(sub)
        assert rep.nested


class TestQuarterArcValidation:
    def test_non_monotone_x_rejected(self):
        pts = circle_arc(0.0, math.pi / 2, 20)
        pts[10, 0] = pts[9, 0] - 1e-3
        with pytest.raises(cg.GeometryError):
            cg.QuarterArc.from_vertices(pts)

    def test_lemniscate_valid(self, lemniscate400):
        cg.validate_quarter_arc(lemniscate400.vertices)
