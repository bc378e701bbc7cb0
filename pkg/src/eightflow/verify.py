"""Automated acceptance checks for a finished reference run.

verify() evaluates each numbered criterion against a trace.csv (plus the
sibling report.json, which carries the structure and nodal columns the
trace does not), prints one line per criterion, and returns a nonzero exit
code unless everything passes.  The circle-control criterion is
self-contained: it re-runs the closed-curve solver against the exact
shrinking-circle solution.

Late-time criteria are evaluated on the final resolved decade: the rows
with T* - t within a factor of ten of the last recorded row, where T* is
the final vanishing-time estimate.  A trace that never got within two
decades of its vanishing-time estimate is reported as insufficient data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .curvegeom import ClosedPolyline, arc_measures, segment_lengths
from .diagnostics import (
    TraceRecord,
    integral_identity_residual,
    support_profile,
    theta_profile,
)
from .flowcore import csf_step_closed
from .seeds import lemniscate_arc

PASS, FAIL, INSUFFICIENT, SKIP = "PASS", "FAIL", "INSUFFICIENT", "SKIP"

MIN_DECADES = 2.0
MIN_LATE_ROWS = 4

# Trend windows ("late-time window") span the final two decades of
# remaining time; per-row bounds phrased on the "final resolved decade"
# use one decade.
TREND_DECADES = 2.0


class TraceFormatError(ValueError):
    pass


@dataclass
class CriterionResult:
    cid: int
    name: str
    status: str
    detail: str

    @property
    def ok(self) -> bool:
        return self.status in (PASS, SKIP)


def load_trace(path: str | Path) -> dict[str, np.ndarray]:
    """Parse a trace.csv, reporting the offending line on malformed input."""
    names = TraceRecord.field_names()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.split(",") != names:
            raise TraceFormatError(f"{path}: line 1: unexpected header {header!r}")
        cols = {k: [] for k in names}
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) != len(names):
                raise TraceFormatError(
                    f"{path}: line {lineno}: {len(parts)} fields, expected {len(names)}")
            try:
                for k, p in zip(names, parts):
                    cols[k].append(float(p))
            except ValueError:
                raise TraceFormatError(f"{path}: line {lineno}: unparsable value")
    if not cols["t"]:
        raise TraceFormatError(f"{path}: no data rows")
    return {k: np.asarray(v) for k, v in cols.items()}


# ---------------------------------------------------------------------------
# helpers

def _remaining(tr) -> np.ndarray:
    t_star = tr["T_hat"][-1]
    return t_star - tr["t"]


def _decades(tr) -> float:
    rem = _remaining(tr)
    return math.log10(rem[0] / rem[-1]) if rem[-1] > 0 else math.inf

def _late_mask(tr, decades: float = 1.0) -> np.ndarray:
    rem = _remaining(tr)
    return rem <= 10.0 ** decades * 1.000001 * rem[-1]


def _late_ok(tr) -> bool:
    return _decades(tr) >= MIN_DECADES and int(_late_mask(tr).sum()) >= MIN_LATE_ROWS


def _decreasing(values: np.ndarray) -> bool:
    """Decreasing trend: ends lower, and the deeper half averages lower.

    Tolerates the row-to-row wiggle that vertex-quantized statistics carry
    while still rejecting flat or rising series.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 4:
        return False
    half = v.size // 2
    return bool(v[-1] < v[0] and v[half:].mean() < v[:half].mean())


def _insufficient(cid, name, why="trace does not reach the late-time window"):
    return CriterionResult(cid, name, INSUFFICIENT, why)


# ---------------------------------------------------------------------------
# circle control (self-contained)

def _regular_polygon(n: int, radius: float = 1.0) -> ClosedPolyline:
    phi = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return ClosedPolyline.from_vertices(
        radius * np.column_stack([np.cos(phi), np.sin(phi)]))


def _polygon_area_radius(poly: ClosedPolyline) -> float:
    v = poly.loop()
    area = 0.5 * abs(float(np.sum(v[:-1, 0] * v[1:, 1] - v[1:, 0] * v[:-1, 1])))
    return math.sqrt(area / math.pi)


def circle_radius_error(n: int, t_end: float = 0.455, safety: float = 0.4) -> float:
    """Max |R_num - sqrt(1-2t)| while shrinking a unit circle to R=0.3.

    R_num is the polygon's area-equivalent radius, the natural measure with
    a second-order spatial error.
    """
    poly = _regular_polygon(n)
    t, max_err = 0.0, 0.0
    while t < t_end:
        h = float(segment_lengths(poly.loop()).min())
        dt = min(safety * h * h / 2.0, t_end - t)
        poly = csf_step_closed(poly, dt)
        t += dt
        max_err = max(max_err, abs(_polygon_area_radius(poly) - math.sqrt(1.0 - 2.0 * t)))
    return max_err


def check_circle(n: int = 512) -> CriterionResult:
    err = circle_radius_error(n)
    err_half = circle_radius_error(n // 2)
    ratio = err_half / err if err > 0 else math.inf
    ok = err <= 1e-3 and ratio >= 3.5
    return CriterionResult(
        1, "circle-oracle", PASS if ok else FAIL,
        f"err(N={n})={err:.2e} (<=1e-3), err(N={n//2})/err(N={n})={ratio:.2f} (>=3.5)")


# ---------------------------------------------------------------------------
# trace-based criteria

def check_area_slope(tr) -> CriterionResult:
    name = "area-slope"
    t, A, alpha = tr["t"], tr["A"], tr["alpha"]
    if t.size < 3:
        return _insufficient(2, name, "fewer than 3 rows")
    slope = (A[:-1] - A[1:]) / (t[1:] - t[:-1])
    mid_alpha = 0.5 * (alpha[:-1] + alpha[1:])
    # The region loses area at 2*pi + 4*alpha (one crossing-angle 2*alpha
    # per lobe); the tolerance band is 5% each side.
    lo = 0.95 * 2.0 * math.pi
    hi = 1.05 * (2.0 * math.pi + 4.0 * mid_alpha)
    slope_ok = bool(np.all(slope >= lo) and np.all(slope <= hi))
    if not _late_ok(tr):
        return _insufficient(2, name)
    late = _late_mask(tr)
    ratio = tr["A"][late] / (tr["T_hat"][late] - tr["t"][late])
    band_ok = bool(np.all(np.abs(ratio / (2.0 * math.pi) - 1.0) <= 0.10))
    worst = float(np.abs(ratio / (2.0 * math.pi) - 1.0).max())
    status = PASS if (slope_ok and band_ok) else FAIL
    return CriterionResult(2, name, status,
                           f"slope in [0.95*2pi, 1.05*(2pi+4a)]: {slope_ok}; "
                           f"A/(T-t) within 10% of 2pi on final decade: {band_ok} "
                           f"(worst {worst:.3f})")


def check_angle_decay(tr) -> CriterionResult:
    name = "angle-decay"
    alpha = tr["alpha"]
    if alpha.size < 3:
        return _insufficient(3, name, "fewer than 3 rows")
    imax = int(np.argmax(alpha))
    transient_ok = imax <= alpha.size // 4
    tail = alpha[imax:]
    monotone = bool(np.all(np.diff(tail) <= 1e-9 * alpha[0]))
    halved = alpha[-1] <= 0.5 * alpha[0]
    ok = transient_ok and monotone and halved
    return CriterionResult(3, name, PASS if ok else FAIL,
                           f"peak at row {imax}/{alpha.size}, monotone after: {monotone}, "
                           f"alpha(end)={alpha[-1]:.4f} <= alpha(0)/2={0.5 * alpha[0]:.4f}: {halved}")


def check_grim_reaper(tr) -> CriterionResult:
    name = "grim-reaper"
    if not _late_ok(tr):
        return _insufficient(4, name)
    late = _late_mask(tr, TREND_DECADES)
    gf, gft = tr["gr_gap_F"], tr["gr_gap_Ftheta"]
    trend = _decreasing(gf[late])
    ok = trend and gf[-1] <= 0.1 and gft[-1] <= 0.2
    return CriterionResult(4, name, PASS if ok else FAIL,
                           f"gap_F decreasing on late window: {trend}; "
                           f"gap_F(end)={gf[-1]:.4f} (<=0.1), gap_Ftheta(end)={gft[-1]:.4f} (<=0.2)")


def check_y_bound(tr) -> CriterionResult:
    name = "y-bound"
    if not _late_ok(tr):
        return _insufficient(5, name)
    val = tr["Y"][-1] * tr["kappa_right"][-1] / (0.5 * math.pi)
    ok = 0.85 <= val <= 1.15
    return CriterionResult(5, name, PASS if ok else FAIL,
                           f"Y*kappa(pi/2)/(pi/2) = {val:.4f} in [0.85, 1.15]")


def check_x_bound(tr) -> CriterionResult:
    name = "x-bound"
    if not _late_ok(tr):
        return _insufficient(6, name)
    late = _late_mask(tr)
    beta, ell = tr["beta"][late], tr["ell"][late]
    beta_ok = bool(np.all(beta > 2.0))
    ell_ok = bool(np.all(np.diff(ell) > 0.0))
    return CriterionResult(6, name, PASS if (beta_ok and ell_ok) else FAIL,
                           f"beta > 2 on final decade: {beta_ok} (min {beta.min():.4f}); "
                           f"ell strictly increasing: {ell_ok}")


def check_bowtie(tr) -> CriterionResult:
    name = "bowtie"
    if not _late_ok(tr):
        return _insufficient(7, name)
    late = _late_mask(tr, TREND_DECADES)
    bow = tr["bowtie_dist"]
    area = tr["A"] / (tr["X"] * tr["Y"])
    shrunk = bow[-1] < bow[0]
    close = bow[-1] <= 0.2
    window = 2.0 - 1e-9 <= area[-1] <= 2.3
    decreasing = _decreasing(area[late])
    ok = shrunk and close and window and decreasing
    return CriterionResult(7, name, PASS if ok else FAIL,
                           f"dist(end)={bow[-1]:.4f} < dist(0)={bow[0]:.4f}: {shrunk}, <=0.2: {close}; "
                           f"box area(end)={area[-1]:.4f} in [2, 2.3]: {window}, "
                           f"decreasing: {decreasing}")


def check_migration(tr) -> CriterionResult:
    name = "migration"
    if not _late_ok(tr):
        return _insufficient(8, name)
    late = _late_mask(tr, TREND_DECADES)
    dist = np.hypot(tr["migration_x"] - 1.0, tr["migration_y"] - 1.0)
    ok = _decreasing(dist[late])
    return CriterionResult(8, name, PASS if ok else FAIL,
                           f"|migration-(1,1)| decreasing on late window: {ok} "
                           f"({dist[late][0]:.4f} -> {dist[late][-1]:.4f})")


def check_structure(tr, report: dict | None) -> CriterionResult:
    name = "structure-preservation"
    zc = tr["node_zero_count"]
    zc_ok = bool(np.all(np.diff(zc) <= 0))
    if report is None:
        return _insufficient(9, name, "report.json not available for convexity/kappa_theta")
    st = report.get("structure", {})
    convex_ok = bool(st.get("convex")) and all(st["convex"])
    margins = st.get("kappa_theta_margin", [])
    margin_ok = bool(margins) and min(margins) > 0.0
    ok = zc_ok and convex_ok and margin_ok
    return CriterionResult(9, name, PASS if ok else FAIL,
                           f"zero count non-increasing: {zc_ok}; convex at all rows: {convex_ok}; "
                           f"min kappa_theta margin {min(margins) if margins else float('nan'):.3g} > 0: {margin_ok}")


def check_identities(tr, report: dict | None) -> CriterionResult:
    name = "identities"
    sup, integ = tr["support_residual"], tr["integral_residual"]
    sup_ok = bool(np.all(sup <= 0.02))
    int_ok = bool(np.all(integ <= 0.02))
    if report is None:
        return _insufficient(10, name, "report.json needed for the refinement check")
    seed = report["config"]["seed"]
    if seed["kind"] != "lemniscate":
        return _insufficient(10, name, "refinement check defined for lemniscate seeds")
    ratios = refinement_ratios(seed["a"], seed["n"])
    refine_ok = all(r >= 4.0 for r in ratios)
    ok = sup_ok and int_ok and refine_ok
    return CriterionResult(10, name, PASS if ok else FAIL,
                           f"support residual <= 2% at all rows: {sup_ok} (max {sup.max():.2e}); "
                           f"integral residual <= 2%: {int_ok} (max {integ.max():.2e}); "
                           f"4x refinement shrinks >= 4x: {refine_ok} "
                           f"(support {ratios[0]:.1f}x, integral {ratios[1]:.1f}x)")


def refinement_ratios(a: float, n: int) -> tuple[float, float]:
    """Residual shrink factors when the seed mesh is refined fourfold."""
    vals = []
    for count in (n, 4 * n):
        arc = lemniscate_arc(a, count)
        m = arc_measures(arc)
        prof = theta_profile(arc)
        vals.append((support_profile(arc).residual,
                     integral_identity_residual(prof, m.Y, m.kappa_right)))
    (s1, i1), (s4, i4) = vals
    return (s1 / s4 if s4 > 0 else math.inf, i1 / i4 if i4 > 0 else math.inf)


def check_nodal(tr, report: dict | None) -> CriterionResult:
    name = "nodal-estimate"
    if report is None:
        return _insufficient(11, name, "report.json not available")
    if not _late_ok(tr):
        return _insufficient(11, name)
    st = report.get("structure", {})
    ts = np.asarray(st.get("t", []))
    flags = np.asarray(st.get("nodal_ok", []), dtype=bool)
    if ts.size != tr["t"].size:
        return _insufficient(11, name, "structure rows do not match trace rows")
    late = _late_mask(tr)
    ok = bool(np.all(flags[late]))
    return CriterionResult(11, name, PASS if ok else FAIL,
                           f"nodal estimate holds at all final-decade rows: {ok}")


# ---------------------------------------------------------------------------
# driver

def verify(trace_path: str | Path, report_path: str | Path | None = None,
           circle_check: bool = True) -> tuple[list[CriterionResult], int]:
    """Evaluate all acceptance criteria; returns (results, exit_code)."""
    try:
        tr = load_trace(trace_path)
    except TraceFormatError as exc:
        print(f"error: {exc}")
        return [], 2
    report = None
    if report_path is not None:
        with open(report_path, encoding="utf-8") as fh:
            report = json.load(fh)

    results = [
        check_circle() if circle_check else CriterionResult(1, "circle-oracle", SKIP, "skipped"),
        check_area_slope(tr),
        check_angle_decay(tr),
        check_grim_reaper(tr),
        check_y_bound(tr),
        check_x_bound(tr),
        check_bowtie(tr),
        check_migration(tr),
        check_structure(tr, report),
        check_identities(tr, report),
        check_nodal(tr, report),
    ]
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.cid:>3} {r.name:<{width}} {r.status:<12} {r.detail}")
    n_pass = sum(r.status == PASS for r in results)
    print(f"passed {n_pass}/{len([r for r in results if r.status != SKIP])} criteria")
    code = 0 if all(r.ok for r in results) else 1
    return results, code
