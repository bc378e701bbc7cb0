"""Simulation runs: configuration, trace and checkpoint persistence, SVG
snapshots, and the command line interface.

A run evolves a seed to a stop condition, recording one trace row per
diagnostics interval while the mesh retains full resolution, and writes
trace.csv, periodic JSON checkpoints and a report.json summary into the
output directory.  Identical configurations produce byte-identical traces.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .curvegeom import GeometryError, QuarterArc, arc_measures, reconstruct_figure_eight
from .diagnostics import TraceRecord, diag_record, node_profile
from .flowcore import FlowState, StepControl, estimate_vanishing_time, evolve
from .renorm import BOWTIE, RenormMode, normalize
from .seeds import SeedSpec, build_seed, validate_monotone
from . import verify as verify_mod

SCHEMA_VERSION = 1

# Rows are recorded only while the resolution statistic max|kappa|*h_min
# stays under this margin; past it the refinement floor has bound and the
# tip stencils are no longer trustworthy (the run itself continues to the
# kappa_h_stop threshold, which is deliberately looser).
RESOLVED_KAPPA_H = 0.2


@dataclass(frozen=True)
class RunConfig:
    """Declarative description of one simulation run."""

    seed: SeedSpec = SeedSpec()
    safety: float = 0.4
    dtheta_max: float = 0.1
    h_max: float | None = None          # default: seed arclength / (n - 1)
    kappa_h_stop: float = 0.3
    x_floor: float = 1e-6
    max_steps: int = 1_500_000
    diag_interval: int = 800
    J: tuple[float, float] = (math.pi / 4, 3 * math.pi / 4)
    out_dir: str = "out"
    checkpoint_every: int = 200_000
    rng_seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.J[0] < self.J[1] < math.pi):
            raise ValueError(f"J={self.J} must satisfy 0 < lo < hi < pi")
        if self.diag_interval < 1:
            raise ValueError("diag_interval must be >= 1")

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["J"] = list(self.J)
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "seed" in d and isinstance(d["seed"], dict):
            d["seed"] = SeedSpec(**d["seed"])
        if "J" in d:
            d["J"] = tuple(d["J"])
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def config_sha256(config: RunConfig) -> str:
    blob = json.dumps(config.to_json_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def step_control(config: RunConfig, seed_arc: QuarterArc) -> StepControl:
    h_max = config.h_max
    if h_max is None:
        h_max = seed_arc.arclength / (seed_arc.n - 1)
    return StepControl(h_max=h_max, safety=config.safety,
                       dtheta_max=config.dtheta_max,
                       kappa_h_stop=config.kappa_h_stop,
                       x_floor=config.x_floor, max_steps=config.max_steps)


# ---------------------------------------------------------------------------
# persistence

def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_trace(path: str | Path, rows: list[TraceRecord]) -> None:
    names = TraceRecord.field_names()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            d = asdict(row)
            fh.write(",".join(_fmt(d[k]) for k in names) + "\n")


def save_checkpoint(path: str | Path, state: FlowState, t_hat: float,
                    config_hash: str, stop_reason: str | None = None) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "t": state.t,
        "T_hat": t_hat,
        "stop_reason": stop_reason,
        "provenance": {"config_sha256": config_hash, "package_version": __version__},
        "vertices": state.arc.vertices.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path: str | Path) -> tuple[FlowState, float, dict]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise GeometryError(f"unsupported checkpoint schema {doc.get('schema_version')}")
    arc = QuarterArc.from_vertices(np.asarray(doc["vertices"], dtype=float))
    state = FlowState.from_arc(arc, t=float(doc["t"]))
    return state, float(doc["T_hat"]), doc


# ---------------------------------------------------------------------------
# running

@dataclass
class RunResult:
    exit_code: int
    stop_reason: str
    steps: int
    out_dir: Path
    trace_path: Path
    report_path: Path
    rows: list


def run(config: RunConfig) -> RunResult:
    """Evolve the configured seed to a stop condition and persist outputs."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = config_sha256(config)
    arc = build_seed(config.seed)
    ctl = step_control(config, arc)
    seed_report = validate_monotone(arc)
    state = FlowState.from_arc(arc)

    rows: list[TraceRecord] = []
    structure = {"t": [], "convex": [], "kappa_theta_margin": [], "nodal_ok": []}
    truncated_rows = 0
    last_ckpt = [0]

    def diag_hook(s: FlowState) -> None:
        nonlocal truncated_rows
        kappa_h = s.kappa_h
        if kappa_h < 0.0:
            from .flowcore import vertex_curvatures
            kappa_h = float(np.abs(vertex_curvatures(s.arc)).max() * s.h_min)
        if kappa_h > RESOLVED_KAPPA_H and rows:
            truncated_rows += 1
            return
        t_hat = estimate_vanishing_time(s)
        rows.append(diag_record(s, t_hat, config.J))
        rep = validate_monotone(s.arc)
        node = node_profile(s.arc, s.t, t_hat)
        structure["t"].append(s.t)
        structure["convex"].append(bool(rep.convex))
        structure["kappa_theta_margin"].append(float(rep.kappa_theta_margin))
        structure["nodal_ok"].append(bool(node.nodal_estimate_ok))

    def ckpt_hook(s: FlowState) -> None:
        if s.step_index - last_ckpt[0] >= config.checkpoint_every and s.step_index > 0:
            last_ckpt[0] = s.step_index
            save_checkpoint(out / f"checkpoint_{s.step_index:09d}.json",
                            s, estimate_vanishing_time(s), chash)

    result = evolve(state, ctl, hooks=[diag_hook, ckpt_hook],
                    diag_interval=config.diag_interval)

    trace_path = out / "trace.csv"
    write_trace(trace_path, rows)
    final = result.state
    t_hat_final = estimate_vanishing_time(final)
    save_checkpoint(out / "checkpoint_final.json", final, t_hat_final, chash,
                    stop_reason=result.stop_reason)
    report = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config": config.to_json_dict(),
        "config_sha256": chash,
        "stop_reason": result.stop_reason,
        "steps": result.steps,
        "t_end": final.t,
        "T_hat_final": t_hat_final,
        "n_final": final.arc.n,
        "resample_events": len(result.events),
        "trace_rows": len(rows),
        "rows_past_resolution": truncated_rows,
        "seed_monotone": asdict(seed_report),
        "structure": structure,
        "final_row": asdict(rows[-1]) if rows else None,
    }
    report_path = out / "report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1)
    return RunResult(exit_code=0, stop_reason=result.stop_reason, steps=result.steps,
                     out_dir=out, trace_path=trace_path, report_path=report_path,
                     rows=rows)


# ---------------------------------------------------------------------------
# SVG snapshots

_SVG_SIZE = 720


def _svg_path(points: np.ndarray, sx, sy, closed: bool) -> str:
    cmds = [f"{'M' if i == 0 else 'L'} {sx(p[0]):.2f} {sy(p[1]):.2f}"
            for i, p in enumerate(points)]
    return " ".join(cmds) + (" Z" if closed else "")

def snapshot_svg(checkpoint_path: str | Path, mode: RenormMode,
                 svg_path: str | Path) -> None:
    """Render the checkpointed curve under a renormalization.

    In box mode the bowtie quadrilateral is overlaid and the two points of
    horizontal tangency on the right lobe (and their left-lobe images) are
    marked with a filled and an open dot.
    """
    state, t_hat, _doc = load_checkpoint(checkpoint_path)
    fig8 = reconstruct_figure_eight(state.arc)
    mode_t = mode if mode.mode != "parabolic" else RenormMode("parabolic", t_hat)
    curve = normalize(fig8, mode_t, t=state.t)
    v = curve.vertices
    xmax = float(np.abs(v[:, 0]).max())
    ymax = float(np.abs(v[:, 1]).max())
    if mode.mode == "box":
        xmax = ymax = max(xmax, ymax, 1.0)
    half = 1.08 * max(xmax, ymax)
    scale = _SVG_SIZE / (2 * half)

    def sx(x): return (x + half) * scale
    def sy(y): return (half - y) * scale

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_SIZE}" '
             f'height="{_SVG_SIZE}" viewBox="0 0 {_SVG_SIZE} {_SVG_SIZE}">',
             f'<rect width="{_SVG_SIZE}" height="{_SVG_SIZE}" fill="white"/>']
    if mode.mode == "box":
        parts.append(f'<path d="{_svg_path(BOWTIE.loop(), sx, sy, False)}" fill="none" '
                     'stroke="#3366cc" stroke-width="1.5" stroke-dasharray="6 4"/>')
    parts.append(f'<path d="{_svg_path(np.vstack([v, v[:1]]), sx, sy, False)}" '
                 'fill="none" stroke="black" stroke-width="1.8"/>')
    if mode.mode == "box":
        arc = state.arc
        apex = arc.vertices[int(np.argmax(arc.y))]
        X = float(np.abs(state.arc.x).max())
        Y = float(arc.y.max())
        top = (apex[0] / X, apex[1] / Y)
        for (px, py), fill in [(top, "black"), ((-top[0], -top[1]), "white")]:
            parts.append(f'<circle cx="{sx(px):.2f}" cy="{sy(py):.2f}" r="6" '
                         f'fill="{fill}" stroke="black" stroke-width="1.5"/>')
    parts.append("</svg>")
    Path(svg_path).write_text("\n".join(parts), encoding="utf-8")


# ---------------------------------------------------------------------------
# CLI

def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, help="JSON config file (flags override)")
    p.add_argument("--a", type=float, help="lemniscate scale")
    p.add_argument("--n", type=int, help="seed vertex count")
    p.add_argument("--points-csv", type=str, help="ingest seed points from CSV")
    p.add_argument("--safety", type=float)
    p.add_argument("--dtheta-max", type=float)
    p.add_argument("--h-max", type=float)
    p.add_argument("--kappa-h-stop", type=float)
    p.add_argument("--x-floor", type=float)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--diag-interval", type=int)
    p.add_argument("--j-lo", type=float)
    p.add_argument("--j-hi", type=float)
    p.add_argument("--out-dir", type=str)
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--rng-seed", type=int)


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    seed = cfg.seed
    if args.points_csv:
        seed = replace(seed, kind="from_points", source_path=args.points_csv)
    if args.a is not None:
        seed = replace(seed, a=args.a)
    if args.n is not None:
        seed = replace(seed, n=args.n)
    overrides = {"seed": seed}
    for flag, name in [("safety", "safety"), ("dtheta_max", "dtheta_max"),
                       ("h_max", "h_max"), ("kappa_h_stop", "kappa_h_stop"),
                       ("x_floor", "x_floor"), ("max_steps", "max_steps"),
                       ("diag_interval", "diag_interval"), ("out_dir", "out_dir"),
                       ("checkpoint_every", "checkpoint_every"), ("rng_seed", "rng_seed")]:
        val = getattr(args, flag)
        if val is not None:
            overrides[name] = val
    J = (args.j_lo if args.j_lo is not None else cfg.J[0],
         args.j_hi if args.j_hi is not None else cfg.J[1])
    overrides["J"] = J
    return replace(cfg, **overrides)


def _cmd_seed(args) -> int:
    spec = SeedSpec(kind="from_points" if args.points_csv else "lemniscate",
                    a=args.a if args.a is not None else 1.0,
                    n=args.n if args.n is not None else 800,
                    source_path=args.points_csv)
    arc = build_seed(spec)
    rep = validate_monotone(arc)
    m = arc_measures(arc)
    state = FlowState.from_arc(arc)
    save_checkpoint(args.out, state, estimate_vanishing_time(state),
                    config_sha256(RunConfig(seed=spec)))
    print(f"seed: kind={spec.kind} n={arc.n} A={m.A:.6g} X={m.X:.6g} "
          f"Y={m.Y:.6g} alpha={m.alpha:.6g}")
    for name in ("convex", "kappa_theta_positive", "kappa_thetatheta_nonzero", "kx_positive"):
        print(f"  {name}: {getattr(rep, name)}")
    print(f"wrote {args.out}")
    return 0 if rep.passed else 1


def _run_one(cfg_path: str) -> int:
    res = run(RunConfig.load(cfg_path))
    print(f"[{cfg_path}] stop={res.stop_reason} steps={res.steps} -> {res.trace_path}")
    return res.exit_code


def _cmd_run(args) -> int:
    if args.sweep:
        import multiprocessing as mp
        with mp.Pool(min(len(args.sweep), mp.cpu_count())) as pool:
            codes = pool.map(_run_one, args.sweep)
        return max(codes)
    config = _config_from_args(args)
    res = run(config)
    print(f"stop={res.stop_reason} steps={res.steps} rows={len(res.rows)}")
    print(f"trace:  {res.trace_path}")
    print(f"report: {res.report_path}")
    return res.exit_code


def _cmd_verify(args) -> int:
    report = args.report
    if report is None:
        candidate = Path(args.trace).parent / "report.json"
        report = str(candidate) if candidate.exists() else None
    results, code = verify_mod.verify(args.trace, report_path=report,
                                      circle_check=not args.no_circle)
    return code


def _cmd_snapshot(args) -> int:
    mode = RenormMode(args.mode, T_hat=args.t_hat)
    snapshot_svg(args.checkpoint, mode, args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="eightflow",
        description="Curve shortening flow on symmetric figure-eight curves")
    sub = parser.add_subparsers(dest="command", required=True)

    p_seed = sub.add_parser("seed", help="build and validate a seed curve")
    p_seed.add_argument("--a", type=float, default=None)
    p_seed.add_argument("--n", type=int, default=None)
    p_seed.add_argument("--points-csv", type=str, default=None)
    p_seed.add_argument("--out", type=str, required=True, help="checkpoint JSON path")
    p_seed.set_defaults(func=_cmd_seed)

    p_run = sub.add_parser("run", help="run a simulation")
    _add_run_flags(p_run)
    p_run.add_argument("--sweep", nargs="+", metavar="CONFIG",
                       help="run these config files in parallel instead")
    p_run.set_defaults(func=_cmd_run)

    p_ver = sub.add_parser("verify", help="evaluate acceptance criteria on a trace")
    p_ver.add_argument("trace")
    p_ver.add_argument("--report", default=None, help="report.json (default: sibling)")
    p_ver.add_argument("--no-circle", action="store_true",
                       help="skip the self-contained circle control check")
    p_ver.set_defaults(func=_cmd_verify)

    p_snap = sub.add_parser("snapshot", help="render a checkpoint to SVG")
    p_snap.add_argument("checkpoint")
    p_snap.add_argument("--mode", choices=["box", "width", "parabolic", "reaper"],
                        default="box")
    p_snap.add_argument("--t-hat", type=float, default=None,
                        help="vanishing-time estimate for parabolic mode")
    p_snap.add_argument("--out", required=True)
    p_snap.set_defaults(func=_cmd_snapshot)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, GeometryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
