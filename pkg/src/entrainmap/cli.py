"""Command-line front end.

Every command writes its data files plus a ``<name>.run.json`` sidecar that
records the full run configuration, so any output can be regenerated.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analysis as an
from .contours import split_at_wrap
from .cycles import find_limit_cycle
from .errors import EntrainmapError
from .manifolds import grow_stable_pair, grow_unstable
from .maps import (
    CANONICAL_SECTION,
    NT_SECTION,
    SEMI_SECTION,
    EntrainmentMap,
    MapPoint,
    map_1d_nt,
    verify_global_section,
)
from .model import PARAM_FIELDS, ModelParams, nullcline, parse_assignments, preset
from .odeint import IntegratorConfig
from .svg import PALETTE, Figure

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_NO_ENTRAINMENT = 0, 2, 3, 4
INTEGRATOR_KEYS = ("rel_tol", "abs_tol", "max_step", "event_tol")
SECTION_KEYS = {"section_center": "center", "section_delta": "delta", "section_level": "level"}


class UsageError(Exception):
    pass


class NoEntrainment(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    preset: str
    params: ModelParams
    integrator: IntegratorConfig
    section: object
    options: dict = field(default_factory=dict)
    out: str = "."
    seed: int = 0

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "preset": self.preset,
            "params": self.params.as_dict(),
            "integrator": asdict(self.integrator),
            "section": asdict(self.section),
            "options": self.options,
            "out": self.out,
            "seed": self.seed,
        }

    def emap(self) -> EntrainmentMap:
        return EntrainmentMap(self.params, self.section, self.integrator)


def build_run_config(args) -> RunConfig:
    lines = []
    if args.config:
        lines += Path(args.config).read_text().splitlines()
    lines += args.set or []
    base = preset(args.preset)
    section = SEMI_SECTION if args.preset == "semi" else CANONICAL_SECTION
    integ: dict[str, float] = {}
    sec: dict[str, float] = {}
    model_lines = []
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"expected key=value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key in INTEGRATOR_KEYS:
            integ[key] = float(val)
        elif key in SECTION_KEYS:
            sec[SECTION_KEYS[key]] = float(val)
        elif key in PARAM_FIELDS or key == "preset":
            if key == "preset":
                section = SEMI_SECTION if val == "semi" else CANONICAL_SECTION
            model_lines.append(line)
        else:
            raise UsageError(f"unknown key {key!r}")
    try:
        params = parse_assignments(model_lines, base)
        integrator = IntegratorConfig(**integ)
        section = replace(section, **sec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    opts = {k: v for k, v in vars(args).items()
            if k not in ("preset", "config", "set", "out", "seed", "svg", "jobs", "command", "func")}
    return RunConfig(args.command, args.preset, params, integrator, section, opts, str(args.out), args.seed)


# ----- output helpers --------------------------------------------------------

def _sidecar(rc: RunConfig, name: str, summary: dict | None = None) -> None:
    doc = {"run_config": rc.as_dict()}
    if summary is not None:
        doc["summary"] = summary
    (Path(rc.out) / f"{name}.run.json").write_text(json.dumps(doc, indent=2, default=_json_default))


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def write_csv(rc: RunConfig, name: str, header: str, rows, fmt="%.9g", summary: dict | None = None) -> Path:
    path = Path(rc.out) / f"{name}.csv"
    data = np.asarray(rows, dtype=float)
    if data.ndim == 1:
        data = data.reshape(0, len(header.split(","))) if data.size == 0 else data[None, :]
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt=fmt)
    _sidecar(rc, name, summary)
    return path


def write_json(rc: RunConfig, name: str, doc: dict) -> Path:
    path = Path(rc.out) / f"{name}.json"
    path.write_text(json.dumps(doc, indent=2, default=_json_default))
    _sidecar(rc, name)
    return path


def _plot_lines(fig: Figure, lines, color, width=1.5, dash=None):
    for line in lines:
        for piece in split_at_wrap(np.asarray(line)):
            fig.polyline(piece, color, width, dash)


# ----- commands --------------------------------------------------------------

def cmd_limit_cycle(rc: RunConfig, args) -> int:
    params = rc.params if args.osc == "O2" else rc.params.replace(alpha1=0.0)
    cyc = find_limit_cycle(params, args.mode, args.osc, rc.integrator)
    name = f"limit_cycle_{args.mode}_{args.osc}"
    path = Path(rc.out) / f"{name}.csv"
    cyc.to_csv(path)
    summary = {"mode": args.mode, "oscillator": args.osc, "period": cyc.period,
               "x0": cyc.x0.tolist(), "origin": list(cyc.origin)}
    _sidecar(rc, name, summary)
    print(json.dumps(summary))
    if args.svg:
        fig = Figure(xlim=(0, float(cyc.P.max()) * 1.1), ylim=(0, float(cyc.M.max()) * 1.2),
                     title=f"{args.osc} limit cycle ({args.mode})", xlabel="P", ylabel="M")
        P_hi = float(cyc.P.max()) * 1.1
        kinds = ["P_dark", "P_light", "M1"] if args.osc == "O1" else ["P_dark", "M2_min", "M2_max"]
        o1 = None
        if args.osc == "O2":
            o1 = find_limit_cycle(rc.params.replace(alpha1=0.0), args.mode, "O1", rc.integrator)
        for k, kind in enumerate(kinds):
            nc = nullcline(kind, params, (0.0, P_hi), 400, o1_cycle=o1)
            fig.polyline(nc.samples, PALETTE[k + 1], 1.0, "4,3")
        fig.polyline(np.column_stack([cyc.P, cyc.M]), "#000000", 2.0)
        fig.points(cyc.hourly_markers(), "#2ca02c", 2.5, filled=False)
        fig.save(Path(rc.out) / f"{name}.svg")
    return EXIT_OK


def _map_curve_svg(path: Path, ys, nxt, title: str, fixed=()):
    fig = Figure(title=title, xlabel="y_n", ylabel="y_n+1")
    fig.polyline([[0, 0], [24, 24]], "#888888", 1.0, "4,3")
    pts = np.column_stack([ys, nxt])
    _plot_lines(fig, [pts], "#1f77b4", 1.8)
    for fp in fixed:
        fig.points([[fp.y, fp.y]], "#d62728", 4, filled=fp.stable)
    fig.save(path)


def cmd_map1d(rc: RunConfig, args) -> int:
    ys = (np.arange(args.n) + 0.5) * 24.0 / args.n
    steps = [map_1d_nt(y, rc.params, NT_SECTION, rc.integrator) for y in ys]
    nxt = np.array([s.next.y for s in steps])
    rho = np.array([s.return_time for s in steps])
    write_csv(rc, "map1d", "y,y_next,rho", np.column_stack([ys, nxt, rho]))
    if args.svg:
        _map_curve_svg(Path(rc.out) / "map1d.svg", ys, nxt, "single-oscillator light map")
    return EXIT_OK


def cmd_map_o1(rc: RunConfig, args) -> int:
    emap = rc.emap()
    ys = (np.arange(args.n) + 0.5) * 24.0 / args.n
    out = emap.grid(ys, ys)
    fps = an.fixed_points_1d(emap)
    summary = {"fixed_points": [{"y": f.y, "slope": f.slope, "stable": f.stable} for f in fps]}
    write_csv(rc, "map_o1", "y,y_next,rho", np.column_stack([ys, out[:, 2], out[:, 3]]), summary=summary)
    print(json.dumps(summary))
    if args.svg:
        _map_curve_svg(Path(rc.out) / "map_o1.svg", ys, out[:, 2], "O1-entrained map", fps)
    return EXIT_OK


def cmd_map2d_surface(rc: RunConfig, args) -> int:
    emap = rc.emap()
    g = an.grid_nodes(args.n)
    X, Y = np.meshgrid(g, g)
    out = emap.grid(X.ravel(), Y.ravel())
    ok = out[:, 0] == 0
    rows = np.column_stack([X.ravel(), Y.ravel(), out[:, 1], out[:, 2], out[:, 3]])
    rows[~ok, 2:] = np.nan
    write_csv(rc, "map2d_surface", "x,y,x_next,y_next,rho", rows,
              summary={"failed_nodes": int((~ok).sum())})
    if args.svg:
        fig = Figure(title="return time", xlabel="x (O1 phase)", ylabel="y (light phase)")
        fig.raster(np.where(ok, out[:, 3], -1).reshape(X.shape), g, g)
        fig.save(Path(rc.out) / "map2d_surface.svg")
    return EXIT_OK


def _nullcline_figure(nc: an.MapNullclines, title: str) -> Figure:
    fig = Figure(title=title, xlabel="x (O1 phase)", ylabel="y (light phase)")
    _plot_lines(fig, nc.n_x, "#1f77b4", 1.4)
    _plot_lines(fig, nc.n_y, "#d62728", 1.4)
    return fig


def _mark_fixed(fig: Figure, records):
    for r in records:
        filled = r.stability == "sink"
        fig.points([r.location.as_tuple()], "#000000", 4, filled=filled, labels=[r.label])


def cmd_nullclines(rc: RunConfig, args) -> int:
    nc = an.map_nullclines(rc.emap(), args.grid)
    rows = [(c, k, x, y) for c, lines in ((0, nc.n_x), (1, nc.n_y))
            for k, line in enumerate(lines) for x, y in line]
    write_csv(rc, "nullclines", "component,line_id,x,y", rows, fmt=["%d", "%d", "%.9g", "%.9g"],
              summary={"component_codes": {"0": "n_x", "1": "n_y"}})
    if args.svg:
        _nullcline_figure(nc, "map nullclines").save(Path(rc.out) / "nullclines.svg")
    return EXIT_OK


def cmd_fixed_points(rc: RunConfig, args) -> int:
    emap = rc.emap()
    nc = an.map_nullclines(emap, args.grid)
    recs = an.find_fixed_points(emap, args.grid, nullclines=nc)
    doc = {"fixed_points": [r.as_dict() for r in recs]}
    write_json(rc, "fixed_points", doc)
    for r in recs:
        print(f"{r.label:>8} x={r.location.x:8.4f} y={r.location.y:8.4f} {r.stability:7} "
              f"|lambda|={np.round(r.moduli, 4).tolist()}")
    if args.svg:
        fig = _nullcline_figure(nc, "map nullclines and fixed points")
        _mark_fixed(fig, recs)
        fig.save(Path(rc.out) / "fixed_points.svg")
    if any(not r.converged for r in recs):
        return EXIT_NUMERICAL
    return EXIT_OK


def _sink(emap: EntrainmentMap) -> MapPoint:
    stable = [f for f in an.fixed_points_1d(emap) if f.stable]
    if not stable:
        raise NoEntrainment("the O1-entrained map has no stable fixed point")
    return MapPoint(stable[0].y, stable[0].y)


def _manifolds(emap: EntrainmentMap, grid: int):
    recs = an.find_fixed_points(emap, grid)
    by = {r.label: r for r in recs}
    if not all(k in by for k in "ABCD"):
        raise NoEntrainment("expected four labelled fixed points")
    A, D = by["A"].location.as_tuple(), by["D"].location.as_tuple()
    curves = []
    for lab in "BC":
        s = by[lab]
        if s.stability != "saddle":
            continue
        curves += [grow_unstable(emap, s, b, sink=A) for b in (1, -1)]
        curves += grow_stable_pair(emap, s, source=D)
    return recs, curves


def cmd_heatmap(rc: RunConfig, args) -> int:
    emap = rc.emap()
    target = _sink(emap)
    hm = an.entrainment_heatmap(emap, target, args.grid, args.max_iters)
    path = Path(rc.out) / "heatmap.csv"
    hm.to_csv(path)
    fin = hm.finite
    summary = {"target": target.as_tuple(), "n_entrained": int(fin.size),
               "n_not_entrained": int(hm.values.size - fin.size),
               "max_time": float(fin.max()) if fin.size else None,
               "mean_time": float(fin.mean()) if fin.size else None}
    _sidecar(rc, "heatmap", summary)
    print(json.dumps(summary))
    if args.svg:
        fig = Figure(title="entrainment time (h)", xlabel="x (O1 phase)", ylabel="y (light phase)")
        fig.raster(hm.values, hm.xs, hm.ys)
        if args.overlay:
            nc = an.map_nullclines(emap, 96)
            _plot_lines(fig, nc.n_x, "#ffffff", 0.8, "3,2")
            _plot_lines(fig, nc.n_y, "#ff9999", 0.8, "3,2")
            recs, curves = _manifolds(emap, 96)
            for c in curves:
                _plot_lines(fig, c.segments, "#00ff66" if c.kind == "stable" else "#ff33cc", 1.6)
            _mark_fixed(fig, recs)
        fig.save(Path(rc.out) / "heatmap.svg")
    return EXIT_OK


def cmd_manifolds(rc: RunConfig, args) -> int:
    emap = rc.emap()
    recs, curves = _manifolds(emap, args.grid)
    meta = []
    for c in curves:
        name = f"manifold_{c.kind}_{c.saddle.label}_{'plus' if c.branch > 0 else 'minus'}"
        c.to_csv(Path(rc.out) / f"{name}.csv")
        _sidecar(rc, name, c.metadata())
        meta.append(c.metadata())
        print(f"{c.kind:>8} {c.saddle.label} {'+' if c.branch > 0 else '-'} {c.termination} "
              f"({len(c.lifted)} vertices)")
    write_json(rc, "manifolds", {"curves": meta, "fixed_points": [r.as_dict() for r in recs]})
    if args.svg:
        fig = Figure(title="invariant manifolds", xlabel="x (O1 phase)", ylabel="y (light phase)")
        for c in curves:
            _plot_lines(fig, c.segments, "#2ca02c" if c.kind == "stable" else "#9467bd", 1.6)
        _mark_fixed(fig, recs)
        fig.save(Path(rc.out) / "manifolds.svg")
    return EXIT_OK if all(c.termination != "stalled" for c in curves) else EXIT_NUMERICAL


def _parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"range must look like lo:hi, got {text!r}") from None
    if not lo < hi:
        raise UsageError("range needs lo < hi")
    return lo, hi


def cmd_bifurcation(rc: RunConfig, args) -> int:
    lo, hi = _parse_range(args.range)
    crit = an.saddle_node_scan(rc.emap(), args.param, lo, hi)
    doc = {"parameter": args.param, "range": [lo, hi], "critical": crit}
    write_json(rc, f"bifurcation_{args.param}", doc)
    print(json.dumps(doc))
    return EXIT_OK


def cmd_cobweb(rc: RunConfig, args) -> int:
    emap = rc.emap()
    cw = an.cobweb(emap, args.y0, args.iters, until=args.until)
    rows = [(k, cw.ys[k], cw.ys[k + 1], cw.return_times[k]) for k in range(len(cw.return_times))]
    summary = {"signature": cw.signature, "directions": cw.directions,
               "delay_then_advance": cw.delay_then_advance}
    write_csv(rc, "cobweb", "k,y,y_next,rho", rows, fmt=["%d", "%.9g", "%.9g", "%.9g"], summary=summary)
    print(json.dumps(summary))
    if args.svg:
        ys = (np.arange(96) + 0.5) * 0.25
        out = emap.grid(ys, ys)
        fig = Figure(title=f"cobweb from y0={args.y0:g}", xlabel="y_n", ylabel="y_n+1")
        fig.polyline([[0, 0], [24, 24]], "#888888", 1.0, "4,3")
        _plot_lines(fig, [np.column_stack([ys, out[:, 2]])], "#1f77b4", 1.5)
        web = []
        for a, b in zip(cw.ys[:-1], cw.ys[1:]):
            web += [[a, a], [a, b]]
        web.append([cw.ys[-1], cw.ys[-1]])
        _plot_lines(fig, [np.array(web)], "#d62728", 1.0)
        fig.save(Path(rc.out) / "cobweb.svg")
    return EXIT_OK


def cmd_iterate_field(rc: RunConfig, args) -> int:
    f = an.iterate_field(rc.emap(), args.grid, args.iters)
    rows = np.column_stack([f.starts, f.nexts])
    write_csv(rc, "iterate_field", "x,y,x_next,y_next", rows)
    if args.svg:
        fig = Figure(title="next iterates", xlabel="x (O1 phase)", ylabel="y (light phase)")
        ends = f.starts + f.arrows
        fig.arrows(f.starts, ends)
        fig.save(Path(rc.out) / "iterate_field.svg")
    return EXIT_OK


def cmd_compare(rc: RunConfig, args) -> int:
    emap = rc.emap()
    target = _sink(emap)
    if args.x is not None and args.y is not None:
        starts = [MapPoint(args.x, args.y)]
    else:
        rng = np.random.default_rng(rc.seed)
        starts = [MapPoint(*p) for p in rng.uniform(0.0, 24.0, size=(args.random, 2))]
    reports = []
    entrained = True
    for p in starts:
        c = an.compare_map_vs_simulation(emap, p, target, args.cycles)
        entrained &= c.map_entrained and c.sim_entrained
        reports.append({
            "start": p.as_tuple(), "map_final_y": c.map_final_y, "sim_final_y": c.sim_final_y,
            "phase_difference": c.phase_difference, "map_entrained": c.map_entrained,
            "sim_entrained": c.sim_entrained, "discrepancy": c.discrepancy,
            "map_direction": c.map_direction, "sim_direction": c.sim_direction,
            "map_signature": c.map_signature, "sim_signature": c.sim_signature,
            "map_time": c.map_time,
        })
    write_json(rc, "compare", {"target": target.as_tuple(), "runs": reports})
    for r in reports:
        print(f"start=({r['start'][0]:.3f},{r['start'][1]:.3f}) map={r['map_final_y']:.3f} "
              f"sim={r['sim_final_y']:.3f} diff={r['phase_difference']:.3f} "
              f"dir={r['map_direction']}/{r['sim_direction']}")
    return EXIT_OK if entrained else EXIT_NO_ENTRAINMENT


def cmd_verify_section(rc: RunConfig, args) -> int:
    rep = verify_global_section(rc.emap(), args.probes, rc.seed)
    doc = {"n_probes": args.probes, "all_returned": rep.all_returned, "failures": rep.failures,
           "spread": rep.spread, "max_offset": rep.max_offset, "within_delta": rep.within_delta,
           "max_return_time": float(np.nanmax(rep.return_times))}
    write_json(rc, "verify_section", doc)
    print(json.dumps(doc))
    return EXIT_OK if rep.all_returned else EXIT_NUMERICAL


# ----- parser ----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=["canonical", "semi"], default="canonical")
    common.add_argument("--config", help="file of key=value lines")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one setting")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--svg", action="store_true", help="also write SVG figures")
    common.add_argument("--jobs", type=int, default=None, help="worker threads for grid commands")
    common.add_argument("--seed", type=int, default=0)

    p = _Parser(prog="entrainmap", description="Entrainment maps of a hierarchical pair of circadian oscillators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("limit-cycle", cmd_limit_cycle, "limit cycle of O1 or O2 under DD, LL or LD")
    sp.add_argument("--mode", choices=["DD", "LL", "LD"], default="LD")
    sp.add_argument("--osc", choices=["O1", "O2"], default="O1")
    sp = add("map1d", cmd_map1d, "single-oscillator light phase map")
    sp.add_argument("--n", type=int, default=96)
    sp = add("map-o1", cmd_map_o1, "map of O2 with O1 already entrained")
    sp.add_argument("--n", type=int, default=96)
    sp = add("map2d-surface", cmd_map2d_surface, "2-D map on a grid")
    sp.add_argument("--n", type=int, default=48)
    sp = add("fixed-points", cmd_fixed_points, "fixed points of the 2-D map")
    sp.add_argument("--grid", type=int, default=96)
    sp = add("nullclines", cmd_nullclines, "map nullclines")
    sp.add_argument("--grid", type=int, default=96)
    sp = add("heatmap", cmd_heatmap, "entrainment time over the torus")
    sp.add_argument("--grid", type=int, default=48)
    sp.add_argument("--max-iters", type=int, default=200)
    sp.add_argument("--overlay", action="store_true", help="draw nullclines and manifolds on the SVG")
    sp = add("manifolds", cmd_manifolds, "stable and unstable manifolds of the saddles")
    sp.add_argument("--grid", type=int, default=96)
    sp = add("bifurcation", cmd_bifurcation, "saddle-node scan of the O1-entrained map")
    sp.add_argument("--param", choices=["alpha1", "phi2"], required=True)
    sp.add_argument("--range", required=True, help="lo:hi")
    sp = add("cobweb", cmd_cobweb, "cobweb of the O1-entrained map")
    sp.add_argument("--y0", type=float, required=True)
    sp.add_argument("--iters", type=int, default=20)
    sp.add_argument("--until", type=float, default=None)
    sp = add("iterate-field", cmd_iterate_field, "arrows from grid nodes to their iterates")
    sp.add_argument("--grid", type=int, default=24)
    sp.add_argument("--iters", type=int, default=1)
    sp = add("compare", cmd_compare, "map iteration against direct simulation")
    sp.add_argument("--x", type=float)
    sp.add_argument("--y", type=float)
    sp.add_argument("--random", type=int, default=1, help="number of random starts when --x/--y absent")
    sp.add_argument("--cycles", type=int, default=100)
    sp = add("verify-section", cmd_verify_section, "check the section is returned to from everywhere")
    sp.add_argument("--probes", type=int, default=100)
    return p


def _error(out: str, kind: str, message: str) -> None:
    doc = {"error": kind, "message": message}
    print(json.dumps(doc), file=sys.stderr)
    try:
        (Path(out) / "error.json").write_text(json.dumps(doc, indent=2))
    except OSError:
        pass


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        rc = build_run_config(args)
    except UsageError as exc:
        print(f"entrainmap: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"entrainmap: {exc}", file=sys.stderr)
        return EXIT_USAGE
    Path(rc.out).mkdir(parents=True, exist_ok=True)
    if args.jobs:
        import numba

        numba.set_num_threads(max(1, min(args.jobs, numba.config.NUMBA_NUM_THREADS)))
    try:
        return args.func(rc, args)
    except UsageError as exc:
        print(f"entrainmap: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoEntrainment as exc:
        _error(rc.out, "no-entrainment", str(exc))
        return EXIT_NO_ENTRAINMENT
    except EntrainmapError as exc:
        _error(rc.out, type(exc).__name__, str(exc))
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
