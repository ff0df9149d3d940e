"""Command-line front end: preset runs, gradient checks, CSV export.

Configuration is flat ``section.key = value`` text (``#`` comments), with
the same keys available on the command line as ``--override section.key=value``.
Output files are written atomically (temp file, then rename) with
full-precision, round-trippable float formatting.

Exit codes: 0 success, 2 configuration error, 3 solver blow-up,
4 gradient check above tolerance.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .forward import BlowUpError, solve_forward
from .grid import GridError, make_grid
from .model import REALISM_BOUND
from .optimize import DescentHistory, descend, fd_gradient_check
from .scenarios import (
    ScenarioSpec,
    UnknownPresetError,
    build_preset,
    extract_interface,
    preset_summary,
)

__all__ = ["ConfigError", "main", "cmd_run", "cmd_gradcheck", "cmd_list", "read_control_csv"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_GRADCHECK = 4


class ConfigError(ValueError):
    """Bad configuration key or value; the message names the key."""


def _parse_bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_floats(s: str) -> tuple[float, ...]:
    s = s.strip()
    if not s:
        return ()
    return tuple(float(tok) for tok in s.split(","))


def _parse_schedule(s: str) -> tuple[tuple[int, float], ...]:
    entries = []
    for tok in s.split(","):
        n, _, eps = tok.partition(":")
        entries.append((int(n), float(eps)))
    return tuple(entries)


# closed override schema: section.key -> value parser
_SCHEMA = {
    "run.scenario": str,
    "run.outdir": str,
    "run.snapshots": _parse_floats,
    "run.write_control": _parse_bool,
    "run.write_fields": _parse_bool,
    "run.write_interface": _parse_bool,
    "run.write_history": _parse_bool,
    "grid.dim": int,
    "grid.nx1": int,
    "grid.nx2": int,
    "grid.nt": int,
    "grid.lx1": float,
    "grid.lx2": float,
    "grid.T": float,
    "model.gamma": float,
    "model.beta": float,
    "model.xi": float,
    "model.y_mt": float,
    "model.H": float,
    "model.alpha": float,
    "model.reaction": str,
    "model.eps0": float,
    "model.eps1": float,
    "opt.iterations": int,
    "opt.step": float,
    "opt.schedule": _parse_schedule,
    "opt.grad_tol": float,
    "opt.record_every": int,
    "gradcheck.directions": int,
    "gradcheck.h": float,
    "gradcheck.tol": float,
    "gradcheck.seed": int,
}


def _set_entry(entries: dict, key: str, raw: str) -> None:
    key = key.strip()
    if key not in _SCHEMA:
        raise ConfigError(f"unknown configuration key {key!r}")
    try:
        entries[key] = _SCHEMA[key](raw.strip())
    except (ValueError, TypeError) as err:
        raise ConfigError(f"bad value for {key!r}: {err}") from err


def parse_config_file(path: str) -> dict:
    entries: dict = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'section.key = value'")
                key, _, raw = line.partition("=")
                _set_entry(entries, key, raw)
    except OSError as err:
        raise ConfigError(f"cannot read config file {path!r}: {err}") from err
    return entries


def _collect_entries(args) -> dict:
    entries: dict = {}
    if getattr(args, "config", None):
        entries.update(parse_config_file(args.config))
    for item in getattr(args, "override", None) or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        key, _, raw = item.partition("=")
        _set_entry(entries, key, raw)
    if getattr(args, "scenario", None):
        entries["run.scenario"] = args.scenario
    if getattr(args, "outdir", None):
        entries["run.outdir"] = args.outdir
    if getattr(args, "snapshots", None):
        _set_entry(entries, "run.snapshots", args.snapshots)
    return entries


def _build_scenario(entries: dict) -> ScenarioSpec:
    name = entries.get("run.scenario")
    if not name:
        raise ConfigError("missing required key 'run.scenario'")
    grid_map = {
        "grid.dim": "dim",
        "grid.nt": "n_t",
        "grid.T": "t_final",
    }
    grid_ov: dict = {}
    counts: dict = {}
    lengths: dict = {}
    for key, val in entries.items():
        if key in grid_map:
            grid_ov[grid_map[key]] = val
        elif key == "grid.nx1":
            counts[0] = val
        elif key == "grid.nx2":
            counts[1] = val
        elif key == "grid.lx1":
            lengths[0] = val
        elif key == "grid.lx2":
            lengths[1] = val
    params_ov = {
        key.split(".", 1)[1]: val for key, val in entries.items() if key.startswith("model.")
    }
    opt_ov: dict = {}
    if "opt.schedule" in entries:
        opt_ov["schedule"] = entries["opt.schedule"]
    if "opt.grad_tol" in entries:
        opt_ov["grad_tol"] = entries["opt.grad_tol"]
    if "opt.record_every" in entries:
        opt_ov["record_every"] = entries["opt.record_every"]

    try:
        base = build_preset(name)  # defaults decide axis counts for partial overrides
        base_spec = base.grid
        if counts:
            cs = list(base_spec.counts)
            for ax, n in counts.items():
                if ax >= len(cs):
                    raise ConfigError(f"grid.nx{ax + 1} not valid for a {base_spec.dim}D preset")
                cs[ax] = n
            grid_ov["counts"] = tuple(cs)
        if lengths:
            ls = list(base_spec.lengths)
            for ax, length in lengths.items():
                if ax >= len(ls):
                    raise ConfigError(f"grid.lx{ax + 1} not valid for a {base_spec.dim}D preset")
                ls[ax] = length
            grid_ov["lengths"] = tuple(ls)
        if "opt.schedule" not in entries and ("opt.iterations" in entries or "opt.step" in entries):
            iterations = entries.get("opt.iterations", base.opt.total_iterations)
            step = entries.get("opt.step", base.opt.schedule[0][1])
            opt_ov["schedule"] = ((iterations, step),)
        scenario = build_preset(
            name,
            grid_overrides=grid_ov or None,
            params_overrides=params_ov or None,
            opt_overrides=opt_ov or None,
        )
    except UnknownPresetError as err:
        raise ConfigError(str(err)) from err
    except (GridError, ValueError) as err:
        raise ConfigError(f"invalid configuration for scenario {name!r}: {err}") from err

    snapshots = entries.get("run.snapshots", ())
    for t in snapshots:
        if not 0.0 <= t <= scenario.grid.t_final:
            raise ConfigError(
                f"run.snapshots entry {t} outside [0, {scenario.grid.t_final}]"
            )
    return scenario


# -- output ------------------------------------------------------------------


def _fmt(v) -> str:
    return repr(float(v))


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_history_csv(path: str, history: DescentHistory) -> None:
    lines = ["iter,J,mismatch,reg,error_norm,grad_norm,phys_excess,wall_ms"]
    for r in history:
        lines.append(
            f"{r.iteration},{_fmt(r.J)},{_fmt(r.mismatch)},{_fmt(r.regularization)},"
            f"{_fmt(r.error_norm)},{_fmt(r.grad_norm)},{_fmt(r.phys_excess)},{_fmt(r.wall_ms)}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def write_control_csv(path: str, u: np.ndarray, grid) -> None:
    coords = grid.boundary_coords()
    lines = ["k,t,edge,i,x1,x2,u"]
    for k in range(grid.nt):
        t = k * grid.dt
        for b in range(grid.boundary_count):
            x2 = _fmt(coords[b, 1]) if grid.dim == 2 else ""
            lines.append(
                f"{k},{_fmt(t)},{grid.boundary_edges[b]},{int(grid.boundary_along[b])},"
                f"{_fmt(coords[b, 0])},{x2},{_fmt(u[k, b])}"
            )
    _atomic_write(path, "\n".join(lines) + "\n")


def read_control_csv(path: str, grid) -> np.ndarray:
    """Re-import a control written by :func:`write_control_csv`."""
    u = np.full((grid.nt, grid.boundary_count), np.nan)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("k,"):
            raise ConfigError(f"{path}: not a control CSV")
        slot_of = {}
        for b in range(grid.boundary_count):
            slot_of[(grid.boundary_edges[b], int(grid.boundary_along[b]))] = b
        for line in fh:
            parts = line.rstrip("\n").split(",")
            k = int(parts[0])
            b = slot_of[(parts[2], int(parts[3]))]
            u[k, b] = float(parts[6])
    if np.isnan(u).any():
        raise ConfigError(f"{path}: incomplete control data")
    return u


def write_field_csv(path: str, y: np.ndarray, ytilde: np.ndarray, grid) -> None:
    lines = ["i,j,x1,x2,y,ytilde"]
    if grid.dim == 1:
        x = grid.axis(0)
        for i in range(grid.nx[0]):
            lines.append(f"{i},,{_fmt(x[i])},,{_fmt(y[i])},{_fmt(ytilde[i])}")
    else:
        x1 = grid.axis(0)
        x2 = grid.axis(1)
        for i in range(grid.nx[0]):
            for j in range(grid.nx[1]):
                lines.append(
                    f"{i},{j},{_fmt(x1[i])},{_fmt(x2[j])},{_fmt(y[i, j])},{_fmt(ytilde[i, j])}"
                )
    _atomic_write(path, "\n".join(lines) + "\n")


def write_interface_csv(path: str, rows: list, grid) -> None:
    if grid.dim == 1:
        lines = ["t,x"]
        for t, crossings in rows:
            for x in crossings:
                lines.append(f"{_fmt(t)},{_fmt(x)}")
    else:
        lines = ["t,segment_id,x1a,x2a,x1b,x2b"]
        for t, segments in rows:
            for sid, ((xa, ya), (xb, yb)) in enumerate(segments):
                lines.append(
                    f"{_fmt(t)},{sid},{_fmt(xa)},{_fmt(ya)},{_fmt(xb)},{_fmt(yb)}"
                )
    _atomic_write(path, "\n".join(lines) + "\n")


def _snapshot_levels(times, grid) -> list[tuple[float, int]]:
    out = []
    for t in times:
        k = int(round(t / grid.dt))
        out.append((t, min(max(k, 0), grid.nt - 1)))
    return out


# -- commands ----------------------------------------------------------------


def cmd_run(entries: dict) -> int:
    scenario = _build_scenario(entries)
    outdir = entries.get("run.outdir", "out")
    os.makedirs(outdir, exist_ok=True)
    grid = make_grid(scenario.grid)
    t_start = time.perf_counter()

    try:
        result = descend(scenario, scenario.params, grid, scenario.opt)
    except BlowUpError as err:
        print(f"error: {err}", file=sys.stderr)
        if getattr(err, "history", None) is not None and entries.get("run.write_history", True):
            write_history_csv(os.path.join(outdir, "history.csv"), err.history)
        return EXIT_BLOWUP

    u_opt = result.u_opt
    replay = solve_forward(scenario, u_opt, scenario.params, grid)
    final = replay.final
    wall_ms = (time.perf_counter() - t_start) * 1e3

    if entries.get("run.write_history", True):
        write_history_csv(os.path.join(outdir, "history.csv"), result.history)
    if entries.get("run.write_control", True):
        write_control_csv(os.path.join(outdir, "control.csv"), u_opt, grid)
    if entries.get("run.write_fields", True):
        write_field_csv(os.path.join(outdir, "final_state.csv"), final.y, final.ytilde, grid)
        for t, k in _snapshot_levels(entries.get("run.snapshots", ()), grid):
            write_field_csv(
                os.path.join(outdir, f"snapshot_t{t:g}.csv"),
                replay.y.frame(k),
                replay.ytilde.frame(k),
                grid,
            )
    if entries.get("run.write_interface", True):
        rows = [(grid.t_final, extract_interface(final.ytilde, grid))]
        for t, k in _snapshot_levels(entries.get("run.snapshots", ()), grid):
            rows.append((t, extract_interface(replay.ytilde.frame(k), grid)))
        write_interface_csv(os.path.join(outdir, "interface.csv"), rows, grid)

    rep = result.report
    summary = {
        "scenario": scenario.name,
        "J": rep.J,
        "mismatch": rep.mismatch,
        "regularization": rep.regularization,
        "error_norm": rep.error_norm,
        "realistic": rep.realistic,
        "phys_excess": rep.phys_excess,
        "realism_bound": REALISM_BOUND,
        "iterations": result.history.final.iteration,
        "wall_ms": wall_ms,
    }
    _atomic_write(os.path.join(outdir, "summary.json"), json.dumps(summary, indent=2) + "\n")
    print(
        f"{scenario.name}: J={rep.J:.8g} error_norm={rep.error_norm:.8g} "
        f"realistic={rep.realistic} ({result.history.final.iteration} iterations)"
    )
    return EXIT_OK


def cmd_gradcheck(entries: dict) -> int:
    scenario = _build_scenario(entries)
    grid = make_grid(scenario.grid)
    u = scenario.u0
    n_dirs = entries.get("gradcheck.directions", 5)
    tol = entries.get("gradcheck.tol", 1e-3)
    seed = entries.get("gradcheck.seed", 0)
    scale = max(1.0, float(np.max(np.abs(u))))
    h = entries.get("gradcheck.h", 1e-4 * scale)

    rng = np.random.default_rng(seed)
    directions = []
    for _ in range(n_dirs):
        d = rng.standard_normal(u.shape)
        directions.append(d / np.linalg.norm(d))

    try:
        report = fd_gradient_check(scenario, scenario.params, grid, u, directions, h)
    except BlowUpError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BLOWUP

    if report.truncation_flag:
        print(
            f"warning: h={h:g} is large relative to the control scale; "
            "the comparison may be truncation-dominated"
        )
    for idx, d in enumerate(report.directions):
        print(
            f"direction {idx}: adjoint={d.adjoint_value: .12e} fd={d.fd_value: .12e} "
            f"rel_error={d.rel_error:.3e}"
        )
    ok = report.max_rel_error <= tol
    print(f"max relative error {report.max_rel_error:.3e} ({'<=' if ok else '>'} tol {tol:g})")
    return EXIT_OK if ok else EXIT_GRADCHECK


def cmd_list() -> int:
    for name, description, gspec in preset_summary():
        nx = "x".join(str(n) for n in gspec.counts)
        print(f"{name:16s} {gspec.dim}D grid {nx:9s} nt={gspec.n_t:<8d} T={gspec.t_final:<6g} {description}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pfopt",
        description="Boundary-temperature control of phase-field solidification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="optimize a scenario and export CSV results")
    p_gc = sub.add_parser("gradcheck", help="verify the adjoint gradient against finite differences")
    for p in (p_run, p_gc):
        p.add_argument("--scenario", help="preset name (see 'pfopt list')")
        p.add_argument("--config", help="flat 'section.key = value' config file")
        p.add_argument(
            "--override",
            action="append",
            metavar="section.key=value",
            help="override one configuration entry (repeatable)",
        )
    p_run.add_argument("--outdir", help="output directory (default 'out')")
    p_run.add_argument("--snapshots", help="comma-separated snapshot times")
    sub.add_parser("list", help="list built-in scenarios")

    args = parser.parse_args(argv)
    try:
        if args.command == "list":
            return cmd_list()
        entries = _collect_entries(args)
        if args.command == "run":
            return cmd_run(entries)
        return cmd_gradcheck(entries)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
