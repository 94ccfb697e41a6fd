"""Command line front end.

Subcommands: ``list``, ``run``, ``convergence`` and ``wb-check``.  Every
failure ends with a single ``afswe: error: ...`` line on stderr and a
nonzero exit code (2 for usage errors, 1 for failed runs, 3 for I/O).
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import load_config, section
from .core import N_GHOST
from .driver import convergence_order, l1_error, run, step
from .scenarios import builtin_scenarios, get_scenario
from .snapshot import emit_snapshot

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
DIAG_ENV = "AF_SWE_SEED_DIAG"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="afswe", description="Active Flux shallow water solver")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    sub.add_parser("list", help="print the scenario catalog")

    def common(sp):
        sp.add_argument("--scenario")
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="scenario parameter, repeatable")

    r = sub.add_parser("run", help="run a scenario and write snapshot CSVs")
    common(r)
    r.add_argument("--cells", type=int)
    r.add_argument("--cfl", type=float)
    r.add_argument("--t-end", type=float)
    r.add_argument("--out")
    r.add_argument("--outputs", action="store_true",
                   help="also write a snapshot at each of the scenario's output times")

    c = sub.add_parser("convergence", help="error and order table over a grid sequence")
    common(c)
    c.add_argument("--grids", help="comma separated cell counts; the last one is the reference")
    c.add_argument("--exact", action="store_true",
                   help="measure against the scenario's exact solution instead")
    c.add_argument("--out")

    w = sub.add_parser("wb-check", help="run a lake at rest and print the largest deviations")
    common(w)
    w.add_argument("--steps", type=int)
    w.add_argument("--tol", type=float, help="fail if a deviation exceeds this")
    return p


def _settings(args) -> tuple[dict, dict]:
    """Merged (settings, params) from the config file and the flags."""
    cfg = load_config(args.config) if args.config else {}
    params = section(cfg, "params")
    for item in args.param:
        if "=" not in item:
            raise UsageError(f"--param expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    settings = {"scenario": cfg.get("scenario")}
    settings.update(section(cfg, "run"))
    settings.update({f"convergence.{k}": v for k, v in section(cfg, "convergence").items()})
    settings.update({f"wb_check.{k}": v for k, v in section(cfg, "wb_check").items()})
    if args.scenario:
        settings["scenario"] = args.scenario
    if not settings.get("scenario"):
        raise UsageError("no scenario given (use --scenario or 'scenario =' in the config)")
    return settings, params


def _number(settings, key, flag, kind):
    if flag is not None:
        return flag
    if key not in settings:
        return None
    try:
        return kind(settings[key])
    except ValueError:
        raise UsageError(f"{key} = {settings[key]!r} is not a valid {kind.__name__}") from None


def _scenario(settings, params, cells=None, cfl=None, t_end=None):
    try:
        cfg = get_scenario(settings["scenario"], params)
    except KeyError as e:
        raise UsageError(e.args[0]) from None
    changes = {}
    if cells is not None:
        changes["n_cells"] = cells
    if cfl is not None:
        changes["cfl"] = cfl
    if t_end is not None:
        changes["t_end"] = t_end
    if changes:
        cfg = replace(cfg, **changes)
    return cfg


# ---------------------------------------------------------------------------
# subcommands


def cmd_list(args) -> int:
    for name, build in builtin_scenarios().items():
        try:
            desc = build({}).description
        except ValueError:
            desc = "needs user-supplied parameters"
        print(f"{name:20s} {desc}")
    return EXIT_OK


def cmd_run(args) -> int:
    settings, params = _settings(args)
    cfg = _scenario(settings, params, _number(settings, "cells", args.cells, int),
                    _number(settings, "cfl", args.cfl, float),
                    _number(settings, "t_end", args.t_end, float))
    out = args.out or settings.get("out")
    if not out:
        raise UsageError("no output path given (use --out or 'run.out =' in the config)")
    grid, bottom, constants, s0 = cfg.setup()
    stem = Path(out)
    stem = stem.with_suffix("") if stem.suffix == ".csv" else stem

    diag_rows = []
    on_step = None
    if os.environ.get(DIAG_ENV) == "1":
        on_step = lambda state, report: diag_rows.append(report.as_row())

    def write_output(state):
        emit_snapshot(state, bottom, stem.parent / f"{stem.name}_t{state.t:g}", constants)

    on_output = write_output if args.outputs else None

    t0 = time.perf_counter()
    final = run(s0, bottom, constants, cfg.t_end, boundary_state=s0,
                output_times=cfg.output_times if args.outputs else (),
                on_output=on_output, on_step=on_step)
    elapsed = time.perf_counter() - t0
    p_pts, p_avg = emit_snapshot(final, bottom, stem, constants)
    if diag_rows:
        diag = stem.parent / f"{stem.name}_steps.csv"
        _write_rows(diag, diag_rows)
        print(f"step diagnostics: {diag}")
    print(f"{cfg.name}: {grid.n_cells} cells, t = {final.t:g}, {elapsed:.2f} s")
    print(f"wrote {p_pts} and {p_avg}")
    return EXIT_OK


def _write_rows(path: Path, rows: list[dict]):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: format(v, ".17g") if isinstance(v, float) else v
                            for k, v in row.items()})
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e


def convergence_table(cfg, grids: list[int], exact: bool = False) -> list[dict]:
    """Rows of (cells, err_h, err_m, order_h, order_m).

    Without ``exact`` the last grid is the reference and gets no row.
    """
    if exact and cfg.exact is None:
        raise UsageError(f"scenario {cfg.name} has no exact solution")
    finals = {}
    for n in grids:
        grid, bottom, constants, s0 = cfg.with_cells(n).setup()
        finals[n] = (grid, run(s0, bottom, constants, cfg.t_end, boundary_state=s0))
    measured = grids if exact else grids[:-1]
    rows, prev = [], None
    for n in measured:
        grid, s = finals[n]
        ref = (lambda x, t=s.t: cfg.exact(t, x)) if exact else finals[grids[-1]][1]
        eh, em = l1_error(s, ref, grid)
        row = {"cells": n, "err_h": eh, "err_m": em, "order_h": float("nan"), "order_m": float("nan")}
        if prev is not None and prev[0] > 0 and eh > 0 and em > 0:
            ratio = n / prev[2]
            row["order_h"] = convergence_order(prev[0], eh, ratio)
            row["order_m"] = convergence_order(prev[1], em, ratio)
        rows.append(row)
        prev = (eh, em, n)
    return rows


def cmd_convergence(args) -> int:
    settings, params = _settings(args)
    text = args.grids or settings.get("convergence.grids")
    if not text:
        raise UsageError("no grid list given (use --grids or 'convergence.grids =')")
    try:
        grids = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--grids expects comma separated integers, got {text!r}") from None
    if len(grids) < (1 if args.exact else 2):
        raise UsageError("need at least one grid and a reference")
    cfg = _scenario(settings, params)
    rows = convergence_table(cfg, grids, args.exact)
    print(f"{'cells':>8} {'err_h':>14} {'err_m':>14} {'order_h':>8} {'order_m':>8}")
    for r in rows:
        print(f"{r['cells']:8d} {r['err_h']:14.6e} {r['err_m']:14.6e} {r['order_h']:8.2f} {r['order_m']:8.2f}")
    out = args.out or settings.get("out")
    if out:
        _write_rows(Path(out), rows)
        print(f"wrote {out}")
    return EXIT_OK


def wb_deviation(cfg, steps: int) -> dict:
    """Largest drift of a lake at rest over ``steps`` steps."""
    grid, bottom, constants, s0 = cfg.setup()
    s = s0
    for _ in range(steps):
        s, _ = step(s, bottom, constants, None, s0)
    b = bottom.b_iface[N_GHOST:N_GHOST + grid.n_cells + 1]
    wet = s.h_pts > 0.0
    lvl0 = s0.h_pts + b
    return {
        "steps": steps, "t": s.t,
        "level": float(np.max(np.abs((s.h_pts + b) - lvl0)[wet], initial=0.0)),
        "m_points": float(np.max(np.abs(s.m_pts))),
        "h_avg": float(np.max(np.abs(s.h_avg - s0.h_avg))),
        "m_avg": float(np.max(np.abs(s.m_avg))),
    }


def cmd_wb_check(args) -> int:
    settings, params = _settings(args)
    steps = _number(settings, "wb_check.steps", args.steps, int)
    if steps is None or steps < 1:
        raise UsageError("--steps must be a positive integer")
    cfg = _scenario(settings, params)
    d = wb_deviation(cfg, steps)
    print(f"{cfg.name}: {d['steps']} steps to t = {d['t']:.6g}")
    print(f"max |h + b - level| (wet points) = {d['level']:.3e}")
    print(f"max |m| (points)                 = {d['m_points']:.3e}")
    print(f"max |h_avg - h_avg(0)|           = {d['h_avg']:.3e}")
    print(f"max |m_avg|                      = {d['m_avg']:.3e}")
    if args.tol is not None and max(d["level"], d["m_points"], d["h_avg"], d["m_avg"]) > args.tol:
        print(f"afswe: error: deviation above {args.tol:g}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


COMMANDS = {"list": cmd_list, "run": cmd_run, "convergence": cmd_convergence, "wb-check": cmd_wb_check}


def run_cli(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand (one of: " + ", ".join(COMMANDS) + ")")
        return COMMANDS[args.command](args)
    except UsageError as e:
        code, msg = EXIT_USAGE, str(e)
    except OSError as e:
        code, msg = EXIT_IO, str(e)
    except (ValueError, RuntimeError, FloatingPointError) as e:
        code, msg = EXIT_FAIL, str(e)
    print(f"afswe: error: {msg.splitlines()[0] if msg else 'failed'}", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
