"""Command-line workbench: ``abconslaw <command> [--config run.json] [overrides]``.

Every command writes its artifacts plus ``manifest.json`` into the output
directory (``--out``, else ``$ABCONSLAW_OUT``, else ``./abconslaw_out``).

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 non-member verdict, 5 inconclusive verdict.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .backward import backward_solve, influence_window, reconstruct
from .catalogue import (CASE_NAMES, CatalogueError, blend_margin, get_case, omega3_case, section61_table,
                        shock_curve, shock_curve_ode)
from .characteristics import CharacteristicError, Tracer, c0_to_csv, characteristics_json
from .flux import Connection, FluxError, FluxPair, make_connection
from .forward import GridSpec, SolverError, evolve_forward, interface_traces, snapshots_to_csv, trace_admissibility
from .initial_set import EXACT_TOL, convexity_probe, membership_test, tolerance_budget, v0_generator
from .profile import PiecewiseProfile, ProfileError, l1_distance

log = logging.getLogger("abconslaw")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NON_MEMBER, EXIT_INCONCLUSIVE = 0, 2, 3, 4, 5
COMMANDS = ("forward", "backward", "reconstruct", "characteristics", "membership",
            "convexity-probe", "nonconvex-demo", "examples")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated run configuration; unknown keys are rejected."""

    flux: dict | None = None          # FluxPair.to_dict() layout; Burgers on both sides if None
    A: float | None = None            # left connection value; 4*L0 if None
    L0: float = -1.0                  # catalogue parameters
    p: float = -16.0
    T: float = 1.0
    grid: dict = field(default_factory=lambda: {"x_min": -10.0, "x_max": 24.0, "n_cells": 4000})
    omega: str | None = None          # profile file (.json/.csv) or "case:<name>"
    u0: str | None = None
    u0_b: str | None = None           # second datum for convexity-probe
    options: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self):
        if not (isinstance(self.T, (int, float)) and self.T > 0):
            raise ConfigError(f"T must be a positive number, got {self.T!r}")
        if not isinstance(self.grid, dict):
            raise ConfigError("grid must be an object")
        bad = set(self.grid) - {"x_min", "x_max", "n_cells", "cfl", "record_every"}
        if bad:
            raise ConfigError(f"unknown grid keys: {', '.join(sorted(bad))}")
        if not isinstance(self.options, dict):
            raise ConfigError("options must be an object")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        try:
            self.grid_spec()
        except (SolverError, TypeError, KeyError) as e:
            raise ConfigError(f"bad grid: {e}") from e

    def grid_spec(self) -> GridSpec:
        g = dict(self.grid)
        return GridSpec(float(g.pop("x_min")), float(g.pop("x_max")), int(g.pop("n_cells")), **g)

    def connection(self) -> Connection:
        pair = FluxPair.from_dict(self.flux) if self.flux else FluxPair.burgers()
        A = 4.0 * self.L0 if self.A is None else self.A
        return make_connection(pair, float(A))


def load_profile(ref: str, role: str, cfg: RunConfig) -> PiecewiseProfile:
    """Profile from a JSON/CSV file or a catalogue entry ``case:<name>``.

    For a catalogue entry the ``omega`` role yields its target profile and
    any other role its initial datum.
    """
    if ref.startswith("case:"):
        c = get_case(ref[5:], cfg.L0, cfg.p)
        return c.omega if role == "omega" else c.u0
    path = Path(ref)
    if not path.exists():
        raise ConfigError(f"{role} profile file not found: {ref}")
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return PiecewiseProfile.from_csv(text)
    return PiecewiseProfile.from_json(text)


def _require(cfg: RunConfig, name: str) -> PiecewiseProfile:
    ref = getattr(cfg, name)
    if ref is None:
        raise ConfigError(f"--{name.replace('_', '-')} (or config key '{name}') is required")
    return load_profile(ref, name, cfg)


def _check_options(cfg: RunConfig, allowed: set):
    bad = set(cfg.options) - allowed
    if bad:
        raise ConfigError(f"unknown options for this command: {', '.join(sorted(bad))}")


def _write(out: Path, name: str, text: str, written: list):
    (out / name).write_text(text)
    written.append(name)


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _exact_solution(cfg: RunConfig):
    """Closed-form (u0*, solution) when omega is a catalogue target and exact mode is requested."""
    if not cfg.options.get("exact", False):
        return None, None
    if not (cfg.omega or "").startswith("case:"):
        raise ConfigError("option 'exact' needs omega given as case:<name>")
    c = get_case(cfg.omega[5:], cfg.L0, cfg.p)
    if c.solution is None:
        raise ConfigError(f"no closed-form solution for {cfg.omega}")
    return c.u0, c.solution


# -- commands -----------------------------------------------------------------

def cmd_forward(cfg, out, written, jobs):
    _check_options(cfg, {"final_only"})
    conn, grid, u0 = cfg.connection(), cfg.grid_spec(), _require(cfg, "u0")
    sol = evolve_forward(conn, u0, cfg.T, grid)
    _write(out, "snapshots.csv", snapshots_to_csv(sol, bool(cfg.options.get("final_only", False))), written)
    _write(out, "traces.csv", interface_traces(sol).to_csv(), written)
    _write(out, "final.csv", sol.omega.simplify().to_csv(), written)
    return {"dt": sol.dt, "boundary_drift": sol.boundary_drift, "mass_final": sol.mass(),
            "traces": trace_admissibility(sol)}, EXIT_OK


def cmd_backward(cfg, out, written, jobs):
    _check_options(cfg, set())
    conn, grid, omega = cfg.connection(), cfg.grid_spec(), _require(cfg, "omega")
    t0 = time.perf_counter()
    sol = backward_solve(conn, omega, cfg.T, grid)
    u0s = sol.omega.reflect().simplify()
    _write(out, "u0_star.csv", u0s.to_csv(), written)
    rep = {"grid": grid.to_dict(), "runtime": time.perf_counter() - t0,
           "window": list(influence_window(conn, omega, cfg.T, grid))}
    _write(out, "report.json", _json(rep), written)
    return rep, EXIT_OK


def cmd_reconstruct(cfg, out, written, jobs):
    _check_options(cfg, set())
    conn, grid, omega = cfg.connection(), cfg.grid_spec(), _require(cfg, "omega")
    run = reconstruct(conn, omega, cfg.T, grid)
    _write(out, "u0_star.csv", run.u0_star.simplify().to_csv(), written)
    _write(out, "omega_reconstructed.csv", run.omega_rec.simplify().to_csv(), written)
    rep = run.to_dict()
    _write(out, "report.json", _json(rep), written)
    return rep, EXIT_OK


def _solution_for(cfg, conn, omega, grid):
    u0s, sol = _exact_solution(cfg)
    if sol is None:
        run = reconstruct(conn, omega, cfg.T, grid)
        u0s, sol = run.u0_star, run.solution
    return u0s, sol


def cmd_characteristics(cfg, out, written, jobs):
    _check_options(cfg, {"x", "exact"})
    xs = cfg.options.get("x")
    if not xs:
        raise ConfigError("characteristics needs a list of arrival points (--x)")
    conn, grid, omega = cfg.connection(), cfg.grid_spec(), _require(cfg, "omega")
    _, sol = _solution_for(cfg, conn, omega, grid)
    tr = Tracer(sol)
    sets = [tr.c0(float(x)) for x in xs]
    chars = {repr(float(x)): [tr.extremal(float(x), "min"), tr.extremal(float(x), "max")] for x in xs}
    _write(out, "c0.csv", c0_to_csv(sets), written)
    _write(out, "characteristics.json", characteristics_json(chars) + "\n", written)
    return {"c0": [c.to_dict() for c in sets], "flux_tol": tr.flux_tol}, EXIT_OK


def _verdict_code(verdict: str) -> int:
    return {"member": EXIT_OK, "non_member": EXIT_NON_MEMBER}.get(verdict, EXIT_INCONCLUSIVE)


def cmd_membership(cfg, out, written, jobs):
    _check_options(cfg, {"exact", "tol"})
    conn, grid = cfg.connection(), cfg.grid_spec()
    omega, u0 = _require(cfg, "omega"), _require(cfg, "u0")
    u0s, sol = _solution_for(cfg, conn, omega, grid)
    rep = membership_test(conn, omega, u0, cfg.T, grid, u0_star=u0s, solution=sol,
                          tol=cfg.options.get("tol"))
    d = rep.to_dict()
    _write(out, "membership.json", _json(d), written)
    return d, _verdict_code(rep.verdict)


def _map(fn, items, jobs):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def cmd_convexity_probe(cfg, out, written, jobs):
    _check_options(cfg, {"lambdas", "amplitude", "interval"})
    conn, grid = cfg.connection(), cfg.grid_spec()
    lambdas = [float(v) for v in cfg.options.get("lambdas", [0.5])]
    if cfg.omega is None:
        cfg.omega = "case:omega2"
    omega = _require(cfg, "omega")
    run = reconstruct(conn, omega, cfg.T, grid)
    if cfg.u0 is None or cfg.u0_b is None:
        # seeded cone perturbations of the vertex
        iv = tuple(cfg.options.get("interval", (0.9 * cfg.L0, -2.9 * cfg.L0)))
        amp = float(cfg.options.get("amplitude", 1.0))
        ua = (run.u0_star + v0_generator(iv, cfg.seed, amp)).simplify()
        ub = (run.u0_star + v0_generator(iv, cfg.seed + 1, amp)).simplify()
    else:
        ua, ub = _require(cfg, "u0"), _require(cfg, "u0_b")
    res = convexity_probe(conn, omega, ua, ub, lambdas, cfg.T, grid,
                          u0_star=run.u0_star, solution=run.solution)
    d = {"endpoints": res["endpoints"], "rows": [r._asdict() for r in res["rows"]],
         "refined_gap": res["refined_gap"]}
    _write(out, "probe.json", _json(d), written)
    return d, EXIT_OK


def nonconvex_demo(L0: float, p: float, grid: GridSpec, lam: float = 0.5, jobs: int = 1) -> dict:
    """Forward and membership results for the vertex, the two members and their blend."""
    c = omega3_case(L0, p)
    conn, omega, T = c.conn, c.omega, c.T
    run = reconstruct(conn, omega, T, grid)
    tr = Tracer(run.solution)
    window = influence_window(conn, omega, T, grid)
    u01, u02 = c.extras["u01"], c.extras["u02"]
    data = {"u0_star": c.u0, "u01": u01, "u02": u02,
            "blend": (u01 * lam + u02 * (1.0 - lam)).simplify()}

    def one(name):
        u = data[name]
        sol = evolve_forward(conn, u, T, grid)
        rep = membership_test(conn, omega, u, T, grid, u0_star=run.u0_star, solution=run.solution,
                              tracer=tr, window=window)
        return name, {"l1_to_omega": l1_distance(sol.omega, omega, *window),
                      "verdict": rep.verdict, "worst_margin": rep.worst_margin,
                      "tolerance_budget": rep.tolerance_budget,
                      "witness": rep.witnesses[0]._asdict() if rep.witnesses else None}

    results = dict(_map(one, list(data), jobs))
    return {"window": list(window), "reconstruct_residual": run.residual,
            "backward_l1_to_closed_form": l1_distance(run.u0_star, c.u0, *window),
            "results": results, "lambda": lam,
            "analytic_margin_case3": blend_margin(L0, lam, -3.0 * L0)}


def cmd_nonconvex_demo(cfg, out, written, jobs):
    _check_options(cfg, {"lambda"})
    grid = cfg.grid_spec()
    d = nonconvex_demo(cfg.L0, cfg.p, grid, float(cfg.options.get("lambda", 0.5)), jobs)
    rows = section61_table(cfg.L0, cfg.p, float(cfg.options.get("lambda", 0.5)))
    lines = ["y_bar,int_u0_star,int_u01,int_u02,blend_margin,check_error"]
    lines += [",".join(repr(float(v)) for v in r) for r in rows]
    _write(out, "case_integrals.csv", "\n".join(lines) + "\n", written)
    _write(out, "demo.json", _json(d), written)
    return d, EXIT_OK


def cmd_examples(cfg, out, written, jobs):
    _check_options(cfg, {"name", "emit_csv", "nx", "nt"})
    name = cfg.options.get("name", "omega3")
    c = get_case(name, cfg.L0, cfg.p)
    info = {"name": c.name, "L0": c.L0, "p": c.p, "T": c.T, "A": c.conn.A, "B": c.conn.B,
            "A_bar": c.conn.A_bar, "B_bar": c.conn.B_bar, "gamma": c.conn.gamma,
            "sigma": c.sigma, "v": c.v, "omega": c.omega.to_dict(), "u0": c.u0.to_dict()}
    if cfg.options.get("emit_csv", False):
        _write(out, f"{name}_omega.csv", c.omega.to_csv(), written)
        _write(out, f"{name}_u0.csv", c.u0.to_csv(), written)
        for k, v in sorted(c.extras.items()):
            _write(out, f"{name}_{k}.csv", v.to_csv(), written)
        ts = np.linspace(c.sigma, c.T, int(cfg.options.get("nt", 101)))
        g = shock_curve(ts, c.L0, c.conn.A)
        go = shock_curve_ode(ts, c.L0, c.conn.A)
        lines = ["t,gamma,gamma_ode"] + [f"{t!r},{a!r},{b!r}" for t, a, b in
                                         zip(ts.tolist(), np.asarray(g).tolist(), np.asarray(go).tolist())]
        _write(out, f"{name}_shock.csv", "\n".join(lines) + "\n", written)
        if c.solution is not None:
            lo, hi = c.omega.support_hull()
            xs = np.linspace(lo - 6.0, hi + 6.0, int(cfg.options.get("nx", 401)))
            rows = ["t,x,u"]
            for t in np.linspace(0.0, c.T, 11).tolist():
                vals = c.solution.value(xs, np.full_like(xs, t))
                rows += [f"{t!r},{x!r},{float(u)!r}" for x, u in zip(xs.tolist(), vals)]
            _write(out, f"{name}_solution.csv", "\n".join(rows) + "\n", written)
        if c.p is not None:
            rows = section61_table(c.L0, c.p)
            lines = ["y_bar,int_u0_star,int_u01,int_u02,blend_margin,check_error"]
            lines += [",".join(repr(float(v)) for v in r) for r in rows]
            _write(out, f"{name}_case_integrals.csv", "\n".join(lines) + "\n", written)
    _write(out, f"{name}.json", _json(info), written)
    return {k: v for k, v in info.items() if k not in ("omega", "u0")}, EXIT_OK


HANDLERS = {
    "forward": cmd_forward, "backward": cmd_backward, "reconstruct": cmd_reconstruct,
    "characteristics": cmd_characteristics, "membership": cmd_membership,
    "convexity-probe": cmd_convexity_probe, "nonconvex-demo": cmd_nonconvex_demo,
    "examples": cmd_examples,
}


# -- argument handling --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="abconslaw", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"abconslaw {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--jobs", type=int, default=1, help="threads for independent sweep entries")
        sp.add_argument("--T", type=float)
        sp.add_argument("--n-cells", type=int)
        sp.add_argument("--x-min", type=float)
        sp.add_argument("--x-max", type=float)
        sp.add_argument("--L0", type=float)
        sp.add_argument("--p", type=float)
        sp.add_argument("-v", "--verbose", action="store_true")
        if name in ("forward", "membership", "convexity-probe"):
            sp.add_argument("--u0", help="initial datum: .json/.csv file or case:<name>")
        if name in ("backward", "reconstruct", "characteristics", "membership", "convexity-probe"):
            sp.add_argument("--omega", help="target profile: .json/.csv file or case:<name>")
        if name == "convexity-probe":
            sp.add_argument("--u0-b", help="second member datum")
            sp.add_argument("--lambdas", type=float, nargs="+")
        if name in ("characteristics", "membership"):
            sp.add_argument("--exact", action="store_true", help="use the closed-form solution of a catalogue target")
        if name == "characteristics":
            sp.add_argument("--x", type=float, nargs="+", help="arrival points")
        if name == "forward":
            sp.add_argument("--final-only", action="store_true")
        if name == "examples":
            sp.add_argument("--name", choices=CASE_NAMES)
            sp.add_argument("--emit-csv", action="store_true")
    return ap


def make_config(args) -> RunConfig:
    d = {}
    if args.config:
        try:
            d = json.loads(Path(args.config).read_text())
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {args.config}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
    cfg = RunConfig.from_dict(d)
    for key in ("T", "L0", "p", "seed", "out", "omega", "u0", "u0_b"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    for key in ("n_cells", "x_min", "x_max"):
        v = getattr(args, key, None)
        if v is not None:
            cfg.grid[key] = v
    opts = {"exact": "exact", "x": "x", "final_only": "final_only", "lambdas": "lambdas",
            "name": "name", "emit_csv": "emit_csv"}
    for attr, key in opts.items():
        v = getattr(args, attr, None)
        if v not in (None, False):
            cfg.options[key] = v
    cfg.validate()
    return cfg


def _manifest(command, cfg, result, wall, written, code):
    grid = cfg.grid_spec()
    h = grid.dx
    conn = cfg.connection()
    return {
        "schema": 1,
        "command": command,
        "exit_code": code,
        "versions": {"abconslaw": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "grid": grid.to_dict(),
        "tolerances": {"flux": 5.0 * conn.lip * h, "membership": tolerance_budget(h, 1),
                       "membership_exact": EXACT_TOL},
        "config": asdict(cfg),
        "seed": cfg.seed,
        "wall_time": wall,
        "outputs": written,
        "result": result,
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
        out = Path(cfg.out or os.environ.get("ABCONSLAW_OUT") or "abconslaw_out")
        out.mkdir(parents=True, exist_ok=True)
        np.random.seed(cfg.seed)
        written: list = []
        t0 = time.perf_counter()
        result, code = HANDLERS[args.command](cfg, out, written, max(1, args.jobs))
        wall = time.perf_counter() - t0
        (out / "manifest.json").write_text(_json(_manifest(args.command, cfg, result, wall, written, code)))
    except (ConfigError, FluxError, ProfileError, CatalogueError, OSError) as e:
        print(f"abconslaw: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, CharacteristicError, FloatingPointError, OverflowError) as e:
        print(f"abconslaw: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "membership":
        print(f"verdict: {result['verdict']} (worst margin {result['worst_margin']:.4g}, "
              f"tolerance {result['tolerance_budget']:.4g})")
    print(f"wrote {len(written) + 1} files to {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
