"""
Command-line driver for the reproduction runs.

Run as ``python3 -m sudbell <command> [options]``.  Commands:

    check-algebra   generator, commutator and adjoint invariants over a range of d
    table1          optimal squeezing r_m and optimized values per d
    fig1            SU(2) against QFT-restricted optimum for cos(phi)|00> + sin(phi)|11>
    fig2            optimized Bell value of the folded two-mode squeezed vacuum
    optimize        one multistart optimization for a single state

Options may also come from a ``key=value`` file given by ``--config``;
flags on the command line win.  ``SUDBELL_WORKERS`` sets the worker count.

Exit codes: 0 success, 1 usage error, 2 invariant failure, 3 non-convergence
(``optimize`` always, sweeps only with ``--strict``).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import __version__
from .bell import CGLMP
from .correlation import BipartiteState
from .cv_map import INFINITE_SQUEEZING, tmsv_mapped_pure
from .optimizer import OptimizerSettings, RelaxationSettings, maximize_qft, multistart_maximize
from .sud_algebra import (
    adjoint_matrix_direct,
    adjoint_matrix_exp,
    build_generators,
    structure_constants,
    unitary_from_params,
)

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_NONCONVERGED = 0, 1, 2, 3
WORKERS_ENV = "SUDBELL_WORKERS"

DEFAULTS = {
    "d": None,
    "state": "maxent",
    "method": "cg",
    "restarts": 10,
    "seed": 0,
    "mode": "reduced",
    "out": None,
    "format": None,
    "max_steps": None,
    "tol": 1e-6,
    "phi_grid": "0.1:1.5:0.1",
    "tanh_grid": "0.05:0.95:0.05,inf",
    "r_grid": "0.2:3.0:0.2",
    "strict": False,
}
COMMAND_D = {"check-algebra": "2-5", "table1": "2-5", "fig1": "2", "fig2": "2-5", "optimize": "2"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunManifest:
    command: str
    parameters: Dict[str, object]
    version: str = __version__
    duration_s: float = 0.0

    def to_dict(self) -> dict:
        return {"command": self.command, "version": self.version,
                "duration_s": self.duration_s, "parameters": self.parameters}


@dataclass
class Table:
    columns: List[str]
    rows: List[list] = field(default_factory=list)
    sidecar: Optional[list] = None


# ---------------------------------------------------------------- parsing

def parse_int_list(text: str) -> List[int]:
    """``"3"``, ``"2,3,5"`` or ``"2-5"``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def parse_float_grid(text: str) -> List[float]:
    """Comma-separated values or ``start:stop:step`` ranges (stop included); ``inf`` allowed."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ":" in part:
            lo, hi, step = (float(v) for v in part.split(":"))
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            out.extend(round(lo + k * step, 12) for k in range(n))
        else:
            out.append(float(part))
    return out


def parse_state(descriptor: str, d: int) -> BipartiteState:
    """``maxent``, ``tmsv:r=<float|inf>`` or ``pure2:phi=<float>``."""
    name, _, rest = descriptor.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise UsageError(f"malformed state parameter {item!r}")
            params[key.strip()] = value.strip()
    try:
        if name == "maxent" and not params:
            return BipartiteState.maximally_entangled(d)
        if name == "tmsv" and set(params) == {"r"}:
            r = float(params["r"])
            return tmsv_mapped_pure(INFINITE_SQUEEZING if math.isinf(r) else r, d)
        if name == "pure2" and set(params) == {"phi"}:
            return pure2_state(float(params["phi"]), d)
    except ValueError as exc:
        raise UsageError(f"bad state descriptor {descriptor!r}: {exc}") from None
    raise UsageError(f"unknown state descriptor {descriptor!r}")


def pure2_state(phi: float, d: int = 2) -> BipartiteState:
    """``cos(phi)|00> + sin(phi)|11>`` embedded in ``d`` levels."""
    psi = np.zeros((d, d))
    psi[0, 0], psi[1, 1] = math.cos(phi), math.sin(phi)
    return BipartiteState(d, psi=psi)


def read_config(path: str) -> Dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key = key.strip().replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="python3 -m sudbell", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        # None means "not given" so config values can fill in
        p.add_argument("--config", help="key=value file; flags override it")
        p.add_argument("--d", help="dimension(s): 3, 2,3,5 or 2-5")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=["csv", "json"])

    def optim(p):
        p.add_argument("--method", choices=["sd", "cg", "relax"])
        p.add_argument("--restarts", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--mode", choices=["full", "reduced"])
        p.add_argument("--max-steps", dest="max_steps", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--strict", action="store_const", const=True,
                       help="exit 3 if any optimization fails to converge")

    common(sub.add_parser("check-algebra", help="check su(d) invariants"))
    p = sub.add_parser("table1", help="optimal squeezing per d")
    common(p), optim(p)
    p.add_argument("--r-grid", dest="r_grid", help="coarse squeezing grid, start:stop:step")
    p = sub.add_parser("fig1", help="two-qubit sweep over phi")
    common(p), optim(p)
    p.add_argument("--phi-grid", dest="phi_grid")
    p = sub.add_parser("fig2", help="sweep over tanh r")
    common(p), optim(p)
    p.add_argument("--tanh-grid", dest="tanh_grid", help="values in (0, 1); inf for the EPR limit")
    p = sub.add_parser("optimize", help="single optimization")
    common(p), optim(p)
    p.add_argument("--state", help="maxent | tmsv:r=<r> | pure2:phi=<phi>")
    return parser


def resolve(args: argparse.Namespace) -> Dict[str, object]:
    """Merge built-in defaults, the config file and explicit flags."""
    merged = dict(DEFAULTS)
    merged["d"] = COMMAND_D[args.command]
    if getattr(args, "config", None):
        merged.update(read_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    try:
        merged["d"] = parse_int_list(merged["d"])
        merged["restarts"] = int(merged["restarts"])
        merged["seed"] = int(merged["seed"])
        merged["tol"] = float(merged["tol"])
        if merged["max_steps"] is not None:
            merged["max_steps"] = int(merged["max_steps"])
        if isinstance(merged["strict"], str):
            merged["strict"] = merged["strict"].lower() in ("1", "true", "yes")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if any(d < 2 for d in merged["d"]):
        raise UsageError(f"dimensions must be >= 2, got {merged['d']}")
    if merged["method"] not in ("sd", "cg", "relax"):
        raise UsageError(f"unknown method {merged['method']!r}")
    if merged["mode"] not in ("full", "reduced"):
        raise UsageError(f"unknown mode {merged['mode']!r}")
    if merged["restarts"] < 1:
        raise UsageError("restarts must be at least 1")
    return merged


def workers_from_env() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def optimizer_settings(p: Dict[str, object]):
    if p["method"] == "relax":
        kw = {"tol": p["tol"]}
        if p["max_steps"]:
            kw["max_steps"] = p["max_steps"]
        return RelaxationSettings(**kw)
    kw = {"tol": p["tol"]}
    if p["max_steps"]:
        kw["max_steps"] = p["max_steps"]
    return OptimizerSettings(**kw)


def _optimize(state, p, starts=None):
    return multistart_maximize(state, CGLMP, p["method"], p["restarts"], p["seed"], p["mode"],
                               optimizer_settings(p), starts=starts)


def _map(fn, items, workers):
    """Ordered map, on a process pool when ``workers > 1``."""
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# ---------------------------------------------------------------- commands

def algebra_errors(d: int, samples: int = 100, seed: int = 0) -> Dict[str, tuple]:
    """``name -> (max error, tolerance)`` for the su(d) invariants."""
    g = build_generators(d)
    S = g.generators
    sc = structure_constants(g)
    f = sc.dense()
    errs = {}
    errs["traceless"] = (float(np.max(np.abs(np.trace(S, axis1=1, axis2=2)))), 1e-12)
    gram = np.einsum("iab,jba->ij", S, S)
    errs["orthogonality"] = (float(np.max(np.abs(gram - 2 * np.eye(g.n)))), 1e-12)
    comm = np.einsum("jab,kbc->jkac", S, S)
    comm = comm - comm.transpose(1, 0, 2, 3)
    errs["commutator"] = (float(np.max(np.abs(comm - 2j * np.einsum("jkl,lab->jkab", f, S)))), 1e-10)
    W = S[g.subset("W")]
    wc = np.einsum("jab,kbc->jkac", W, W)
    errs["w_commute"] = (float(np.max(np.abs(wc - wc.transpose(1, 0, 2, 3)), initial=0.0)), 0.0)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        p = rng.uniform(-np.pi, np.pi, g.n)
        Td = adjoint_matrix_direct(unitary_from_params(p, g), g)
        worst = max(worst, float(np.max(np.abs(Td - adjoint_matrix_exp(p, sc)))))
    errs["adjoint"] = (worst, 1e-8)
    return errs


def cmd_check_algebra(d_range: Sequence[int]):
    table = Table(["d", "check", "max_error", "tolerance", "status"])
    ok = True
    for d in d_range:
        for name, (err, tol) in algebra_errors(d).items():
            passed = err <= tol
            ok &= passed
            table.rows.append([d, name, err, tol, "pass" if passed else "FAIL"])
    return table, ok


def _b_of_r(args):
    d, r, p, start = args
    res = _optimize(tmsv_mapped_pure(r, d), p, starts=None if start is None else [start])
    return res.value, res.x, res.converged


def _table1_row(args):
    d, p, r_grid = args
    coarse = [_b_of_r((d, r, p, None)) for r in r_grid]
    values = [c[0] for c in coarse]
    k = int(np.argmax(values))
    converged = all(c[2] for c in coarse)
    if k in (0, len(r_grid) - 1):
        flag, r_m, b_m = "boundary", r_grid[k], values[k]
    else:
        # warm-started local optimizations are cheap; bracket the refinement
        warm = coarse[k][1]
        light = dict(p, restarts=1)
        cache = {}

        def neg(r):
            if r not in cache:
                cache[r] = _b_of_r((d, r, light, warm))
            return -cache[r][0]

        sol = minimize_scalar(neg, bounds=(r_grid[k - 1], r_grid[k + 1]), method="bounded",
                              options={"xatol": 1e-3})
        flag, r_m, b_m = "interior", float(sol.x), -float(sol.fun)
        if b_m < values[k]:
            r_m, b_m = r_grid[k], values[k]
        converged &= all(c[2] for c in cache.values())
    inf = _optimize(BipartiteState.maximally_entangled(d), p)
    qft = maximize_qft(BipartiteState.maximally_entangled(d))
    return [d, r_m, b_m, inf.value, qft.value, flag, converged and inf.converged]


def cmd_table1(d_list: Sequence[int], p: Dict[str, object], r_grid: Sequence[float], workers: int = 1):
    if not set(d_list) <= {2, 3, 4, 5}:
        raise UsageError(f"table1 supports d in 2..5, got {list(d_list)}")
    table = Table(["d", "r_m", "B_d_r_m", "B_d_inf", "B_qft_inf", "flag", "converged"])
    table.rows = _map(_table1_row, [(d, p, list(r_grid)) for d in d_list], workers)
    return table


def _fig1_row(args):
    phi, p = args
    state = pure2_state(phi)
    su2 = _optimize(state, p)
    qft = maximize_qft(state)
    return [phi, math.sqrt(2) * math.sin(phi), su2.value, qft.value, su2.converged]


def cmd_fig1(phi_grid: Sequence[float], p: Dict[str, object], workers: int = 1):
    if any(not 0 <= phi <= math.pi / 2 for phi in phi_grid):
        raise UsageError("phi grid must lie in [0, pi/2]")
    table = Table(["phi", "epsilon", "B_su2", "B_qft", "converged"])
    table.rows = _map(_fig1_row, [(phi, p) for phi in phi_grid], workers)
    return table


def _fig2_row(args):
    d, t, p = args
    r = INFINITE_SQUEEZING if math.isinf(t) else math.atanh(t)
    res = _optimize(tmsv_mapped_pure(r, d), p)
    tanh_r = 1.0 if math.isinf(t) else t
    return [d, tanh_r, r, res.value, res.converged], res.config.to_dict()


def cmd_fig2(d_list: Sequence[int], tanh_grid: Sequence[float], p: Dict[str, object], workers: int = 1):
    for t in tanh_grid:
        if not (math.isinf(t) and t > 0) and not 0 < t < 1:
            raise UsageError(f"tanh r must lie in (0, 1) or be inf, got {t}")
    table = Table(["d", "tanh_r", "r", "B_d", "converged"], sidecar=[])
    out = _map(_fig2_row, [(d, t, p) for d in d_list for t in tanh_grid], workers)
    for row, config in out:
        table.rows.append(row)
        table.sidecar.append({"d": row[0], "tanh_r": row[1], "config": config})
    return table


def cmd_optimize(descriptor: str, d: int, p: Dict[str, object]):
    state = parse_state(descriptor, d)
    return _optimize(state, p)


# ---------------------------------------------------------------- output

def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render_csv(table: Table, manifest: RunManifest) -> str:
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(manifest.to_dict(), default=_jsonable) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render_json(payload: dict, manifest: RunManifest) -> str:
    return json.dumps({"manifest": manifest.to_dict(), **payload}, indent=2, default=_jsonable) + "\n"


def table_payload(table: Table) -> dict:
    rows = [dict(zip(table.columns, (_jsonable(v) for v in row))) for row in table.rows]
    out = {"columns": table.columns, "rows": rows}
    if table.sidecar is not None:
        out["configs"] = table.sidecar
    return out


def read_csv(text: str):
    """Split CSV output into ``(manifest dict, header, rows)``."""
    lines = text.splitlines()
    meta = next(line for line in lines if line.startswith("# manifest: "))
    rows = list(csv.reader(line for line in lines if not line.startswith("#")))
    return json.loads(meta[len("# manifest: "):]), rows[0], rows[1:]


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _sidecar_path(out: str) -> str:
    root, _ = os.path.splitext(out)
    return root + ".configs.json"


# ---------------------------------------------------------------- entry

def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    p = resolve(args)
    workers = workers_from_env()
    cmd = args.command
    fmt = p["format"] or ("json" if cmd == "optimize" else "csv")
    params = {k: p[k] for k in ("d", "method", "restarts", "seed", "mode", "tol", "max_steps")}
    status = EXIT_OK
    t0 = time.perf_counter()

    if cmd == "optimize":
        if len(p["d"]) != 1:
            raise UsageError("optimize takes a single --d")
        params["state"] = p["state"]
        result = cmd_optimize(p["state"], p["d"][0], p)
        manifest = RunManifest(cmd, params, duration_s=time.perf_counter() - t0)
        if fmt == "json":
            text = render_json({"result": result.to_dict()}, manifest)
        else:
            text = render_csv(Table(["value", "converged"], [[result.value, result.converged]]), manifest)
        _emit(text, p["out"])
        return EXIT_OK if result.converged else EXIT_NONCONVERGED

    if cmd == "check-algebra":
        params = {"d": p["d"]}
        table, ok = cmd_check_algebra(p["d"])
        status = EXIT_OK if ok else EXIT_INVARIANT
        for row in table.rows:
            if row[-1] == "FAIL":
                print(f"invariant failed: d={row[0]} {row[1]} error {row[2]:.3g} > {row[3]:.3g}",
                      file=sys.stderr)
    elif cmd == "table1":
        params["r_grid"] = parse_float_grid(p["r_grid"])
        table = cmd_table1(p["d"], p, params["r_grid"], workers)
    elif cmd == "fig1":
        params["phi_grid"] = parse_float_grid(p["phi_grid"])
        table = cmd_fig1(params["phi_grid"], p, workers)
    else:
        params["tanh_grid"] = parse_float_grid(p["tanh_grid"])
        table = cmd_fig2(p["d"], params["tanh_grid"], p, workers)

    if cmd != "check-algebra" and p["strict"] and not all(row[-1] for row in table.rows):
        status = EXIT_NONCONVERGED
    manifest = RunManifest(cmd, params, duration_s=time.perf_counter() - t0)
    if fmt == "json":
        _emit(render_json(table_payload(table), manifest), p["out"])
    else:
        _emit(render_csv(table, manifest), p["out"])
        if table.sidecar is not None and p["out"]:
            with open(_sidecar_path(p["out"]), "w") as fh:
                fh.write(render_json({"configs": table.sidecar}, manifest))
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        return run(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
