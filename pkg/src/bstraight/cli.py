"""Command line entry point: ``bstraight {verify,jscan,straighten,barycenter,simvol}``.

Exit codes: 0 success, 1 violations, 2 solver failure, 3 expression error,
64 invalid configuration, 65 malformed simplex file.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import simvol
from .barycenter import SolverError, SolverSettings
from .boundary import build_grid
from .jacobian import jscan
from .models import MODELS, get_model
from .straightening import VertexTuple, straighten
from .suites import PROPERTIES, run_property

log = logging.getLogger("bstraight")

EXIT_OK, EXIT_VIOLATIONS, EXIT_SOLVER, EXIT_EXPRESSION = 0, 1, 2, 3
EXIT_CONFIG, EXIT_DATA = 64, 65
REPORT_VERSION = "1"

DEFAULT_GRIDS = {"h2": ("uniform", 1024), "h3": ("gauss", 8000), "h4": ("gauss", 20000),
                 "h5": ("gauss", 40000), "h2xh2": ("product", 64)}


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    grid_resolution: int | None = None
    grid_scheme: str | None = None
    seed: int = 0
    samples: int = 100
    tol_grad: float = 1e-10
    max_iter: int = 100
    radius: float = 3.0
    cprime: float | None = None
    out: str | None = None
    format: str | None = None

    def validate(self) -> "RunConfig":
        if self.model is not None:
            if self.model not in MODELS:
                raise ConfigError(f"unknown model {self.model!r} (expected one of {', '.join(MODELS)})")
            scheme, res = DEFAULT_GRIDS[self.model]
            self.grid_scheme = self.grid_scheme or scheme
            self.grid_resolution = self.grid_resolution or res
        for name in ("grid_resolution", "samples", "tol_grad", "max_iter", "radius", "cprime"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"--{name.replace('_', '-')} must be positive")
        if self.seed < 0:
            raise ConfigError("--seed must be non-negative")
        if self.format is None:
            self.format = "csv" if self.out and self.out.lower().endswith(".csv") else "json"
        if self.format not in ("json", "csv"):
            raise ConfigError("--format must be json or csv")
        return self

    def settings(self) -> SolverSettings:
        return SolverSettings(tol=self.tol_grad, max_iter=self.max_iter)

    def grid(self):
        model = get_model(self.model)
        try:
            return model, build_grid(model, self.grid_resolution, self.seed, self.grid_scheme)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def make_report(config: RunConfig, started: str, results, violations) -> dict:
    return _clean({
        "version": REPORT_VERSION,
        "command": config.command,
        "config": asdict(config),
        "timestamps": {"started": started, "finished": _now()},
        "results": results,
        "violations": violations,
    })


def write_output(config: RunConfig, report: dict, rows: list | None = None) -> None:
    if config.format == "csv":
        rows = _clean(rows or [])
        buf = io.StringIO()
        fields = list(dict.fromkeys(k for r in rows for k in r))
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(report, indent=2) + "\n"
    if config.out:
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)


def load_simplex(path: str, model_name: str | None):
    """Read ``{"model": ..., "vertices": [[...], ...]}``; coordinates are
    rescaled onto the hyperboloid if within 1e-6 of it."""
    try:
        data = json.loads(Path(path).read_text())
        name = data["model"]
        raw = data["vertices"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f"cannot read simplex file {path}: {exc}") from None
    if name not in MODELS:
        raise DataError(f"simplex file names unknown model {name!r}")
    if model_name is not None and model_name != name:
        raise DataError(f"simplex file is for {name}, not {model_name}")
    model = get_model(name)
    try:
        pts = np.asarray(raw, dtype=float).reshape(len(raw), *model.shape)
    except (ValueError, TypeError):
        raise DataError(f"vertices must be lists of {model.shape[0] * model.shape[1]} coordinates") from None
    if len(pts) < 1 or len(pts) > model.dim + 1:
        raise DataError(f"need between 1 and {model.dim + 1} vertices")
    from .models import mink
    q = mink(pts, pts)
    if np.any(np.abs(q + 1.0) > 1e-6) or np.any(pts[..., -1] <= 0):
        raise DataError("vertices are not on the upper hyperboloid sheet")
    return model, model.project(pts)


def simplex_lattice(k: int, per_edge: int):
    """Points ``a = sqrt(b / per_edge)`` for integer ``b`` summing to ``per_edge``."""
    for cut in itertools.combinations(range(per_edge + k), k):
        b = np.diff(np.concatenate([[-1], cut, [per_edge + k]])) - 1
        yield np.sqrt(b / per_edge)


# ----------------------------------------------------------------------
# commands


def cmd_verify(config: RunConfig, prop: str, workers=None):
    model, grid = config.grid()
    names = PROPERTIES if prop == "all" else (prop,)
    results, rows, violations, failures = {"quadrature": grid.metadata()}, [], [], 0
    for name in names:
        summary, r, v, f = run_property(name, model, grid, config.samples, config.seed,
                                        config.radius, config.settings(), workers)
        results[name] = summary
        rows += r
        violations += v
        failures += f
    code = EXIT_SOLVER if failures else EXIT_VIOLATIONS if violations else EXIT_OK
    return code, results, violations, rows


def cmd_jscan(config: RunConfig, volume_tuples: int, mc_samples: int, workers=None):
    model, grid = config.grid()
    rep = jscan(model, grid, config.samples, config.seed, config.radius, config.settings(),
                volume_tuples, mc_samples, config.cprime, workers)
    code = EXIT_SOLVER if rep.solver_failures else EXIT_VIOLATIONS if rep.violations else EXIT_OK
    return code, rep.to_dict(), rep.violations, rep.rows


def cmd_straighten(config: RunConfig, simplex: str, per_edge: int):
    model, pts = load_simplex(simplex, config.model)
    config.model = model.name
    config.validate()
    _, grid = config.grid()
    V = VertexTuple.build(model, pts, grid)
    rows, vertex_error = [], 0.0
    for idx, a in enumerate(simplex_lattice(V.k, per_edge)):
        res = straighten(V, a, config.settings())
        row = {"index": idx}
        row.update({f"a{i + 1}": float(x) for i, x in enumerate(a)})
        row.update({f"y{j}": float(c) for j, c in enumerate(res.point.ravel())})
        row.update({"iterations": res.iterations, "gradient_norm": res.gradient_norm})
        hit = np.flatnonzero(a == 1.0)
        if len(hit):
            err = model.distance(res.point, pts[hit[0]])
            row["vertex_error"] = err
            vertex_error = max(vertex_error, err)
        rows.append(row)
    violations = []
    if vertex_error > 1e-7:
        violations.append({"kind": "vertex_interpolation", "detail": vertex_error})
    results = {"vertices": pts.tolist(), "per_edge": per_edge, "points": len(rows),
               "max_vertex_error": vertex_error, "quadrature": grid.metadata()}
    return (EXIT_VIOLATIONS if violations else EXIT_OK), results, violations, rows


def cmd_barycenter(config: RunConfig, simplex: str, weights: str | None):
    model, pts = load_simplex(simplex, config.model)
    config.model = model.name
    config.validate()
    _, grid = config.grid()
    V = VertexTuple.build(model, pts, grid)
    if weights:
        try:
            a = np.array([float(w) for w in weights.split(",")])
        except ValueError:
            raise ConfigError("--weights must be comma separated numbers") from None
        if len(a) != len(pts) or np.any(a < 0) or not np.any(a > 0):
            raise ConfigError("--weights needs one non-negative entry per vertex")
        a = a / np.linalg.norm(a)
    else:
        a = np.full(len(pts), 1.0 / math.sqrt(len(pts)))
    res = straighten(V, a, config.settings())
    results = {"sigma": a, "point": res.point, "gradient_norm": res.gradient_norm,
               "iterations": res.iterations, "g_value": res.g_value, "quadrature": grid.metadata()}
    row = {"iterations": res.iterations, "gradient_norm": res.gradient_norm}
    row.update({f"y{j}": float(c) for j, c in enumerate(res.point.ravel())})
    return EXIT_OK, results, [], [row]


def _parse_overrides(items, flag):
    out = {}
    for item in items or []:
        try:
            key, value = item.split("=")
            out[int(key)] = float(value)
        except ValueError:
            raise ConfigError(f"{flag} expects N=VALUE, got {item!r}") from None
    return out


def cmd_simvol(config: RunConfig, expression: str, product_constants, v_overrides):
    cfg = simvol.EvalConfig(_parse_overrides(product_constants, "--product-constant"),
                            _parse_overrides(v_overrides, "--v"))
    bound = simvol.evaluate_text(expression, cfg)
    results = {"expression": expression, "interval": bound.to_dict(),
               "euler_bound": simvol.euler_bound(bound)}
    row = {"expression": expression, "lo": bound.lo, "hi": bound.hi, "dim": bound.dim}
    return EXIT_OK, results, [], [row]


# ----------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, model_required: bool = True):
    p.add_argument("--model", required=model_required, help="h2, h3, h4, h5 or h2xh2")
    p.add_argument("--grid-resolution", type=int, default=None)
    p.add_argument("--grid-scheme", default=None,
                   choices=["uniform", "fibonacci", "random", "gauss", "product"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--tol-grad", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--radius", type=float, default=3.0)
    p.add_argument("--cprime", type=float, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--format", default=None, choices=["json", "csv"],
                   help="defaults to csv for a .csv --out path, else json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bstraight", description="Barycentric straightening toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="run straightening property suites")
    _common(p)
    p.add_argument("--property", default="all", choices=list(PROPERTIES) + ["all"])

    p = sub.add_parser("jscan", help="scan J and |Jac| over random simplices")
    _common(p)
    p.add_argument("--volume-tuples", type=int, default=4)
    p.add_argument("--mc-samples", type=int, default=32)

    p = sub.add_parser("straighten", help="sample a straightened simplex on a lattice")
    _common(p, model_required=False)
    p.add_argument("--simplex", required=True)
    p.add_argument("--grid", type=int, default=10, help="lattice subdivisions per edge")

    p = sub.add_parser("barycenter", help="barycenter of a weighted vertex measure")
    _common(p, model_required=False)
    p.add_argument("--simplex", required=True)
    p.add_argument("--weights", default=None)

    p = sub.add_parser("simvol", help="bound the simplicial volume of an expression")
    p.add_argument("expression")
    p.add_argument("--product-constant", action="append", metavar="N=C")
    p.add_argument("--v", action="append", metavar="N=VALUE", dest="v_overrides")
    p.add_argument("--out", default=None)
    p.add_argument("--format", default=None, choices=["json", "csv"],
                   help="defaults to csv for a .csv --out path, else json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = _now()
    fields = {k: getattr(args, k) for k in RunConfig.__dataclass_fields__ if hasattr(args, k)}
    fields["command"] = args.command
    config = RunConfig(**fields)
    try:
        config.validate()
        if args.command == "verify":
            code, results, violations, rows = cmd_verify(config, args.property)
        elif args.command == "jscan":
            code, results, violations, rows = cmd_jscan(config, args.volume_tuples, args.mc_samples)
        elif args.command == "straighten":
            if args.grid < 1:
                raise ConfigError("--grid must be >= 1")
            code, results, violations, rows = cmd_straighten(config, args.simplex, args.grid)
        elif args.command == "barycenter":
            code, results, violations, rows = cmd_barycenter(config, args.simplex, args.weights)
        else:
            code, results, violations, rows = cmd_simvol(config, args.expression,
                                                         args.product_constant, args.v_overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except simvol.ExpressionError as exc:
        print(f"error: {exc.message} at line {exc.line}, column {exc.col}", file=sys.stderr)
        return EXIT_EXPRESSION
    except (simvol.UnknownConstant, simvol.Indeterminate) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXPRESSION
    except SolverError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    write_output(config, make_report(config, started, results, violations), rows)
    if violations:
        log.warning("%d violation(s)", len(violations))
    return code


if __name__ == "__main__":
    sys.exit(main())
