"""Seeded property suites behind ``bstraight verify``.

Each suite draws sample ``s`` from the stream ``(seed, s)`` so results do not
depend on how samples are distributed over workers.
"""

from __future__ import annotations

import numpy as np

from ._parallel import parallel_map
from .barycenter import SolverError, SolverSettings
from .jacobian import fd_derivative, implicit_derivative, jacobian, sample_vertices
from .straightening import (VertexTuple, coned_simplex, geodesic_homotopy, sample_face_sigma,
                            sample_sigma, straighten_point)

PROPERTIES = ("equivariance", "faces", "c1", "jacobian-bound")
THRESHOLDS = {"equivariance": 1e-6, "faces": 1e-7, "homotopy": 1e-7, "c1": 1e-3,
              "implicit_residual": 1e-8}


def _vertices(model, grid, rng, radius):
    return VertexTuple.build(model, sample_vertices(model, rng, radius, model.dim + 1), grid)


def _equivariance(model, grid, rng, radius, settings, s, seed):
    V = _vertices(model, grid, rng, radius)
    g = model.random_isometry([seed, s, 1])
    a = sample_sigma(rng, V.k)
    moved = model.apply_point(g, straighten_point(V, a, settings))
    d = model.distance(straighten_point(V.transform(g), a, settings), moved)
    return [("equivariance", d, THRESHOLDS["equivariance"])]


def _faces(model, grid, rng, radius, settings, s, seed):
    V = _vertices(model, grid, rng, radius)
    i = s % (V.k + 1)
    a = sample_face_sigma(rng, V.k, i)
    d_face = model.distance(straighten_point(V, a, settings),
                            straighten_point(V.face(i), np.delete(a, i), settings))
    f = coned_simplex(V)
    b = sample_sigma(rng, V.k)
    d0 = model.distance(geodesic_homotopy(f, 0.0, b, settings), f(b))
    d1 = model.distance(geodesic_homotopy(f, 1.0, b, settings), straighten_point(V, b, settings))
    return [("faces", d_face, THRESHOLDS["faces"]),
            ("homotopy", max(d0, d1), THRESHOLDS["homotopy"])]


def _c1(model, grid, rng, radius, settings, s, seed):
    V = _vertices(model, grid, rng, radius)
    a = sample_sigma(rng, V.k)
    der = implicit_derivative(V, a, settings)
    fd = fd_derivative(V, a, 1e-4, settings, y0=der.point)
    scale = 1.0 + np.linalg.norm(der.matrix, 2)
    return [("c1", float(np.linalg.norm(der.matrix - fd, 2) / scale), THRESHOLDS["c1"]),
            ("implicit_residual", der.residual, THRESHOLDS["implicit_residual"])]


def _jacobian_bound(model, grid, rng, radius, settings, s, seed):
    V = _vertices(model, grid, rng, radius)
    rep = jacobian(V, sample_sigma(rng, V.k), settings)
    failed = [k for k, ok in rep.checks.items() if not ok]
    # value is the slack-normalised bound ratio; failures force a violation
    value = rep.jac / rep.bound if rep.bound > 0 else 0.0
    return [("jacobian-bound", value if not failed else np.inf, 1.0 + 1e-8)]


_SUITES = {"equivariance": _equivariance, "faces": _faces, "c1": _c1,
           "jacobian-bound": _jacobian_bound}


def run_property(name: str, model, grid, samples: int, seed: int, radius: float = 3.0,
                 settings: SolverSettings | None = None, workers=None):
    """Run one suite; returns ``(summary, rows, violations, solver_failures)``."""
    suite = _SUITES[name]

    def run(s):
        rng = np.random.default_rng([seed, s])
        try:
            return s, suite(model, grid, rng, radius, settings, s, seed), None
        except SolverError as exc:
            return s, [], f"{type(exc).__name__}: {exc}"

    rows, violations, failures = [], [], 0
    summary: dict = {}
    for s, checks, error in parallel_map(run, range(samples), workers):
        if error is not None:
            failures += 1
            violations.append({"property": name, "sample": s, "kind": "solver", "detail": error})
            continue
        for check, value, threshold in checks:
            ok = bool(value <= threshold)
            rows.append({"property": check, "sample": s, "value": float(value),
                         "threshold": threshold, "passed": ok})
            entry = summary.setdefault(check, {"samples": 0, "max_value": 0.0, "threshold": threshold,
                                               "passed": True})
            entry["samples"] += 1
            entry["max_value"] = max(entry["max_value"], float(value))
            entry["passed"] = entry["passed"] and ok
            if not ok:
                violations.append({"property": check, "sample": s, "kind": "threshold",
                                   "detail": float(value)})
    return summary, rows, violations, failures
