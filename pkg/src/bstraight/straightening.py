"""Barycentric straightening of singular simplices.

A point of the spherical simplex is a unit vector ``a`` with non-negative
entries.  The straightened simplex on vertices ``V = (x_1, ..., x_{k+1})``
sends ``a`` to the barycenter of ``sum_i a_i^2 nu(x_i)``; it depends on the
vertices only, so everything here is keyed on :class:`VertexTuple`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._parallel import parallel_map
from .barycenter import BarycenterResult, SolverSettings, barycenter, minkowski_mean
from .boundary import BoundaryMeasure, QuadratureGrid, ps_density, pushforward, weighted_combination
from .models import Model

SIGMA_TOL = 1e-12


def as_sigma(a, k: int | None = None) -> np.ndarray:
    """Validate a point of the spherical simplex."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or (k is not None and len(a) != k + 1):
        raise ValueError(f"expected {k + 1 if k is not None else 'a'} coordinates, got shape {a.shape}")
    if np.any(a < 0) or abs(np.dot(a, a) - 1.0) > SIGMA_TOL:
        raise ValueError("spherical simplex points need a_i >= 0 and sum a_i^2 = 1")
    return a


def vertex_sigma(k: int, i: int) -> np.ndarray:
    e = np.zeros(k + 1)
    e[i] = 1.0
    return e


def sample_sigma(rng: np.random.Generator, k: int) -> np.ndarray:
    """``a_i = sqrt(b_i)`` with ``b`` uniform on the Euclidean k-simplex."""
    a = np.sqrt(rng.dirichlet(np.ones(k + 1)))
    return a / np.linalg.norm(a)


def sample_face_sigma(rng: np.random.Generator, k: int, i: int) -> np.ndarray:
    return np.insert(sample_sigma(rng, k - 1), i, 0.0)


@dataclass(frozen=True, eq=False)
class VertexTuple:
    """Ordered vertices with their Patterson-Sullivan measures on a shared atom set."""

    model: Model
    points: np.ndarray
    measures: tuple[BoundaryMeasure, ...]
    grid: QuadratureGrid | None = field(default=None, repr=False)

    @classmethod
    def build(cls, model: Model, points, grid: QuadratureGrid) -> "VertexTuple":
        points = np.asarray(points, dtype=float)
        if points.ndim != 3 or points.shape[1:] != model.shape:
            raise ValueError(f"vertices must have shape (k+1, {model.shape[0]}, {model.shape[1]})")
        for x in points:
            model.check_point(x, tol=1e-9)
        measures = tuple(ps_density(model, grid, x) for x in points)
        return cls(model, points, measures, grid)

    @property
    def k(self) -> int:
        return len(self.points) - 1

    def measure(self, a) -> BoundaryMeasure:
        return weighted_combination(a, self.measures)

    def transform(self, g) -> "VertexTuple":
        """``gamma V``: vertices moved by ``g``, measures pushed forward."""
        pts = np.stack([self.model.apply_point(g, x) for x in self.points])
        return VertexTuple(self.model, pts, tuple(pushforward(self.model, g, mu) for mu in self.measures))

    def face(self, i: int) -> "VertexTuple":
        if self.k < 1:
            raise ValueError("a 0-simplex has no faces")
        keep = [j for j in range(self.k + 1) if j != i]
        return VertexTuple(self.model, self.points[keep], tuple(self.measures[j] for j in keep), self.grid)

    def permute(self, perm) -> "VertexTuple":
        perm = list(perm)
        return VertexTuple(self.model, self.points[perm], tuple(self.measures[j] for j in perm), self.grid)

    def key(self) -> bytes:
        return np.ascontiguousarray(self.points).tobytes()


def face(V: VertexTuple, i: int) -> VertexTuple:
    return V.face(i)


def straighten(V: VertexTuple, a, settings: SolverSettings | None = None, init=None) -> BarycenterResult:
    """Barycenter of ``sum a_i^2 nu(x_i)``; ``a`` may be any unit vector (only
    squares enter), which lets finite differences step off the simplex."""
    a = np.asarray(a, dtype=float)
    if init is None:
        init = minkowski_mean(V.model, V.points, a * a)
    return barycenter(V.model, V.measure(a), settings, init)


def straighten_point(V: VertexTuple, a, settings: SolverSettings | None = None) -> np.ndarray:
    return straighten(V, as_sigma(a, V.k), settings).point


# ----------------------------------------------------------------------
# singular simplices and chains


@dataclass(frozen=True, eq=False)
class SingularSimplex:
    """A continuous map from the spherical simplex, with its vertex data."""

    vertices: VertexTuple
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, a) -> np.ndarray:
        return self.fn(np.asarray(a, dtype=float))


def coned_simplex(V: VertexTuple) -> SingularSimplex:
    """``a -> exp_{x_1}(sum_i a_i^2 log_{x_1} x_i)``; hits ``x_i`` at ``e_i``."""
    m = V.model
    base = V.points[0]
    logs = np.stack([m.log_map(base, x) for x in V.points])

    def fn(a):
        return m.exp_map(base, np.tensordot(a * a, logs, axes=1))

    return SingularSimplex(V, fn)


def geodesic_homotopy(f: SingularSimplex, s: float, a, settings: SolverSettings | None = None) -> np.ndarray:
    """Point at time ``s`` on the geodesic from ``f(a)`` to its straightening."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("homotopy parameter must lie in [0, 1]")
    m = f.vertices.model
    start = f(a)
    end = straighten_point(f.vertices, a, settings)
    return m.exp_map(start, m.log_map(start, end), s)


@dataclass
class Chain:
    terms: list = field(default_factory=list)

    def __post_init__(self):
        for coef, _ in self.terms:
            if coef == 0:
                raise ValueError("chain coefficients must be nonzero")

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)


def chain_l1_norm(c: Chain) -> float:
    return float(sum(abs(coef) for coef, _ in c))


def _vertices_of(simplex) -> VertexTuple:
    return simplex.vertices if isinstance(simplex, SingularSimplex) else simplex


def straighten_chain(c: Chain) -> Chain:
    """Replace each simplex by its vertex tuple; simplices that straighten to
    the same map merge and their coefficients add."""
    merged: dict[bytes, list] = {}
    for coef, simplex in c:
        V = _vertices_of(simplex)
        entry = merged.setdefault(V.key(), [0.0, V])
        entry[0] += coef
    return Chain([(coef, V) for coef, V in merged.values() if coef != 0])


# ----------------------------------------------------------------------
# verifications


@dataclass
class PropertyReport:
    name: str
    samples: int
    max_discrepancy: float
    threshold: float
    rows: list = field(default_factory=list, repr=False)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.max_discrepancy <= self.threshold)

    def to_dict(self) -> dict:
        return {"name": self.name, "samples": self.samples,
                "max_discrepancy": self.max_discrepancy, "threshold": self.threshold,
                "passed": self.passed, **self.extra}


def verify_face_compatibility(V: VertexTuple, samples: int, seed: int,
                              settings: SolverSettings | None = None, threshold: float = 1e-7,
                              workers=None) -> PropertyReport:
    """Compare ``st_V`` on each face with the straightening of the face itself."""
    m = V.model
    jobs = [(i, s) for i in range(V.k + 1) for s in range(samples)]

    def run(job):
        i, s = job
        a = sample_face_sigma(np.random.default_rng([seed, i, s]), V.k, i)
        y = straighten_point(V, a, settings)
        y_face = straighten_point(V.face(i), np.delete(a, i), settings)
        return {"face": i, "sample": s, "discrepancy": m.distance(y, y_face)}

    rows = parallel_map(run, jobs, workers)
    worst = max((r["discrepancy"] for r in rows), default=0.0)
    return PropertyReport("faces", len(rows), worst, threshold, rows)


def verify_equivariance(V: VertexTuple, g, samples: int, seed: int,
                        settings: SolverSettings | None = None, threshold: float = 1e-6,
                        grid_check: bool = False, workers=None) -> PropertyReport:
    """Max over sampled ``a`` of ``d(st_{gV}(a), g st_V(a))``.

    ``gV`` carries the pushed-forward measures.  With ``grid_check`` the
    measures of ``gV`` are also recomputed on the original grid and that
    (quadrature-limited) discrepancy is reported separately.
    """
    m = V.model
    gV = V.transform(g)
    regrid = VertexTuple.build(m, gV.points, V.grid) if grid_check and V.grid is not None else None

    def run(s):
        a = sample_sigma(np.random.default_rng([seed, s]), V.k)
        moved = m.apply_point(g, straighten_point(V, a, settings))
        row = {"sample": s, "discrepancy": m.distance(straighten_point(gV, a, settings), moved)}
        if regrid is not None:
            row["grid_discrepancy"] = m.distance(straighten_point(regrid, a, settings), moved)
        return row

    rows = parallel_map(run, range(samples), workers)
    report = PropertyReport("equivariance", len(rows), max((r["discrepancy"] for r in rows), default=0.0),
                            threshold, rows)
    if regrid is not None:
        report.extra["max_grid_discrepancy"] = max(r["grid_discrepancy"] for r in rows)
    return report


def lipschitz_estimate(V: VertexTuple, samples: int, seed: int, delta: float = 1e-4,
                       settings: SolverSettings | None = None) -> float:
    """Empirical ``max d(st(a), st(a')) / |a - a'|`` over ``|a - a'| <= delta``."""
    m = V.model
    worst = 0.0
    for s in range(samples):
        rng = np.random.default_rng([seed, s])
        a = sample_sigma(rng, V.k)
        b = np.abs(a + delta * rng.uniform(-1, 1, size=a.shape) / np.sqrt(len(a)))
        b /= np.linalg.norm(b)
        y, yb = straighten_point(V, a, settings), straighten_point(V, b, settings)
        step = np.linalg.norm(a - b)
        if step > 0:
            worst = max(worst, m.distance(y, yb) / step)
    return worst
