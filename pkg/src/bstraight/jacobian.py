"""Derivative and Jacobian bounds for straightened simplices.

At ``y = st_V(a)`` the straightened map is defined implicitly by the vanishing
of the integrated Busemann one-form.  Differentiating in ``a`` gives

    K_a D(st_V)_a w + sum_i 2 a_i <w, e_i> G_i = 0,

where ``G_i`` is the gradient of ``int B dnu(x_i)`` at ``y``.  The pointwise
estimate ``|Jac| <= 2^n det(H)^{1/2} / det(K)`` is rebuilt step by step:
eigenbasis of ``H``, pulled-back and orthonormalised basis on the simplex, a
triangular matrix, then two Cauchy-Schwarz inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ._parallel import parallel_map
from .barycenter import DegenerateHessian, LocalForms, SolverError, SolverSettings, local_forms
from .straightening import Chain, VertexTuple, sample_sigma, straighten, _vertices_of

EQ_TOL = 1e-8
INEQ_TOL = 1e-10
BOUND_TOL = 1e-8
ZERO_JAC_RTOL = 1e-10


def _close(a, b, tol=EQ_TOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def _leq(a, b, tol=INEQ_TOL) -> bool:
    return a <= b + tol * max(1.0, abs(b))


def sigma_frame(a) -> np.ndarray:
    """Orthonormal basis ``W`` of ``T_a`` (the complement of ``a``), oriented so
    that ``det[a, W] = +1``."""
    a = np.asarray(a, dtype=float)
    Q, _ = np.linalg.qr(a[:, None], mode="complete")
    if Q[:, 0] @ a < 0:
        Q[:, 0] *= -1.0
    Q[:, 0] = a
    W = Q[:, 1:].copy()
    if np.linalg.det(np.column_stack([a, W])) < 0:
        W[:, -1] *= -1.0
    return W


def orthant_area(n: int) -> float:
    """Area of the spherical n-simplex: ``|S^n| / 2^{n+1}``."""
    log_area = math.log(2.0) + 0.5 * (n + 1) * math.log(math.pi) - gammaln(0.5 * (n + 1))
    return math.exp(log_area) / 2 ** (n + 1)


def endomorphisms_HK(V: VertexTuple, a, settings: SolverSettings | None = None):
    """``(H, K)`` at ``st_V(a)`` in the frame ``tangent_basis(st_V(a))``."""
    y = straighten(V, a, settings).point
    forms = local_forms(V.model, V.measure(a), y)
    if np.linalg.det(forms.K) <= 0:
        raise DegenerateHessian("K is not positive definite")
    return forms.H, forms.K


@dataclass(frozen=True, eq=False)
class ImplicitDerivative:
    sigma: np.ndarray
    point: np.ndarray
    forms: LocalForms
    vertex_gradients: np.ndarray  # (k+1, n): G_i in the frame
    sigma_basis: np.ndarray  # (k+1, k)
    matrix: np.ndarray  # (n, k)
    residual: float
    iterations: int

    @property
    def L(self) -> np.ndarray:
        a = self.sigma
        return (2.0 * a[:, None] * self.vertex_gradients).T @ self.sigma_basis


def implicit_derivative(V: VertexTuple, a, settings: SolverSettings | None = None) -> ImplicitDerivative:
    """Solve the differentiated one-form equation for ``D(st_V)_a``.

    Columns are images of the oriented frame ``sigma_frame(a)``; rows are
    coordinates in ``tangent_basis(st_V(a))``.
    """
    a = np.asarray(a, dtype=float)
    res = straighten(V, a, settings)
    y = res.point
    mu = V.measure(a)
    forms = local_forms(V.model, mu, y)
    if np.linalg.det(forms.K) <= 1e-14:
        raise DegenerateHessian(f"det K = {np.linalg.det(forms.K):.3e}")
    G = np.stack([nu.masses @ forms.one_forms for nu in V.measures])
    W = sigma_frame(a)
    L = (2.0 * a[:, None] * G).T @ W
    D = -np.linalg.solve(forms.K, L)
    residual = float(np.max(np.abs(forms.K @ D + L), initial=0.0))
    return ImplicitDerivative(a, y, forms, G, W, D, residual, res.iterations)


def fd_derivative(V: VertexTuple, a, h: float = 1e-4, settings: SolverSettings | None = None,
                  y0=None) -> np.ndarray:
    """Central differences of ``st_V`` along great circles ``cos(h) a +- sin(h) w``,
    read through ``log`` at the base point.  Independent of the implicit solve."""
    a = np.asarray(a, dtype=float)
    m = V.model
    if y0 is None:
        y0 = straighten(V, a, settings).point
    basis = m.tangent_basis(y0)
    W = sigma_frame(a)
    cols = []
    for w in W.T:
        ends = []
        for sign in (1.0, -1.0):
            b = math.cos(h) * a + sign * math.sin(h) * w
            y = straighten(V, b, settings, init=y0).point
            ends.append(m.to_coords(y0, m.log_map(y0, y), basis))
        cols.append((ends[0] - ends[1]) / (2.0 * h))
    return np.column_stack(cols)


def _gram_schmidt(vectors: np.ndarray) -> np.ndarray:
    out = np.zeros_like(vectors)
    for j in range(vectors.shape[1]):
        v = vectors[:, j].copy()
        for i in range(j):
            v -= (out[:, i] @ v) * out[:, i]
        out[:, j] = v / np.linalg.norm(v)
    return out


@dataclass
class JacobianReport:
    sigma: np.ndarray
    point: np.ndarray
    jac: float
    jac_signed: float
    det_K: float
    det_H: float
    J: float
    bound: float
    zero_jacobian: bool
    steps: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {"sigma": self.sigma.tolist(), "point": self.point.tolist(),
                "jac": self.jac, "jac_signed": self.jac_signed, "det_K": self.det_K,
                "det_H": self.det_H, "J": self.J, "bound": self.bound,
                "zero_jacobian": self.zero_jacobian, "steps": self.steps,
                "checks": self.checks, "diagnostics": self.diagnostics, "passed": self.passed}


def jacobian(V: VertexTuple, a, settings: SolverSettings | None = None) -> JacobianReport:
    """|Jac(st_V)(a)| together with every intermediate quantity of the bound."""
    n = V.model.dim
    if V.k != n:
        raise ValueError(f"Jacobian needs an {n}-simplex, got a {V.k}-simplex")
    der = implicit_derivative(V, a, settings)
    a = der.sigma
    D, K, H = der.matrix, der.forms.K, der.forms.H
    jac_signed = float(np.linalg.det(D))
    jac = abs(jac_signed)
    det_K = float(np.linalg.det(K))
    det_H = float(np.linalg.det(H))
    J = math.sqrt(max(det_H, 0.0)) / det_K
    bound = 2 ** n * J
    KD = K @ D
    sv = np.linalg.svd(KD, compute_uv=False)
    zero = bool(sv[-1] <= ZERO_JAC_RTOL * max(1.0, sv[0]))

    steps = {"detK_times_jac": det_K * jac, "det_KD": abs(float(np.linalg.det(KD)))}
    checks = {"det_K_positive": det_K > 0,
              "implicit_residual": der.residual <= EQ_TOL,
              "det_identity": _close(steps["detK_times_jac"], steps["det_KD"])}
    diagnostics = {"implicit_residual": der.residual, "iterations": der.iterations}

    if not zero:
        lam, Vh = np.linalg.eigh(H)  # columns v_j
        U_tilde = np.linalg.solve(KD, Vh)  # (K D) u~_j = v_j
        U = _gram_schmidt(U_tilde)
        T = Vh.T @ KD @ U  # T[k, j] = <K D u_j, v_k>
        U_amb = der.sigma_basis @ U  # u_j in R^{n+1}
        P = der.vertex_gradients @ Vh  # P[i, j] = int dB(v_j) dnu(x_i)
        Q = np.stack([(nu.masses @ (der.forms.one_forms @ Vh) ** 2) for nu in V.measures])
        diag = np.abs(np.diag(T))
        pairing_terms = np.abs(np.sum(U_amb * (2.0 * a[:, None] * P), axis=0))
        unit = np.sqrt(np.sum(U_amb ** 2, axis=0))
        cs_row_terms = unit * np.sqrt(np.sum(4.0 * (a[:, None] ** 2) * P ** 2, axis=0))
        cs_measure_terms = 2.0 * np.sqrt(np.sum((a[:, None] ** 2) * Q, axis=0))
        steps.update({
            "triangular_product": float(np.prod(diag)),
            "pairing_product": float(np.prod(pairing_terms)),
            "cauchy_schwarz_rows": float(np.prod(cs_row_terms)),
            "cauchy_schwarz_measure": float(np.prod(cs_measure_terms)),
            "quadratic_product": float(2 ** n * np.prod(np.sqrt(np.einsum("kj,kl,lj->j", Vh, H, Vh)))),
            "det_H_bound": float(2 ** n * math.sqrt(max(det_H, 0.0))),
        })
        diagnostics.update({
            "triangular_error": float(np.max(np.abs(np.tril(T, -1)), initial=0.0)),
            "unit_norm_error": float(np.max(np.abs(unit - 1.0))),
            "h_eigenvalues": lam.tolist(),
        })
        checks.update({
            "triangular_product": _close(steps["det_KD"], steps["triangular_product"]),
            "pairing_product": _close(steps["triangular_product"], steps["pairing_product"]),
            "cauchy_schwarz_rows": _leq(steps["pairing_product"], steps["cauchy_schwarz_rows"]),
            "unit_vectors": diagnostics["unit_norm_error"] <= EQ_TOL,
            "cauchy_schwarz_measure": _leq(steps["cauchy_schwarz_rows"], steps["cauchy_schwarz_measure"]),
            "eigen_product": (_close(steps["cauchy_schwarz_measure"], steps["quadratic_product"])
                              and _close(steps["quadratic_product"], steps["det_H_bound"])),
        })
    checks["bound"] = jac <= bound + BOUND_TOL
    return JacobianReport(a, der.point, jac, jac_signed, det_K, det_H, J, bound, zero,
                          steps, {k: bool(v) for k, v in checks.items()}, diagnostics)


# ----------------------------------------------------------------------
# volumes


@dataclass
class VolumeEstimate:
    value: float
    stderr: float
    signed: float
    signed_stderr: float
    sup_bound: float
    samples: int
    area: float
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def orthant_samples(seed, n: int, count: int) -> list[np.ndarray]:
    """Uniform points on the spherical n-simplex (normalised |gaussian|),
    one derived stream per sample."""
    out = []
    for i in range(count):
        g = np.abs(np.random.default_rng([*np.atleast_1d(seed).tolist(), i]).standard_normal(n + 1))
        out.append(g / np.linalg.norm(g))
    return out


def simplex_volume(V: VertexTuple, mc_samples: int, seed, settings: SolverSettings | None = None,
                   workers=None) -> VolumeEstimate:
    """Monte-Carlo ``int |Jac(st_V)|`` over the spherical n-simplex."""
    n = V.model.dim
    area = orthant_area(n)
    reports = parallel_map(lambda a: jacobian(V, a, settings), orthant_samples(seed, n, mc_samples), workers)
    jac = np.array([r.jac for r in reports])
    signed = np.array([r.jac_signed for r in reports])
    N = len(reports)

    def se(x):
        return float(area * x.std(ddof=1) / math.sqrt(N)) if N > 1 else float("inf")

    violations = [{"sample": i, "checks": [k for k, ok in r.checks.items() if not ok]}
                  for i, r in enumerate(reports) if not r.passed]
    return VolumeEstimate(float(area * jac.mean()), se(jac), float(area * signed.mean()), se(signed),
                          float(max(r.bound for r in reports)), N, area, violations)


@dataclass
class ChainBound:
    terms: list
    signed_total: float
    abs_total: float
    l1_norm: float
    k_emp: float
    quotient: float
    slack: float
    holds: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def chain_volume_bound(chain: Chain, k_emp: float, mc_samples: int = 64, seed: int = 0,
                       settings: SolverSettings | None = None) -> ChainBound:
    """Check ``sum a_i int Jac <= K * sum |a_i|`` and report ``sum a_i int Jac / K``."""
    if k_emp <= 0:
        raise ValueError("K must be positive")
    terms = []
    signed_total = abs_total = 0.0
    for idx, (coef, simplex) in enumerate(chain):
        vol = simplex_volume(_vertices_of(simplex), mc_samples, [seed, idx], settings)
        terms.append({"coefficient": coef, "volume": vol.value, "signed_volume": vol.signed,
                      "stderr": vol.stderr})
        signed_total += coef * vol.signed
        abs_total += abs(coef) * vol.value
    l1 = float(sum(abs(c) for c, _ in chain))
    rhs = k_emp * l1
    return ChainBound(terms, signed_total, abs_total, l1, k_emp, signed_total / k_emp,
                      rhs - signed_total, bool(signed_total <= rhs and abs_total <= rhs))


# ----------------------------------------------------------------------
# scans


@dataclass
class ScanReport:
    model: str
    dim: int
    n_samples: int
    seed: int
    radius: float
    sup_jac: float
    sup_J: float
    k_emp: float
    k_emp_stderr: float
    quadrature: dict
    violations: list = field(default_factory=list)
    solver_failures: int = 0
    cprime: float | None = None
    rows: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "rows"}
        if self.cprime is not None:
            out["annotated_bound"] = 2 ** self.dim * self.cprime
        return out


def sample_vertices(model, rng: np.random.Generator, radius: float, count: int) -> np.ndarray:
    return np.stack([model.random_point(rng, radius) for _ in range(count)])


def jscan(model, grid, n_samples: int, seed: int, radius: float = 3.0,
          settings: SolverSettings | None = None, volume_tuples: int = 4, mc_samples: int = 32,
          cprime: float | None = None, workers=None) -> ScanReport:
    """Seeded scan of ``J`` and ``|Jac|`` over random vertex tuples and simplex points.

    Sample ``i`` draws its vertices (in the radius-``radius`` tangent ball at
    o) and its simplex point from the stream ``(seed, i)``; the first
    ``volume_tuples`` tuples also get a Monte-Carlo volume, whose maximum is
    the empirical ``K``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    n = model.dim

    def run(i):
        rng = np.random.default_rng([seed, i])
        V = VertexTuple.build(model, sample_vertices(model, rng, radius, n + 1), grid)
        a = sample_sigma(rng, n)
        row = {"index": i}
        try:
            rep = jacobian(V, a, settings)
        except SolverError as exc:
            row.update({"error": type(exc).__name__, "message": str(exc)})
            return row, None
        row.update({"J": rep.J, "jac": rep.jac, "bound": rep.bound, "det_K": rep.det_K,
                    "det_H": rep.det_H, "zero_jacobian": rep.zero_jacobian, "passed": rep.passed})
        vol = None
        if i < volume_tuples and mc_samples > 0:
            try:
                vol = simplex_volume(V, mc_samples, [seed, i, 1], settings)
            except SolverError as exc:
                row.update({"error": type(exc).__name__, "message": str(exc)})
                return row, None
            row.update({"volume": vol.value, "volume_stderr": vol.stderr})
        return row, (rep, vol)

    results = parallel_map(run, range(n_samples), workers)
    rows = [r for r, _ in results]
    violations, failures = [], 0
    sup_jac = sup_J = k_emp = k_se = 0.0
    for row, payload in results:
        if payload is None:
            failures += 1
            violations.append({"index": row["index"], "kind": "solver", "detail": row["error"]})
            continue
        rep, vol = payload
        sup_jac = max(sup_jac, rep.jac)
        sup_J = max(sup_J, rep.J)
        if not rep.passed:
            violations.append({"index": row["index"], "kind": "chain",
                               "detail": [k for k, ok in rep.checks.items() if not ok]})
        if cprime is not None and rep.J > cprime:
            violations.append({"index": row["index"], "kind": "cprime", "detail": rep.J})
        if vol is not None:
            for v in vol.violations:
                violations.append({"index": row["index"], "kind": "volume", "detail": v})
            if vol.value > k_emp:
                k_emp, k_se = vol.value, vol.stderr
    return ScanReport(model.name, model.dim, n_samples, seed, radius, sup_jac, sup_J, k_emp, k_se,
                      grid.metadata(), violations, failures, cprime, rows)
