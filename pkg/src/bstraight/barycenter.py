"""Busemann barycenters of boundary measures.

``bar(mu)`` minimises ``g_mu(y) = int B_p(y, theta) dmu(theta)``.  The
gradient and Hessian of ``g_mu`` do not involve ``p`` and have closed forms in
the hyperboloid model, so the minimiser is found by a damped Newton
iteration in the parallel-transported frame at the current iterate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryMeasure
from .models import Model

log = logging.getLogger(__name__)

DEGENERATE_DET = 1e-14


class SolverError(RuntimeError):
    pass


class NonConvergence(SolverError):
    """Newton iteration hit its iteration cap."""


class DegenerateHessian(SolverError):
    """``det K`` fell below the degeneracy threshold."""


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-10
    max_iter: int = 100
    backtrack: float = 0.5
    damping: float = 1.0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtracking factor must lie in (0, 1)")
        if not 0 < self.damping <= 1:
            raise ValueError("initial damping must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class BarycenterResult:
    point: np.ndarray
    gradient_norm: float
    iterations: int
    g_value: float
    history: tuple = ()


@dataclass(frozen=True, eq=False)
class LocalForms:
    """Integrated Busemann forms of one measure at one point, in the frame
    ``basis`` at ``point``."""

    point: np.ndarray
    basis: np.ndarray
    one_forms: np.ndarray  # (N, n): dB_(y, theta_j)(E_k)
    gradient: np.ndarray  # (n,)
    H: np.ndarray
    K: np.ndarray


def local_forms(model: Model, mu: BoundaryMeasure, y) -> LocalForms:
    basis = model.tangent_basis(y)
    a = model.busemann_frame(y, mu.atoms, basis)  # (F, N, n)
    w = model.weight
    m = mu.masses
    db = w * a.sum(axis=0)
    grad = m @ db
    H = db.T @ (m[:, None] * db)
    K = np.zeros_like(H)
    for f, P in enumerate(model.factor_projectors()):
        K += w * (P - a[f].T @ (m[:, None] * a[f]))
    K = 0.5 * (K + K.T)
    return LocalForms(np.asarray(y, dtype=float), basis, db, grad, 0.5 * (H + H.T), K)


def g_value(model: Model, mu: BoundaryMeasure, y, p=None) -> float:
    if p is None:
        p = model.origin()
    return float(np.dot(mu.masses, model.busemann(p, y, mu.atoms)))


def g_gradient(model: Model, mu: BoundaryMeasure, y) -> np.ndarray:
    """Gradient of ``g_mu`` at ``y`` as an ambient tangent vector."""
    forms = local_forms(model, mu, y)
    return model.from_coords(y, forms.gradient, forms.basis)


def hessian_K(model: Model, mu: BoundaryMeasure, y) -> np.ndarray:
    """``K_y(mu)`` in the orthonormal frame ``model.tangent_basis(y)``."""
    return local_forms(model, mu, y).K


def minkowski_mean(model: Model, points, weights=None) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if weights is None:
        weights = np.full(len(points), 1.0 / len(points))
    return model.project(np.tensordot(np.asarray(weights, dtype=float), points, axes=1))


def barycenter(model: Model, mu: BoundaryMeasure, settings: SolverSettings | None = None,
               init=None) -> BarycenterResult:
    """Newton iteration ``y <- exp_y(-K^{-1} grad g)`` with backtracking on g.

    Raises
    ------
    DegenerateHessian
        ``det K <= 1e-14`` at some iterate.
    NonConvergence
        the gradient tolerance was not met within ``settings.max_iter`` steps.
    """
    settings = settings or SolverSettings()
    y = model.origin() if init is None else np.asarray(init, dtype=float)
    g0 = g_value(model, mu, y)
    history = [g0]
    for it in range(settings.max_iter + 1):
        forms = local_forms(model, mu, y)
        gnorm = float(np.linalg.norm(forms.gradient))
        if gnorm <= settings.tol:
            return BarycenterResult(y, gnorm, it, g0, tuple(history))
        if it == settings.max_iter:
            break
        det = np.linalg.det(forms.K)
        if det <= DEGENERATE_DET:
            raise DegenerateHessian(f"det K = {det:.3e} at iteration {it}")
        step = -np.linalg.solve(forms.K, forms.gradient)
        slope = float(forms.gradient @ step)
        direction = model.from_coords(y, step, forms.basis)
        t = settings.damping
        # predicted decrease below rounding of g: take the Newton step as is
        tiny = -slope <= 1e-13 * max(1.0, abs(g0))
        for _ in range(60):
            y_new = model.exp_map(y, direction, t)
            g_new = g_value(model, mu, y_new)
            if tiny or g_new <= g0 + 1e-4 * t * slope:
                break
            t *= settings.backtrack
        else:
            raise NonConvergence(f"line search failed at iteration {it}")
        y, g0 = model.project(y_new), g_new
        history.append(g0)
    raise NonConvergence(f"gradient norm {gnorm:.3e} after {settings.max_iter} iterations")
