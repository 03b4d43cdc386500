"""Hyperboloid models of rank-one and rank-two symmetric spaces.

Points of H^d live on the upper sheet of ``<x, x> = -1`` in Minkowski space
R^{d,1}, with the *time coordinate stored last*, so the basepoint is
``o = (0, ..., 0, 1)``.  The product H^2 x H^2 is handled by stacking factors:
every point, tangent vector and boundary point is an array of shape
``(n_factors, d + 1)``; batches of boundary points have shape
``(N, n_factors, d + 1)``.  Isometries are arrays of shape
``(n_factors, d + 1, d + 1)`` acting factor-wise.

Boundary points are null vectors normalised by ``<o, xi> = -1``, which makes
the Busemann function at the basepoint the closed form ``log(-<x, xi>)``.
On the product, a Furstenberg point ``(xi_1, xi_2)`` is read as the visual
direction at equal angles to both factors, so
``B = (B^1 + B^2) / sqrt(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

POINT_TOL = 1e-12
TANGENT_TOL = 1e-10
ISOMETRY_TOL = 1e-10


def mink(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minkowski form ``sum_i a_i b_i - a_t b_t`` over the last axis."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.sum(a[..., :-1] * b[..., :-1], axis=-1) - a[..., -1] * b[..., -1]


def _sinhc(t):
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < 1e-8
    safe = np.where(small, 1.0, t)
    return np.where(small, 1.0 + t * t / 6.0, np.sinh(safe) / safe)


@dataclass(frozen=True)
class Model:
    """A concrete symmetric space: H^d or a product of equal hyperbolic factors."""

    name: str
    factor_dim: int
    n_factors: int = 1

    def __post_init__(self):
        if self.factor_dim < 2:
            raise ValueError("factor dimension must be >= 2")
        if self.n_factors not in (1, 2):
            raise ValueError("rank must be 1 or 2")

    @property
    def dim(self) -> int:
        return self.factor_dim * self.n_factors

    @property
    def rank(self) -> int:
        return self.n_factors

    @property
    def ambient(self) -> int:
        return self.factor_dim + 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_factors, self.factor_dim + 1)

    @property
    def entropy(self) -> float:
        # n - 1 for H^n; sqrt(2) for H^2 x H^2
        return math.sqrt(self.n_factors) * (self.factor_dim - 1)

    @property
    def weight(self) -> float:
        """Per-factor weight of the Busemann function on the product."""
        return 1.0 / math.sqrt(self.n_factors)

    # ------------------------------------------------------------------
    # points and validation

    def origin(self) -> np.ndarray:
        o = np.zeros(self.shape)
        o[:, -1] = 1.0
        return o

    def check_point(self, x, tol: float = POINT_TOL) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != self.shape:
            raise ValueError(f"point has shape {x.shape}, expected {self.shape}")
        if np.any(np.abs(mink(x, x) + 1.0) > tol) or np.any(x[:, -1] <= 0):
            raise ValueError("point is not on the upper hyperboloid sheet")
        return x

    def check_tangent(self, x, u, tol: float = TANGENT_TOL) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != self.shape:
            raise ValueError(f"tangent has shape {u.shape}, expected {self.shape}")
        if np.any(np.abs(mink(x, u)) > tol):
            raise ValueError("vector is not tangent at the base point")
        return u

    def check_boundary(self, xi, tol: float = POINT_TOL) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-2:] != self.shape:
            raise ValueError(f"boundary point has shape {xi.shape}")
        if np.any(np.abs(mink(xi, xi)) > tol) or np.any(np.abs(xi[..., -1] - 1.0) > tol):
            raise ValueError("boundary point is not a normalised null vector")
        return xi

    def project(self, x) -> np.ndarray:
        """Rescale a future timelike array onto the hyperboloid (per factor)."""
        x = np.asarray(x, dtype=float)
        return x / np.sqrt(-mink(x, x))[..., None]

    def point_from_direction(self, direction, distance: float) -> np.ndarray:
        """Point at ``distance`` from o along a unit spatial direction (H^d only
        per factor; on products the direction is split per factor)."""
        v = np.zeros(self.shape)
        v[:, :-1] = np.asarray(direction, dtype=float).reshape(self.n_factors, self.factor_dim)
        return self.exp_map(self.origin(), v, distance)

    def boundary_from_direction(self, direction) -> np.ndarray:
        """Normalised null vector ``(u, 1)`` for unit spatial directions ``u``."""
        u = np.asarray(direction, dtype=float).reshape(-1, self.n_factors, self.factor_dim)
        u = u / np.linalg.norm(u, axis=-1, keepdims=True)
        xi = np.concatenate([u, np.ones(u.shape[:-1] + (1,))], axis=-1)
        return xi[0] if np.ndim(direction) == 1 else xi

    # ------------------------------------------------------------------
    # metric

    def inner(self, u, v) -> float:
        return float(np.sum(mink(u, v)))

    def norm(self, u) -> float:
        return math.sqrt(max(self.inner(u, u), 0.0))

    def factor_distances(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        # chord formula is accurate for nearby points, arccosh for distant ones
        diff = x - y
        chord = np.sqrt(np.maximum(mink(diff, diff), 0.0))
        near = 2.0 * np.arcsinh(chord / 2.0)
        ch = -mink(x, y)
        far = np.arccosh(np.maximum(ch, 1.0))
        return np.where(ch < 2.0, near, far)

    def distance(self, x, y) -> float:
        """Riemannian distance; product factors combine in the l2 sense."""
        return float(np.sqrt(np.sum(self.factor_distances(x, y) ** 2)))

    def exp_map(self, x, u, t: float = 1.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        nu = np.sqrt(np.maximum(mink(u, u), 0.0)) * t
        return np.cosh(nu)[:, None] * x + (t * _sinhc(nu))[:, None] * u

    def log_map(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = self.factor_distances(x, y)
        w = y + mink(x, y)[:, None] * x
        w = np.where((d > 0)[:, None], w, 0.0)  # exact zero at y = x
        return w / _sinhc(d)[:, None]

    def geodesic(self, x, y, s: float) -> np.ndarray:
        return self.exp_map(x, self.log_map(x, y), s)

    def tangent_basis(self, x) -> np.ndarray:
        """Orthonormal frame at ``x``: parallel transport of the standard frame
        at o along the geodesic from o.  Shape ``(dim, n_factors, d + 1)``.

        Transport from o is continuous in ``x``, so the frame carries a
        consistent orientation over the whole space.
        """
        x = np.asarray(x, dtype=float)
        F, D = self.shape
        d = self.factor_dim
        basis = np.zeros((self.dim, F, D))
        o = np.zeros(D)
        o[-1] = 1.0
        for f in range(F):
            xf = x[f]
            coef = xf[:-1] / (1.0 + xf[-1])
            for k in range(d):
                v = np.zeros(D)
                v[k] = 1.0
                basis[f * d + k, f] = v + coef[k] * (o + xf)
        return basis

    def to_coords(self, x, u, basis=None) -> np.ndarray:
        if basis is None:
            basis = self.tangent_basis(x)
        return np.sum(mink(basis, np.asarray(u)[None]), axis=-1)

    def from_coords(self, x, c, basis=None) -> np.ndarray:
        if basis is None:
            basis = self.tangent_basis(x)
        return np.tensordot(np.asarray(c, dtype=float), basis, axes=1)

    # ------------------------------------------------------------------
    # Busemann calculus

    def busemann(self, p, x, xi) -> np.ndarray | float:
        """``B_p(x, theta)``; vectorised over a leading batch axis of ``xi``.

        Decreases at unit rate along the ray toward ``theta``.
        """
        xi = np.asarray(xi, dtype=float)
        terms = np.log(-mink(x, xi)) - np.log(-mink(p, xi))
        out = self.weight * np.sum(terms, axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def busemann_one_form(self, x, xi, u) -> np.ndarray | float:
        xi = np.asarray(xi, dtype=float)
        out = self.weight * np.sum(mink(u, xi) / mink(x, xi), axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def busemann_two_form(self, x, xi, u, v) -> np.ndarray | float:
        """Hessian of the Busemann function: ``g - dB (x) dB`` per factor."""
        xi = np.asarray(xi, dtype=float)
        den = mink(x, xi)
        du = mink(u, xi) / den
        dv = mink(v, xi) / den
        out = self.weight * np.sum(mink(u, v) - du * dv, axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def busemann_gradient(self, x, xi) -> np.ndarray:
        """Metric dual of ``dB_(x, theta)``."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        return self.weight * (xi / mink(x, xi)[:, None] + x)

    def ray(self, p, xi, t: float) -> np.ndarray:
        """Unit-speed ray from ``p`` toward the boundary point ``xi``."""
        p = np.asarray(p, dtype=float)
        xi = np.asarray(xi, dtype=float)
        direction = -self.busemann_gradient(p, xi)
        return self.exp_map(p, direction, t)

    def busemann_frame(self, y, xi, basis=None):
        """Per-factor one-form matrix ``a[f, j, k] = dB^f_(y, xi_j)(E_k)``.

        The full one-form is ``weight * a.sum(0)`` and the full two-form in the
        frame is ``weight * sum_f (P_f - a_f^T a_f)`` where ``P_f`` selects the
        frame vectors of factor ``f``.
        """
        if basis is None:
            basis = self.tangent_basis(y)
        xi = np.asarray(xi, dtype=float)
        den = mink(np.asarray(y)[None], xi)  # (N, F)
        num = mink(basis[None, :, :, :], xi[:, None, :, :])  # (N, n, F)
        return np.transpose(num / den[:, None, :], (2, 0, 1))

    def factor_projectors(self) -> np.ndarray:
        d = self.factor_dim
        P = np.zeros((self.n_factors, self.dim, self.dim))
        for f in range(self.n_factors):
            P[f, f * d:(f + 1) * d, f * d:(f + 1) * d] = np.eye(d)
        return P

    # ------------------------------------------------------------------
    # isometries

    def identity(self) -> np.ndarray:
        return np.broadcast_to(np.eye(self.ambient), (self.n_factors, self.ambient, self.ambient)).copy()

    def boost(self, axis: int, t: float, factor: int = 0) -> np.ndarray:
        """Translation by ``t`` along the geodesic through o in direction ``axis``."""
        g = self.identity()
        c, s = math.cosh(t), math.sinh(t)
        g[factor, axis, axis] = c
        g[factor, axis, -1] = s
        g[factor, -1, axis] = s
        g[factor, -1, -1] = c
        return g

    def isometry_from_generator(self, skew) -> np.ndarray:
        """``exp(J S)`` per factor for antisymmetric ``S`` (Minkowski-antisymmetric generator)."""
        skew = np.asarray(skew, dtype=float).reshape(self.n_factors, self.ambient, self.ambient)
        J = np.diag([1.0] * self.factor_dim + [-1.0])
        return np.stack([expm(J @ s) for s in skew])

    def random_isometry(self, seed) -> np.ndarray:
        rng = np.random.default_rng(seed)
        D = self.ambient
        skews = []
        for _ in range(self.n_factors):
            a = rng.uniform(-1.0, 1.0, size=(D, D))
            skews.append(np.triu(a, 1) - np.triu(a, 1).T)
        return self.isometry_from_generator(np.stack(skews))

    def check_isometry(self, g, tol: float = ISOMETRY_TOL) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        J = np.diag([1.0] * self.factor_dim + [-1.0])
        for gf in g:
            if np.max(np.abs(gf.T @ J @ gf - J)) > tol or gf[-1, -1] <= 0:
                raise ValueError("matrix does not preserve the Minkowski form")
        return g

    @staticmethod
    def compose(g, h) -> np.ndarray:
        return np.einsum("fij,fjk->fik", g, h)

    def inverse(self, g) -> np.ndarray:
        J = np.diag([1.0] * self.factor_dim + [-1.0])
        return np.stack([J @ gf.T @ J for gf in np.asarray(g)])

    def apply_point(self, g, x) -> np.ndarray:
        return self.project(np.einsum("fij,...fj->...fi", g, x))

    def apply_tangent(self, g, u) -> np.ndarray:
        return np.einsum("fij,...fj->...fi", g, u)

    def apply_boundary(self, g, xi) -> np.ndarray:
        out = np.einsum("fij,...fj->...fi", g, xi)
        return out / out[..., -1:]

    def apply_isometry(self, g, obj, kind: str = "point") -> np.ndarray:
        if kind == "point":
            return self.apply_point(g, obj)
        if kind == "tangent":
            return self.apply_tangent(g, obj)
        if kind == "boundary":
            return self.apply_boundary(g, obj)
        raise ValueError(f"unknown object kind {kind!r}")

    # ------------------------------------------------------------------
    # sampling

    def random_point(self, rng: np.random.Generator, radius: float) -> np.ndarray:
        """Exponential image of a point drawn uniformly from the radius-``radius``
        ball of ``T_o X``."""
        v = rng.standard_normal(self.dim)
        norm = np.linalg.norm(v)
        r = radius * rng.uniform() ** (1.0 / self.dim)
        u = np.zeros(self.shape)
        if norm > 0:
            u[:, :-1] = (r * v / norm).reshape(self.n_factors, self.factor_dim)
        return self.exp_map(self.origin(), u)

    def random_boundary(self, rng: np.random.Generator, size=None) -> np.ndarray:
        m = 1 if size is None else size
        u = rng.standard_normal((m, self.n_factors, self.factor_dim))
        xi = self.boundary_from_direction(u)
        return xi[0] if size is None else xi

    def random_tangent(self, rng: np.random.Generator, x, scale: float = 1.0) -> np.ndarray:
        c = rng.standard_normal(self.dim) * scale
        return self.from_coords(x, c)


MODELS = {
    "h2": Model("h2", 2),
    "h3": Model("h3", 3),
    "h4": Model("h4", 4),
    "h5": Model("h5", 5),
    "h2xh2": Model("h2xh2", 2, 2),
}


def get_model(name: str) -> Model:
    try:
        return MODELS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(MODELS)}") from None
