"""Barycentric straightening of simplices in hyperbolic space and H^2 x H^2."""

from .barycenter import (BarycenterResult, DegenerateHessian, NonConvergence, SolverError,
                         SolverSettings, barycenter)
from .boundary import BoundaryMeasure, QuadratureGrid, build_grid, ps_density
from .jacobian import JacobianReport, implicit_derivative, jacobian, jscan
from .models import MODELS, Model, get_model
from .straightening import VertexTuple, straighten, straighten_point

__version__ = "0.1.0"

__all__ = [
    "MODELS", "Model", "get_model",
    "BoundaryMeasure", "QuadratureGrid", "build_grid", "ps_density",
    "BarycenterResult", "SolverSettings", "SolverError", "NonConvergence", "DegenerateHessian",
    "barycenter",
    "VertexTuple", "straighten", "straighten_point",
    "JacobianReport", "implicit_derivative", "jacobian", "jscan",
]
