"""Interval bounds on simplicial volume for small manifold expressions.

Expressions are calls with positional or keyword numeric arguments::

    surface(genus=2)
    hyperbolic(3, vol=2.029883212819307)
    product(surface(genus=2), surface(genus=3))
    connect_sum(opaque(dim=3, simvol=[2, 2]), opaque(dim=3, simvol=[3, inf]))

The text is parsed with :mod:`ast` (the grammar is a subset of Python call
syntax).  Every result is a :class:`BoundInterval`; exact values are
degenerate intervals.  Constants that do not come from a closed formula
(product constants, ideal simplex volumes) are named in the trace.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field

#: Volumes of regular ideal simplices; v3 = 3 * Lobachevsky(pi / 3).
V_REGISTRY = {2: math.pi, 3: 1.0149416064096536}


class ExpressionError(ValueError):
    def __init__(self, message: str, line: int = 1, col: int = 1):
        super().__init__(f"{message} (line {line}, column {col})")
        self.message = message
        self.line = line
        self.col = col


class ParseError(ExpressionError):
    pass


class SemanticError(ExpressionError):
    pass


class UnknownConstant(LookupError):
    pass


class Indeterminate(ArithmeticError):
    pass


# ----------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Node:
    pos: tuple[int, int] = field(default=(1, 1), compare=False, kw_only=True)


@dataclass(frozen=True)
class Surface(Node):
    genus: int

    @property
    def dim(self) -> int:
        return 2


@dataclass(frozen=True)
class Hyperbolic(Node):
    n: int
    vol: float

    @property
    def dim(self) -> int:
        return self.n


@dataclass(frozen=True)
class Opaque(Node):
    dimension: int
    lo: float
    hi: float
    vol: float | None = None

    @property
    def dim(self) -> int:
        return self.dimension


@dataclass(frozen=True)
class Product(Node):
    left: Node
    right: Node

    @property
    def dim(self) -> int:
        return self.left.dim + self.right.dim


@dataclass(frozen=True)
class ConnectSum(Node):
    left: Node
    right: Node

    @property
    def dim(self) -> int:
        return self.left.dim


@dataclass(frozen=True)
class BoundInterval:
    lo: float
    hi: float
    dim: int
    vol: float | None = None
    trace: tuple = ()

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    @property
    def exact(self) -> bool:
        return self.lo == self.hi

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": _json_float(self.hi), "dim": self.dim,
                "vol": self.vol, "trace": list(self.trace)}


def _json_float(x):
    return "inf" if math.isinf(x) else x


# ----------------------------------------------------------------------
# parsing

_SIGNATURES = {
    "surface": ("genus",),
    "hyperbolic": ("n", "vol"),
    "opaque": ("dim", "simvol", "vol"),
    "product": ("left", "right"),
    "connect_sum": ("left", "right"),
}
_REQUIRED = {"surface": 1, "hyperbolic": 2, "opaque": 2, "product": 2, "connect_sum": 2}


def parse(text: str) -> Node:
    """Parse an expression; errors carry 1-based line and column."""
    try:
        tree = ast.parse("(" + text + ")", mode="eval")
    except SyntaxError as exc:
        line = exc.lineno or 1
        col = (exc.offset or 1) - (1 if line == 1 else 0)
        if (line, col) == (1, 0):
            # blamed on the added paren; the bare text locates the real culprit
            try:
                ast.parse(text, mode="eval")
            except SyntaxError as bare:
                exc, line, col = bare, bare.lineno or 1, bare.offset or 1
        raise ParseError(exc.msg, line, max(col, 1)) from None
    return _build(tree.body)


def _pos(node) -> tuple[int, int]:
    line = getattr(node, "lineno", 1)
    col = getattr(node, "col_offset", 0) + 1
    return line, col - 1 if line == 1 else col


def _number(node, what: str) -> float:
    if isinstance(node, ast.Name) and node.id == "inf":
        return math.inf
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        value = _number(node.operand, what)
        return -value if isinstance(node.op, ast.USub) else value
    if isinstance(node, ast.Constant) and type(node.value) in (int, float):
        return float(node.value)
    raise SemanticError(f"{what} must be a number", *_pos(node))


def _integer(node, what: str) -> int:
    value = _number(node, what)
    if not math.isfinite(value) or value != int(value):
        raise SemanticError(f"{what} must be an integer", *_pos(node))
    return int(value)


def _build(node) -> Node:
    if not isinstance(node, ast.Call) or not isinstance(node.func, ast.Name):
        raise ParseError("expected name(arguments)", *_pos(node))
    name = node.func.id
    pos = _pos(node)
    if name not in _SIGNATURES:
        raise SemanticError(f"unknown manifold constructor {name!r}", *pos)
    params = _SIGNATURES[name]
    if len(node.args) > len(params):
        raise SemanticError(f"{name} takes at most {len(params)} arguments", *pos)
    args = dict(zip(params, node.args))
    for kw in node.keywords:
        if kw.arg not in params:
            raise SemanticError(f"{name} has no argument {kw.arg!r}", *_pos(kw.value))
        if kw.arg in args:
            raise SemanticError(f"argument {kw.arg!r} given twice", *_pos(kw.value))
        args[kw.arg] = kw.value
    missing = [p for p in params[:_REQUIRED[name]] if p not in args]
    if missing:
        raise SemanticError(f"{name} is missing {', '.join(missing)}", *pos)

    if name == "surface":
        genus = _integer(args["genus"], "genus")
        if genus < 2:
            raise SemanticError("genus must be >= 2", *_pos(args["genus"]))
        return Surface(genus, pos=pos)
    if name == "hyperbolic":
        n = _integer(args["n"], "dimension")
        vol = _number(args["vol"], "vol")
        if n < 2:
            raise SemanticError("dimension must be >= 2", *_pos(args["n"]))
        if not 0 < vol < math.inf:
            raise SemanticError("vol must be positive and finite", *_pos(args["vol"]))
        return Hyperbolic(n, vol, pos=pos)
    if name == "opaque":
        dim = _integer(args["dim"], "dim")
        if dim < 1:
            raise SemanticError("dim must be >= 1", *_pos(args["dim"]))
        sv = args["simvol"]
        if isinstance(sv, ast.List):
            if len(sv.elts) != 2:
                raise SemanticError("simvol interval needs [lo, hi]", *_pos(sv))
            lo, hi = (_number(e, "simvol") for e in sv.elts)
        else:
            lo = hi = _number(sv, "simvol")
        if not 0 <= lo <= hi or math.isinf(lo):
            raise SemanticError("simvol interval must satisfy 0 <= lo <= hi", *_pos(sv))
        vol = None
        if "vol" in args:
            vol = _number(args["vol"], "vol")
            if not 0 < vol < math.inf:
                raise SemanticError("vol must be positive and finite", *_pos(args["vol"]))
        return Opaque(dim, lo, hi, vol, pos=pos)

    left, right = _build(args["left"]), _build(args["right"])
    if name == "product":
        return Product(left, right, pos=pos)
    if left.dim != right.dim:
        raise SemanticError(f"connect_sum needs equal dimensions, got {left.dim} and {right.dim}", *pos)
    if left.dim < 3:
        raise SemanticError(f"connect_sum needs dimension >= 3, got dimension {left.dim} < 3", *pos)
    return ConnectSum(left, right, pos=pos)


# ----------------------------------------------------------------------
# evaluation


@dataclass
class EvalConfig:
    """``product_constants[n]`` overrides the product upper constant in
    dimension n; ``v_overrides[n]`` supplies or replaces an ideal simplex volume."""

    product_constants: dict = field(default_factory=dict)
    v_overrides: dict = field(default_factory=dict)


def simplex_constant(n: int, config: EvalConfig) -> tuple[float, dict]:
    if n in config.v_overrides:
        return float(config.v_overrides[n]), {"constant": f"v{n}", "value": float(config.v_overrides[n]),
                                                "source": "user override"}
    if n in V_REGISTRY:
        return V_REGISTRY[n], {"constant": f"v{n}", "value": V_REGISTRY[n], "source": "registry"}
    raise UnknownConstant(f"no value for v{n}; supply an override")


def _mul(a: float, b: float) -> float:
    if a == 0 or b == 0:
        return 0.0
    return a * b


def evaluate(e: Node, config: EvalConfig | None = None) -> BoundInterval:
    config = config or EvalConfig()
    if isinstance(e, Surface):
        value = 4.0 * e.genus - 4.0
        return BoundInterval(value, value, 2, 4.0 * math.pi * (e.genus - 1), (
            {"rule": "surface", "detail": f"||S_{e.genus}|| = 2|chi| = {value:g}"},
            {"constant": "v2", "value": V_REGISTRY[2], "source": "registry"}))
    if isinstance(e, Hyperbolic):
        v, note = simplex_constant(e.n, config)
        value = e.vol / v
        return BoundInterval(value, value, e.n, e.vol, (
            {"rule": "hyperbolic", "detail": f"vol / v{e.n}"}, note))
    if isinstance(e, Opaque):
        return BoundInterval(e.lo, e.hi, e.dim, e.vol, ({"rule": "opaque", "detail": "given"},))
    left, right = evaluate(e.left, config), evaluate(e.right, config)
    trace = left.trace + right.trace
    if isinstance(e, Product):
        n = left.dim + right.dim
        if n in config.product_constants:
            C = float(config.product_constants[n])
            note = {"constant": f"C({n})", "value": C, "source": "user override"}
        else:
            C = float(math.comb(n, left.dim))
            note = {"constant": f"C({n})", "value": C,
                    "source": f"configured default binomial({n}, {left.dim}); not a sharp constant"}
        vol = left.vol * right.vol if left.vol is not None and right.vol is not None else None
        return BoundInterval(left.lo * right.lo, _mul(C, _mul(left.hi, right.hi)), n, vol,
                             trace + ({"rule": "product", "detail": "[lo1*lo2, C*hi1*hi2]"}, note))
    if isinstance(e, ConnectSum):
        return BoundInterval(left.lo + right.lo, left.hi + right.hi, left.dim, None,
                             trace + ({"rule": "connect_sum", "detail": "additive in dimension >= 3"},))
    raise TypeError(f"cannot evaluate {type(e).__name__}")


def evaluate_text(text: str, config: EvalConfig | None = None) -> BoundInterval:
    return evaluate(parse(text), config)


def proportionality(b: BoundInterval, vol: float) -> BoundInterval:
    """Bound for a manifold with the same universal cover and volume ``vol``."""
    if b.vol is None:
        raise ValueError("proportionality needs a volume")
    t = vol / b.vol
    return BoundInterval(b.lo * t, _mul(b.hi, t), b.dim, vol,
                         b.trace + ({"rule": "proportionality", "detail": f"scaled by {t:g}"},))


def thurston_lower_bound(vol: float, K: float, dim: int) -> BoundInterval:
    """``||M|| >= Vol(M) / K`` for ``K`` bounding straightened simplex volumes."""
    if vol <= 0 or K <= 0:
        raise ValueError("volume and K must be positive")
    return BoundInterval(vol / K, math.inf, dim, vol,
                         ({"rule": "thurston", "detail": "Vol / K"},
                          {"constant": "K", "value": K, "source": "supplied (empirical)"}))


def degree_bound(N: BoundInterval, M: BoundInterval) -> int | None:
    """Largest degree allowed for a map N -> M; ``None`` if unbounded."""
    if N.dim != M.dim:
        raise ValueError("degree bound needs equal dimensions")
    if M.lo <= 0:
        raise Indeterminate("||M|| is not known to be positive")
    if N.hi == 0:
        return 0
    if math.isinf(N.hi):
        return None
    return math.floor(N.hi / M.lo * (1.0 + 1e-12))


def euler_bound(M: BoundInterval) -> float:
    """Upper bound on |Euler number| of flat n-plane bundles over M."""
    return _mul(2.0 ** -M.dim, M.hi)
