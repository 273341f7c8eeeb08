"""Candidate functions: a small expression language over (t, x_1..x_n).

Candidates are polynomials combined through abs() of affine forms. That
class keeps every kink on an affine hyperplane, so the sign-region
decomposition in `piecewise` is exact. Parsing is strict: any abs() whose
argument is not affine is rejected with the offending subtree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class CandidateError(ValueError):
    """Malformed candidate document or unsupported expression."""


@dataclass(frozen=True)
class GameFrame:
    """Time interval and spatial dimension of the game."""

    n: int
    t0: float
    theta0: float

    def __post_init__(self):
        if self.n < 1:
            raise CandidateError(f"spatial dimension must be >= 1, got {self.n}")
        if not self.t0 < self.theta0:
            raise CandidateError(f"need t0 < theta0, got [{self.t0}, {self.theta0}]")


@dataclass(frozen=True)
class Position:
    """A point (t, x) of the game frame."""

    t: float
    x: tuple[float, ...]

    @property
    def tx(self) -> np.ndarray:
        return np.array([self.t, *self.x])


class Poly:
    """Sparse polynomial in (t, x_1..x_n); exponent tuple -> coefficient."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: dict[tuple[int, ...], float] | None = None):
        self.n = n
        self.coeffs = {k: v for k, v in (coeffs or {}).items() if v != 0.0}

    @classmethod
    def const(cls, n: int, c: float) -> "Poly":
        return cls(n, {(0,) * (n + 1): float(c)})

    @classmethod
    def var(cls, n: int, index: int) -> "Poly":
        """index 0 is t, index i >= 1 is x_i."""
        e = [0] * (n + 1)
        e[index] = 1
        return cls(n, {tuple(e): 1.0})

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return Poly(self.n, out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __neg__(self) -> "Poly":
        return Poly(self.n, {k: -v for k, v in self.coeffs.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict[tuple[int, ...], float] = {}
        for k1, v1 in self.coeffs.items():
            for k2, v2 in other.coeffs.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0.0) + v1 * v2
        return Poly(self.n, out)

    def scale(self, c: float) -> "Poly":
        return Poly(self.n, {k: c * v for k, v in self.coeffs.items()})

    def degree(self) -> int:
        return max((sum(k) for k in self.coeffs), default=0)

    def degree_in_x(self) -> int:
        return max((sum(k[1:]) for k in self.coeffs), default=0)

    def is_affine(self) -> bool:
        return self.degree() <= 1

    def affine_coeffs(self) -> np.ndarray:
        """(c0, c_t, c_1..c_n) for an affine polynomial."""
        if not self.is_affine():
            raise CandidateError("polynomial is not affine")
        out = np.zeros(self.n + 2)
        for k, v in self.coeffs.items():
            if sum(k) == 0:
                out[0] = v
            else:
                out[1 + k.index(1)] = v
        return out

    def __call__(self, t: float, x) -> float:
        tx = np.array([t, *np.atleast_1d(x)], dtype=float)
        total = 0.0
        for k, v in self.coeffs.items():
            term = v
            for base, e in zip(tx, k):
                if e:
                    term *= base ** e
            total += term
        return total

    def partial(self, index: int) -> "Poly":
        """d/d(t or x_index); index 0 is t."""
        out: dict[tuple[int, ...], float] = {}
        for k, v in self.coeffs.items():
            if k[index] == 0:
                continue
            k2 = list(k)
            k2[index] -= 1
            out[tuple(k2)] = out.get(tuple(k2), 0.0) + v * k[index]
        return Poly(self.n, out)

    def gradient_at(self, t: float, x) -> tuple[float, np.ndarray]:
        """(d/dt, spatial gradient) at a point."""
        dt = self.partial(0)(t, x)
        grad = np.array([self.partial(i)(t, x) for i in range(1, self.n + 1)])
        return dt, grad


# AST node kinds
_OPS = {"add", "sub", "mul", "neg", "abs"}


@dataclass(frozen=True)
class ExprAst:
    kind: str  # const | var_t | var_x | add | sub | mul | neg | abs
    value: float = 0.0
    index: int = 0
    children: tuple["ExprAst", ...] = field(default_factory=tuple)

    def evaluate(self, t: float, x) -> float:
        x = np.atleast_1d(x)
        if self.kind == "const":
            return self.value
        if self.kind == "var_t":
            return float(t)
        if self.kind == "var_x":
            return float(x[self.index - 1])
        if self.kind == "add":
            return sum(c.evaluate(t, x) for c in self.children)
        if self.kind == "sub":
            return self.children[0].evaluate(t, x) - self.children[1].evaluate(t, x)
        if self.kind == "mul":
            out = 1.0
            for c in self.children:
                out *= c.evaluate(t, x)
            return out
        if self.kind == "neg":
            return -self.children[0].evaluate(t, x)
        if self.kind == "abs":
            return abs(self.children[0].evaluate(t, x))
        raise CandidateError(f"unknown node kind {self.kind!r}")

    def evaluate_batch(self, T: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Vectorized evaluation; T (Q,), X (Q, n) -> (Q,)."""
        if self.kind == "const":
            return np.full(T.shape[0], self.value)
        if self.kind == "var_t":
            return np.asarray(T, dtype=float).copy()
        if self.kind == "var_x":
            return np.asarray(X, dtype=float)[:, self.index - 1].copy()
        if self.kind == "add":
            out = self.children[0].evaluate_batch(T, X)
            for c in self.children[1:]:
                out = out + c.evaluate_batch(T, X)
            return out
        if self.kind == "sub":
            return (self.children[0].evaluate_batch(T, X)
                    - self.children[1].evaluate_batch(T, X))
        if self.kind == "mul":
            out = self.children[0].evaluate_batch(T, X)
            for c in self.children[1:]:
                out = out * c.evaluate_batch(T, X)
            return out
        if self.kind == "neg":
            return -self.children[0].evaluate_batch(T, X)
        if self.kind == "abs":
            return np.abs(self.children[0].evaluate_batch(T, X))
        raise CandidateError(f"unknown node kind {self.kind!r}")

    def abs_nodes(self) -> list["ExprAst"]:
        out = []
        if self.kind == "abs":
            out.append(self)
        for c in self.children:
            out.extend(c.abs_nodes())
        return out

    def describe(self) -> str:
        if self.kind == "const":
            return repr(self.value)
        if self.kind == "var_t":
            return "t"
        if self.kind == "var_x":
            return f"x{self.index}"
        inner = ", ".join(c.describe() for c in self.children)
        return f"{self.kind}({inner})"


@dataclass(frozen=True)
class CandidateValue:
    """Parsed candidate: frame + expression tree."""

    frame: GameFrame
    ast: ExprAst
    source: str = ""

    def evaluate(self, p: Position) -> float:
        return self.ast.evaluate(p.t, p.x)

    def terminal_payoff(self, x) -> float:
        return self.ast.evaluate(self.frame.theta0, x)


def _node_from_json(node, n: int) -> ExprAst:
    if not isinstance(node, dict):
        raise CandidateError(f"expression node must be an object, got {node!r}")
    if "const" in node:
        v = node["const"]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise CandidateError(f"const value must be a number, got {v!r}")
        return ExprAst("const", value=float(v))
    if "var" in node:
        if node["var"] == "t":
            return ExprAst("var_t")
        if node["var"] == "x":
            i = node.get("i")
            if not isinstance(i, int) or not (1 <= i <= n):
                raise CandidateError(f"x index must be in [1, {n}], got {i!r}")
            return ExprAst("var_x", index=i)
        raise CandidateError(f"unknown variable {node['var']!r}")
    if "op" in node:
        op = node["op"]
        if op not in _OPS:
            raise CandidateError(f"unknown op {op!r}")
        args = node.get("args", [])
        children = tuple(_node_from_json(a, n) for a in args)
        if op in ("neg", "abs") and len(children) != 1:
            raise CandidateError(f"op {op!r} takes exactly one argument")
        if op == "sub" and len(children) != 2:
            raise CandidateError("op 'sub' takes exactly two arguments")
        if op in ("add", "mul") and len(children) < 1:
            raise CandidateError(f"op {op!r} needs at least one argument")
        return ExprAst(op, children=children)
    raise CandidateError(f"unrecognized node {node!r}")


def to_poly(node: ExprAst, n: int, abs_subst: dict[int, float] | None = None) -> Poly:
    """Expand an AST into a Poly, substituting abs(g) -> sign * g when asked.

    abs_subst maps id(abs_node) -> sign. Without a substitution table, abs
    nodes are rejected (used for affinity checks of abs arguments).
    """
    if node.kind == "const":
        return Poly.const(n, node.value)
    if node.kind == "var_t":
        return Poly.var(n, 0)
    if node.kind == "var_x":
        return Poly.var(n, node.index)
    if node.kind == "add":
        out = Poly(n)
        for c in node.children:
            out = out + to_poly(c, n, abs_subst)
        return out
    if node.kind == "sub":
        return to_poly(node.children[0], n, abs_subst) - to_poly(node.children[1], n, abs_subst)
    if node.kind == "mul":
        out = Poly.const(n, 1.0)
        for c in node.children:
            out = out * to_poly(c, n, abs_subst)
        return out
    if node.kind == "neg":
        return -to_poly(node.children[0], n, abs_subst)
    if node.kind == "abs":
        if abs_subst is None or id(node) not in abs_subst:
            raise CandidateError(f"abs node without sign substitution: {node.describe()}")
        return to_poly(node.children[0], n, abs_subst).scale(abs_subst[id(node)])
    raise CandidateError(f"unknown node kind {node.kind!r}")


def parse_candidate(doc: str | dict) -> CandidateValue:
    """Parse a candidate document into frame + AST.

    Accepts the JSON text or an already-decoded object:
      {"n": int, "t0": num, "theta0": num, "expr": node}
    Float literals go through the standard decimal->binary64 path, so the
    parsed constants are bit-exact with respect to the written decimals.
    """
    if isinstance(doc, str):
        try:
            obj = json.loads(doc)
        except json.JSONDecodeError as e:
            raise CandidateError(f"malformed candidate document: {e}") from e
        source = doc
    else:
        obj = doc
        source = json.dumps(doc, sort_keys=True)
    for key in ("n", "t0", "theta0", "expr"):
        if key not in obj:
            raise CandidateError(f"candidate document missing {key!r}")
    frame = GameFrame(int(obj["n"]), float(obj["t0"]), float(obj["theta0"]))
    ast = _node_from_json(obj["expr"], frame.n)
    # every abs argument must be affine in (t, x); abs under abs is never affine
    for a in ast.abs_nodes():
        arg = a.children[0]
        if arg.abs_nodes():
            raise CandidateError(f"non-affine abs argument: {arg.describe()}")
        if not to_poly(arg, frame.n).is_affine():
            raise CandidateError(f"non-affine abs argument: {arg.describe()}")
    return CandidateValue(frame, ast, source)


def load_candidate(path) -> CandidateValue:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_candidate(fh.read())
