"""A small expression language for potentials.

Grammar (``^`` is right associative, and ``-2^2`` reads as ``(-2)^2``)::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := unary ('^' factor)?
    unary   := '-' unary | primary
    primary := number | ident | ident '(' args ')' | '(' expr ')'

Variables are ``u0 .. u{m-1}`` (control) and ``x0 .. x{d-1}`` (state).
Evaluation is vectorized: every variable may be a numpy array and the
result broadcasts accordingly.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import geometry as geo
from .errors import ArityError, DomainError, ParseError, UnknownIdentifier
from .reachability import simulate

DIV_FLOOR = 1e-300

FUNCTIONS = {
    "abs": (1, 1),
    "exp": (1, 1),
    "log": (1, 1),
    "sqrt": (1, 1),
    "min": (2, None),
    "max": (2, None),
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # "u" or "x"
    index: int


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


def tokenize(src: str):
    """Yield ``(kind, text, byte_offset)``; ends with an ``eof`` token."""
    pos = 0
    raw = src.encode("utf-8")
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            offset = len(src[:pos].encode("utf-8"))
            raise ParseError(f"unexpected character {src[pos]!r}", offset,
                             {"number", "identifier", "operator"})
        kind = m.lastgroup
        if kind != "ws":
            yield kind, m.group(), len(src[:pos].encode("utf-8"))
        pos = m.end()
    yield "eof", "", len(raw)


class _Parser:
    def __init__(self, src, d, m):
        self.tokens = list(tokenize(src))
        self.i = 0
        self.d = d
        self.m = m

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text):
        kind, value, offset = self.tok
        if value != text or kind != "op":
            raise ParseError(f"expected {text!r}, found {value or 'end of input'!r}", offset, {text})
        self.advance()

    def parse(self):
        node = self.expr()
        kind, value, offset = self.tok
        if kind != "eof":
            raise ParseError(f"unexpected {value!r}", offset, {"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self):
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        base = self.unary()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            return BinOp("^", base, self.factor())
        return base

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.primary()

    def primary(self):
        kind, value, offset = self.tok
        if kind == "number":
            self.advance()
            return Num(float(value))
        if kind == "ident":
            self.advance()
            if self.tok[0] == "op" and self.tok[1] == "(":
                return self.call(value, offset)
            return self.variable(value, offset)
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected {value or 'end of input'!r}", offset,
                         {"number", "identifier", "(", "-"})

    def variable(self, name, offset):
        m = re.fullmatch(r"([ux])(\d+)", name)
        if m is None:
            raise UnknownIdentifier(f"unknown identifier {name!r}", offset, {"u<i>", "x<i>"})
        kind, idx = m.group(1), int(m.group(2))
        limit = self.m if kind == "u" else self.d
        if idx >= limit:
            raise UnknownIdentifier(f"{name} out of range ({kind} has {limit} components)", offset)
        return Var(kind, idx)

    def call(self, name, offset):
        if name not in FUNCTIONS:
            raise UnknownIdentifier(f"unknown function {name!r}", offset, set(FUNCTIONS))
        self.expect("(")
        args = [self.expr()]
        while self.tok[0] == "op" and self.tok[1] == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        lo, hi = FUNCTIONS[name]
        if len(args) < lo or (hi is not None and len(args) > hi):
            want = f"{lo}" if lo == hi else f"at least {lo}"
            raise ArityError(f"{name} takes {want} argument(s), got {len(args)}", offset)
        return Call(name, tuple(args))


def _uses_state(node) -> bool:
    if isinstance(node, Var):
        return node.kind == "x"
    if isinstance(node, Neg):
        return _uses_state(node.arg)
    if isinstance(node, BinOp):
        return _uses_state(node.left) or _uses_state(node.right)
    if isinstance(node, Call):
        return any(_uses_state(a) for a in node.args)
    return False


def to_source(node) -> str:
    """Fully parenthesized source text that parses back to the same tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return f"{node.kind}{node.index}"
    if isinstance(node, Neg):
        return f"(-{to_source(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    return f"{node.name}({', '.join(to_source(a) for a in node.args)})"


@dataclass(frozen=True)
class Potential:
    ast: Node
    d: int
    m: int
    source: str = ""

    @property
    def uses_state(self) -> bool:
        return _uses_state(self.ast)

    def __str__(self):
        return self.source or to_source(self.ast)

    def __call__(self, u, x=None):
        return evaluate(self, x, u)


def parse_potential(src: str, d: int, m: int) -> Potential:
    if not src or not src.strip():
        raise ParseError("empty expression", 0, {"number", "identifier", "(", "-"})
    return Potential(_Parser(src, d, m).parse(), d, m, src)


def constant(value: float, d: int, m: int) -> Potential:
    return Potential(Num(float(value)), d, m, repr(float(value)))


def shifted(p: Potential, c: float) -> Potential:
    return Potential(BinOp("+", p.ast, Num(float(c))), p.d, p.m)


def _eval(node, x, u):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        src = u if node.kind == "u" else x
        return src[..., node.index]
    if isinstance(node, Neg):
        return -_eval(node.arg, x, u)
    if isinstance(node, BinOp):
        a = _eval(node.left, x, u)
        b = _eval(node.right, x, u)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(np.abs(b) < DIV_FLOOR):
                raise DomainError("division by (near) zero", to_source(node), _inputs(x, u))
            return a / b
        a_arr, b_arr = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        if np.any((a_arr < 0) & (b_arr != np.round(b_arr))):
            raise DomainError("negative base with non-integer exponent", to_source(node), _inputs(x, u))
        if np.any((a_arr == 0) & (b_arr < 0)):
            raise DomainError("zero raised to a negative power", to_source(node), _inputs(x, u))
        return np.power(a_arr, b_arr)
    args = [_eval(a, x, u) for a in node.args]
    name = node.name
    if name == "abs":
        return np.abs(args[0])
    if name == "exp":
        return np.exp(args[0])
    if name == "log":
        if np.any(np.asarray(args[0]) <= 0):
            raise DomainError("log of a nonpositive value", to_source(node), _inputs(x, u))
        return np.log(args[0])
    if name == "sqrt":
        if np.any(np.asarray(args[0]) < 0):
            raise DomainError("sqrt of a negative value", to_source(node), _inputs(x, u))
        return np.sqrt(args[0])
    reduce = np.minimum if name == "min" else np.maximum
    out = args[0]
    for a in args[1:]:
        out = reduce(out, a)
    return out


def _inputs(x, u):
    def small(v):
        if v is None:
            return None
        v = np.asarray(v)
        return v.tolist() if v.size <= 16 else f"array{v.shape}"
    return {"x": small(x), "u": small(u)}


def evaluate(p: Potential, x, u):
    """Value of ``p`` at state ``x`` (ignored unless the potential uses it) and control ``u``.

    ``u`` has trailing dimension m, ``x`` trailing dimension d; leading
    dimensions broadcast.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u.reshape(1)
    if u.shape[-1] != p.m:
        raise ValueError(f"control must have {p.m} components")
    if p.uses_state:
        if x is None:
            raise ValueError("state-dependent potential needs x")
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != p.d:
            raise ValueError(f"state must have {p.d} components")
    out = np.asarray(_eval(p.ast, x, u), dtype=float)
    batch = u.shape[:-1]
    if p.uses_state:
        batch = np.broadcast_shapes(batch, x.shape[:-1])
    if not batch:
        return float(out)
    return np.broadcast_to(out, batch).copy()


def birkhoff_sum(p: Potential, sys, x, controls) -> float:
    """Sum of f along a control sequence; state potentials see phi(i, x, u)."""
    u = sys.check_controls(controls)
    if not p.uses_state:
        return float(np.sum(evaluate(p, None, u[None, ...])))
    states = simulate(sys.A, sys.B, np.asarray(x, dtype=float), u)[:-1]
    return float(np.sum(evaluate(p, states[None, ...], u[None, ...])))


@dataclass
class Minimum:
    argmin: np.ndarray
    value: float
    history: list
    empty_grid: bool = False


def _project_into(U, pts):
    inside = geo.contains_points(U, pts, 0.0)
    if inside.all():
        return pts
    if U.dim > geo.MAX_HULL_DIM:
        return pts[inside]
    out = pts.copy()
    for i in np.nonzero(~inside)[0]:
        out[i] = geo.project_point(U, pts[i])
    return out


def _axis_grid(center, half, n):
    axes = [np.linspace(c - h, c + h, n) for c, h in zip(center, half)]
    return np.array(list(itertools.product(*axes)), dtype=float)


def minimize_over_U(p: Potential, U, grid: int = 33, refine_iters: int = 10,
                    shrink: float = 0.3) -> Minimum:
    """Derivative-free minimum of a control potential over the polytope ``U``.

    Start from a grid over the bounding box (points outside ``U`` dropped)
    plus the vertices of ``U``; then repeatedly lay a finer grid around the
    incumbent, shrinking the half-width by ``shrink`` and projecting
    candidates into ``U``.  ``history`` holds the incumbent value after every
    round.
    """
    if p.uses_state:
        raise ValueError("minimize_over_U needs a control-only potential")
    if grid < 2:
        raise ValueError("grid must be at least 2")
    lo, hi = U.bounding_box()
    center = (lo + hi) / 2
    half = (hi - lo) / 2
    pts = _axis_grid(center, half, grid)
    pts = pts[geo.contains_points(U, pts, 0.0)]
    cands = np.vstack([pts, U.vertices]) if len(pts) else U.vertices
    values = evaluate(p, None, cands[None, ...])[0]
    best = int(np.argmin(values))
    x_best, f_best = cands[best].copy(), float(values[best])
    history = [f_best]
    for _ in range(refine_iters):
        half = half * shrink
        local = _project_into(U, _axis_grid(x_best, half, grid))
        if len(local):
            vals = evaluate(p, None, local[None, ...])[0]
            i = int(np.argmin(vals))
            if vals[i] < f_best:
                x_best, f_best = local[i].copy(), float(vals[i])
        history.append(f_best)
    return Minimum(x_best, f_best, history, empty_grid=not len(pts))
