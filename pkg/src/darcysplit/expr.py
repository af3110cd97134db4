"""Analytic coefficient expressions.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative
    atom    := NUMBER | IDENT | IDENT '(' args ')' | '(' expr ')'

Evaluation is vectorised over numpy arrays of coordinates. Domain errors
(division by zero, log of a nonpositive number, ...) raise :class:`EvalError`
instead of producing NaN or inf.
"""
from dataclasses import dataclass, field
import re

import numpy as np

from .errors import EvalError, ParseError, UnboundIdentifierError

__all__ = [
    "Num", "Var", "Neg", "BinOp", "Call", "parse", "to_string",
    "CoefficientField", "evaluate", "eval_field", "divergence_fd",
]

# Builtin coordinates; nx, ny exist only when evaluating on boundary edges.
COORDINATES = ("x", "y", "r", "nx", "ny")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


def _checked_div(a, b):
    if np.any(b == 0):
        raise EvalError("division by zero")
    return a / b


def _checked_log(a):
    if np.any(a <= 0):
        raise EvalError("log of a nonpositive number")
    return np.log(a)


def _checked_sqrt(a):
    if np.any(a < 0):
        raise EvalError("sqrt of a negative number")
    return np.sqrt(a)


def _checked_pow(a, b):
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    if np.any((a < 0) & (b != np.round(b))):
        raise EvalError("negative base raised to a non-integer power")
    if np.any((a == 0) & (b < 0)):
        raise EvalError("zero raised to a negative power")
    return np.power(a, b)


FUNCTIONS = {
    "exp": (1, np.exp),
    "log": (1, _checked_log),
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "sqrt": (1, _checked_sqrt),
    "abs": (1, np.abs),
    "pow": (2, _checked_pow),
    "min": (2, np.minimum),
    "max": (2, np.maximum),
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", len(text[:pos].encode()))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), len(text[:start].encode())))
        pos = m.end()
    tokens.append(("end", "", len(text.encode())))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.advance()
        if kind != "op" or val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", off)

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, off = self.advance()
        if kind == "num":
            return Num(float(val))
        if kind == "ident":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(val, off)
            return Var(val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", off)

    def call(self, name, offset):
        if name not in FUNCTIONS:
            raise ParseError(f"unknown function {name!r}", offset)
        self.expect("(")
        args = [self.expr()]
        while self.peek()[1] == "," and self.peek()[0] == "op":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        arity = FUNCTIONS[name][0]
        if len(args) != arity:
            raise ParseError(f"function {name!r} takes {arity} argument(s), got {len(args)}", offset)
        return Call(name, tuple(args))


def parse(text):
    """Parse ``text`` into an expression tree."""
    p = _Parser(text)
    node = p.expr()
    kind, val, off = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected trailing {val!r}", off)
    return node


def to_string(node):
    """Fully parenthesised rendering; ``parse(to_string(e)) == e``."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_string(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_string(node.left)} {node.op} {to_string(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_string(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


def free_identifiers(node):
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return free_identifiers(node.operand)
    if isinstance(node, BinOp):
        return free_identifiers(node.left) | free_identifiers(node.right)
    if isinstance(node, Call):
        return set().union(*(free_identifiers(a) for a in node.args))
    return set()


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            value = env[node.name]
        except KeyError:
            raise UnboundIdentifierError(node.name) from None
        return value() if callable(value) else value
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, BinOp):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return _checked_div(a, b)
        return _checked_pow(a, b)
    if isinstance(node, Call):
        fn = FUNCTIONS[node.name][1]
        return fn(*(_eval(a, env) for a in node.args))
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node, x, y, params=None, normal=None):
    """Evaluate ``node`` at coordinate arrays ``x``, ``y``; returns a float array."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    env = dict(params or {})
    env["x"] = x
    env["y"] = y
    env["r"] = lambda: np.hypot(x, y)
    if normal is not None:
        env["nx"] = np.asarray(normal[0], dtype=float)
        env["ny"] = np.asarray(normal[1], dtype=float)
    with np.errstate(all="ignore"):
        value = _eval(node, env)
    value = np.broadcast_to(np.asarray(value, dtype=float), np.broadcast(x, y).shape)
    if not np.all(np.isfinite(value)):
        raise EvalError("expression evaluated to a non-finite value (overflow or invalid operation)")
    return np.array(value)


@dataclass(frozen=True)
class CoefficientField:
    """A scalar or 2-vector field given by one or two parsed expressions."""

    kind: str
    components: tuple
    params: dict = field(default_factory=dict)
    sources: tuple = ()

    def __post_init__(self):
        if self.kind not in ("scalar", "vector2"):
            raise ValueError(f"unknown field kind {self.kind!r}")
        expected = 1 if self.kind == "scalar" else 2
        if len(self.components) != expected:
            raise ValueError(f"{self.kind} field needs {expected} component(s), got {len(self.components)}")

    @classmethod
    def scalar(cls, text, **params):
        return cls("scalar", (parse(text),), dict(params), (text,))

    @classmethod
    def vector(cls, text_x, text_y, **params):
        return cls("vector2", (parse(text_x), parse(text_y)), dict(params), (text_x, text_y))

    @classmethod
    def constant(cls, *values):
        texts = [repr(float(v)) for v in values]
        if len(texts) == 1:
            return cls.scalar(texts[0])
        return cls.vector(*texts)

    def with_params(self, **params):
        return CoefficientField(self.kind, self.components, {**self.params, **params}, self.sources)

    def unbound(self, boundary=False):
        bound = set(self.params) | {"x", "y", "r"} | ({"nx", "ny"} if boundary else set())
        names = set().union(*(free_identifiers(c) for c in self.components))
        return sorted(names - bound)

    def __call__(self, x, y, normal=None):
        """Vectorised evaluation: array for scalars, (2, ...) array for vectors."""
        vals = [evaluate(c, x, y, self.params, normal) for c in self.components]
        if self.kind == "scalar":
            return vals[0]
        return np.stack(vals)

    def __str__(self):
        if self.sources:
            return ", ".join(self.sources)
        return ", ".join(to_string(c) for c in self.components)


def eval_field(field, point, normal=None):
    """Evaluate ``field`` at a single point; float for scalars, tuple for vectors."""
    v = field(point[0], point[1], normal)
    if field.kind == "scalar":
        return float(v)
    return (float(v[0]), float(v[1]))


def divergence_fd(field, point, step):
    """Central-difference divergence of a vector field; second order in ``step``."""
    if field.kind != "vector2":
        raise ValueError("divergence needs a vector2 field")
    x, y = (np.asarray(c, dtype=float) for c in point)
    fx = field.components[0]
    fy = field.components[1]
    p = field.params
    d1 = (evaluate(fx, x + step, y, p) - evaluate(fx, x - step, y, p)) / (2 * step)
    d2 = (evaluate(fy, x, y + step, p) - evaluate(fy, x, y - step, p)) / (2 * step)
    out = d1 + d2
    return float(out) if out.ndim == 0 else out
