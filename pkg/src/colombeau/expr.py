"""Closed-form expressions: a small arithmetic grammar parsed into sympy.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'
            | '<' expr '>'

Names: ``x``, ``y`` (space), ``eps`` (the net parameter), ``xi``, ``xi1``,
``xi2`` (frequency), ``t`` (profile variable), ``pi``, ``i`` (imaginary
unit).  Functions: ``exp log sin cos tan sqrt abs pow bump heaviside jb``
and ``cutoff(v, r)`` (smooth, 1 on |v| <= r/2, 0 on |v| >= r).
``<v>`` and ``jb(v)`` are the Japanese bracket sqrt(1 + v^2); in two
dimensions ``<xi>`` means sqrt(1 + xi1^2 + xi2^2).
"""
from __future__ import annotations

import functools
import math
import re

import numpy as np
import sympy as sp

from .errors import EvaluationError, ExpressionSyntaxError
from .jets import bump_q_jet, plateau_q_jet

__all__ = [
    "Expression",
    "parse",
    "SYMBOLS",
    "bump_expr",
    "cutoff_expr",
]

X, Y, EPS, XI, XI1, XI2, T = sp.symbols("x y eps xi xi1 xi2 t", real=True)
SYMBOLS = {"x": X, "y": Y, "eps": EPS, "xi": XI, "xi1": XI1, "xi2": XI2, "t": T}
_ALIASES = {"ε": "eps", "ξ": "xi", "ξ1": "xi1", "ξ2": "xi2", "ξ₁": "xi1", "ξ₂": "xi2"}


class PlateauQ(sp.Function):
    """k-th q-derivative of the cutoff plateau (1 for q <= 1/4, 0 for q >= 1)."""

    nargs = 2
    is_real = True

    def fdiff(self, argindex=1):
        if argindex != 1:
            raise sp.ArgumentIndexError(self, argindex)
        q, k = self.args
        return PlateauQ(q, k + 1)


class BumpQ(sp.Function):
    """k-th q-derivative of exp(-1/(1-q)) on q < 1, zero for q >= 1."""

    nargs = 2
    is_real = True

    def fdiff(self, argindex=1):
        if argindex != 1:
            raise sp.ArgumentIndexError(self, argindex)
        q, k = self.args
        return BumpQ(q, k + 1)


def bump_expr(v):
    """The unnormalized bump exp(-1/(1-v^2)) on |v| < 1."""
    return BumpQ(v**2, 0)


def cutoff_expr(v, r):
    """Smooth cutoff: 1 on |v| <= r/2, 0 on |v| >= r."""
    return PlateauQ(v**2 / r**2, 0)


def _qjet_np(jetfn):
    def fn(q, k):
        k = int(k)
        q = np.asarray(np.real(q), dtype=float)
        return math.factorial(k) * jetfn(q, k)[k]

    return fn


def _heaviside_np(x, *args):
    return np.heaviside(np.real(x), 0.5)


def _dirac_np(x, *args):
    return np.zeros_like(np.real(np.asarray(x, dtype=float)))


_NUMPY_MODULES = [
    {
        "Heaviside": _heaviside_np,
        "DiracDelta": _dirac_np,
        "PlateauQ": _qjet_np(plateau_q_jet),
        "BumpQ": _qjet_np(bump_q_jet),
    },
    "numpy",
]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_εξ][A-Za-z_0-9₁₂εξ]*)"
    r"|(?P<op>\*\*|[-+*/^(),<>·−⟨⟩]))"
)


def _tokenize(text):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind == "op":
            value = {"·": "*", "−": "-", "⟨": "<", "⟩": ">"}.get(value, value)
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, dimension):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.dimension = dimension

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            raise ExpressionSyntaxError(f"expected {value!r}, found {tok[1] or 'end'!r}", tok[2], self.text)
        self.i += 1
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionSyntaxError(f"unexpected token {tok[1]!r}", tok[2], self.text)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            e = e * rhs if op == "*" else e / rhs
        return e

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            return base ** self.unary()
        return base

    def bracket(self, v):
        if v == XI and self.dimension == 2:
            return sp.sqrt(1 + XI1**2 + XI2**2)
        return sp.sqrt(1 + v**2)

    def atom(self):
        kind, value, pos = self.take()
        if kind == "num":
            return sp.nsimplify(value, rational=True) if "." not in value and "e" not in value.lower() else sp.Float(value)
        if value == "(":
            e = self.expr()
            self.take(")")
            return e
        if value == "<":
            e = self.expr()
            self.take(">")
            return self.bracket(e)
        if kind != "name":
            raise ExpressionSyntaxError(f"unexpected token {value or 'end'!r}", pos, self.text)
        name = _ALIASES.get(value, value)
        if self.peek()[1] == "(":
            self.take("(")
            args = [self.expr()]
            while self.peek()[1] == ",":
                self.take()
                args.append(self.expr())
            self.take(")")
            return self.call(name, args, pos)
        if name in SYMBOLS:
            return SYMBOLS[name]
        if name == "pi":
            return sp.pi
        if name in ("i", "I"):
            return sp.I
        raise ExpressionSyntaxError(f"unknown name {value!r}", pos, self.text)

    def call(self, name, args, pos):
        unary = {
            "exp": sp.exp,
            "log": sp.log,
            "sin": sp.sin,
            "cos": sp.cos,
            "tan": sp.tan,
            "sqrt": sp.sqrt,
            "abs": sp.Abs,
            "bump": bump_expr,
            "heaviside": lambda a: sp.Heaviside(a, sp.S.Half),
            "jb": self.bracket,
        }
        if name in unary:
            if len(args) != 1:
                raise ExpressionSyntaxError(f"{name} takes one argument", pos, self.text)
            return unary[name](args[0])
        if name == "cutoff":
            if len(args) != 2:
                raise ExpressionSyntaxError("cutoff takes two arguments (v, r)", pos, self.text)
            return cutoff_expr(args[0], args[1])
        if name == "pow":
            if len(args) != 2:
                raise ExpressionSyntaxError("pow takes two arguments", pos, self.text)
            return args[0] ** args[1]
        raise ExpressionSyntaxError(f"unknown function {name!r}", pos, self.text)


class Expression:
    """A sympy expression with cached numpy evaluation and differentiation."""

    def __init__(self, sym, text: str | None = None):
        self.sym = sp.sympify(sym)
        self.text = text if text is not None else str(self.sym)

    @functools.cached_property
    def free(self) -> frozenset:
        return frozenset(s.name for s in self.sym.free_symbols)

    def depends_on(self, name: str) -> bool:
        return name in self.free

    @functools.cached_property
    def _fn(self):
        args = [SYMBOLS[n] for n in sorted(SYMBOLS)]
        return sp.lambdify(args, self.sym, modules=_NUMPY_MODULES)

    def __call__(self, **values):
        """Evaluate with numpy broadcasting; missing variables default to 0."""
        args = [values.get(n, 0.0) for n in sorted(SYMBOLS)]
        with np.errstate(all="ignore"):
            out = self._fn(*args)
        shape = np.broadcast(*[np.asarray(a) for a in args]).shape
        out = np.broadcast_to(np.asarray(out), shape)
        if np.iscomplexobj(out) and not np.any(np.imag(out)):
            out = np.real(out)
        return np.array(out)

    def evaluate_checked(self, **values):
        out = self(**values)
        bad = ~np.isfinite(out)
        if np.any(bad):
            idx = tuple(int(i[0]) for i in np.nonzero(bad))
            loc = {k: np.asarray(v)[idx] if np.ndim(v) else v for k, v in values.items() if np.ndim(v)}
            raise EvaluationError(f"non-finite value of {self.text!r} at {loc or idx}", location=loc or idx)
        return out

    @functools.lru_cache(maxsize=None)
    def diff(self, *spec) -> "Expression":
        """``diff('x', 2, 'y', 1)`` style partial derivatives."""
        if not spec:
            return self
        args = []
        for name, k in zip(spec[::2], spec[1::2]):
            if k:
                args.extend([SYMBOLS[name], k])
        if not args:
            return self
        return Expression(sp.diff(self.sym, *args))

    def subs(self, **values) -> "Expression":
        return Expression(self.sym.subs({SYMBOLS[k]: v for k, v in values.items()}))

    def is_polynomial_in(self, *names) -> bool:
        return self.sym.is_polynomial(*[SYMBOLS[n] for n in names])

    def __str__(self):
        return self.text

    def __repr__(self):
        return f"Expression({self.text!r})"

    def __hash__(self):
        return hash(self.sym)

    def __eq__(self, other):
        return isinstance(other, Expression) and self.sym == other.sym


def parse(text: str, dimension: int = 1) -> Expression:
    """Parse ``text`` in the expression grammar."""
    if isinstance(text, Expression):
        return text
    if isinstance(text, (int, float)):
        return Expression(sp.nsimplify(text), str(text))
    return Expression(_Parser(text, dimension).parse(), text)
