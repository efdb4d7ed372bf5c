"""Small arithmetic expression language with forward-mode first derivatives.

Grammar: numbers, ``+ - * / ^`` (``^`` is power, right associative), unary
minus, parentheses, the functions ``sin cos cosh sinh sqrt exp`` of one
argument, the constant ``pi``, chart variables ``u1 .. u{dim}`` and the scalar
parameter ``t``.  Expressions compile to callables evaluated on numpy arrays
with plain double arithmetic; derivatives come from dual numbers carried
through the same tree, so they are exact up to rounding.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass

import numpy as np

FUNCTIONS = ("sin", "cos", "cosh", "sinh", "sqrt", "exp")
_VAR = re.compile(r"u([1-9][0-9]*)$")


class ExpressionError(ValueError):
    """Syntax or name error in an expression; ``column`` is 1-based when known."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


@dataclass
class Dual:
    """Value ``val`` (shape S) with gradient ``grad`` (shape S + (dim,))."""

    val: np.ndarray
    grad: np.ndarray

    def __add__(self, o):
        return Dual(self.val + o.val, self.grad + o.grad)

    def __sub__(self, o):
        return Dual(self.val - o.val, self.grad - o.grad)

    def __mul__(self, o):
        return Dual(self.val * o.val, self.grad * o.val[..., None] + o.grad * self.val[..., None])

    def __truediv__(self, o):
        q = self.val / o.val
        return Dual(q, (self.grad - o.grad * q[..., None]) / o.val[..., None])

    def __neg__(self):
        return Dual(-self.val, -self.grad)


def _chain(x: Dual, val, slope) -> Dual:
    return Dual(val, x.grad * np.asarray(slope)[..., None])


def _dual_pow(a: Dual, b: Dual, b_const) -> Dual:
    if b_const is not None:
        # constant exponent: keeps integer powers of negative bases well defined
        val = np.power(a.val, b_const)
        slope = 0.0 if b_const == 0 else b_const * np.power(a.val, b_const - 1.0)
        return _chain(a, val, slope)
    val = np.power(a.val, b.val)
    log_a = np.log(a.val)
    grad = val[..., None] * (b.grad * log_a[..., None] + a.grad * (b.val / a.val)[..., None])
    return Dual(val, grad)


_DUAL_FUNCS = {
    "sin": lambda x: _chain(x, np.sin(x.val), np.cos(x.val)),
    "cos": lambda x: _chain(x, np.cos(x.val), -np.sin(x.val)),
    "sinh": lambda x: _chain(x, np.sinh(x.val), np.cosh(x.val)),
    "cosh": lambda x: _chain(x, np.cosh(x.val), np.sinh(x.val)),
    "exp": lambda x: _chain(x, np.exp(x.val), np.exp(x.val)),
    "sqrt": lambda x: _chain(x, np.sqrt(x.val), 0.5 / np.sqrt(x.val)),
}

_BINOPS = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/", ast.Pow: "^"}


class Expression:
    """A parsed expression over ``dim`` chart variables.

    >>> e = Expression("u1^2 * sin(u2)", dim=2)
    >>> float(e.value(np.array([2.0, np.pi / 2])))
    4.0
    """

    def __init__(self, text: str, dim: int, params: dict = None):
        self.text = text
        self.dim = int(dim)
        self.params = {"t": 0.0, **(params or {})}
        if "**" in text:
            raise ExpressionError("use '^' for powers", column=text.index("**") + 1)
        try:
            tree = ast.parse(text.replace("^", "**").strip(), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"syntax error: {exc.msg}", column=exc.offset) from None
        self._tree = tree.body
        self._validate(self._tree)

    def _validate(self, node):
        col = getattr(node, "col_offset", None)
        col = None if col is None else col + 1
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ExpressionError(f"operator {type(node.op).__name__} not allowed", col)
            self._validate(node.left)
            self._validate(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ExpressionError(f"operator {type(node.op).__name__} not allowed", col)
            self._validate(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                name = getattr(node.func, "id", "?")
                raise ExpressionError(f"unknown function {name!r} (allowed: {', '.join(FUNCTIONS)})", col)
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"{node.func.id} takes exactly one argument", col)
            self._validate(node.args[0])
        elif isinstance(node, ast.Name):
            self._variable_index(node.id, col)
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ExpressionError(f"unsupported literal {node.value!r}", col)
        else:
            raise ExpressionError(f"unsupported syntax {type(node).__name__}", col)

    def _variable_index(self, name, col=None):
        """Chart axis for ``u<k>``, or None for ``pi`` and parameters."""
        if name == "pi" or name in self.params:
            return None
        m = _VAR.match(name)
        if m and 1 <= int(m.group(1)) <= self.dim:
            return int(m.group(1)) - 1
        raise ExpressionError(f"unknown variable {name!r} (chart variables are u1..u{self.dim}, parameter t)", col)

    def variables(self) -> set:
        return {n.id for n in ast.walk(self._tree) if isinstance(n, ast.Name) and n.id != "pi"}

    def _const_value(self, node):
        """Numeric value when ``node`` has no chart-variable dependence, else None."""
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id == "pi":
                return float(np.pi)
            return float(self.params[node.id]) if node.id in self.params else None
        if isinstance(node, ast.UnaryOp):
            v = self._const_value(node.operand)
            return None if v is None else (-v if isinstance(node.op, ast.USub) else v)
        return None

    def _eval(self, node, U, seed):
        shape = U.shape[:-1]
        if isinstance(node, ast.Constant):
            return Dual(np.full(shape, float(node.value)), np.zeros(shape + (self.dim,)))
        if isinstance(node, ast.Name):
            k = self._variable_index(node.id)
            if k is None:
                c = np.pi if node.id == "pi" else float(self.params[node.id])
                return Dual(np.full(shape, c), np.zeros(shape + (self.dim,)))
            return Dual(U[..., k], np.broadcast_to(seed[k], shape + (self.dim,)))
        if isinstance(node, ast.UnaryOp):
            x = self._eval(node.operand, U, seed)
            return -x if isinstance(node.op, ast.USub) else x
        if isinstance(node, ast.Call):
            return _DUAL_FUNCS[node.func.id](self._eval(node.args[0], U, seed))
        a = self._eval(node.left, U, seed)
        b = self._eval(node.right, U, seed)
        op = _BINOPS[type(node.op)]
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a / b
        return _dual_pow(a, b, self._const_value(node.right))

    def evaluate(self, U):
        """``(value, gradient)`` at points ``U`` of shape (..., dim)."""
        U = np.asarray(U, float)
        if U.shape[-1] != self.dim:
            raise ExpressionError(f"expected points with {self.dim} coordinates, got shape {U.shape}")
        with np.errstate(all="ignore"):
            d = self._eval(self._tree, U, np.eye(self.dim))
        return np.asarray(d.val, float), np.asarray(d.grad, float)

    def value(self, U):
        return self.evaluate(U)[0]


def compile_map(texts, dim: int, params: dict = None):
    """Compile component expressions into ``(map, dmap)`` chart callbacks.

    ``map(U)`` returns (..., N) and ``dmap(U)`` returns (..., dim, N), the
    layout :class:`~kahlercheck.jetcalc.ImmersionDefinition` expects.
    """
    exprs = [Expression(t, dim, params) for t in texts]

    def evaluate_all(U):
        parts = [e.evaluate(U) for e in exprs]
        return np.stack([p[0] for p in parts], -1), np.stack([p[1] for p in parts], -1)

    return (lambda U: evaluate_all(U)[0]), (lambda U: evaluate_all(U)[1])


def compile_matrix(rows, dim: int, params: dict = None):
    """Matrix-valued field from a nested list of expression strings; returns ``U -> (..., r, c)``."""
    exprs = [[Expression(t, dim, params) for t in row] for row in rows]

    def field(U):
        U = np.asarray(U, float)
        return np.stack([np.stack([np.broadcast_to(e.value(U), U.shape[:-1]) for e in row], -1) for row in exprs], -2)

    return field
