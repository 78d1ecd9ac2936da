"""Tiny arithmetic expression grammar for JSON model files.

Supported: ``+ - * / ^`` (``^`` is right-associative power), unary minus,
parentheses, the functions ``sin cos exp sqrt``, the constants ``pi`` and
``e``, numeric literals, and a caller-supplied set of variable names
(e.g. ``eps1..epsq, x, y``).  Expressions compile to numpy-vectorised
callables; the source string is kept verbatim so documents round-trip
bit-exactly.
"""

from __future__ import annotations

import re

import numpy as np

from .exceptions import ExpressionError

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}
_CONSTANTS = {"pi": np.pi, "e": np.e}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ExpressionError(f"unexpected character {text[pos]!r} at {pos} in {text!r}")
        pos = m.end()
        if m.group("num") is not None:
            tokens.append(("num", float(m.group("num"))))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident")))
        else:
            tokens.append(("op", m.group("op")))
    tokens.append(("end", None))
    return tokens


class _Parser:
    """Recursive-descent / precedence-climbing parser producing tuple ASTs."""

    _BIN_BP = {"+": (10, 11), "-": (10, 11), "*": (20, 21), "/": (20, 21), "^": (31, 30)}

    def __init__(self, tokens, text):
        self.tokens = tokens
        self.i = 0
        self.text = text

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val = self.next()
        if kind != "op" or val != op:
            raise ExpressionError(f"expected {op!r} in {self.text!r}")

    def parse(self):
        node = self.parse_expr(0)
        if self.peek()[0] != "end":
            raise ExpressionError(f"trailing input in {self.text!r}")
        return node

    def parse_expr(self, min_bp):
        node = self.parse_prefix()
        while True:
            kind, val = self.peek()
            if kind != "op" or val not in self._BIN_BP:
                break
            lbp, rbp = self._BIN_BP[val]
            if lbp < min_bp:
                break
            self.next()
            rhs = self.parse_expr(rbp)
            node = ("bin", val, node, rhs)
        return node

    def parse_prefix(self):
        kind, val = self.next()
        if kind == "num":
            return ("num", val)
        if kind == "ident":
            if self.peek() == ("op", "("):
                if val not in _FUNCTIONS:
                    raise ExpressionError(f"unknown function {val!r} in {self.text!r}")
                self.next()
                arg = self.parse_expr(0)
                self.expect_op(")")
                return ("call", val, arg)
            return ("var", val)
        if kind == "op" and val == "(":
            node = self.parse_expr(0)
            self.expect_op(")")
            return node
        if kind == "op" and val == "-":
            # unary minus binds looser than ^ so -x^2 == -(x^2)
            return ("neg", self.parse_expr(25))
        if kind == "op" and val == "+":
            return self.parse_expr(25)
        raise ExpressionError(f"unexpected token {val!r} in {self.text!r}")


def parse(text):
    """Parse an expression string into an AST (tuples)."""
    return _Parser(_tokenize(text), text).parse()


def _codegen(node, variables):
    kind = node[0]
    if kind == "num":
        return repr(node[1])
    if kind == "var":
        name = node[1]
        if name in _CONSTANTS:
            return f"_const_{name}"
        if name not in variables:
            raise ExpressionError(
                f"unknown variable {name!r}; allowed: {sorted(variables)} and {sorted(_CONSTANTS)}"
            )
        return f"_v[{variables.index(name)!r}]"
    if kind == "call":
        return f"_fn_{node[1]}({_codegen(node[2], variables)})"
    if kind == "neg":
        return f"(-{_codegen(node[1], variables)})"
    if kind == "bin":
        op, lhs, rhs = node[1], node[2], node[3]
        left, right = _codegen(lhs, variables), _codegen(rhs, variables)
        if op == "^":
            return f"({left})**({right})"
        return f"({left}{op}{right})"
    raise ExpressionError(f"bad AST node {node!r}")


class Expression:
    """Compiled expression; call with keyword-free positional variable values.

    The ``source`` attribute is the original string, preserved verbatim.
    """

    def __init__(self, source, variables):
        self.source = source
        self.variables = tuple(variables)
        ast = parse(source)
        code = _codegen(ast, list(self.variables))
        ns = {f"_fn_{k}": v for k, v in _FUNCTIONS.items()}
        ns.update({f"_const_{k}": v for k, v in _CONSTANTS.items()})
        # code string is generated from the checked AST, not raw user input
        self._fn = eval(f"lambda _v: ({code})", ns)  # noqa: S307

    def __call__(self, *values):
        if len(values) != len(self.variables):
            raise ExpressionError(
                f"{self.source!r} expects {len(self.variables)} values, got {len(values)}"
            )
        return self._fn(values)

    def __repr__(self):
        return f"Expression({self.source!r}, vars={self.variables})"


def eps_variables(q):
    """Variable names eps1..epsq."""
    return tuple(f"eps{i + 1}" for i in range(q))
