"""A small arithmetic language for kernels, densities and test functions.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Functions: exp, log, sin, cos, atan, abs (one argument), min, max (two or
more).  Names: u, x and x1, x2, ...  Anything else is rejected at parse
time with its column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

UNARY = {"exp": np.exp, "log": np.log, "sin": np.sin, "cos": np.cos, "atan": np.arctan, "abs": np.abs}
VARIADIC = {"min": np.minimum, "max": np.maximum}
_COMPONENT = re.compile(r"x([1-9][0-9]*)$")
_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
                    r"|(?P<op>[-+*/^(),]))")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    column: int  # 1-based


def tokenize(source: str) -> list[Token]:
    tokens, pos = [], 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if not m:
            col = pos + len(source[pos:]) - len(source[pos:].lstrip()) + 1
            raise ConfigError(f"unexpected character {source[col - 1]!r}", column=col)
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    tokens.append(Token("end", "", len(source) + 1))
    return tokens


class _Parser:
    def __init__(self, source: str, variables: frozenset[str] | None):
        self.tokens = tokenize(source)
        self.i = 0
        self.variables = variables

    def peek(self) -> Token:
        return self.tokens[self.i]

    def take(self, text: str | None = None) -> Token:
        tok = self.tokens[self.i]
        if text is not None and tok.text != text:
            found = tok.text or "end of input"
            raise ConfigError(f"expected {text!r}, found {found!r}", column=tok.column)
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ConfigError(f"unexpected {tok.text!r}", column=tok.column)
        return node

    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            node = (op, node, self.unary())
        return node

    def unary(self):
        if self.peek().text in ("+", "-"):
            op = self.take().text
            operand = self.unary()
            return ("neg", operand) if op == "-" else operand
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().text == "^":
            self.take()
            return ("^", base, self.unary())
        return base

    def atom(self):
        tok = self.peek()
        if tok.kind == "num":
            self.take()
            return ("num", float(tok.text))
        if tok.text == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if tok.kind == "name":
            self.take()
            name = tok.text
            if self.peek().text == "(":
                if name not in UNARY and name not in VARIADIC:
                    raise ConfigError(f"unknown function {name!r}", column=tok.column)
                self.take("(")
                args = [self.expr()]
                while self.peek().text == ",":
                    self.take()
                    args.append(self.expr())
                self.take(")")
                if name in UNARY and len(args) != 1:
                    raise ConfigError(f"{name} takes one argument, got {len(args)}", column=tok.column)
                if name in VARIADIC and len(args) < 2:
                    raise ConfigError(f"{name} takes at least two arguments", column=tok.column)
                return ("call", name, tuple(args))
            if not is_variable(name) or (self.variables is not None and name not in self.variables):
                raise ConfigError(f"unknown identifier {name!r}", column=tok.column)
            return ("var", name)
        found = tok.text or "end of input"
        raise ConfigError(f"unexpected {found!r}", column=tok.column)


def is_variable(name: str) -> bool:
    return name in ("u", "x") or bool(_COMPONENT.match(name))


def _names(node) -> set[str]:
    kind = node[0]
    if kind == "var":
        return {node[1]}
    if kind == "num":
        return set()
    if kind == "call":
        return set().union(*(_names(a) for a in node[2]))
    return set().union(*(_names(a) for a in node[1:]))


def _eval(node, env: dict):
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "var":
        return env[node[1]]
    if kind == "neg":
        return -_eval(node[1], env)
    if kind == "call":
        args = [_eval(a, env) for a in node[2]]
        if node[1] in UNARY:
            return UNARY[node[1]](args[0])
        out = args[0]
        for a in args[1:]:
            out = VARIADIC[node[1]](out, a)
        return out
    a, b = _eval(node[1], env), _eval(node[2], env)
    if kind == "+":
        return a + b
    if kind == "-":
        return a - b
    if kind == "*":
        return a * b
    if kind == "/":
        return a / b
    return np.power(a, b)


class Expression:
    """A parsed expression; call it with variable arrays as keyword arguments."""

    def __init__(self, source, variables=None):
        self.source = str(source)
        allowed = None if variables is None else frozenset(variables)
        self.tree = _Parser(self.source, allowed).parse()
        self.names = frozenset(_names(self.tree))

    def __call__(self, **env):
        missing = self.names - env.keys()
        if missing:
            raise KeyError(f"expression {self.source!r} needs {sorted(missing)}")
        with np.errstate(all="ignore"):
            out = _eval(self.tree, {k: np.asarray(v, dtype=float) for k, v in env.items() if k in self.names})
        return np.asarray(out, dtype=float)

    def __repr__(self):
        return f"Expression({self.source!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and other.source == self.source

    def __hash__(self):
        return hash(self.source)


def point_env(Y, dim: int = 1) -> dict:
    """Variables for a point batch: in R^n ``x`` is the Euclidean norm and ``x1..xn`` the coordinates."""
    Y = np.asarray(Y, dtype=float)
    if dim == 1:
        return {"x": Y}
    env = {"x": np.linalg.norm(Y, axis=-1)}
    for i in range(dim):
        env[f"x{i + 1}"] = Y[..., i]
    return env
