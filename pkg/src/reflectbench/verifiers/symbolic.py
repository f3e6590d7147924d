"""Equivalence checking over a small arithmetic LaTeX subset.

The grammar covers numbers, + - * / ^, \\frac, \\sqrt (with optional
index), \\pi, \\cdot/\\times/\\div, parentheses, brace groups, implicit
multiplication and single-letter variables with optional subscripts.
Anything outside the subset fails to parse and the pair is declared
non-equivalent (string comparison has already run by then).

Constant expressions are compared exactly over rationals. Everything
else is evaluated at shared seeded random assignments and compared
within a relative tolerance.
"""

from __future__ import annotations

import math
import random
import re
from fractions import Fraction
from typing import Optional

DEFAULT_TRIALS = 16
DEFAULT_SEED = 1729
DEFAULT_REL_TOL = 1e-8


class _ExprError(Exception):
    pass


class _EvalError(Exception):
    pass


_TOKEN = re.compile(
    r"""(?P<num>\d+\.\d*|\.\d+|\d+)
      | (?P<cmd>\\[a-zA-Z]+)
      | (?P<op>[+\-*/^(){}\[\]_])
      | (?P<letter>[A-Za-z])
      | (?P<space>\s+)
      | (?P<bad>.)
    """,
    re.VERBOSE,
)

_KNOWN_CMDS = {"\\frac", "\\sqrt", "\\pi", "\\cdot", "\\times", "\\div"}


def _tokenize(s: str) -> list[str]:
    tokens = []
    for m in _TOKEN.finditer(s):
        kind = m.lastgroup
        if kind == "space":
            continue
        if kind == "bad":
            raise _ExprError(f"unexpected character {m.group()!r}")
        if kind == "cmd" and m.group() not in _KNOWN_CMDS:
            raise _ExprError(f"unsupported command {m.group()!r}")
        tokens.append(m.group())
    return tokens


class _Parser:
    """Recursive descent over the token list; builds nested tuples."""

    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected: Optional[str] = None) -> str:
        tok = self.peek()
        if tok is None:
            raise _ExprError("unexpected end of expression")
        if expected is not None and tok != expected:
            raise _ExprError(f"expected {expected!r}, got {tok!r}")
        self.pos += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.peek() is not None:
            raise _ExprError(f"trailing input at {self.peek()!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            node = ("add" if op == "+" else "sub", node, rhs)
        return node

    _ATOM_STARTERS = ("(", "{", "\\frac", "\\sqrt", "\\pi")

    def _starts_atom(self, tok: Optional[str]) -> bool:
        if tok is None:
            return False
        return (
            tok in self._ATOM_STARTERS
            or tok[0].isdigit()
            or tok.startswith(".")
            or (len(tok) == 1 and tok.isalpha())
        )

    def term(self):
        node = self.unary()
        while True:
            tok = self.peek()
            if tok in ("*", "\\cdot", "\\times"):
                self.take()
                node = ("mul", node, self.unary())
            elif tok in ("/", "\\div"):
                self.take()
                node = ("div", node, self.unary())
            elif self._starts_atom(tok):
                node = ("mul", node, self.unary())  # implicit multiplication
            else:
                return node

    def unary(self):
        if self.peek() == "-":
            self.take()
            return ("neg", self.unary())
        if self.peek() == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == "^":
            self.take()
            return ("pow", base, self.exponent())
        return base

    def exponent(self):
        if self.peek() == "{":
            self.take("{")
            node = self.expr()
            self.take("}")
            return node
        if self.peek() == "-":
            self.take()
            return ("neg", self.exponent())
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok is None:
            raise _ExprError("unexpected end of expression")
        if tok == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if tok == "{":
            self.take()
            node = self.expr()
            self.take("}")
            return node
        if tok == "\\frac":
            self.take()
            num = self._braced()
            den = self._braced()
            return ("div", num, den)
        if tok == "\\sqrt":
            self.take()
            index = None
            if self.peek() == "[":
                self.take("[")
                index = self.expr()
                self.take("]")
            radicand = self._braced() if self.peek() == "{" else self.atom()
            return ("root", radicand, index)
        if tok == "\\pi":
            self.take()
            return ("pi",)
        if tok[0].isdigit() or tok.startswith("."):
            self.take()
            return ("num", Fraction(tok))
        if len(tok) == 1 and tok.isalpha():
            self.take()
            name = tok
            if self.peek() == "_":
                self.take()
                sub = self.peek()
                if sub == "{":
                    self.take("{")
                    chars = []
                    while self.peek() not in ("}", None):
                        chars.append(self.take())
                    self.take("}")
                    name += "_" + "".join(chars)
                else:
                    name += "_" + self.take()
            return ("var", name)
        raise _ExprError(f"cannot parse token {tok!r}")

    def _braced(self):
        self.take("{")
        node = self.expr()
        self.take("}")
        return node


def parse_expression(s: str):
    """Parse the LaTeX subset; raises _ExprError on anything else."""
    tokens = _tokenize(s)
    if not tokens:
        raise _ExprError("empty expression")
    return _Parser(tokens).parse()


def _variables(node, out: set[str]) -> None:
    kind = node[0]
    if kind == "var":
        out.add(node[1])
    elif kind in ("add", "sub", "mul", "div", "pow"):
        _variables(node[1], out)
        _variables(node[2], out)
    elif kind == "neg":
        _variables(node[1], out)
    elif kind == "root":
        _variables(node[1], out)
        if node[2] is not None:
            _variables(node[2], out)


def _nth_root_exact(value: Fraction, n: int) -> Optional[Fraction]:
    if n <= 0 or value < 0:
        return None

    def iroot(k: int) -> Optional[int]:
        # exact integer nth root by binary search; None when k is not a perfect power
        if k in (0, 1):
            return k
        lo, hi = 1, 1 << ((k.bit_length() + n - 1) // n + 1)
        while lo < hi:
            mid = (lo + hi) // 2
            if mid ** n < k:
                lo = mid + 1
            else:
                hi = mid
        return lo if lo ** n == k else None

    num = iroot(value.numerator)
    den = iroot(value.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def eval_exact(node) -> Fraction:
    """Exact rational value, or _EvalError when the node is irrational/variable."""
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "pi":
        raise _EvalError("pi is irrational")
    if kind == "var":
        raise _EvalError("free variable")
    if kind == "neg":
        return -eval_exact(node[1])
    if kind == "add":
        return eval_exact(node[1]) + eval_exact(node[2])
    if kind == "sub":
        return eval_exact(node[1]) - eval_exact(node[2])
    if kind == "mul":
        return eval_exact(node[1]) * eval_exact(node[2])
    if kind == "div":
        den = eval_exact(node[2])
        if den == 0:
            raise _EvalError("division by zero")
        return eval_exact(node[1]) / den
    if kind == "pow":
        exp = eval_exact(node[2])
        if exp.denominator != 1:
            raise _EvalError("non-integer exponent")
        if abs(exp) > 10_000:
            raise _EvalError("exponent too large for exact arithmetic")
        base = eval_exact(node[1])
        if base == 0 and exp < 0:
            raise _EvalError("zero to negative power")
        return base ** int(exp)
    if kind == "root":
        n = 2
        if node[2] is not None:
            idx = eval_exact(node[2])
            if idx.denominator != 1 or idx <= 0:
                raise _EvalError("bad root index")
            n = int(idx)
        root = _nth_root_exact(eval_exact(node[1]), n)
        if root is None:
            raise _EvalError("irrational root")
        return root
    raise _EvalError(f"unknown node {kind!r}")


def eval_numeric(node, assignment: dict[str, float]) -> float:
    kind = node[0]
    if kind == "num":
        return float(node[1])
    if kind == "pi":
        return math.pi
    if kind == "var":
        return assignment[node[1]]
    if kind == "neg":
        return -eval_numeric(node[1], assignment)
    if kind == "add":
        return eval_numeric(node[1], assignment) + eval_numeric(node[2], assignment)
    if kind == "sub":
        return eval_numeric(node[1], assignment) - eval_numeric(node[2], assignment)
    if kind == "mul":
        return eval_numeric(node[1], assignment) * eval_numeric(node[2], assignment)
    if kind == "div":
        den = eval_numeric(node[2], assignment)
        if abs(den) < 1e-12:
            raise _EvalError("division by (near) zero")
        return eval_numeric(node[1], assignment) / den
    if kind == "pow":
        base = eval_numeric(node[1], assignment)
        exp = eval_numeric(node[2], assignment)
        if base < 0 and exp != int(exp):
            raise _EvalError("negative base, fractional exponent")
        if base == 0 and exp < 0:
            raise _EvalError("zero to negative power")
        try:
            return base ** exp
        except OverflowError as exc:
            raise _EvalError(str(exc)) from exc
    if kind == "root":
        n = 2.0
        if node[2] is not None:
            n = eval_numeric(node[2], assignment)
            if n <= 0:
                raise _EvalError("bad root index")
        radicand = eval_numeric(node[1], assignment)
        if radicand < 0:
            raise _EvalError("negative radicand")
        return radicand ** (1.0 / n)
    raise _EvalError(f"unknown node {kind!r}")


def symbolic_equivalent(
    a: str,
    b: str,
    *,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
    rel_tol: float = DEFAULT_REL_TOL,
) -> bool:
    """True when both expressions parse and agree at every probe.

    Constant pairs compare exactly (so 2^{10} == 1024 holds without any
    tolerance); pairs with variables or irrational constants compare at
    ``trials`` shared assignments drawn from a seeded generator.
    """
    try:
        ta = parse_expression(a)
        tb = parse_expression(b)
    except _ExprError:
        return False

    exact_a: Optional[Fraction] = None
    exact_b: Optional[Fraction] = None
    try:
        exact_a = eval_exact(ta)
    except _EvalError:
        pass
    try:
        exact_b = eval_exact(tb)
    except _EvalError:
        pass
    if exact_a is not None and exact_b is not None:
        return exact_a == exact_b

    names: set[str] = set()
    _variables(ta, names)
    _variables(tb, names)
    ordered = sorted(names)
    rng = random.Random(seed)
    for _ in range(max(1, trials)):
        va = vb = None
        for _attempt in range(9):
            assignment = {name: rng.uniform(0.25, 2.25) for name in ordered}
            try:
                va = eval_numeric(ta, assignment)
                vb = eval_numeric(tb, assignment)
                break
            except _EvalError:
                continue
        if va is None or vb is None:
            return False
        if not (math.isfinite(va) and math.isfinite(vb)):
            return False
        if abs(va - vb) > rel_tol * max(1.0, abs(va), abs(vb)):
            return False
    return True
