"""A small expression language for radial coefficient profiles.

Grammar (operators with standard precedence, ``^`` right-associative and
binding tighter than unary minus applied to its base)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | 'r' | 'pi' | 'e' | func '(' expr (',' expr)* ')' | '(' expr ')'

Functions: ``ln exp sin cos abs`` (unary), ``pow min max`` (binary).
Expressions are immutable after parsing and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, ExprSyntaxError, UnknownIdentifier

__all__ = [
    "ProfileExpr", "Num", "Var", "Const", "Unary", "Binary", "Call",
    "parse_profile", "format_expr", "eval_profile", "eval_profile_flagged",
]

FUNCTIONS = {"ln": 1, "exp": 1, "sin": 1, "cos": 1, "abs": 1, "pow": 2, "min": 2, "max": 2}
CONSTANTS = {"pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Node"
    rhs: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Num | Var | Const | Unary | Binary | Call


@dataclass(frozen=True)
class ProfileExpr:
    """A parsed profile expression; ``root`` is the tree, ``source`` the input text."""

    root: Node
    source: str = ""

    def __call__(self, r: float) -> float:
        return eval_profile(self, r)

    def __str__(self) -> str:
        return format_expr(self)


# ---------------------------------------------------------------------------
# tokenizer

_OPS = set("+-*/^(),")


def _tokenize(text):
    tokens = []  # (kind, value, position)
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lit = text[i:j]
            try:
                value = float(lit)
            except ValueError:
                raise ExprSyntaxError(i, "number", f"bad numeric literal {lit!r} at position {i}")
            tokens.append(("num", value, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(i, "token", f"unexpected character {ch!r} at position {i}")
    tokens.append(("eof", None, n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ExprSyntaxError(tok[2], kind)
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "eof":
            raise ExprSyntaxError(tok[2], "end of input")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.next()[0]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.next()[0]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "-":
            self.next()
            return Unary("-", self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.next()
            # right-associative; exponent may carry its own unary minus
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        tok = self.next()
        kind, value, position = tok
        if kind == "num":
            return Num(value)
        if kind == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "ident":
            if value == "r":
                return Var()
            if value in CONSTANTS:
                return Const(value)
            if self.peek()[0] == "(":
                if value not in FUNCTIONS:
                    raise UnknownIdentifier(value, position)
                self.next()
                args = [self.expr()]
                while self.peek()[0] == ",":
                    self.next()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[value]:
                    raise ExprSyntaxError(position, f"{FUNCTIONS[value]} argument(s) to {value}")
                return Call(value, tuple(args))
            raise UnknownIdentifier(value, position)
        raise ExprSyntaxError(position, "number, 'r', constant, function or '('")


def parse_profile(text: str) -> ProfileExpr:
    """Parse ``text`` into a :class:`ProfileExpr`.

    Raises :class:`ExprSyntaxError` (with position and expectation) or
    :class:`UnknownIdentifier` on failure.
    """
    if not text or not text.strip():
        raise ExprSyntaxError(0, "nonempty expression")
    return ProfileExpr(_Parser(text).parse(), text)


# ---------------------------------------------------------------------------
# printing (minimal parentheses; print-then-parse is structurally stable)

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _fmt_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _fmt(node, min_prec):
    if isinstance(node, Num):
        s, prec = _fmt_number(node.value), _PREC_ATOM
    elif isinstance(node, Var):
        s, prec = "r", _PREC_ATOM
    elif isinstance(node, Const):
        s, prec = node.name, _PREC_ATOM
    elif isinstance(node, Call):
        s = node.name + "(" + ", ".join(_fmt(a, 0) for a in node.args) + ")"
        prec = _PREC_ATOM
    elif isinstance(node, Unary):
        s, prec = "-" + _fmt(node.arg, _PREC_UNARY), _PREC_UNARY
    elif isinstance(node, Binary):
        if node.op in ("+", "-"):
            prec = _PREC_ADD
            s = _fmt(node.lhs, prec) + node.op + _fmt(node.rhs, prec + 1)
        elif node.op in ("*", "/"):
            prec = _PREC_MUL
            s = _fmt(node.lhs, prec) + node.op + _fmt(node.rhs, prec + 1)
        else:  # ^ right-associative, base must be an atom
            prec = _PREC_POW
            s = _fmt(node.lhs, _PREC_ATOM) + "^" + _fmt(node.rhs, _PREC_UNARY)
    else:
        raise TypeError(f"not an expression node: {node!r}")
    return "(" + s + ")" if prec < min_prec else s


def format_expr(expr) -> str:
    node = expr.root if isinstance(expr, ProfileExpr) else expr
    return _fmt(node, 0)


# ---------------------------------------------------------------------------
# evaluation

def _eval(node, r, state):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return r
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Unary):
        return -_eval(node.arg, r, state)
    if isinstance(node, Binary):
        a = _eval(node.lhs, r, state)
        b = _eval(node.rhs, r, state)
        try:
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                if b == 0.0:
                    raise DomainError(f"division by zero in {format_expr(node)}")
                return a / b
            return _power(a, b, node, state)
        except OverflowError:
            state["overflow"] = True
            return math.copysign(math.inf, a) if node.op != "^" else math.inf
    if isinstance(node, Call):
        args = [_eval(a, r, state) for a in node.args]
        return _call(node.name, args, node, state)
    raise TypeError(f"not an expression node: {node!r}")


def _power(a, b, node, state):
    # principal real branch only: negative base requires an integer exponent
    if a < 0 and b != int(b):
        raise DomainError(f"fractional power of negative base in {format_expr(node)}")
    if a == 0 and b < 0:
        raise DomainError(f"zero raised to negative power in {format_expr(node)}")
    try:
        return a ** b
    except OverflowError:
        state["overflow"] = True
        return math.inf


def _call(name, args, node, state):
    x = args[0]
    try:
        if name == "ln":
            if x <= 0:
                raise DomainError(f"ln of non-positive value {x!r}")
            return math.log(x)
        if name == "exp":
            return math.exp(x)
        if name == "sin":
            return math.sin(x)
        if name == "cos":
            return math.cos(x)
        if name == "abs":
            return abs(x)
        if name == "pow":
            return _power(x, args[1], node, state)
        if name == "min":
            return min(x, args[1])
        if name == "max":
            return max(x, args[1])
    except OverflowError:
        state["overflow"] = True
        return math.copysign(math.inf, x)
    raise UnknownIdentifier(name)


def eval_profile_flagged(expr, r: float) -> tuple[float, bool]:
    """Evaluate at radius ``r``; returns ``(value, overflowed)``.

    Overflow is reported as a signed infinity with the flag set; domain
    violations raise :class:`DomainError`.
    """
    node = expr.root if isinstance(expr, ProfileExpr) else expr
    state = {"overflow": False}
    value = _eval(node, r, state)
    if math.isinf(value):
        state["overflow"] = True
    return value, state["overflow"]


def eval_profile(expr, r: float) -> float:
    """IEEE-double evaluation of the tree at radius ``r``."""
    return eval_profile_flagged(expr, r)[0]
