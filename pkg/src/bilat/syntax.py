"""Propositions, signed statements, and their text format.

Propositions are plain nested tuples, e.g. ``("and", ("at", "p"), ("at", "q"))``,
so they hash and compare structurally and can be used as dict keys everywhere.
A statement is a force sign applied to a proposition: ``("+", prop)`` asserts
it, ``("-", prop)`` denies it.  The falsum marker used as a derivation
conclusion is the separate sentinel ``FALSUM``; it is not a statement and the
statement grammar cannot produce it.

Concrete syntax: ``&``, ``|``, ``~``, ``->`` with precedence ``~ > & > | > ->``,
``->`` right-associative, ``&``/``|`` left-associative, and a mandatory leading
``+`` or ``-`` sign.
"""

from __future__ import annotations

import re

Prop = tuple
Statement = tuple  # (sign, Prop) with sign in {"+", "-"}

PLUS = "+"
MINUS = "-"
FALSUM = "_|_"  # judgement-level sentinel, never inside a Statement

_ATOM_RE = re.compile(r"[a-z][a-z0-9_]*")


class BilatError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(BilatError):
    def __init__(self, message, offset, expected=()):
        super().__init__(f"{message} at offset {offset}" + (f" (expected {', '.join(sorted(expected))})" if expected else ""))
        self.offset = offset
        self.expected = frozenset(expected)


def atom(name: str) -> Prop:
    if not _ATOM_RE.fullmatch(name):
        raise ValueError(f"bad atom name {name!r}")
    return ("at", name)


def neg(p: Prop) -> Prop:
    return ("not", p)


def conj(l: Prop, r: Prop) -> Prop:
    return ("and", l, r)


def disj(l: Prop, r: Prop) -> Prop:
    return ("or", l, r)


def imp(l: Prop, r: Prop) -> Prop:
    return ("imp", l, r)


def plus(p: Prop) -> Statement:
    return (PLUS, p)


def minus(p: Prop) -> Statement:
    return (MINUS, p)


def conjugate(s: Statement) -> Statement:
    """Flip the force sign, keeping the proposition."""
    sign, p = s
    return (MINUS if sign == PLUS else PLUS, p)


def prop_size(p: Prop) -> int:
    """Number of nodes in the proposition tree."""
    tag = p[0]
    if tag == "at":
        return 1
    if tag == "not":
        return 1 + prop_size(p[1])
    return 1 + prop_size(p[1]) + prop_size(p[2])


def prop_depth(p: Prop) -> int:
    tag = p[0]
    if tag == "at":
        return 1
    if tag == "not":
        return 1 + prop_depth(p[1])
    return 1 + max(prop_depth(p[1]), prop_depth(p[2]))


def prop_atoms(p: Prop) -> frozenset:
    tag = p[0]
    if tag == "at":
        return frozenset((p[1],))
    if tag == "not":
        return prop_atoms(p[1])
    return prop_atoms(p[1]) | prop_atoms(p[2])


def statement_atoms(s: Statement) -> frozenset:
    return prop_atoms(s[1])


def is_atomic(s: Statement) -> bool:
    return s[1][0] == "at"


# ---------------------------------------------------------------------------
# Printing.  Levels: imp=1 < or=2 < and=3 < not=4 < atom=5; a child is
# parenthesized when its level is below the minimum its position requires.

_LEVEL = {"imp": 1, "or": 2, "and": 3, "not": 4, "at": 5}


def _render(p: Prop, min_level: int) -> str:
    tag = p[0]
    if tag == "at":
        return p[1]
    if tag == "not":
        body = "~" + _render(p[1], 4)
    elif tag == "and":
        body = _render(p[1], 3) + " & " + _render(p[2], 4)
    elif tag == "or":
        body = _render(p[1], 2) + " | " + _render(p[2], 3)
    elif tag == "imp":
        body = _render(p[1], 2) + " -> " + _render(p[2], 1)
    else:
        raise ValueError(f"not a proposition: {p!r}")
    if _LEVEL[tag] < min_level:
        return "(" + body + ")"
    return body


def print_prop(p: Prop) -> str:
    return _render(p, 1)


def print_statement(s: Statement) -> str:
    """Minimal-parenthesization text for a statement; inverse of parse_statement."""
    return s[0] + print_prop(s[1])


def statement_in_context(s: Statement) -> str:
    """Statement text with compound propositions parenthesized, for sequents."""
    sign, p = s
    if p[0] == "at":
        return sign + p[1]
    return sign + "(" + print_prop(p) + ")"


# ---------------------------------------------------------------------------
# Parsing: hand-rolled recursive descent over a token list so syntax errors
# carry a byte offset and the expected token set.

_TOKEN_RE = re.compile(r"\s*(->|[+\-~&|()]|[a-z][a-z0-9_]*)")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise ParseError(f"unexpected character {stripped[0]!r}", len(text) - len(stripped))
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def offset(self):
        return self.tokens[self.i][1] if self.i < len(self.tokens) else len(self.text)

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok[0]

    def expect(self, tok):
        if self.peek() != tok:
            raise ParseError(f"missing {tok!r}", self.offset(), expected={tok})
        self.take()

    def prop(self) -> Prop:
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return imp(left, self.prop())
        return left

    def disjunction(self) -> Prop:
        left = self.conjunction()
        while self.peek() == "|":
            self.take()
            left = disj(left, self.conjunction())
        return left

    def conjunction(self) -> Prop:
        left = self.negation()
        while self.peek() == "&":
            self.take()
            left = conj(left, self.negation())
        return left

    def negation(self) -> Prop:
        tok = self.peek()
        if tok == "~":
            self.take()
            return neg(self.negation())
        if tok == "(":
            self.take()
            inner = self.prop()
            self.expect(")")
            return inner
        if tok is not None and _ATOM_RE.fullmatch(tok):
            return atom(self.take())
        raise ParseError("missing proposition", self.offset(), expected={"~", "(", "atom"})


def parse_prop(text: str) -> Prop:
    parser = _Parser(text)
    p = parser.prop()
    if parser.peek() is not None:
        raise ParseError(f"trailing input {parser.peek()!r}", parser.offset())
    return p


def parse_statement(text: str) -> Statement:
    parser = _Parser(text)
    sign = parser.peek()
    if sign not in (PLUS, MINUS):
        raise ParseError("missing force sign", parser.offset(), expected={"+", "-"})
    parser.take()
    p = parser.prop()
    if parser.peek() is not None:
        raise ParseError(f"trailing input {parser.peek()!r}", parser.offset())
    return (sign, p)


def print_judgement(j) -> str:
    return FALSUM if j == FALSUM else print_statement(j)
