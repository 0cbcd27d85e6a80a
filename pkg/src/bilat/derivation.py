"""Derivation trees, the rule-schema checker, and substitution.

A derivation node applies one rule to an ordered tuple of premise derivations
and records its own conclusion.  Assumption leaves carry a label; rules that
bind assumptions (``+->I``, ``raa``, ``+|E``, ``-&E``) carry the set of labels
they discharge.  ``check_derivation`` verifies every node against its schema
and returns the sequent; everything downstream assumes checked input.

Labels are explicit and scoped to one binding site: a label may be discharged
at most once, all its leaves must sit inside the discharging node's subtree,
and discharging binds every open occurrence at once.  Vacuous discharge (a
label with no occurrences, or an empty discharge set) is permitted.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

from .basicsys import EMPTY_SYSTEM, BasicSystem
from .syntax import (FALSUM, MINUS, PLUS, BilatError, Statement, conjugate,
                     parse_statement, print_judgement, print_statement,
                     statement_in_context)

# Rule names double as the spelling in the derivation file format.
PLUS_AND_I, PLUS_AND_E1, PLUS_AND_E2 = "+&I", "+&E1", "+&E2"
MINUS_AND_I1, MINUS_AND_I2, MINUS_AND_E = "-&I1", "-&I2", "-&E"
PLUS_OR_I1, PLUS_OR_I2, PLUS_OR_E = "+|I1", "+|I2", "+|E"
MINUS_OR_I, MINUS_OR_E1, MINUS_OR_E2 = "-|I", "-|E1", "-|E2"
PLUS_NEG_I, PLUS_NEG_E = "+~I", "+~E"
MINUS_NEG_I, MINUS_NEG_E = "-~I", "-~E"
PLUS_IMP_I, PLUS_IMP_E = "+->I", "+->E"
MINUS_IMP_I, MINUS_IMP_E1, MINUS_IMP_E2 = "-->I", "-->E1", "-->E2"
BOT_RULE, RAA, BASIC, ASSUME = "bot", "raa", "basic", "assume"

LOGICAL_RULES = (
    PLUS_AND_I, PLUS_AND_E1, PLUS_AND_E2, MINUS_AND_I1, MINUS_AND_I2, MINUS_AND_E,
    PLUS_OR_I1, PLUS_OR_I2, PLUS_OR_E, MINUS_OR_I, MINUS_OR_E1, MINUS_OR_E2,
    PLUS_NEG_I, PLUS_NEG_E, MINUS_NEG_I, MINUS_NEG_E,
    PLUS_IMP_I, PLUS_IMP_E, MINUS_IMP_I, MINUS_IMP_E1, MINUS_IMP_E2,
)
COORDINATION_RULES = (BOT_RULE, RAA)
INTRO_RULES = frozenset((PLUS_AND_I, MINUS_AND_I1, MINUS_AND_I2, PLUS_OR_I1,
                         PLUS_OR_I2, MINUS_OR_I, PLUS_NEG_I, MINUS_NEG_I,
                         PLUS_IMP_I, MINUS_IMP_I))
BINDER_RULES = frozenset((PLUS_IMP_I, RAA, PLUS_OR_E, MINUS_AND_E))

_ARITY = {
    PLUS_AND_I: 2, PLUS_AND_E1: 1, PLUS_AND_E2: 1,
    MINUS_AND_I1: 1, MINUS_AND_I2: 1, MINUS_AND_E: 3,
    PLUS_OR_I1: 1, PLUS_OR_I2: 1, PLUS_OR_E: 3,
    MINUS_OR_I: 2, MINUS_OR_E1: 1, MINUS_OR_E2: 1,
    PLUS_NEG_I: 1, PLUS_NEG_E: 1, MINUS_NEG_I: 1, MINUS_NEG_E: 1,
    PLUS_IMP_I: 1, PLUS_IMP_E: 2, MINUS_IMP_I: 2, MINUS_IMP_E1: 1, MINUS_IMP_E2: 1,
    BOT_RULE: 2, RAA: 1,
}

_LABEL_RE = re.compile(r"[a-z][a-z0-9_]*")


class CheckError(BilatError):
    def __init__(self, path, rule, message):
        loc = ".".join(map(str, path)) if path else "root"
        super().__init__(f"at {loc} ({rule}): {message}")
        self.path = tuple(path)
        self.rule = rule
        self.reason = message


class SubstitutionError(BilatError):
    pass


class Derivation:
    """Immutable rule-application tree node."""

    __slots__ = ("rule", "conclusion", "premises", "discharges", "label",
                 "index", "_hash", "_size", "_open")

    def __init__(self, rule, conclusion, premises=(), discharges=frozenset(),
                 label=None, index=None):
        self.rule = rule
        self.conclusion = conclusion
        self.premises = tuple(premises)
        self.discharges = frozenset(discharges)
        self.label = label
        self.index = index
        self._size = 1 + sum(p._size for p in self.premises)
        self._hash = hash((rule, conclusion, self.premises, self.discharges,
                           label, index))
        self._open = None

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Derivation) or self._hash != other._hash:
            return False
        return (self.rule == other.rule and self.conclusion == other.conclusion
                and self.label == other.label and self.index == other.index
                and self.discharges == other.discharges
                and self.premises == other.premises)

    def __repr__(self):
        return f"<{self.rule_name()} {print_judgement(self.conclusion)} size={self._size}>"

    def rule_name(self):
        return f"basic:{self.index}" if self.rule == BASIC else self.rule


def assume(label: str, stmt: Statement) -> Derivation:
    return Derivation(ASSUME, stmt, label=label)


def infer(rule, conclusion, premises, discharges=(), index=None) -> Derivation:
    return Derivation(rule, conclusion, premises, frozenset(discharges), index=index)


def size(d: Derivation) -> int:
    """Node count of the derivation tree."""
    return d._size


def open_assumptions(d: Derivation) -> Counter:
    """Multiset of (label, statement) pairs for the open assumption leaves."""
    return Counter(dict(_open_map(d)))


def _open_map(d: Derivation):
    if d._open is None:
        if d.rule == ASSUME:
            d._open = ((( d.label, d.conclusion), 1),)
        else:
            merged = {}
            for p in d.premises:
                for key, n in _open_map(p):
                    merged[key] = merged.get(key, 0) + n
            for key in [k for k in merged if k[0] in d.discharges]:
                del merged[key]
            d._open = tuple(sorted(merged.items()))
    return d._open


@dataclass(frozen=True)
class Sequent:
    assumptions: tuple  # sorted ((statement, count), ...)
    conclusion: object

    def __str__(self):
        parts = []
        for stmt, n in self.assumptions:
            parts.extend([statement_in_context(stmt)] * n)
        ctx = ", ".join(parts)
        concl = FALSUM if self.conclusion == FALSUM else statement_in_context(self.conclusion)
        return (ctx + " " if ctx else "") + "|- " + concl


def sequent_of(d: Derivation) -> Sequent:
    counts = Counter()
    for (label, stmt), n in _open_map(d):
        counts[stmt] += n
    return Sequent(tuple(sorted(counts.items())), d.conclusion)


# ---------------------------------------------------------------------------
# Schema checking

def _is_stmt(j):
    return j != FALSUM


def _shape_error(node: Derivation, b: BasicSystem):
    """Local shape mismatch for one node, or None. Discharge scoping is global."""
    rule, c = node.rule, node.conclusion
    ps = [p.conclusion for p in node.premises]
    if rule == ASSUME:
        if node.premises or not _is_stmt(c):
            return "assumption leaves take no premises and conclude a statement"
        if node.label is None or not _LABEL_RE.fullmatch(node.label):
            return f"bad assumption label {node.label!r}"
        return None
    if rule == BASIC:
        schemas = b.schemas()
        if node.index is None or not 0 <= node.index < len(schemas):
            return f"basic rule index {node.index!r} out of range (system has {len(schemas)})"
        want_ps, want_c = schemas[node.index]
        if tuple(ps) != want_ps:
            return f"premises {ps} do not match basic schema {list(want_ps)}"
        if c != want_c:
            return f"conclusion {print_judgement(c)} does not match basic schema"
        return None
    if rule not in _ARITY:
        return f"unknown rule {rule!r}"
    if len(ps) != _ARITY[rule]:
        return f"expected {_ARITY[rule]} premises, got {len(ps)}"
    if rule == BOT_RULE:
        if c != FALSUM:
            return "conclusion must be falsum"
        if not all(map(_is_stmt, ps)):
            return "premises must be statements"
        if ps[1] != conjugate(ps[0]):
            return "premises must be conjugate statements"
        return None
    if rule == RAA:
        if ps[0] != FALSUM:
            return "premise must conclude falsum"
        if not _is_stmt(c):
            return "conclusion must be a statement"
        return None
    if not all(map(_is_stmt, ps)) or not _is_stmt(c):
        return "falsum may only appear under bot/raa"
    sign, p = c
    if rule == PLUS_AND_I:
        ok = sign == PLUS and p[0] == "and" and ps == [(PLUS, p[1]), (PLUS, p[2])]
    elif rule == PLUS_AND_E1:
        q = ps[0][1]
        ok = ps[0][0] == PLUS and q[0] == "and" and c == (PLUS, q[1])
    elif rule == PLUS_AND_E2:
        q = ps[0][1]
        ok = ps[0][0] == PLUS and q[0] == "and" and c == (PLUS, q[2])
    elif rule == MINUS_AND_I1:
        ok = sign == MINUS and p[0] == "and" and ps[0] == (MINUS, p[1])
    elif rule == MINUS_AND_I2:
        ok = sign == MINUS and p[0] == "and" and ps[0] == (MINUS, p[2])
    elif rule == MINUS_AND_E:
        q = ps[0][1]
        ok = ps[0][0] == MINUS and q[0] == "and" and ps[1] == c and ps[2] == c
    elif rule == PLUS_OR_I1:
        ok = sign == PLUS and p[0] == "or" and ps[0] == (PLUS, p[1])
    elif rule == PLUS_OR_I2:
        ok = sign == PLUS and p[0] == "or" and ps[0] == (PLUS, p[2])
    elif rule == PLUS_OR_E:
        q = ps[0][1]
        ok = ps[0][0] == PLUS and q[0] == "or" and ps[1] == c and ps[2] == c
    elif rule == MINUS_OR_I:
        ok = sign == MINUS and p[0] == "or" and ps == [(MINUS, p[1]), (MINUS, p[2])]
    elif rule == MINUS_OR_E1:
        q = ps[0][1]
        ok = ps[0][0] == MINUS and q[0] == "or" and c == (MINUS, q[1])
    elif rule == MINUS_OR_E2:
        q = ps[0][1]
        ok = ps[0][0] == MINUS and q[0] == "or" and c == (MINUS, q[2])
    elif rule == PLUS_NEG_I:
        ok = sign == PLUS and p[0] == "not" and ps[0] == (MINUS, p[1])
    elif rule == PLUS_NEG_E:
        q = ps[0][1]
        ok = ps[0][0] == PLUS and q[0] == "not" and c == (MINUS, q[1])
    elif rule == MINUS_NEG_I:
        ok = sign == MINUS and p[0] == "not" and ps[0] == (PLUS, p[1])
    elif rule == MINUS_NEG_E:
        q = ps[0][1]
        ok = ps[0][0] == MINUS and q[0] == "not" and c == (PLUS, q[1])
    elif rule == PLUS_IMP_I:
        ok = sign == PLUS and p[0] == "imp" and ps[0] == (PLUS, p[2])
    elif rule == PLUS_IMP_E:
        q = ps[0][1]
        ok = (ps[0][0] == PLUS and q[0] == "imp" and ps[1] == (PLUS, q[1])
              and c == (PLUS, q[2]))
    elif rule == MINUS_IMP_I:
        ok = (sign == MINUS and p[0] == "imp" and ps[0] == (PLUS, p[1])
              and ps[1] == (MINUS, p[2]))
    elif rule == MINUS_IMP_E1:
        q = ps[0][1]
        ok = ps[0][0] == MINUS and q[0] == "imp" and c == (PLUS, q[1])
    elif rule == MINUS_IMP_E2:
        q = ps[0][1]
        ok = ps[0][0] == MINUS and q[0] == "imp" and c == (MINUS, q[2])
    else:
        return f"unknown rule {rule!r}"
    return None if ok else "premises do not instantiate the rule schema"


def bracket_statement(rule, conclusion, major_conclusion, premise_index):
    """Statement a discharged assumption must have at the given minor premise."""
    if rule == RAA:
        return conjugate(conclusion) if premise_index == 0 else None
    if rule == PLUS_IMP_I:
        return (PLUS, conclusion[1][1]) if premise_index == 0 else None
    if rule == PLUS_OR_E and premise_index in (1, 2):
        return (PLUS, major_conclusion[1][premise_index])
    if rule == MINUS_AND_E and premise_index in (1, 2):
        return (MINUS, major_conclusion[1][premise_index])
    return None


def check_derivation(d: Derivation, b: BasicSystem = EMPTY_SYSTEM) -> Sequent:
    """Validate every node against its rule schema and return the sequent.

    Raises CheckError with the offending path on the first violation found.
    """
    leaf_paths = {}    # label -> list of (path, statement)
    binders = {}       # label -> (path, node)

    def collect(node, path):
        if node.rule == ASSUME:
            err = _shape_error(node, b)
            if err:
                raise CheckError(path, node.rule, err)
            rows = leaf_paths.setdefault(node.label, [])
            if rows and rows[0][1] != node.conclusion:
                raise CheckError(path, node.rule,
                                 f"label {node.label!r} used with two different statements")
            rows.append((path, node.conclusion))
            return
        err = _shape_error(node, b)
        if err:
            raise CheckError(path, node.rule, err)
        if node.discharges and node.rule not in BINDER_RULES:
            raise CheckError(path, node.rule, "this rule cannot discharge assumptions")
        for label in node.discharges:
            if label in binders:
                raise CheckError(path, node.rule,
                                 f"label {label!r} is discharged at two nodes")
            binders[label] = (path, node)
        for i, premise in enumerate(node.premises):
            collect(premise, path + (i,))

    collect(d, ())

    for label, (bpath, node) in binders.items():
        occurrences = leaf_paths.get(label, [])
        minors = set()
        for lpath, stmt in occurrences:
            if lpath[:len(bpath)] != bpath or len(lpath) == len(bpath):
                raise CheckError(bpath, node.rule,
                                 f"dangling discharge: label {label!r} occurs outside the subtree")
            child = lpath[len(bpath)]
            want = bracket_statement(node.rule, node.conclusion,
                                     node.premises[0].conclusion, child)
            if want is None:
                raise CheckError(bpath, node.rule,
                                 f"label {label!r} occurs at premise {child}, which has no bracket")
            if stmt != want:
                raise CheckError(bpath, node.rule,
                                 f"discharged label {label!r} has statement "
                                 f"{print_statement(stmt)}, bracket requires {print_statement(want)}")
            minors.add(child)
        if len(minors) > 1:
            raise CheckError(bpath, node.rule,
                             f"label {label!r} spans several minor premises")

    return sequent_of(d)


# ---------------------------------------------------------------------------
# Substitution

def all_labels(d: Derivation) -> set:
    labels = set()

    def walk(node):
        if node.rule == ASSUME:
            labels.add(node.label)
        labels.update(node.discharges)
        for p in node.premises:
            walk(p)

    walk(d)
    return labels


def _fresh_names(used):
    i = 0
    while True:
        i += 1
        name = f"s{i}"
        if name not in used:
            used.add(name)
            yield name


def _rename(d: Derivation, mapping) -> Derivation:
    if d.rule == ASSUME:
        new = mapping.get(d.label, d.label)
        return d if new == d.label else assume(new, d.conclusion)
    premises = tuple(_rename(p, mapping) for p in d.premises)
    discharges = frozenset(mapping.get(l, l) for l in d.discharges)
    if premises == d.premises and discharges == d.discharges:
        return d
    return Derivation(d.rule, d.conclusion, premises, discharges, index=d.index)


def _bound_labels(d: Derivation) -> set:
    bound = set(d.discharges)
    for p in d.premises:
        bound |= _bound_labels(p)
    return bound


def substitute(d: Derivation, bindings: dict) -> Derivation:
    """Replace every open assumption leaf labelled in ``bindings`` by its derivation.

    Bound labels inside inserted copies are freshened whenever they would
    collide with labels already present (and always for second and later
    copies), so label uniqueness survives duplication.
    """
    if not bindings:
        return d
    open_here = dict(_open_map(d))
    open_labels = {label for (label, _stmt) in open_here}
    for label, replacement in bindings.items():
        target = next(((l, s) for (l, s) in open_here if l == label), None)
        if target is None:
            raise SubstitutionError(
                f"label {label!r} is not an open assumption (discharged or absent)")
        if replacement.conclusion != target[1]:
            raise SubstitutionError(
                f"binding for {label!r} concludes {print_judgement(replacement.conclusion)}, "
                f"assumption is {print_statement(target[1])}")

    used = all_labels(d)
    for repl in bindings.values():
        used |= all_labels(repl)
    fresh = _fresh_names(used)
    copies_done = {label: 0 for label in bindings}

    def insert(label):
        replacement = bindings[label]
        bound = _bound_labels(replacement)
        keep_labels = (all_labels(d) - {label}) | set()
        collision = bound & keep_labels
        if copies_done[label] == 0 and not collision:
            copies_done[label] += 1
            return replacement
        copies_done[label] += 1
        mapping = {old: next(fresh) for old in sorted(bound)}
        return _rename(replacement, mapping)

    def walk(node):
        if node.rule == ASSUME:
            return insert(node.label) if node.label in bindings else node
        if not (set(l for (l, _), _n in _open_map(node)) & bindings.keys()):
            return node
        premises = tuple(walk(p) for p in node.premises)
        return Derivation(node.rule, node.conclusion, premises, node.discharges,
                          index=node.index)

    return walk(d)


# ---------------------------------------------------------------------------
# Canonical labels: bound groups get one shared label each, open leaves get
# distinct labels, all named by position.  Two derivations are identical up to
# renaming iff their canonical forms are equal.

def canonicalize_labels(d: Derivation) -> Derivation:
    mapping = {}
    counter = [0]

    def name_for(label):
        if label not in mapping:
            counter[0] += 1
            mapping[label] = f"h{counter[0]}"
        return mapping[label]

    def walk(node):
        if node.rule == ASSUME:
            return assume(name_for(node.label), node.conclusion)
        premises = tuple(walk(p) for p in node.premises)
        discharges = frozenset(name_for(l) for l in sorted(node.discharges))
        return Derivation(node.rule, node.conclusion, premises, discharges,
                          index=node.index)

    return walk(d)


# ---------------------------------------------------------------------------
# File format: one node per parenthesized group,
#   (ruleName conclusion (":discharge" label+)? premise*)
#   (assume label statement)
# Falsum conclusions are written "_|_".

def print_derivation(d: Derivation, indent: int = 0) -> str:
    pad = "  " * indent
    if d.rule == ASSUME:
        return f"{pad}(assume {d.label} {print_statement(d.conclusion)})"
    head = d.rule_name() + " " + print_judgement(d.conclusion)
    if d.discharges:
        head += " :discharge " + " ".join(sorted(d.discharges))
    if not d.premises:
        return f"{pad}({head})"
    body = "\n".join(print_derivation(p, indent + 1) for p in d.premises)
    return f"{pad}({head}\n{body})"


class _DerivScanner:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def error(self, message):
        raise CheckError((), "parse", f"{message} at offset {self.pos}")

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, ch):
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def word(self):
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and not self.text[self.pos].isspace() \
                and self.text[self.pos] not in "()":
            self.pos += 1
        if start == self.pos:
            self.error("expected a token")
        return self.text[start:self.pos]

    def statement_region(self):
        """Conclusion text: ends at a child '(', the node ')' or ':discharge'.

        A '(' opens a child exactly when the proposition before it is already
        complete, i.e. the last significant character was an atom or ')'.
        """
        self.skip_ws()
        start = self.pos
        depth = 0
        last_sig = None
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "(":
                if depth == 0 and (last_sig is not None and (last_sig.isalnum() or last_sig == ")")):
                    break
                depth += 1
            elif ch == ")":
                if depth == 0:
                    break
                depth -= 1
            elif ch == ":" and depth == 0:
                break
            if not ch.isspace():
                last_sig = ch
            self.pos += 1
        return self.text[start:self.pos].strip()

    def node(self):
        self.expect("(")
        rule = self.word()
        if rule == ASSUME:
            label = self.word()
            stmt = parse_statement(self.statement_region())
            self.expect(")")
            return assume(label, stmt)
        index = None
        if rule.startswith("basic:"):
            rule, _, idx = rule.partition(":")
            try:
                index = int(idx)
            except ValueError:
                self.error(f"bad basic rule index {idx!r}")
        elif rule == BASIC:
            self.error("basic rules need an index, e.g. basic:0")
        concl_text = self.statement_region()
        conclusion = FALSUM if concl_text == FALSUM else parse_statement(concl_text)
        discharges = []
        self.skip_ws()
        if self.text[self.pos:self.pos + 10] == ":discharge":
            self.pos += 10
            while True:
                self.skip_ws()
                if self.pos >= len(self.text) or self.text[self.pos] in "()":
                    break
                discharges.append(self.word())
            if not discharges:
                self.error(":discharge needs at least one label")
        premises = []
        while True:
            self.skip_ws()
            if self.pos >= len(self.text):
                self.error("unterminated derivation")
            if self.text[self.pos] == ")":
                self.pos += 1
                break
            premises.append(self.node())
        return Derivation(rule, conclusion, tuple(premises),
                          frozenset(discharges), index=index)


def parse_derivation(text: str) -> Derivation:
    scanner = _DerivScanner(text)
    d = scanner.node()
    scanner.skip_ws()
    if scanner.pos != len(scanner.text):
        scanner.error("trailing input after derivation")
    return d


def enumerate_derivations(b: BasicSystem, atoms, max_size: int):
    """Yield every well-formed derivation over the given atoms, smallest first.

    Propositions are bounded by ``max_size`` nodes, derivations by ``max_size``
    rule applications.  The stream is exhaustive and duplicate-free up to label
    renaming; labels come out in canonical positional form.
    """
    from . import corpus
    for item in corpus.iter_corpus(b, tuple(sorted(atoms)), max_size):
        yield corpus.to_derivation(item)
