"""Basic systems: atomic rules, negative axioms, well-foundedness, heights.

A basic system supplies the atomic layer a derivation can stand on: positive
rules ``+a <- b, c.`` (conclusion derivable once all premises are), premise
free rules ``+a.``, and negative axioms ``-b.``.  The dependency relation
(conclusion depends on premises) must be acyclic; heights are the resulting
well-founded ranks and ground the validity recursion for atoms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .syntax import MINUS, PLUS, BilatError, Statement, atom, minus, plus

_ATOM_RE = re.compile(r"[a-z][a-z0-9_]*")


class BasicSystemError(BilatError):
    pass


class CycleError(BasicSystemError):
    def __init__(self, cycle):
        super().__init__("dependency cycle: " + " <- ".join(cycle + [cycle[0]]))
        self.cycle = list(cycle)


class HeightUndefined(BasicSystemError):
    pass


@dataclass(frozen=True)
class BasicRule:
    premises: tuple
    conclusion: str

    def __repr__(self):
        if not self.premises:
            return f"+{self.conclusion}."
        return f"+{self.conclusion} <- {', '.join(self.premises)}."


@dataclass(frozen=True)
class BasicSystem:
    rules: tuple = ()
    negative_axioms: frozenset = frozenset()
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for rule in self.rules:
            if not _ATOM_RE.fullmatch(rule.conclusion) or not all(_ATOM_RE.fullmatch(q) for q in rule.premises):
                raise BasicSystemError(f"non-atomic name in rule {rule!r}")
        cycle = _find_cycle(self.rules)
        if cycle is not None:
            raise CycleError(cycle)

    def __hash__(self):
        return hash((self.rules, self.negative_axioms))

    def atoms(self) -> frozenset:
        names = set(self.negative_axioms)
        for rule in self.rules:
            names.add(rule.conclusion)
            names.update(rule.premises)
        return frozenset(names)

    def schemas(self) -> tuple:
        """All rule schemas by index: positive rules first, then negative axioms.

        Each schema is ``(premise_statements, conclusion_statement)``; a
        derivation node ``basic:i`` must instantiate schema ``i`` exactly.
        """
        key = "schemas"
        if key not in self._memo:
            rows = [(tuple(plus(atom(q)) for q in r.premises), plus(atom(r.conclusion))) for r in self.rules]
            rows += [((), minus(atom(b))) for b in sorted(self.negative_axioms)]
            self._memo[key] = tuple(rows)
        return self._memo[key]


EMPTY_SYSTEM = BasicSystem()


def _find_cycle(rules):
    deps = {}
    for rule in rules:
        deps.setdefault(rule.conclusion, set()).update(rule.premises)
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {a: WHITE for a in deps}
    stack = []

    def visit(a):
        colour[a] = GREY
        stack.append(a)
        for b in sorted(deps.get(a, ())):
            if colour.get(b, WHITE) == GREY:
                return stack[stack.index(b):]
            if colour.get(b, WHITE) == WHITE and b in deps:
                found = visit(b)
                if found is not None:
                    return found
        stack.pop()
        colour[a] = BLACK
        return None

    for a in sorted(deps):
        if colour[a] == WHITE:
            found = visit(a)
            if found is not None:
                return found
    return None


def derivable_plus(b: BasicSystem, a: str) -> bool:
    """Whether ``+a`` is in the forward-chaining closure of the positive rules."""
    return a in _positive_closure(b)


def _positive_closure(b: BasicSystem) -> frozenset:
    key = "closure"
    if key not in b._memo:
        known = set()
        changed = True
        while changed:
            changed = False
            for rule in b.rules:
                if rule.conclusion not in known and all(q in known for q in rule.premises):
                    known.add(rule.conclusion)
                    changed = True
        b._memo[key] = frozenset(known)
    return b._memo[key]


def is_consistent(b: BasicSystem) -> bool:
    """No atom is both positively derivable and negatively an axiom."""
    return not (_positive_closure(b) & b.negative_axioms)


def height(b: BasicSystem, a: str, premise_agg: str = "max") -> int:
    """Well-founded rank of ``a`` over the dependency relation.

    Rank 0 for premise-free rule conclusions and negative-axiom atoms;
    otherwise 1 + min over rules concluding ``a`` of the aggregate of the
    premises' heights.  ``premise_agg`` selects the aggregate: ``"max"`` is the
    standard rank, ``"min"`` the alternative reading.  Raises HeightUndefined
    when no clause applies.
    """
    if premise_agg not in ("max", "min"):
        raise ValueError(f"premise_agg must be 'max' or 'min', got {premise_agg!r}")
    if a not in b.atoms():
        raise BasicSystemError(f"atom {a!r} does not occur in the system")
    memo = b._memo.setdefault(("height", premise_agg), {})
    agg = max if premise_agg == "max" else min

    def rank(x):
        if x in memo:
            return memo[x]
        if x in b.negative_axioms or any(r.conclusion == x and not r.premises for r in b.rules):
            memo[x] = 0
            return 0
        best = None
        for rule in b.rules:
            if rule.conclusion != x:
                continue
            try:
                candidate = 1 + agg(rank(q) for q in rule.premises)
            except HeightUndefined:
                continue
            best = candidate if best is None else min(best, candidate)
        if best is None:
            raise HeightUndefined(f"height of {x!r} is undefined (no applicable rule, not an axiom)")
        memo[x] = best
        return best

    return rank(a)


# ---------------------------------------------------------------------------
# Text format: one clause per line, ``#`` comments.

def load_basic_system(text: str) -> BasicSystem:
    rules = []
    axioms = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for clause in filter(None, (c.strip() for c in line.split("."))):
            _parse_clause(clause, lineno, rules, axioms)
        if not line.endswith(".") and line.split("#")[0].strip():
            if not raw.split("#", 1)[0].rstrip().endswith("."):
                raise BasicSystemError(f"line {lineno}: missing terminating '.'")
    return BasicSystem(rules=tuple(rules), negative_axioms=frozenset(axioms))


def _parse_clause(clause, lineno, rules, axioms):
    if clause.startswith("-"):
        name = clause[1:].strip()
        if not _ATOM_RE.fullmatch(name):
            raise BasicSystemError(f"line {lineno}: bad negative axiom {clause!r}")
        axioms.add(name)
        return
    if not clause.startswith("+"):
        raise BasicSystemError(f"line {lineno}: clause must start with '+' or '-': {clause!r}")
    body = clause[1:]
    if "<-" in body:
        head, _, tail = body.partition("<-")
        premises = tuple(q.strip() for q in tail.split(","))
    else:
        head, premises = body, ()
    head = head.strip()
    if not _ATOM_RE.fullmatch(head) or not all(_ATOM_RE.fullmatch(q) for q in premises):
        raise BasicSystemError(f"line {lineno}: bad rule {clause!r}")
    rules.append(BasicRule(premises=premises, conclusion=head))


def save_basic_system(b: BasicSystem) -> str:
    lines = [repr(r) for r in b.rules]
    lines += [f"-{name}." for name in sorted(b.negative_axioms)]
    return "\n".join(lines) + ("\n" if lines else "")
