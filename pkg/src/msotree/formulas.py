"""Monadic formulas over the fixed atom set, with an s-expression syntax.

Atoms: (subset X Y) (equal X Y) (sing X) (empty X) (member X Y) (le X Y),
closed under not/and/or and the set quantifiers exists/forall.  Free
variables are written P0, P1, ...; their number index is the slot in the
distinguished-subset tuple the formula is evaluated against.  Quantified
variables use any other names.

Example: (exists X (and (sing X) (member X P0)))
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import FormulaError

UNARY_ATOMS = ("sing", "empty")
BINARY_ATOMS = ("subset", "equal", "member", "le")
ATOM_NAMES = UNARY_ATOMS + BINARY_ATOMS

_SLOT_RE = re.compile(r"^P(\d+)$")


@dataclass(frozen=True)
class Atom:
    op: str
    args: tuple


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Or:
    parts: tuple


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


Formula = Atom | Not | And | Or | Exists | Forall


def tokenize_sexpr(text):
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    return tokens


def read_sexpr(tokens, pos=0):
    if pos >= len(tokens):
        raise FormulaError("unexpected end of input")
    tok = tokens[pos]
    if tok == "(":
        out = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            node, pos = read_sexpr(tokens, pos)
            out.append(node)
        if pos >= len(tokens):
            raise FormulaError("unbalanced parentheses")
        return out, pos + 1
    if tok == ")":
        raise FormulaError("unexpected ')'")
    return tok, pos + 1


def parse_sexpr(text):
    tokens = tokenize_sexpr(text)
    node, pos = read_sexpr(tokens, 0)
    if pos != len(tokens):
        raise FormulaError("trailing input after formula")
    return node


def _build(node, bound):
    if isinstance(node, str):
        raise FormulaError(f"bare variable {node!r} is not a formula")
    if not node:
        raise FormulaError("empty form")
    head = node[0]
    if not isinstance(head, str):
        raise FormulaError("operator must be a symbol")
    if head in ATOM_NAMES:
        want = 1 if head in UNARY_ATOMS else 2
        args = node[1:]
        if len(args) != want or not all(isinstance(a, str) for a in args):
            raise FormulaError(f"atom {head} takes {want} variable(s)")
        for a in args:
            if a not in bound and not _SLOT_RE.match(a):
                raise FormulaError(f"unbound variable {a!r}")
        return Atom(head, tuple(args))
    if head == "not":
        if len(node) != 2:
            raise FormulaError("not takes one subformula")
        return Not(_build(node[1], bound))
    if head in ("and", "or"):
        if len(node) < 3:
            raise FormulaError(f"{head} takes at least two subformulas")
        parts = tuple(_build(p, bound) for p in node[1:])
        return And(parts) if head == "and" else Or(parts)
    if head in ("exists", "forall"):
        if len(node) != 3 or not isinstance(node[1], str):
            raise FormulaError(f"{head} takes a variable and a body")
        var = node[1]
        if _SLOT_RE.match(var):
            raise FormulaError("quantified variables may not use slot names P<k>")
        if var in bound:
            raise FormulaError(f"variable {var!r} rebound in nested scope")
        body = _build(node[2], bound | {var})
        return Exists(var, body) if head == "exists" else Forall(var, body)
    raise FormulaError(f"unknown operator {head!r}")


def parse_formula(text):
    f = _build(parse_sexpr(text), frozenset())
    free_arity(f)  # validates contiguous slot numbering
    return f


def qd(f):
    """Quantifier depth."""
    if isinstance(f, Atom):
        return 0
    if isinstance(f, Not):
        return qd(f.sub)
    if isinstance(f, (And, Or)):
        return max(qd(p) for p in f.parts)
    return 1 + qd(f.body)


def _slots(f, acc):
    if isinstance(f, Atom):
        for a in f.args:
            m = _SLOT_RE.match(a)
            if m:
                acc.add(int(m.group(1)))
    elif isinstance(f, Not):
        _slots(f.sub, acc)
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            _slots(p, acc)
    else:
        _slots(f.body, acc)


def free_arity(f):
    """Number of tuple slots the formula refers to.

    Slot numbering must be contiguous from P0.
    """
    acc = set()
    _slots(f, acc)
    if not acc:
        return 0
    if acc != set(range(max(acc) + 1)):
        raise FormulaError(f"slot numbering not contiguous: {sorted(acc)}")
    return max(acc) + 1


def to_text(f):
    if isinstance(f, Atom):
        return "(" + " ".join((f.op,) + f.args) + ")"
    if isinstance(f, Not):
        return f"(not {to_text(f.sub)})"
    if isinstance(f, And):
        return "(and " + " ".join(to_text(p) for p in f.parts) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(to_text(p) for p in f.parts) + ")"
    if isinstance(f, Exists):
        return f"(exists {f.var} {to_text(f.body)})"
    return f"(forall {f.var} {to_text(f.body)})"


# Fixed formula suite used by the agreement checks.  Grouped by free arity;
# quantifier depths range over 0..2.
SUITE_TEXTS = {
    0: (
        "(exists X (sing X))",
        "(exists X (not (empty X)))",
        "(forall X (subset X X))",
        "(exists X (exists Y (and (sing X) (and (sing Y) (and (not (equal X Y)) (le X Y))))))",
        "(forall X (or (empty X) (exists Y (and (sing Y) (subset Y X)))))",
        "(exists X (and (sing X) (forall Y (or (not (sing Y)) (le X Y)))))",
        "(exists X (forall Y (or (not (sing Y)) (subset Y X))))",
    ),
    1: (
        "(sing P0)",
        "(empty P0)",
        "(and (subset P0 P0) (not (empty P0)))",
        "(exists X (and (sing X) (member X P0)))",
        "(exists X (and (sing X) (not (member X P0))))",
        "(forall X (or (not (sing X)) (member X P0)))",
        "(exists X (and (sing X) (and (member X P0) (forall Y (or (not (and (sing Y) (member Y P0))) (le X Y))))))",
        "(exists X (and (not (empty X)) (and (subset X P0) (not (equal X P0)))))",
    ),
    2: (
        "(subset P0 P1)",
        "(equal P0 P1)",
        "(member P0 P1)",
        "(le P0 P1)",
        "(and (sing P0) (not (subset P0 P1)))",
        "(exists X (and (subset X P0) (subset X P1)))",
        "(exists X (and (sing X) (and (member X P0) (member X P1))))",
        "(forall X (or (not (member X P0)) (member X P1)))",
        "(exists X (and (sing X) (and (member X P0) (forall Y (or (not (and (sing Y) (member Y P1))) (le X Y))))))",
    ),
}


def formula_suite(arity=None):
    """Parsed fixed suite; all formulas, or those of one free arity."""
    if arity is None:
        out = []
        for a in sorted(SUITE_TEXTS):
            out.extend(parse_formula(t) for t in SUITE_TEXTS[a])
        return tuple(out)
    return tuple(parse_formula(t) for t in SUITE_TEXTS.get(arity, ()))
