"""Counterexample engines against definable choice.

A pair of elements is indiscernible at depth n when marking either one
inside their two-element set yields the same theory; such a witness defeats
every depth-n choice definition over the same parameters, because the
formula's truth value is computed from the theory.  Witness sets are
restricted to two elements on purpose: equal theories on {x, y} defeat any
candidate, whereas a larger set with one indiscernible pair does not.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import TheoryError
from .formulas import free_arity
from .theory import compute_theory, eval_direct


@dataclass(frozen=True)
class ChoiceWitness:
    """Two elements the depth-n theory cannot tell apart inside {x, y}."""

    x: str
    y: str
    subset: frozenset
    depth: int
    theory: object
    attested_equal: bool = True

    def to_json(self, structure):
        return {
            "structure_fingerprint": structure.fingerprint(),
            "pair": [self.x, self.y],
            "subset": sorted(self.subset),
            "depth": self.depth,
            "theory_sha256": self.theory.content_hash(),
            "params_arity": len(structure.pred_masks),
        }


def find_indiscernible_pair(structure, n, params=None):
    """Least canonical pair (x, y) with equal marked theories, or None.

    The parameter tuple is the structure's own predicates unless ``params``
    overrides it.  A None answer is double-checked by a second enumeration
    in reverse canonical order.
    """
    st = structure if params is None else structure.restrict(
        structure.elements, predicates=[(f"P{i}", set(p)) for i, p in enumerate(params)])
    els = st.elements
    pairs = [(x, y) for i, x in enumerate(els) for y in els[i + 1:]]
    found = _scan(st, pairs, n)
    if found is None:
        again = _scan(st, list(reversed(pairs)), n)
        if again is not None:
            raise TheoryError("enumeration order changed the answer")
        return None
    return found


def _scan(st, pairs, n):
    for x, y in pairs:
        subset = frozenset((x, y))
        tx = compute_theory(st, ({x}, subset), n)
        ty = compute_theory(st, ({y}, subset), n)
        if tx is ty:
            return ChoiceWitness(x, y, subset, n, tx)
    return None


@dataclass(frozen=True)
class ChoiceVerdict:
    defines_choice: bool
    failure: dict | None = None

    def to_json(self):
        return {"defines_choice": self.defines_choice, "failure": self.failure}


def check_choice_function(structure, formula):
    """Does the formula pick exactly one member from every nonempty subset?

    The formula's last two slots are the candidate element (a singleton)
    and the subset; earlier slots are the structure's parameters.  The
    first failing subset in canonical order is reported with its failure
    kind: nothing chosen, several chosen, or a choice outside the subset.
    """
    arity = free_arity(formula)
    if arity != len(structure.pred_masks) + 2:
        raise TheoryError(
            f"choice formula needs arity {len(structure.pred_masks) + 2}, got {arity}")
    for bmask in range(1, 1 << structure.n):
        subset = structure.ids_of(bmask)
        chosen = [e for e in structure.elements
                  if eval_direct(formula, structure, (1 << structure.index[e], bmask))]
        if len(chosen) == 0:
            return ChoiceVerdict(False, {"subset": list(subset), "kind": "none_chosen"})
        if len(chosen) > 1:
            return ChoiceVerdict(False, {"subset": list(subset), "kind": "several_chosen",
                                         "chosen": chosen})
        if chosen[0] not in subset:
            return ChoiceVerdict(False, {"subset": list(subset), "kind": "outside_subset",
                                         "chosen": chosen})
    return ChoiceVerdict(True)


def find_monochromatic(coloring, k):
    """Increasing k-element list whose pairs all share one color, or None.

    Backtracking over carrier positions in canonical chain order; the
    result is the lexicographically least such list.
    """
    order = coloring.carrier.chain_order
    if k > len(order):
        return None
    if k <= 1:
        return list(order[:k])

    def extend(chosen, color, start):
        if len(chosen) == k:
            return chosen
        for p in range(start, len(order)):
            e = order[p]
            if not chosen:
                got = extend([e], None, p + 1)
            elif color is None:
                got = extend(chosen + [e], coloring.color(chosen[0], e), p + 1)
            elif all(coloring.color(x, e) is color for x in chosen):
                got = extend(chosen + [e], color, p + 1)
            else:
                continue
            if got:
                return got
        return None

    return extend([], None, 0)
