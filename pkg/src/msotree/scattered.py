"""Symbolic scattered-order terms, their degrees, and homogenization.

Order terms denote possibly infinite linear orders: finite blocks,
finite concatenations, ascending (omega) and descending (omegastar) sums,
the graded catalog sums, and the dense rational order.  The degree
classifier works by structural recursion after normalization; finite
realizations sample a term's denotation deterministically for a budget.

The lexicographic models are finitely branching truncations of the
alternating-direction tree orders; pigeonhole thinning makes the colors of
same-level node pairs depend only on the meet level, and the two-sided set
builder extracts a monochromatic sequence from a repeated level theory.
"""

from __future__ import annotations

from dataclasses import dataclass

from .composition import SegmentColorTable, sum_theories
from .errors import TermError, ThinningError
from .formulas import parse_sexpr
from .structures import chain_of


@dataclass(frozen=True)
class Fin:
    k: int


@dataclass(frozen=True)
class Concat:
    parts: tuple


@dataclass(frozen=True)
class OmegaSum:
    part: "OrderTerm"


@dataclass(frozen=True)
class OmegaStarSum:
    part: "OrderTerm"


@dataclass(frozen=True)
class GradedOmegaSum:
    catalog: str  # "cn" | "cnstar"


@dataclass(frozen=True)
class Rational:
    pass


OrderTerm = Fin | Concat | OmegaSum | OmegaStarSum | GradedOmegaSum | Rational


@dataclass(frozen=True)
class HdegTag:
    """Either a natural number, the marker ">= omega", or "not scattered"."""

    kind: str  # "nat" | "ge_omega" | "not_scattered"
    value: int | None = None

    def __str__(self):
        if self.kind == "nat":
            return str(self.value)
        return ">= omega" if self.kind == "ge_omega" else "not scattered"

    def to_json(self):
        return {"kind": self.kind, "value": self.value}


GE_OMEGA = HdegTag("ge_omega")
NOT_SCATTERED = HdegTag("not_scattered")


def parse_order_term(text):
    return _order_from_sexpr(parse_sexpr(text))


def _order_from_sexpr(node):
    if isinstance(node, str):
        if node == "rational":
            return Rational()
        raise TermError(f"bare symbol {node!r} is not an order term")
    if not node or not isinstance(node[0], str):
        raise TermError("malformed order term")
    head = node[0]
    if head == "fin":
        if len(node) != 2 or not isinstance(node[1], str) or not node[1].isdigit():
            raise TermError("(fin k) needs a nonnegative integer")
        return Fin(int(node[1]))
    if head == "concat":
        return Concat(tuple(_order_from_sexpr(p) for p in node[1:]))
    if head == "omega":
        if len(node) != 2:
            raise TermError("(omega t) takes one part")
        return OmegaSum(_order_from_sexpr(node[1]))
    if head == "omegastar":
        if len(node) != 2:
            raise TermError("(omegastar t) takes one part")
        return OmegaStarSum(_order_from_sexpr(node[1]))
    if head == "graded":
        if len(node) != 2 or node[1] not in ("cn", "cnstar"):
            raise TermError("(graded cn|cnstar)")
        return GradedOmegaSum(node[1])
    if head == "rational":
        if len(node) != 1:
            raise TermError("(rational) takes no parts")
        return Rational()
    raise TermError(f"unknown order constructor {head!r}")


def order_term_text(t):
    if isinstance(t, Fin):
        return f"(fin {t.k})"
    if isinstance(t, Concat):
        return "(concat " + " ".join(order_term_text(p) for p in t.parts) + ")" \
            if t.parts else "(concat)"
    if isinstance(t, OmegaSum):
        return f"(omega {order_term_text(t.part)})"
    if isinstance(t, OmegaStarSum):
        return f"(omegastar {order_term_text(t.part)})"
    if isinstance(t, GradedOmegaSum):
        return f"(graded {t.catalog})"
    return "(rational)"


def normalize(t):
    """Flatten nested concatenations and drop empty parts; idempotent."""
    if isinstance(t, Concat):
        flat = []
        for p in t.parts:
            p = normalize(p)
            if is_empty(p):
                continue
            if isinstance(p, Concat):
                flat.extend(p.parts)
            else:
                flat.append(p)
        if not flat:
            return Fin(0)
        if len(flat) == 1:
            return flat[0]
        return Concat(tuple(flat))
    if isinstance(t, OmegaSum):
        return OmegaSum(normalize(t.part))
    if isinstance(t, OmegaStarSum):
        return OmegaStarSum(normalize(t.part))
    return t


def is_empty(t):
    if isinstance(t, Fin):
        return t.k == 0
    if isinstance(t, Concat):
        return all(is_empty(p) for p in t.parts)
    if isinstance(t, (OmegaSum, OmegaStarSum)):
        return is_empty(t.part)
    return False


def is_finite(t):
    if isinstance(t, Fin):
        return True
    if isinstance(t, Concat):
        return all(is_finite(p) for p in t.parts)
    if isinstance(t, (OmegaSum, OmegaStarSum)):
        return is_empty(t.part)
    return False


def is_well_ordered(t):
    """The denotation has no infinite strictly descending sequence."""
    if isinstance(t, Fin):
        return True
    if isinstance(t, Concat):
        return all(is_well_ordered(p) for p in t.parts)
    if isinstance(t, OmegaSum):
        return is_well_ordered(t.part)
    if isinstance(t, OmegaStarSum):
        return is_empty(t.part)
    return False


def is_inversely_well_ordered(t):
    if isinstance(t, Fin):
        return True
    if isinstance(t, Concat):
        return all(is_inversely_well_ordered(p) for p in t.parts)
    if isinstance(t, OmegaStarSum):
        return is_inversely_well_ordered(t.part)
    if isinstance(t, OmegaSum):
        return is_empty(t.part)
    return False


def contains_rational(t):
    if isinstance(t, Rational):
        return True
    if isinstance(t, Concat):
        return any(contains_rational(p) for p in t.parts)
    if isinstance(t, (OmegaSum, OmegaStarSum)):
        return contains_rational(t.part)
    return False


def contains_graded(t):
    if isinstance(t, GradedOmegaSum):
        return True
    if isinstance(t, Concat):
        return any(contains_graded(p) for p in t.parts)
    if isinstance(t, (OmegaSum, OmegaStarSum)):
        return contains_graded(t.part)
    return False


def hdeg(t):
    """Degree tag of a term.

    Structural recursion after normalization: finite terms are degree 0,
    a sum over a term that already denotes a well order collapses to
    degree <= 1 (dually for descending sums over inversely well ordered
    parts), otherwise a sum adds one; concatenations take the maximum of
    their parts.  Where normalization is incomplete (mixed-direction
    concatenations of infinite parts) the result is an approximation; see
    hdeg_is_exact.
    """
    t = normalize(t)
    if contains_rational(t):
        return NOT_SCATTERED
    if contains_graded(t):
        return GE_OMEGA
    return HdegTag("nat", _deg(t))


def _deg(t):
    if isinstance(t, Fin):
        return 0
    if isinstance(t, Concat):
        return max((_deg(p) for p in t.parts), default=0)
    if isinstance(t, OmegaSum):
        if is_empty(t.part):
            return 0
        if is_well_ordered(t.part):
            return 1
        return _deg(t.part) + 1
    if isinstance(t, OmegaStarSum):
        if is_empty(t.part):
            return 0
        if is_inversely_well_ordered(t.part):
            return 1
        return _deg(t.part) + 1
    raise TermError(f"no degree for {t!r}")


def hdeg_is_exact(t):
    """False when the degree rule for some concatenation may under-report.

    A concatenation of two or more infinite parts can exceed the maximum of
    the part degrees; every other constructor is computed exactly.
    """
    t = normalize(t)

    def walk(u):
        if isinstance(u, Concat):
            if sum(1 for p in u.parts if not is_finite(p)) >= 2:
                return False
            return all(walk(p) for p in u.parts)
        if isinstance(u, (OmegaSum, OmegaStarSum)):
            return walk(u.part)
        return True

    return walk(t)


def catalog_term(n, starred=False):
    """The n-th catalog chain (ascending) or its starred dual."""
    if n < 1:
        raise TermError("catalog terms start at 1")
    if n == 1:
        return OmegaStarSum(Fin(1)) if starred else OmegaSum(Fin(1))
    if starred:
        return OmegaStarSum(catalog_term(n - 1, False))
    return OmegaSum(catalog_term(n - 1, True))


# -- finite realizations --


def _omega_depth(t):
    if isinstance(t, Fin):
        return 0
    if isinstance(t, Concat):
        return max((_omega_depth(p) for p in t.parts), default=0)
    if isinstance(t, (OmegaSum, OmegaStarSum)):
        return 1 + _omega_depth(t.part)
    if isinstance(t, GradedOmegaSum):
        return 2
    return 1


def _split_count(budget, depth):
    if depth <= 1:
        return max(1, budget)
    r = max(2, int(round(budget ** (1.0 / depth))))
    while r ** depth > budget and r > 2:
        r -= 1
    return r


def _realize_ids(t, budget):
    """Ordered id paths of a deterministic budget-bounded sample.

    Ids are stable under budget growth: ascending sums index copies from
    the left, descending sums from the right, dense orders use dyadic
    midpoint paths.
    """
    if budget <= 0:
        return []
    if isinstance(t, Fin):
        return [f"f{i:04d}" for i in range(min(t.k, budget))]
    if isinstance(t, Concat):
        out = []
        remaining = budget
        for pi, p in enumerate(t.parts):
            share = max(1, remaining // max(1, len(t.parts) - pi))
            ids = _realize_ids(p, min(share, remaining))
            out.extend(f"c{pi:02d}.{s}" for s in ids)
            remaining -= len(ids)
            if remaining <= 0:
                break
        return out
    if isinstance(t, OmegaSum):
        if is_empty(t.part):
            return []
        d = 1 + _omega_depth(t.part)
        r = _split_count(budget, d)
        share = max(1, budget // r)
        out = []
        for i in range(r):
            out.extend(f"w{i:04d}.{s}" for s in _realize_ids(t.part, share))
        return out[:budget]
    if isinstance(t, OmegaStarSum):
        if is_empty(t.part):
            return []
        d = 1 + _omega_depth(t.part)
        r = _split_count(budget, d)
        share = max(1, budget // r)
        blocks = []
        for i in range(r):
            # copy index counts leftward from the top end
            blocks.append([f"v{(r - i):04d}.{s}" for s in _realize_ids(t.part, share)])
        out = []
        for b in reversed(blocks):
            out.extend(b)
        return out[:budget]
    if isinstance(t, GradedOmegaSum):
        r = max(1, _split_count(budget, 2))
        share = max(1, budget // r)
        out = []
        for i in range(1, r + 1):
            sub = catalog_term(i, t.catalog == "cnstar")
            out.extend(f"g{i:04d}.{s}" for s in _realize_ids(sub, share))
        return out[:budget]
    if isinstance(t, Rational):
        from math import gcd
        k = 1
        while (1 << k) - 1 < budget:
            k += 1
        den = 1 << k
        seen = []
        for i in range(1, den):
            g = gcd(i, den)
            seen.append((i / den, i // g, den // g))
        seen.sort()
        return [f"d{num:05d}_{d:05d}" for _, num, d in seen][:budget]
    raise TermError(f"cannot realize {t!r}")


def realize_prefix(t, budget):
    """Finite chain order-embeddable into the term's denotation."""
    if budget < 0:
        raise TermError("budget must be nonnegative")
    ids = _realize_ids(normalize(t), budget)
    return chain_of(ids)


# -- lexicographic models --


class LexModel:
    """Branching-b truncation of the height-n alternating tree order.

    Nodes are int tuples of length <= n.  Successor blocks ascend at even
    levels and descend at odd levels; a node sits before its own successor
    block when its level is even and after it when odd, which makes
    flipping every level's parity reverse the whole order.
    """

    def __init__(self, n, b, flip_parity=False):
        if n < 1 or b < 2:
            raise TermError("lexicographic models need n >= 1 and b >= 2")
        self.height = n
        self.branching = b
        self.flip = 1 if flip_parity else 0
        nodes = [()]
        frontier = [()]
        for _ in range(n):
            nxt = []
            for node in frontier:
                for k in range(b):
                    nxt.append(node + (k,))
            nodes.extend(nxt)
            frontier = nxt
        self.nodes = tuple(nodes)
        self._sorted = None

    def level(self, node):
        return len(node)

    def _ascending_at(self, level):
        return (level + self.flip) % 2 == 0

    def sort_key(self, node):
        key = []
        for i, v in enumerate(node):
            key.append(float(v) if self._ascending_at(i) else float(-v))
        key.append(float("-inf") if self._ascending_at(len(node)) else float("inf"))
        key.extend([0.0] * (self.height - len(node)))
        return tuple(key)

    def lt(self, a, b):
        return self.sort_key(a) < self.sort_key(b)

    def sorted_nodes(self):
        if self._sorted is None:
            self._sorted = tuple(sorted(self.nodes, key=self.sort_key))
        return self._sorted

    def children_in_order(self, node):
        ks = range(self.branching)
        if not self._ascending_at(len(node)):
            ks = reversed(ks)
        return tuple(node + (k,) for k in ks)


def lex_model(n, b, flip_parity=False):
    return LexModel(n, b, flip_parity)


def embed_lex(model, chain):
    """Order-preserving injection of the model into a chain.

    Walks the blocks recursively in model order, assigning the least unused
    chain position to each node.  Fails (returning None) when the chain is
    too small.
    """
    nodes = model.sorted_nodes()
    if chain.kind != "chain" or len(chain.chain_order) < len(nodes):
        return None
    return {node: chain.chain_order[i] for i, node in enumerate(nodes)}


# -- pigeonhole thinning --


@dataclass
class ThinningResult:
    """Homogeneous subtree with its recorded segment theories.

    ``survivors`` is prefix-closed; ``kept_children``/``markers`` record the
    monochromatic successor subsets and their second elements; ``node_colors``
    maps a node and a descendant level to the constant segment theory of
    same-level descendant pairs meeting at that node; ``level_theories`` are
    the top-level constants t_1..t_n keyed by co-level.
    """

    model: LexModel
    chain: object
    embedding: dict
    params: tuple
    depth: int
    survivors: frozenset
    kept_children: dict
    markers: dict
    node_colors: dict
    level_theories: dict

    def canonical_extension(self, node, target_level):
        cur = node
        while len(cur) < target_level:
            cur = self.markers[cur]
        return cur


def _pair_color(table, embedding, model, a, b):
    x, y = embedding[a], embedding[b]
    if model.lt(b, a):
        x, y = y, x
    return table.color(x, y)


def thin_homogeneous(model, chain, params, depth, embedding=None):
    """Level-wise pigeonhole thinning of an embedded model.

    At each node, children are restricted to a subset of size >= 2 whose
    canonical extensions are pairwise monochromatic at every deeper level
    and whose recorded subtree colors agree; the marker of a node is the
    second element of its kept set.  Raises ThinningError, carrying the
    failing level, when no such subset exists.
    """
    if embedding is None:
        embedding = embed_lex(model, chain)
        if embedding is None:
            raise ThinningError(None, None, "chain too small to embed the model")
    anchors = [embedding[node] for node in model.nodes]
    table = SegmentColorTable(chain, params, depth, anchors)
    n = model.height
    markers = {}
    kept = {}
    node_colors = {}
    fingerprints = {node: () for node in model.nodes if len(node) == n}
    for level in range(n - 1, -1, -1):
        for node in model.nodes:
            if len(node) != level:
                continue
            children = model.children_in_order(node)
            choice = _choose_monochromatic(
                table, embedding, model, node, children, markers, fingerprints, n)
            if choice is None:
                raise ThinningError(level, node,
                                    f"no monochromatic successor subset of size >= 2 "
                                    f"at level {level}")
            subset, colors = choice
            kept[node] = tuple(subset[1:])
            markers[node] = subset[1]
            node_colors[node] = colors
            fingerprints[node] = (tuple(sorted(colors.items())),
                                  fingerprints[subset[0]])
    survivors = set()

    def collect(node):
        survivors.add(node)
        for c in kept.get(node, ()):
            collect(c)

    collect(())
    result = ThinningResult(model, chain, embedding, tuple(params), depth,
                            frozenset(survivors), kept, markers, node_colors, {})
    _verify_star(result, table)
    level_theories = {}
    for k in range(1, n + 1):
        meet_level = n - k
        for node in sorted(survivors):
            if len(node) == meet_level and node in node_colors:
                level_theories[k] = node_colors[node][n]
                break
    result.level_theories = level_theories
    return result


def _choose_monochromatic(table, embedding, model, node, children, markers,
                          fingerprints, n):
    """First (by block order) subset of size >= 2, preferring larger ones,
    whose extension pairs share one color per level and whose subtrees
    carry identical recorded colors."""

    def extension(child, target):
        cur = child
        while len(cur) < target:
            cur = markers[cur]
        return cur

    from itertools import combinations

    m = len(children)
    for size in range(m, 1, -1):
        for combo in combinations(range(m), size):
            subset = [children[i] for i in combo]
            if len({fingerprints[c] for c in subset}) != 1:
                continue
            colors = {}
            ok = True
            for target in range(len(node) + 1, n + 1):
                exts = [extension(c, target) for c in subset]
                seen = None
                for a in range(len(exts)):
                    for b in range(a + 1, len(exts)):
                        col = _pair_color(table, embedding, model, exts[a], exts[b])
                        if seen is None:
                            seen = col
                        elif col is not seen:
                            ok = False
                            break
                    if not ok:
                        break
                if not ok:
                    break
                colors[target] = seen
            if ok:
                return subset, colors
    return None


def _verify_star(result, table):
    """Exhaustive check: same-level survivor pair colors depend only on the
    meet node's level, matching the recorded values."""
    by_level = {}
    for node in result.survivors:
        by_level.setdefault(len(node), []).append(node)
    for level, nodes in by_level.items():
        if level == 0:
            continue
        nodes = sorted(nodes)
        for i in range(len(nodes)):
            for j in range(i + 1, len(nodes)):
                a, b = nodes[i], nodes[j]
                meet = _common_prefix(a, b)
                if meet == a or meet == b:
                    continue
                col = _pair_color(table, result.embedding, result.model, a, b)
                want = result.node_colors[meet][level]
                if col is not want:
                    raise ThinningError(
                        len(meet), meet,
                        f"homogeneity failed for levels {level} at meet {meet}")


def _common_prefix(a, b):
    out = []
    for x, y in zip(a, b):
        if x != y:
            break
        out.append(x)
    return tuple(out)


def build_z_set(result, k, l):
    """Two-sided monochromatic element sequence from a repeated level theory.

    Needs t_k == t_l for co-levels k < l.  When they are not adjacent, the
    absorption identities t_k = t_{k+1} + t_k and t_{k+1} = t_{k+1} + t_k
    are checked and give t_{k+1} = t_k; the construction then extends the
    later kept children of a level-(n-k-1) node and the kept children of
    its first kept child canonically to full depth.  Every adjacent pair of
    the returned sequence carries the repeated theory, which is re-checked
    against freshly computed segment colors.
    """
    lt = result.level_theories
    n = result.model.height
    if not (1 <= k < l <= n):
        raise TermError(f"need 1 <= k < l <= {n}")
    if lt[k] is not lt[l]:
        raise TermError(f"level theories t_{k} and t_{l} differ")
    target = lt[k]
    if l > k + 1:
        # the two absorption identities force t_(k+1) = t_k
        absorbed = sum_theories(lt[k + 1], lt[k])
        if absorbed is not lt[k]:
            raise TermError("absorption identity t_k = t_(k+1) + t_k failed")
        if absorbed is not lt[k + 1]:
            raise TermError("absorption identity t_(k+1) = t_(k+1) + t_k failed")
    meet_level = n - (k + 1)
    base = None
    for node in sorted(result.survivors, key=lambda nd: (len(nd), nd)):
        if len(node) == meet_level and len(result.kept_children.get(node, ())) >= 2:
            base = node
            break
    if base is None:
        raise TermError(f"no surviving node at level {meet_level} with two kept children")
    first = result.kept_children[base][0]
    b1 = [result.canonical_extension(c, n) for c in result.kept_children[base][1:]]
    b2 = [result.canonical_extension(c, n) for c in result.kept_children.get(first, ())]
    members = sorted(set(b1) | set(b2), key=result.model.sort_key)
    anchors = [result.embedding[m] for m in members]
    table = SegmentColorTable(result.chain, result.params, result.depth, anchors)
    for i in range(len(members) - 1):
        col = table.color(anchors[i], anchors[i + 1])
        if col is not target:
            raise TermError(f"adjacent pair {i} not monochromatic")
    return anchors
