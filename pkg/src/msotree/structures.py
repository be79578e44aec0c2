"""Finite chains, trees and pure sets with tuples of distinguished subsets.

Elements are opaque string ids.  The canonical element order (lexicographic on
ids) fixes bitmask numbering, subset enumeration order and serialized output.
A chain's order is a separate rank assignment; a tree's order is a parent map.
All values are immutable after construction and every operation is pure.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .errors import StructureError

KINDS = ("chain", "set", "tree")


@dataclass(frozen=True)
class MeetSegment:
    """Meet of two nodes when no single element realizes it.

    Holds the (possibly empty) common initial segment of the two
    ancestor chains.
    """

    ids: frozenset

    def __iter__(self):
        return iter(sorted(self.ids))


class FinStructure:
    """A finite chain, tree or pure set with an ordered tuple of subsets.

    ``order`` is ``{id: rank}`` for chains, ``{child: parent}`` for trees
    (roots absent from the map) and ``None`` for sets.  ``predicates`` is a
    sequence of ``(name, members)`` pairs; the tuple order is part of the
    value.  Structural comparability (used by meet, segments, branches) puts
    ``x <= y`` when x lies on y's ancestor chain; on chains that coincides
    with the rank order, on pure sets only ``x <= x`` holds.
    """

    __slots__ = (
        "kind", "elements", "index", "n", "order", "predicates",
        "pred_names", "pred_masks", "chain_pos", "chain_order",
        "parent", "children", "roots", "anc_masks", "atom_le_masks",
        "depths", "full_mask", "_fingerprint",
    )

    def __init__(self, kind, elements, order=None, predicates=()):
        if kind not in KINDS:
            raise StructureError(f"unknown kind {kind!r}")
        elements = tuple(sorted(elements))
        if len(set(elements)) != len(elements):
            raise StructureError("duplicate element ids")
        for e in elements:
            if not isinstance(e, str) or not e:
                raise StructureError(f"element ids must be nonempty strings, got {e!r}")
        self.kind = kind
        self.elements = elements
        self.index = {e: i for i, e in enumerate(elements)}
        self.n = len(elements)
        self.full_mask = (1 << self.n) - 1

        if kind == "set":
            if order not in (None, {}):
                raise StructureError("pure sets carry no order")
            self.order = None
        elif kind == "chain":
            order = dict(order or {})
            if set(order) != set(elements):
                raise StructureError("chain order must rank every element exactly once")
            ranks = list(order.values())
            if len(set(ranks)) != len(ranks):
                raise StructureError("chain ranks must be distinct")
            self.order = order
        else:
            order = dict(order or {})
            for c, p in order.items():
                if c not in self.index or p not in self.index:
                    raise StructureError(f"parent map references unknown element: {c}->{p}")
                if c == p:
                    raise StructureError(f"self-parent at {c}")
            self.order = order

        self.pred_names = tuple(name for name, _ in predicates)
        if len(set(self.pred_names)) != len(self.pred_names):
            raise StructureError("duplicate predicate names")
        masks = []
        for name, members in predicates:
            m = 0
            for e in members:
                if e not in self.index:
                    raise StructureError(f"predicate {name!r} references unknown element {e!r}")
                m |= 1 << self.index[e]
            masks.append(m)
        self.pred_masks = tuple(masks)
        self.predicates = tuple((n, frozenset(self.elements[i] for i in range(self.n) if (m >> i) & 1))
                                for n, m in zip(self.pred_names, self.pred_masks))

        self._build_order_tables()
        self._fingerprint = None

    def _build_order_tables(self):
        n = self.n
        if self.kind == "chain":
            by_rank = sorted(self.elements, key=lambda e: self.order[e])
            self.chain_order = tuple(by_rank)
            self.chain_pos = {e: p for p, e in enumerate(by_rank)}
            self.parent = {by_rank[p]: by_rank[p - 1] for p in range(1, n)}
        elif self.kind == "tree":
            self.chain_order = None
            self.chain_pos = None
            self.parent = dict(self.order)
        else:
            self.chain_order = None
            self.chain_pos = None
            self.parent = {}

        children = {e: [] for e in self.elements}
        for c, p in self.parent.items():
            children[p].append(c)
        self.children = {e: tuple(sorted(cs)) for e, cs in children.items()}
        self.roots = tuple(e for e in self.elements if e not in self.parent)

        # Reflexive ancestor bitmask per element index; detects cycles.
        anc = [None] * n
        depths = [None] * n

        def resolve(e):
            i = self.index[e]
            if anc[i] is not None:
                return anc[i]
            seen = []
            cur = e
            while True:
                j = self.index[cur]
                if anc[j] is not None:
                    break
                if cur in seen:
                    raise StructureError(f"cycle in parent map through {cur!r}")
                seen.append(cur)
                if cur in self.parent:
                    cur = self.parent[cur]
                else:
                    cur = None
                    break
            base_mask = 0 if cur is None else anc[self.index[cur]]
            base_depth = -1 if cur is None else depths[self.index[cur]]
            for e2 in reversed(seen):
                j = self.index[e2]
                base_mask = base_mask | (1 << j)
                base_depth += 1
                anc[j] = base_mask
                depths[j] = base_depth
            return anc[i]

        for e in self.elements:
            resolve(e)
        self.anc_masks = tuple(anc)
        self.depths = tuple(depths)
        # Atom-level "smaller or equal": identical to the structural order on
        # chains and trees, constantly false on pure sets.
        if self.kind == "set":
            self.atom_le_masks = (0,) * n
        else:
            self.atom_le_masks = self.anc_masks

    # -- basic order helpers (structural, reflexive) --

    def le(self, x, y):
        """x lies on y's ancestor chain (reflexive)."""
        return (self.anc_masks[self.index[y]] >> self.index[x]) & 1 == 1

    def comparable(self, x, y):
        return self.le(x, y) or self.le(y, x)

    def ancestors(self, x):
        """Reflexive ancestor set of x, as a sorted tuple."""
        m = self.anc_masks[self.index[x]]
        return tuple(e for e in self.elements if (m >> self.index[e]) & 1)

    def mask_of(self, ids):
        m = 0
        for e in ids:
            if e not in self.index:
                raise StructureError(f"unknown element {e!r}")
            m |= 1 << self.index[e]
        return m

    def ids_of(self, mask):
        return tuple(self.elements[i] for i in range(self.n) if (mask >> i) & 1)

    def subtree_ids(self, x):
        """All elements above-or-equal x."""
        i = self.index[x]
        return tuple(e for e in self.elements if (self.anc_masks[self.index[e]] >> i) & 1)

    def meet(self, x, y):
        """Greatest common lower bound, or the common initial segment.

        Returns an element id when the common ancestor chain is nonempty
        (always the case when x == y), otherwise a MeetSegment.
        """
        if x not in self.index or y not in self.index:
            raise StructureError("meet arguments must be elements")
        common = self.anc_masks[self.index[x]] & self.anc_masks[self.index[y]]
        if common == 0:
            return MeetSegment(frozenset())
        best = None
        for i in range(self.n):
            if (common >> i) & 1:
                if best is None or self.depths[i] > self.depths[best]:
                    best = i
        return self.elements[best]

    # -- induced substructures --

    def restrict(self, ids, predicates=None):
        """Induced substructure on ``ids`` (same kind).

        Tree parent = nearest ancestor inside the subset, so non-convex
        subsets induce their restricted order faithfully.  Predicates are
        intersected; ``predicates`` overrides them when given.
        """
        keep = set(ids)
        for e in keep:
            if e not in self.index:
                raise StructureError(f"unknown element {e!r}")
        if predicates is None:
            preds = [(name, members & keep) for name, members in self.predicates]
        else:
            preds = [(name, set(members) & keep) for name, members in predicates]
        if self.kind == "set":
            return FinStructure("set", keep, None, preds)
        if self.kind == "chain":
            order = {e: self.order[e] for e in keep}
            return FinStructure("chain", keep, order, preds)
        parent = {}
        for e in keep:
            p = self.parent.get(e)
            while p is not None and p not in keep:
                p = self.parent.get(p)
            if p is not None:
                parent[e] = p
        return FinStructure("tree", keep, parent, preds)

    def as_pure_set(self, ids=None, predicates=()):
        return FinStructure("set", self.elements if ids is None else ids, None, predicates)

    # -- serialization --

    def to_json(self):
        if self.kind == "set":
            order = None
        else:
            order = dict(self.order)
        return {
            "kind": self.kind,
            "elements": list(self.elements),
            "order": order,
            "predicates": [{"name": n, "members": sorted(m)} for n, m in self.predicates],
        }

    def fingerprint(self):
        if self._fingerprint is None:
            blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
            self._fingerprint = hashlib.sha256(blob.encode()).hexdigest()
        return self._fingerprint

    def __eq__(self, other):
        return isinstance(other, FinStructure) and self.to_json() == other.to_json()

    def __hash__(self):
        return hash(self.fingerprint())

    def __repr__(self):
        return f"FinStructure({self.kind}, {self.n} elements, arity {len(self.pred_masks)})"


def build_structure(descriptor):
    """Validate a parsed structure file and return the structure.

    Rejects unknown fields, cycles, non-chain ranks and foreign predicate
    members.  The empty element list is permitted.
    """
    if not isinstance(descriptor, dict):
        raise StructureError("structure descriptor must be a JSON object")
    allowed = {"kind", "elements", "order", "predicates"}
    unknown = set(descriptor) - allowed
    if unknown:
        raise StructureError(f"unknown structure fields: {sorted(unknown)}")
    kind = descriptor.get("kind")
    elements = descriptor.get("elements")
    if not isinstance(elements, list):
        raise StructureError("'elements' must be a list of ids")
    order = descriptor.get("order")
    preds_raw = descriptor.get("predicates", [])
    if not isinstance(preds_raw, list):
        raise StructureError("'predicates' must be a list")
    preds = []
    for p in preds_raw:
        if not isinstance(p, dict) or set(p) != {"name", "members"}:
            raise StructureError("each predicate needs exactly 'name' and 'members'")
        preds.append((p["name"], p["members"]))
    if kind == "chain":
        if not isinstance(order, dict):
            raise StructureError("chain structures need an {id: rank} order")
        order = {k: int(v) for k, v in order.items()}
    elif kind == "tree":
        if order is None:
            order = {}
        if not isinstance(order, dict):
            raise StructureError("tree structures need a {child: parent} order")
    return FinStructure(kind, elements, order, preds)


def chain_of(ids_in_order, predicates=()):
    """Chain whose rank order is the given listing."""
    return FinStructure("chain", ids_in_order,
                        {e: r for r, e in enumerate(ids_in_order)}, predicates)


def pure_set(ids, predicates=()):
    return FinStructure("set", ids, None, predicates)


def tree_of(parent_map, predicates=(), extra_roots=()):
    ids = set(parent_map) | set(parent_map.values()) | set(extra_roots)
    return FinStructure("tree", ids, parent_map, predicates)


# -- initial segments and decompositions --


def is_initial_segment(t, ids):
    """Downward closed and linearly ordered subset."""
    seg = set(ids)
    for e in seg:
        if e not in t.index:
            return False
    for e in seg:
        for a in t.ancestors(e):
            if a not in seg:
                return False
    seg_list = sorted(seg)
    for i, x in enumerate(seg_list):
        for y in seg_list[i + 1:]:
            if not t.comparable(x, y):
                return False
    return True


def above_segment(t, seg):
    """Elements strictly above every element of the segment."""
    seg = set(seg)
    out = []
    for e in t.elements:
        if e in seg:
            continue
        if all(t.le(a, e) for a in seg):
            out.append(e)
    return tuple(out)


@dataclass(frozen=True)
class SegmentDecomposition:
    segment: tuple
    below: tuple
    classes: tuple          # tuple of tuples of element ids
    class_index: dict       # element id -> class position


def segment_decompose(t, seg):
    """Split a tree along an initial segment.

    ``below`` collects everything not above the segment; the classes
    partition the elements above it, two elements sharing a class exactly
    when some common ancestor also lies above the segment.  Classes are
    listed in canonical order (by least element id).
    """
    seg = tuple(sorted(set(seg)))
    if not is_initial_segment(t, seg):
        raise StructureError("not an initial segment")
    above = above_segment(t, seg)
    above_set = set(above)
    parent = {}

    def find(x):
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    for e in above:
        parent.setdefault(e, e)
    for i, x in enumerate(above):
        for y in above[i + 1:]:
            m = t.meet(x, y)
            if not isinstance(m, MeetSegment) and m in above_set:
                union(x, y)
    groups = {}
    for e in above:
        groups.setdefault(find(e), []).append(e)
    classes = tuple(tuple(sorted(g)) for g in sorted(groups.values(), key=lambda g: min(g)))
    class_index = {}
    for ci, cls in enumerate(classes):
        for e in cls:
            class_index[e] = ci
    below = tuple(e for e in t.elements if e not in above_set)
    return SegmentDecomposition(seg, below, classes, class_index)


def is_subbranch(t, ids):
    """Convex and linearly ordered."""
    b = set(ids)
    for e in b:
        if e not in t.index:
            return False
    bl = sorted(b)
    for i, x in enumerate(bl):
        for y in bl[i + 1:]:
            if not t.comparable(x, y):
                return False
    for e in t.elements:
        if e in b:
            continue
        lower = [x for x in b if t.le(x, e)]
        upper = [y for y in b if t.le(e, y)]
        if lower and upper:
            return False
    return True


def is_branch(t, ids):
    """Maximal sub-branch."""
    b = set(ids)
    if not is_subbranch(t, b):
        return False
    for e in t.elements:
        if e in b:
            continue
        if is_subbranch(t, b | {e}):
            return False
    return True


def branch_decompose(t, branch):
    """Branch with gaps filled plus the per-node hanging subtrees.

    Finite orders contain no gaps, so the returned branch is the input
    branch sorted along the order.  The hang tree at a branch node collects
    the off-branch elements whose deepest branch ancestor is that node;
    hang trees are pairwise disjoint and disjoint from the branch.
    """
    b = set(branch)
    if not is_branch(t, b):
        raise StructureError("not a maximal branch")
    ordered = tuple(sorted(b, key=lambda e: t.depths[t.index[e]]))
    hang = {e: [] for e in ordered}
    for e in t.elements:
        if e in b:
            continue
        anc_in_b = [a for a in t.ancestors(e) if a in b]
        if anc_in_b:
            deepest = max(anc_in_b, key=lambda a: t.depths[t.index[a]])
            hang[deepest].append(e)
    return ordered, {e: tuple(sorted(v)) for e, v in hang.items()}


# -- grafting compositions of binary-address trees --


@dataclass(frozen=True)
class GraftSpec:
    """Base fragment of binary addresses plus a grafting map.

    Addresses are strings over {0,1}; "" is the root address.  The map
    sends (address, direction) to a finite fragment hung below that slot;
    a slot may be used only when the base does not occupy it.
    """

    base: frozenset
    graft_map: tuple  # tuple of ((addr, d), frozenset) pairs, canonical order

    @staticmethod
    def make(base, graft_map):
        base = frozenset(base)
        _check_addresses(base)
        items = []
        for (x, d), frag in sorted(dict(graft_map).items()):
            if d not in ("0", "1"):
                raise StructureError(f"graft direction must be '0' or '1', got {d!r}")
            if x not in base:
                raise StructureError(f"graft point {x!r} not in base")
            if (x + d) in base:
                raise StructureError(f"graft slot ({x!r},{d}) already occupied")
            frag = frozenset(frag)
            _check_addresses(frag)
            items.append(((x, d), frag))
        return GraftSpec(base, tuple(items))


def _check_addresses(addrs):
    for a in addrs:
        if not isinstance(a, str) or any(ch not in "01" for ch in a):
            raise StructureError(f"bad binary address {a!r}")


def address_id(addr):
    return "@" + addr


def structure_from_addresses(addrs, predicates=()):
    """Tree on binary addresses; parent = longest proper prefix present."""
    addrs = set(addrs)
    parent = {}
    for a in addrs:
        for k in range(len(a) - 1, -1, -1):
            if a[:k] in addrs:
                parent[address_id(a)] = address_id(a[:k])
                break
    return FinStructure("tree", [address_id(a) for a in addrs], parent, predicates)


def graft_compose(spec):
    """Base fragment with every graft value hung below its slot."""
    result = set(spec.base)
    for (x, d), frag in spec.graft_map:
        for y in frag:
            addr = x + d + y
            if addr in result:
                raise StructureError(f"graft collision at address {addr!r}")
            result.add(addr)
    return structure_from_addresses(result)


# -- embedding frames --


class EmbeddingFrame:
    """A finite binary prefix embedded into a rooted host tree.

    ``image`` maps binary addresses (a prefix-closed set) to host elements,
    order-preserving in both directions, with the empty address on the host
    root.  ``left``/``right`` give each image node its two designated
    successors; where the child address lies inside the image they agree
    with it, at image leaves they may designate further host elements.
    The meet point of the two successors is precomputed per node.
    """

    def __init__(self, host, image, left, right):
        self.host = host
        self.image = dict(image)
        self.left = dict(left)
        self.right = dict(right)
        self.addr_of = {e: a for a, e in self.image.items()}
        self.s_elements = frozenset(self.image.values())
        self.meet_pt = {}
        for a, y in self.image.items():
            if y in self.left and y in self.right:
                self.meet_pt[y] = host.meet(self.left[y], self.right[y])

    def region_nodes(self):
        return tuple(sorted(self.s_elements))


def build_embedding_frame(host, image, extensions=None):
    """Validate and build a frame.

    ``image``: address -> host element id, prefix-closed, "" -> root.
    ``extensions``: optional address -> (left, right) host pairs for image
    leaves.  Raises when the host is rootless or the bijection is not
    order-preserving both ways.
    """
    if len(host.roots) != 1:
        raise StructureError("embedding frames require a rooted host tree")
    root = host.roots[0]
    image = dict(image)
    _check_addresses(image.keys())
    if "" not in image or image[""] != root:
        raise StructureError("image must map the empty address to the host root")
    addrs = sorted(image)
    for a in addrs:
        if a and a[:-1] not in image:
            raise StructureError("image addresses must be prefix-closed")
    if len(set(image.values())) != len(image):
        raise StructureError("image must be injective")
    for a in addrs:
        for b in addrs:
            prefix = b.startswith(a)
            if prefix != host.le(image[a], image[b]):
                raise StructureError(
                    f"image not order-preserving on ({a!r},{b!r})")
    left, right = {}, {}
    for a, y in image.items():
        if a + "0" in image:
            left[y] = image[a + "0"]
        if a + "1" in image:
            right[y] = image[a + "1"]
    for a, (l, r) in (extensions or {}).items():
        if a not in image:
            raise StructureError(f"extension at unknown address {a!r}")
        y = image[a]
        if y in left or y in right:
            raise StructureError(f"extension clashes with image children at {a!r}")
        for c in (l, r):
            if not host.le(y, c) or c == y:
                raise StructureError(f"extension {c!r} must lie strictly above {y!r}")
        if host.comparable(l, r):
            raise StructureError("extension successors must be incomparable")
        left[y], right[y] = l, r
    return EmbeddingFrame(host, image, left, right)


def region_decompose(frame, y):
    """The eight region subtrees at an image node.

    Clause 0 is everything above-or-equal the node, 6/7 everything above
    its two designated successors; 1..5 pick out the elements splitting
    from the node, from the segments up to the successors' meet point, and
    from the meet point itself.  When the meet is an initial segment the
    segment variants of the defining conditions apply.
    """
    host = frame.host
    if y not in frame.s_elements:
        raise StructureError(f"{y!r} is not an image element")
    if y not in frame.left or y not in frame.right:
        raise StructureError(f"image node {y!r} has no designated successors")
    y0, y1 = frame.left[y], frame.right[y]
    m = frame.meet_pt[y]
    seg = isinstance(m, MeetSegment)
    le = host.le
    els = host.elements

    def above_meet(x):
        if seg:
            return all(le(g, x) for g in m.ids)
        return le(m, x)

    def below_meet(z):
        # "z <= meet": membership when the meet is a segment
        if seg:
            return z in m.ids
        return le(z, m)

    def strictly_above_meet(z):
        if seg:
            return all(le(g, z) for g in m.ids)
        return le(m, z) and z != m

    t0 = tuple(x for x in els if le(y, x))
    t1 = tuple(x for x in els
               if not above_meet(x)
               and any(z != y and le(z, x) and le(y, z) and below_meet(z) for z in els))
    t2 = tuple(x for x in els
               if le(y, x)
               and all(le(z, y) for z in els if below_meet(z) and le(z, x)))
    t3 = tuple(x for x in els
               if not le(y0, x)
               and any(le(z, x) and strictly_above_meet(z) and le(z, y0) for z in els))
    t4 = tuple(x for x in els
               if not le(y1, x)
               and any(le(z, x) and strictly_above_meet(z) and le(z, y1) for z in els))
    t5 = tuple(x for x in els
               if above_meet(x)
               and all(below_meet(z) for z in els
                       if le(z, x) and (le(z, y0) or le(z, y1))))
    t6 = tuple(x for x in els if le(y0, x))
    t7 = tuple(x for x in els if le(y1, x))
    return (t0, t1, t2, t3, t4, t5, t6, t7)
