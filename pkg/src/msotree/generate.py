"""Deterministic enumeration and seeded random generation of structures.

Trees are enumerated as parent vectors p[i] in {none, 0..i-1} and deduped
by a canonical shape form, so each unlabeled forest appears once.  All
randomness flows from explicit Random instances.
"""

from __future__ import annotations

from itertools import product

from .structures import FinStructure, chain_of, pure_set, tree_of


def _ids(k):
    return [f"n{i}" for i in range(k)]


def _shape_form(parents, k):
    children = {i: [] for i in range(k)}
    roots = []
    for i in range(k):
        p = parents[i]
        if p is None:
            roots.append(i)
        else:
            children[p].append(i)

    def form(v):
        return tuple(sorted(form(c) for c in children[v]))

    return tuple(sorted(form(r) for r in roots))


def enumerate_forest_parent_maps(k):
    """Canonical parent maps for all unlabeled forests on k nodes."""
    if k == 0:
        yield {}
        return
    seen = set()
    for parents in product(*[[None] + list(range(i)) for i in range(k)]):
        shape = _shape_form(parents, k)
        if shape in seen:
            continue
        seen.add(shape)
        ids = _ids(k)
        yield {ids[i]: ids[p] for i, p in enumerate(parents) if p is not None}


def enumerate_structures(kind, size_bound, sizes=None):
    """All structures of one kind with size in 0..size_bound (no predicates)."""
    sizes = range(size_bound + 1) if sizes is None else sizes
    for k in sizes:
        if kind == "set":
            yield pure_set(_ids(k))
        elif kind == "chain":
            yield chain_of(_ids(k))
        elif kind == "tree":
            for pm in enumerate_forest_parent_maps(k):
                yield FinStructure("tree", _ids(k), pm)
        else:
            raise ValueError(f"unknown kind {kind!r}")


def random_rooted_tree(rng, size, prefix="n"):
    """Uniform-ish random rooted tree: each node's parent is an earlier node."""
    ids = [f"{prefix}{i}" for i in range(size)]
    parent = {ids[i]: ids[rng.randrange(i)] for i in range(1, size)}
    return FinStructure("tree", ids, parent)


def random_forest(rng, size, prefix="n"):
    ids = [f"{prefix}{i}" for i in range(size)]
    parent = {}
    for i in range(1, size):
        p = rng.randrange(i + 1)
        if p < i:
            parent[ids[i]] = ids[p]
    return FinStructure("tree", ids, parent)


def random_chain(rng, size, prefix="c"):
    ids = [f"{prefix}{i}" for i in range(size)]
    return chain_of(ids)


def random_structure(rng, kind, size):
    if kind == "set":
        return pure_set(_ids(size))
    if kind == "chain":
        return random_chain(rng, size, prefix="n")
    return random_forest(rng, size)


def random_masks(rng, k, arity):
    return tuple(rng.randrange(1 << k) for _ in range(arity))


def random_relabel(rng, st):
    """Predicate-preserving isomorphic copy under a random id relabeling."""
    perm = list(st.elements)
    rng.shuffle(perm)
    new_ids = [f"r{i}" for i in range(st.n)]
    rename = {old: new_ids[i] for i, old in enumerate(perm)}
    preds = [(name, {rename[e] for e in members}) for name, members in st.predicates]
    if st.kind == "set":
        return pure_set(rename.values(), preds), rename
    if st.kind == "chain":
        order = {rename[e]: r for e, r in st.order.items()}
        return FinStructure("chain", rename.values(), order, preds), rename
    parent = {rename[c]: rename[p] for c, p in st.parent.items()}
    return FinStructure("tree", rename.values(), parent, preds), rename
