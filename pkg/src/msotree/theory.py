"""Partial theories of finite structures and their evaluators.

The depth-n theory of a structure with an l-tuple of distinguished subsets
is built by the subset-enumeration recursion: at depth 0 it is the truth
vector over the fixed quantifier-free atom set for arity l, at depth m+1 it
is the canonical set of depth-m theories of the tuple extended by each
subset of the elements.  Values are hereditarily finite, interned, and
canonically serialized (equal sets give byte-equal encodings).

Memoization keys are isomorphism-invariant fingerprints of (structure,
tuple), which is sound because theories are isomorphism-invariant; the
cache has no observable effect.
"""

from __future__ import annotations

import hashlib
import json
import marshal
from functools import lru_cache

from .errors import EnumerationLimitError, StructureError, TheoryError
from .formulas import (And, Atom, Exists, Forall, Not, Or, free_arity, qd)

# Default ceiling on the number of leaf evaluations of the recursion:
# (2^elements)^depth must stay below this unless the caller overrides.
DEFAULT_PATH_LIMIT = 1 << 21


@lru_cache(maxsize=None)
def atom_layout(arity):
    """Canonical atom order for one tuple arity.

    Unary atoms first (empty then sing, slot-major), then the binary blocks
    in alphabetical order (equal, le, member, subset), row-major over slot
    pairs.  The rank-0 payload is the truth vector in exactly this order.
    """
    atoms = []
    for name in ("empty", "sing"):
        for i in range(arity):
            atoms.append((name, i))
    for name in ("equal", "le", "member", "subset"):
        for i in range(arity):
            for j in range(arity):
                atoms.append((name, i, j))
    return tuple(atoms)


def atom_count(arity):
    return 2 * arity + 4 * arity * arity


@lru_cache(maxsize=None)
def _restrict_positions(arity):
    """Positions of the arity-(l) atoms inside the arity-(l+1) layout."""
    big = {a: p for p, a in enumerate(atom_layout(arity + 1))}
    return tuple(big[a] for a in atom_layout(arity))


@lru_cache(maxsize=None)
def atom_position(arity):
    """Atom -> position map for one arity."""
    return {a: p for p, a in enumerate(atom_layout(arity))}


class Theory:
    """Interned hereditarily finite theory value.

    ``payload`` is an int bit-vector over ``atom_layout(arity)`` at rank 0
    and a canonically sorted tuple of rank-(n-1), arity-(l+1) theories at
    rank n > 0.
    """

    __slots__ = ("rank", "arity", "payload", "key", "_hash")

    def __init__(self, rank, arity, payload, key):
        self.rank = rank
        self.arity = arity
        self.payload = payload
        self.key = key
        self._hash = hash(key)

    def __eq__(self, other):
        return self is other or (isinstance(other, Theory) and self.key == other.key)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Theory(rank={self.rank}, arity={self.arity}, hash={self.content_hash()[:12]})"

    def members(self):
        if self.rank == 0:
            raise TheoryError("rank-0 theories have no member theories")
        return self.payload

    def atom_bits(self):
        if self.rank != 0:
            raise TheoryError("atom vector only available at rank 0")
        return self.payload

    def to_payload_json(self):
        if self.rank == 0:
            k = atom_count(self.arity)
            return [(self.payload >> p) & 1 for p in range(k)]
        return [m.to_payload_json() for m in self.payload]

    def to_json(self):
        payload = self.to_payload_json()
        return {
            "format": "mso-theory",
            "rank": self.rank,
            "arity": self.arity,
            "payload": payload,
            "sha256": _payload_hash(self.rank, self.arity, payload),
        }

    def content_hash(self):
        return _payload_hash(self.rank, self.arity, self.to_payload_json())


def _payload_hash(rank, arity, payload):
    blob = json.dumps([rank, arity, payload], separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


_POOL = {}


def make_theory0(arity, bits):
    key = (0, arity, bits)
    t = _POOL.get(key)
    if t is None:
        t = Theory(0, arity, bits, key)
        _POOL[key] = t
    return t


def make_theory(rank, arity, members):
    """Canonicalize (dedupe + sort) a payload of member theories."""
    if rank == 0:
        raise TheoryError("use make_theory0 for rank 0")
    uniq = {m.key: m for m in members}
    for m in uniq.values():
        if m.rank != rank - 1 or m.arity != arity + 1:
            raise TheoryError("payload members must have rank-1 and arity+1")
    ordered = tuple(uniq[k] for k in sorted(uniq))
    key = (rank, arity, tuple(m.key for m in ordered))
    t = _POOL.get(key)
    if t is None:
        t = Theory(rank, arity, ordered, key)
        _POOL[key] = t
    return t


def theory_from_json(obj):
    if not isinstance(obj, dict) or obj.get("format") != "mso-theory":
        raise TheoryError("not a theory file")
    rank, arity, payload = obj["rank"], obj["arity"], obj["payload"]
    want = obj.get("sha256")
    got = _payload_hash(rank, arity, payload)
    if want is not None and want != got:
        raise TheoryError("theory content hash mismatch")

    def build(rank, arity, payload):
        if rank == 0:
            if len(payload) != atom_count(arity):
                raise TheoryError("rank-0 payload length mismatch")
            bits = 0
            for p, v in enumerate(payload):
                if v not in (0, 1):
                    raise TheoryError("rank-0 payload entries must be 0/1")
                bits |= v << p
            return make_theory0(arity, bits)
        return make_theory(rank, arity, [build(rank - 1, arity + 1, m) for m in payload])

    return build(rank, arity, payload)


# -- the subset-enumeration recursion --

_MEMO = {}
_MEMO_CAP = 2_000_000

_KIND_CODE = {"set": 0, "chain": 1, "tree": 2}


def clear_caches():
    _MEMO.clear()


def _canon_form(st, sigs):
    """Isomorphism-invariant shape+signature encoding of (structure, tuple)."""
    if st.kind == "set":
        return tuple(sorted(sigs))
    if st.kind == "chain":
        return tuple(sigs[st.index[e]] for e in st.chain_order)

    def form(e):
        return (sigs[st.index[e]], tuple(sorted(form(c) for c in st.children[e])))

    return tuple(sorted(form(r) for r in st.roots))


def _canon_digest(st, sigs, arity, n):
    form = (_KIND_CODE[st.kind], arity, n, _canon_form(st, sigs))
    return hashlib.blake2b(marshal.dumps(form), digest_size=16).digest()


def _extend_sigs(sigs, bmask, arity):
    return tuple(s | (((bmask >> i) & 1) << arity) for i, s in enumerate(sigs))


def _theory0_from_sigs(st, sigs, arity):
    k = st.n
    masks = []
    for t in range(arity):
        m = 0
        for i in range(k):
            m |= ((sigs[i] >> t) & 1) << i
        masks.append(m)
    return make_theory0(arity, _vector_bits(st, masks))


def _vector_bits(st, masks):
    """Truth vector over atom_layout(len(masks)), packed into an int."""
    arity = len(masks)
    bits = 0
    pos = 0
    singleton_elem = {}
    for t, m in enumerate(masks):
        if m == 0:
            bits |= 1 << pos
        pos += 1
    for t, m in enumerate(masks):
        if m != 0 and (m & (m - 1)) == 0:
            singleton_elem[t] = m.bit_length() - 1
            bits |= 1 << pos
        pos += 1
    le_masks = st.atom_le_masks
    for i in range(arity):
        mi = masks[i]
        for j in range(arity):
            if mi == masks[j]:
                bits |= 1 << pos
            pos += 1
    for i in range(arity):
        si = singleton_elem.get(i)
        for j in range(arity):
            if si is not None and j in singleton_elem:
                sj = singleton_elem[j]
                if (le_masks[sj] >> si) & 1:
                    bits |= 1 << pos
            pos += 1
    for i in range(arity):
        mi = masks[i]
        if i in singleton_elem:
            for j in range(arity):
                if mi & masks[j]:
                    bits |= 1 << pos
                pos += 1
        else:
            pos += arity
    for i in range(arity):
        mi = masks[i]
        for j in range(arity):
            if mi & ~masks[j] == 0:
                bits |= 1 << pos
            pos += 1
    return bits


def _theory_rec(st, sigs, arity, n):
    if n == 0:
        return _theory0_from_sigs(st, sigs, arity)
    digest = _canon_digest(st, sigs, arity, n)
    hit = _MEMO.get(digest)
    if hit is not None:
        return hit
    k = st.n
    members = {}
    if n == 1:
        for b in range(1 << k):
            t0 = _theory0_from_sigs(st, _extend_sigs(sigs, b, arity), arity + 1)
            members[t0.key] = t0
    else:
        for b in range(1 << k):
            child = _theory_rec(st, _extend_sigs(sigs, b, arity), arity + 1, n - 1)
            members[child.key] = child
    t = make_theory(n, arity, members.values())
    if len(_MEMO) >= _MEMO_CAP:
        _MEMO.clear()
    _MEMO[digest] = t
    return t


def compute_theory(struct, extra=(), n=0, limit=DEFAULT_PATH_LIMIT):
    """Depth-n theory of the structure with its predicates plus ``extra``.

    The distinguished tuple is the structure's own predicate tuple followed
    by the extra subsets, in order.  Subsets in ``extra`` may be given as
    iterables of element ids or as bitmasks over the canonical order.
    """
    if n < 0:
        raise TheoryError("depth must be nonnegative")
    masks = list(struct.pred_masks)
    for s in extra:
        if isinstance(s, int):
            if s < 0 or s > struct.full_mask:
                raise StructureError("subset mask out of range")
            masks.append(s)
        else:
            masks.append(struct.mask_of(s))
    if limit is not None and n > 0:
        paths = (1 << struct.n) ** n
        if paths > limit:
            raise EnumerationLimitError(
                f"{struct.n} elements at depth {n} needs {paths} subset paths "
                f"(limit {limit})")
    arity = len(masks)
    sigs = tuple(
        sum(((m >> i) & 1) << t for t, m in enumerate(masks))
        for i in range(struct.n)
    )
    return _theory_rec(struct, sigs, arity, n)


def reduce_depth(t, n):
    """The depth-n theory of any witness of ``t``, for n <= t.rank.

    Elementwise recursive reduction; the rank-1 to rank-0 base reads the
    shared lower-arity atom block off any member.
    """
    if n < 0 or n > t.rank:
        raise TheoryError(f"cannot reduce rank-{t.rank} theory to depth {n}")
    while t.rank > n:
        t = _reduce_one(t)
    return t


_REDUCE_MEMO = {}


def _reduce_one(t):
    hit = _REDUCE_MEMO.get(t.key)
    if hit is not None:
        return hit
    if t.rank == 1:
        member = t.payload[0]
        bits = 0
        payload = member.payload
        for pos, src in enumerate(_restrict_positions(t.arity)):
            bits |= ((payload >> src) & 1) << pos
        out = make_theory0(t.arity, bits)
    else:
        out = make_theory(t.rank - 1, t.arity, [_reduce_one(m) for m in t.payload])
    _REDUCE_MEMO[t.key] = out
    return out


# -- evaluation --


def eval_direct(f, struct, assignment=()):
    """Standard semantics; set quantifiers range over all element subsets.

    Formula slots P0..P(k-1) index the structure's predicate tuple followed
    by ``assignment``, in order.
    """
    masks = list(struct.pred_masks)
    for s in assignment:
        masks.append(s if isinstance(s, int) else struct.mask_of(s))
    arity = free_arity(f)
    if arity != len(masks):
        raise TheoryError(
            f"formula uses {arity} slots but structure+assignment provide {len(masks)}")
    env = {f"P{i}": m for i, m in enumerate(masks)}
    return _eval_direct(f, struct, env)


def _atom_truth(st, op, mi, mj):
    if op == "empty":
        return mi == 0
    if op == "sing":
        return mi != 0 and mi & (mi - 1) == 0
    if op == "subset":
        return mi & ~mj == 0
    if op == "equal":
        return mi == mj
    if op == "member":
        return mi != 0 and mi & (mi - 1) == 0 and bool(mi & mj)
    if op == "le":
        if mi == 0 or mi & (mi - 1) or mj == 0 or mj & (mj - 1):
            return False
        return bool((st.atom_le_masks[mj.bit_length() - 1] >> (mi.bit_length() - 1)) & 1)
    raise TheoryError(f"unknown atom {op!r}")


def _eval_direct(f, st, env):
    if isinstance(f, Atom):
        mi = env[f.args[0]]
        mj = env[f.args[1]] if len(f.args) == 2 else 0
        return _atom_truth(st, f.op, mi, mj)
    if isinstance(f, Not):
        return not _eval_direct(f.sub, st, env)
    if isinstance(f, And):
        return all(_eval_direct(p, st, env) for p in f.parts)
    if isinstance(f, Or):
        return any(_eval_direct(p, st, env) for p in f.parts)
    if isinstance(f, Exists):
        for b in range(1 << st.n):
            env[f.var] = b
            if _eval_direct(f.body, st, env):
                del env[f.var]
                return True
        env.pop(f.var, None)
        return False
    if isinstance(f, Forall):
        for b in range(1 << st.n):
            env[f.var] = b
            if not _eval_direct(f.body, st, env):
                del env[f.var]
                return False
        env.pop(f.var, None)
        return True
    raise TheoryError(f"not a formula node: {f!r}")


def eval_on_theory(f, t):
    """Decide a formula from a theory alone.

    Requires qd(f) <= t.rank and free slot count == t.arity.  Boolean
    connectives distribute, an existential holds when some member theory
    satisfies the body, and atoms are read off the rank-0 block.
    """
    arity = free_arity(f)
    if arity != t.arity:
        raise TheoryError(f"formula arity {arity} does not match theory arity {t.arity}")
    if qd(f) > t.rank:
        raise TheoryError(f"formula depth {qd(f)} exceeds theory rank {t.rank}")
    env = {f"P{i}": i for i in range(arity)}
    return _eval_on_theory(f, t, env)


def _eval_on_theory(f, t, env):
    if isinstance(f, Atom):
        vec = reduce_depth(t, 0)
        i = env[f.args[0]]
        atom = (f.op, i) if len(f.args) == 1 else (f.op, i, env[f.args[1]])
        pos = atom_position(t.arity)[atom]
        return bool((vec.payload >> pos) & 1)
    if isinstance(f, Not):
        return not _eval_on_theory(f.sub, t, env)
    if isinstance(f, And):
        return all(_eval_on_theory(p, t, env) for p in f.parts)
    if isinstance(f, Or):
        return any(_eval_on_theory(p, t, env) for p in f.parts)
    if isinstance(f, Exists):
        env2 = dict(env)
        env2[f.var] = t.arity
        return any(_eval_on_theory(f.body, m, env2) for m in t.members())
    if isinstance(f, Forall):
        env2 = dict(env)
        env2[f.var] = t.arity
        return all(_eval_on_theory(f.body, m, env2) for m in t.members())
    raise TheoryError(f"not a formula node: {f!r}")


# -- realized theories (an under-approximation of the formally possible set) --


def realized_theories(n, l, size_bound, kind, limit=DEFAULT_PATH_LIMIT):
    """Theories realized by structures of one kind up to a size bound.

    Enumerates all structures of the kind with at most ``size_bound``
    elements (chains and sets once per size, trees once per canonical
    parent map) and all l-tuples of subsets.  This under-approximates the
    formally possible set: larger witnesses may realize more values.
    """
    from .generate import enumerate_structures

    out = {}
    for st in enumerate_structures(kind, size_bound):
        for tup in _all_tuples(st.n, l):
            t = compute_theory(st, tup, n, limit=limit)
            out[t.key] = t
    return tuple(out[k] for k in sorted(out))


def _all_tuples(k, l):
    if l == 0:
        yield ()
        return
    for rest in _all_tuples(k, l - 1):
        for b in range(1 << k):
            yield rest + (b,)
