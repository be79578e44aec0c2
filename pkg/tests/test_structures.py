import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msotree.errors import StructureError
from msotree.structures import (FinStructure, GraftSpec, MeetSegment,
                                branch_decompose, build_embedding_frame,
                                build_structure, chain_of, graft_compose,
                                is_branch, is_initial_segment, pure_set,
                                region_decompose, segment_decompose,
                                structure_from_addresses, tree_of)

from _oracles import brute_region_clauses, brute_shared_ancestor_classes


def small_trees(max_size=5):
    """Hypothesis strategy: random parent-vector forests."""
    def make(parents):
        ids = [f"n{i}" for i in range(len(parents))]
        pm = {ids[i]: ids[p] for i, p in enumerate(parents) if p is not None}
        return FinStructure("tree", ids, pm)

    return st.integers(0, max_size).flatmap(
        lambda k: st.tuples(*[
            st.one_of(st.none(), st.integers(0, max(0, i - 1))) if i else st.none()
            for i in range(k)
        ]).map(make))


class TestBuild:
    def test_smallest_branching_tree(self):
        t = build_structure({"kind": "tree", "elements": ["a", "b", "c"],
                             "order": {"b": "a", "c": "a"}, "predicates": []})
        assert t.roots == ("a",)
        assert set(t.children["a"]) == {"b", "c"}

    def test_two_chain(self):
        c = build_structure({"kind": "chain", "elements": ["a", "b"],
                             "order": {"a": 0, "b": 1}, "predicates": []})
        assert c.chain_order == ("a", "b")
        assert c.le("a", "b") and not c.le("b", "a")

    def test_cycle_rejected(self):
        with pytest.raises(StructureError):
            build_structure({"kind": "tree", "elements": ["a", "b"],
                             "order": {"a": "b", "b": "a"}, "predicates": []})

    def test_unknown_predicate_member(self):
        with pytest.raises(StructureError):
            chain_of(["a"], [("P", {"zz"})])

    def test_unknown_field_rejected(self):
        with pytest.raises(StructureError):
            build_structure({"kind": "set", "elements": [], "order": None,
                             "predicates": [], "bogus": 1})

    def test_empty_structure_allowed(self):
        assert chain_of([]).n == 0
        assert pure_set([]).n == 0

    def test_duplicate_ranks_rejected(self):
        with pytest.raises(StructureError):
            FinStructure("chain", ["a", "b"], {"a": 0, "b": 0})


class TestMeet:
    def test_idempotent(self):
        t = tree_of({"b": "a"})
        assert t.meet("b", "b") == "b"

    def test_siblings(self):
        t = tree_of({"b": "a", "c": "a"})
        assert t.meet("b", "c") == "a"

    def test_rootless_antichain_gives_empty_segment(self):
        t = FinStructure("tree", ["a", "b"], {})
        m = t.meet("a", "b")
        assert isinstance(m, MeetSegment) and not m.ids
        # oracle: the ancestor chains simply do not intersect
        assert not (set(t.ancestors("a")) & set(t.ancestors("b")))

    @settings(max_examples=60, deadline=None)
    @given(small_trees())
    def test_commutative_and_lower_bound(self, t):
        for x in t.elements:
            for y in t.elements:
                m1, m2 = t.meet(x, y), t.meet(y, x)
                assert m1 == m2
                if not isinstance(m1, MeetSegment):
                    assert t.le(m1, x) and t.le(m1, y)


class TestSegmentDecompose:
    def test_whole_chain_gives_empty_classes(self):
        c = chain_of(["a", "b", "c"])
        sd = segment_decompose(c, ["a", "b", "c"])
        assert sd.classes == ()

    def test_root_segment_in_fork(self):
        t = tree_of({"b": "a", "c": "a"})
        sd = segment_decompose(t, ["a"])
        assert sd.classes == (("b",), ("c",))

    def test_empty_segment_on_leaf_forest(self):
        t = FinStructure("tree", ["a", "b", "c"], {})
        sd = segment_decompose(t, [])
        assert len(sd.classes) == 3

    def test_not_initial_segment_rejected(self):
        t = tree_of({"b": "a", "c": "a"})
        with pytest.raises(StructureError):
            segment_decompose(t, ["b"])  # not downward closed

    @settings(max_examples=60, deadline=None)
    @given(small_trees(6), st.randoms())
    def test_matches_brute_relation(self, t, rnd):
        # random initial segment: downward closure of a linearly ordered pick
        seg = set()
        if t.n:
            e = rnd.choice(t.elements)
            seg = set(t.ancestors(e))
            if rnd.random() < 0.5:
                seg.discard(e)
        if not is_initial_segment(t, seg):
            return
        sd = segment_decompose(t, seg)
        rel = brute_shared_ancestor_classes(t, seg)
        above = {e for cls in sd.classes for e in cls}
        for x in above:
            for y in above:
                same = sd.class_index[x] == sd.class_index[y]
                assert same == rel[(x, y)]
        # classes are disjoint and cover exactly the elements above
        assert sum(len(c) for c in sd.classes) == len(above)
        for e in t.elements:
            if e not in seg:
                expected_above = all(t.le(a, e) for a in seg)
                assert (e in above) == expected_above


class TestBranchDecompose:
    def test_whole_chain(self):
        c = chain_of(["a", "b"])
        b, hang = branch_decompose(c, ["a", "b"])
        assert b == ("a", "b")
        assert all(not v for v in hang.values())

    def test_fork(self):
        t = tree_of({"b": "a", "c": "a", "d": "c"})
        b, hang = branch_decompose(t, ["a", "c", "d"])
        assert hang["a"] == ("b",)
        assert hang["c"] == () and hang["d"] == ()

    def test_non_branch_rejected(self):
        t = tree_of({"b": "a", "c": "a"})
        with pytest.raises(StructureError):
            branch_decompose(t, ["a"])  # extendable, not maximal

    @settings(max_examples=50, deadline=None)
    @given(small_trees(6), st.randoms())
    def test_hang_trees_disjoint(self, t, rnd):
        if not t.n:
            return
        root = rnd.choice(t.roots)
        path = [root]
        while t.children[path[-1]]:
            path.append(rnd.choice(t.children[path[-1]]))
        if not is_branch(t, path):
            return
        b, hang = branch_decompose(t, path)
        seen = set(b)
        for e, sub in hang.items():
            assert not (set(sub) & seen)
            seen |= set(sub)


class TestGraft:
    def test_empty_graft_map(self):
        spec = GraftSpec.make({"", "0"}, {})
        out = graft_compose(spec)
        assert out.n == 2

    def test_single_leaf_graft(self):
        spec = GraftSpec.make({""}, {("", "0"): {""}})
        out = graft_compose(spec)
        assert out.n == 2
        assert out.parent["@0"] == "@"

    def test_occupied_slot_rejected(self):
        with pytest.raises(StructureError):
            GraftSpec.make({"", "0"}, {("", "0"): {""}})

    def test_size_and_convexity(self):
        spec = GraftSpec.make({"", "1"}, {("", "0"): {"", "0"}, ("1", "1"): {""}})
        out = graft_compose(spec)
        assert out.n == 2 + 2 + 1
        # the ungrafted base stays convex: nothing grafted sits between base nodes
        base_ids = {"@", "@1"}
        for e in out.elements:
            if e in base_ids:
                continue
            above = [b for b in base_ids if out.le(b, e)]
            below = [b for b in base_ids if out.le(e, b)]
            assert not (above and below)


class TestRegions:
    def frame(self):
        host = structure_from_addresses({"", "0", "1", "00", "01", "10", "11"})
        image = {a: "@" + a for a in ("", "0", "1")}
        ext = {"0": ("@00", "@01"), "1": ("@10", "@11")}
        return host, build_embedding_frame(host, image, ext)

    def test_region_zero_is_upward_set(self):
        host, fr = self.frame()
        regions = region_decompose(fr, "@0")
        assert set(regions[0]) == set(host.subtree_ids("@0"))

    def test_leaf_with_host_children(self):
        host, fr = self.frame()
        regions = region_decompose(fr, "@0")
        assert set(regions[6]) == set(host.subtree_ids("@00"))
        assert set(regions[7]) == set(host.subtree_ids("@01"))

    def test_host_equals_image_middle_regions_empty(self):
        host = structure_from_addresses({"", "0", "1"})
        image = {a: "@" + a for a in ("", "0", "1")}
        fr = build_embedding_frame(host, image)
        regions = region_decompose(fr, "@")
        assert regions[1] == () and regions[3] == () and regions[4] == ()

    def test_matches_brute_clauses(self):
        host, fr = self.frame()
        for y in ("@", "@0", "@1"):
            got = region_decompose(fr, y)
            want = brute_region_clauses(host, y, fr.left[y], fr.right[y])
            assert tuple(set(r) for r in got) == want

    def test_rootless_host_rejected(self):
        host = FinStructure("tree", ["a", "b"], {})
        with pytest.raises(StructureError):
            build_embedding_frame(host, {"": "a"})


class TestSerialization:
    def test_round_trip(self):
        t = tree_of({"b": "a"}, [("P", {"b"})])
        again = build_structure(t.to_json())
        assert again == t
        assert again.fingerprint() == t.fingerprint()
