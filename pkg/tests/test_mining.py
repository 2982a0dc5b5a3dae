"""Sequence mining: LCSS against brute force, support counting, candidate rules."""

import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from raildiag.mining import (
    EventSetFeature,
    FeatureMatcher,
    denoise,
    is_subsequence,
    lcss,
    match_features,
    mine_recurrent_sets,
    restrict_traces,
)
from raildiag.model import SubsystemClass

A, B = SubsystemClass.ETCS, SubsystemClass.Doors


def contains_subsequence(needle, haystack):
    """Independent subsequence check used to validate the package's."""
    it = iter(haystack)
    return all(any(x == y for y in it) for x in needle)


def brute_force_lcs_length(a, b):
    """Longest common subsequence by enumerating all subsequences of a."""
    best = 0
    for mask in range(1 << len(a)):
        sub = [a[i] for i in range(len(a)) if mask >> i & 1]
        if len(sub) > best and contains_subsequence(sub, b):
            best = len(sub)
    return best


codes = st.lists(st.sampled_from("abcde"), min_size=0, max_size=10)


class TestLcss:
    def test_matches_brute_force_on_500_random_pairs(self):
        rng = random.Random(17)
        alphabet = "abcdef"
        for case in range(500):
            a = [rng.choice(alphabet) for _ in range(rng.randint(0, 10))]
            b = [rng.choice(alphabet) for _ in range(rng.randint(0, 10))]
            got = lcss(a, b)
            assert len(got) == brute_force_lcs_length(a, b), (case, a, b)
            assert contains_subsequence(got, a)
            assert contains_subsequence(got, b)

    @given(codes, codes)
    @settings(max_examples=150, deadline=None)
    def test_result_is_common_subsequence_of_maximal_length(self, a, b):
        got = lcss(a, b)
        assert contains_subsequence(got, a)
        assert contains_subsequence(got, b)
        assert len(got) == brute_force_lcs_length(a, b)

    @given(codes, codes)
    @settings(max_examples=80, deadline=None)
    def test_length_is_symmetric(self, a, b):
        assert len(lcss(a, b)) == len(lcss(b, a))

    @given(codes)
    @settings(max_examples=50, deadline=None)
    def test_self_lcs_is_identity(self, a):
        assert lcss(a, a) == list(a)

    def test_empty_sides(self):
        assert lcss([], ["a"]) == []
        assert lcss(["a"], []) == []

    def test_known_pair(self):
        assert len(lcss("ABCBDAB", "BDCABA")) == 4


class TestIsSubsequence:
    @given(codes, codes)
    @settings(max_examples=150, deadline=None)
    def test_agrees_with_reference(self, needle, haystack):
        assert is_subsequence(needle, haystack) == contains_subsequence(
            needle, haystack
        )

    def test_order_matters(self):
        assert is_subsequence(["a", "b"], ["a", "x", "b"])
        assert not is_subsequence(["b", "a"], ["a", "x", "b"])


class TestDenoise:
    def test_collapses_consecutive_repeats_only(self):
        assert denoise(["a", "a", "b", "a", "a", "a"]) == ["a", "b", "a"]

    def test_empty(self):
        assert denoise([]) == []

    @given(codes)
    @settings(max_examples=80, deadline=None)
    def test_no_adjacent_duplicates_and_order_preserved(self, seq):
        out = denoise(seq)
        assert all(x != y for x, y in zip(out, out[1:]))
        assert contains_subsequence(out, seq)


class TestMineRecurrentSets:
    def traces(self):
        # class A shares (x1, x2); class B shares (y1,); noise unique per trace
        out = []
        for i in range(6):
            out.append((A, ["u%d" % i, "x1", "w%d" % i, "x2"]))
        for i in range(6):
            out.append((B, ["y1", "v%d" % i]))
        return out

    def test_recovers_shared_sequence_with_support(self):
        feats = mine_recurrent_sets(self.traces(), max_len=5, min_support=5)
        by_codes = {f.codes: f for f in feats}
        assert ("x1", "x2") in by_codes
        assert by_codes[("x1", "x2")].support[A] >= 5
        assert by_codes[("x1", "x2")].origin == "mined"

    def test_singletons_included_for_every_code(self):
        feats = mine_recurrent_sets(self.traces(), max_len=5, min_support=5)
        singles = {f.codes for f in feats if f.origin == "singleton"}
        assert ("x1",) in singles
        assert ("y1",) in singles
        assert ("u0",) in singles

    def test_min_support_is_a_hard_floor(self):
        # only 4 traces share the pair, below the floor of 5
        traces = [(A, ["x1", "x2"])] * 4 + [(A, ["z"])] * 6
        feats = mine_recurrent_sets(traces, max_len=5, min_support=5)
        mined = {f.codes for f in feats if f.origin == "mined"}
        assert ("x1", "x2") not in mined

    def test_identical_traces_produce_no_pairs(self):
        # candidates need two distinct traces; copies alone mine nothing
        traces = [(A, ["x1", "q", "x2"])] * 8
        feats = mine_recurrent_sets(traces, max_len=5, min_support=5)
        assert not [f for f in feats if f.origin == "mined"]

    def test_support_recount_covers_every_containing_trace(self):
        # one variant pair generates the candidate, all containing traces count
        traces = [(A, ["x1", "q", "x2"])] * 4 + [(A, ["x1", "r", "x2"])] + [
            (B, ["u1", "u2"]),
            (B, ["u1", "z", "u2"]),
        ]
        feats = mine_recurrent_sets(traces, max_len=5, min_support=5)
        by_codes = {f.codes: f for f in feats if f.origin == "mined"}
        assert by_codes[("x1", "x2")].support[A] == 5
        assert ("u1", "u2") not in by_codes  # support 2 is below the floor

    def test_candidates_truncated_to_max_len(self):
        long = ["c%d" % i for i in range(8)]
        traces = [(A, ["h%d" % i] + long) for i in range(6)]
        feats = mine_recurrent_sets(traces, max_len=5, min_support=5)
        assert all(len(f.codes) <= 5 for f in feats)
        mined = {f.codes for f in feats if f.origin == "mined"}
        assert tuple(long[:5]) in mined
        assert all(len(codes) < 6 for codes in mined)

    def test_deduped_across_classes(self):
        traces = [(A, ["e%d" % i, "s", "t"]) for i in range(6)]
        traces += [(B, ["s", "g%d" % i, "t"]) for i in range(6)]
        feats = mine_recurrent_sets(traces, max_len=5, min_support=5)
        assert len([f for f in feats if f.codes == ("s", "t")]) == 1
        shared = next(f for f in feats if f.codes == ("s", "t"))
        assert shared.support[A] == 6
        assert shared.support[B] == 6

    def test_unlabeled_free_and_empty_ok(self):
        assert mine_recurrent_sets([]) == []

    def test_single_code_traces_yield_singletons_only(self):
        feats = mine_recurrent_sets([(A, ["x"])] * 8)
        assert {f.codes for f in feats} == {("x",)}


class TestRestrictTraces:
    def test_removes_codes_and_redenoises(self):
        traces = [(A, ["a", "noise", "a", "b"])]
        got = restrict_traces(traces, {"a", "b"})
        # dropping "noise" makes the two a's adjacent, so they collapse
        assert got == [(A, ["a", "b"])]

    def test_empty_restriction(self):
        assert restrict_traces([(A, ["a"])], set()) == [(A, [])]


class TestMatching:
    def feats(self):
        return [
            EventSetFeature(codes=("a", "b"), origin="mined"),
            EventSetFeature(codes=("q",), origin="singleton"),
        ]

    def test_match_requires_ordered_containment(self):
        feats = self.feats()
        assert match_features(["a", "x", "b"], feats) == {feats[0]}
        assert match_features(["b", "a"], feats) == set()
        assert match_features(["q"], feats) == {feats[1]}

    def test_matcher_agrees_with_direct_matching(self):
        feats = self.feats()
        matcher = FeatureMatcher(feats)
        for window in (["a", "b", "q"], ["b"], [], ["q", "a"]):
            via_matcher = {feats[i] for i in matcher.match(window)}
            assert via_matcher == match_features(window, feats)

    def test_feature_hash_ignores_mutable_support(self):
        f1 = EventSetFeature(codes=("a",), origin="singleton", support={A: 1})
        f2 = EventSetFeature(codes=("a",), origin="singleton", support={A: 9})
        assert f1 == f2
        assert hash(f1) == hash(f2)
