from __future__ import annotations

import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from augindex.errors import InvalidParameter
from augindex.registry import get_example
from augindex.words import (ROOT, WeightVector, build_full_tree, build_regrouped_tree, descendants, dumps,
                            loads, parse_word, quotient_by_evaluation, word_str)


def test_full_tree_depth_zero_is_root():
    g = build_full_tree(3, 0)
    assert g.levels == ((ROOT,),) or list(map(list, g.levels)) == [[ROOT]]


def test_full_tree_level_sizes():
    g = build_full_tree(3, 2)
    assert [len(l) for l in g.levels] == [1, 3, 9]


def test_full_tree_six_letters():
    g = build_full_tree(6, 3)
    assert len(g.levels[3]) == 216
    for w in g.levels[3]:
        assert g.parents[w] == (w[:-1],)


@pytest.mark.parametrize("N, D", [(1, 2), (2, -1)])
def test_full_tree_rejects_bad_parameters(N, D):
    with pytest.raises(InvalidParameter):
        build_full_tree(N, D)


def _regrouped_oracle(s, n):
    """Words whose weight first drops to <= s_min^n, by brute enumeration."""
    bound = min(s) ** n
    max_len = math.ceil(math.log(bound) / math.log(max(s)))
    out = []
    for L in range(1, max_len + 1):
        for w in itertools.product(range(1, len(s) + 1), repeat=L):
            sw = 1
            for j in w:
                sw *= s[j - 1]
            parent = sw / s[w[-1] - 1]
            if sw <= bound < parent:
                out.append(w)
    return sorted(out)


def test_regrouped_homogeneous_equals_full_tree():
    g = build_regrouped_tree((Fraction(1, 2), Fraction(1, 2)), 3)
    for n in range(4):
        assert list(g.levels[n]) == list(build_full_tree(2, 3).levels[n])


def test_regrouped_first_level():
    g = build_regrouped_tree((Fraction(1, 2), Fraction(1, 4)), 1)
    assert list(g.levels[1]) == [(1, 1), (1, 2), (2,)]
    assert list(g.levels[1]) == _regrouped_oracle((Fraction(1, 2), Fraction(1, 4)), 1)


def test_regrouped_three_fifths():
    g = build_regrouped_tree([Fraction(3, 5)] * 3, 2)
    assert len(g.levels[2]) == 9


@pytest.mark.parametrize("s, depth", [((Fraction(1, 2), Fraction(1, 3)), 3),
                                      ((Fraction(2, 3), Fraction(1, 5), Fraction(1, 4)), 2)])
def test_regrouped_levels_match_oracle(s, depth):
    g = build_regrouped_tree(s, depth)
    for n in range(1, depth + 1):
        assert list(g.levels[n]) == _regrouped_oracle(s, n)


# weights within a factor 2 of each other keep the enumeration small
weights = st.lists(st.fractions(min_value=Fraction(1, 4), max_value=Fraction(1, 2), max_denominator=20),
                   min_size=2, max_size=3)


@given(weights)
@settings(max_examples=40, deadline=None)
def test_regrouped_weight_sandwich(s):
    wv = WeightVector(tuple(s))
    g = build_regrouped_tree(wv, 3)
    for n in range(1, 4):
        for x in g.levels[n]:
            sx = wv.weight(x)
            assert sx <= wv.s_min ** n < sx / s[x[-1] - 1]
            # extensions from the parent class stay short
            (p,) = g.parents[x]
            assert wv.weight(x[len(p):]) >= wv.s_min ** 2


def test_golden_quotient_merges_011_and_100():
    vg = get_example("bernoulli-golden").vertical(3)
    assert len(vg.levels[3]) == 7
    assert vg.members[(1, 2, 2)] == ((1, 2, 2), (2, 1, 1))


def test_golden_quotient_predecessors():
    vg = get_example("bernoulli-golden").vertical(3)
    assert descendants(vg, (1, 2, 2), -1) == frozenset({(1, 2), (2, 1)})


def test_third_ratio_has_no_merges():
    tree = build_full_tree(2, 4)
    q = quotient_by_evaluation(tree, lambda w: sum(Fraction(2 * (j - 1), 3 ** (i + 1)) for i, j in enumerate(w)))
    assert len(q.levels[4]) == 16


def test_length_evaluation_collapses_levels():
    q = quotient_by_evaluation(build_full_tree(2, 3), len)
    assert [len(l) for l in q.levels] == [1, 1, 1, 1]


def test_quotient_refuses_floats():
    with pytest.raises(InvalidParameter):
        quotient_by_evaluation(build_full_tree(2, 2), lambda w: 0.5 * len(w))


def test_descendants_basic():
    g = build_full_tree(2, 3)
    assert descendants(g, ROOT, 2) == frozenset(g.levels[2])
    assert descendants(g, (1, 2), 0) == frozenset({(1, 2)})
    assert descendants(g, (1,), 5) == frozenset()


@given(st.integers(0, 3), st.integers(-3, 3), st.data())
@settings(max_examples=60, deadline=None)
def test_descendants_inverse(level, m, data):
    g = get_example("bernoulli-golden").vertical(5)
    x = data.draw(st.sampled_from(list(g.levels[level])))
    for y in descendants(g, x, m):
        assert x in descendants(g, y, -m)


@given(st.lists(st.integers(1, 12), max_size=8))
def test_word_text_round_trip(w):
    assert parse_word(word_str(tuple(w))) == tuple(w)


@pytest.mark.parametrize("name, depth", [("sg2", 3), ("bernoulli-golden", 5), ("branching-chains", 5)])
def test_serialization_round_trip(name, depth):
    g = get_example(name).vertical(depth)
    text = dumps(g)
    h = loads(text)
    assert h.same_structure(g)
    assert dumps(h) == text
