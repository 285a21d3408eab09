from __future__ import annotations

import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from augindex.config import system_from_config
from augindex.errors import InvalidParameter
from augindex.graph import AugmentedGraph, augment_ai_infty, horizontal_distance, load_explicit
from augindex.hyperbolicity import (check_departing, check_expansive, check_separation, degree_stats,
                                    delta_by_level, departing_violations, departure_bound,
                                    derived_departing_facts, find_departing_witness, four_point_delta,
                                    horizontal_geodesic_scan, geodesic_bound_consistency)
from augindex.ifs import cell_distance, cells_intersect
from augindex.registry import offset_words, get_example
from augindex.words import build_full_tree, descendants


def _bare_tree(depth, alphabet=2, complete=False):
    tree = build_full_tree(alphabet, depth)
    adj = {v: set() for v in tree.vertices()}
    if complete:
        for level in tree.levels:
            for u, v in itertools.combinations(level, 2):
                adj[u].add(v)
                adj[v].add(u)
    return AugmentedGraph(tree, adj, {"kind": "explicit"})


def _brute_departing(g, m, k, n):
    """Pairs violating (m,k)-departing, straight from horizontal distances."""
    level = g.base.levels[n]
    bad = []
    for i, j in itertools.combinations(range(len(level)), 2):
        x, y = level[i], level[j]
        if horizontal_distance(g, x, y) <= k:
            continue
        dx, dy = descendants(g.base, x, m), descendants(g.base, y, m)
        if any(horizontal_distance(g, u, v) <= 2 * k for u in dx for v in dy):
            bad.append((i, j))
    return bad


# -- expansive -----------------------------------------------------------------

def test_expansive_holds_on_bundled_graphs(sg_graph, hata_graph, aniso_graph):
    for g in (sg_graph, hata_graph, aniso_graph, get_example("ladder-fans").augmented(6),
              get_example("branching-chains").augmented(6)):
        rep = check_expansive(g)
        assert rep.holds and rep.constants["violations"] == 0


def test_expansive_tree_without_edges():
    assert check_expansive(_bare_tree(5)).holds


def test_expansive_violation_has_replayable_witness():
    # children of the two ends of a path get joined, parents stay two apart
    g = load_explicit({"levels": [["o"], ["a", "b", "c"], ["a1", "b1", "c1"]],
                       "parents": {"a": ["o"], "b": ["o"], "c": ["o"],
                                   "a1": ["a"], "b1": ["b"], "c1": ["c"]},
                       "horizontal": [("a", "b"), ("b", "c"), ("a1", "c1")]})
    rep = check_expansive(g)
    assert rep.verdict == "violated"
    w = rep.witnesses[0]
    assert {w["x"], w["y"]} == {"a", "c"}
    assert w["d_h(x,y)"] == 2 == horizontal_distance(g, "a", "c")


# -- departing -----------------------------------------------------------------

def test_sg_is_one_one_departing(sg_graph):
    rep = check_departing(sg_graph, 1, 1)
    assert rep.holds
    assert rep.constants["L(m,k)"] == 5


def test_hata_departing_witness(hata_graph):
    rep = check_departing(hata_graph, 1, 1)
    assert rep.verdict == "violated"
    w = rep.witnesses[0]
    assert (w["x"], w["y"], w["u"], w["v"]) == ("11", "22", "112", "221")
    assert w["d_h(x,y)"] == 2 and w["d_h(u,v)"] == 2


def test_aniso_large_departing_witness():
    g = get_example("aniso-binary").augmented(9)
    w = find_departing_witness(g, 3, 6, value=7)
    assert w is not None
    assert w["d_h(x,y)"] == 7 and w["d_h(u,v)"] <= 12
    x, y = tuple(int(c) for c in w["x"]), tuple(int(c) for c in w["y"])
    assert horizontal_distance(g, x, y) == 7


@pytest.mark.parametrize("name,depth", [("sg2", 4), ("hata", 5), ("ladder-fans", 5), ("bernoulli-golden", 5)])
def test_departing_routes_agree_with_brute_force(name, depth):
    g = get_example(name).augmented(depth)
    for m, k in ((1, 1), (1, 2), (2, 1)):
        for n in range(0, depth - m + 1):
            brute = _brute_departing(g, m, k, n)
            assert departing_violations(g, m, k, n, "matrix") == brute
            assert departing_violations(g, m, k, n, "bfs") == brute


def test_departing_rejects_bad_parameters(sg_graph):
    with pytest.raises(InvalidParameter):
        check_departing(sg_graph, 0, 1)
    with pytest.raises(InvalidParameter):
        check_departing(get_example("sg2").augmented(2), 2, 1)
    with pytest.raises(InvalidParameter):
        departing_violations(sg_graph, 1, 1, 2, "magic")


# -- derived constants ---------------------------------------------------------

def test_derived_constants_one_one():
    f = derived_departing_facts(1, 1)
    assert (f.L, f.j0, f.D0) == (5, 3, Fraction(3))


def test_derived_constants_two_three():
    f = derived_departing_facts(2, 3)
    assert (f.L, f.j0, f.D0) == (10, 2, Fraction(4))


@given(st.integers(1, 12), st.integers(1, 12))
def test_departure_bound_properties(m, k):
    L = departure_bound(m, k)
    q = L - 2 * m
    assert q % k == 0 and q >= 2 * m + 1 and q - k < 2 * m + 1
    f = derived_departing_facts(m, k)
    assert 2 ** f.j0 * k >= L + 2
    assert f.j0 == 0 or 2 ** (f.j0 - 1) * k < L + 2
    assert f.D0 >= Fraction(k, 2) and f.D0 >= m * f.j0


@pytest.mark.parametrize("name", ["sg2", "hata", "bernoulli-golden", "aniso-binary", "ladder-fans", "branching-chains"])
def test_scaling_implications_have_no_counterexample(name):
    g = get_example(name).augmented(6)
    facts = derived_departing_facts(1, 1, g)
    assert len(facts.implications) == 4
    assert facts.counterexamples == []


# -- horizontal geodesics --------------------------------------------------------

def test_sg_geodesics_bounded_by_departure_constant(sg_graph):
    rep = horizontal_geodesic_scan(sg_graph, passed=[(1, 1)])
    assert rep.holds
    assert rep.maxima == [0, 1, 3, 5, 5, 5, 5, 5]
    assert rep.constants["trend"] == "stable"


def test_aniso_geodesics_grow(aniso_graph):
    rep = horizontal_geodesic_scan(aniso_graph)
    assert rep.constants["trend"] == "growing"
    assert rep.maxima[-1] > rep.maxima[len(rep.maxima) // 2]
    w = rep.witnesses[-1]
    x, y = (tuple(int(c) for c in w[s]) for s in ("x", "y"))
    assert horizontal_distance(aniso_graph, x, y) == w["length"]


def test_tree_has_no_horizontal_geodesics():
    assert horizontal_geodesic_scan(_bare_tree(5)).maxima == [0] * 6


def test_geodesic_bound_consistency_on_sg():
    res = geodesic_bound_consistency(get_example("sg2").augmented(6), 6, 2, 2)
    assert res["passed"] == [(1, 1), (1, 2), (2, 1), (2, 2)]
    assert res["inconsistent"] == []
    assert res["max"] <= min(departure_bound(m, k) for m, k in res["passed"])


# -- four-point delta ----------------------------------------------------------

def test_tree_is_zero_hyperbolic():
    rep = four_point_delta(_bare_tree(6))
    assert rep.constants["delta"] == 0.0 and rep.constants["exhaustive"]


def test_sg_delta_and_parameter_note(sg_graph):
    rep = four_point_delta(sg_graph, depth=4, a=0.4)
    assert rep.constants["delta"] == 1.0
    assert rep.constants["a_max"] == pytest.approx(math.log(2) / 2)
    assert rep.notes and "choose a <" in rep.notes[0]
    assert four_point_delta(sg_graph, depth=4, a=0.3).notes == []


def test_delta_by_level_sg_settles_aniso_grows(sg_graph, aniso_graph):
    assert delta_by_level(sg_graph, [2, 3, 4, 5]) == [0.5, 1.0, 1.0, 1.0]
    aniso = delta_by_level(aniso_graph, [4, 6, 8])
    assert aniso == sorted(aniso) and aniso[-1] > aniso[0]


# -- degree --------------------------------------------------------------------

def test_binary_tree_degree():
    rep = degree_stats(_bare_tree(6))
    assert rep.holds and rep.constants["max_degree"] == 3


def test_sg_degree_stable(sg_graph):
    rep = degree_stats(sg_graph)
    assert rep.holds and rep.constants["max_degree"] == 7


def test_complete_levels_degree_grows():
    rep = degree_stats(_bare_tree(6, complete=True))
    assert rep.verdict == "violated" and rep.witnesses


# -- separation ----------------------------------------------------------------

def test_sg_sb_bounded(sg_system):
    g = get_example("sg2").augmented(6)
    rep = check_separation(sg_system, g, "S_b", {"b": "log(2)", "c": 1}, 6)
    assert rep.holds
    assert [r["max_count"] for r in rep.rows] == [1, 3, 3, 3, 3, 3, 3]


def test_duplicate_maps_violate_sb():
    sys = system_from_config({"arithmetic": "rational",
                              "maps": [{"ratio": "1/2", "translation": ["0"]},
                                       {"ratio": "1/2", "translation": ["0"]}],
                              "region": [["0"], ["1"]]})
    g = augment_ai_infty(sys, build_full_tree(2, 4))
    rep = check_separation(sys, g, "S_b", {"b": "log(2)", "c": 1}, 4)
    assert rep.verdict == "violated"
    assert [r["max_count"] for r in rep.rows] == [1, 2, 4, 8, 16]


def test_irrational_offset_violates_h():
    ex = get_example("offset-squares")
    g = ex.augmented(2)
    pairs = [(offset_words(ell)["u"], offset_words(ell)["v"]) for ell in (1, 2, 3)]
    rep = check_separation(ex.system(), g, "H", {"b": "log(4)", "pairs": pairs}, 2)
    assert rep.verdict == "violated"
    vals = [r["scaled_hi"] for r in rep.rows]
    assert len(vals) == 3 and vals[0] > vals[1] > vals[2]
    for r in rep.rows:
        assert r["scaled_lo"] <= r["scaled_hi"] * (1 + 1e-12)


def test_sg_point_separation_bounded(sg_system):
    g = get_example("sg2").augmented(5)
    rep = check_separation(sg_system, g, "S_b''", {"b": "log(2)", "c2": 1}, 5)
    assert rep.holds


def test_unknown_separation_condition(sg_system, sg_graph):
    with pytest.raises(InvalidParameter):
        check_separation(sg_system, sg_graph, "S_z")


def test_h_scan_matches_exhaustive_minimum(sg_system):
    g = get_example("sg2").augmented(3)
    rep = check_separation(sg_system, g, "H", {"b": "log(2)"}, 3)
    for row in rep.rows:
        n = row["level"]
        cells = [sg_system.cell(v) for v in g.base.levels[n]]
        lows = [cell_distance(a, b).lo for a, b in itertools.combinations(cells, 2)
                if cells_intersect(a, b).verdict == "no"]
        assert row["scaled_lo"] == pytest.approx(min(lows) * 2 ** n)
