from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from augindex.config import system_from_config
from augindex.errors import BudgetExceeded, InvalidInput
from augindex.graph import (INF, GeodesicPath, ai_b_decide, augment_ai_b, augment_ai_infty, bfs_distance,
                            cell_neighbors, check_convex, dump_graph, gromov_product, graph_distance,
                            horizontal_distance, lazy_horizontal_distance, load_explicit, parse_rate, to_dot)
from augindex.registry import aniso_words, offset_words, branching_chains_graph, get_example
from augindex.words import build_full_tree


def _sg_rule(u, v):
    """Neighbour rule of the gasket: u = wi, v = wj, or u = w i j^k, v = w j i^k."""
    if u == v or len(u) != len(v):
        return False
    n = len(u)
    p = next(i for i in range(n) if u[i] != v[i])
    i, j = u[p], v[p]
    return all(c == j for c in u[p + 1:]) and all(c == i for c in v[p + 1:])


def test_sg_edges_follow_neighbour_rule():
    g = get_example("sg2").augmented(4)
    for n in range(1, 5):
        words = g.levels[n]
        expected = {(u, v) for u, v in itertools.combinations(words, 2) if _sg_rule(u, v)}
        got = {tuple(sorted(e)) for e in g.horizontal_edges(n)}
        assert got == expected


def test_disconnected_system_has_no_horizontal_edges():
    sys = system_from_config({"arithmetic": "rational",
                              "maps": [{"ratio": "1/3", "translation": ["0"]},
                                       {"ratio": "1/3", "translation": ["2/3"]}],
                              "region": [["0"], ["1"]]})
    g = augment_ai_infty(sys, build_full_tree(2, 4))
    assert g.horizontal_edges() == []


def test_hata_designated_distances(hata_graph):
    assert horizontal_distance(hata_graph, (1, 1), (2, 2)) == 2
    assert horizontal_distance(hata_graph, (1, 1, 2), (2, 2, 1)) == 2


def test_ai_b_contains_ai_infty():
    ex = get_example("sg2")
    sys = ex.system()
    vg = ex.vertical(3)
    e_inf = augment_ai_infty(sys, vg)
    e_b = augment_ai_b(sys, vg, "log(2)", 1)
    for n in range(1, 4):
        a = {frozenset(e) for e in e_inf.horizontal_edges(n)}
        b = {frozenset(e) for e in e_b.horizontal_edges(n)}
        assert a <= b
    assert len(e_b.horizontal_edges()) > len(e_inf.horizontal_edges())


def test_tiny_gamma_keeps_intersecting_pairs():
    ex = get_example("sg2")
    vg = ex.vertical(3)
    e_inf = augment_ai_infty(ex.system(), vg)
    e_b = augment_ai_b(ex.system(), vg, "log(2)", Fraction(1, 10 ** 6))
    assert {frozenset(e) for e in e_inf.horizontal_edges()} <= {frozenset(e) for e in e_b.horizontal_edges()}


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_offset_pairs_are_type_b_edges(ell):
    sys = get_example("offset-squares").system()
    w = offset_words(ell)
    _, q = parse_rate("log(4)")
    assert len(w["u"]) == w["n"] + 2
    assert ai_b_decide(sys.cell(w["u"]), sys.cell(w["v"]), q ** len(w["u"])) == "edge"


def test_parse_rate_logs():
    b, q = parse_rate("log(5/3)")
    assert q == Fraction(3, 5)
    assert abs(b - 0.5108256237659907) < 1e-12


def test_branching_chains_vertices():
    g = branching_chains_graph(4)
    assert set(g.levels[1]) == {"x1", "a1"}
    assert set(g.levels[4]) == {"x4", "a4", "b1@4", "b2@4"}


def test_explicit_path_has_no_horizontal_edges():
    g = load_explicit({"levels": [["r"], ["a"], ["b"]], "parents": {"a": ["r"], "b": ["a"]}})
    assert g.horizontal_edges() == []


def test_explicit_rejects_cross_level_edge():
    with pytest.raises(InvalidInput):
        load_explicit({"levels": [["r"], ["a"], ["b"]], "parents": {"a": ["r"], "b": ["a"]},
                       "horizontal": [["a", "b"]]})


def test_horizontal_distance_examples(sg_graph, aniso_graph):
    assert horizontal_distance(sg_graph, (1, 2), (1, 2)) == 0
    assert horizontal_distance(sg_graph, (1, 1), (2, 2)) == 3
    w = aniso_words(3)
    assert horizontal_distance(aniso_graph, w["x"], w["y"]) == 7
    assert horizontal_distance(sg_graph, (1,), (1, 1)) is INF


def test_distance_from_root(sg_graph):
    d, path = graph_distance(sg_graph, (), (2, 3, 1))
    assert d == 3
    assert path.vertices == ((), (2,), (2, 3), (2, 3, 1))


def test_sg_convex_geodesic(sg_graph):
    d, path = graph_distance(sg_graph, (1, 1), (2, 2))
    assert d == 3
    assert check_convex(sg_graph, path)
    # ties go to the highest turning level
    assert path.turning == ((1, 1), (2, 2))


def test_gromov_products(sg_graph):
    assert gromov_product(sg_graph, (1, 2, 3), (1, 2, 3)) == 3
    assert gromov_product(sg_graph, (), (1, 2)) == 0
    assert gromov_product(sg_graph, (1, 1), (2, 2)) == Fraction(1, 2)


@pytest.mark.parametrize("name, depth", [("sg2", 6), ("hata", 6), ("bernoulli-golden", 7), ("aniso-binary", 8),
                                         ("branching-chains", 7)])
def test_convex_search_matches_bfs(name, depth):
    g = get_example(name).augmented(depth)
    verts = list(g.base.vertices())
    rng = random.Random(11)
    for _ in range(200):
        x, y = rng.choice(verts), rng.choice(verts)
        d, path = graph_distance(g, x, y)
        assert d == bfs_distance(g, x, y)
        if not path.truncation_lower_bound:
            assert path.length == d
            assert check_convex(g, path)
            u, v = path.turning
            # the product equals |u| - d_h(u, v)/2 on the horizontal segment
            assert gromov_product(g, x, y) == g.base.level_of[u] - Fraction(horizontal_distance(g, u, v), 2)


def test_distance_below_horizontal_distance(sg_graph):
    level = sg_graph.levels[4]
    rng = random.Random(5)
    for _ in range(100):
        x, y = rng.choice(level), rng.choice(level)
        assert graph_distance(sg_graph, x, y)[0] <= horizontal_distance(sg_graph, x, y)


def test_triangle_inequality_and_monotone_products(sg_graph):
    rng = random.Random(2)
    verts = list(sg_graph.levels[5])
    for _ in range(60):
        x, y, z = (rng.choice(verts) for _ in range(3))
        dxy = graph_distance(sg_graph, x, y)[0]
        assert dxy <= graph_distance(sg_graph, x, z)[0] + graph_distance(sg_graph, z, y)[0]
        prods = [gromov_product(sg_graph, x[:i], y[:i]) for i in range(6)]
        assert prods == sorted(prods)


def test_dump_and_dot(sg_graph):
    g = get_example("sg2").augmented(3)
    text = dump_graph(g)
    again = load_explicit(text)
    assert dump_graph(again) == text
    dot = to_dot(g)
    assert "style=dashed" in dot and "style=solid" in dot and "rank=same" in dot
    assert isinstance(GeodesicPath((1, 2)).length, int)


@pytest.mark.parametrize("name,depth", [("sg2", 4), ("offset-squares", 3), ("aniso-binary", 8), ("hata", 5)])
def test_lazy_neighbours_match_built_graph(name, depth):
    ex = get_example(name)
    sys, g = ex.system(), ex.augmented(depth)
    for v in random.Random(3).sample(g.levels[depth], 25):
        assert cell_neighbors(sys, v) == sorted(g.horizontal[v])
    for u, v in itertools.islice(itertools.combinations(g.levels[depth - 1], 2), 0, 400, 13):
        assert lazy_horizontal_distance(sys, u, v) == horizontal_distance(g, u, v)


def test_lazy_distance_deep_levels():
    sys = get_example("aniso-binary").system()
    w = aniso_words(4)
    assert lazy_horizontal_distance(sys, w["x"], w["y"]) == 15
    assert lazy_horizontal_distance(sys, (1,), (1, 1)) is INF
    with pytest.raises(BudgetExceeded):
        lazy_horizontal_distance(get_example("sg2").system(), (1,) * 6, (2,) * 6, budget=10)
