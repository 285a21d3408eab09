from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from augindex.boundary import (LazyAdjacency, _exact_cover, ahlfors_scan, boundary_gromov, boundary_sample,
                               closest_prolongation, covering_chain_holds, covering_numbers, doubling_scan, holder_scan,
                               meet_index, meet_product_gap, proxy_metric, ray_of_word, ray_through,
                               shadow_sandwich, similarity_exponent, theta_estimate)
from augindex.errors import InvalidParameter
from augindex.graph import gromov_product
from augindex.ifs import cell_distance
from augindex.registry import offset_words, get_example


@pytest.fixture(scope="module")
def chains():
    return get_example("branching-chains").augmented(9)


# -- rays and meet index -------------------------------------------------------

def test_ray_through_prolongs_by_least_child(sg_graph):
    r = ray_through(sg_graph, (2,), 5)
    assert r.depth == 5 and r.last == (2, 1, 1, 1, 1)
    assert r.truncate(2).vertices == ((), (2,), (2, 1))
    assert ray_of_word((3, 1)).vertices == ((), (3,), (3, 1))


def test_boundary_sample_default_level(sg_graph8):
    rays = boundary_sample(sg_graph8)
    assert len(rays) == 81 and all(r.depth == 8 for r in rays)


def test_sg_meet_index_graph_and_lazy_routes(sg_graph, sg_system):
    x, y = ray_through(sg_graph, (1,), 7), ray_through(sg_graph, (2,), 7)
    assert meet_index(x, y, 1, sg_graph) == (1, False)
    lazy = LazyAdjacency(sg_system)
    assert meet_index(ray_of_word((1,) * 7), ray_of_word((2,) + (1,) * 6), 1, dh=lazy) == (1, False)


def test_meet_index_routes_agree_on_sample(sg_graph, sg_system):
    rays = boundary_sample(sg_graph, 6, 3)
    lazy = LazyAdjacency(sg_system)
    for x, y in itertools.combinations(rays, 2):
        assert meet_index(x, y, 1, sg_graph) == meet_index(x, y, 1, dh=lazy)


def test_meet_index_input_errors(sg_graph, sg_system):
    x = ray_through(sg_graph, (1,), 4)
    with pytest.raises(InvalidParameter):
        meet_index(x, ray_through(sg_graph, (2,), 5), 1, sg_graph)
    with pytest.raises(InvalidParameter):
        meet_index(x, x)
    with pytest.raises(InvalidParameter):
        meet_index(x, x, 2, dh=LazyAdjacency(sg_system))


def test_chains_adjacent_chains_never_separate(chains):
    x, a = ray_through(chains, "x1", 9), ray_through(chains, "a1", 9)
    assert meet_index(x, a, 1, chains) == (9, True)
    assert boundary_gromov(x, a, 1, 3, chains).hi == math.inf


def test_chains_branch_products(chains):
    xi = ray_through(chains, "x1", 9)
    for n in range(1, 7):
        eta = ray_through(chains, f"b{n}@{n + 2}", 9)
        assert meet_index(xi, eta, 1, chains) == (n + 1, False)
        assert gromov_product(chains, xi.last, eta.last) == Fraction(2 * n + 1, 2)


# -- products and metric estimates -------------------------------------------------

def test_gromov_interval_on_sg(sg_graph):
    x, y = ray_through(sg_graph, (1,), 7), ray_through(sg_graph, (2,), 7)
    iv = boundary_gromov(x, y, 1, 3, sg_graph)
    assert (iv.lo, iv.hi, iv.meet, iv.open) == (-3.0, 5.0, 1, False)
    assert iv.monotone_lower == 1
    assert iv.lo <= iv.monotone_lower <= iv.hi
    assert iv.width == 8


def test_theta_estimate_brackets_proxy(sg_graph):
    x, y = ray_through(sg_graph, (1,), 7), ray_through(sg_graph, (2,), 7)
    est = theta_estimate(x, y, 0.4, g=sg_graph)
    assert est.lo == pytest.approx(math.exp(-2.0))
    assert est.hi == pytest.approx(math.exp(1.2))
    proxy = proxy_metric(sg_graph, [x, y], 0.4)[0, 1]
    assert est.lo <= proxy <= est.hi
    assert theta_estimate(x, x, 0.4, g=sg_graph).hi == 0.0
    with pytest.raises(InvalidParameter):
        theta_estimate(x, y, 0.4, method="nope", g=sg_graph)


def test_chain_infimum_below_proxy():
    g = get_example("sg2").augmented(4)
    x, y = ray_through(g, (1,), 4), ray_through(g, (3,), 4)
    chain = theta_estimate(x, y, 0.4, "chain-infimum", g=g)
    assert 0 < chain.hi <= proxy_metric(g, [x, y], 0.4)[0, 1] + 1e-12


def test_proxy_metric_is_symmetric_with_zero_diagonal(sg_graph):
    M = proxy_metric(sg_graph, boundary_sample(sg_graph, 6, 3), 0.4)
    assert np.allclose(M, M.T) and np.all(np.diag(M) == 0)
    assert np.all(M[~np.eye(len(M), dtype=bool)] > 0)


def test_meet_index_tracks_products(sg_graph8):
    res = meet_product_gap(sg_graph8, boundary_sample(sg_graph8, 8, 4)[:40])
    assert res["pairs"] == 780
    assert res["max_gap"] <= 3


# -- shadows -------------------------------------------------------------------

def test_shadow_radii_comparable_to_level(sg_graph8):
    res = shadow_sandwich(sg_graph8, 3, 1, 0.4, depth=8)
    assert len(res["rows"]) == 27
    assert 0 < res["C_inner"] <= res["C_outer"] < math.inf
    for row in res["rows"]:
        assert row["inner"] <= row["outer"] + 1e-12


# -- covering numbers ----------------------------------------------------------

def _line(points):
    p = np.asarray(points, dtype=float)
    return np.abs(p[:, None] - p[None, :])


def test_covering_single_point():
    c = covering_numbers(np.zeros((1, 1)), 0.5)
    assert (c.cover, c.packing, c.separating, c.exact) == (1, 1, 1, True)
    assert doubling_scan(np.zeros((1, 1)), [1.0, 0.5])["max"] == 1


def test_covering_collinear_points():
    D = _line([0, 1, 2, 3])
    assert covering_numbers(D, 0.6).cover == 4
    c = covering_numbers(D, 1.5)
    assert c.cover == 2 and c.separating == 2
    assert covering_numbers(D, 10).cover == 1


def test_doubling_on_integer_line():
    D = _line(range(9))
    for exact in (False, True):
        assert doubling_scan(D, [4.0], exact)["max_per_radius"] == [3]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=9),
       st.floats(0.05, 0.8))
def test_covering_chain_and_cover_routes(points, r):
    P = np.array(points)
    D = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(axis=2))
    c = covering_numbers(D, r)
    assert c.exact
    assert c.cover == _exact_cover(D < r)
    assert covering_chain_holds(D, r)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=25, max_size=40), st.floats(0.5, 3))
def test_greedy_bounds_bracket_exact(points, r):
    D = _line(points)
    big = covering_numbers(D, r, exact_limit=0)
    assert not big.exact
    exact_cover = _exact_cover(D < r)
    assert big.cover >= exact_cover >= big.packing
    assert covering_chain_holds(D, r, exact_limit=0)


# -- Hoelder and Ahlfors ---------------------------------------------------------

def test_similarity_exponent():
    assert similarity_exponent([0.5, 0.5, 0.5]) == pytest.approx(math.log(3) / math.log(2), abs=1e-12)
    assert similarity_exponent([0.6] * 3) == pytest.approx(math.log(3) / math.log(5 / 3), abs=1e-12)
    with pytest.raises(InvalidParameter):
        similarity_exponent([1.2, 0.5])


def test_holder_band_same_by_both_routes(sg_graph8, sg_system):
    rays = boundary_sample(sg_graph8, 8, 4)
    pairs = random.Random(0).sample(list(itertools.combinations(rays, 2)), 200)
    a = holder_scan(sg_system, pairs, 0.4, math.log(2), 1, 3, sg_graph8)
    b = holder_scan(sg_system, pairs, 0.4, math.log(2), 1, 3, dh=LazyAdjacency(sg_system))
    assert a["skipped"] == 0 and len(a["rows"]) == 200
    assert (a["band_min"], a["band_max"]) == (b["band_min"], b["band_max"])
    # the band spreads by at most e^{2 b (D0 + k)} around the true constant
    assert 0 < a["band_min"] and a["band_max"] / a["band_min"] < 2 ** 8 * 4
    for row in a["rows"]:
        assert row["lower"] <= row["rho"] * 2 ** row["meet"] <= row["upper"]


def test_ahlfors_band_bounded(sg_graph8):
    res = ahlfors_scan(sg_graph8, [Fraction(1, 2)] * 3, 0.4, [2, 3, 4], depth=8)
    assert res["alpha"] == pytest.approx(math.log(3) / math.log(2))
    assert res["exponent"] == pytest.approx(math.log(3) / 0.4)
    lo, hi = res["band"]
    assert 0.5 < lo <= hi < 4


def test_closest_prolongation_realizes_cell_distance():
    sys = get_example("offset-squares").system()
    w = offset_words(1)
    x, y = closest_prolongation(sys, w["u"], w["v"], 13)
    assert x[:7] == w["u"] and y[:7] == w["v"] and len(x) == len(y) == 13
    base = cell_distance(sys.cell(w["u"]), sys.cell(w["v"])).lo
    assert cell_distance(sys.cell(x), sys.cell(y)).lo == pytest.approx(base, rel=1e-9)
    with pytest.raises(InvalidParameter):
        closest_prolongation(sys, (1,), (1, 2), 4)
