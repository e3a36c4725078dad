import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procmap import (
    AllRouters,
    BadLink,
    InconsistentRoute,
    InvalidPath,
    MissingRoute,
    NotATree,
    ParseError,
    RouteSet,
    Topology,
    TreeOracle,
    build_routed_topology,
    build_tree_topology,
    compute_bins,
    parse_route_table,
    parse_topology,
    table_oracle,
    tree_path,
)
from procmap.generators import random_routed_topology, random_tree_topology
from procmap.topology import format_route_table, format_topology

from naive import bfs_path


def test_smallest_tree():
    top = build_tree_topology(2, [(0, 1)])
    assert top.n_links == 1
    assert top.kind == "tree"


def test_router_center():
    top = build_tree_topology(3, [(0, 1), (1, 2)], routers={1})
    assert top.is_router(1)
    assert compute_bins(top) == {0, 2}


def test_cycle_rejected():
    with pytest.raises(NotATree):
        build_tree_topology(3, [(0, 1), (1, 2), (2, 0)])


def test_disconnected_rejected():
    with pytest.raises(NotATree):
        build_tree_topology(4, [(0, 1), (2, 3)])
    with pytest.raises(NotATree, match="disconnected"):
        build_tree_topology(4, [(0, 1), (1, 2), (0, 2)])


def test_bad_links():
    with pytest.raises(BadLink):
        build_tree_topology(2, [(0, 0)])
    with pytest.raises(BadLink):
        build_tree_topology(2, [(0, 2)])
    with pytest.raises(BadLink):
        build_routed_topology(3, [(0, 1), (1, 0)])


def test_all_routers_rejected():
    with pytest.raises(AllRouters):
        build_tree_topology(2, [(0, 1)], routers={0, 1})


def test_compute_bins():
    assert compute_bins(build_tree_topology(2, [(0, 1)])) == {0, 1}
    # the raw constructor does not enforce AllRouters
    assert compute_bins(Topology(2, [(0, 1)], routers={0, 1})) == frozenset()


def test_factors_exact():
    top = build_tree_topology(3, [(0, 1), (1, 2)], link_factors=[None, "1.5"], global_factor="0.1")
    assert top.link_factor(0) == Fraction(1, 10)
    assert top.link_factor(1) == Fraction(3, 2)
    assert top.with_global_factor(3).link_factor(0) == 3
    assert top.with_global_factor(3).link_factor(1) == Fraction(3, 2)
    with pytest.raises(ValueError):
        build_tree_topology(2, [(0, 1)], link_factors=["0"])


def test_tree_path_examples():
    top = build_tree_topology(3, [(0, 1), (1, 2)])
    assert tree_path(top, 1, 1) == RouteSet(((),))
    assert tree_path(top, 1, 1).weight == 1
    assert tree_path(top, 0, 1).paths == ((0,),)
    rs = tree_path(top, 0, 2)
    assert rs.k == 1 and rs.paths == ((0, 1),)


@st.composite
def trees(draw):
    n = draw(st.integers(1, 64))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    perm = draw(st.permutations(range(n)))
    links = [(perm[p], perm[i]) for i, p in enumerate(parents, 1)]
    return build_tree_topology(n, links)


@given(trees(), st.data())
@settings(max_examples=150, deadline=None)
def test_tree_path_matches_bfs(top, data):
    a = data.draw(st.integers(0, top.n_bins - 1))
    b = data.draw(st.integers(0, top.n_bins - 1))
    rs = tree_path(top, a, b)
    assert rs.k == 1
    assert list(rs.paths[0]) == bfs_path(top.n_bins, top.links, a, b)
    assert set(tree_path(top, b, a).paths[0]) == set(rs.paths[0])
    assert rs.weight * rs.k == 1


def test_tree_oracle_caches_and_is_deterministic():
    top = random_tree_topology(random.Random(3), 12)
    o = TreeOracle(top)
    assert o(2, 7) is o(2, 7)
    assert o(2, 7) == tree_path(top, 2, 7)


def test_table_oracle_examples():
    top = build_routed_topology(4, [(0, 1), (0, 2), (2, 1), (1, 3)])
    o = table_oracle(top, {(0, 1): [[0]]})
    rs = o(0, 1)
    assert rs.paths == ((0,),) and rs.weight == 1
    o = table_oracle(top, {(0, 1): [[0], [1, 2]]})
    assert o(0, 1).k == 2 and o(0, 1).weight == Fraction(1, 2)
    assert o(1, 0).paths == ((0,), (2, 1))
    assert o(3, 3).paths == ((),)
    with pytest.raises(MissingRoute):
        o(0, 2)
    assert o.missing_pairs() == [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def test_table_oracle_rejects_bad_paths():
    top = build_routed_topology(4, [(0, 1), (0, 2), (2, 1), (1, 3)])
    with pytest.raises(InvalidPath):
        table_oracle(top, {(0, 1): [[9]]})
    with pytest.raises(InvalidPath):
        table_oracle(top, {(0, 1): [[1]]})  # ends at bin 2
    with pytest.raises(InvalidPath):
        table_oracle(top, {(0, 3): [[3, 0]]})  # not connected end-to-end from 0
    with pytest.raises(InconsistentRoute):
        table_oracle(top, {(0, 1): [[0]], (1, 0): [[2, 1]]})
    # the same route listed in both directions is fine
    assert table_oracle(top, {(0, 1): [[0]], (1, 0): [[0]]})(0, 1).paths == ((0,),)


def test_routed_with_routers():
    top = build_routed_topology(4, [(0, 1), (0, 2), (2, 1), (1, 3)], routers={1, 2})
    o = table_oracle(top, {(0, 3): [[0, 3], [1, 2, 3]]})
    assert o.missing_pairs() == []
    assert o(3, 0).link_loads() == {3: 1, 0: Fraction(1, 2), 2: Fraction(1, 2), 1: Fraction(1, 2)}


def test_random_oracles_symmetric_and_normalized():
    rng = random.Random(7)
    for _ in range(30):
        top, o = random_routed_topology(rng, rng.randint(2, 8))
        for a in range(top.n_bins):
            for b in range(top.n_bins):
                rs, sr = o(a, b), o(b, a)
                assert rs.weight * rs.k == 1
                assert rs.link_loads() == sr.link_loads()
                assert o(a, b) == rs


TOPO = """\
% two leaves under a switch
topology tree 3 2 1.5
bin 0 router
bin 1
bin 2
link 0 0 1
link 1 0 2 0.25
"""


def test_parse_topology():
    top = parse_topology(TOPO)
    assert top.routers == {0}
    assert top.global_factor == Fraction(3, 2)
    assert top.link_factor(1) == Fraction(1, 4)
    assert parse_topology(format_topology(top)) == top


@pytest.mark.parametrize("text, exc", [
    ("", ParseError),
    ("topology ring 2 1 1\n", ParseError),
    ("topology tree 2 1 1\nlink 0 0 1\nlink 0 0 1\n", ParseError),
    ("topology tree 2 1 1\n", ParseError),
    ("topology tree 2 1 x\nlink 0 0 1\n", ParseError),
    ("topology tree 3 2 1\nlink 0 0 1\nlink 1 1 0\n", BadLink),
    ("topology tree 3 3 1\nlink 0 0 1\nlink 1 1 2\nlink 2 2 0\n", NotATree),
    ("topology tree 2 1 1\nbin 0 router\nbin 1 router\nlink 0 0 1\n", AllRouters),
    ("topology tree 2 1 1\nbin 0 switch\nlink 0 0 1\n", ParseError),
])
def test_parse_topology_errors(text, exc):
    with pytest.raises(exc):
        parse_topology(text)


def test_parse_error_has_line():
    with pytest.raises(ParseError) as info:
        parse_topology("topology tree 2 1 1\n% c\nlonk 0 0 1\n")
    assert info.value.line == 3


def test_route_table_file():
    top = build_routed_topology(4, [(0, 1), (0, 2), (2, 1), (1, 3)], routers={2})
    text = """\
% comment
route 0 1 2
0
1 2
route 3 1 1
3
route 0 3 1
0 3
"""
    o = parse_route_table(text, top)
    assert o(0, 1).weight == Fraction(1, 2)
    assert o(1, 3).paths == ((3,),)
    assert parse_route_table(format_route_table(o), top).table == o.table


def test_route_table_inconsistent_directions():
    top = build_routed_topology(3, [(0, 1), (1, 2), (0, 2)])
    with pytest.raises(InconsistentRoute):
        parse_route_table("route 0 2 1\n2\nroute 2 0 1\n1 0\n", top)
    with pytest.raises(ParseError):
        parse_route_table("route 0 2 2\n2\n", top)
    with pytest.raises(ParseError):
        parse_route_table("route 0 2 1\n0\n", top)
