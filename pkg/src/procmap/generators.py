"""Instance generators: meshes, standard topologies and random test instances."""

from __future__ import annotations

import random
from fractions import Fraction

import networkx as nx

from .topology import TableOracle, Topology, build_routed_topology, build_tree_topology, make_oracle
from .workload import WorkloadGraph


def grid_graph(rows: int, cols: int, weights=None) -> WorkloadGraph:
    """rows x cols 2D mesh, vertices numbered row-major."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return WorkloadGraph.from_edges(rows * cols, edges, weights)


def random_graph(rng: random.Random, n: int, p: float, max_weight: int = 1) -> WorkloadGraph:
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    weights = [rng.randint(1, max_weight) for _ in range(n)]
    return WorkloadGraph.from_edges(n, edges, weights)


def star_topology(leaves: int, router_center: bool = True, global_factor=1) -> Topology:
    """Center bin 0 linked to bins 1..leaves."""
    links = [(0, i) for i in range(1, leaves + 1)]
    return build_tree_topology(leaves + 1, links, {0} if router_center else (), None, global_factor)


def hierarchical_topology(fanouts, level_factors=None, global_factor=1) -> Topology:
    """Switch hierarchy: internal bins are routers, leaves are compute bins.

    ``fanouts[i]`` is the number of children per bin at depth i. Links from
    depth i to i+1 get ``level_factors[i]`` when given.
    """
    links, factors, routers = [], [], set()
    frontier, n = [0], 1
    for depth, fan in enumerate(fanouts):
        nxt = []
        for parent in frontier:
            routers.add(parent)
            for _ in range(fan):
                links.append((parent, n))
                factors.append(None if level_factors is None else Fraction(level_factors[depth]))
                nxt.append(n)
                n += 1
        frontier = nxt
    return build_tree_topology(n, links, routers, factors, global_factor)


def _random_factor(rng, factor_choices):
    return None if rng.random() < 0.5 else Fraction(rng.choice(factor_choices))


def random_tree_topology(rng: random.Random, n_bins: int, router_prob: float = 0.3,
                         factor_choices=("1", "2", "1/2", "3/2"), global_factor=None) -> Topology:
    links = [(rng.randrange(i), i) for i in range(1, n_bins)]
    routers = {b for b in range(n_bins) if rng.random() < router_prob}
    if len(routers) == n_bins:
        routers.discard(rng.randrange(n_bins))
    factors = [_random_factor(rng, factor_choices) for _ in links]
    if global_factor is None:
        global_factor = Fraction(rng.choice(factor_choices))
    return build_tree_topology(n_bins, links, routers, factors, global_factor)


def random_routed_topology(rng: random.Random, n_bins: int, extra_links: int = 2, router_prob: float = 0.3,
                           max_k: int = 3, factor_choices=("1", "2", "1/2", "3/2"),
                           global_factor=None) -> tuple[Topology, TableOracle]:
    """Connected non-tree topology with a random multipath route table (k <= max_k)."""
    pairs = {(rng.randrange(i), i) for i in range(1, n_bins)}
    all_pairs = [(a, b) for a in range(n_bins) for b in range(a + 1, n_bins)]
    spare = [p for p in all_pairs if p not in pairs]
    rng.shuffle(spare)
    pairs.update(spare[:extra_links])
    links = sorted(pairs)
    routers = {b for b in range(n_bins) if rng.random() < router_prob}
    if len(routers) == n_bins:
        routers.discard(rng.randrange(n_bins))
    factors = [_random_factor(rng, factor_choices) for _ in links]
    if global_factor is None:
        global_factor = Fraction(rng.choice(factor_choices))
    top = build_routed_topology(n_bins, links, routers, factors, global_factor)

    g = nx.Graph()
    g.add_nodes_from(range(n_bins))
    g.add_edges_from(links)
    routes = {}
    for a, b in all_pairs:
        node_paths = sorted(nx.all_simple_paths(g, a, b))
        k = rng.randint(1, min(max_k, len(node_paths)))
        chosen = rng.sample(node_paths, k)
        routes[(a, b)] = [[top.link_between(x, y) for x, y in zip(p, p[1:])] for p in chosen]
    return top, TableOracle(top, routes)


def random_instance(rng: random.Random, max_vertices: int = 30, max_bins: int = 8, routed: bool | None = None,
                    weighted: bool | None = None, max_compute: int | None = None):
    """Random (graph, topology, oracle) triple for property tests."""
    n_bins = rng.randint(1, max_bins)
    if routed is None:
        routed = rng.random() < 0.5
    if weighted is None:
        weighted = rng.random() < 0.5
    if routed and n_bins > 1:
        top, oracle = random_routed_topology(rng, n_bins, extra_links=rng.randint(0, 3))
    else:
        top = random_tree_topology(rng, n_bins)
        oracle = make_oracle(top)
    if max_compute is not None and len(top.compute_bins) > max_compute:
        extra = list(top.compute_bins)[max_compute:]
        top = Topology(top.n_bins, top.links, top.routers | set(extra), top.factors, top.global_factor, top.kind)
        oracle = TableOracle(top, oracle.table) if isinstance(oracle, TableOracle) else make_oracle(top)
    n = rng.randint(0, max_vertices)
    graph = random_graph(rng, n, rng.choice([0.1, 0.3, 0.6]), 5 if weighted else 1)
    return graph, top, oracle
