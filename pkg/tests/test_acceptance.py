"""Exit criteria. Each test is one criterion; a pass/fail summary is printed at the end of the run."""

import random
import subprocess
import sys
import time
from fractions import Fraction

import pytest

from procmap import (
    LoadState,
    SolveConfig,
    WorkloadGraph,
    build_routed_topology,
    build_tree_topology,
    cut_edges,
    evaluate,
    exact_solve,
    local_search,
    make_oracle,
    solve,
    table_oracle,
    total_weight,
)
from procmap.generators import grid_graph, hierarchical_topology, random_instance, star_topology
from procmap.topology import Topology, format_topology
from procmap.workload import format_graph

from naive import enumerate_optimum, naive_evaluate, routes_between

pytestmark = pytest.mark.acceptance


def small_instances(count, seed):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        g, top, oracle = random_instance(rng, max_vertices=8, max_bins=5, max_compute=3)
        out.append((g, top, oracle))
    return out


def test_objective_definition_oracle():
    """evaluate agrees bit-exactly with the naive evaluator on >= 1000 random instances in < 10 s."""
    rng = random.Random(2024)
    seen = {"tree": 0, "routed": 0, "routers": 0, "weighted": 0, "multipath": 0}
    start = time.perf_counter()
    for i in range(1000):
        g, top, oracle = random_instance(rng, max_vertices=30, max_bins=8,
                                         routed=(i % 2 == 1), weighted=(i % 4 >= 2))
        m = tuple(rng.choice(top.compute_bins) for _ in range(g.n))
        assert evaluate(g, m, top, oracle) == naive_evaluate(g, m, top, oracle), f"instance {i}"
        seen[top.kind] += 1
        seen["routers"] += bool(top.routers)
        seen["weighted"] += g.is_weighted
        seen["multipath"] += oracle.denominator > 1
    elapsed = time.perf_counter() - start
    assert all(v > 50 for v in seen.values()), seen
    assert elapsed < 10, f"{elapsed:.1f}s"


def test_exact_solver_oracle():
    """Exhaustive minimum equals exact_solve on >= 200 instances (|V| <= 8, <= 3 compute bins) in < 30 s."""
    start = time.perf_counter()
    for i, (g, top, oracle) in enumerate(small_instances(200, 77)):
        assert g.n <= 8 and len(top.compute_bins) <= 3
        best, maps = enumerate_optimum(g, top, oracle)
        res = exact_solve(g, top, oracle)
        assert res.report.makespan == best, f"instance {i}"
        assert naive_evaluate(g, res.mapping, top, oracle).makespan == best
        assert res.mapping in maps
    elapsed = time.perf_counter() - start
    assert elapsed < 30, f"{elapsed:.1f}s"


def test_heuristic_sandwich():
    """exact <= heuristic solve <= total weight; local search never worsens its start."""
    rng = random.Random(5)
    forced = SolveConfig(seed=11, restarts=2, exact_limit=0)
    for i, (g, top, oracle) in enumerate(small_instances(200, 77)):
        exact = exact_solve(g, top, oracle).report.makespan
        heur = solve(g, top, oracle, forced)
        assert exact <= heur.report.makespan <= total_weight(g), f"instance {i}"
        start = tuple(rng.choice(top.compute_bins) for _ in range(g.n))
        ls = local_search(g, top, oracle, start, SolveConfig(seed=i))
        assert ls.report.makespan <= evaluate(g, start, top, oracle).makespan


def test_invariant_suite():
    """Zero violations across 10 000 randomized trials of the objective invariants."""
    rng = random.Random(99)
    trials = 0
    violations = []

    def random_mapping(g, top):
        return tuple(rng.choice(top.compute_bins) for _ in range(g.n))

    # comm conservation
    for _ in range(2500):
        g, top, oracle = random_instance(rng, max_vertices=20)
        m = random_mapping(g, top)
        rep = evaluate(g, m, top, oracle)
        expected = Fraction(0)
        for u, v in cut_edges(g, m):
            paths = routes_between(top, oracle, m[u], m[v])
            expected += sum(Fraction(len(p), len(paths)) for p in paths)
        trials += 1
        if sum(rep.comm) != expected:
            violations.append(("conservation", g, top, m))

    # route-set weights sum to one
    for _ in range(2500):
        g, top, oracle = random_instance(rng, max_vertices=0)
        a, b = rng.randrange(top.n_bins), rng.randrange(top.n_bins)
        rs = oracle.route(a, b)
        trials += 1
        if sum(rs.weight for _ in rs.paths) != 1:
            violations.append(("routeset", top, a, b))

    # monotonicity in a uniform F
    for _ in range(2000):
        g, top, oracle = random_instance(rng, max_vertices=20)
        top = Topology(top.n_bins, top.links, top.routers, None, 1, top.kind)
        if top.kind == "tree":
            oracle = make_oracle(top)
        m = random_mapping(g, top)
        f1 = Fraction(rng.randint(1, 8), rng.randint(1, 4))
        f2 = f1 + Fraction(rng.randint(0, 8), rng.randint(1, 4))
        trials += 1
        if evaluate(g, m, top.with_global_factor(f2), oracle).makespan < \
                evaluate(g, m, top.with_global_factor(f1), oracle).makespan:
            violations.append(("monotone", g, top, m, f1, f2))

    # automorphism invariance on a star with three identical leaves
    star = star_topology(3, router_center=True, global_factor=Fraction(3, 2))
    perms = [(0, 1, 2, 3), (0, 2, 3, 1), (0, 3, 1, 2), (0, 2, 1, 3), (0, 1, 3, 2), (0, 3, 2, 1)]
    for _ in range(2500):
        n = rng.randint(0, 12)
        g = WorkloadGraph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.3],
                                     [rng.randint(1, 3) for _ in range(n)])
        m = random_mapping(g, star)
        p = rng.choice(perms)
        trials += 1
        if evaluate(g, m, star).makespan != evaluate(g, tuple(p[b] for b in m), star).makespan:
            violations.append(("automorphism", g, m, p))

    # incremental vs full evaluation over 100-move random walks
    for _ in range(500):
        g, top, oracle = random_instance(rng, max_vertices=15)
        if g.n == 0:
            g = WorkloadGraph.from_edges(1, [])
        m = list(random_mapping(g, top))
        state = LoadState(g, top, oracle, m)
        ok = True
        for _ in range(100):
            v = rng.randrange(g.n)
            b = rng.choice(top.compute_bins)
            predicted = state.move_delta(v, b).makespan
            state.move(v, b)
            m[v] = b
            fresh = evaluate(g, m, top, oracle)
            if predicted != fresh.makespan or state.report() != fresh:
                ok = False
                break
        trials += 1
        if not ok:
            violations.append(("incremental", g, top, m))

    assert trials >= 10_000
    assert not violations, violations[:3]


def test_paper_pinned_values():
    """K2 crossover at F=1 vs F=3, 1/k multipath loads, zero compute on routers."""
    k2 = WorkloadGraph.from_edges(2, [(0, 1)])
    two = build_tree_topology(2, [(0, 1)])
    assert exact_solve(k2, two.with_global_factor(1)).report.makespan == 1
    assert exact_solve(k2, two.with_global_factor(3)).report.makespan == 2

    ring = build_routed_topology(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    oracle = table_oracle(ring, {(0, 2): [[0, 1], [3, 2]]})
    rep = evaluate(k2, (0, 2), ring, oracle)
    assert rep.comm == (Fraction(1, 2),) * 4

    star = star_topology(3)
    for res in (exact_solve(grid_graph(2, 3), star), solve(grid_graph(2, 3), star, None, SolveConfig(exact_limit=0))):
        assert res.report.comp[0] == 0
        assert 0 not in res.mapping


def test_cli_determinism_on_mesh(tmp_path):
    """Two CLI solves of a 10 000-vertex mesh with one seed give byte-identical files, each under 60 s."""
    graph = tmp_path / "mesh.graph"
    topo = tmp_path / "cluster.topo"
    graph.write_text(format_graph(grid_graph(100, 100)))
    topo.write_text(format_topology(hierarchical_topology((2, 4), global_factor=2)))
    outputs = []
    for run in range(2):
        out_m, out_r = tmp_path / f"map{run}", tmp_path / f"report{run}"
        start = time.perf_counter()
        proc = subprocess.run(
            [sys.executable, "-m", "procmap", "--mode", "solve", "--topology", str(topo),
             "--graph", str(graph), "--seed", "42", "--out-mapping", str(out_m), "--out-report", str(out_r)],
            capture_output=True, text=True)
        elapsed = time.perf_counter() - start
        assert proc.returncode == 0, proc.stderr
        assert elapsed < 60, f"run {run}: {elapsed:.1f}s"
        outputs.append((out_m.read_bytes(), out_r.read_bytes()))
    assert outputs[0] == outputs[1]
    assert len(outputs[0][0].splitlines()) == 10_000
