"""Solvers for the makespan mapping problem.

``exact_solve`` is a branch-and-bound over vertex-to-bin assignments and is
only meant for small instances. ``greedy_construct`` followed by
``local_search`` is the heuristic pipeline; ``solve`` picks between them and
runs multiple restarts.
"""

from __future__ import annotations

import logging
import random
import sys
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx
import numpy as np

from .errors import Infeasible, TooLarge
from .objective import LoadState, MakespanReport, _Units, evaluate, lower_bound
from .topology import RoutingOracle, TableOracle, Topology, make_oracle
from .workload import WorkloadGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveConfig:
    seed: int = 0
    restarts: int = 2
    max_passes: int = 30
    # budget on |compute bins| ** |V|, the size of the exhaustive search space
    exact_limit: int = 2 ** 24
    time_budget: float | None = None
    workers: int = 1
    # also run local search from a contiguous BFS-block start
    block_start: bool = True

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class SolveResult:
    mapping: tuple[int, ...]
    report: MakespanReport
    proven_optimal: bool
    iterations: dict = field(default_factory=dict)
    trace: tuple[Fraction, ...] = ()

    @property
    def makespan(self) -> Fraction:
        return self.report.makespan


def _prepare(graph, topology, oracle):
    oracle = oracle if oracle is not None else make_oracle(topology)
    cbins = topology.compute_bins
    if graph.n and not cbins:
        raise Infeasible("graph is nonempty but the topology has no compute bins")
    return oracle, cbins


def _bfs_order(graph: WorkloadGraph, start: int) -> list[int]:
    """Breadth-first from ``start``; further components start at their lowest vertex."""
    seen = [False] * graph.n
    order = []
    for s in [start, *range(graph.n)]:
        if seen[s]:
            continue
        seen[s] = True
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for u in graph.adjacency[v]:
                if not seen[u]:
                    seen[u] = True
                    queue.append(u)
    return order


def _time_up(deadline):
    return deadline is not None and time.monotonic() >= deadline


# ------------------------------------------------------------------ heuristics

def greedy_construct(graph: WorkloadGraph, topology: Topology, oracle: RoutingOracle | None = None,
                     config: SolveConfig | None = None, _units=None) -> tuple[int, ...]:
    """Assign vertices in BFS order, each to the bin giving the lowest partial makespan.

    Ties go to the bin with the lowest current compute load, then the lowest id.
    """
    config = config or SolveConfig()
    oracle, cbins = _prepare(graph, topology, oracle)
    if graph.n == 0:
        return ()
    rng = random.Random(config.seed)
    state = LoadState(graph, topology, oracle, None, _units)
    loads = state.loads
    for v in _bfs_order(graph, rng.randrange(graph.n)):
        best = min(cbins, key=lambda b: (state.delta_key(v, b)[0], loads[b], b))
        state._apply(v, best)
    return tuple(state.assignment)


def local_search(graph: WorkloadGraph, topology: Topology, oracle: RoutingOracle | None,
                 start, config: SolveConfig | None = None, _units=None, _deadline=None) -> SolveResult:
    """Best-improvement single-vertex moves, pass after pass.

    A move is accepted when it strictly lowers the key (makespan, sum of
    squared scaled link loads, sum of squared bin loads); the makespan
    therefore never increases. Stops after a pass without accepted moves or
    after ``max_passes``.
    """
    config = config or SolveConfig()
    oracle, cbins = _prepare(graph, topology, oracle)
    if _deadline is None and config.time_budget is not None:
        _deadline = time.monotonic() + config.time_budget
    state = LoadState(graph, topology, oracle, start, _units)
    rng = random.Random(config.seed)
    order = list(range(graph.n))
    trace = [state.makespan]
    moves = passes = 0
    while passes < config.max_passes and len(cbins) > 1:
        rng.shuffle(order)
        accepted = 0
        for v in order:
            cur = state.key
            best_key, best_bin = state.best_move(v, cbins)
            if best_bin is not None:
                state._apply(v, best_bin)
                accepted += 1
                if best_key[0] < cur[0]:
                    trace.append(state.makespan)
        passes += 1
        moves += accepted
        log.debug("local search pass %d: %d moves, makespan %s", passes, accepted, state.makespan)
        if not accepted or _time_up(_deadline):
            break
    mapping = tuple(state.assignment)
    return SolveResult(mapping, state.report(), False,
                       {"passes": passes, "moves": moves}, tuple(trace))


def block_construct(graph: WorkloadGraph, topology: Topology, oracle: RoutingOracle | None = None,
                    config: SolveConfig | None = None) -> tuple[int, ...]:
    """Cut a BFS order into consecutive blocks of about equal weight.

    The BFS starts from a pseudo-peripheral vertex, and blocks go to the
    compute bins in depth-first topology order, so neighboring blocks tend to
    land on nearby bins. Communication is ignored.
    """
    config = config or SolveConfig()
    oracle, cbins = _prepare(graph, topology, oracle)
    if graph.n == 0:
        return ()
    rng = random.Random(config.seed)
    far = _bfs_order(graph, rng.randrange(graph.n))
    order = _bfs_order(graph, far[-1] if graph.adjacency[far[-1]] else far[0])
    bins = [b for b in _topology_dfs(topology) if b not in topology.routers]
    target = sum(graph.weights) / len(bins)
    mapping = [0] * graph.n
    acc, i = 0, 0
    for v in order:
        while i < len(bins) - 1 and acc >= target * (i + 1):
            i += 1
        mapping[v] = bins[i]
        acc += graph.weights[v]
    return tuple(mapping)


def _topology_dfs(topology: Topology) -> list[int]:
    seen = [False] * topology.n_bins
    out = []
    for root in range(topology.n_bins):
        if seen[root]:
            continue
        stack = [root]
        seen[root] = True
        while stack:
            b = stack.pop()
            out.append(b)
            for nb, _ in reversed(topology.neighbors(b)):
                if not seen[nb]:
                    seen[nb] = True
                    stack.append(nb)
    return out


def _pipeline(graph, topology, oracle, config, seed, deadline=None, block=False):
    units = _Units(topology, oracle)
    cfg = SolveConfig(seed=seed, restarts=1, max_passes=config.max_passes,
                      exact_limit=config.exact_limit, time_budget=None)
    if block:
        start = block_construct(graph, topology, oracle, cfg)
    else:
        start = greedy_construct(graph, topology, oracle, cfg, units)
    return local_search(graph, topology, oracle, start, cfg, units, deadline)


def _pipeline_job(args):
    return _pipeline(*args)


def derive_seeds(seed: int, count: int) -> list[int]:
    """Independent per-restart seeds; restart i always gets the same seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


# ------------------------------------------------------------------ exact

class _BinSymmetry:
    """Decides which empty bins are interchangeable given the set of used bins.

    Two empty bins are interchangeable when some topology automorphism fixes
    every used bin, maps one onto the other, and preserves router flags, link
    factors and (for route tables) the routes themselves.
    """

    def __init__(self, topology: Topology, oracle: RoutingOracle):
        self.topology = topology
        self.oracle = oracle
        g = nx.Graph()
        for b in range(topology.n_bins):
            g.add_node(b)
        for lid, (a, b) in enumerate(topology.links):
            g.add_edge(a, b, factor=topology.link_factor(lid))
        self.graph = g
        self._cache: dict = {}
        self._reps: dict = {}

    def _label(self, used, marked):
        labels = {}
        for b in range(self.topology.n_bins):
            if b == marked:
                labels[b] = ("target",)
            elif b in used:
                labels[b] = ("used", b)
            else:
                labels[b] = ("free", b in self.topology.routers)
        return labels

    def _routes_preserved(self, sigma) -> bool:
        if not isinstance(self.oracle, TableOracle):
            return True
        top = self.topology
        link_map = [top.link_between(sigma[a], sigma[b]) for a, b in top.links]
        for (a, b), rs in self.oracle._table.items():
            image = self.oracle.route(sigma[a], sigma[b])
            mapped = sorted(tuple(link_map[l] for l in p) for p in rs.paths)
            if mapped != sorted(image.paths):
                return False
        return True

    def equivalent(self, used: frozenset, a: int, b: int) -> bool:
        key = (used, a, b)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        g1 = self.graph.copy()
        g2 = self.graph.copy()
        nx.set_node_attributes(g1, self._label(used, b), "lab")
        nx.set_node_attributes(g2, self._label(used, a), "lab")
        gm = nx.algorithms.isomorphism.GraphMatcher(
            g1, g2,
            node_match=lambda x, y: x["lab"] == y["lab"],
            edge_match=lambda x, y: x["factor"] == y["factor"],
        )
        found = any(self._routes_preserved(s) for s in gm.isomorphisms_iter())
        self._cache[key] = found
        return found

    def representatives(self, used: frozenset, empty: list[int]) -> list[int]:
        reps = self._reps.get(used)
        if reps is None:
            reps = []
            for b in empty:
                if not any(self.equivalent(used, r, b) for r in reps):
                    reps.append(b)
            self._reps[used] = reps
        return reps


def search_space(graph: WorkloadGraph, topology: Topology) -> int:
    return len(topology.compute_bins) ** graph.n


def exact_solve(graph: WorkloadGraph, topology: Topology, oracle: RoutingOracle | None = None,
                config: SolveConfig | None = None) -> SolveResult:
    """Provably optimal mapping by branch-and-bound.

    Raises TooLarge when |compute bins| ** |V| exceeds ``config.exact_limit``.
    """
    config = config or SolveConfig()
    oracle, cbins = _prepare(graph, topology, oracle)
    n = graph.n
    if n == 0:
        return SolveResult((), evaluate(graph, (), topology, oracle), True, {"nodes": 0})
    if search_space(graph, topology) > config.exact_limit:
        raise TooLarge(f"{len(cbins)}^{n} mappings exceed exact_limit={config.exact_limit}")
    if len(cbins) == 1:
        mapping = (cbins[0],) * n
        return SolveResult(mapping, evaluate(graph, mapping, topology, oracle), True, {"nodes": 1})

    units = _Units(topology, oracle)
    incumbent = _pipeline(graph, topology, oracle, config, config.seed)
    best_map = list(incumbent.mapping)
    best = int(incumbent.report.makespan * units.comp_scale)
    floor = lower_bound(graph, topology) * units.comp_scale

    heaviest = max(range(n), key=lambda v: (graph.weights[v], len(graph.adjacency[v]), -v))
    order = _bfs_order(graph, heaviest)
    symmetry = _BinSymmetry(topology, oracle)
    state = LoadState(graph, topology, oracle, None, units)
    used_count = {b: 0 for b in cbins}
    nodes = 0

    def dfs(i):
        nonlocal best, best_map, nodes
        nodes += 1
        if i == n:
            cur = state.makespan_units
            if cur < best:
                best = cur
                best_map = list(state.assignment)
            return
        v = order[i]
        used = frozenset(b for b in cbins if used_count[b])
        empty = [b for b in cbins if not used_count[b]]
        cands = [b for b in cbins if used_count[b]] + symmetry.representatives(used, empty)
        scored = sorted((state.delta_key(v, b)[0], b) for b in cands)
        for bound, b in scored:
            if max(bound, floor) >= best:
                break
            state._apply(v, b)
            used_count[b] += 1
            dfs(i + 1)
            used_count[b] -= 1
            state._apply(v, None)
            if best <= floor:
                return

    if best > floor:
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, n + 100))
        try:
            dfs(0)
        finally:
            sys.setrecursionlimit(limit)
    mapping = tuple(best_map)
    return SolveResult(mapping, evaluate(graph, mapping, topology, oracle), True, {"nodes": nodes})


# ------------------------------------------------------------------ driver

def solve(graph: WorkloadGraph, topology: Topology, oracle: RoutingOracle | None = None,
          config: SolveConfig | None = None) -> SolveResult:
    """Exact solve when the instance fits ``exact_limit``, otherwise multistart heuristics.

    Restart ``i`` uses the i-th derived seed; with ``block_start`` one more
    run starts from :func:`block_construct`. The best result wins, ties going
    to the earliest run, so the answer does not depend on ``workers``.
    """
    config = config or SolveConfig()
    oracle, cbins = _prepare(graph, topology, oracle)
    if graph.n == 0 or search_space(graph, topology) <= config.exact_limit:
        return exact_solve(graph, topology, oracle, config)
    seeds = derive_seeds(config.seed, config.restarts)
    jobs = [(graph, topology, oracle, config, s, None, False) for s in seeds]
    if config.block_start:
        block_seed = int(np.random.SeedSequence([config.seed, 0xB10C]).generate_state(1, np.uint64)[0])
        jobs.append((graph, topology, oracle, config, block_seed, None, True))
    deadline = None if config.time_budget is None else time.monotonic() + config.time_budget
    if config.workers > 1 and deadline is None:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_pipeline_job, jobs))
    else:
        # with a time budget the block pipeline goes first; it is usually the better start
        if deadline is not None and config.block_start:
            jobs.insert(0, jobs.pop())
        results = []
        for job in jobs:
            results.append(_pipeline(*job[:5], deadline, job[6]))
            if _time_up(deadline):
                break
    best_i = min(range(len(results)), key=lambda i: (results[i].report.makespan, i))
    best = results[best_i]
    iterations = {
        "restarts": len(results),
        "best_restart": best_i,
        "passes": sum(r.iterations["passes"] for r in results),
        "moves": sum(r.iterations["moves"] for r in results),
    }
    return SolveResult(best.mapping, best.report, False, iterations, best.trace)
